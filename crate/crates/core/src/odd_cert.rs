//! Certified upper bounds on the Rademacher injective norm of odd-order
//! i.i.d. +-1 tensors.
//!
//! For `p = 2q + 1`, Cauchy-Schwarz lifts `Y` to the order-`4q` tensor
//! `T_{abcd} = sum_e Y_{ace} Y_{bde}`; subtracting its mean leaves
//! `T~_{abcd} = T_{abcd} 1{ac != bd}` (entries of a +-1 tensor square to 1,
//! so `T = n` exactly on the diagonal). The lifted matrix over `l`-tuples
//! `S, T in [n]^l`,
//! `M_{S,T} = sum_{abcd} T~_{abcd} N_{ab,cd}^{-1} 1{S <-> T}`,
//! satisfies `n^l (x^{(x)l})^T M (x^{(x)l}) = n^{2q} <T~, x^{(x)4q}>` on the
//! scaled hypercube, which makes `||Y||_pm <= sqrt(n) + n^{l/2-q} sqrt(||M||)`
//! sound for every `Y`.
//!
//! The pair relation `S <-> T` (for a fixed tuple `abcd`) holds when `S`
//! carries the concatenation `ab` on some distinct positions, `T` carries
//! `cd` on the same positions (or vice versa), the two agree elsewhere, and
//! no value of `a, b, c, d` appears at any other position of `S` or `T`.
//! Values may repeat inside the patch itself; `N_{ab,cd}` counts the ordered
//! pairs per tuple exactly, by the same enumeration that emits them.

use crate::error::{Error, Result};
use crate::model::DenseTensor;
use crate::rng::CounterRng;
use crate::spectral::{self, EigOptions, SymOp, Want};
use crate::symdiff::PairwiseSum;
use serde::Serialize;
use std::collections::{HashMap, HashSet};

/// Cap on the lifted dimension `n^l`.
pub const LIFT_DIM_CAP: usize = 1_000_000;
/// Cap on materialized lifted entries.
pub const LIFT_ENTRY_CAP: usize = 200_000_000;

/// Dense order-`p` tensor with i.i.d. uniform +-1 entries.
pub fn rademacher_dense(n: usize, p: usize, seed: u64) -> Result<DenseTensor> {
    let len = crate::model::dense_len(n, p)?;
    let rng = CounterRng::from_parts(seed, "pm1-tensor", 0);
    DenseTensor::new(n, p, (0..len).map(|i| rng.sign_at(i as u64)).collect())
}

/// The lifted operator `M` over `[n]^l` tuples, materialized sparse.
#[derive(Debug)]
pub struct LiftedOperator {
    n: usize,
    ell: usize,
    q: usize,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

fn checked_pow(n: usize, e: usize, what: &str, cap: usize) -> Result<usize> {
    let mut v = 1usize;
    for _ in 0..e {
        v = v
            .checked_mul(n)
            .ok_or_else(|| Error::Capacity(format!("{what} overflows")))?;
        if v > cap {
            return Err(Error::Capacity(format!("{what} = {v} exceeds cap {cap}")));
        }
    }
    Ok(v)
}

/// Enumerate every ordered pair `(S, T)` related through the tuple
/// `(ab, cd)` into `pairs` (deduplicated). `sab`/`scd` are the concatenated
/// 2q-tuples; `allowed` lists the values usable at the non-patch positions
/// (everything outside the values of `a, b, c, d`).
fn enumerate_pairs(
    n: usize,
    ell: usize,
    sab: &[usize],
    scd: &[usize],
    allowed: &[usize],
    pairs: &mut HashSet<(u64, u64)>,
) {
    pairs.clear();
    let patch = sab.len();
    debug_assert!(patch <= ell);
    let free = ell - patch;
    debug_assert!(free == 0 || !allowed.is_empty());
    let mut used = vec![false; ell];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        n: usize,
        ell: usize,
        depth: usize,
        patch: usize,
        free: usize,
        sab: &[usize],
        scd: &[usize],
        allowed: &[usize],
        used: &mut [bool],
        sel: &mut [usize],
        pairs: &mut HashSet<(u64, u64)>,
    ) {
        if depth == patch {
            // Fill the free positions with any values outside the banned set,
            // identical in S and T.
            let mut s_tuple = vec![usize::MAX; ell];
            let mut t_tuple = vec![usize::MAX; ell];
            for (j, &pos) in sel.iter().enumerate().take(patch) {
                s_tuple[pos] = sab[j];
                t_tuple[pos] = scd[j];
            }
            let free_slots: Vec<usize> = (0..ell).filter(|&i| !used[i]).collect();
            debug_assert_eq!(free_slots.len(), free);
            let mut fill = vec![0usize; free];
            loop {
                for (slot_i, &pos) in free_slots.iter().enumerate() {
                    let v = allowed[fill[slot_i]];
                    s_tuple[pos] = v;
                    t_tuple[pos] = v;
                }
                let mut s_code = 0u64;
                let mut t_code = 0u64;
                for i in 0..ell {
                    s_code = s_code * n as u64 + s_tuple[i] as u64;
                    t_code = t_code * n as u64 + t_tuple[i] as u64;
                }
                pairs.insert((s_code, t_code));
                pairs.insert((t_code, s_code));
                // Odometer over the allowed fill values.
                if free == 0 {
                    break;
                }
                let mut carry = 0usize;
                loop {
                    fill[carry] += 1;
                    if fill[carry] < allowed.len() {
                        break;
                    }
                    fill[carry] = 0;
                    carry += 1;
                    if carry == free {
                        return;
                    }
                }
            }
            return;
        }
        for pos in 0..ell {
            if used[pos] {
                continue;
            }
            used[pos] = true;
            sel[depth] = pos;
            rec(
                n, ell, depth + 1, patch, free, sab, scd, allowed, used, sel, pairs,
            );
            used[pos] = false;
        }
    }

    let mut sel = vec![0usize; patch];
    rec(
        n, ell, 0, patch, free, sab, scd, allowed, &mut used, &mut sel, pairs,
    );
}

impl LiftedOperator {
    /// Build the lift of an odd-order +-1 tensor at level `l >= p - 1`.
    pub fn build(y: &DenseTensor, ell: usize) -> Result<Self> {
        let n = y.n();
        let p = y.p();
        if p % 2 != 1 || p < 3 {
            return Err(Error::parameter(format!("lift requires odd p >= 3, got {p}")));
        }
        let q = p / 2;
        if ell < 2 * q {
            return Err(Error::parameter(format!(
                "lift level must satisfy l >= p - 1 = {}, got {ell}",
                2 * q
            )));
        }
        if ell > 2 * q && n <= 4 * q {
            // Free positions need at least one value outside the (up to 4q)
            // patch values, or pair counts can vanish.
            return Err(Error::parameter(format!(
                "l > p - 1 requires n > 4q = {}, got n = {n}",
                4 * q
            )));
        }
        if y.values().iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::parameter("lift requires entries in {-1, +1}"));
        }
        let dim = checked_pow(n, ell, "n^l", LIFT_DIM_CAP)?;
        let half_dim = checked_pow(n, 2 * q, "n^(2q)", LIFT_DIM_CAP)?;
        let nq = checked_pow(n, q, "n^q", LIFT_DIM_CAP)?;

        // Gram of the n^(2q) x n flattening Z[(u), e] = Y[u, e]:
        // T_{abcd} = <Z[ac], Z[bd]>.
        let mut gram = vec![0i64; half_dim * half_dim];
        for u in 0..half_dim {
            let zu = &y.values()[u * n..(u + 1) * n];
            for v in u..half_dim {
                let zv = &y.values()[v * n..(v + 1) * n];
                let dot: f64 = zu.iter().zip(zv).map(|(a, b)| a * b).sum();
                let dot = dot as i64;
                gram[u * half_dim + v] = dot;
                gram[v * half_dim + u] = dot;
            }
        }

        let _digits = vec![0usize; q];
        let decode = |mut lin: usize, digits: &mut [usize]| {
            for k in (0..q).rev() {
                digits[k] = lin % n;
                lin /= n;
            }
        };

        let mut entries: HashMap<(u32, u32), f64> = HashMap::new();
        let mut pairs: HashSet<(u64, u64)> = HashSet::new();
        let mut sab = vec![0usize; 2 * q];
        let mut scd = vec![0usize; 2 * q];
        let mut banned = vec![false; n];
        let (mut a_d, mut b_d, mut c_d, mut d_d) =
            (vec![0usize; q], vec![0usize; q], vec![0usize; q], vec![0usize; q]);

        for a in 0..nq {
            decode(a, &mut a_d);
            for b in 0..nq {
                decode(b, &mut b_d);
                for c in 0..nq {
                    decode(c, &mut c_d);
                    let ac = a * nq + c;
                    for d in 0..nq {
                        let bd = b * nq + d;
                        if ac == bd {
                            continue;
                        }
                        let t_val = gram[ac * half_dim + bd];
                        if t_val == 0 {
                            continue;
                        }
                        decode(d, &mut d_d);
                        sab[..q].copy_from_slice(&a_d);
                        sab[q..].copy_from_slice(&b_d);
                        scd[..q].copy_from_slice(&c_d);
                        scd[q..].copy_from_slice(&d_d);
                        banned.fill(false);
                        for &v in a_d.iter().chain(&b_d).chain(&c_d).chain(&d_d) {
                            banned[v] = true;
                        }
                        let allowed: Vec<usize> = (0..n).filter(|&v| !banned[v]).collect();
                        enumerate_pairs(n, ell, &sab, &scd, &allowed, &mut pairs);
                        if pairs.is_empty() {
                            // Unreachable under the validated preconditions.
                            return Err(Error::Degenerate(format!(
                                "relation count vanished for a nonzero lifted entry (n={n}, l={ell})"
                            )));
                        }
                        let weight = t_val as f64 / pairs.len() as f64;
                        for &(s_code, t_code) in pairs.iter() {
                            *entries
                                .entry((s_code as u32, t_code as u32))
                                .or_insert(0.0) += weight;
                        }
                        if entries.len() > LIFT_ENTRY_CAP {
                            return Err(Error::Capacity(format!(
                                "lifted operator exceeds {LIFT_ENTRY_CAP} entries"
                            )));
                        }
                    }
                }
            }
        }

        // Deterministic CSR assembly.
        let mut sorted: Vec<((u32, u32), f64)> = entries.into_iter().collect();
        sorted.sort_unstable_by_key(|&(k, _)| k);
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals = Vec::with_capacity(sorted.len());
        for ((r, c), v) in sorted {
            row_ptr[r as usize + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(LiftedOperator {
            n,
            ell,
            q,
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// `q = (p - 1) / 2` of the source tensor.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn entry_count(&self) -> usize {
        self.vals.len()
    }

    /// `max_S sum_T |M_{S,T}|`, the always-valid operator-norm bound.
    pub fn row_sum_norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                let mut acc = PairwiseSum::new();
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc.push(self.vals[k].abs());
                }
                acc.finish()
            })
            .fold(0.0f64, f64::max)
    }

    /// Quadratic form against the lifted sign vector `w_t = prod_j s_{t_j} /
    /// n^{l/2}`, times `n^l` (the left side of the lift identity).
    pub fn lift_quadratic_form(&self, signs: &[i8]) -> Result<f64> {
        if signs.len() != self.n {
            return Err(Error::parameter("sign vector length must equal n"));
        }
        let mut w = vec![0.0f64; self.dim];
        let scale = 1.0 / (self.n as f64).powf(self.ell as f64 / 2.0);
        for (t, slot) in w.iter_mut().enumerate() {
            let mut lin = t;
            let mut sgn = 1i8;
            for _ in 0..self.ell {
                sgn *= signs[lin % self.n];
                lin /= self.n;
            }
            *slot = sgn as f64 * scale;
        }
        let mut mw = vec![0.0; self.dim];
        self.apply(&w, &mut mw);
        let quad: f64 = w.iter().zip(&mw).map(|(a, b)| a * b).sum();
        Ok(quad * self.dim as f64)
    }
}

impl SymOp for LiftedOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim, "matvec dimension mismatch");
        for (r, slot) in out.iter_mut().enumerate() {
            let mut acc = PairwiseSum::new();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc.push(self.vals[k] * v[self.cols[k] as usize]);
            }
            *slot = acc.finish();
        }
    }
}

/// A certified bound on the Rademacher injective norm.
#[derive(Debug, Clone, Serialize)]
pub struct OddCertificate {
    pub n: usize,
    pub p: usize,
    pub ell: usize,
    pub norm_estimate: f64,
    pub residual: f64,
    pub norm_upper: f64,
    /// `sqrt(n) + n^{l/2 - q} sqrt(norm_upper)`.
    pub bound: f64,
    pub converged: bool,
    pub lifted_dim: usize,
}

/// Certify `||Y||_pm <= sqrt(n) + n^{l/2-q} sqrt(||M||)`; sound for every
/// +-1 tensor by the Cauchy-Schwarz construction.
pub fn certify_rademacher_norm(
    y: &DenseTensor,
    ell: usize,
    opts: &EigOptions,
) -> Result<OddCertificate> {
    let m = LiftedOperator::build(y, ell)?;
    let inner = EigOptions {
        want: Want::LeadingByMagnitude,
        ..opts.clone()
    };
    let pair = spectral::leading_eig(&m, &inner)?;
    let norm_upper = if pair.converged {
        pair.value.abs() + pair.residual
    } else {
        m.row_sum_norm_bound()
    };
    let n = y.n() as f64;
    let q = y.p() / 2;
    let exponent = ell as f64 / 2.0 - q as f64;
    let bound = n.sqrt() + n.powf(exponent) * norm_upper.sqrt();
    Ok(OddCertificate {
        n: y.n(),
        p: y.p(),
        ell,
        norm_estimate: pair.value,
        residual: pair.residual,
        norm_upper,
        bound,
        converged: pair.converged,
        lifted_dim: m.dim,
    })
}

/// Exhaustive `max_{x in {-1,+1}^n / sqrt(n)} |<Y, x^{(x)p}>|` (test oracle).
pub fn brute_force_rademacher_norm(y: &DenseTensor) -> Result<f64> {
    let n = y.n();
    if n > 24 {
        return Err(Error::Capacity(format!(
            "exhaustive maximization over 2^{n} sign vectors refused"
        )));
    }
    let p = y.p();
    let mut idx = vec![0usize; p];
    let mut best = 0.0f64;
    let mut signs = vec![1.0f64; n];
    for mask in 0u64..(1u64 << n) {
        for (i, s) in signs.iter_mut().enumerate() {
            *s = if mask >> i & 1 == 0 { 1.0 } else { -1.0 };
        }
        let mut acc = PairwiseSum::new();
        for (lin, &v) in y.values().iter().enumerate() {
            let mut rem = lin;
            for k in (0..p).rev() {
                idx[k] = rem % n;
                rem /= n;
            }
            let mut term = v;
            for &i in &idx {
                term *= signs[i];
            }
            acc.push(term);
        }
        best = best.max(acc.finish().abs());
    }
    Ok(best / (n as f64).powf(p as f64 / 2.0))
}

/// `N-bar = C(l, 2q) (n - 4q)^{l - 2q}`, the generic lower bound on the
/// per-tuple pair counts (ordered position choices collapse by at most the
/// patch automorphisms, so the unordered count is the floor).
pub fn n_bar(n: usize, ell: usize, q: usize) -> u64 {
    let c = crate::combinat::binomial(ell, 2 * q).unwrap_or(0);
    let base = n.saturating_sub(4 * q) as u64;
    c * base.pow((ell - 2 * q) as u32)
}
