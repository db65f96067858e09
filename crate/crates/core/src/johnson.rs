//! Exact spectral theory of the signal matrix `X` on `l`-subsets: Eberlein
//! eigenvalues in integer arithmetic, eigenspace dimensions, eigenvector
//! families `u^phi`, dense-diagonalization projections, and slice-Fourier
//! influence/variance.
//!
//! `X` is the adjacency matrix of the graph on `l`-subsets of `[n]` joining
//! `S, T` when `|S Δ T| = p` (even `p`). Its `l + 1` eigenspaces are shared
//! by the whole Bose-Mesner algebra of the Johnson scheme, which is what
//! makes the exact formulas below possible.

use crate::combinat::{SubsetIndexer};
use crate::error::{Error, Result};

/// `C(n, k)` in checked 128-bit arithmetic (supports `n` beyond the 64-bit
/// subset-indexing triangle; used for exact spectral identities).
pub fn binomial_i128(n: u64, k: u64) -> Result<i128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut r: i128 = 1;
    for i in 1..=k {
        r = r
            .checked_mul((n - k + i) as i128)
            .ok_or_else(|| Error::Capacity(format!("C({n}, {k}) overflows 128 bits")))?;
        r /= i as i128; // exact at each step
    }
    Ok(r)
}

fn validate_params(n: usize, ell: usize, p: usize) -> Result<()> {
    if !p.is_multiple_of(2) || p == 0 {
        return Err(Error::parameter(format!("p must be even and positive, got {p}")));
    }
    let half = p / 2;
    if ell < half || ell + half > n {
        return Err(Error::parameter(format!(
            "l must lie in [p/2, n - p/2]; got (n, l, p) = ({n}, {ell}, {p})"
        )));
    }
    Ok(())
}

/// Largest eigenspace index: the scheme on `l`-subsets has
/// `min(l, n - l) + 1` classes (complementation identifies `l` with `n - l`).
pub fn max_eigenspace_index(n: usize, ell: usize) -> usize {
    ell.min(n - ell)
}

/// Eigenvalue `mu_m` of `X` (an Eberlein polynomial value), exact:
/// `mu_m = sum_{s=0}^{min(m, p/2)} (-1)^s C(m,s) C(l-m, p/2-s) C(n-l-m, p/2-s)`.
pub fn eberlein(n: usize, ell: usize, p: usize, m: usize) -> Result<i128> {
    validate_params(n, ell, p)?;
    if m > max_eigenspace_index(n, ell) {
        return Err(Error::parameter(format!(
            "m = {m} exceeds min(l, n - l) = {}",
            max_eigenspace_index(n, ell)
        )));
    }
    let half = (p / 2) as u64;
    let (n, ell, m) = (n as u64, ell as u64, m as u64);
    let mut total: i128 = 0;
    for s in 0..=m.min(half) {
        let term = binomial_i128(m, s)?
            .checked_mul(binomial_i128(ell - m, half - s)?)
            .and_then(|t| t.checked_mul(binomial_i128(n - ell - m, half - s).ok()?))
            .ok_or_else(|| Error::Capacity("Eberlein term overflows 128 bits".into()))?;
        total = if s % 2 == 0 {
            total.checked_add(term)
        } else {
            total.checked_sub(term)
        }
        .ok_or_else(|| Error::Capacity("Eberlein sum overflows 128 bits".into()))?;
    }
    Ok(total)
}

/// Dimension of the `m`-th eigenspace: `C(n, m) - C(n, m-1)`.
pub fn eigenspace_dim(n: usize, m: usize) -> Result<i128> {
    let a = binomial_i128(n as u64, m as u64)?;
    let b = if m == 0 {
        0
    } else {
        binomial_i128(n as u64, (m - 1) as u64)?
    };
    Ok(a - b)
}

/// The exact spectrum of `X`: eigenvalues `mu_m` with multiplicities, for
/// `m = 0..=min(l, n - l)`. `mu_0` is always the largest; the full
/// descending ordering is checked empirically by tests and not assumed by
/// any operation.
#[derive(Debug, Clone)]
pub struct JohnsonSpectrum {
    pub n: usize,
    pub ell: usize,
    pub p: usize,
    /// `mu_m` for `m = 0..=min(l, n - l)`.
    pub eigenvalues: Vec<i128>,
    /// `dim Y_m` for the same range of `m`.
    pub dims: Vec<i128>,
}

pub fn johnson_spectrum(n: usize, ell: usize, p: usize) -> Result<JohnsonSpectrum> {
    validate_params(n, ell, p)?;
    let top = max_eigenspace_index(n, ell);
    let eigenvalues = (0..=top).map(|m| eberlein(n, ell, p, m)).collect::<Result<_>>()?;
    let dims = (0..=top).map(|m| eigenspace_dim(n, m)).collect::<Result<_>>()?;
    Ok(JohnsonSpectrum {
        n,
        ell,
        p,
        eigenvalues,
        dims,
    })
}

impl JohnsonSpectrum {
    /// `sum_m mu_m dim(Y_m)`, which must vanish (zero diagonal).
    pub fn trace(&self) -> Result<i128> {
        let mut t: i128 = 0;
        for (mu, d) in self.eigenvalues.iter().zip(&self.dims) {
            t = mu
                .checked_mul(*d)
                .and_then(|x| t.checked_add(x))
                .ok_or_else(|| Error::Capacity("trace overflows 128 bits".into()))?;
        }
        Ok(t)
    }
}

/// A sequence `(a_1, b_1, ..., a_m, b_m)` of `2m` distinct indices defining
/// the eigenvector `u^phi` with `u^phi_S = prod_i (1_{a_i in S} - 1_{b_i in S})`.
#[derive(Debug, Clone)]
pub struct PhiSequence {
    pairs: Vec<(usize, usize)>,
}

impl PhiSequence {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &pairs {
            if !seen.insert(a) || !seen.insert(b) {
                return Err(Error::parameter(format!(
                    "phi indices must be distinct, got {pairs:?}"
                )));
            }
        }
        Ok(PhiSequence { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `m`, half the sequence length.
    pub fn order(&self) -> usize {
        self.pairs.len()
    }
}

/// The vector `u^phi` over `l`-subsets; `phi = ∅` gives the all-ones vector.
pub fn phi_vector(indexer: &SubsetIndexer, phi: &PhiSequence) -> Result<Vec<f64>> {
    if phi.order() > indexer.ell() {
        return Err(Error::parameter(format!(
            "|phi|/2 = {} exceeds l = {}",
            phi.order(),
            indexer.ell()
        )));
    }
    for &(a, b) in phi.pairs() {
        if a >= indexer.n() || b >= indexer.n() {
            return Err(Error::parameter("phi index out of range"));
        }
    }
    let mut out = vec![0.0; indexer.count() as usize];
    indexer.for_each_subset(|r, elems| {
        let mut val = 1.0;
        for &(a, b) in phi.pairs() {
            let ind = |x: usize| elems.binary_search(&x).is_ok() as i32;
            val *= (ind(a) - ind(b)) as f64;
            if val == 0.0 {
                break;
            }
        }
        out[r as usize] = val;
    });
    Ok(out)
}

/// Cap on the dimension of dense diagonalization oracles.
pub const DENSE_DIM_CAP: usize = 5000;

/// Dense adjacency matrix of the graph on `l`-subsets with `|S Δ T| = p`
/// (test-oracle scale).
pub fn build_adjacency(n: usize, ell: usize, p: usize) -> Result<Vec<f64>> {
    validate_params(n, ell, p)?;
    let indexer = SubsetIndexer::new(n, ell)?;
    let dim = indexer.count() as usize;
    if dim > DENSE_DIM_CAP {
        return Err(Error::Capacity(format!(
            "dense adjacency dimension {dim} exceeds cap {DENSE_DIM_CAP}"
        )));
    }
    let mut x = vec![0.0f64; dim * dim];
    let half = p / 2;
    indexer.for_each_subset(|r, elems| {
        indexer.for_each_exchange(elems, half, half, |t, _| {
            let tr = indexer.rank_slice(t).expect("valid neighbor");
            x[r as usize * dim + tr as usize] = 1.0;
        });
    });
    Ok(x)
}

/// Eigendecomposition of a dense symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and eigenvectors as rows of the
/// second vector (`vectors[k * dim ..][..dim]` pairs with `values[k]`).
pub fn jacobi_eigen(matrix: &[f64], dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if matrix.len() != dim * dim {
        return Err(Error::parameter("matrix size mismatch"));
    }
    if dim > DENSE_DIM_CAP {
        return Err(Error::Capacity(format!(
            "dimension {dim} exceeds dense cap {DENSE_DIM_CAP}"
        )));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0f64; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off += 2.0 * a[p * dim + q] * a[p * dim + q];
            }
        }
        if off.sqrt() <= 1e-13 * frob {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                for k in 0..dim {
                    let vpk = v[p * dim + k];
                    let vqk = v[q * dim + k];
                    v[p * dim + k] = c * vpk - s * vqk;
                    v[q * dim + k] = s * vpk + c * vqk;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a[i * dim + i].partial_cmp(&a[j * dim + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i * dim + i]).collect();
    let mut vectors = vec![0.0f64; dim * dim];
    for (k, &i) in order.iter().enumerate() {
        vectors[k * dim..(k + 1) * dim].copy_from_slice(&v[i * dim..(i + 1) * dim]);
    }
    Ok((values, vectors))
}

/// Orthogonal split `v = v_low + v_perp` with `v_low` in the span of the
/// eigenspaces `Y_0, ..., Y_m` of `X`, computed from a dense
/// eigendecomposition (test-oracle scale).
pub fn project_onto_low_eigenspaces(
    n: usize,
    ell: usize,
    p: usize,
    v: &[f64],
    m: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let spectrum = johnson_spectrum(n, ell, p)?;
    let top = max_eigenspace_index(n, ell);
    if m > top {
        return Err(Error::parameter(format!(
            "m = {m} exceeds min(l, n - l) = {top}"
        )));
    }
    let indexer = SubsetIndexer::new(n, ell)?;
    let dim = indexer.count() as usize;
    if v.len() != dim {
        return Err(Error::parameter(format!(
            "vector length {} does not match C(n, l) = {dim}",
            v.len()
        )));
    }
    // The split by eigenvalue is only well-defined when no mu value is shared
    // across the m-boundary.
    for lo in 0..=m {
        for hi in (m + 1)..=top {
            if spectrum.eigenvalues[lo] == spectrum.eigenvalues[hi] {
                return Err(Error::Degenerate(format!(
                    "mu_{lo} = mu_{hi}; eigenvalue classification is ambiguous"
                )));
            }
        }
    }
    let x = build_adjacency(n, ell, p)?;
    let (values, vectors) = jacobi_eigen(&x, dim)?;
    let low_set: Vec<f64> = spectrum.eigenvalues[0..=m].iter().map(|&mu| mu as f64).collect();
    let all_set: Vec<f64> = spectrum.eigenvalues.iter().map(|&mu| mu as f64).collect();
    let mut v_low = vec![0.0f64; dim];
    for (k, &lam) in values.iter().enumerate() {
        // Every numerical eigenvalue must sit near an exact mu.
        let nearest = all_set
            .iter()
            .cloned()
            .min_by(|a, b| ((a - lam).abs()).partial_cmp(&(b - lam).abs()).unwrap())
            .unwrap();
        if (lam - nearest).abs() > 1e-6 * nearest.abs().max(1.0) {
            return Err(Error::Degenerate(format!(
                "numerical eigenvalue {lam} matches no exact eigenvalue"
            )));
        }
        if low_set.contains(&nearest) {
            let q = &vectors[k * dim..(k + 1) * dim];
            let coef: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
            for (out, qi) in v_low.iter_mut().zip(q) {
                *out += coef * qi;
            }
        }
    }
    let v_perp: Vec<f64> = v.iter().zip(&v_low).map(|(a, b)| a - b).collect();
    Ok((v_low, v_perp))
}

/// Total influence `(1/n) sum_{i<j} (1/2) E_S[(v^{(ij)}_S - v_S)^2]`, where
/// `v^{(ij)}` exchanges the roles of `i` and `j` whenever exactly one of them
/// is present.
pub fn influence(indexer: &SubsetIndexer, v: &[f64]) -> Result<f64> {
    let dim = indexer.count() as usize;
    if v.len() != dim {
        return Err(Error::parameter(format!(
            "vector length {} does not match C(n, l) = {dim}",
            v.len()
        )));
    }
    let n = indexer.n();
    // Materialize subsets once; each influence pair then swaps in place.
    let mut subsets: Vec<Vec<usize>> = Vec::with_capacity(dim);
    indexer.for_each_subset(|_, elems| subsets.push(elems.to_vec()));

    let mut total = 0.0f64;
    let mut swapped = Vec::with_capacity(indexer.ell());
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0f64;
            for (r, s) in subsets.iter().enumerate() {
                let has_i = s.binary_search(&i).is_ok();
                let has_j = s.binary_search(&j).is_ok();
                if has_i == has_j {
                    continue;
                }
                swapped.clear();
                swapped.extend(
                    s.iter()
                        .map(|&e| {
                            if e == i {
                                j
                            } else if e == j {
                                i
                            } else {
                                e
                            }
                        }),
                );
                swapped.sort_unstable();
                let partner = indexer.rank_slice(&swapped)? as usize;
                let d = v[partner] - v[r];
                acc += d * d;
            }
            total += 0.5 * acc / dim as f64;
        }
    }
    Ok(total / n as f64)
}

/// Variance of `v` under the uniform distribution on the slice.
pub fn slice_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let meansq = v.iter().map(|x| x * x).sum::<f64>() / n;
    meansq - mean * mean
}
