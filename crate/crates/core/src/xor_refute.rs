//! Strong refutation of random k-XOR formulas for even k.
//!
//! A formula is a list of constraints `x^{U_i} = b_i` over `{-1,+1}`
//! variables. Summing the per-clause matrices `M^{(i)}_{S,T} = b_i 1{S Δ T =
//! U_i}` yields a symmetric-difference matrix whose operator norm certifies
//! `P(x) <= m/2 + C(n,k) ||M|| / (2 d_l)` for every assignment; soundness is
//! unconditional, and for random formulas with enough clauses the bound
//! lands at `(m/2)(1 + beta)`.

use crate::combinat::{binomial, d_ell, Subset, SubsetIndexer};
use crate::error::{Error, Result};
use crate::model::SubsetTensor;
use crate::rng::CounterRng;
use crate::spectral::{self, EigOptions, Want};
use crate::symdiff::{BuildMode, SymDiffMatrix};
use serde::Serialize;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorClause {
    pub vars: Subset,
    /// `+1` or `-1`.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorFormula {
    n: usize,
    k: usize,
    clauses: Vec<XorClause>,
}

impl XorFormula {
    pub fn new(n: usize, k: usize, clauses: Vec<XorClause>) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::parameter(format!(
                "clause arity must satisfy 1 <= k <= n, got k = {k}, n = {n}"
            )));
        }
        for c in &clauses {
            if c.vars.len() != k {
                return Err(Error::parameter(format!(
                    "clause {:?} does not have arity {k}",
                    c.vars.elements()
                )));
            }
            if let Some(&last) = c.vars.elements().last() {
                if last >= n {
                    return Err(Error::parameter(format!(
                        "clause variable {last} out of range for n = {n}"
                    )));
                }
            }
            if c.sign != 1 && c.sign != -1 {
                return Err(Error::parameter("clause signs must be +1 or -1"));
            }
        }
        Ok(XorFormula { n, k, clauses })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[XorClause] {
        &self.clauses
    }
}

/// Uniform random formula: clause subsets i.i.d. uniform over the `C(n, k)`
/// possibilities (with replacement), signs i.i.d. uniform.
pub fn random_formula(n: usize, k: usize, m: usize, seed: u64) -> Result<XorFormula> {
    if !k.is_multiple_of(2) || k == 0 {
        return Err(Error::parameter(format!("clause arity must be even, got {k}")));
    }
    if k > n {
        return Err(Error::parameter(format!("k = {k} exceeds n = {n}")));
    }
    let indexer = SubsetIndexer::new(n, k)?;
    let subset_rng = CounterRng::from_parts(seed, "xor-subsets", 0);
    let sign_rng = CounterRng::from_parts(seed, "xor-signs", 0);
    let mut clauses = Vec::with_capacity(m);
    for i in 0..m as u64 {
        let r = subset_rng.below_at(i, indexer.count());
        clauses.push(XorClause {
            vars: indexer.unrank(r)?,
            sign: if sign_rng.sign_at(i) > 0.0 { 1 } else { -1 },
        });
    }
    XorFormula::new(n, k, clauses)
}

/// Number of satisfied constraints under the assignment `x` in `{-1,+1}^n`.
pub fn count_satisfied(formula: &XorFormula, x: &[i8]) -> Result<u64> {
    if x.len() != formula.n {
        return Err(Error::parameter("assignment length must equal n"));
    }
    if x.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::parameter("assignment entries must be +1 or -1"));
    }
    let mut count = 0u64;
    for c in &formula.clauses {
        let prod: i32 = c.vars.elements().iter().map(|&i| x[i] as i32).product();
        if prod == c.sign as i32 {
            count += 1;
        }
    }
    Ok(count)
}

/// Exhaustive `max_x P(x)` over all `2^n` assignments (test oracle).
pub fn max_satisfied_exhaustive(formula: &XorFormula) -> Result<u64> {
    if formula.n > 24 {
        return Err(Error::Capacity(format!(
            "exhaustive maximization over 2^{} assignments refused",
            formula.n
        )));
    }
    let mut best = 0u64;
    let mut x = vec![1i8; formula.n];
    for mask in 0u64..(1u64 << formula.n) {
        for (i, slot) in x.iter_mut().enumerate() {
            *slot = if mask >> i & 1 == 0 { 1 } else { -1 };
        }
        best = best.max(count_satisfied(formula, &x)?);
    }
    Ok(best)
}

/// The clause-sum tensor: entry at the k-subset `E` is the signed count of
/// clauses with `U_i = E`. The refutation matrix is exactly the
/// symmetric-difference matrix of this tensor.
pub fn clause_sum_tensor(formula: &XorFormula) -> Result<SubsetTensor> {
    let indexer = SubsetIndexer::new(formula.n, formula.k)?;
    let mut entries = vec![0.0f64; indexer.count() as usize];
    for c in &formula.clauses {
        let r = indexer.rank(&c.vars)? as usize;
        entries[r] += c.sign as f64;
    }
    SubsetTensor::new(formula.n, formula.k, entries)
}

/// A certified upper bound on the number of simultaneously satisfiable
/// constraints. `bound >= m/2` always; `norm_upper` is the certified
/// operator-norm bound that produced it (residual-inflated eigensolve when
/// converged, row-sum bound otherwise).
#[derive(Debug, Clone, Serialize)]
pub struct RefutationCertificate {
    pub m: u64,
    pub ell: usize,
    pub norm_estimate: f64,
    pub residual: f64,
    pub norm_upper: f64,
    pub bound: f64,
    pub converged: bool,
}

impl RefutationCertificate {
    /// `bound / m`; refutation is nontrivial when this is close to 1/2.
    pub fn ratio(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            self.bound / self.m as f64
        }
    }
}

/// Certify `max_x P(x) <= m/2 + C(n,k) ||M|| / (2 d_l)` at level `l`.
pub fn refute(formula: &XorFormula, ell: usize, opts: &EigOptions) -> Result<RefutationCertificate> {
    if !formula.k.is_multiple_of(2) {
        return Err(Error::parameter(format!(
            "refutation needs even clause arity, got {}",
            formula.k
        )));
    }
    let tensor = clause_sum_tensor(formula)?;
    let matrix = SymDiffMatrix::build(&tensor, ell, BuildMode::Auto)?;
    let d = d_ell(formula.n, ell, formula.k)? as f64;
    let nk = binomial(formula.n, formula.k)
        .ok_or_else(|| Error::Capacity("C(n, k) overflows".into()))? as f64;

    let inner = EigOptions {
        want: Want::LeadingByMagnitude,
        ..opts.clone()
    };
    let pair = spectral::leading_eig(&matrix, &inner)?;
    // Soundness needs an upper bound on ||M||: a converged eigensolve gives
    // |theta| + residual; otherwise fall back to the row-sum bound, valid for
    // any symmetric matrix.
    let norm_upper = if pair.converged {
        pair.value.abs() + pair.residual
    } else {
        matrix.row_sum_norm_bound()
    };
    let m = formula.m() as f64;
    let bound = m / 2.0 + nk * norm_upper / (2.0 * d);
    Ok(RefutationCertificate {
        m: formula.m() as u64,
        ell,
        norm_estimate: pair.value,
        residual: pair.residual,
        norm_upper,
        bound,
        converged: pair.converged,
    })
}

/// Clause count prescribed by the random-formula regime for target slack
/// `beta`: `ceil(4 e^2 C(n,k) ln C(n,l) / (beta^2 d_l))`.
pub fn regime_clause_count(n: usize, k: usize, ell: usize, beta: f64) -> Result<usize> {
    if beta.is_nan() || beta <= 0.0 || beta >= 1.0 {
        return Err(Error::parameter("beta must lie in (0, 1)"));
    }
    let nk = binomial(n, k).ok_or_else(|| Error::Capacity("C(n, k) overflows".into()))? as f64;
    let nl = binomial(n, ell).ok_or_else(|| Error::Capacity("C(n, l) overflows".into()))? as f64;
    let d = d_ell(n, ell, k)? as f64;
    let e2 = std::f64::consts::E * std::f64::consts::E;
    Ok((4.0 * e2 * nk * nl.ln() / (beta * beta * d)).ceil() as usize)
}

/// Text format: header `p kxor <n> <m> <k>`, then one clause per line as
/// `k` 1-based variable indices followed by `+1` or `-1`.
pub fn write_formula<W: Write>(w: &mut W, formula: &XorFormula) -> Result<()> {
    writeln!(w, "p kxor {} {} {}", formula.n, formula.m(), formula.k)?;
    for c in &formula.clauses {
        for v in c.vars.elements() {
            write!(w, "{} ", v + 1)?;
        }
        writeln!(w, "{}", if c.sign > 0 { "+1" } else { "-1" })?;
    }
    Ok(())
}

pub fn read_formula<R: BufRead>(r: &mut R) -> Result<XorFormula> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "p" || parts[1] != "kxor" {
        return Err(Error::Format("expected header 'p kxor n m k'".into()));
    }
    let parse = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Format(format!("bad integer {s:?} in header")))
    };
    let n = parse(parts[2])?;
    let m = parse(parts[3])?;
    let k = parse(parts[4])?;
    let mut clauses = Vec::with_capacity(m);
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != k + 1 {
            return Err(Error::Format(format!(
                "clause line has {} tokens, expected {}",
                toks.len(),
                k + 1
            )));
        }
        let mut vars = Vec::with_capacity(k);
        for t in &toks[..k] {
            let v: usize = t
                .parse()
                .map_err(|_| Error::Format(format!("bad variable index {t:?}")))?;
            if v == 0 {
                return Err(Error::Format("variable indices are 1-based".into()));
            }
            vars.push(v - 1);
        }
        vars.sort_unstable();
        let sign = match toks[k] {
            "+1" | "1" => 1i8,
            "-1" => -1i8,
            other => return Err(Error::Format(format!("bad sign {other:?}"))),
        };
        clauses.push(XorClause {
            vars: Subset::new(vars).map_err(|e| Error::Format(e.to_string()))?,
            sign,
        });
    }
    if clauses.len() != m {
        return Err(Error::Format(format!(
            "header promised {m} clauses, found {}",
            clauses.len()
        )));
    }
    XorFormula::new(n, k, clauses)
}

pub fn write_formula_file(path: &std::path::Path, formula: &XorFormula) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_formula(&mut f, formula)?;
    f.flush()?;
    Ok(())
}

pub fn read_formula_file(path: &std::path::Path) -> Result<XorFormula> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_formula(&mut f)
}
