//! Leading eigenpair / singular-pair computation over matvec-only operators.
//!
//! Power iteration with a shift (for the value-leading variant) keeps this
//! module dependency-free; only the top of the spectrum is ever needed, and
//! in the regimes where the pipelines succeed the top gap is large.

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use serde::{Deserialize, Serialize};

/// A symmetric linear operator exposed through its matvec.
pub trait SymOp: Sync {
    fn dim(&self) -> usize;
    /// `out = A v`. Must be deterministic for fixed `v`.
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

/// A rectangular operator with both matvec directions.
pub trait RectOp: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `out = A v`, `v` of length `ncols`, `out` of length `nrows`.
    fn apply(&self, v: &[f64], out: &mut [f64]);
    /// `out = A^T u`, `u` of length `nrows`, `out` of length `ncols`.
    fn apply_transpose(&self, u: &[f64], out: &mut [f64]);
}

/// Dense symmetric matrix in row-major storage.
#[derive(Debug, Clone)]
pub struct DenseSymOp {
    dim: usize,
    data: Vec<f64>,
}

impl DenseSymOp {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::parameter(format!(
                "dense operator needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(DenseSymOp { dim, data })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl SymOp for DenseSymOp {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

/// Which extreme eigenvalue to target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Want {
    /// The maximal eigenvalue.
    #[default]
    LeadingByValue,
    /// The eigenvalue of maximal absolute value.
    LeadingByMagnitude,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    /// Iteration cap; `None` picks `max(10^4, 100 ln(dim))`.
    pub max_iters: Option<usize>,
    /// Seed for the start vector.
    pub seed: u64,
    pub want: Want,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: 1e-8,
            max_iters: None,
            seed: 0,
            want: Want::LeadingByValue,
        }
    }
}

impl EigOptions {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::parameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == Some(0) {
            return Err(Error::parameter("max_iters must be at least 1"));
        }
        Ok(())
    }

    fn iteration_cap(&self, dim: usize) -> usize {
        self.max_iters
            .unwrap_or_else(|| (100.0 * (dim.max(2) as f64).ln()).ceil().max(10_000.0) as usize)
    }
}

/// Outcome of [`leading_eig`]. When `converged` is false the fields hold the
/// best iterate seen; the caller decides what to do with it.
#[derive(Debug, Clone)]
pub struct EigPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `|| A v - value * v ||`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Power-iteration estimate of the spectral radius.
    pub radius_estimate: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Start vectors are drawn from the continuous (normal) seeded stream rather
// than from signs: a sign start lands exactly orthogonal to sign-structured
// top eigenvectors (such as the noiseless spike pattern) with noticeable
// probability, and the iteration then converges cleanly to a subdominant
// eigenpair that the residual test cannot reject.
fn seeded_start(dim: usize, seed: u64, tag: &str) -> Vec<f64> {
    let rng = CounterRng::from_parts(seed, tag, 0);
    let mut v: Vec<f64> = (0..dim).map(|i| rng.normal_at(i as u64)).collect();
    let nrm = norm(&v).max(1e-300);
    for x in v.iter_mut() {
        *x /= nrm;
    }
    v
}

/// Leading eigenpair of a symmetric operator.
///
/// For [`Want::LeadingByValue`] this runs power iteration on the shifted
/// operator `A + s I` (s slightly above the estimated spectral radius) and
/// un-shifts; for [`Want::LeadingByMagnitude`] it iterates `A` directly.
/// Returns a converged pair satisfying
/// `|| A v - value v || <= tol * max(|value|, radius_estimate)`, or the best
/// iterate with `converged = false` once the iteration cap is reached.
pub fn leading_eig(op: &dyn SymOp, opts: &EigOptions) -> Result<EigPair> {
    opts.validate()?;
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::parameter("operator dimension must be positive"));
    }
    let cap = opts.iteration_cap(dim);
    let mut iterations = 0usize;

    let mut v = seeded_start(dim, opts.seed, "eig-start");
    let mut w = vec![0.0; dim];

    // Phase A: spectral radius estimate by plain power iteration.
    let mut radius = 0.0f64;
    {
        let budget = 300.min(cap.max(1));
        let mut prev = f64::INFINITY;
        let mut stable = 0;
        for _ in 0..budget {
            op.apply(&v, &mut w);
            iterations += 1;
            let theta = dot(&v, &w).abs();
            let nw = norm(&w);
            radius = radius.max(theta.max(nw));
            if nw < 1e-300 {
                break;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            if (theta - prev).abs() <= 1e-3 * theta.max(1e-300) {
                stable += 1;
                if stable >= 10 {
                    break;
                }
            } else {
                stable = 0;
            }
            prev = theta;
        }
    }

    // Shift pushes the maximal eigenvalue to the top in magnitude; the 1.25
    // margin covers underestimation of the radius. The shifted phase must
    // restart from the seeded vector: the radius phase may have converged to
    // the magnitude-leading eigenvector, which the residual test would accept
    // even when it is not the value-leading one.
    let shift = match opts.want {
        Want::LeadingByValue => {
            v = seeded_start(dim, opts.seed, "eig-start");
            1.25 * radius
        }
        Want::LeadingByMagnitude => 0.0,
    };

    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut prev_residual = f64::INFINITY;
    let mut stagnant = 0usize;
    let mut rerandomized = false;

    while iterations < cap {
        op.apply(&v, &mut w);
        iterations += 1;
        let theta = dot(&v, &w);
        let mut residual_sq = 0.0;
        for (wi, vi) in w.iter().zip(&v) {
            let d = wi - theta * vi;
            residual_sq += d * d;
        }
        let residual = residual_sq.sqrt();

        if best.as_ref().is_none_or(|(_, _, r)| residual < *r) {
            best = Some((theta, v.clone(), residual));
        }
        if residual <= opts.tol * theta.abs().max(radius) {
            return Ok(EigPair {
                value: theta,
                vector: v,
                residual,
                iterations,
                converged: true,
                radius_estimate: radius,
            });
        }

        if (residual - prev_residual).abs() <= 1e-14 {
            stagnant += 1;
            if stagnant >= 50 && !rerandomized {
                v = seeded_start(dim, opts.seed, "eig-restart");
                rerandomized = true;
                stagnant = 0;
                prev_residual = f64::INFINITY;
                continue;
            }
        } else {
            stagnant = 0;
        }
        prev_residual = residual;

        // Advance with the shifted operator.
        let mut nw_sq = 0.0;
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
            nw_sq += *wi * *wi;
        }
        let nw = nw_sq.sqrt();
        if nw < 1e-300 {
            // Zero (or annihilating) operator direction; restart once.
            if rerandomized {
                break;
            }
            v = seeded_start(dim, opts.seed, "eig-restart");
            rerandomized = true;
            continue;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }

    // A tiny iteration cap can exhaust inside the radius phase; report the
    // current vector in that case.
    let (value, vector, residual) = best.unwrap_or_else(|| {
        op.apply(&v, &mut w);
        let theta = dot(&v, &w);
        let mut residual_sq = 0.0;
        for (wi, vi) in w.iter().zip(&v) {
            let d = wi - theta * vi;
            residual_sq += d * d;
        }
        (theta, v, residual_sq.sqrt())
    });
    Ok(EigPair {
        value,
        vector,
        residual,
        iterations,
        converged: false,
        radius_estimate: radius,
    })
}

/// Outcome of [`leading_singular`]. `right = A^T left` is deliberately left
/// unnormalized; `sigma = ||right||`.
#[derive(Debug, Clone)]
pub struct SingularTriple {
    pub sigma: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Residual of the Gram-operator eigensolve for `A A^T`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct GramOp<'a> {
    op: &'a dyn RectOp,
}

impl SymOp for GramOp<'_> {
    fn dim(&self) -> usize {
        self.op.nrows()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; self.op.ncols()];
        self.op.apply_transpose(v, &mut tmp);
        self.op.apply(&tmp, out);
    }
}

/// Top singular triple of a rectangular operator: the left vector is the
/// leading eigenvector of `A A^T`, the right vector is `A^T u`.
pub fn leading_singular(op: &dyn RectOp, opts: &EigOptions) -> Result<SingularTriple> {
    let gram = GramOp { op };
    let inner = EigOptions {
        want: Want::LeadingByMagnitude,
        ..opts.clone()
    };
    let pair = leading_eig(&gram, &inner)?;
    let mut right = vec![0.0; op.ncols()];
    op.apply_transpose(&pair.vector, &mut right);
    let sigma = norm(&right);
    Ok(SingularTriple {
        sigma,
        left: pair.vector,
        right,
        residual: pair.residual,
        iterations: pair.iterations,
        converged: pair.converged,
    })
}
