//! Detection by top-eigenvalue thresholding, recovery through the voting
//! matrix (even order), and singular-vector recovery (odd order).
//!
//! Detection compares the top eigenvalue of the symmetric-difference matrix
//! against `lambda d_l / 2` for the caller-supplied SNR. Even-order recovery
//! rounds the leading eigenvector `v` through the n x n voting matrix
//! `V_ij(v) = sum_{S: i in S, j not in S} v_S v_{S Δ {i,j}}`; odd-order
//! recovery reads the estimate off the top singular pair of the rectangular
//! matrix.

use crate::combinat::SubsetIndexer;
use crate::error::{Error, Result};
use crate::model::{self, SubsetTensor};
use crate::spectral::{self, DenseSymOp, EigOptions, Want};
use crate::symdiff::{BuildMode, PairwiseSum, RectSymDiffMatrix, SymDiffMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Planted,
    Null,
}

/// Outcome of the detection test. `verdict` is `Planted` exactly when
/// `lambda_max >= threshold`; a non-converged solve is reported through
/// `converged = false` with the best available estimate.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub lambda_max: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Threshold the top eigenvalue of the order-`l` matrix at `lambda d_l / 2`.
/// `lambda` is the tested SNR, supplied by the caller.
pub fn detect(
    tensor: &SubsetTensor,
    ell: usize,
    lambda: f64,
    opts: &EigOptions,
) -> Result<DetectionReport> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::parameter(format!(
            "detection needs a positive tested SNR, got {lambda}"
        )));
    }
    let m = SymDiffMatrix::build(tensor, ell, BuildMode::Auto)?;
    let threshold = lambda * m.degree() as f64 / 2.0;
    // The test statistic is the maximal eigenvalue, not the spectral radius.
    let inner = EigOptions {
        want: Want::LeadingByValue,
        ..opts.clone()
    };
    let pair = spectral::leading_eig(&m, &inner)?;
    let verdict = if pair.value >= threshold {
        Verdict::Planted
    } else {
        Verdict::Null
    };
    Ok(DetectionReport {
        lambda_max: pair.value,
        threshold,
        verdict,
        residual: pair.residual,
        iterations: pair.iterations,
        converged: pair.converged,
    })
}

/// The n x n voting matrix of a vector over `l`-subsets: zero diagonal and
/// `V_ij = sum_{S: i in S, j not in S} v_S v_{S Δ {i,j}}`, returned row-major.
pub fn voting_matrix(n: usize, ell: usize, v: &[f64]) -> Result<Vec<f64>> {
    let indexer = SubsetIndexer::new(n, ell)?;
    if v.len() as u64 != indexer.count() {
        return Err(Error::parameter(format!(
            "expected C({n}, {ell}) = {} coordinates, got {}",
            indexer.count(),
            v.len()
        )));
    }
    if ell == 0 || ell == n {
        // No (i in S, j not in S) pairs exist.
        return Ok(vec![0.0; n * n]);
    }
    let mut votes = vec![0.0f64; n * n];
    let mut partner = vec![0usize; ell];
    indexer.for_each_subset(|r, elems| {
        let vs = v[r as usize];
        if vs == 0.0 {
            return;
        }
        for (pos, &i) in elems.iter().enumerate() {
            for j in 0..n {
                if elems.binary_search(&j).is_ok() {
                    continue;
                }
                // partner = (S \ {i}) ∪ {j}, sorted in place.
                partner.copy_from_slice(elems);
                partner[pos] = j;
                partner.sort_unstable();
                let t = indexer.rank_slice(&partner).expect("valid partner") as usize;
                votes[i * n + j] += vs * v[t];
            }
        }
    });
    Ok(votes)
}

#[derive(Debug, Clone, Serialize)]
pub struct EigMeta {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Recovery output: the unit-norm estimate, its correlation with the truth
/// when known, and per-stage eigensolver metadata.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub x_hat: Vec<f64>,
    pub corr_with_truth: Option<f64>,
    pub matrix_eig: EigMeta,
    pub voting_eig: Option<EigMeta>,
}

fn normalize_estimate(mut x: Vec<f64>) -> Result<Vec<f64>> {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm < 1e-300 {
        return Err(Error::Degenerate(
            "recovered estimate is the zero vector".into(),
        ));
    }
    for v in x.iter_mut() {
        *v /= nrm;
    }
    model::fix_sign(&mut x);
    Ok(x)
}

/// Even-order recovery: leading eigenvector of the symmetric-difference
/// matrix, voting matrix, leading eigenvector again.
pub fn recover_even(
    tensor: &SubsetTensor,
    ell: usize,
    opts: &EigOptions,
    truth: Option<&[f64]>,
) -> Result<RecoveryReport> {
    let m = SymDiffMatrix::build(tensor, ell, BuildMode::Auto)?;
    let top = spectral::leading_eig(&m, opts)?;
    let votes = voting_matrix(tensor.n(), ell, &top.vector)?;
    let vote_op = DenseSymOp::new(tensor.n(), votes)?;
    let vote_pair = spectral::leading_eig(
        &vote_op,
        &EigOptions {
            want: Want::LeadingByValue,
            ..opts.clone()
        },
    )?;
    let x_hat = normalize_estimate(vote_pair.vector.clone())?;
    let corr_with_truth = match truth {
        Some(t) => Some(model::correlation(&x_hat, t)?),
        None => None,
    };
    Ok(RecoveryReport {
        x_hat,
        corr_with_truth,
        matrix_eig: EigMeta {
            value: top.value,
            residual: top.residual,
            iterations: top.iterations,
            converged: top.converged,
        },
        voting_eig: Some(EigMeta {
            value: vote_pair.value,
            residual: vote_pair.residual,
            iterations: vote_pair.iterations,
            converged: vote_pair.converged,
        }),
    })
}

/// Odd-order recovery: top singular pair `(u, v = M^T u)` of the rectangular
/// matrix, then `x_hat_i = sum_{S: i not in S} u_S v_{S ∪ {i}}`.
pub fn recover_odd(
    tensor: &SubsetTensor,
    ell: usize,
    opts: &EigOptions,
    truth: Option<&[f64]>,
) -> Result<RecoveryReport> {
    let m = RectSymDiffMatrix::build(tensor, ell)?;
    let triple = spectral::leading_singular(&m, opts)?;
    let n = tensor.n();
    let rows = m.row_indexer();
    let cols = m.col_indexer();
    let mut accs: Vec<PairwiseSum> = (0..n).map(|_| PairwiseSum::new()).collect();
    let mut extended = vec![0usize; ell + 1];
    rows.for_each_subset(|r, elems| {
        let us = triple.left[r as usize];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            if elems.binary_search(&i).is_ok() {
                continue;
            }
            extended[..ell].copy_from_slice(elems);
            extended[ell] = i;
            extended.sort_unstable();
            let t = cols.rank_slice(&extended).expect("valid extension") as usize;
            accs[i].push(us * triple.right[t]);
        }
    });
    let x_raw: Vec<f64> = accs.iter().map(|a| a.finish()).collect();
    let x_hat = normalize_estimate(x_raw)?;
    let corr_with_truth = match truth {
        Some(t) => Some(model::correlation(&x_hat, t)?),
        None => None,
    };
    Ok(RecoveryReport {
        x_hat,
        corr_with_truth,
        matrix_eig: EigMeta {
            value: triple.sigma,
            residual: triple.residual,
            iterations: triple.iterations,
            converged: triple.converged,
        },
        voting_eig: None,
    })
}

/// Dispatch on tensor order parity.
pub fn recover(
    tensor: &SubsetTensor,
    ell: usize,
    opts: &EigOptions,
    truth: Option<&[f64]>,
) -> Result<RecoveryReport> {
    if tensor.p().is_multiple_of(2) {
        recover_even(tensor, ell, opts, truth)
    } else {
        recover_odd(tensor, ell, opts, truth)
    }
}

/// `sum_{i,j} V_ij` over all ordered pairs; used by the slice-Fourier tests.
pub fn voting_matrix_total(votes: &[f64]) -> f64 {
    votes.iter().sum()
}
