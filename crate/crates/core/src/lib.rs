//! Spectral algorithms on symmetric-difference matrices.
//!
//! For an order-`p` observation that only exposes its distinct-index entries
//! `Y_E` (one value per `p`-subset `E` of `[n]`), the level-`l` matrix
//! `M_{S,T} = Y_{S Δ T} 1{|S Δ T| = p}` over `l`-subsets drives a family of
//! increasingly powerful (and increasingly expensive, `n^{O(l)}`) pipelines:
//!
//! - [`detect_recover`]: hypothesis testing by thresholding the top
//!   eigenvalue at `lambda d_l / 2`, and spike recovery through the voting
//!   matrix (even `p`) or the rectangular singular pair (odd `p`);
//! - [`xor_refute`]: unconditionally sound refutation certificates for
//!   random k-XOR formulas (even `k`);
//! - [`odd_cert`]: certified Rademacher-injective-norm bounds for odd-order
//!   +-1 tensors via a Cauchy-Schwarz lift;
//! - [`johnson`]: the exact spectrum of the signal part of `M` (Eberlein
//!   eigenvalues of the Johnson scheme), eigenvector families, and the
//!   slice-Fourier influence toolkit, serving as analytic test oracles;
//! - [`harness`]: seeded, reproducible experiment sweeps over parameter
//!   grids with CSV output.
//!
//! Supporting layers: [`combinat`] (colex subset indexing and neighbor
//! enumeration), [`model`] (spiked instance generation and dense baselines),
//! [`symdiff`] (implicit/explicit matrices), [`spectral`] (matvec-only
//! eigensolvers), [`rng`] (counter-based seeded randomness), [`io`] (binary
//! file formats).

pub mod combinat;
pub mod detect_recover;
pub mod error;
pub mod harness;
pub mod io;
pub mod johnson;
pub mod model;
pub mod odd_cert;
pub mod rng;
pub mod spectral;
pub mod symdiff;
pub mod xor_refute;

pub use error::{Error, Result};
