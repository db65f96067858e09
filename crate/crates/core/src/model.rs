//! The spiked tensor model: instance generation, spike priors, the
//! correlation metric, and the dense-tensor baselines (tensor power method,
//! tensor unfolding, boosting).
//!
//! An observation is `Y = lambda * x^(⊗p) + G` with `G` symmetric Gaussian
//! noise. The subset view keeps only the entries with distinct indices,
//! `Y_E` for `|E| = p`, which is all the symmetric-difference pipelines ever
//! read; the optional dense view carries the full `n^p` array for the
//! baselines.

use crate::combinat::SubsetIndexer;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::spectral::{self, DenseSymOp, EigOptions, Want};
use serde::{Deserialize, Serialize};

/// Default cap on dense tensor storage (bytes).
pub const DENSE_MEMORY_CAP: usize = 2 << 30;

/// A distribution on a finite support with unit second moment, for i.i.d.
/// spike priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::parameter("support and probabilities must match and be nonempty"));
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::parameter("probabilities must lie in [0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::parameter(format!("probabilities sum to {total}, not 1")));
        }
        let second: f64 = values.iter().zip(&probs).map(|(v, p)| v * v * p).sum();
        if (second - 1.0).abs() > 1e-12 {
            return Err(Error::parameter(format!(
                "second moment is {second}; the support distribution must be normalized to 1"
            )));
        }
        Ok(DiscreteDistribution { values, probs })
    }

    fn sample(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        *self.values.last().unwrap()
    }
}

/// Spike prior. Rademacher and sphere draws are normalized to `||x|| = sqrt(n)`
/// exactly; `IidScaled` draws i.i.d. entries with unit second moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpikePrior {
    Rademacher,
    SphereUniform,
    IidScaled(DiscreteDistribution),
}

impl SpikePrior {
    /// Stable tag for instance-file headers.
    pub fn tag(&self) -> u8 {
        match self {
            SpikePrior::Rademacher => 0,
            SpikePrior::SphereUniform => 1,
            SpikePrior::IidScaled(_) => 2,
        }
    }

    pub fn draw(&self, n: usize, rng: &CounterRng) -> Vec<f64> {
        match self {
            SpikePrior::Rademacher => (0..n).map(|i| rng.sign_at(i as u64)).collect(),
            SpikePrior::SphereUniform => {
                let raw: Vec<f64> = (0..n).map(|i| rng.normal_at(i as u64)).collect();
                let nrm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                let scale = (n as f64).sqrt() / nrm;
                raw.into_iter().map(|x| x * scale).collect()
            }
            SpikePrior::IidScaled(dist) => {
                (0..n).map(|i| dist.sample(rng.unit_at(i as u64))).collect()
            }
        }
    }
}

/// The distinct-index view: one value per `p`-subset of `[n]`, in colex
/// rank order.
#[derive(Debug, Clone)]
pub struct SubsetTensor {
    n: usize,
    p: usize,
    indexer: SubsetIndexer,
    entries: Vec<f64>,
}

impl SubsetTensor {
    pub fn new(n: usize, p: usize, entries: Vec<f64>) -> Result<Self> {
        let indexer = SubsetIndexer::new(n, p)?;
        if entries.len() as u64 != indexer.count() {
            return Err(Error::parameter(format!(
                "expected C({n}, {p}) = {} entries, got {}",
                indexer.count(),
                entries.len()
            )));
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::parameter("tensor entries must be finite"));
        }
        Ok(SubsetTensor {
            n,
            p,
            indexer,
            entries,
        })
    }

    /// Build entry-by-entry from the subset elements.
    pub fn from_fn(n: usize, p: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let indexer = SubsetIndexer::new(n, p)?;
        let mut entries = vec![0.0; indexer.count() as usize];
        indexer.for_each_subset(|r, elems| entries[r as usize] = f(elems));
        Self::new(n, p, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn indexer(&self) -> &SubsetIndexer {
        &self.indexer
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, rank: u64) -> f64 {
        self.entries[rank as usize]
    }
}

/// A dense order-`p` tensor over `[n]^p` in row-major order (last index
/// fastest). Symmetry is a property of how it was generated, not of the
/// container; generation paths that promise symmetry are tested by sampling.
#[derive(Debug, Clone)]
pub struct DenseTensor {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        let len = dense_len(n, p)?;
        if values.len() != len {
            return Err(Error::parameter(format!(
                "expected n^p = {len} values, got {}",
                values.len()
            )));
        }
        Ok(DenseTensor { n, p, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.linear(idx)]
    }

    fn linear(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.p);
        let mut lin = 0usize;
        for &i in idx {
            debug_assert!(i < self.n);
            lin = lin * self.n + i;
        }
        lin
    }
}

/// Checked `n^p`, enforcing the dense memory cap.
pub fn dense_len(n: usize, p: usize) -> Result<usize> {
    let mut len = 1usize;
    for _ in 0..p {
        len = len
            .checked_mul(n)
            .ok_or_else(|| Error::Capacity(format!("n^p overflows for n = {n}, p = {p}")))?;
    }
    if len.saturating_mul(8) > DENSE_MEMORY_CAP {
        return Err(Error::Capacity(format!(
            "dense tensor of {len} entries exceeds the {DENSE_MEMORY_CAP}-byte cap"
        )));
    }
    Ok(len)
}

/// A generated spiked instance. The dense view, when present, agrees with
/// the subset view on all distinct-index entries exactly.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    pub seed: u64,
    pub prior_tag: u8,
    pub spike: Vec<f64>,
    pub tensor: SubsetTensor,
    pub dense: Option<DenseTensor>,
}

fn spike_product(spike: &[f64], elems: &[usize]) -> f64 {
    elems.iter().map(|&i| spike[i]).product()
}

/// Draw `Y = lambda x^(⊗p) + G` from the spiked model.
///
/// Without the dense view, each distinct-index entry gets an independent
/// standard normal. With it, an i.i.d. Gaussian array is symmetrized with
/// scale `1/sqrt(p!)` (so distinct-index entries are again standard normal)
/// and the subset view is copied out of the dense one, keeping the two views
/// identical where they overlap.
pub fn generate(
    n: usize,
    p: usize,
    lambda: f64,
    prior: &SpikePrior,
    seed: u64,
    dense_wanted: bool,
) -> Result<Instance> {
    if p < 2 || n < p {
        return Err(Error::parameter(format!(
            "need n >= p >= 2, got n = {n}, p = {p}"
        )));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::parameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let spike = prior.draw(n, &CounterRng::from_parts(seed, "spike", 0));

    let (tensor, dense) = if dense_wanted {
        let len = dense_len(n, p)?;
        let noise_rng = CounterRng::from_parts(seed, "noise-dense", 0);
        let raw: Vec<f64> = (0..len).map(|i| noise_rng.normal_at(i as u64)).collect();

        // Symmetrize: G = (1/sqrt(p!)) * sum over index permutations.
        let mut factorial = 1.0f64;
        for k in 2..=p {
            factorial *= k as f64;
        }
        let scale = 1.0 / factorial.sqrt();
        let mut values = vec![0.0f64; len];
        let mut idx = vec![0usize; p];
        let mut perm: Vec<usize> = (0..p).collect();
        let mut permuted = vec![0usize; p];
        for (lin, slot) in values.iter_mut().enumerate() {
            let mut rem = lin;
            for k in (0..p).rev() {
                idx[k] = rem % n;
                rem /= n;
            }
            // Sum over the orbit from the sorted representative so every
            // index in an orbit accumulates the same terms in the same
            // order; symmetry then holds bit-for-bit.
            let mut signal = lambda;
            for &i in &idx {
                signal *= spike[i];
            }
            idx.sort_unstable();
            let mut sum = 0.0;
            perm.iter_mut().enumerate().for_each(|(k, v)| *v = k);
            loop {
                for (k, &pk) in perm.iter().enumerate() {
                    permuted[k] = idx[pk];
                }
                let mut plin = 0usize;
                for &i in &permuted {
                    plin = plin * n + i;
                }
                sum += raw[plin];
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            *slot = scale * sum + signal;
        }
        let dense = DenseTensor::new(n, p, values)?;
        let tensor = SubsetTensor::from_fn(n, p, |elems| dense.get(elems))?;
        (tensor, Some(dense))
    } else {
        let noise_rng = CounterRng::from_parts(seed, "noise-subset", 0);
        let indexer = SubsetIndexer::new(n, p)?;
        let mut entries = vec![0.0; indexer.count() as usize];
        indexer.for_each_subset(|r, elems| {
            entries[r as usize] = lambda * spike_product(&spike, elems) + noise_rng.normal_at(r);
        });
        (SubsetTensor::new(n, p, entries)?, None)
    };

    Ok(Instance {
        n,
        p,
        lambda,
        seed,
        prior_tag: prior.tag(),
        spike,
        tensor,
        dense,
    })
}

/// Noise-free observation `Y_E = lambda * x^E` in the subset view.
pub fn noiseless_tensor(n: usize, p: usize, lambda: f64, spike: &[f64]) -> Result<SubsetTensor> {
    if spike.len() != n {
        return Err(Error::parameter("spike length must equal n"));
    }
    SubsetTensor::from_fn(n, p, |elems| lambda * spike_product(spike, elems))
}

/// Noise-free dense observation `lambda * x^(⊗p)`.
pub fn noiseless_dense(n: usize, p: usize, lambda: f64, spike: &[f64]) -> Result<DenseTensor> {
    if spike.len() != n {
        return Err(Error::parameter("spike length must equal n"));
    }
    let len = dense_len(n, p)?;
    let mut values = vec![0.0; len];
    let mut idx = vec![0usize; p];
    for (lin, slot) in values.iter_mut().enumerate() {
        let mut rem = lin;
        for k in (0..p).rev() {
            idx[k] = rem % n;
            rem /= n;
        }
        *slot = lambda * idx.iter().map(|&i| spike[i]).product::<f64>();
    }
    DenseTensor::new(n, p, values)
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Normalized correlation `|<a, b>| / (||a|| ||b||)`, clamped into `[0, 1]`.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::parameter("correlation requires equal lengths"));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot.abs() / (na * nb)).min(1.0))
}

/// `Y{u}_i = sum_{j_1..j_{p-1}} Y_{i, j_1, ..., j_{p-1}} u_{j_1} ... u_{j_{p-1}}`,
/// contracting all but the first mode. Cost `O(n^p)`.
pub fn contract(dense: &DenseTensor, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != dense.n {
        return Err(Error::parameter(format!(
            "contraction vector has length {}, expected {}",
            u.len(),
            dense.n
        )));
    }
    let n = dense.n;
    let mut cur = dense.values.clone();
    for _ in 0..dense.p - 1 {
        let next_len = cur.len() / n;
        let mut next = vec![0.0f64; next_len];
        for (j, slot) in next.iter_mut().enumerate() {
            let row = &cur[j * n..(j + 1) * n];
            *slot = row.iter().zip(u).map(|(a, b)| a * b).sum();
        }
        cur = next;
    }
    Ok(cur)
}

/// One tensor power-method step from `u`: `x_hat = Y{u}`. Boosts any
/// estimate with nontrivial correlation into a strongly correlated one when
/// the SNR is well above the information-theoretic threshold.
pub fn boost(instance: &Instance, u: &[f64]) -> Result<Vec<f64>> {
    let dense = instance.dense.as_ref().ok_or(Error::MissingDense)?;
    if u.iter().map(|x| x * x).sum::<f64>() == 0.0 {
        return Err(Error::parameter("boost requires a nonzero start vector"));
    }
    contract(dense, u)
}

/// Tensor power method: iterate `u <- Y{u}` with normalization for a fixed
/// budget; returns the final unit vector (or the zero vector if an update
/// annihilates the iterate).
pub fn tensor_power_method(dense: &DenseTensor, u0: &[f64], iters: usize) -> Result<Vec<f64>> {
    let nrm0 = u0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm0 == 0.0 {
        return Err(Error::parameter("power method requires a nonzero start"));
    }
    let mut u: Vec<f64> = u0.iter().map(|x| x / nrm0).collect();
    for _ in 0..iters {
        let w = contract(dense, &u)?;
        let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Ok(vec![0.0; u.len()]);
        }
        u = w.into_iter().map(|x| x / nrm).collect();
    }
    Ok(u)
}

/// Tensor unfolding for `p = 3`: flatten to the `n x n^2` matrix
/// `M_{i,jk} = Y_{ijk}` and return the leading unit eigenvector of `M M^T`,
/// sign-fixed so its largest-magnitude coordinate is positive.
pub fn tensor_unfold(dense: &DenseTensor) -> Result<Vec<f64>> {
    if dense.p != 3 {
        return Err(Error::parameter(format!(
            "tensor unfolding is defined for p = 3, got p = {}",
            dense.p
        )));
    }
    let n = dense.n;
    let n2 = n * n;
    let mut gram = vec![0.0f64; n * n];
    for i in 0..n {
        let rowi = &dense.values[i * n2..(i + 1) * n2];
        for i2 in i..n {
            let rowj = &dense.values[i2 * n2..(i2 + 1) * n2];
            let v: f64 = rowi.iter().zip(rowj).map(|(a, b)| a * b).sum();
            gram[i * n + i2] = v;
            gram[i2 * n + i] = v;
        }
    }
    let op = DenseSymOp::new(n, gram)?;
    let pair = spectral::leading_eig(
        &op,
        &EigOptions {
            want: Want::LeadingByMagnitude,
            ..Default::default()
        },
    )?;
    let mut v = pair.vector;
    fix_sign(&mut v);
    Ok(v)
}

/// Flip so the largest-magnitude coordinate is positive (ties broken by the
/// first such index).
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_model_entries_standard_normal() {
        let inst = generate(14, 4, 0.0, &SpikePrior::Rademacher, 5, false).unwrap();
        let e = inst.tensor.entries();
        let count = e.len() as f64; // C(14, 4) = 1001
        let mean = e.iter().sum::<f64>() / count;
        let var = e.iter().map(|x| x * x).sum::<f64>() / count - mean * mean;
        let tol = 5.0 / count.sqrt();
        assert!(mean.abs() < tol, "mean {mean}");
        assert!((var - 1.0).abs() < tol, "var {var}");
    }

    #[test]
    fn huge_snr_signs_match_spike() {
        let inst = generate(6, 4, 1e6, &SpikePrior::Rademacher, 1, false).unwrap();
        let ix = inst.tensor.indexer().clone();
        ix.for_each_subset(|r, elems| {
            let want = spike_product(&inst.spike, elems);
            assert_eq!(inst.tensor.get(r).signum(), want.signum());
        });
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(8, 3, 0.7, &SpikePrior::Rademacher, 99, true).unwrap();
        let b = generate(8, 3, 0.7, &SpikePrior::Rademacher, 99, true).unwrap();
        assert_eq!(a.spike, b.spike);
        assert_eq!(a.tensor.entries(), b.tensor.entries());
        assert_eq!(
            a.dense.as_ref().unwrap().values(),
            b.dense.as_ref().unwrap().values()
        );
    }

    #[test]
    fn dense_and_subset_views_agree() {
        let inst = generate(8, 3, 1.3, &SpikePrior::Rademacher, 2, true).unwrap();
        let dense = inst.dense.as_ref().unwrap();
        inst.tensor.indexer().clone().for_each_subset(|r, elems| {
            assert_eq!(inst.tensor.get(r), dense.get(elems));
        });
    }

    #[test]
    fn dense_noise_is_symmetric_and_standard_on_distinct() {
        let inst = generate(16, 3, 0.0, &SpikePrior::Rademacher, 3, true).unwrap();
        let dense = inst.dense.as_ref().unwrap();
        // Symmetry on sampled index triples.
        let rng = CounterRng::from_parts(1, "symcheck", 0);
        for t in 0..200u64 {
            let i = rng.below_at(3 * t, 16) as usize;
            let j = rng.below_at(3 * t + 1, 16) as usize;
            let k = rng.below_at(3 * t + 2, 16) as usize;
            let v = dense.get(&[i, j, k]);
            assert_eq!(v, dense.get(&[j, i, k]));
            assert_eq!(v, dense.get(&[k, j, i]));
            assert_eq!(v, dense.get(&[i, k, j]));
        }
        // Distinct-index variance ~ 1.
        let e = inst.tensor.entries();
        let count = e.len() as f64; // C(16,3) = 560
        let mean = e.iter().sum::<f64>() / count;
        let var = e.iter().map(|x| x * x).sum::<f64>() / count - mean * mean;
        assert!((var - 1.0).abs() < 5.0 / count.sqrt(), "var {var}");
    }

    #[test]
    fn priors_are_normalized() {
        let rng = CounterRng::from_parts(4, "prior", 0);
        let sphere = SpikePrior::SphereUniform.draw(10, &rng);
        let nrm = sphere.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((nrm - 10.0f64.sqrt()).abs() < 1e-12);

        let rad = SpikePrior::Rademacher.draw(10, &rng);
        assert!(rad.iter().all(|&x| x == 1.0 || x == -1.0));

        // Sparse prior: value 3 with probability 1/9, else 0; second moment 1.
        let dist = DiscreteDistribution::new(vec![3.0, 0.0], vec![1.0 / 9.0, 8.0 / 9.0]).unwrap();
        let iid = SpikePrior::IidScaled(dist).draw(1000, &rng);
        assert!(iid.iter().all(|&x| x == 3.0 || x == 0.0));

        assert!(DiscreteDistribution::new(vec![1.0], vec![0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![2.0], vec![1.0]).is_err());
    }

    #[test]
    fn generate_rejects_bad_parameters() {
        assert!(generate(3, 4, 1.0, &SpikePrior::Rademacher, 0, false).is_err());
        assert!(generate(8, 1, 1.0, &SpikePrior::Rademacher, 0, false).is_err());
        assert!(generate(8, 3, -1.0, &SpikePrior::Rademacher, 0, false).is_err());
        // 60^5 * 8 bytes is far over the dense cap.
        assert!(generate(60, 5, 1.0, &SpikePrior::Rademacher, 0, true).is_err());
    }

    #[test]
    fn correlation_basics() {
        let x = vec![1.0, -2.0, 3.0];
        assert_eq!(correlation(&x, &x).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(correlation(&x, &neg).unwrap(), 1.0);
        assert_eq!(correlation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(correlation(&[0.0, 0.0], &x[..2]).is_err());
        // Scale invariance.
        let y = vec![0.3, 0.4, -0.2];
        let y5: Vec<f64> = y.iter().map(|v| 5.0 * v).collect();
        let a = correlation(&x, &y).unwrap();
        let b = correlation(&x, &y5).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn contract_rank_one_identity() {
        let x = [1.0, -1.0, 2.0, 0.5];
        let dense = noiseless_dense(4, 3, 1.0, &x).unwrap();
        let u = [0.3, 0.7, -0.2, 1.1];
        let got = contract(&dense, &u).unwrap();
        let dot: f64 = x.iter().zip(&u).map(|(a, b)| a * b).sum();
        for (g, xi) in got.iter().zip(&x) {
            assert!((g - dot * dot * xi).abs() < 1e-12);
        }
        let zero = contract(&dense, &[0.0; 4]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn contract_matches_nested_loop_oracle() {
        let inst = generate(5, 3, 0.9, &SpikePrior::Rademacher, 41, true).unwrap();
        let dense = inst.dense.as_ref().unwrap();
        let rng = CounterRng::from_parts(8, "u", 0);
        let u: Vec<f64> = (0..5).map(|i| rng.normal_at(i as u64)).collect();
        let fast = contract(dense, &u).unwrap();
        #[allow(clippy::needless_range_loop)]
        for i in 0..5 {
            let mut slow = 0.0;
            for j in 0..5 {
                for k in 0..5 {
                    slow += dense.get(&[i, j, k]) * u[j] * u[k];
                }
            }
            assert!((fast[i] - slow).abs() < 1e-10 * slow.abs().max(1.0));
        }
    }

    #[test]
    fn boost_noiseless_cases() {
        let spike = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
        let mut inst = generate(6, 3, 0.0, &SpikePrior::Rademacher, 7, true).unwrap();
        inst.dense = Some(noiseless_dense(6, 3, 2.0, &spike).unwrap());
        // Any start with positive overlap recovers the spike exactly.
        let u = [1.0, 0.0, 0.5, 0.0, 0.0, 0.0];
        let xhat = boost(&inst, &u).unwrap();
        assert!((correlation(&xhat, &spike).unwrap() - 1.0).abs() < 1e-12);
        // Orthogonal start is annihilated.
        let mut u_perp = vec![0.0; 6];
        u_perp[0] = 1.0;
        u_perp[1] = 1.0; // <u, spike> = 1 - 1 = 0
        let dead = boost(&inst, &u_perp).unwrap();
        assert!(dead.iter().all(|&v| v.abs() < 1e-12));

        let no_dense = generate(6, 3, 1.0, &SpikePrior::Rademacher, 7, false).unwrap();
        assert!(matches!(boost(&no_dense, &u), Err(Error::MissingDense)));
    }

    #[test]
    fn boost_inequality_with_fitted_constant() {
        // corr(x_hat, x) >= 1 - C lambda^{-1} tau^{1-p} n^{(1-p)/2} on every
        // seeded trial. The constant in the guarantee is nonconstructive, so
        // C = 2.0 is fitted empirically (observed maximum 0.94) and frozen.
        let (n, p) = (16usize, 3usize);
        let lambda = 5.0 / (n as f64).sqrt();
        let c_fitted = 2.0;
        for (ti, tau) in [0.3f64, 0.5].into_iter().enumerate() {
            for trial in 0..50u64 {
                let seed = 31_000 + 1000 * ti as u64 + trial;
                let inst = generate(n, p, lambda, &SpikePrior::Rademacher, seed, true).unwrap();
                let xhat: Vec<f64> = inst.spike.iter().map(|v| v / (n as f64).sqrt()).collect();
                let rng = CounterRng::from_parts(seed, "boost-seed-dir", 0);
                let w: Vec<f64> = (0..n).map(|i| rng.normal_at(i as u64)).collect();
                let dot: f64 = w.iter().zip(&xhat).map(|(a, b)| a * b).sum();
                let mut wp: Vec<f64> =
                    w.iter().zip(&xhat).map(|(wi, xi)| wi - dot * xi).collect();
                let nw = wp.iter().map(|v| v * v).sum::<f64>().sqrt();
                for v in wp.iter_mut() {
                    *v /= nw;
                }
                let u: Vec<f64> = xhat
                    .iter()
                    .zip(&wp)
                    .map(|(x, w)| tau * x + (1.0 - tau * tau).sqrt() * w)
                    .collect();
                let boosted = boost(&inst, &u).unwrap();
                let corr = correlation(&boosted, &inst.spike).unwrap();
                let floor = 1.0
                    - c_fitted * tau.powi(1 - p as i32) * (n as f64).powf((1.0 - p as f64) / 2.0)
                        / lambda;
                assert!(corr >= floor, "seed {seed}: corr {corr} < floor {floor}");
            }
        }
    }

    #[test]
    fn power_method_noiseless_converges() {
        let spike = [1.0, -1.0, -1.0, 1.0, 1.0];
        let dense = noiseless_dense(5, 3, 1.0, &spike).unwrap();
        let u0 = [0.9, 0.1, -0.3, 0.2, 0.4];
        let u = tensor_power_method(&dense, &u0, 30).unwrap();
        assert!((correlation(&u, &spike).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unfold_noiseless_rank_one() {
        let spike = [1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
        let dense = noiseless_dense(7, 3, 1.0, &spike).unwrap();
        let v = tensor_unfold(&dense).unwrap();
        assert!((correlation(&v, &spike).unwrap() - 1.0).abs() < 1e-10);
        assert!(tensor_unfold(&noiseless_dense(4, 2, 1.0, &[1.0; 4]).unwrap()).is_err());
    }

    #[test]
    fn unfold_beats_threshold_at_moderate_snr() {
        // p = 3 with lambda well above n^{-3/4}: unfolding recovers the spike.
        let n = 12;
        let lambda = 4.0 * (n as f64).powf(-0.75);
        let mut ok = 0;
        for seed in 0..10u64 {
            let inst = generate(n, 3, lambda, &SpikePrior::Rademacher, seed, true).unwrap();
            let v = tensor_unfold(inst.dense.as_ref().unwrap()).unwrap();
            if correlation(&v, &inst.spike).unwrap() >= 0.9 {
                ok += 1;
            }
        }
        assert!(ok >= 8, "only {ok}/10 succeeded");
    }
}
