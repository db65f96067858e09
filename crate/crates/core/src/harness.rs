//! Seeded experiment sweeps over parameter grids, with deterministic CSV
//! output and per-cell aggregation.
//!
//! A sweep walks the cartesian product of the grid lists (cells), runs
//! `trials` independent trials per cell in parallel, and streams one row per
//! trial. Every trial's seed is derived from `(master_seed, cell index,
//! trial index)`, so any single trial can be reproduced in isolation and the
//! outcome columns are a pure function of the config (minus the output
//! path). Wall time is measured but excluded from that guarantee.

use crate::detect_recover::{self, Verdict};
use crate::error::{Error, Result};
use crate::johnson;
use crate::model::{self, SpikePrior};
use crate::odd_cert;
use crate::rng;
use crate::spectral::{EigOptions, Want};
use crate::xor_refute;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Detect,
    Recover,
    RefuteXor,
    CertifyOdd,
    Spectrum,
    BaselineCompare,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Detect => "detect",
            Task::Recover => "recover",
            Task::RefuteXor => "refute-xor",
            Task::CertifyOdd => "certify-odd",
            Task::Spectrum => "spectrum",
            Task::BaselineCompare => "baseline-compare",
        }
    }
}

/// Grid lists; dimensions a task does not use may be omitted.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Grid {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub p: Vec<usize>,
    #[serde(default)]
    pub ell: Vec<usize>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub want: Want,
}

fn default_tol() -> f64 {
    1e-8
}

impl Default for EigConfig {
    fn default() -> Self {
        EigConfig {
            tol: default_tol(),
            max_iters: None,
            want: Want::default(),
        }
    }
}

impl EigConfig {
    fn options(&self, seed: u64) -> EigOptions {
        EigOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            seed,
            want: self.want,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub task: Task,
    pub grid: Grid,
    #[serde(default = "default_trials")]
    pub trials: u32,
    pub master_seed: u64,
    /// Tested SNR for detection; defaults per cell to the generation lambda.
    #[serde(default)]
    pub test_lambda: Option<f64>,
    #[serde(default = "default_prior")]
    pub prior: SpikePrior,
    #[serde(default)]
    pub eig: EigConfig,
    /// Correlation threshold that counts as a recovery success in summaries.
    #[serde(default = "default_success_corr")]
    pub success_corr: f64,
    #[serde(default)]
    pub out: Option<String>,
}

fn default_schema() -> u32 {
    CONFIG_SCHEMA
}

fn default_trials() -> u32 {
    1
}

fn default_prior() -> SpikePrior {
    SpikePrior::Rademacher
}

fn default_success_corr() -> f64 {
    0.9
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "config schema {} unsupported (expected {CONFIG_SCHEMA})",
                config.schema
            )));
        }
        Ok(config)
    }

    /// FNV-1a over the canonical JSON with the output path stripped.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = None;
        let text = serde_json::to_string(&canon).expect("config serializes");
        format!("{:016x}", rng::hash_bytes(text.as_bytes()))
    }
}

/// One grid cell. Unused dimensions carry task-appropriate defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub p: usize,
    pub ell: usize,
    pub lambda: f64,
    pub m: usize,
    pub k: usize,
    pub beta: Option<f64>,
}

fn non_empty(v: &[usize], name: &str) -> Result<Vec<usize>> {
    if v.is_empty() {
        Err(Error::Config(format!("grid.{name} must be non-empty for this task")))
    } else {
        Ok(v.to_vec())
    }
}

type GridAxes = (
    Vec<usize>,
    Vec<usize>,
    Vec<usize>,
    Vec<f64>,
    Vec<usize>,
    Vec<usize>,
    Vec<Option<f64>>,
);

fn cells(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    let g = &config.grid;
    let (ns, ps, ells, lambdas, ms, ks, betas): GridAxes = match config.task {
        Task::Detect | Task::Recover | Task::BaselineCompare => (
            non_empty(&g.n, "n")?,
            non_empty(&g.p, "p")?,
            non_empty(&g.ell, "ell")?,
            if g.lambda.is_empty() {
                return Err(Error::Config("grid.lambda must be non-empty for this task".into()));
            } else {
                g.lambda.clone()
            },
            vec![0],
            vec![0],
            vec![None],
        ),
        Task::RefuteXor => (
            non_empty(&g.n, "n")?,
            vec![0],
            non_empty(&g.ell, "ell")?,
            vec![0.0],
            non_empty(&g.m, "m")?,
            non_empty(&g.k, "k")?,
            if g.beta.is_empty() {
                vec![None]
            } else {
                g.beta.iter().map(|&b| Some(b)).collect()
            },
        ),
        Task::CertifyOdd | Task::Spectrum => (
            non_empty(&g.n, "n")?,
            non_empty(&g.p, "p")?,
            non_empty(&g.ell, "ell")?,
            vec![0.0],
            vec![0],
            vec![0],
            vec![None],
        ),
    };
    let mut out = Vec::new();
    for &n in &ns {
        for &p in &ps {
            for &ell in &ells {
                for &lambda in &lambdas {
                    for &m in &ms {
                        for &k in &ks {
                            for &beta in &betas {
                                out.push(Cell {
                                    index: out.len(),
                                    n,
                                    p,
                                    ell,
                                    lambda,
                                    m,
                                    k,
                                    beta,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn validate_cell(config: &ExperimentConfig, cell: &Cell) -> Result<()> {
    let even_range = |n: usize, p: usize, ell: usize| -> Result<()> {
        crate::combinat::d_ell(n, ell, p).map(|_| ())
    };
    match config.task {
        Task::Detect => {
            even_range(cell.n, cell.p, cell.ell)?;
            let tested = config.test_lambda.unwrap_or(cell.lambda);
            if tested.is_nan() || tested <= 0.0 {
                return Err(Error::Config(format!(
                    "cell {}: detection needs a positive tested lambda (set test_lambda when sweeping lambda = 0)",
                    cell.index
                )));
            }
        }
        Task::Recover | Task::BaselineCompare => {
            if cell.p.is_multiple_of(2) {
                even_range(cell.n, cell.p, cell.ell)?;
            } else {
                let q = cell.p / 2;
                if cell.ell < q || cell.ell + q + 1 > cell.n {
                    return Err(Error::Config(format!(
                        "cell {}: ell out of range for odd p",
                        cell.index
                    )));
                }
            }
            if config.task == Task::BaselineCompare {
                model::dense_len(cell.n, cell.p)?;
            }
        }
        Task::RefuteXor => {
            if !cell.k.is_multiple_of(2) || cell.k == 0 {
                return Err(Error::Config(format!("cell {}: k must be even", cell.index)));
            }
            even_range(cell.n, cell.k, cell.ell)?;
        }
        Task::CertifyOdd => {
            if cell.p % 2 != 1 || cell.p < 3 {
                return Err(Error::Config(format!("cell {}: p must be odd >= 3", cell.index)));
            }
            model::dense_len(cell.n, cell.p)?;
            if cell.ell + 1 < cell.p {
                return Err(Error::Config(format!(
                    "cell {}: ell must be at least p - 1",
                    cell.index
                )));
            }
        }
        Task::Spectrum => {
            johnson::johnson_spectrum(cell.n, cell.ell, cell.p).map(|_| ())?;
        }
    }
    Ok(())
}

/// Seed for `(master, cell, trial)`; reproducible in isolation.
pub fn trial_seed(master: u64, cell_index: usize, trial: u32) -> u64 {
    rng::derive_key(master, &format!("cell-{cell_index}"), trial as u64)
}

/// One output row. Option fields print as empty columns when absent.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub task: Task,
    pub cell: Cell,
    pub test_lambda: Option<f64>,
    pub trial: u32,
    pub seed: u64,
    pub verdict: Option<Verdict>,
    pub lambda_max: Option<f64>,
    pub threshold: Option<f64>,
    pub corr: Option<f64>,
    pub corr_baseline: Option<f64>,
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
    pub refuted: Option<bool>,
    pub mu_index: Option<usize>,
    pub mu: Option<i128>,
    pub dim: Option<i128>,
    pub residual: Option<f64>,
    pub converged: Option<bool>,
    pub error: Option<String>,
    pub wall_ms: f64,
}

pub const CSV_COLUMNS: [&str; 25] = [
    "task",
    "n",
    "p",
    "ell",
    "lambda",
    "test_lambda",
    "m_clauses",
    "k",
    "beta",
    "trial",
    "seed",
    "verdict",
    "lambda_max",
    "threshold",
    "corr",
    "corr_baseline",
    "bound",
    "ratio",
    "refuted",
    "mu_index",
    "mu",
    "dim",
    "residual",
    "converged",
    "error",
];
// wall_ms is appended last and excluded from reproducibility comparisons.

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl TrialRecord {
    fn blank(task: Task, cell: Cell, trial: u32, seed: u64) -> Self {
        TrialRecord {
            task,
            cell,
            test_lambda: None,
            trial,
            seed,
            verdict: None,
            lambda_max: None,
            threshold: None,
            corr: None,
            corr_baseline: None,
            bound: None,
            ratio: None,
            refuted: None,
            mu_index: None,
            mu: None,
            dim: None,
            residual: None,
            converged: None,
            error: None,
            wall_ms: 0.0,
        }
    }

    pub fn to_row(&self) -> Vec<String> {
        let c = &self.cell;
        vec![
            self.task.name().to_string(),
            c.n.to_string(),
            if c.p == 0 { String::new() } else { c.p.to_string() },
            c.ell.to_string(),
            if self.task == Task::Detect
                || self.task == Task::Recover
                || self.task == Task::BaselineCompare
            {
                c.lambda.to_string()
            } else {
                String::new()
            },
            opt(&self.test_lambda),
            if c.m == 0 && self.task != Task::RefuteXor {
                String::new()
            } else {
                c.m.to_string()
            },
            if c.k == 0 { String::new() } else { c.k.to_string() },
            opt(&c.beta),
            self.trial.to_string(),
            self.seed.to_string(),
            self.verdict
                .map(|v| match v {
                    Verdict::Planted => "planted".to_string(),
                    Verdict::Null => "null".to_string(),
                })
                .unwrap_or_default(),
            opt(&self.lambda_max),
            opt(&self.threshold),
            opt(&self.corr),
            opt(&self.corr_baseline),
            opt(&self.bound),
            opt(&self.ratio),
            opt(&self.refuted),
            opt(&self.mu_index),
            opt(&self.mu),
            opt(&self.dim),
            opt(&self.residual),
            opt(&self.converged),
            opt(&self.error),
            format!("{:.3}", self.wall_ms),
        ]
    }
}

fn run_trial(config: &ExperimentConfig, cell: &Cell, trial: u32) -> TrialRecord {
    let seed = trial_seed(config.master_seed, cell.index, trial);
    let mut record = TrialRecord::blank(config.task, *cell, trial, seed);
    let start = Instant::now();
    let outcome = fill_outcome(config, cell, seed, &mut record);
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    record
}

fn fill_outcome(
    config: &ExperimentConfig,
    cell: &Cell,
    seed: u64,
    record: &mut TrialRecord,
) -> Result<()> {
    let eig = config.eig.options(seed);
    match config.task {
        Task::Detect => {
            let tested = config.test_lambda.unwrap_or(cell.lambda);
            record.test_lambda = Some(tested);
            let inst = model::generate(cell.n, cell.p, cell.lambda, &config.prior, seed, false)?;
            let report = detect_recover::detect(&inst.tensor, cell.ell, tested, &eig)?;
            record.verdict = Some(report.verdict);
            record.lambda_max = Some(report.lambda_max);
            record.threshold = Some(report.threshold);
            record.residual = Some(report.residual);
            record.converged = Some(report.converged);
        }
        Task::Recover => {
            let inst = model::generate(cell.n, cell.p, cell.lambda, &config.prior, seed, false)?;
            let report =
                detect_recover::recover(&inst.tensor, cell.ell, &eig, Some(&inst.spike))?;
            record.corr = report.corr_with_truth;
            record.lambda_max = Some(report.matrix_eig.value);
            record.residual = Some(report.matrix_eig.residual);
            record.converged = Some(report.matrix_eig.converged);
        }
        Task::RefuteXor => {
            let formula = xor_refute::random_formula(cell.n, cell.k, cell.m, seed)?;
            let cert = xor_refute::refute(&formula, cell.ell, &eig)?;
            record.bound = Some(cert.bound);
            record.ratio = Some(cert.ratio());
            record.lambda_max = Some(cert.norm_estimate);
            record.residual = Some(cert.residual);
            record.converged = Some(cert.converged);
            if let Some(beta) = cell.beta {
                record.refuted = Some(cert.bound <= cell.m as f64 / 2.0 * (1.0 + beta));
            }
        }
        Task::CertifyOdd => {
            let y = odd_cert::rademacher_dense(cell.n, cell.p, seed)?;
            let cert = odd_cert::certify_rademacher_norm(&y, cell.ell, &eig)?;
            record.bound = Some(cert.bound);
            record.lambda_max = Some(cert.norm_estimate);
            record.residual = Some(cert.residual);
            record.converged = Some(cert.converged);
        }
        Task::Spectrum => unreachable!("spectrum rows are emitted per eigenspace"),
        Task::BaselineCompare => {
            let inst = model::generate(cell.n, cell.p, cell.lambda, &config.prior, seed, true)?;
            let report =
                detect_recover::recover(&inst.tensor, cell.ell, &eig, Some(&inst.spike))?;
            record.corr = report.corr_with_truth;
            record.residual = Some(report.matrix_eig.residual);
            record.converged = Some(report.matrix_eig.converged);
            let dense = inst.dense.as_ref().expect("dense view requested");
            let baseline = if cell.p == 3 {
                model::tensor_unfold(dense)?
            } else {
                let u0_rng = rng::CounterRng::from_parts(seed, "baseline-u0", 0);
                let u0: Vec<f64> = (0..cell.n).map(|i| u0_rng.normal_at(i as u64)).collect();
                model::tensor_power_method(dense, &u0, 100)?
            };
            record.corr_baseline = Some(model::correlation(&baseline, &inst.spike)?);
        }
    }
    Ok(())
}

fn spectrum_records(config: &ExperimentConfig, cell: &Cell) -> Result<Vec<TrialRecord>> {
    let spectrum = johnson::johnson_spectrum(cell.n, cell.ell, cell.p)?;
    let mut out = Vec::new();
    for (m, (mu, dim)) in spectrum
        .eigenvalues
        .iter()
        .zip(&spectrum.dims)
        .enumerate()
    {
        let mut record = TrialRecord::blank(config.task, *cell, m as u32, config.master_seed);
        record.mu_index = Some(m);
        record.mu = Some(*mu);
        record.dim = Some(*dim);
        out.push(record);
    }
    Ok(out)
}

/// Run the sweep, streaming CSV to `writer`; returns all records.
/// Trials within a cell run in parallel; cells run sequentially; rows are
/// written in `(cell, trial)` order regardless of scheduling.
pub fn run_sweep<W: Write>(config: &ExperimentConfig, writer: &mut W) -> Result<Vec<TrialRecord>> {
    let cell_list = cells(config)?;
    for cell in &cell_list {
        validate_cell(config, cell)?;
    }
    writeln!(writer, "# config-hash: {}", config.hash())?;
    let mut csv = csv::WriterBuilder::new().from_writer(writer);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    header.push("wall_ms");
    csv.write_record(&header).map_err(csv_err)?;

    let mut all = Vec::new();
    for cell in &cell_list {
        let records = if config.task == Task::Spectrum {
            spectrum_records(config, cell)?
        } else {
            (0..config.trials)
                .into_par_iter()
                .map(|t| run_trial(config, cell, t))
                .collect()
        };
        for record in records {
            csv.write_record(record.to_row()).map_err(csv_err)?;
            all.push(record);
        }
        csv.flush()?;
    }
    Ok(all)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv write failed: {e}"))
}

pub fn run_sweep_to_path(config: &ExperimentConfig, path: &std::path::Path) -> Result<Vec<TrialRecord>> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let records = run_sweep(config, &mut f)?;
    f.flush()?;
    Ok(records)
}

/// Per-cell aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub cell_index: usize,
    pub n: usize,
    pub p: usize,
    pub ell: usize,
    pub lambda: f64,
    pub m: usize,
    pub k: usize,
    pub beta: Option<f64>,
    pub trials: usize,
    pub errors: usize,
    /// Detect: correct-verdict rate. Recover: rate of `corr >= success_corr`.
    /// Refute-xor with beta: refuted rate.
    pub success_rate: Option<f64>,
    pub mean_corr: Option<f64>,
    pub corr_q10: Option<f64>,
    pub corr_q50: Option<f64>,
    pub corr_q90: Option<f64>,
    pub mean_bound: Option<f64>,
    pub ratio_q10: Option<f64>,
    pub ratio_q50: Option<f64>,
    pub ratio_q90: Option<f64>,
}

/// Nearest-rank quantile of a non-empty sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn stats(values: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None, None, None);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    (
        Some(mean),
        Some(quantile(&sorted, 0.1)),
        Some(quantile(&sorted, 0.5)),
        Some(quantile(&sorted, 0.9)),
    )
}

/// Deterministic per-cell aggregation of sweep records.
pub fn summarize(records: &[TrialRecord], success_corr: f64) -> Result<Vec<CellSummary>> {
    if records.is_empty() {
        return Err(Error::parameter("cannot summarize an empty record set"));
    }
    let mut order: Vec<usize> = Vec::new();
    let mut groups: std::collections::BTreeMap<usize, Vec<&TrialRecord>> =
        std::collections::BTreeMap::new();
    for r in records {
        if !groups.contains_key(&r.cell.index) {
            order.push(r.cell.index);
        }
        groups.entry(r.cell.index).or_default().push(r);
    }
    let mut out = Vec::new();
    for idx in order {
        let rows = &groups[&idx];
        let cell = rows[0].cell;
        let task = rows[0].task;
        let errors = rows.iter().filter(|r| r.error.is_some()).count();
        let corrs: Vec<f64> = rows.iter().filter_map(|r| r.corr).collect();
        let bounds: Vec<f64> = rows.iter().filter_map(|r| r.bound).collect();
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
        let success_rate = match task {
            Task::Detect => {
                let expected = if cell.lambda > 0.0 {
                    Verdict::Planted
                } else {
                    Verdict::Null
                };
                let n_ok = rows.iter().filter(|r| r.verdict == Some(expected)).count();
                Some(n_ok as f64 / rows.len() as f64)
            }
            Task::Recover | Task::BaselineCompare => {
                if corrs.is_empty() {
                    None
                } else {
                    Some(
                        corrs.iter().filter(|&&c| c >= success_corr).count() as f64
                            / rows.len() as f64,
                    )
                }
            }
            Task::RefuteXor => {
                let flags: Vec<&TrialRecord> =
                    rows.iter().filter(|r| r.refuted.is_some()).copied().collect();
                if flags.is_empty() {
                    None
                } else {
                    Some(
                        flags.iter().filter(|r| r.refuted == Some(true)).count() as f64
                            / flags.len() as f64,
                    )
                }
            }
            Task::CertifyOdd | Task::Spectrum => None,
        };
        let (mean_corr, corr_q10, corr_q50, corr_q90) = stats(&corrs);
        let (mean_bound, _, _, _) = stats(&bounds);
        let (_, ratio_q10, ratio_q50, ratio_q90) = stats(&ratios);
        out.push(CellSummary {
            cell_index: cell.index,
            n: cell.n,
            p: cell.p,
            ell: cell.ell,
            lambda: cell.lambda,
            m: cell.m,
            k: cell.k,
            beta: cell.beta,
            trials: rows.len(),
            errors,
            success_rate,
            mean_corr,
            corr_q10,
            corr_q50,
            corr_q90,
            mean_bound,
            ratio_q10,
            ratio_q50,
            ratio_q90,
        });
    }
    Ok(out)
}

/// Strip the trailing wall-time column from a sweep CSV, for byte-level
/// reproducibility comparisons.
pub fn strip_wall_time(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|line| {
            if line.starts_with('#') {
                line.to_string()
            } else {
                match line.rfind(',') {
                    Some(pos) => line[..pos].to_string(),
                    None => line.to_string(),
                }
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect_config() -> ExperimentConfig {
        ExperimentConfig {
            schema: CONFIG_SCHEMA,
            task: Task::Detect,
            grid: Grid {
                n: vec![10],
                p: vec![4],
                ell: vec![2],
                lambda: vec![0.0, 2.0],
                ..Default::default()
            },
            trials: 3,
            master_seed: 77,
            test_lambda: Some(2.0),
            prior: SpikePrior::Rademacher,
            eig: EigConfig::default(),
            success_corr: 0.9,
            out: None,
        }
    }

    #[test]
    fn one_cell_one_trial_gives_one_row() {
        let mut config = detect_config();
        config.grid.lambda = vec![2.0];
        config.trials = 1;
        let mut buf = Vec::new();
        let records = run_sweep(&config, &mut buf).unwrap();
        assert_eq!(records.len(), 1);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# config-hash: "));
        // Comment, header, one row.
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn rerun_is_byte_identical_modulo_wall_time() {
        let config = detect_config();
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_sweep(&config, &mut a).unwrap();
        run_sweep(&config, &mut b).unwrap();
        let a = strip_wall_time(&String::from_utf8(a).unwrap());
        let b = strip_wall_time(&String::from_utf8(b).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn output_path_does_not_change_hash_or_outcomes() {
        let mut config = detect_config();
        let base_hash = config.hash();
        config.out = Some("elsewhere.csv".into());
        assert_eq!(config.hash(), base_hash);
    }

    #[test]
    fn detect_sweep_gets_easy_cells_right() {
        // lambda = 2.0 at n = 10 is far above threshold; lambda = 0 far
        // below. Every verdict should be correct.
        let config = detect_config();
        let mut buf = Vec::new();
        let records = run_sweep(&config, &mut buf).unwrap();
        assert_eq!(records.len(), 6);
        let summary = summarize(&records, config.success_corr).unwrap();
        assert_eq!(summary.len(), 2);
        for cell in &summary {
            assert_eq!(cell.success_rate, Some(1.0), "cell {:?}", cell.cell_index);
            assert_eq!(cell.errors, 0);
        }
    }

    #[test]
    fn invalid_configs_rejected_before_launch() {
        let mut config = detect_config();
        config.grid.ell = vec![9]; // out of range for n = 10, p = 4
        let mut buf = Vec::new();
        assert!(matches!(
            run_sweep(&config, &mut buf),
            Err(Error::Parameter(_)) | Err(Error::Config(_))
        ));

        let mut config = detect_config();
        config.test_lambda = None; // lambda = 0 cell has no tested SNR
        assert!(run_sweep(&config, &mut Vec::new()).is_err());

        assert!(ExperimentConfig::from_json("{\"task\": \"detect\"}").is_err());
        let bad_schema = r#"{"schema": 9, "task": "detect", "grid": {"n": [6], "p": [4], "ell": [2], "lambda": [1.0]}, "master_seed": 1}"#;
        assert!(ExperimentConfig::from_json(bad_schema).is_err());
    }

    #[test]
    fn spectrum_task_emits_eigenspace_rows() {
        let config = ExperimentConfig {
            schema: CONFIG_SCHEMA,
            task: Task::Spectrum,
            grid: Grid {
                n: vec![6],
                p: vec![4],
                ell: vec![2],
                ..Default::default()
            },
            trials: 1,
            master_seed: 0,
            test_lambda: None,
            prior: SpikePrior::Rademacher,
            eig: EigConfig::default(),
            success_corr: 0.9,
            out: None,
        };
        let mut buf = Vec::new();
        let records = run_sweep(&config, &mut buf).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].mu, Some(6));
        assert_eq!(records[1].mu, Some(-3));
        assert_eq!(records[2].mu, Some(1));
        assert_eq!(records[2].dim, Some(9));
    }

    #[test]
    fn refute_sweep_records_ratio_and_refuted() {
        let config = ExperimentConfig {
            schema: CONFIG_SCHEMA,
            task: Task::RefuteXor,
            grid: Grid {
                n: vec![10],
                ell: vec![1],
                m: vec![2000],
                k: vec![2],
                beta: vec![0.9],
                ..Default::default()
            },
            trials: 3,
            master_seed: 5,
            test_lambda: None,
            prior: SpikePrior::Rademacher,
            eig: EigConfig::default(),
            success_corr: 0.9,
            out: None,
        };
        let records = run_sweep(&config, &mut Vec::new()).unwrap();
        for r in &records {
            assert!(r.bound.unwrap() >= 1000.0);
            assert!(r.ratio.unwrap() >= 0.5);
            assert!(r.refuted.is_some());
        }
        let summary = summarize(&records, 0.9).unwrap();
        assert!(summary[0].ratio_q50.is_some());
    }

    #[test]
    fn baseline_compare_fills_both_correlations() {
        let config = ExperimentConfig {
            schema: CONFIG_SCHEMA,
            task: Task::BaselineCompare,
            grid: Grid {
                n: vec![10],
                p: vec![3],
                ell: vec![1],
                lambda: vec![2.0],
                ..Default::default()
            },
            trials: 3,
            master_seed: 21,
            test_lambda: None,
            prior: SpikePrior::Rademacher,
            eig: EigConfig::default(),
            success_corr: 0.9,
            out: None,
        };
        let records = run_sweep(&config, &mut Vec::new()).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert!(r.error.is_none(), "{:?}", r.error);
            // At this SNR both the pipeline and the unfolding baseline
            // recover the spike.
            assert!(r.corr.unwrap() > 0.9);
            assert!(r.corr_baseline.unwrap() > 0.9);
        }
    }

    #[test]
    fn summarize_hand_computed_fixture() {
        let config = ExperimentConfig {
            schema: CONFIG_SCHEMA,
            task: Task::Recover,
            grid: Grid {
                n: vec![8],
                p: vec![4],
                ell: vec![2],
                lambda: vec![1.0],
                ..Default::default()
            },
            trials: 1,
            master_seed: 3,
            test_lambda: None,
            prior: SpikePrior::Rademacher,
            eig: EigConfig::default(),
            success_corr: 0.5,
            out: None,
        };
        let cell = cells(&config).unwrap()[0];
        let mut records = Vec::new();
        let corrs = [0.2, 0.4, 0.55, 0.8, 0.9, 1.0, 0.65, 0.3, 0.7, 0.75];
        for (t, &c) in corrs.iter().enumerate() {
            let mut r = TrialRecord::blank(Task::Recover, cell, t as u32, 0);
            r.corr = Some(c);
            records.push(r);
        }
        let summary = summarize(&records, 0.5).unwrap();
        let s = &summary[0];
        assert_eq!(s.trials, 10);
        // 7 of 10 have corr >= 0.5.
        assert!((s.success_rate.unwrap() - 0.7).abs() < 1e-12);
        let mean: f64 = corrs.iter().sum::<f64>() / 10.0;
        assert!((s.mean_corr.unwrap() - mean).abs() < 1e-12);
        // Nearest-rank: q10 -> 1st of sorted, q50 -> 5th, q90 -> 9th.
        assert_eq!(s.corr_q10, Some(0.2));
        assert_eq!(s.corr_q50, Some(0.65));
        assert_eq!(s.corr_q90, Some(0.9));

        // Quantile of a constant column is the constant.
        for r in records.iter_mut() {
            r.corr = Some(0.42);
        }
        let summary = summarize(&records, 0.5).unwrap();
        assert_eq!(summary[0].corr_q50, Some(0.42));

        assert!(summarize(&[], 0.5).is_err());
    }

    #[test]
    fn crash_isolation_keeps_other_rows() {
        // n < p makes generation fail inside the trial; the row records the
        // error and the sweep completes.
        let config = ExperimentConfig {
            schema: CONFIG_SCHEMA,
            task: Task::Recover,
            grid: Grid {
                n: vec![8],
                p: vec![4],
                ell: vec![2],
                lambda: vec![0.0],
                ..Default::default()
            },
            trials: 4,
            master_seed: 9,
            test_lambda: None,
            prior: SpikePrior::Rademacher,
            eig: EigConfig {
                tol: 1e-8,
                max_iters: Some(5),
                want: Want::LeadingByValue,
            },
            success_corr: 0.9,
            out: None,
        };
        // lambda = 0 recovery may or may not fail, but rows must all exist.
        let records = run_sweep(&config, &mut Vec::new()).unwrap();
        assert_eq!(records.len(), 4);
    }
}
