use clap::{Args, Parser, Subcommand, ValueEnum};
use kikuchi::error::{Error, Result};
use kikuchi::harness::{self, ExperimentConfig};
use kikuchi::johnson;
use kikuchi::model::{self, SpikePrior};
use kikuchi::spectral::{EigOptions, Want};
use kikuchi::{detect_recover, io, odd_cert, xor_refute};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectral pipelines on symmetric-difference matrices: spiked-tensor
/// detection and recovery, k-XOR refutation, and odd-order injective-norm
/// certification, plus exact Johnson-scheme spectra and a seeded sweep
/// harness.
#[derive(Parser)]
#[command(name = "kikuchi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenerateKind {
    /// Spiked instance file (subset view).
    Spiked,
    /// Dense i.i.d. +-1 tensor file.
    Pm1,
    /// Random k-XOR formula file.
    Xor,
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorArg {
    Rademacher,
    SphereUniform,
}

impl PriorArg {
    fn to_prior(self) -> SpikePrior {
        match self {
            PriorArg::Rademacher => SpikePrior::Rademacher,
            PriorArg::SphereUniform => SpikePrior::SphereUniform,
        }
    }
}

#[derive(Args)]
struct EigArgs {
    /// Relative residual tolerance of the eigensolver.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Iteration cap (defaults to max(10^4, 100 ln dim)).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Target the eigenvalue of largest magnitude instead of largest value.
    #[arg(long)]
    magnitude: bool,
    /// Seed for the eigensolver start vector.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl EigArgs {
    fn options(&self) -> EigOptions {
        EigOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            seed: self.seed,
            want: if self.magnitude {
                Want::LeadingByMagnitude
            } else {
                Want::LeadingByValue
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance, tensor, or formula file.
    Generate {
        #[arg(long, value_enum, default_value_t = GenerateKind::Spiked)]
        kind: GenerateKind,
        #[arg(long)]
        n: usize,
        /// Tensor order (spiked/pm1 kinds).
        #[arg(long)]
        p: Option<usize>,
        /// Signal-to-noise ratio (spiked kind).
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = PriorArg::Rademacher)]
        prior: PriorArg,
        /// Clause count (xor kind).
        #[arg(long)]
        m: Option<usize>,
        /// Clause arity (xor kind).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Embed the true spike in the instance file (test fixtures).
        #[arg(long)]
        with_spike: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hypothesis test: planted vs null at a tested SNR.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ell: usize,
        /// Tested SNR (defaults to the lambda recorded in the file).
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        eig: EigArgs,
    },
    /// Estimate the spike from an instance file.
    Recover {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ell: usize,
        #[command(flatten)]
        eig: EigArgs,
    },
    /// Certify an upper bound on satisfiable k-XOR constraints.
    RefuteXor {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ell: usize,
        /// Report whether the bound meets (m/2)(1 + beta).
        #[arg(long)]
        beta: Option<f64>,
        #[command(flatten)]
        eig: EigArgs,
    },
    /// Certify an upper bound on the Rademacher injective norm of an
    /// odd-order +-1 tensor.
    CertifyOdd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ell: usize,
        #[command(flatten)]
        eig: EigArgs,
    },
    /// Print the exact signal-matrix spectrum as CSV (m, mu, dim).
    Spectrum {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded experiment sweep from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print per-cell aggregates to stdout after the sweep.
        #[arg(long)]
        summary: bool,
    },
}

fn emit_json(value: serde_json::Value) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{value}")?;
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            kind,
            n,
            p,
            lambda,
            prior,
            m,
            k,
            seed,
            with_spike,
            out,
        } => match kind {
            GenerateKind::Spiked => {
                let p = p.ok_or_else(|| Error::Config("--p is required for --kind spiked".into()))?;
                let prior = prior.to_prior();
                let inst = model::generate(n, p, lambda, &prior, seed, false)?;
                io::write_instance_file(
                    &out,
                    &inst.tensor,
                    lambda,
                    seed,
                    inst.prior_tag,
                    with_spike.then_some(inst.spike.as_slice()),
                )?;
                emit_json(json!({
                    "kind": "spiked", "n": n, "p": p, "lambda": lambda,
                    "seed": seed, "entries": inst.tensor.entries().len(),
                    "spike_embedded": with_spike, "out": out,
                }))
            }
            GenerateKind::Pm1 => {
                let p = p.ok_or_else(|| Error::Config("--p is required for --kind pm1".into()))?;
                let y = odd_cert::rademacher_dense(n, p, seed)?;
                io::write_dense_file(&out, &y)?;
                emit_json(json!({
                    "kind": "pm1", "n": n, "p": p, "seed": seed,
                    "values": y.values().len(), "out": out,
                }))
            }
            GenerateKind::Xor => {
                let m = m.ok_or_else(|| Error::Config("--m is required for --kind xor".into()))?;
                let k = k.ok_or_else(|| Error::Config("--k is required for --kind xor".into()))?;
                let formula = xor_refute::random_formula(n, k, m, seed)?;
                xor_refute::write_formula_file(&out, &formula)?;
                emit_json(json!({
                    "kind": "xor", "n": n, "k": k, "m": m, "seed": seed, "out": out,
                }))
            }
        },
        Command::Detect {
            input,
            ell,
            lambda,
            eig,
        } => {
            let file = io::read_instance_file(&input)?;
            let tested = lambda.unwrap_or(file.lambda);
            let report = detect_recover::detect(&file.tensor, ell, tested, &eig.options())?;
            emit_json(json!({
                "n": file.n, "p": file.p, "ell": ell, "tested_lambda": tested,
                "lambda_max": report.lambda_max, "threshold": report.threshold,
                "verdict": report.verdict, "residual": report.residual,
                "iterations": report.iterations, "converged": report.converged,
            }))
        }
        Command::Recover { input, ell, eig } => {
            let file = io::read_instance_file(&input)?;
            let report =
                detect_recover::recover(&file.tensor, ell, &eig.options(), file.spike.as_deref())?;
            emit_json(json!({
                "n": file.n, "p": file.p, "ell": ell,
                "x_hat": report.x_hat,
                "corr_with_truth": report.corr_with_truth,
                "matrix_eig": report.matrix_eig,
                "voting_eig": report.voting_eig,
            }))
        }
        Command::RefuteXor {
            input,
            ell,
            beta,
            eig,
        } => {
            let formula = xor_refute::read_formula_file(&input)?;
            let cert = xor_refute::refute(&formula, ell, &eig.options())?;
            let refuted = beta.map(|b| cert.bound <= cert.m as f64 / 2.0 * (1.0 + b));
            emit_json(json!({
                "n": formula.n(), "k": formula.k(), "m": cert.m, "ell": ell,
                "bound": cert.bound, "ratio": cert.ratio(),
                "norm_upper": cert.norm_upper, "converged": cert.converged,
                "beta": beta, "refuted": refuted,
            }))
        }
        Command::CertifyOdd { input, ell, eig } => {
            let y = io::read_dense_file(&input)?;
            let cert = odd_cert::certify_rademacher_norm(&y, ell, &eig.options())?;
            emit_json(json!({
                "n": cert.n, "p": cert.p, "ell": ell,
                "bound": cert.bound, "norm_upper": cert.norm_upper,
                "lifted_dim": cert.lifted_dim, "converged": cert.converged,
            }))
        }
        Command::Spectrum { n, ell, p, out } => {
            let spectrum = johnson::johnson_spectrum(n, ell, p)?;
            let mut text = String::from("m,mu,dim\n");
            for (m, (mu, dim)) in spectrum.eigenvalues.iter().zip(&spectrum.dims).enumerate() {
                text.push_str(&format!("{m},{mu},{dim}\n"));
            }
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Sweep {
            config,
            out,
            summary,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let parsed = ExperimentConfig::from_json(&text)?;
            let out_path = out
                .or_else(|| parsed.out.clone().map(PathBuf::from))
                .ok_or_else(|| {
                    Error::Config("no output path: set config.out or pass --out".into())
                })?;
            let records = harness::run_sweep_to_path(&parsed, &out_path)?;
            if summary {
                let cells = harness::summarize(&records, parsed.success_corr)?;
                for cell in cells {
                    emit_json(serde_json::to_value(cell).map_err(|e| Error::Config(e.to_string()))?)?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
