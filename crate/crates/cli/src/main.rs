//! `hout`: rank-1 tensor decompositions, sigma-point ensembles and the
//! experiment studies from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod function;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hout::decomp::{approx_rank1_decompose, verify_entry_bound, DecompOptions};
use hout::experiments::{forecast_study, polynomial_study, LorenzSpec, PolyStudyConfig};
use hout::io;
use hout::sigma::{empirical_moments, hout_transform, propagate_par, sut, HoutOptions};
use hout::tensor::SymTensor;
use serde::Serialize;

use crate::function::FunctionSpec;

const ENSEMBLE_HELP: &str = "\
Ensemble CSV columns: index,weight,x_1,...,x_d (one row per node, index order).
The optional --json file mirrors the CSV and adds the generator parameters.";

const DECOMPOSE_HELP: &str = "\
Decomposition JSON: {order, signs, vectors, residual_norms, rate_bound}.
Residual CSV columns: iteration,norm,ratio (row 0 has an empty ratio).";

const PROPAGATE_HELP: &str = "\
Function JSON, one of:
  {\"kind\":\"identity\"}
  {\"kind\":\"affine\",\"matrix\":[[...],...],\"offset\":[...]}
  {\"kind\":\"poly\",\"a\":[...],\"b\":[...],\"c\":1.0,\"n\":3}
  {\"kind\":\"lorenz\",\"dt\":0.1,\"steps\":10}
Output CSV columns: index,weight,y_1,...,y_m. The --moments file holds the
weighted output moments {mu, C, S, K}.";

const POLY_HELP: &str = "\
Output CSV columns: n,c,method,param,mean_estimate,var_estimate,mc_mean,mc_var,
mean_error,var_error,mean_se,var_se (param is beta for SUT, gamma for HOUT).";

const LORENZ_HELP: &str = "\
Output CSV columns: step,time,hout_mean,hout_cov,hout_skew,hout_kurt,
sut_mean,sut_cov,sut_skew,sut_kurt (geometric means over trials).
HOUT_THREADS caps the number of threads running trials.";

#[derive(Parser, Debug)]
#[command(
    name = "hout",
    version,
    about = "Higher order unscented transform toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Greedy rank-1 decomposition of a symmetric tensor.
    #[command(after_help = DECOMPOSE_HELP)]
    Decompose {
        /// Tensor JSON {order, dim, entries}.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_terms: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Residual history CSV.
        #[arg(long)]
        residuals: Option<PathBuf>,
    },
    /// Scaled unscented transform of a moment set.
    #[command(after_help = ENSEMBLE_HELP)]
    Sut {
        /// Moment JSON {mu, C, S, K}; only mu and C are used.
        #[arg(long)]
        moments: PathBuf,
        #[arg(long, default_value_t = 3f64.sqrt())]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Higher order unscented transform of a moment set.
    #[command(after_help = ENSEMBLE_HELP)]
    Hout {
        /// Moment JSON {mu, C, S, K}.
        #[arg(long)]
        moments: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        tau: f64,
        /// Skew-node scale; defaults to J^(-1/3).
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Empirical moments of a sample CSV (header row, one sample per row).
    Moments {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pushes an ensemble through a function and reports output moments.
    #[command(after_help = PROPAGATE_HELP)]
    Propagate {
        /// Ensemble JSON written by `sut --json` or `hout --json`.
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        moments: Option<PathBuf>,
    },
    /// SUT and HOUT on polynomials of a non-Gaussian input.
    #[command(name = "poly-study", after_help = POLY_HELP)]
    PolyStudy {
        /// Study JSON; missing keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        ensemble_size: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary of the study inputs.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Lorenz-63 forecast skill of HOUT and SUT ensembles.
    #[command(name = "lorenz-study", after_help = LORENZ_HELP)]
    LorenzStudy {
        /// Study JSON; missing keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        ensemble_size: Option<usize>,
        #[arg(long)]
        forecast_steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary with the resolved configuration and trial counts.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Checks the entry bound on the largest eigenvalue (d <= 3).
    #[command(name = "verify-bounds")]
    VerifyBounds {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Decompose { .. } => "decompose",
            Command::Sut { .. } => "sut",
            Command::Hout { .. } => "hout",
            Command::Moments { .. } => "moments",
            Command::Propagate { .. } => "propagate",
            Command::PolyStudy { .. } => "poly-study",
            Command::LorenzStudy { .. } => "lorenz-study",
            Command::VerifyBounds { .. } => "verify-bounds",
        }
    }
}

/// Failure of one step of a pipeline.
struct Failure {
    operation: &'static str,
    error: hout::Error,
}

trait Context<T> {
    fn during(self, operation: &'static str) -> Result<T, Failure>;
}

impl<T> Context<T> for hout::Result<T> {
    fn during(self, operation: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure { operation, error })
    }
}

fn emit(path: Option<&Path>, text: &str) -> hout::Result<()> {
    match path {
        Some(p) => io::write_text(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_opt(path: Option<&Path>, text: &str) -> hout::Result<()> {
    match path {
        Some(p) => io::write_text(p, text),
        None => Ok(()),
    }
}

fn read_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> hout::Result<T> {
    match path {
        Some(p) => io::read_json(p),
        None => Ok(T::default()),
    }
}

#[derive(Serialize)]
struct LorenzSummary<'a> {
    config: &'a LorenzSpec,
    trials_used: usize,
    trials_skipped: usize,
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Decompose {
            input,
            tau,
            seed,
            max_terms,
            out,
            residuals,
        } => {
            let t: SymTensor = io::read_json(&input).during("read tensor")?;
            let opts = DecompOptions {
                seed,
                max_terms,
                ..DecompOptions::with_tol(tau)
            };
            let d = approx_rank1_decompose(&t, &opts).during("decompose")?;
            emit(
                out.as_deref(),
                &io::to_json(&d).during("write decomposition")?,
            )
            .during("write decomposition")?;
            write_opt(residuals.as_deref(), &io::residual_csv(&d)).during("write residuals")
        }
        Command::Sut {
            moments,
            beta,
            out,
            json,
        } => {
            let m = io::read_moments(&moments).during("read moments")?;
            let e = sut(&m.mean, &m.covariance, beta).during("sut")?;
            emit(out.as_deref(), &io::ensemble_csv(&e)).during("write ensemble")?;
            write_opt(
                json.as_deref(),
                &io::ensemble_json(&e).during("write ensemble")?,
            )
            .during("write ensemble")
        }
        Command::Hout {
            moments,
            tau,
            gamma,
            seed,
            out,
            json,
        } => {
            let m = io::read_moments(&moments).during("read moments")?;
            let mut opts = HoutOptions::with_tau(tau);
            opts.gamma = gamma;
            opts.decomp.seed = seed;
            let (e, _) = hout_transform(&m, &opts).during("hout")?;
            emit(out.as_deref(), &io::ensemble_csv(&e)).during("write ensemble")?;
            write_opt(
                json.as_deref(),
                &io::ensemble_json(&e).during("write ensemble")?,
            )
            .during("write ensemble")
        }
        Command::Moments { samples, out } => {
            let xs = io::read_samples_csv(&samples).during("read samples")?;
            let m = empirical_moments(&xs, None).during("moments")?;
            emit(out.as_deref(), &io::to_json(&m).during("write moments")?).during("write moments")
        }
        Command::Propagate {
            ensemble,
            function,
            out,
            moments,
        } => {
            let e = io::read_ensemble(&ensemble).during("read ensemble")?;
            let spec: FunctionSpec = io::read_json(&function).during("read function")?;
            let f = spec.build(e.dim()).during("build function")?;
            let p = propagate_par(&e, f).during("propagate")?;
            let outputs = hout::sigma::SigmaEnsemble {
                nodes: p.outputs.clone(),
                weights: p.weights.clone(),
                meta: e.meta,
            };
            let csv = io::ensemble_csv(&outputs).replacen(",x_", ",y_", usize::MAX);
            emit(out.as_deref(), &csv).during("write outputs")?;
            write_opt(
                moments.as_deref(),
                &io::to_json(&p.moments).during("write moments")?,
            )
            .during("write moments")
        }
        Command::PolyStudy {
            config,
            seed,
            tau,
            ensemble_size,
            out,
            summary,
        } => {
            let mut cfg: PolyStudyConfig = read_config(config.as_deref()).during("read config")?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = tau {
                cfg.tau = t;
            }
            if let Some(n) = ensemble_size {
                cfg.ensemble_size = n;
            }
            let r = polynomial_study(&cfg).during("poly-study")?;
            emit(out.as_deref(), &io::poly_csv(&r)).during("write study")?;
            write_opt(
                summary.as_deref(),
                &io::poly_summary_json(&r).during("write summary")?,
            )
            .during("write summary")
        }
        Command::LorenzStudy {
            config,
            seed,
            tau,
            trials,
            ensemble_size,
            forecast_steps,
            out,
            summary,
        } => {
            let mut spec: LorenzSpec = read_config(config.as_deref()).during("read config")?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = tau {
                spec.tau = t;
            }
            if let Some(n) = trials {
                spec.trials = n;
            }
            if let Some(n) = ensemble_size {
                spec.ensemble_size = n;
            }
            if let Some(n) = forecast_steps {
                spec.forecast_steps = n;
            }
            let r = forecast_study(&spec).during("lorenz-study")?;
            emit(out.as_deref(), &io::skill_csv(&r)).during("write study")?;
            let s = LorenzSummary {
                config: &spec,
                trials_used: r.trials_used,
                trials_skipped: r.trials_skipped,
            };
            write_opt(
                summary.as_deref(),
                &io::to_json(&s).during("write summary")?,
            )
            .during("write summary")
        }
        Command::VerifyBounds { input, grid, out } => {
            let t: SymTensor = io::read_json(&input).during("read tensor")?;
            let b = verify_entry_bound(&t, grid).during("verify-bounds")?;
            #[derive(Serialize)]
            struct Report<'a> {
                #[serde(flatten)]
                bound: &'a hout::decomp::EntryBound,
                holds: bool,
            }
            let report = Report {
                bound: &b,
                holds: b.holds(),
            };
            emit(
                out.as_deref(),
                &io::to_json(&report).during("write report")?,
            )
            .during("write report")
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    command: &'a str,
    operation: &'a str,
    kind: &'a str,
    message: String,
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("HOUT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("HOUT_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let command = cli.command.name();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let report = ErrorReport {
                error: ErrorBody {
                    command,
                    operation: f.operation,
                    kind: f.error.kind(),
                    message: f.error.to_string(),
                },
            };
            let text = serde_json::to_string(&report)
                .unwrap_or_else(|_| r#"{"error":{"kind":"internal"}}"#.to_string());
            eprintln!("{text}");
            ExitCode::from(1)
        }
    }
}
