use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{cmd_bench, cmd_leverage, cmd_sparsify, cmd_verify};
use crate::config::{MethodArg, RunConfig};
use crate::error::{exit, CliError, Result};
use crate::formats::{write_matrix, Format};
use crate::generate::generate;
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(
    name = "atsp",
    version,
    about = "Shrink the feature dimension of symmetric softmax attention"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "ATSP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a Gaussian instance rescaled to ||XX^T||_inf = r.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.05)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compress X to Y and report the attention error.
    Sparsify {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Where to write the JSON report (stdout by default).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare the attention of X and Y; exit 3 if an applicable bound fails.
    Verify {
        input: PathBuf,
        reduced: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, value_enum)]
        reduced_format: Option<Format>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a parameter sweep from a TOML file and write CSV rows.
    Bench {
        sweep: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Dump column leverage scores, one `index,score` line each.
    Leverage {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Exact scores instead of the sketched estimate.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 0.5)]
        eps_sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        delta_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "rand")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps_sigma: f64,
    /// Defaults to delta / 2.
    #[arg(long)]
    pub delta_sigma: Option<f64>,
    /// Declared bound on ||XX^T||_inf (measured when omitted).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_validate_radius: bool,
    /// Repeat the run over this many derived seeds (randomized method).
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long)]
    pub c_chernoff: Option<f64>,
    #[arg(long)]
    pub c_bss: Option<f64>,
}

impl RunArgs {
    fn to_config(&self, threads: Option<usize>) -> RunConfig {
        let d = RunConfig::default();
        RunConfig {
            method: self.method,
            eps: self.eps,
            delta: self.delta,
            eps_sigma: self.eps_sigma,
            delta_sigma: self.delta_sigma,
            radius: self.r,
            seed: self.seed,
            c_chernoff: self.c_chernoff.unwrap_or(d.c_chernoff),
            c_bss: self.c_bss.unwrap_or(d.c_bss),
            validate_radius: !self.no_validate_radius,
            threads,
            ..d
        }
    }
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn trial_output(base: &Path, trial: usize, trials: usize) -> PathBuf {
    if trials == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("y");
    let ext = base
        .extension()
        .and_then(|s| s.to_str())
        .map(|e| format!(".{e}"))
        .unwrap_or_default();
    base.with_file_name(format!("{stem}.{trial}{ext}"))
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Gen {
            n,
            d,
            r,
            density,
            seed,
            format,
            output,
        } => {
            let x = generate(n, d, r, density, seed)?;
            write_matrix(&output, x.data(), Format::resolve(format, &output))?;
            Ok(exit::OK)
        }
        Command::Sparsify {
            input,
            output,
            report,
            format,
            run,
        } => {
            if run.trials == 0 {
                return Err(CliError::Usage("trials must be positive".into()));
            }
            let base = run.to_config(cli.threads);
            let mut reports: Vec<Report> = Vec::with_capacity(run.trials);
            for trial in 0..run.trials {
                let cfg = RunConfig {
                    seed: if run.trials == 1 {
                        base.seed
                    } else {
                        atsp_core::rng::derive_seed(base.seed, "cli/trial", trial as u64)
                    },
                    ..base.clone()
                };
                reports.push(cmd_sparsify(
                    &cfg,
                    &input,
                    format,
                    &trial_output(&output, trial, run.trials),
                )?);
            }
            let text = if reports.len() == 1 {
                reports[0].to_json()
            } else {
                serde_json::to_string_pretty(&reports).expect("reports serialize")
            };
            emit(&text, report.as_ref())?;
            Ok(exit::OK)
        }
        Command::Verify {
            input,
            reduced,
            eps,
            format,
            reduced_format,
            report,
        } => {
            let (rep, code) = cmd_verify(&input, format, &reduced, reduced_format, eps)?;
            emit(&rep.to_json(), report.as_ref())?;
            Ok(code)
        }
        Command::Bench { sweep, output } => {
            let summary = cmd_bench(&sweep, &output)?;
            for fit in &summary.fits {
                let r2 = fit.r_squared.map_or("n/a".to_string(), |v| format!("{v:.4}"));
                println!(
                    "{:?} n={} density={}: total_ms = {:.3e} * nnz + {:.3} over {} points, R^2 = {r2}",
                    fit.method, fit.n, fit.density, fit.slope, fit.intercept, fit.points
                );
            }
            Ok(exit::OK)
        }
        Command::Leverage {
            input,
            format,
            exact,
            eps_sigma,
            delta_sigma,
            seed,
            output,
        } => {
            let cfg = RunConfig {
                eps_sigma,
                delta_sigma: Some(delta_sigma),
                seed,
                ..RunConfig::default()
            };
            let scores = cmd_leverage(&input, format, exact, &cfg)?;
            let text: String = scores.iter().enumerate().map(|(j, s)| format!("{j},{s:e}\n")).collect();
            emit(text.trim_end(), output.as_ref())?;
            Ok(exit::OK)
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("threads must be positive".into()));
        }
        // A pool may already exist when running inside tests; keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
/// Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::FAILURE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads(cli.threads).and_then(|_| execute(cli));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
