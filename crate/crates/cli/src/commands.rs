use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Deserialize;

use atsp_core::attention::verify_data;
use atsp_core::leverage::{approx_leverage_with, exact_leverage};
use atsp_core::matcore::MatrixData;
use atsp_core::sparsifier::{run_deterministic, run_randomized, InputMatrix, ReducedMatrix, StageTimings, MAX_RADIUS};

use crate::config::{MethodArg, RunConfig};
use crate::error::{exit, CliError, Result};
use crate::formats::{read_matrix, write_matrix, Format};
use crate::generate::generate;
use crate::report::{millis, InputStats, OutputStats, Report, Timings, SCHEMA_VERSION};

/// Reads `path` and attaches a radius: the declared one, or the measured
/// `||XX^T||_inf`. With validation on, the bound is checked and a violation
/// names the offending entry.
pub fn ingest(path: &Path, format: Format, radius: Option<f64>, validate: bool) -> Result<InputMatrix> {
    into_input(read_matrix(path, format)?, radius, validate)
}

pub fn into_input(data: MatrixData, radius: Option<f64>, validate: bool) -> Result<InputMatrix> {
    match (radius, validate) {
        (Some(r), true) => Ok(InputMatrix::new(data, r)?),
        (Some(r), false) => Ok(InputMatrix::new_unvalidated(data, r)?),
        (None, true) => {
            let measured = InputMatrix::new_unvalidated(data, MAX_RADIUS.next_down())?;
            measured.validate_radius().map_err(|e| match e {
                atsp_core::Error::RadiusViolation { i, j, value, .. } => CliError::Radius {
                    i,
                    j,
                    value,
                    radius: MAX_RADIUS,
                },
                other => other.into(),
            })?;
            Ok(InputMatrix::from_measured(measured.into_data())?)
        }
        (None, false) => Ok(InputMatrix::new_unvalidated(data, MAX_RADIUS.next_down())?),
    }
}

pub struct PipelineOutput {
    pub reduced: ReducedMatrix,
    pub timings: StageTimings,
}

pub fn run_pipeline(x: &InputMatrix, cfg: &RunConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (reduced, timings) = match cfg.method {
        MethodArg::Rand => {
            let run = run_randomized(x, cfg.eps, cfg.delta, cfg.seed, &cfg.randomized())?;
            (run.reduced, run.timings)
        }
        MethodArg::Det => {
            let run = run_deterministic(x, cfg.eps, &cfg.barrier())?;
            (run.reduced, run.timings)
        }
    };
    Ok(PipelineOutput { reduced, timings })
}

/// Compresses `input`, writes `Y` in the binary format to `output`, and
/// returns the report.
pub fn cmd_sparsify(cfg: &RunConfig, input: &Path, format: Option<Format>, output: &Path) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let x = ingest(input, Format::resolve(format, input), cfg.radius, cfg.validate_radius)?;
    let read = start.elapsed();

    let out = run_pipeline(&x, cfg)?;
    let t = Instant::now();
    let attention = verify_data(x.data(), out.reduced.data(), cfg.eps)?;
    let verify = t.elapsed();
    write_matrix(output, &MatrixData::Dense(out.reduced.data().clone()), Format::Binary)?;

    let y = &out.reduced;
    Ok(Report {
        schema: SCHEMA_VERSION,
        command: "sparsify",
        config: Some(cfg.clone()),
        input: InputStats {
            n: x.n(),
            d: x.d(),
            nnz: x.nnz(),
            r_measured: attention.r_measured,
            radius: Some(x.radius()),
        },
        output: OutputStats {
            m: y.m(),
            method: Some(y.method()),
            seed: y.seed(),
            nonzero_weights: Some(y.distinct_columns()),
            selected_indices: Some(y.selected_indices().to_vec()),
            weights: Some(y.weights().to_vec()),
        },
        attention,
        timings_ms: Timings {
            read: millis(read),
            scoring: millis(out.timings.scoring),
            selection: millis(out.timings.selection),
            verify: millis(verify),
            total: millis(start.elapsed()),
        },
    })
}

/// Compares `X` with a compressed `Y`; the exit code is 3 when an
/// applicable bound fails.
pub fn cmd_verify(
    input: &Path,
    input_format: Option<Format>,
    reduced: &Path,
    reduced_format: Option<Format>,
    eps: f64,
) -> Result<(Report, i32)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Usage(format!("eps must lie in (0, 1), got {eps}")));
    }
    let start = Instant::now();
    let x = read_matrix(input, Format::resolve(input_format, input))?;
    let y = read_matrix(reduced, Format::resolve(reduced_format, reduced))?.to_dense();
    let read = start.elapsed();
    if x.rows() != y.rows() {
        return Err(CliError::Usage(format!(
            "row counts differ: input has {}, reduced has {}",
            x.rows(),
            y.rows()
        )));
    }
    let t = Instant::now();
    let attention = verify_data(&x, &y, eps)?;
    let verify = t.elapsed();
    let code = if attention.passes() {
        exit::OK
    } else {
        exit::BOUND_VIOLATED
    };
    let report = Report {
        schema: SCHEMA_VERSION,
        command: "verify",
        config: None,
        input: InputStats {
            n: x.rows(),
            d: x.cols(),
            nnz: x.nnz(),
            r_measured: attention.r_measured,
            radius: None,
        },
        output: OutputStats {
            m: y.cols(),
            method: None,
            seed: None,
            nonzero_weights: None,
            selected_indices: None,
            weights: None,
        },
        attention,
        timings_ms: Timings {
            read: millis(read),
            verify: millis(verify),
            total: millis(start.elapsed()),
            ..Timings::default()
        },
    };
    Ok((report, code))
}

/// Leverage scores of the columns of `X`, exact or sketched.
pub fn cmd_leverage(input: &Path, format: Option<Format>, exact: bool, cfg: &RunConfig) -> Result<Vec<f64>> {
    let x = read_matrix(input, Format::resolve(format, input))?;
    let a = x.transpose();
    let scores = if exact {
        exact_leverage(&a)?
    } else {
        cfg.validate()?;
        let rc = cfg.randomized();
        approx_leverage_with(&a, cfg.eps_sigma, cfg.effective_delta_sigma(), cfg.seed, &rc.leverage)?
    };
    Ok(scores.scores)
}

/// Parameter grid for `bench`; every list is crossed with the others.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default = "default_density")]
    pub density: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodArg>,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_density() -> Vec<f64> {
    vec![1.0]
}
fn default_methods() -> Vec<MethodArg> {
    vec![MethodArg::Rand]
}
fn default_r() -> f64 {
    0.05
}
fn default_eps() -> f64 {
    0.5
}
fn default_delta() -> f64 {
    0.05
}
fn default_repeats() -> usize {
    1
}

impl Sweep {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| format!("byte {}", s.start))
                .unwrap_or_else(|| "unknown position".into());
            CliError::parse(path, at, e.message().to_string())
        })
    }
}

/// One CSV row of a benchmark.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BenchRow {
    pub method: MethodArg,
    pub n: usize,
    pub d: usize,
    pub density: f64,
    pub repeat: usize,
    pub seed: u64,
    pub nnz: usize,
    pub m: Option<usize>,
    pub scoring_ms: Option<f64>,
    pub selection_ms: Option<f64>,
    pub total_ms: Option<f64>,
    pub sandwich_holds: Option<bool>,
    pub eps_star: Option<f64>,
    pub attention_inf_err: Option<f64>,
    pub attention_bound: Option<f64>,
    pub status: String,
}

/// Least-squares fit `total_ms = slope * nnz + intercept` over the median
/// time of each grid cell sharing `(method, n, density)`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AffineFit {
    pub method: MethodArg,
    pub n: usize,
    pub density: f64,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
    pub fits: Vec<AffineFit>,
}

pub fn fit_affine(xs: &[f64], ys: &[f64]) -> (f64, f64, Option<f64>) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, my, None);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if syy == 0.0 { None } else { Some(1.0 - ss_res / syy) };
    (slope, intercept, r2)
}

fn bench_cell(sweep: &Sweep, method: MethodArg, n: usize, d: usize, density: f64, repeat: usize) -> BenchRow {
    let seed = atsp_core::rng::derive_seed(sweep.seed, "bench", repeat as u64);
    let mut row = BenchRow {
        method,
        n,
        d,
        density,
        repeat,
        seed,
        nnz: 0,
        m: None,
        scoring_ms: None,
        selection_ms: None,
        total_ms: None,
        sandwich_holds: None,
        eps_star: None,
        attention_inf_err: None,
        attention_bound: None,
        status: "ok".into(),
    };
    let x = match generate(n, d, sweep.r, density, seed) {
        Ok(x) => x,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.nnz = x.nnz();
    let cfg = RunConfig {
        method,
        eps: sweep.eps,
        delta: sweep.delta,
        seed,
        radius: Some(sweep.r),
        validate_radius: false,
        ..RunConfig::default()
    };
    let start = Instant::now();
    let out = match run_pipeline(&x, &cfg) {
        Ok(out) => out,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.total_ms = Some(millis(start.elapsed()));
    row.scoring_ms = Some(millis(out.timings.scoring));
    row.selection_ms = Some(millis(out.timings.selection));
    row.m = Some(out.reduced.m());
    match verify_data(x.data(), out.reduced.data(), sweep.eps) {
        Ok(rep) => {
            row.sandwich_holds = Some(rep.sandwich_holds);
            row.eps_star = Some(rep.eps_star);
            row.attention_inf_err = Some(rep.attention_inf_err);
            row.attention_bound = Some(rep.attention_bound);
        }
        Err(e) => row.status = format!("verify error: {e}"),
    }
    row
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

pub fn run_bench(sweep: &Sweep) -> Result<BenchSummary> {
    if sweep.repeats == 0 {
        return Err(CliError::Usage("repeats must be positive".into()));
    }
    let mut rows = Vec::new();
    for &method in &sweep.methods {
        for &n in &sweep.n {
            for &density in &sweep.density {
                for &d in &sweep.d {
                    for repeat in 0..sweep.repeats {
                        rows.push(bench_cell(sweep, method, n, d, density, repeat));
                    }
                }
            }
        }
    }

    let mut fits = Vec::new();
    for &method in &sweep.methods {
        for &n in &sweep.n {
            for &density in &sweep.density {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for &d in &sweep.d {
                    let cell: Vec<&BenchRow> = rows
                        .iter()
                        .filter(|r| r.method == method && r.n == n && r.d == d && r.density == density)
                        .filter(|r| r.total_ms.is_some())
                        .collect();
                    if cell.is_empty() {
                        continue;
                    }
                    xs.push(median(cell.iter().map(|r| r.nnz as f64).collect()));
                    ys.push(median(cell.iter().filter_map(|r| r.total_ms).collect()));
                }
                if xs.is_empty() {
                    continue;
                }
                let (slope, intercept, r_squared) = fit_affine(&xs, &ys);
                fits.push(AffineFit {
                    method,
                    n,
                    density,
                    points: xs.len(),
                    slope,
                    intercept,
                    r_squared,
                });
            }
        }
    }
    Ok(BenchSummary { rows, fits })
}

/// Runs the sweep in `sweep_path` and writes one CSV row per run.
pub fn cmd_bench(sweep_path: &Path, output: &Path) -> Result<BenchSummary> {
    let text = fs::read_to_string(sweep_path).map_err(|e| CliError::io(sweep_path, e))?;
    let sweep = Sweep::parse(&text, sweep_path)?;
    let summary = run_bench(&sweep)?;
    let mut w = csv::Writer::from_path(output).map_err(|e| CliError::Usage(format!("{}: {e}", output.display())))?;
    for row in &summary.rows {
        w.serialize(row)
            .map_err(|e| CliError::Usage(format!("{}: {e}", output.display())))?;
    }
    w.flush().map_err(|e| CliError::io(output, e))?;
    Ok(summary)
}
