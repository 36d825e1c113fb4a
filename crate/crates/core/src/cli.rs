//! Command-line front end. Exit codes: 0 success, 1 usage or input error,
//! 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{hard_threshold, solve, EstimatorConfig, Variant};
use crate::experiment::{emit_plots, run_experiment, ExperimentConfig};
use crate::io;
use crate::linalg::{self, Mat};
use crate::observation::{apply_bernoulli_mask, build_moments, Scaling};
use crate::rng;
use crate::spectral::{basu_bounds, GridConfig};
use crate::theory::{
    check_re, deviation_stat, mc_concentration, theorem1_certificate, CertificateInput, ConcentrationConfig,
    Constants, ReSampler,
};
use crate::var_core::{
    generate_sparse_transition, simulate_with_burn_in, stationary_covariance, InnovationFamily, InnovationSpec,
    SupportPattern, TransitionMatrix,
};

pub const THREADS_ENV: &str = "VARMISS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "varmiss", version, about = "Sparse VAR(1) estimation from randomly missing observations")]
pub struct Cli {
    /// Experiment config (TOML or JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; results go to stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to $VARMISS_THREADS, then all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sparse transition matrix, simulate a path and mask it
    Simulate(SimulateArgs),
    /// Fit a transition matrix to a masked series
    Estimate(EstimateArgs),
    /// Unit-circle quantities and norm bounds for a matrix
    Diagnose(DiagnoseArgs),
    /// Error-bound certificate for a design
    Certify(CertifyArgs),
    /// Monte Carlo checks: restricted eigenvalues, deviation, concentration
    Verify(VerifyArgs),
    /// Run a configured sweep
    Experiment,
    /// Plot a results file
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "random_sparse")]
    pub pattern: SupportPattern,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value = "gaussian")]
    pub family: InnovationFamily,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Directory written by `simulate` (values.csv, mask.csv, meta.json)
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "regularized_ball")]
    pub variant: Variant,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub k_hint: usize,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, value_enum, default_value_t = ScalingArg::Unbiased)]
    pub scaling: ScalingArg,
    /// Hard-threshold level (defaults to lambda)
    #[arg(long)]
    pub threshold: Option<f64>,
    /// True matrix, for support comparison
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScalingArg {
    Raw,
    Unbiased,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Raw => Scaling::Raw,
            ScalingArg::Unbiased => Scaling::Unbiased,
        }
    }
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Matrix as CSV or JSON descriptor
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub refine_tol: f64,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub n: usize,
    /// Defaults to ||B||_F
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "gaussian")]
    pub family: InnovationFamily,
    #[arg(long, default_value_t = 1.0)]
    pub c0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_a: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Harness {
    Re,
    Deviation,
    Concentration,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub harness: Harness,
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Half the sparsity of the sampled directions (re harness)
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    #[arg(long, default_value = "gaussian")]
    pub family: InnovationFamily,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub results: PathBuf,
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn thread_count(cli: &Cli) -> Result<Option<usize>> {
    if let Some(t) = cli.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidInput(format!("{THREADS_ENV}='{v}' is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count(cli)? {
        if t == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => simulate_cmd(cli, a),
        Command::Estimate(a) => estimate_cmd(cli, a),
        Command::Diagnose(a) => diagnose_cmd(cli, a),
        Command::Certify(a) => certify_cmd(cli, a),
        Command::Verify(a) => verify_cmd(cli, a),
        Command::Experiment => experiment_cmd(cli),
        Command::Plot(a) => plot_cmd(cli, a),
    })
}

fn emit<T: Serialize>(cli: &Cli, file: &str, value: &T) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            io::write_json(&dir.join(file), value)
        }
        None => {
            print_json(value)
        }
    }
}

/// Pretty JSON on stdout; a closed pipe (`| head`) is not an error.
fn print_json<T: Serialize>(value: &T) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let res = serde_json::to_writer_pretty(&mut out, value)
        .map_err(std::io::Error::from)
        .and_then(|_| writeln!(out));
    match res {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    cli.out.as_deref().ok_or_else(|| Error::InvalidInput("--out DIR is required for this command".into()))
}

fn simulate_cmd(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let dir = out_dir(cli)?;
    let seed = cli.seed.unwrap_or(0);
    let b = generate_sparse_transition(a.pattern, a.p, a.k, a.rho, seed)?;
    let spec = InnovationSpec::new(a.family, Mat::identity(a.p, a.p))?;
    let tr = simulate_with_burn_in(&b, &spec, a.n, seed, a.burn_in)?;
    let ms = apply_bernoulli_mask(&tr, a.delta, seed)?;
    fs::create_dir_all(dir)?;
    io::write_json(&dir.join("transition.json"), &io::MatrixDescriptor::from_transition(&b))?;
    io::write_matrix_csv(&dir.join("transition.csv"), b.entries())?;
    io::write_matrix_csv(&dir.join("trajectory.csv"), tr.states())?;
    io::write_masked_series(&dir.join("masked"), &ms)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn estimate_cmd(cli: &Cli, a: &EstimateArgs) -> Result<()> {
    let ms = io::read_masked_series(&a.data)?;
    let scaling = Scaling::from(a.scaling);
    let moments = build_moments(&ms, scaling)?;
    let mut cfg = match a.variant {
        Variant::RegularizedBall => {
            let b0 = a.b0.ok_or_else(|| Error::InvalidInput("--b0 is required for regularized_ball".into()))?;
            EstimatorConfig::regularized_ball(a.lambda, b0, a.k_hint)
        }
        Variant::FullDataRegularized => EstimatorConfig::full_data_regularized(a.lambda),
        Variant::Constrained | Variant::FullDataConstrained => {
            let r = a.radius.ok_or_else(|| Error::InvalidInput("--radius is required for constrained variants".into()))?;
            let mut c = EstimatorConfig::constrained(r);
            c.variant = a.variant;
            c
        }
    };
    cfg.lambda = a.lambda;
    let est = solve(&moments, &cfg)?;
    let truth = a.truth.as_deref().map(io::read_matrix).transpose()?;
    let (_, report) = hard_threshold(&est.b_hat, a.threshold.unwrap_or(a.lambda), truth.as_ref())?;
    match &cli.out {
        Some(dir) => {
            io::write_estimate(dir, "estimate", &est)?;
            io::write_json(&dir.join("support.json"), &report)
        }
        None => match cli.format {
            Format::Csv => print_matrix_csv(&est.b_hat),
            Format::Json => {
                print_json(&io::EstimateMeta::from(&est))
            }
        },
    }
}

fn print_matrix_csv(m: &Mat) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(std::io::stdout());
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn diagnose_cmd(cli: &Cli, a: &DiagnoseArgs) -> Result<()> {
    let b = io::read_matrix(&a.matrix)?;
    let grid = GridConfig { grid_points: a.grid, refine_tol: a.refine_tol, ..GridConfig::default() };
    let report = basu_bounds(&b, &grid)?;
    match (&cli.out, cli.format) {
        (Some(dir), _) => {
            fs::create_dir_all(dir)?;
            io::write_json(&dir.join("diagnostics.json"), &report.diagnostics)?;
            io::write_bound_report_csv(&dir.join("bounds.csv"), &report)
        }
        (None, Format::Json) => {
            print_json(&report)
        }
        (None, Format::Csv) => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["bound", "lhs", "rhs", "applicable", "satisfied"])?;
            for c in &report.checks {
                w.write_record([
                    c.name.clone(),
                    c.lhs.to_string(),
                    c.rhs.to_string(),
                    c.applicable.to_string(),
                    c.satisfied.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn identity_spec(family: InnovationFamily, p: usize) -> Result<InnovationSpec> {
    InnovationSpec::new(family, Mat::identity(p, p))
}

fn certify_cmd(cli: &Cli, a: &CertifyArgs) -> Result<()> {
    let b = io::read_matrix(&a.matrix)?;
    let spec = identity_spec(a.family, b.nrows())?;
    let cert = theorem1_certificate(&CertificateInput {
        b: &b,
        spec: &spec,
        delta: a.delta,
        n: a.n,
        b0: a.b0.unwrap_or_else(|| b.norm()),
        lambda: a.lambda,
        constants: Constants { c0: a.c0, c1: a.c1, c_a: a.c_a },
        grid: GridConfig::default(),
    })?;
    if cert.b0_below_frobenius {
        eprintln!("warning: b0 < ||B||_F, the bounds do not apply");
    }
    emit(cli, "certificate.json", &cert)
}

#[derive(Debug, Serialize)]
struct DeviationSummary {
    n: usize,
    delta: f64,
    trials: usize,
    median: f64,
    max: f64,
}

fn verify_cmd(cli: &Cli, a: &VerifyArgs) -> Result<()> {
    let b = TransitionMatrix::new(io::read_matrix(&a.matrix)?)?;
    let p = b.dim();
    let spec = identity_spec(a.family, p)?;
    let seed = cli.seed.unwrap_or(0);
    match a.harness {
        Harness::Re => {
            let tr = simulate_with_burn_in(&b, &spec, a.n, seed, 0)?;
            let ms = apply_bernoulli_mask(&tr, a.delta, seed)?;
            let m = build_moments(&ms, Scaling::Unbiased)?;
            let gamma0 = stationary_covariance(b.entries(), spec.covariance())?;
            let alpha = linalg::sym_eig_extremes(&gamma0).0 / 2.0;
            let report = check_re(&m.q, alpha, 0.0, ReSampler::SparseRandom, a.trials, a.s, seed)?;
            emit(cli, "re.json", &report)
        }
        Harness::Deviation => {
            use rayon::prelude::*;
            let stats: Vec<f64> = (0..a.trials)
                .into_par_iter()
                .map(|t| -> Result<f64> {
                    let s = rng::derive_seed(seed, t as u64, 0);
                    let tr = simulate_with_burn_in(&b, &spec, a.n, s, 0)?;
                    let ms = apply_bernoulli_mask(&tr, a.delta, s)?;
                    deviation_stat(b.entries(), &build_moments(&ms, Scaling::Unbiased)?)
                })
                .collect::<Result<_>>()?;
            let summary = DeviationSummary {
                n: a.n,
                delta: a.delta,
                trials: a.trials,
                median: crate::experiment::quantile(&stats, 0.5).unwrap_or(f64::NAN),
                max: stats.iter().copied().fold(0.0, f64::max),
            };
            emit(cli, "deviation.json", &summary)
        }
        Harness::Concentration => {
            let v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
            let cfg = ConcentrationConfig::new(a.delta, a.n, a.trials, seed);
            let report = mc_concentration(&b, &spec, &v, &cfg)?;
            if !report.support_condition_holds {
                eprintln!("warning: ||v||_0 < 2 ||B||_0; the tail bound's support condition does not hold");
            }
            match &cli.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    io::write_tail_csv(&dir.join("tails.csv"), &report)?;
                    io::write_json(&dir.join("concentration.json"), &report)
                }
                None => emit(cli, "concentration.json", &report),
            }
        }
    }
}

fn experiment_cmd(cli: &Cli) -> Result<()> {
    let path = cli.config.as_deref().ok_or_else(|| Error::InvalidInput("--config PATH is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::InvalidInput("no output directory: pass --out or set output_dir".into()))?;
    let out = run_experiment(&cfg, &dir)?;
    let failed = out.rows.iter().filter(|r| !r.is_ok()).count();
    eprintln!("{} rows ({failed} failed) -> {}", out.rows.len(), out.results.display());
    if let Some(plots) = &out.plots {
        for s in &plots.slopes {
            eprintln!("delta={} log-log slope {:.4}", s.delta, s.slope);
        }
    }
    Ok(())
}

fn plot_cmd(cli: &Cli, a: &PlotArgs) -> Result<()> {
    let dir = out_dir(cli)?;
    let report = emit_plots(&a.results, dir)?;
    for f in &report.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}
