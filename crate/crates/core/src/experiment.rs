//! Config-driven scenario sweeps and their plots.
//!
//! A sweep is the Cartesian product of the grid axes in the fixed order
//! `p, k, n, delta, pattern, family, rho`; cell `c`, replication `r` is seeded
//! with `rng::derive_seed(master_seed, c, r)`. Replications run in parallel but
//! rows are written sorted by `(cell, rep)`, so the output bytes only depend on
//! the config (apart from the `wall_time_ms` column).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use plotters::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{hard_threshold, solve, EstimatorConfig};
use crate::io::write_json;
use crate::linalg::{self, Mat};
use crate::observation::{apply_bernoulli_mask, build_moments, Scaling};
use crate::rng;
use crate::spectral::GridConfig;
use crate::theory::{theorem1_certificate, Certificate, CertificateInput, Constants};
use crate::var_core::{
    generate_sparse_transition, simulate_with_burn_in, InnovationFamily, InnovationSpec, SupportPattern,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub p: Vec<usize>,
    pub k: Vec<usize>,
    pub n: Vec<usize>,
    pub delta: Vec<f64>,
    #[serde(default = "default_patterns")]
    pub pattern: Vec<SupportPattern>,
    #[serde(default = "default_families")]
    pub family: Vec<InnovationFamily>,
    /// Target spectral radius (entry magnitude for nilpotent patterns).
    #[serde(default = "default_rho")]
    pub rho: Vec<f64>,
}

fn default_patterns() -> Vec<SupportPattern> {
    vec![SupportPattern::RandomSparse]
}

fn default_families() -> Vec<InnovationFamily> {
    vec![InnovationFamily::Gaussian]
}

fn default_rho() -> Vec<f64> {
    vec![0.5]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaRule {
    Fixed { value: f64 },
    /// The smallest admissible value `2 Phi / phi0` from the certificate.
    Theory,
    /// `c sqrt(log p / n)`.
    Scaled { c: f64 },
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::Scaled { c: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub scaling: Scaling,
    pub tol: f64,
    pub max_iters: usize,
    /// `b0 = b0_factor * ||B0||_F`.
    pub b0_factor: f64,
    pub burn_in: usize,
    pub certify: bool,
    pub constants: Constants,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            scaling: Scaling::Unbiased,
            tol: 1e-9,
            max_iters: 5000,
            b0_factor: 1.0,
            burn_in: 0,
            certify: true,
            constants: Constants::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub master_seed: u64,
    pub replications: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit_plots: bool,
    pub grid: GridSpec,
    #[serde(default)]
    pub lambda: LambdaRule,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl ExperimentConfig {
    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        let empty = [
            ("p", g.p.is_empty()),
            ("k", g.k.is_empty()),
            ("n", g.n.is_empty()),
            ("delta", g.delta.is_empty()),
            ("pattern", g.pattern.is_empty()),
            ("family", g.family.is_empty()),
            ("rho", g.rho.is_empty()),
        ];
        if let Some((axis, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("grid axis '{axis}' is empty")));
        }
        if let Some(d) = g.delta.iter().find(|d| !(0.0..1.0).contains(*d)) {
            return Err(Error::Config(format!("delta = {d} outside [0, 1)")));
        }
        if g.n.contains(&0) {
            return Err(Error::Config("n must be positive".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let mut out = Vec::new();
        for &p in &g.p {
            for &k in &g.k {
                for &n in &g.n {
                    for &delta in &g.delta {
                        for &pattern in &g.pattern {
                            for &family in &g.family {
                                for &rho in &g.rho {
                                    let index = out.len();
                                    out.push(Cell { index, p, k, n, delta, pattern, family, rho });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub pattern: SupportPattern,
    pub family: InnovationFamily,
    pub rho: f64,
}

/// One line of `results.csv`. Numeric outcome fields are empty for failed rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub cell: usize,
    pub rep: usize,
    pub seed: u64,
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub pattern: String,
    pub family: String,
    pub rho: f64,
    pub status: String,
    pub failure: String,
    pub lambda: Option<f64>,
    pub err_f: Option<f64>,
    pub err_l1: Option<f64>,
    pub err_f_constrained: Option<f64>,
    pub err_l1_constrained: Option<f64>,
    pub false_positives: Option<usize>,
    pub false_negatives: Option<usize>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub iterations_constrained: Option<usize>,
    pub converged_constrained: Option<bool>,
    pub kappa0: Option<f64>,
    pub theta0: Option<f64>,
    pub phi0: Option<f64>,
    pub lambda_min: Option<f64>,
    pub fp_bound: Option<f64>,
    pub sample_size_ok: Option<bool>,
    pub wall_time_ms: f64,
}

impl ResultRow {
    fn blank(cell: &Cell, rep: usize, seed: u64) -> Self {
        ResultRow {
            cell: cell.index,
            rep,
            seed,
            p: cell.p,
            k: cell.k,
            n: cell.n,
            delta: cell.delta,
            pattern: cell.pattern.as_str().into(),
            family: cell.family.as_str().into(),
            rho: cell.rho,
            status: "ok".into(),
            failure: String::new(),
            lambda: None,
            err_f: None,
            err_l1: None,
            err_f_constrained: None,
            err_l1_constrained: None,
            false_positives: None,
            false_negatives: None,
            precision: None,
            recall: None,
            iterations: None,
            converged: None,
            iterations_constrained: None,
            converged_constrained: None,
            kappa0: None,
            theta0: None,
            phi0: None,
            lambda_min: None,
            fp_bound: None,
            sample_size_ok: None,
            wall_time_ms: 0.0,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn run_one(cfg: &ExperimentConfig, cell: &Cell, rep: usize) -> ResultRow {
    let start = Instant::now();
    let seed = rng::derive_seed(cfg.master_seed, cell.index as u64, rep as u64);
    let mut row = ResultRow::blank(cell, rep, seed);
    if let Err(e) = fill_row(cfg, cell, seed, &mut row) {
        row.status = "failed".into();
        row.failure = e.to_string();
    }
    row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}

fn fill_row(cfg: &ExperimentConfig, cell: &Cell, seed: u64, row: &mut ResultRow) -> Result<()> {
    let b = generate_sparse_transition(cell.pattern, cell.p, cell.k, cell.rho, seed)?;
    let b0_true = b.entries();
    let spec = InnovationSpec::new(cell.family, Mat::identity(cell.p, cell.p))?;
    let tr = simulate_with_burn_in(&b, &spec, cell.n, seed, cfg.solver.burn_in)?;
    let ms = apply_bernoulli_mask(&tr, cell.delta, seed)?;
    let m = build_moments(&ms, cfg.solver.scaling)?;
    let b0 = cfg.solver.b0_factor * b0_true.norm();
    let k = b.nnz().max(1);

    let needs_cert = cfg.solver.certify || cfg.lambda == LambdaRule::Theory;
    let cert: Option<Certificate> = if needs_cert && b.nnz() > 0 {
        Some(theorem1_certificate(&CertificateInput {
            b: b0_true,
            spec: &spec,
            delta: cell.delta,
            n: cell.n,
            b0: b0.max(f64::MIN_POSITIVE),
            lambda: None,
            constants: cfg.solver.constants,
            grid: GridConfig::default(),
        })?)
    } else {
        None
    };
    let lambda = match cfg.lambda {
        LambdaRule::Fixed { value } => value,
        LambdaRule::Scaled { c } => c * ((cell.p as f64).ln() / cell.n as f64).sqrt(),
        LambdaRule::Theory => cert
            .as_ref()
            .map(|c| c.lambda_min)
            .ok_or_else(|| Error::InvalidInput("theory lambda needs a nonzero B0".into()))?,
    };
    row.lambda = Some(lambda);

    let mut reg = EstimatorConfig::regularized_ball(lambda, b0.max(f64::MIN_POSITIVE), k);
    reg.tol = cfg.solver.tol;
    reg.max_iters = cfg.solver.max_iters;
    let est = solve(&m, &reg)?;
    let mut con = EstimatorConfig::constrained(linalg::entrywise_l1(b0_true));
    con.tol = cfg.solver.tol;
    con.max_iters = cfg.solver.max_iters;
    let est_c = solve(&m, &con)?;

    let diff = &est.b_hat - b0_true;
    let diff_c = &est_c.b_hat - b0_true;
    row.err_f = Some(diff.norm());
    row.err_l1 = Some(linalg::entrywise_l1(&diff));
    row.err_f_constrained = Some(diff_c.norm());
    row.err_l1_constrained = Some(linalg::entrywise_l1(&diff_c));
    row.iterations = Some(est.iterations);
    row.converged = Some(est.converged);
    row.iterations_constrained = Some(est_c.iterations);
    row.converged_constrained = Some(est_c.converged);

    let (_, support) = hard_threshold(&est.b_hat, lambda, Some(b0_true))?;
    row.false_positives = support.false_positives;
    row.false_negatives = support.false_negatives;
    row.precision = support.precision;
    row.recall = support.recall;

    if let Some(c) = cert {
        row.kappa0 = Some(c.kappa0);
        row.theta0 = Some(c.theta0);
        row.phi0 = Some(c.phi0);
        row.lambda_min = Some(c.lambda_min);
        row.fp_bound = Some(c.predicted_fp_bound);
        row.sample_size_ok = Some(c.sample_size_ok);
    }
    Ok(())
}

/// Run every (cell, replication) job on the current rayon pool; rows come
/// back sorted by `(cell, rep)`.
pub fn run_rows(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let jobs: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..cfg.replications).map(move |r| (c, r))).collect();
    Ok(jobs.par_iter().map(|&(c, r)| run_one(cfg, &cells[c], r)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub p: usize,
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub pattern: String,
    pub family: String,
    pub rho: f64,
    pub ok: usize,
    pub failed: usize,
    pub median_err_f: Option<f64>,
    pub iqr_err_f: Option<f64>,
    pub median_err_l1: Option<f64>,
    pub iqr_err_l1: Option<f64>,
    pub median_err_f_constrained: Option<f64>,
    pub iqr_err_f_constrained: Option<f64>,
    pub median_precision: Option<f64>,
    pub median_recall: Option<f64>,
    pub median_false_positives: Option<f64>,
}

/// Linear-interpolation quantile of a sample.
pub fn quantile(xs: &[f64], q: f64) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

fn iqr(xs: &[f64]) -> Option<f64> {
    Some(quantile(xs, 0.75)? - quantile(xs, 0.25)?)
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut by_cell: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by_cell.entry(r.cell).or_default().push(r);
    }
    by_cell
        .into_values()
        .map(|rs| {
            let first = rs[0];
            let ok: Vec<&&ResultRow> = rs.iter().filter(|r| r.is_ok()).collect();
            let col = |f: fn(&ResultRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
            let ef = col(|r| r.err_f);
            let el = col(|r| r.err_l1);
            let efc = col(|r| r.err_f_constrained);
            SummaryRow {
                cell: first.cell,
                p: first.p,
                k: first.k,
                n: first.n,
                delta: first.delta,
                pattern: first.pattern.clone(),
                family: first.family.clone(),
                rho: first.rho,
                ok: ok.len(),
                failed: rs.len() - ok.len(),
                median_err_f: quantile(&ef, 0.5),
                iqr_err_f: iqr(&ef),
                median_err_l1: quantile(&el, 0.5),
                iqr_err_l1: iqr(&el),
                median_err_f_constrained: quantile(&efc, 0.5),
                iqr_err_f_constrained: iqr(&efc),
                median_precision: quantile(&col(|r| r.precision), 0.5),
                median_recall: quantile(&col(|r| r.recall), 0.5),
                median_false_positives: quantile(&col(|r| r.false_positives.map(|x| x as f64)), 0.5),
            }
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::InvalidInput(format!("{}: {e} (missing or malformed columns?)", path.display()))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub rows: Vec<ResultRow>,
    pub plots: Option<PlotReport>,
}

/// Run the sweep and write `results.csv`, `summary.csv` and `config.json`
/// (plus plots when enabled) into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    let rows = run_rows(cfg)?;
    fs::create_dir_all(out_dir)?;
    let results = out_dir.join("results.csv");
    let summary = out_dir.join("summary.csv");
    write_rows(&results, &rows)?;
    write_rows(&summary, &summarize(&rows))?;
    write_json(&out_dir.join("config.json"), cfg)?;
    let plots = if cfg.emit_plots { Some(emit_plots(&results, &out_dir.join("plots"))?) } else { None };
    Ok(ExperimentOutput { results, summary, rows, plots })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeAnnotation {
    pub delta: f64,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotReport {
    pub files: Vec<PathBuf>,
    /// Log-log least-squares slope of median Frobenius error against n, per delta.
    pub slopes: Vec<SlopeAnnotation>,
}

/// Least-squares fit of `ln y = a + b ln x`, returned as `(b, a)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Some((b, my - b * mx))
}

// f64 keys for BTreeMap grouping; grid values are finite
#[derive(Debug, Clone, Copy)]
struct Key(f64);
impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

type Series = BTreeMap<Key, Vec<(f64, f64)>>;

/// Group ok rows by `outer`, then take the median of `value` per `inner`.
fn median_series(
    rows: &[&ResultRow],
    outer: fn(&ResultRow) -> f64,
    inner: fn(&ResultRow) -> f64,
    value: fn(&ResultRow) -> Option<f64>,
) -> Series {
    let mut groups: BTreeMap<Key, BTreeMap<Key, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        if let Some(v) = value(r) {
            groups.entry(Key(outer(r))).or_default().entry(Key(inner(r))).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|(o, inner)| {
            let pts = inner.into_iter().filter_map(|(x, vs)| quantile(&vs, 0.5).map(|m| (x.0, m))).collect();
            (o, pts)
        })
        .collect()
}

fn widen(lo: f64, hi: f64, log: bool) -> (f64, f64) {
    if lo < hi {
        if log {
            (lo / 1.2, hi * 1.2)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    } else if log {
        (lo / 2.0, hi * 2.0)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn bounds(series: &[(String, Vec<(f64, f64)>)]) -> Option<(f64, f64, f64, f64)> {
    let pts: Vec<&(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter()).collect();
    if pts.is_empty() {
        return None;
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(f(p)), hi.max(f(p))))
    };
    let (x0, x1) = fold(|p| p.0);
    let (y0, y1) = fold(|p| p.1);
    Some((x0, x1, y0, y1))
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn draw_lines(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
    log: bool,
) -> Result<()> {
    let (x0, x1, y0, y1) = bounds(series).ok_or_else(|| Error::Plot(format!("{title}: nothing to plot")))?;
    let (x0, x1) = widen(x0, x1, log);
    let (y0, y1) = widen(y0.max(if log { 1e-12 } else { f64::NEG_INFINITY }), y1, log);
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut builder = ChartBuilder::on(&root);
    builder.caption(title, ("sans-serif", 20)).margin(12).x_label_area_size(40).y_label_area_size(60);

    macro_rules! finish {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(plot_err)?;
            for (i, (label, pts)) in series.iter().enumerate() {
                let color = Palette99::pick(i).to_rgba();
                chart
                    .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                    .map_err(plot_err)?
                    .label(label.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
                chart
                    .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                    .map_err(plot_err)?;
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(plot_err)?;
        }};
    }
    if log {
        finish!(builder.build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale()).map_err(plot_err)?);
    } else {
        finish!(builder.build_cartesian_2d(x0..x1, y0..y1).map_err(plot_err)?);
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

fn write_series_csv(path: &Path, headers: [&str; 3], series: &[(f64, Vec<(f64, f64)>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(headers)?;
    for (g, pts) in series {
        for (x, y) in pts {
            w.write_record([g.to_string(), x.to_string(), y.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Error and support-recovery plots from a results file, each as an SVG with
/// the plotted medians next to it as CSV.
pub fn emit_plots(results: &Path, out_dir: &Path) -> Result<PlotReport> {
    let rows = read_results(results)?;
    if rows.is_empty() {
        return Err(Error::InvalidInput("no rows".into()));
    }
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.is_ok()).collect();
    if ok.is_empty() {
        return Err(Error::InvalidInput("no successful rows to plot".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    let err_n = median_series(&ok, |r| r.delta, |r| r.n as f64, |r| r.err_f);
    let err_n: Vec<(f64, Vec<(f64, f64)>)> = err_n.into_iter().map(|(k, v)| (k.0, v)).collect();
    let slopes: Vec<SlopeAnnotation> = err_n
        .iter()
        .filter_map(|(d, pts)| {
            loglog_slope(pts).map(|(slope, intercept)| SlopeAnnotation {
                delta: *d,
                slope,
                intercept,
                points: pts.len(),
            })
        })
        .collect();
    let labelled: Vec<(String, Vec<(f64, f64)>)> = err_n
        .iter()
        .map(|(d, pts)| {
            let label = match slopes.iter().find(|s| s.delta == *d) {
                Some(s) => format!("delta={d} slope={:.3}", s.slope),
                None => format!("delta={d}"),
            };
            (label, pts.clone())
        })
        .collect();
    let svg = out_dir.join("error_vs_n.svg");
    draw_lines(&svg, "median Frobenius error vs n", "n", "median ||B_hat - B0||_F", &labelled, true)?;
    write_series_csv(&out_dir.join("error_vs_n.csv"), ["delta", "n", "median_err_f"], &err_n)?;
    files.push(svg);

    let err_d = median_series(&ok, |r| r.n as f64, |r| r.delta, |r| r.err_f);
    let err_d: Vec<(f64, Vec<(f64, f64)>)> = err_d.into_iter().map(|(k, v)| (k.0, v)).collect();
    let labelled: Vec<(String, Vec<(f64, f64)>)> =
        err_d.iter().map(|(n, pts)| (format!("n={n}"), pts.clone())).collect();
    let svg = out_dir.join("error_vs_delta.svg");
    draw_lines(&svg, "median Frobenius error vs delta", "delta", "median ||B_hat - B0||_F", &labelled, false)?;
    write_series_csv(&out_dir.join("error_vs_delta.csv"), ["n", "delta", "median_err_f"], &err_d)?;
    files.push(svg);

    let prec = median_series(&ok, |r| r.delta, |r| r.n as f64, |r| r.precision);
    let rec = median_series(&ok, |r| r.delta, |r| r.n as f64, |r| r.recall);
    let mut labelled = Vec::new();
    let mut table = Vec::new();
    for (d, pts) in &prec {
        labelled.push((format!("precision delta={}", d.0), pts.clone()));
        table.push((d.0, pts.clone()));
    }
    for (d, pts) in &rec {
        labelled.push((format!("recall delta={}", d.0), pts.clone()));
    }
    let svg = out_dir.join("support_vs_n.svg");
    draw_lines(&svg, "support recovery vs n", "n", "median precision / recall", &labelled, false)?;
    let mut w = csv::Writer::from_path(out_dir.join("support_vs_n.csv"))?;
    w.write_record(["delta", "n", "median_precision", "median_recall"])?;
    for (d, pts) in &table {
        let recall = &rec[&Key(*d)];
        for ((n, p), (_, r)) in pts.iter().zip(recall) {
            w.write_record([d.to_string(), n.to_string(), p.to_string(), r.to_string()])?;
        }
    }
    w.flush()?;
    files.push(svg);

    write_json(&out_dir.join("slopes.json"), &slopes)?;
    Ok(PlotReport { files, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
scenario = "smoke"
master_seed = 11
replications = 2

[grid]
p = [5]
k = [4]
n = [200, 400]
delta = [0.0, 0.2]

[lambda]
rule = "scaled"
c = 2.0
"#;

    #[test]
    fn parses_toml_and_json() {
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        assert_eq!(cfg.cells().len(), 4);
        assert_eq!(cfg.grid.pattern, vec![SupportPattern::RandomSparse]);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::parse(&json).unwrap(), cfg);
        assert!(ExperimentConfig::parse("scenario = 1").is_err());
        let bad = SMALL.replace("replications = 2", "replications = 0");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn failed_cells_are_recorded() {
        let cfg = ExperimentConfig::parse(&SMALL.replace("k = [4]", "k = [26]")).unwrap();
        let rows = run_rows(&cfg).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.status == "failed" && !r.failure.is_empty()));
        let s = summarize(&rows);
        assert_eq!(s[0].failed, 2);
        assert_eq!(s[0].median_err_f, None);
    }

    #[test]
    fn rows_are_sorted_and_deterministic() {
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        let a = run_rows(&cfg).unwrap();
        let keys: Vec<(usize, usize)> = a.iter().map(|r| (r.cell, r.rep)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let b = run_rows(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(ResultRow { wall_time_ms: 0.0, ..x.clone() }, ResultRow { wall_time_ms: 0.0, ..y.clone() });
        }
        assert!(a.iter().all(|r| r.is_ok()), "{:?}", a.iter().find(|r| !r.is_ok()));
    }

    #[test]
    fn plots_from_small_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::parse(SMALL).unwrap();
        cfg.emit_plots = true;
        let out = run_experiment(&cfg, dir.path()).unwrap();
        let report = out.plots.unwrap();
        assert_eq!(report.files.len(), 3);
        assert_eq!(report.slopes.len(), 2);
        let svg = fs::read_to_string(&report.files[0]).unwrap();
        assert!(svg.contains("<svg") && svg.contains("slope="));

        let empty = dir.path().join("empty.csv");
        fs::write(&empty, "").unwrap();
        assert!(emit_plots(&empty, dir.path()).unwrap_err().to_string().contains("no rows"));
        let missing = dir.path().join("missing.csv");
        fs::write(&missing, "cell,rep\n0,0\n").unwrap();
        assert!(emit_plots(&missing, dir.path()).is_err());
    }

    #[test]
    fn quantiles() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.5));
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]), Some(2.0));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [500.0, 1000.0, 2000.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.5))).collect();
        let (b, a) = loglog_slope(&pts).unwrap();
        assert!((b + 0.5).abs() < 1e-12);
        assert!((a - 3f64.ln()).abs() < 1e-10);
        assert!(loglog_slope(&pts[..1]).is_none());
    }
}
