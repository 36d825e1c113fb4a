//! Proximal-gradient solvers for the corrected quadratic programs
//!
//! ```text
//! minimise  tr(B Q B') - 2 <B, L> + lambda ||B||_1   subject to ||B||_1 <= r
//! ```
//!
//! and their lambda-free, l1-constrained counterparts. `Q` may be indefinite
//! once the missingness correction is applied, so descent is enforced by a
//! backtracking line search rather than assumed.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Mat};
use crate::observation::{Moments, Scaling};

/// Entrywise `sign(x) max(|x| - tau, 0)`.
pub fn soft_threshold(x: &[f64], tau: f64) -> Vec<f64> {
    x.iter().map(|&v| soft(v, tau)).collect()
}

fn soft(v: f64, tau: f64) -> f64 {
    let m = v.abs() - tau;
    if m > 0.0 {
        m.copysign(v)
    } else {
        0.0
    }
}

/// Euclidean projection onto `{y : ||y||_1 <= r}`.
///
/// Uses the sort-based threshold search, which finds the exact `tau` with
/// `||soft_threshold(x, tau)||_1 = r` in `O(d log d)`.
pub fn project_l1_ball(x: &[f64], r: f64) -> Vec<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= r {
        return x.to_vec();
    }
    if r <= 0.0 {
        return vec![0.0; x.len()];
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).filter(|m| *m > 0.0).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - r) / (j + 1) as f64;
        if m > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    soft_threshold(x, tau.max(0.0))
}

/// Joint prox of `t ||.||_1` plus the indicator of the l1 ball of radius `r`.
///
/// Soft thresholding and the ball projection are both separable shrinkages
/// that keep signs and the ordering of magnitudes, so their composition is
/// the prox of the sum.
pub fn prox_step(x: &[f64], t: f64, r: f64) -> Vec<f64> {
    project_l1_ball(&soft_threshold(x, t), r)
}

fn prox_mat(x: &Mat, t: f64, r: f64) -> Mat {
    Mat::from_column_slice(x.nrows(), x.ncols(), &prox_step(x.as_slice(), t, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Penalised program over the ball `||B||_1 <= b0 sqrt(k)`.
    RegularizedBall,
    /// Unpenalised program over `||B||_1 <= radius`.
    Constrained,
    /// Plain LASSO on fully observed data.
    FullDataRegularized,
    /// l1-constrained least squares on fully observed data.
    FullDataConstrained,
}

impl Variant {
    pub fn is_penalised(self) -> bool {
        matches!(self, Variant::RegularizedBall | Variant::FullDataRegularized)
    }

    pub fn is_full_data(self) -> bool {
        matches!(self, Variant::FullDataRegularized | Variant::FullDataConstrained)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::RegularizedBall => "regularized_ball",
            Variant::Constrained => "constrained",
            Variant::FullDataRegularized => "full_data_regularized",
            Variant::FullDataConstrained => "full_data_constrained",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regularized_ball" => Ok(Variant::RegularizedBall),
            "constrained" => Ok(Variant::Constrained),
            "full_data_regularized" => Ok(Variant::FullDataRegularized),
            "full_data_constrained" => Ok(Variant::FullDataConstrained),
            other => Err(Error::InvalidInput(format!("unknown estimator variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed,
    Backtracking,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zero,
    Ridge,
    Given(Mat),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub variant: Variant,
    pub lambda: f64,
    pub b0: f64,
    /// Radius for the constrained variants.
    pub radius: Option<f64>,
    pub k_hint: usize,
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Step for [`StepRule::Fixed`]; defaults to `1 / (2 ||Q||_2)`.
    pub step: Option<f64>,
    pub tol: f64,
    pub init: Init,
}

impl EstimatorConfig {
    fn base(variant: Variant) -> Self {
        EstimatorConfig {
            variant,
            lambda: 0.0,
            b0: 1.0,
            radius: None,
            k_hint: 1,
            max_iters: 5000,
            step_rule: StepRule::Backtracking,
            step: None,
            tol: 1e-9,
            init: Init::Zero,
        }
    }

    pub fn regularized_ball(lambda: f64, b0: f64, k_hint: usize) -> Self {
        EstimatorConfig { lambda, b0, k_hint, ..Self::base(Variant::RegularizedBall) }
    }

    pub fn constrained(radius: f64) -> Self {
        EstimatorConfig { radius: Some(radius), ..Self::base(Variant::Constrained) }
    }

    pub fn full_data_regularized(lambda: f64) -> Self {
        EstimatorConfig { lambda, ..Self::base(Variant::FullDataRegularized) }
    }

    pub fn full_data_constrained(radius: f64) -> Self {
        EstimatorConfig { radius: Some(radius), ..Self::base(Variant::FullDataConstrained) }
    }

    /// Feasible-set radius; infinite for the unconstrained full-data LASSO.
    pub fn effective_radius(&self) -> Result<f64> {
        let r = match self.variant {
            Variant::RegularizedBall => self.b0 * (self.k_hint as f64).sqrt(),
            Variant::Constrained | Variant::FullDataConstrained => self
                .radius
                .ok_or_else(|| Error::InvalidInput("constrained variants need a radius".into()))?,
            Variant::FullDataRegularized => f64::INFINITY,
        };
        if r.is_nan() || r < 0.0 {
            return Err(Error::Infeasible(format!("ball radius {r} is negative")));
        }
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return invalid("tol must be positive");
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return invalid("lambda must be a finite nonnegative number");
        }
        if self.variant == Variant::RegularizedBall {
            if !(self.b0 > 0.0) {
                return invalid("b0 must be positive");
            }
            if self.k_hint == 0 {
                return invalid("k_hint must be at least 1");
            }
        }
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return invalid("step must be positive");
            }
        }
        self.effective_radius().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub b_hat: Mat,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub variant: Variant,
    pub lambda: f64,
    pub radius: f64,
    pub final_step: f64,
}

impl Estimate {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

fn check_dims(b: &Mat, m: &Moments) -> Result<()> {
    let p = m.dim();
    if b.shape() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{}, moments are {p}x{p}",
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Penalty weight in the moments' scaling: raw moments carry an overall
/// `(1 - delta)^2` factor, and the penalty carries the same one.
pub fn penalty_weight(m: &Moments, lambda: f64) -> f64 {
    match m.scaling {
        Scaling::Raw => (1.0 - m.delta).powi(2) * lambda,
        Scaling::Unbiased => lambda,
    }
}

fn smooth(b: &Mat, m: &Moments) -> f64 {
    (b * &m.q).dot(b) - 2.0 * b.dot(&m.l)
}

/// `tr(BQB') - 2<B, L>`, plus the scaled l1 penalty for penalised variants.
pub fn objective(b: &Mat, m: &Moments, lambda: f64, variant: Variant) -> Result<f64> {
    check_dims(b, m)?;
    let pen = if variant.is_penalised() {
        penalty_weight(m, lambda) * linalg::entrywise_l1(b)
    } else {
        0.0
    };
    Ok(smooth(b, m) + pen)
}

/// Gradient `2(BQ - L)` of the smooth part.
pub fn gradient(b: &Mat, m: &Moments) -> Result<Mat> {
    check_dims(b, m)?;
    Ok((b * &m.q - &m.l) * 2.0)
}

fn ridge_init(m: &Moments, radius: f64) -> Result<Mat> {
    let p = m.dim();
    let (lo, hi) = linalg::sym_eig_extremes(&m.q);
    let gamma = (-lo).max(0.0) + 1e-2 * hi.abs().max(1e-12);
    let reg = &m.q + Mat::identity(p, p) * gamma;
    let chol = Cholesky::new(reg).ok_or_else(|| Error::NotPositiveDefinite("ridge system".into()))?;
    // B (Q + gamma I) = L  <=>  (Q + gamma I) B' = L'
    let b = chol.solve(&m.l.transpose()).transpose();
    Ok(prox_mat(&b, 0.0, radius))
}

/// Run proximal gradient descent from the configured starting point.
pub fn solve(m: &Moments, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    let p = m.dim();
    if m.l.shape() != (p, p) {
        return Err(Error::DimensionMismatch("L must match Q".into()));
    }
    linalg::ensure_finite(&m.q, "Q")?;
    linalg::ensure_finite(&m.l, "L")?;
    if cfg.variant.is_full_data() && m.delta != 0.0 {
        return invalid(format!(
            "{} expects fully observed moments, got delta = {}",
            cfg.variant.as_str(),
            m.delta
        ));
    }
    let radius = cfg.effective_radius()?;
    let lam = if cfg.variant.is_penalised() { penalty_weight(m, cfg.lambda) } else { 0.0 };
    let q_norm = linalg::power_norm_sym(&m.q, 500);
    let scale = if q_norm > 0.0 && q_norm.is_finite() { q_norm } else { 1.0 };

    let mut b = match &cfg.init {
        Init::Zero => Mat::zeros(p, p),
        Init::Ridge => ridge_init(m, radius)?,
        Init::Given(b0) => {
            check_dims(b0, m)?;
            prox_mat(b0, 0.0, radius)
        }
    };
    let composite = |x: &Mat| smooth(x, m) + lam * linalg::entrywise_l1(x);

    let (mut eta, backtrack) = match cfg.step_rule {
        StepRule::Backtracking => (1.0 / scale, true),
        StepRule::Fixed => (cfg.step.unwrap_or(0.5 / scale), false),
    };
    let mut f_cur = composite(&b);
    let mut trace = vec![f_cur];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let g = (&b * &m.q - &m.l) * 2.0;
        let s_cur = smooth(&b, m);
        let next = loop {
            let x = prox_mat(&(&b - &g * eta), eta * lam, radius);
            if !backtrack {
                break Some(x);
            }
            let diff = &x - &b;
            let model = s_cur + g.dot(&diff) + diff.norm_squared() / (2.0 * eta);
            if smooth(&x, m) <= model && composite(&x) <= f_cur {
                break Some(x);
            }
            eta *= 0.5;
            if eta < f64::MIN_POSITIVE {
                break None;
            }
        };
        let Some(x) = next else {
            // no step size gives descent: already stationary to machine precision
            converged = true;
            break;
        };
        let f_new = composite(&x);
        if !f_new.is_finite() {
            return Err(Error::Diverged(format!(
                "objective became non-finite after {iterations} iterations with step {eta:e}; \
                 use the backtracking step rule or a smaller step"
            )));
        }
        let change = (f_cur - f_new).abs();
        let denom = f_cur.abs().max(f_new.abs()).max(f64::MIN_POSITIVE);
        let stalled = x == b;
        b = x;
        f_cur = f_new;
        trace.push(f_new);
        if stalled || change <= cfg.tol * denom {
            converged = true;
            break;
        }
    }

    Ok(Estimate {
        b_hat: b,
        objective_trace: trace,
        iterations,
        converged,
        variant: cfg.variant,
        lambda: cfg.lambda,
        radius,
        final_step: eta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub threshold: f64,
    pub kept: usize,
    pub false_positives: Option<usize>,
    pub false_negatives: Option<usize>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// Zero every entry with `|b| <= lambda`; compare supports with `truth` if given.
pub fn hard_threshold(b_hat: &Mat, lambda: f64, truth: Option<&Mat>) -> Result<(Mat, SupportReport)> {
    if !(lambda >= 0.0) {
        return invalid("threshold must be nonnegative");
    }
    let t = b_hat.map(|v| if v.abs() > lambda { v } else { 0.0 });
    let kept = linalg::nnz(&t);
    let mut report = SupportReport {
        threshold: lambda,
        kept,
        false_positives: None,
        false_negatives: None,
        precision: None,
        recall: None,
    };
    if let Some(b0) = truth {
        if b0.shape() != t.shape() {
            return Err(Error::DimensionMismatch("truth and estimate differ in shape".into()));
        }
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (est, tr) in t.iter().zip(b0.iter()) {
            match (*est != 0.0, *tr != 0.0) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        report.false_positives = Some(fp);
        report.false_negatives = Some(fn_);
        report.precision = Some(if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 });
        report.recall = Some(if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 });
    }
    Ok((t, report))
}
