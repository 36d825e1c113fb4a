//! Error-bound certificates and Monte Carlo checks of the conditions behind them.

use nalgebra::DVector;
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Mat};
use crate::observation::{apply_bernoulli_mask, bernoulli_mask_covariances, Moments, Scaling};
use crate::rng;
use crate::spectral::{self, GridConfig};
use crate::var_core::{simulate_with_burn_in, stationary_covariance, InnovationSpec, TransitionMatrix};

/// Unspecified universal constants of the error bounds. `c1` is carried for
/// completeness but enters no formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c0: f64,
    pub c1: f64,
    pub c_a: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { c0: 1.0, c1: 1.0, c_a: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub p: usize,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub b0: f64,
    pub vartheta0: f64,
    pub vartheta1: f64,
    pub vartheta2: f64,
    pub kappa_eps: f64,
    pub kappa0: f64,
    pub theta0: f64,
    pub h: f64,
    pub zeta: f64,
    pub phi: f64,
    pub phi0: f64,
    pub lambda_min: f64,
    /// The lambda the predicted errors are evaluated at.
    pub lambda: f64,
    pub s_choice: f64,
    pub sample_size_lhs: f64,
    pub sample_size_rhs: f64,
    pub sample_size_ok: bool,
    pub zeta_condition_ok: bool,
    pub predicted_f_error: f64,
    pub predicted_l1_error: f64,
    pub predicted_fp_bound: f64,
    pub success_probability: f64,
    /// Set when `b0 < ||B0||_F`, which the bounds assume away.
    pub b0_below_frobenius: bool,
    pub constants: Constants,
}

/// Inputs shared by [`theorem1_certificate`] and [`choose_s`].
#[derive(Debug, Clone)]
pub struct CertificateInput<'a> {
    pub b: &'a Mat,
    pub spec: &'a InnovationSpec,
    pub delta: f64,
    pub n: usize,
    pub b0: f64,
    pub lambda: Option<f64>,
    pub constants: Constants,
    pub grid: GridConfig,
}

struct Parts {
    p: usize,
    k: usize,
    log_p: f64,
    v: [f64; 3],
    kappa_eps: f64,
    kappa0: f64,
    theta0: f64,
    h: f64,
    zeta: f64,
}

fn parts(inp: &CertificateInput) -> Result<Parts> {
    let p = linalg::ensure_square(inp.b, "transition matrix")?;
    if inp.spec.dim() != p {
        return Err(Error::DimensionMismatch("innovation dimension differs from B".into()));
    }
    if p < 2 || inp.n < 2 {
        return invalid("n and p must both be at least 2");
    }
    if !(0.0..1.0).contains(&inp.delta) {
        return invalid(format!("delta = {} outside [0, 1)", inp.delta));
    }
    if !(inp.b0 > 0.0) {
        return invalid("b0 must be positive");
    }
    let c = inp.constants;
    if !(c.c0 > 0.0 && c.c_a > 0.0 && c.c1 > 0.0) {
        return invalid("constants must be positive");
    }
    let k = linalg::nnz(inp.b);
    if k == 0 {
        return invalid("k >= 1 required: the certificate is undefined for B = 0");
    }
    let d = spectral::diagnostics(inp.b, &inp.grid)?;

    let sigma = inp.spec.covariance();
    let sigma_norm = inp.spec.covariance_norm();
    let (lam_min, _) = linalg::sym_eig_extremes(sigma);
    let sigma_inv_norm = 1.0 / lam_min;
    let c_eps = inp.spec.ccp_constant();
    let kappa_eps = 36.0 * (c.c_a * c_eps * c_eps * sigma_norm).sqrt() * sigma_inv_norm;

    let kf = k as f64;
    let row = linalg::norm_2_to_inf(inp.b);
    let h = inp.b0 / (7.0 * (row * row + 1.0) * kf.sqrt());
    let zeta = (1.0 + inp.delta * d.theta0 * kf) / (h * kf);
    Ok(Parts {
        p,
        k,
        log_p: (p as f64).ln(),
        v: [d.vartheta0, d.vartheta1, d.vartheta2],
        kappa_eps,
        kappa0: d.kappa0,
        theta0: d.theta0,
        h,
        zeta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SChoice {
    pub s: f64,
    pub floor: u64,
    pub at_least_one: bool,
}

fn s_from_parts(inp: &CertificateInput, pt: &Parts) -> f64 {
    let kf = pt.k as f64;
    (1.0 - inp.delta).powi(2) / (pt.kappa_eps * pt.kappa0) * (4.0 * pt.h * kf)
        / (1.0 + 4.0 * kf * pt.theta0)
        * (inp.n as f64 / pt.log_p).sqrt()
}

/// Sparsity level used for the restricted-eigenvalue argument.
pub fn choose_s(inp: &CertificateInput) -> Result<SChoice> {
    let pt = parts(inp)?;
    let s = s_from_parts(inp, &pt);
    Ok(SChoice { s, floor: s.floor() as u64, at_least_one: s >= 1.0 })
}

/// Every quantity of the finite-sample error bound for the given design.
pub fn theorem1_certificate(inp: &CertificateInput) -> Result<Certificate> {
    let pt = parts(inp)?;
    let c = inp.constants;
    let sigma_inv_norm = 1.0 / linalg::sym_eig_extremes(inp.spec.covariance()).0;
    let kf = pt.k as f64;
    let keep2 = (1.0 - inp.delta).powi(2);
    let rate = (pt.log_p / inp.n as f64).sqrt();

    let phi = c.c0 * inp.b0 * kf.sqrt() / 7.0 * pt.kappa_eps * pt.kappa0 * pt.zeta / keep2 * rate;
    let phi0 = c.c0 * pt.v[0] * pt.v[0] * sigma_inv_norm;
    let lambda_min = 2.0 * phi / phi0;
    let lambda = inp.lambda.unwrap_or(lambda_min);

    let zeta_gap = pt.zeta / 27.0 - inp.delta * pt.theta0;
    let zeta_condition_ok = zeta_gap > 0.0;
    let lhs = (inp.n as f64 / pt.log_p).sqrt();
    let rhs = pt.kappa_eps * pt.kappa0 * pt.zeta / (keep2 * zeta_gap * zeta_gap);

    Ok(Certificate {
        p: pt.p,
        n: inp.n,
        k: pt.k,
        delta: inp.delta,
        b0: inp.b0,
        vartheta0: pt.v[0],
        vartheta1: pt.v[1],
        vartheta2: pt.v[2],
        kappa_eps: pt.kappa_eps,
        kappa0: pt.kappa0,
        theta0: pt.theta0,
        h: pt.h,
        zeta: pt.zeta,
        phi,
        phi0,
        lambda_min,
        lambda,
        s_choice: s_from_parts(inp, &pt),
        sample_size_lhs: lhs,
        sample_size_rhs: rhs,
        sample_size_ok: zeta_condition_ok && lhs >= rhs,
        zeta_condition_ok,
        predicted_f_error: 2.0 * kf.sqrt() * phi0 * lambda,
        predicted_l1_error: 16.0 * kf * phi0 * lambda,
        predicted_fp_bound: 112.0 * kf * phi0,
        success_probability: 1.0 - 10.0 / pt.p as f64,
        b0_below_frobenius: inp.b0 < inp.b.norm(),
        constants: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReSampler {
    /// Random unit vectors with `2s` nonzeros, plus every coordinate vector.
    SparseRandom,
    /// Coordinate vectors and normalised `e_i +- e_j` pairs.
    ExtremePoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `v'Qv - alpha ||v||^2 + tau ||v||_1^2` seen.
    pub worst_margin: f64,
    /// Smallest `v'Qv` over the sampled unit vectors.
    pub alpha_hat: f64,
    pub worst_vector: Vec<f64>,
}

/// Sampled check of `v'Qv >= alpha ||v||_2^2 - tau ||v||_1^2`.
pub fn check_re(
    q: &Mat,
    alpha: f64,
    tau: f64,
    sampler: ReSampler,
    trials: usize,
    s: usize,
    seed: u64,
) -> Result<ReReport> {
    let p = linalg::ensure_square(q, "Q")?;
    linalg::ensure_finite(q, "Q")?;
    if !linalg::is_symmetric(q, 1e-12) {
        return invalid("Q must be symmetric");
    }
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    if p == 0 {
        return invalid("Q is empty");
    }
    let mut vectors: Vec<DVector<f64>> = (0..p)
        .map(|i| {
            let mut e = DVector::zeros(p);
            e[i] = 1.0;
            e
        })
        .collect();
    match sampler {
        ReSampler::SparseRandom => {
            let width = (2 * s).clamp(1, p);
            let mut rng = rng::stream(seed, rng::STREAM_PROBE);
            for _ in 0..trials {
                let mut v = DVector::<f64>::zeros(p);
                for i in sample(&mut rng, p, width) {
                    v[i] = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                }
                let norm = v.norm();
                if norm > 0.0 {
                    vectors.push(v / norm);
                }
            }
        }
        ReSampler::ExtremePoints => {
            if s >= 1 {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..p {
                    for j in (i + 1)..p {
                        for sign in [1.0, -1.0] {
                            let mut v = DVector::zeros(p);
                            v[i] = h;
                            v[j] = sign * h;
                            vectors.push(v);
                        }
                    }
                }
            }
        }
    }
    let tol = 1e-12 * linalg::max_abs(q).max(1.0);
    let mut report = ReReport {
        samples: vectors.len(),
        violations: 0,
        worst_margin: f64::INFINITY,
        alpha_hat: f64::INFINITY,
        worst_vector: Vec::new(),
    };
    for v in &vectors {
        let quad = v.dot(&(q * v));
        let l1: f64 = v.iter().map(|x| x.abs()).sum();
        let margin = quad - alpha * v.norm_squared() + tau * l1 * l1;
        if margin < -tol {
            report.violations += 1;
        }
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_vector = v.iter().copied().collect();
        }
        report.alpha_hat = report.alpha_hat.min(quad);
    }
    Ok(report)
}

/// `max |B0 Q - L|` for moments in the unbiased scaling.
pub fn deviation_stat(b0: &Mat, m: &Moments) -> Result<f64> {
    if m.scaling == Scaling::Raw {
        return invalid("deviation statistic needs unbiased moments; raw moments carry a (1 - delta)^2 factor");
    }
    if b0.shape() != m.q.shape() {
        return Err(Error::DimensionMismatch("B0 and Q differ in shape".into()));
    }
    Ok(linalg::max_abs(&(b0 * &m.q - &m.l)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub delta: f64,
    pub n: usize,
    pub trials: usize,
    pub t_grid: Vec<f64>,
    pub c_a: f64,
    pub burn_in: usize,
    pub seed: u64,
    /// Reject directions with `||v||_0 < 2 ||B||_0` instead of flagging them.
    pub enforce_support_condition: bool,
    pub grid: GridConfig,
}

impl ConcentrationConfig {
    pub const MIN_TRIALS: usize = 100;

    pub fn new(delta: f64, n: usize, trials: usize, seed: u64) -> Self {
        ConcentrationConfig {
            delta,
            n,
            trials,
            t_grid: (1..=40).map(|i| i as f64 * 0.025).collect(),
            c_a: 1.0,
            burn_in: 0,
            seed,
            enforce_support_condition: false,
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: usize,
    pub trials: usize,
    /// Rows for `|v'(S - G)v| >= t vartheta1^2 ||Sigma||`.
    pub quadratic: Vec<TailRow>,
    /// Rows for `|v'((S - G) o I)v| >= t ||v||_0 vartheta2^2 ||Sigma||`.
    pub diagonal: Vec<TailRow>,
    pub median_abs_quadratic: f64,
    pub median_abs_diagonal: f64,
    pub max_abs_quadratic: f64,
    pub max_abs_diagonal: f64,
    /// Smallest `c_a` for which each bound curve dominates its empirical tail.
    pub min_feasible_c_a_quadratic: f64,
    pub min_feasible_c_a_diagonal: f64,
    /// Whether `||v||_0 >= 2 ||B||_0`.
    pub support_condition_holds: bool,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Monte Carlo tails of the masked quadratic-form deviations
/// `v'(X X'/n - Gamma_wbar(0)) v` and its diagonal part, against the
/// sub-exponential bound curves.
pub fn mc_concentration(
    b: &TransitionMatrix,
    spec: &InnovationSpec,
    v: &DVector<f64>,
    cfg: &ConcentrationConfig,
) -> Result<TailReport> {
    let p = b.dim();
    if v.len() != p {
        return Err(Error::DimensionMismatch("v must have length p".into()));
    }
    if (v.norm() - 1.0).abs() > 1e-9 {
        return invalid("v must be a unit vector");
    }
    if cfg.trials < ConcentrationConfig::MIN_TRIALS {
        return invalid(format!(
            "{} trials are too few for tail estimation (minimum {})",
            cfg.trials,
            ConcentrationConfig::MIN_TRIALS
        ));
    }
    if cfg.n == 0 || !(cfg.c_a > 0.0) {
        return invalid("n must be positive and c_a positive");
    }
    let v_nnz = v.iter().filter(|x| **x != 0.0).count();
    let support_condition_holds = v_nnz >= 2 * b.nnz();
    if cfg.enforce_support_condition && !support_condition_holds {
        return invalid(format!("||v||_0 = {v_nnz} is below 2 ||B||_0 = {}", 2 * b.nnz()));
    }

    let d = spectral::diagnostics(b.entries(), &cfg.grid)?;
    let gamma0 = stationary_covariance(b.entries(), spec.covariance())?;
    let (p_lag0, _) = bernoulli_mask_covariances(p, cfg.delta);
    let gbar = gamma0.component_mul(&p_lag0);

    let stats: Vec<(f64, f64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<(f64, f64)> {
            let seed = rng::derive_seed(cfg.seed, trial as u64, 0);
            let tr = simulate_with_burn_in(b, spec, cfg.n, seed, cfg.burn_in)?;
            let ms = apply_bernoulli_mask(&tr, cfg.delta, seed)?;
            let x = ms.values().columns(0, cfg.n);
            let s = (x * x.transpose()) / cfg.n as f64;
            let dev = s - &gbar;
            let quad = v.dot(&(&dev * v)).abs();
            let diag: f64 = (0..p).map(|i| v[i] * v[i] * dev[(i, i)]).sum::<f64>().abs();
            Ok((quad, diag))
        })
        .collect::<Result<_>>()?;

    let sigma_norm = spec.covariance_norm();
    let c_eps2 = spec.ccp_constant().powi(2);
    let rate = cfg.n as f64 * sigma_norm / (cfg.c_a * c_eps2);
    let scale_quad = d.vartheta1.powi(2) * sigma_norm;
    let scale_diag = v_nnz as f64 * d.vartheta2.powi(2) * sigma_norm;
    let trials = cfg.trials as f64;

    let tail = |pick: fn(&(f64, f64)) -> f64, scale: f64, extra: f64| -> (Vec<TailRow>, f64) {
        let mut need: f64 = 0.0;
        let rows = cfg
            .t_grid
            .iter()
            .map(|&t| {
                let thr = t * scale;
                let hits = stats.iter().filter(|s| pick(s) >= thr).count();
                let empirical = hits as f64 / trials;
                let m = (t * t).min(t);
                let bound = (2.0 * (-rate * extra * m).exp()).min(1.0);
                if empirical > 0.0 {
                    // 2 exp(-A m / c) >= f  <=>  c >= A m / ln(2 / f), A = rate * c_a
                    need = need.max(rate * cfg.c_a * extra * m / (2.0 / empirical).ln());
                }
                TailRow { t, empirical, bound }
            })
            .collect();
        (rows, need)
    };
    let (quadratic, ca_q) = tail(|s| s.0, scale_quad, 1.0);
    let (diagonal, ca_d) = tail(|s| s.1, scale_diag, v_nnz as f64);

    let mut q: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let mut dg: Vec<f64> = stats.iter().map(|s| s.1).collect();
    Ok(TailReport {
        n: cfg.n,
        trials: cfg.trials,
        quadratic,
        diagonal,
        max_abs_quadratic: q.iter().copied().fold(0.0, f64::max),
        max_abs_diagonal: dg.iter().copied().fold(0.0, f64::max),
        median_abs_quadratic: median(&mut q),
        median_abs_diagonal: median(&mut dg),
        min_feasible_c_a_quadratic: ca_q,
        min_feasible_c_a_diagonal: ca_d,
        support_condition_holds,
    })
}

/// Absolute difference between the two sides of the polarisation identity
///
/// ```text
/// 2u'(X Y'/n - G1) v = (X'u + Y'v)'(X'u + Y'v)/n - [u; v]' [[G0, G1], [G1', G0]] [u; v]
///                      - (u'X X'u/n - u'G0 u) - (v'Y Y'v/n - v'G0 v)
/// ```
pub fn cross_moment_identity_check(
    x: &Mat,
    y: &Mat,
    gamma0: &Mat,
    gamma1: &Mat,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let p = x.nrows();
    if y.shape() != x.shape()
        || gamma0.shape() != (p, p)
        || gamma1.shape() != (p, p)
        || u.len() != p
        || v.len() != p
    {
        return Err(Error::DimensionMismatch("identity inputs disagree in size".into()));
    }
    let n = x.ncols() as f64;
    let xu = x.transpose() * u;
    let yv = y.transpose() * v;
    let lhs = 2.0 * xu.dot(&yv) / n - 2.0 * u.dot(&(gamma1 * v));
    let sum = &xu + &yv;
    let block = u.dot(&(gamma0 * u)) + 2.0 * u.dot(&(gamma1 * v)) + v.dot(&(gamma0 * v));
    let rhs = sum.dot(&sum) / n
        - block
        - (xu.dot(&xu) / n - u.dot(&(gamma0 * u)))
        - (yv.dot(&yv) / n - v.dot(&(gamma0 * v)));
    Ok((lhs - rhs).abs())
}
