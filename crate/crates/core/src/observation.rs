//! Bernoulli missingness and the bias-corrected sample moments.
//!
//! Every estimator consumes the pair `(Q, L)` built here: `Q` estimates the
//! lag-0 autocovariance and `L` the transposed lag-1 autocovariance of the
//! fully observed process, after undoing the mask's effect by Hadamard
//! division with the mask autocovariances.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Mat};
use crate::rng;
use crate::var_core::Trajectory;

/// Partially observed path: `values = W * mask` entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSeries {
    values: Mat,
    mask: DMatrix<bool>,
    pub delta: f64,
    pub seed: u64,
}

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..1.0).contains(&delta) {
        Ok(())
    } else {
        invalid(format!("missing probability must lie in [0, 1), got {delta}"))
    }
}

impl MaskedSeries {
    pub fn from_parts(values: Mat, mask: DMatrix<bool>, delta: f64, seed: u64) -> Result<Self> {
        check_delta(delta)?;
        if values.shape() != mask.shape() {
            return Err(Error::DimensionMismatch("values and mask shapes differ".into()));
        }
        if values.ncols() < 2 {
            return invalid("series needs at least two columns");
        }
        linalg::ensure_finite(&values, "observed values")?;
        if values.iter().zip(mask.iter()).any(|(v, m)| !m && *v != 0.0) {
            return invalid("values must be zero wherever the mask is zero");
        }
        Ok(MaskedSeries { values, mask, delta, seed })
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.values.ncols() - 1
    }

    pub fn observed_fraction(&self) -> f64 {
        let kept = self.mask.iter().filter(|m| **m).count();
        kept as f64 / self.mask.len() as f64
    }

    /// Plug-in `1 - observed fraction`. The estimators themselves take the
    /// missing probability as known; this is for pipelines that do not.
    pub fn estimate_delta(&self) -> f64 {
        1.0 - self.observed_fraction()
    }

    pub fn regressors(&self) -> Mat {
        self.values.columns(0, self.horizon()).into_owned()
    }

    pub fn responses(&self) -> Mat {
        self.values.columns(1, self.horizon()).into_owned()
    }
}

/// Keep each entry independently with probability `1 - delta`.
pub fn apply_bernoulli_mask(traj: &Trajectory, delta: f64, seed: u64) -> Result<MaskedSeries> {
    check_delta(delta)?;
    let (p, cols) = traj.states().shape();
    let mut rng = rng::stream(seed, rng::STREAM_MASK);
    // column-major draw order: entry (i, t) is the (t * p + i)-th draw
    let mask = DMatrix::from_iterator(p, cols, (0..p * cols).map(|_| !rng.random_bool(delta)));
    apply_mask(traj.states(), mask, delta, seed)
}

/// Multiply a path by a given binary mask.
pub fn apply_mask(w: &Mat, mask: DMatrix<bool>, delta: f64, seed: u64) -> Result<MaskedSeries> {
    if w.shape() != mask.shape() {
        return Err(Error::DimensionMismatch("path and mask shapes differ".into()));
    }
    let values = w.zip_map(&mask, |x, keep| if keep { x } else { 0.0 });
    MaskedSeries::from_parts(values, mask, delta, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// `Q = (X X' - delta diag(X X')) / n`, `L = Y X' / n`.
    Raw,
    /// Raw moments divided by `(1 - delta)^2`, so that `E Q = Gamma_w(0)`.
    Unbiased,
}

/// Corrected sample moments for the quadratic program `tr(BQB') - 2<B, L>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub q: Mat,
    pub l: Mat,
    /// Diagonal of `D = (diag(X X') / n)^{1/2}`.
    pub d_bar: DVector<f64>,
    pub delta: f64,
    pub scaling: Scaling,
    pub n: usize,
}

impl Moments {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Population plug-in `Q = Gamma_w(0)`, `L = Gamma_w(1)'`.
    pub fn population(gamma0: &Mat, gamma1: &Mat) -> Result<Self> {
        if gamma0.shape() != gamma1.shape() || gamma0.nrows() != gamma0.ncols() {
            return Err(Error::DimensionMismatch("autocovariances must be square and equal-sized".into()));
        }
        Ok(Moments {
            q: gamma0.clone(),
            l: gamma1.transpose(),
            d_bar: gamma0.diagonal().map(|x| x.max(0.0).sqrt()),
            delta: 0.0,
            scaling: Scaling::Unbiased,
            n: usize::MAX,
        })
    }

    /// Moments of the fully observed path (missing probability zero).
    pub fn full_data(traj: &Trajectory) -> Result<Self> {
        let all = DMatrix::from_element(traj.dim(), traj.horizon() + 1, true);
        let ms = apply_mask(traj.states(), all, 0.0, traj.seed)?;
        build_moments(&ms, Scaling::Unbiased)
    }

    /// The same moments in the other scaling.
    pub fn rescaled(&self, scaling: Scaling) -> Moments {
        let f = (1.0 - self.delta).powi(2);
        let factor = match (self.scaling, scaling) {
            (a, b) if a == b => 1.0,
            (Scaling::Raw, Scaling::Unbiased) => 1.0 / f,
            _ => f,
        };
        Moments {
            q: &self.q * factor,
            l: &self.l * factor,
            d_bar: self.d_bar.clone(),
            delta: self.delta,
            scaling,
            n: self.n,
        }
    }
}

/// Mask autocovariances of the i.i.d. Bernoulli process:
/// `P = (1-d)^2 1 + d(1-d) I` at lag 0 and `(1-d)^2 1` at lag 1.
pub fn bernoulli_mask_covariances(p: usize, delta: f64) -> (Mat, Mat) {
    let keep2 = (1.0 - delta).powi(2);
    let lag0 = Mat::from_fn(p, p, |i, j| if i == j { keep2 + delta * (1.0 - delta) } else { keep2 });
    (lag0, Mat::from_element(p, p, keep2))
}

fn gram(ms: &MaskedSeries) -> Result<(Mat, Mat, usize)> {
    let n = ms.horizon();
    if n == 0 || ms.dim() == 0 {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let x = ms.regressors();
    let y = ms.responses();
    let xx = &x * x.transpose();
    let yx = &y * x.transpose();
    Ok((xx, yx, n))
}

fn d_bar(xx: &Mat, n: usize) -> DVector<f64> {
    xx.diagonal().map(|v| (v / n as f64).sqrt())
}

/// Bias-corrected moments in the requested scaling.
pub fn build_moments(ms: &MaskedSeries, scaling: Scaling) -> Result<Moments> {
    check_delta(ms.delta)?;
    let (xx, yx, n) = gram(ms)?;
    let nf = n as f64;
    let delta = ms.delta;
    let (q, l) = match scaling {
        Scaling::Raw => {
            let mut q = &xx / nf;
            for i in 0..q.nrows() {
                q[(i, i)] -= delta * xx[(i, i)] / nf;
            }
            (q, &yx / nf)
        }
        Scaling::Unbiased => {
            let (lag0, _) = bernoulli_mask_covariances(ms.dim(), delta);
            let q = (&xx / nf).component_div(&lag0);
            let l = &yx / ((1.0 - delta).powi(2) * nf);
            (q, l)
        }
    };
    Ok(Moments {
        q: linalg::symmetrize(&q),
        l,
        d_bar: d_bar(&xx, n),
        delta,
        scaling,
        n,
    })
}

/// Moments for an arbitrary covariance-stationary mask process independent
/// of the signal, given its lag-0 and lag-1 autocovariances (no zero entries).
pub fn build_moments_general(ms: &MaskedSeries, gamma_m0: &Mat, gamma_m1: &Mat) -> Result<Moments> {
    let p = ms.dim();
    for (name, g) in [("lag-0", gamma_m0), ("lag-1", gamma_m1)] {
        if g.shape() != (p, p) {
            return Err(Error::DimensionMismatch(format!("{name} mask autocovariance must be {p}x{p}")));
        }
        if g.iter().any(|x| *x == 0.0 || !x.is_finite()) {
            return invalid(format!("{name} mask autocovariance has a zero or non-finite entry"));
        }
    }
    let (xx, yx, n) = gram(ms)?;
    let nf = n as f64;
    let q = (&xx / nf).component_div(gamma_m0);
    // L' = (X Y' / n) / Gamma_m(1)
    let l = (&yx / nf).component_div(&gamma_m1.transpose());
    Ok(Moments {
        q: linalg::symmetrize(&q),
        l,
        d_bar: d_bar(&xx, n),
        delta: ms.delta,
        scaling: Scaling::Unbiased,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var_core::{simulate, InnovationSpec, TransitionMatrix};

    fn trajectory(n: usize, seed: u64) -> Trajectory {
        let b = Mat::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.0, 0.3, -0.4, 0.1, 0.0, 0.6]);
        let b = TransitionMatrix::new(b).unwrap();
        simulate(&b, &InnovationSpec::gaussian_identity(3), n, seed).unwrap()
    }

    #[test]
    fn zero_delta_keeps_everything() {
        let tr = trajectory(50, 1);
        let ms = apply_bernoulli_mask(&tr, 0.0, 3).unwrap();
        assert_eq!(ms.values(), tr.states());
        assert!(ms.mask().iter().all(|m| *m));
    }

    #[test]
    fn mask_zeroes_dropped_entries() {
        let w = Mat::from_row_slice(2, 2, &[2.0, 1.0, -3.0, 4.0]);
        let mask = DMatrix::from_row_slice(2, 2, &[true, true, false, true]);
        let ms = apply_mask(&w, mask, 0.5, 0).unwrap();
        assert_eq!(ms.values().column(0).as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn observed_fraction_near_keep_probability() {
        let tr = trajectory(2499, 4); // 3 x 2500 entries
        let ms = apply_bernoulli_mask(&tr, 0.5, 8).unwrap();
        let frac = ms.observed_fraction();
        // 3 binomial standard errors at 7500 draws
        assert!((frac - 0.5).abs() < 3.0 * (0.25f64 / 7500.0).sqrt(), "{frac}");
        assert!((ms.estimate_delta() - 0.5).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_delta() {
        let tr = trajectory(5, 1);
        assert!(apply_bernoulli_mask(&tr, 1.0, 0).is_err());
        assert!(apply_bernoulli_mask(&tr, -0.1, 0).is_err());
    }

    #[test]
    fn both_scalings_agree_without_missingness() {
        let tr = trajectory(40, 2);
        let ms = apply_bernoulli_mask(&tr, 0.0, 0).unwrap();
        let raw = build_moments(&ms, Scaling::Raw).unwrap();
        let unb = build_moments(&ms, Scaling::Unbiased).unwrap();
        let x = tr.regressors();
        let y = tr.responses();
        let q = &x * x.transpose() / 40.0;
        let l = &y * x.transpose() / 40.0;
        assert!((&raw.q - &q).amax() < 1e-12);
        assert!((&unb.q - &q).amax() < 1e-12);
        assert!((&raw.l - &l).amax() < 1e-12);
        assert!((&unb.l - &l).amax() < 1e-12);
    }

    #[test]
    fn mask_covariance_entries() {
        let (p0, p1) = bernoulli_mask_covariances(3, 0.5);
        assert_eq!(p0[(0, 0)], 0.5);
        assert_eq!(p0[(0, 1)], 0.25);
        assert_eq!(p1[(2, 1)], 0.25);
    }

    #[test]
    fn scaling_identity_is_exact() {
        let tr = trajectory(200, 3);
        let ms = apply_bernoulli_mask(&tr, 0.35, 5).unwrap();
        let raw = build_moments(&ms, Scaling::Raw).unwrap();
        let unb = build_moments(&ms, Scaling::Unbiased).unwrap();
        let f = (1.0f64 - 0.35).powi(2);
        for (r, u) in raw.q.iter().zip(unb.q.iter()).chain(raw.l.iter().zip(unb.l.iter())) {
            assert!((r / f - u).abs() <= 1e-12 * u.abs().max(1e-300));
        }
        let back = raw.rescaled(Scaling::Unbiased);
        assert!((&back.q - &unb.q).amax() < 1e-12);
        assert_eq!(raw.d_bar, unb.d_bar);
    }

    #[test]
    fn general_moments_reduce_to_bernoulli() {
        let tr = trajectory(120, 6);
        let ms = apply_bernoulli_mask(&tr, 0.3, 7).unwrap();
        let (p0, p1) = bernoulli_mask_covariances(3, 0.3);
        let g = build_moments_general(&ms, &p0, &p1).unwrap();
        let u = build_moments(&ms, Scaling::Unbiased).unwrap();
        assert!((&g.q - &u.q).amax() < 1e-14);
        assert!((&g.l - &u.l).amax() < 1e-14);

        let ones = Mat::from_element(3, 3, 1.0);
        let plain = build_moments_general(&ms, &ones, &ones).unwrap();
        let x = ms.regressors();
        assert!((&plain.q - &x * x.transpose() / 120.0).amax() < 1e-12);

        let mut zero = ones.clone();
        zero[(1, 2)] = 0.0;
        assert!(build_moments_general(&ms, &zero, &ones).is_err());
        assert!(build_moments_general(&ms, &ones, &zero).is_err());
    }

    #[test]
    fn d_bar_is_normalised_root_diagonal() {
        let tr = trajectory(30, 9);
        let ms = apply_bernoulli_mask(&tr, 0.2, 1).unwrap();
        let m = build_moments(&ms, Scaling::Raw).unwrap();
        let x = ms.regressors();
        for i in 0..3 {
            let expect = (x.row(i).norm_squared() / 30.0).sqrt();
            assert!((m.d_bar[i] - expect).abs() < 1e-12);
        }
    }
}
