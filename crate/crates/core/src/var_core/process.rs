use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Mat};
use crate::rng;

use super::innovation::InnovationSpec;
use super::transition::{ensure_stable, TransitionMatrix};

/// A simulated VAR(1) path `W = [w_0 ... w_n]` with the innovations that drove it.
///
/// With `burn_in == 0` the path starts at `w_0 = 0`. With a burn-in, `w_0` is
/// the state reached after `burn_in` discarded steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    w: Mat,
    innovations: Mat,
    pub seed: u64,
    pub burn_in: usize,
}

impl Trajectory {
    pub fn from_parts(w: Mat, innovations: Mat, seed: u64, burn_in: usize) -> Result<Self> {
        if w.ncols() < 2 {
            return invalid("trajectory needs at least two columns");
        }
        if innovations.nrows() != w.nrows() || innovations.ncols() + 1 != w.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "innovations {}x{} do not match trajectory {}x{}",
                innovations.nrows(),
                innovations.ncols(),
                w.nrows(),
                w.ncols()
            )));
        }
        Ok(Trajectory { w, innovations, seed, burn_in })
    }

    /// Wrap an observed path whose innovations are unknown (filled with zeros).
    pub fn observed(w: Mat) -> Result<Self> {
        let (p, cols) = w.shape();
        if cols < 2 {
            return invalid("trajectory needs at least two columns");
        }
        Ok(Trajectory { w, innovations: Mat::zeros(p, cols - 1), seed: 0, burn_in: 0 })
    }

    pub fn states(&self) -> &Mat {
        &self.w
    }

    pub fn innovations(&self) -> &Mat {
        &self.innovations
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    /// Horizon n; the path has n + 1 columns.
    pub fn horizon(&self) -> usize {
        self.w.ncols() - 1
    }

    /// Columns `0..n`.
    pub fn regressors(&self) -> Mat {
        self.w.columns(0, self.horizon()).into_owned()
    }

    /// Columns `1..=n`.
    pub fn responses(&self) -> Mat {
        self.w.columns(1, self.horizon()).into_owned()
    }

    /// `max |w_{t+1} - B w_t - e_t|` over the stored path.
    pub fn recursion_residual(&self, b: &Mat) -> f64 {
        let mut worst = 0.0f64;
        for t in 0..self.horizon() {
            let next = b * self.w.column(t) + self.innovations.column(t);
            worst = worst.max((next - self.w.column(t + 1)).amax());
        }
        worst
    }
}

pub fn simulate(b: &TransitionMatrix, spec: &InnovationSpec, n: usize, seed: u64) -> Result<Trajectory> {
    simulate_with_burn_in(b, spec, n, seed, 0)
}

/// Simulate `w_{t+1} = B w_t + e_t` for `t = 0..n`, optionally discarding
/// `burn_in` leading steps so that `w_0` is drawn near stationarity.
pub fn simulate_with_burn_in(
    b: &TransitionMatrix,
    spec: &InnovationSpec,
    n: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Trajectory> {
    if n == 0 {
        return invalid("horizon n must be at least 1");
    }
    let p = b.dim();
    if spec.dim() != p {
        return Err(Error::DimensionMismatch(format!(
            "innovation dimension {} != transition dimension {p}",
            spec.dim()
        )));
    }
    b.ensure_stable()?;
    let bm = b.entries();
    let mut rng = rng::stream(seed, rng::STREAM_INNOVATIONS);

    let mut state = nalgebra::DVector::zeros(p);
    for _ in 0..burn_in {
        state = bm * &state + spec.draw(&mut rng);
    }

    let mut w = Mat::zeros(p, n + 1);
    let mut innovations = Mat::zeros(p, n);
    w.set_column(0, &state);
    for t in 0..n {
        let eps = spec.draw(&mut rng);
        let next = bm * w.column(t) + &eps;
        innovations.set_column(t, &eps);
        w.set_column(t + 1, &next);
    }
    Trajectory::from_parts(w, innovations, seed, burn_in)
}

/// Solve the discrete Lyapunov equation `G = B G B' + Sigma` for the lag-0
/// autocovariance of the stationary process, by Smith doubling.
pub fn stationary_covariance(b: &Mat, sigma: &Mat) -> Result<Mat> {
    let p = linalg::ensure_square(b, "transition matrix")?;
    if sigma.shape() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, expected {p}x{p}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    ensure_stable(b)?;
    let mut a = b.clone();
    let mut g = linalg::symmetrize(sigma);
    for _ in 0..200 {
        let incr = &a * &g * a.transpose();
        let small = linalg::max_abs(&incr) <= 1e-17 * linalg::max_abs(&g).max(f64::MIN_POSITIVE);
        g += incr;
        a = &a * &a;
        if small || linalg::max_abs(&a) == 0.0 {
            break;
        }
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::Numerical("Lyapunov iteration overflowed".into()));
        }
    }
    let g = linalg::symmetrize(&g);
    let residual = linalg::norm_inf(&(&g - b * &g * b.transpose() - sigma));
    if residual > 1e-10 * linalg::norm_inf(&g) {
        return Err(Error::Numerical(format!(
            "Lyapunov residual {residual:e} too large; B is too close to instability"
        )));
    }
    Ok(g)
}

/// `Gamma_w(h) = cov(w_t, w_{t+h}) = Gamma_w(0) (B')^h`.
pub fn autocovariance(b: &Mat, sigma: &Mat, h: usize) -> Result<Mat> {
    let mut g = stationary_covariance(b, sigma)?;
    let bt = b.transpose();
    for _ in 0..h {
        g = &g * &bt;
    }
    Ok(g)
}
