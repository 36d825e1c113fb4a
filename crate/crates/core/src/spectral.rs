//! Transfer-function quantities of a transition matrix on the unit circle.
//!
//! For `G(z) = (I - Bz)^{-1}` and `|z| = 1`:
//!
//! * `vartheta0 = max ||I - Bz||_2`
//! * `vartheta1 = max ||G(z)||_2`
//! * `vartheta2 = max ||G(z)||_{1->2}` (largest column norm)
//!
//! with `theta0 = vartheta2^2 / vartheta1^2` and `kappa0 = vartheta0^2 vartheta1^2`.
//!
//! All three only depend on the principal submatrix `B[J, J]`, `J` the union of
//! nonzero rows and columns, so every evaluation runs on that submatrix. The
//! maximisation is a uniform angular grid followed by golden-section
//! refinement around the best grid points. `B` is real, so `G(conj z)` is the
//! conjugate of `G(z)` and only the upper half circle `[0, pi]` is scanned.

use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat, Mat};
use crate::var_core::transition::ensure_stable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vartheta {
    Zero,
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Points on the full circle; the half circle gets `grid_points / 2 + 1`.
    pub grid_points: usize,
    /// Golden-section search stops once the angular bracket is below this.
    pub refine_tol: f64,
    /// How many grid local maxima are refined.
    pub refine_peaks: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { grid_points: 512, refine_tol: 1e-8, refine_peaks: 3 }
    }
}

impl GridConfig {
    pub const MIN_GRID: usize = 64;

    fn validate(&self) -> Result<()> {
        if self.grid_points < Self::MIN_GRID {
            return invalid(format!(
                "grid of {} points is too coarse (minimum {})",
                self.grid_points,
                Self::MIN_GRID
            ));
        }
        if !(self.refine_tol > 0.0) {
            return invalid("refine_tol must be positive");
        }
        Ok(())
    }
}

/// Principal submatrix holding every nonzero of `b`, and its index set.
pub fn support_reduce(b: &Mat) -> (Mat, Vec<usize>) {
    let p = b.nrows().min(b.ncols());
    let idx: Vec<usize> = (0..p)
        .filter(|&i| b.row(i).iter().any(|x| *x != 0.0) || b.column(i).iter().any(|x| *x != 0.0))
        .collect();
    let sub = b.select_rows(&idx).select_columns(&idx);
    (sub, idx)
}

/// Pointwise evaluation of the three norms on a reduced submatrix. Every value
/// is floored at one: that is the contribution of the identity block on the
/// complement of `J`, and the maxima over the circle are at least one anyway.
struct CircleEval<'a> {
    sub: &'a Mat,
}

impl CircleEval<'_> {
    fn z(phi: f64) -> Complex<f64> {
        Complex::new(phi.cos(), phi.sin())
    }

    fn system(&self, phi: f64) -> CMat {
        linalg::identity_minus_scaled(self.sub, Self::z(phi))
    }

    fn sigma_extremes(m: &CMat) -> (f64, f64) {
        let sv = m.singular_values();
        (sv.min(), sv.max())
    }

    fn inverse_col_norm(m: CMat) -> f64 {
        match m.lu().try_inverse() {
            Some(inv) => linalg::norm_1_to_2_complex(&inv),
            None => f64::INFINITY,
        }
    }

    fn eval(&self, which: Vartheta, phi: f64) -> f64 {
        if self.sub.is_empty() {
            return 1.0;
        }
        let m = self.system(phi);
        let v = match which {
            Vartheta::Zero => Self::sigma_extremes(&m).1,
            Vartheta::One => 1.0 / Self::sigma_extremes(&m).0,
            Vartheta::Two => Self::inverse_col_norm(m),
        };
        v.max(1.0)
    }

    fn eval_all(&self, phi: f64) -> [f64; 3] {
        if self.sub.is_empty() {
            return [1.0; 3];
        }
        let m = self.system(phi);
        let (lo, hi) = Self::sigma_extremes(&m);
        let two = Self::inverse_col_norm(m);
        [hi.max(1.0), (1.0 / lo).max(1.0), two.max(1.0)]
    }
}

fn half_circle_angles(grid: &GridConfig) -> Vec<f64> {
    let half = grid.grid_points / 2;
    (0..=half).map(|i| PI * i as f64 / half as f64).collect()
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best_x, mut best) = if fc >= fd { (c, fc) } else { (d, fd) };
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc > best {
                best = fc;
                best_x = c;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd > best {
                best = fd;
                best_x = d;
            }
        }
    }
    (best_x, best)
}

/// Maximise `f` given its values on the grid: refine the best local maxima.
fn refine(angles: &[f64], values: &[f64], f: &dyn Fn(f64) -> f64, grid: &GridConfig) -> f64 {
    let last = angles.len() - 1;
    let mut peaks: Vec<usize> = (0..=last)
        .filter(|&i| {
            let left = if i == 0 { values[1] } else { values[i - 1] };
            let right = if i == last { values[last - 1] } else { values[i + 1] };
            values[i] >= left && values[i] >= right
        })
        .collect();
    // deterministic: highest first, ties by angle index
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    peaks.truncate(grid.refine_peaks.max(1));

    let mut best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for i in peaks {
        let a = angles[i.saturating_sub(1)];
        let b = angles[(i + 1).min(last)];
        let (_, v) = golden_max(f, a, b, grid.refine_tol);
        best = best.max(v);
    }
    best
}

fn requires_stability(which: Vartheta) -> bool {
    !matches!(which, Vartheta::Zero)
}

/// One of the three unit-circle maxima.
pub fn vartheta(b: &Mat, which: Vartheta, grid: &GridConfig) -> Result<f64> {
    linalg::ensure_square(b, "transition matrix")?;
    linalg::ensure_finite(b, "transition matrix")?;
    grid.validate()?;
    if requires_stability(which) {
        ensure_stable(b)?;
    }
    let (sub, _) = support_reduce(b);
    let ev = CircleEval { sub: &sub };
    let angles = half_circle_angles(grid);
    let values: Vec<f64> = angles.iter().map(|&phi| ev.eval(which, phi)).collect();
    Ok(refine(&angles, &values, &|phi| ev.eval(which, phi), grid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    pub rho: f64,
    pub vartheta0: f64,
    pub vartheta1: f64,
    pub vartheta2: f64,
    pub theta0: f64,
    pub kappa0: f64,
    pub nnz: usize,
    pub grid_points: usize,
    pub refine_tol: f64,
    pub support: Vec<usize>,
}

impl SpectralDiagnostics {
    /// Invariants relating the quantities, each as `(name, holds)`.
    pub fn invariant_checks(&self, tol: f64) -> Vec<(&'static str, bool)> {
        let k = self.nnz.max(1) as f64;
        vec![
            ("vartheta2 <= vartheta1", self.vartheta2 <= self.vartheta1 * (1.0 + tol)),
            (
                "vartheta1 <= sqrt(2k) vartheta2",
                self.vartheta1 <= (2.0 * k).sqrt() * self.vartheta2 * (1.0 + tol),
            ),
            (
                "theta0 in [1/(2k), 1]",
                self.theta0 >= 1.0 / (2.0 * k) * (1.0 - tol) && self.theta0 <= 1.0 + tol,
            ),
            (
                "kappa0 = vartheta0^2 vartheta1^2",
                (self.kappa0 - (self.vartheta0 * self.vartheta1).powi(2)).abs() <= tol * self.kappa0,
            ),
        ]
    }
}

/// All unit-circle quantities from one shared grid pass.
pub fn diagnostics(b: &Mat, grid: &GridConfig) -> Result<SpectralDiagnostics> {
    linalg::ensure_square(b, "transition matrix")?;
    linalg::ensure_finite(b, "transition matrix")?;
    grid.validate()?;
    let rho = ensure_stable(b)?;
    let (sub, support) = support_reduce(b);
    let ev = CircleEval { sub: &sub };
    let angles = half_circle_angles(grid);
    let all: Vec<[f64; 3]> = angles.iter().map(|&phi| ev.eval_all(phi)).collect();

    let mut out = [0.0; 3];
    for (slot, which) in [Vartheta::Zero, Vartheta::One, Vartheta::Two].into_iter().enumerate() {
        let values: Vec<f64> = all.iter().map(|v| v[slot]).collect();
        out[slot] = refine(&angles, &values, &|phi| ev.eval(which, phi), grid);
    }
    let [v0, v1, v2] = out;
    Ok(SpectralDiagnostics {
        rho,
        vartheta0: v0,
        vartheta1: v1,
        vartheta2: v2,
        theta0: v2 * v2 / (v1 * v1),
        kappa0: v0 * v0 * v1 * v1,
        nnz: linalg::nnz(b),
        grid_points: grid.grid_points,
        refine_tol: grid.refine_tol,
        support,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub applicable: bool,
    pub satisfied: bool,
}

impl BoundCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let satisfied = lhs <= rhs * (1.0 + 1e-9) + 1e-12;
        BoundCheck { name: name.to_string(), lhs, rhs, applicable: true, satisfied }
    }

    fn not_applicable(name: &str) -> Self {
        BoundCheck {
            name: name.to_string(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            applicable: false,
            satisfied: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub diagnostics: SpectralDiagnostics,
    /// `||R||_2 ||R^{-1}||_2` for unit-norm eigenvector columns, if diagonalizable.
    pub eigvec_condition: Option<f64>,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| c.applicable && !c.satisfied).count()
    }
}

/// Eigenvector matrices with condition number at or above this are treated
/// as non-diagonalizable.
pub const DIAGONALIZABLE_COND_LIMIT: f64 = 1e8;

/// Condition number of a unit-column eigenvector matrix, or `None` when the
/// matrix is (numerically) defective.
pub fn eigenvector_condition(b: &Mat) -> Result<Option<f64>> {
    let (sub, _) = support_reduce(b);
    let m = sub.nrows();
    if m == 0 {
        return Ok(Some(1.0));
    }
    let scale = linalg::op_norm_2(&sub).max(1.0);
    let mut eig = linalg::eigenvalues(&sub)?;
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    // cluster numerically repeated eigenvalues
    let cluster_tol = 1e-5 * scale;
    let mut clusters: Vec<(Complex<f64>, usize)> = Vec::new();
    for lam in eig {
        match clusters.iter_mut().find(|(c, _)| (*c - lam).norm() < cluster_tol) {
            Some((_, mult)) => *mult += 1,
            None => clusters.push((lam, 1)),
        }
    }

    let csub = linalg::to_complex(&sub);
    let mut columns: Vec<DVector<Complex<f64>>> = Vec::with_capacity(m);
    for (lam, mult) in clusters {
        let shifted = &csub - CMat::identity(m, m) * lam;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD without right vectors".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        if svd.singular_values[order[mult - 1]] > 1e-7 * scale {
            return Ok(None);
        }
        for &i in order.iter().take(mult) {
            let v: DVector<Complex<f64>> = v_t.row(i).transpose().map(|c| c.conj());
            let norm = v.norm();
            columns.push(v / Complex::new(norm, 0.0));
        }
    }
    let r = CMat::from_columns(&columns);
    let sv = r.singular_values();
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond >= DIAGONALIZABLE_COND_LIMIT {
        return Ok(None);
    }
    Ok(Some(cond))
}

/// Norm bounds relating `B` to the unit-circle quantities, each flagged
/// against the computed values.
pub fn basu_bounds(b: &Mat, grid: &GridConfig) -> Result<BoundReport> {
    let d = diagnostics(b, grid)?;
    let op2 = linalg::op_norm_2(b);
    let avg_1_inf = (linalg::norm_1(b) + linalg::norm_inf(b)) / 2.0;
    let col = linalg::norm_1_to_2(b);
    let cond = eigenvector_condition(b)?;

    let mut checks = vec![
        BoundCheck::new("vartheta0 <= 1 + ||B||_2", d.vartheta0, 1.0 + op2),
        BoundCheck::new("1 + ||B||_2 <= 1 + (||B||_1 + ||B||_inf)/2", 1.0 + op2, 1.0 + avg_1_inf),
        BoundCheck::new("1/(1 + ||B||_1->2) <= vartheta2", 1.0 / (1.0 + col), d.vartheta2),
    ];
    let diag_names = [
        "vartheta1 <= cond(R)/(1 - rho)",
        "(1 - rho)/((1 + ||B||_1->2) cond(R)) <= sqrt(theta0)",
        "sqrt(kappa0) <= cond(R)/(1 - rho) (1 + (||B||_1 + ||B||_inf)/2)",
    ];
    match cond {
        Some(c) => {
            let gap = 1.0 - d.rho;
            checks.push(BoundCheck::new(diag_names[0], d.vartheta1, c / gap));
            checks.push(BoundCheck::new(diag_names[1], gap / ((1.0 + col) * c), d.theta0.sqrt()));
            checks.push(BoundCheck::new(diag_names[2], d.kappa0.sqrt(), c / gap * (1.0 + avg_1_inf)));
        }
        None => checks.extend(diag_names.iter().map(|n| BoundCheck::not_applicable(n))),
    }
    Ok(BoundReport { diagnostics: d, eigvec_condition: cond, checks })
}

/// Largest block dimension `n * p` accepted by [`build_psi`].
pub const PSI_SIZE_LIMIT: usize = 4000;

/// Lower block-triangular block-Toeplitz matrix with `(i, j)` block `B^{i-j}`,
/// mapping stacked innovations to the stacked state path.
pub fn build_psi(b: &Mat, n: usize) -> Result<Mat> {
    let p = linalg::ensure_square(b, "transition matrix")?;
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if n * p > PSI_SIZE_LIMIT {
        return invalid(format!("n * p = {} exceeds the limit {PSI_SIZE_LIMIT}", n * p));
    }
    let mut powers = Vec::with_capacity(n);
    powers.push(Mat::identity(p, p));
    for t in 1..n {
        let next = b * &powers[t - 1];
        powers.push(next);
    }
    let mut psi = Mat::zeros(n * p, n * p);
    for i in 0..n {
        for j in 0..=i {
            psi.view_mut((i * p, j * p), (p, p)).copy_from(&powers[i - j]);
        }
    }
    Ok(psi)
}

/// Operator norms of the masked quadratic-form factors built from `Psi_n(B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiProductNorms {
    /// `||(I_n (x) v)' I_Omega Psi_n||_2`
    pub psi1: f64,
    /// `||(I_n (x) diag(v)) I_Omega Psi_n||_2`
    pub psi2: f64,
    pub psi_n_2: f64,
    pub psi_n_1to2: f64,
    /// `||I_supp Psi_n||_{1->2}` restricted to rows where `v` is nonzero.
    pub psi_n_supp_1to2: f64,
    pub v_norm: f64,
    pub vartheta1: f64,
    pub vartheta2: f64,
}

/// Factor norms for a given direction `v` (length p) and observation pattern
/// `omega` (length n p, time-major).
pub fn psi_product_norms(
    b: &Mat,
    v: &DVector<f64>,
    omega: &[bool],
    n: usize,
    grid: &GridConfig,
) -> Result<PsiProductNorms> {
    let p = b.nrows();
    if v.len() != p || omega.len() != n * p {
        return Err(Error::DimensionMismatch("v must have length p and omega length n p".into()));
    }
    let psi = build_psi(b, n)?;
    let masked = Mat::from_fn(n * p, n * p, |r, c| if omega[r] { psi[(r, c)] } else { 0.0 });
    let stacked_v = Mat::from_fn(n, n * p, |t, r| if r / p == t { v[r % p] } else { 0.0 });
    let psi1 = linalg::op_norm_2(&(&stacked_v * &masked));
    let scaled = Mat::from_fn(n * p, n * p, |r, c| v[r % p] * masked[(r, c)]);
    let psi2 = linalg::op_norm_2(&scaled);
    let supp = Mat::from_fn(n * p, n * p, |r, c| if v[r % p] != 0.0 { psi[(r, c)] } else { 0.0 });
    let d = diagnostics(b, grid)?;
    Ok(PsiProductNorms {
        psi1,
        psi2,
        psi_n_2: linalg::op_norm_2(&psi),
        psi_n_1to2: linalg::norm_1_to_2(&psi),
        psi_n_supp_1to2: linalg::norm_1_to_2(&supp),
        v_norm: v.norm(),
        vartheta1: d.vartheta1,
        vartheta2: d.vartheta2,
    })
}

/// Both sides of the diagonal-scaling inequality for `diag(v) A`.
///
/// `column_bound = ||v||_2 ||I_supp(v) A||_{1->2}` is the largest-column form;
/// it can fail (take `A = [1 1]`, `v = [1]`). `row_bound = ||v||_2
/// ||I_supp(v) A||_{2->inf}` uses the largest row norm and always holds,
/// since `u' diag(v) A` is a combination of the rows of `A` with weights
/// of l1 norm at most `||v||_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagScalingCheck {
    pub lhs: f64,
    pub column_bound: f64,
    pub row_bound: f64,
}

pub fn diag_scaling_check(a: &Mat, v: &DVector<f64>) -> Result<DiagScalingCheck> {
    if v.len() != a.nrows() {
        return Err(Error::DimensionMismatch("v must have one entry per row of A".into()));
    }
    let scaled = Mat::from_fn(a.nrows(), a.ncols(), |i, j| v[i] * a[(i, j)]);
    let restricted = Mat::from_fn(a.nrows(), a.ncols(), |i, j| if v[i] != 0.0 { a[(i, j)] } else { 0.0 });
    Ok(DiagScalingCheck {
        lhs: linalg::op_norm_2(&scaled),
        column_bound: v.norm() * linalg::norm_1_to_2(&restricted),
        row_bound: v.norm() * linalg::norm_2_to_inf(&restricted),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var_core::{generate_sparse_transition, SupportPattern};

    fn grid() -> GridConfig {
        GridConfig::default()
    }

    #[test]
    fn zero_matrix_gives_unit_quantities() {
        let d = diagnostics(&Mat::zeros(4, 4), &grid()).unwrap();
        assert_eq!((d.vartheta0, d.vartheta1, d.vartheta2), (1.0, 1.0, 1.0));
        assert_eq!(d.theta0, 1.0);
        assert_eq!(d.kappa0, 1.0);
        assert!(d.support.is_empty());
    }

    #[test]
    fn half_identity_closed_form() {
        // |1 - 0.5 z| peaks at z = -1 (1.5); 1/|1 - 0.5 z| peaks at z = 1 (2.0)
        let b = Mat::identity(2, 2) * 0.5;
        let d = diagnostics(&b, &grid()).unwrap();
        assert!((d.vartheta0 - 1.5).abs() < 1e-12);
        assert!((d.vartheta1 - 2.0).abs() < 1e-12);
        assert!((d.vartheta2 - 2.0).abs() < 1e-12);
        assert!((d.kappa0 - 9.0).abs() < 1e-10);
        for which in [Vartheta::Zero, Vartheta::One, Vartheta::Two] {
            let single = vartheta(&b, which, &grid()).unwrap();
            let expected = if which == Vartheta::Zero { 1.5 } else { 2.0 };
            assert!((single - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_interior_peak_is_refined() {
        // rotation-like block, peak of 1/sigma_min is off the grid
        let b = Mat::from_row_slice(2, 2, &[0.3, -0.55, 0.55, 0.3]);
        let coarse = GridConfig { grid_points: 64, ..GridConfig::default() };
        let fine = GridConfig { grid_points: 8192, ..GridConfig::default() };
        let a = vartheta(&b, Vartheta::One, &coarse).unwrap();
        let c = vartheta(&b, Vartheta::One, &fine).unwrap();
        assert!((a - c).abs() <= 1e-10 * c);
    }

    #[test]
    fn support_reduction_indices() {
        let mut b = Mat::zeros(6, 6);
        b[(3, 5)] = 0.4;
        let (sub, j) = support_reduce(&b);
        assert_eq!(j, vec![3, 5]);
        assert_eq!(sub.shape(), (2, 2));
        assert_eq!(sub[(0, 1)], 0.4);

        let full = Mat::from_diagonal(&DVector::from_element(4, 0.2));
        assert_eq!(support_reduce(&full).1, vec![0, 1, 2, 3]);
    }

    #[test]
    fn reduced_and_full_agree() {
        let b = generate_sparse_transition(SupportPattern::RandomSparse, 40, 6, 0.6, 21).unwrap();
        let (sub, _) = support_reduce(b.entries());
        let full = diagnostics(b.entries(), &grid()).unwrap();
        let red = diagnostics(&sub, &grid()).unwrap();
        assert!((full.vartheta0 - red.vartheta0).abs() <= 1e-10);
        assert!((full.vartheta1 - red.vartheta1).abs() <= 1e-10);
        assert!((full.vartheta2 - red.vartheta2).abs() <= 1e-10);
    }

    #[test]
    fn chain_invariants_hold() {
        let b = generate_sparse_transition(SupportPattern::Chain, 5, 4, 0.8, 0).unwrap();
        let d = diagnostics(b.entries(), &grid()).unwrap();
        for (name, ok) in d.invariant_checks(1e-9) {
            assert!(ok, "{name}: {d:?}");
        }
    }

    #[test]
    fn non_normal_example_has_large_norm() {
        let a = 0.9;
        let b = Mat::from_row_slice(2, 2, &[a, 1.0 / a, 0.0, a]);
        let d = diagnostics(&b, &grid()).unwrap();
        assert!((d.rho - 0.9).abs() < 1e-12);
        assert!(linalg::op_norm_2(&b) > 1.11);
    }

    #[test]
    fn unstable_or_coarse_rejected() {
        let b = Mat::identity(2, 2) * 1.2;
        assert!(matches!(vartheta(&b, Vartheta::One, &grid()), Err(Error::Unstable { .. })));
        assert!(vartheta(&b, Vartheta::Zero, &grid()).is_ok());
        let coarse = GridConfig { grid_points: 32, ..GridConfig::default() };
        assert!(vartheta(&Mat::zeros(2, 2), Vartheta::Zero, &coarse).is_err());
    }

    #[test]
    fn bounds_tight_at_zero_and_half_identity() {
        let r = basu_bounds(&Mat::zeros(3, 3), &grid()).unwrap();
        assert_eq!(r.violations(), 0);
        assert!(r.checks.iter().all(|c| c.applicable));
        assert!((r.checks[0].lhs - r.checks[0].rhs).abs() < 1e-12);

        let r = basu_bounds(&(Mat::identity(2, 2) * 0.5), &grid()).unwrap();
        assert_eq!(r.eigvec_condition.map(|c| (c - 1.0).abs() < 1e-9), Some(true));
        let c = &r.checks[3];
        assert!((c.lhs - 2.0).abs() < 1e-12 && (c.rhs - 2.0).abs() < 1e-9 && c.satisfied);
    }

    #[test]
    fn defective_matrix_skips_diagonalizable_bounds() {
        let b = Mat::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        assert_eq!(eigenvector_condition(&b).unwrap(), None);
        let r = basu_bounds(&b, &grid()).unwrap();
        assert_eq!(r.checks.iter().filter(|c| !c.applicable).count(), 3);
    }

    #[test]
    fn psi_structure() {
        let b = Mat::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.3]);
        assert_eq!(build_psi(&b, 1).unwrap(), Mat::identity(2, 2));
        let chain = generate_sparse_transition(SupportPattern::Chain, 3, 2, 0.7, 0).unwrap();
        let psi = build_psi(chain.entries(), 4).unwrap();
        let b2 = chain.entries() * chain.entries();
        assert_eq!(psi.view((6, 0), (3, 3)).into_owned(), b2);
        // B^3 = 0
        assert!(psi.view((9, 0), (3, 3)).iter().all(|x| *x == 0.0));
        assert!(psi.view((0, 3), (3, 3)).iter().all(|x| *x == 0.0));
        assert!(build_psi(&Mat::zeros(10, 10), 401).is_err());
    }

    #[test]
    fn column_form_of_diag_scaling_can_fail() {
        let a = Mat::from_row_slice(1, 2, &[1.0, 1.0]);
        let v = DVector::from_vec(vec![1.0]);
        let c = diag_scaling_check(&a, &v).unwrap();
        assert!((c.lhs - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.column_bound, 1.0);
        assert!(c.lhs <= c.row_bound + 1e-15);
    }
}
