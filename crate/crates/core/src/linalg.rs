//! Dense linear-algebra helpers shared by the estimation and diagnostic code.
//!
//! Conventions follow the usual operator-norm notation: `norm_1_to_2` is the
//! largest Euclidean column norm, `norm_2_to_inf` the largest Euclidean row
//! norm, and `entrywise_l1` is the l1 norm of the vectorised matrix.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex<f64>>;

pub(crate) fn ensure_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} contains non-finite entries")))
    }
}

pub(crate) fn ensure_square(m: &Mat, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Eigenvalues of a general real square matrix.
///
/// The support graph is split into strongly connected components first: a
/// symmetric permutation brings the matrix to block-triangular form, so the
/// spectrum is the union of the diagonal blocks' spectra. Singleton blocks
/// contribute their diagonal entry exactly, which keeps nilpotent and
/// triangular supports free of the `eps^(1/m)` splitting a dense QR sweep
/// produces on defective eigenvalues. Larger blocks go through real Schur.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex<f64>>> {
    let p = ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let mut graph = DiGraph::<(), ()>::with_capacity(p, 0);
    let nodes: Vec<_> = (0..p).map(|_| graph.add_node(())).collect();
    for i in 0..p {
        for j in 0..p {
            if i != j && m[(i, j)] != 0.0 {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut out = Vec::with_capacity(p);
    for comp in tarjan_scc(&graph) {
        if let [single] = comp.as_slice() {
            let i = single.index();
            out.push(Complex::new(m[(i, i)], 0.0));
            continue;
        }
        let idx: Vec<usize> = comp.iter().map(|n| n.index()).collect();
        let block = m.select_rows(&idx).select_columns(&idx);
        out.extend(block_eigenvalues(block)?);
    }
    Ok(out)
}

/// Real Schur of one irreducible block with a bounded sweep count.
///
/// Francis QR without exceptional shifts can cycle forever on structured
/// inputs (weighted cycles whose eigenvalues share one modulus). On a stall
/// the block is rotated by a fixed orthogonal similarity, which keeps the
/// spectrum but breaks the structure, and the sweep is retried.
fn block_eigenvalues(block: Mat) -> Result<Vec<Complex<f64>>> {
    let n = block.nrows();
    let max_sweeps = 100 * n.max(10);
    if let Some(s) = Schur::try_new(block.clone(), f64::EPSILON, max_sweeps) {
        return Ok(s.complex_eigenvalues().iter().copied().collect());
    }
    for attempt in 1..=3u32 {
        let q = householder_rotation(n, attempt);
        let rotated = q.transpose() * &block * &q;
        if let Some(s) = Schur::try_new(rotated, f64::EPSILON, max_sweeps) {
            return Ok(s.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::Numerical("Schur decomposition did not converge".into()))
}

/// `I - 2uu'/u'u` for a deterministic dense `u`.
fn householder_rotation(n: usize, attempt: u32) -> Mat {
    let u = DVector::from_fn(n, |i, _| ((i + 1) as f64 * (0.7548776662 + attempt as f64)).sin() + 1.5);
    Mat::identity(n, n) - (&u * u.transpose()) * (2.0 / u.norm_squared())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Mat) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

pub fn op_norm_2(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn op_norm_2_complex(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Max absolute column sum.
pub fn norm_1(m: &Mat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max absolute row sum.
pub fn norm_inf(m: &Mat) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_1_to_2(m: &Mat) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn norm_2_to_inf(m: &Mat) -> f64 {
    m.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

pub fn norm_1_to_2_complex(m: &CMat) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn entrywise_l1(m: &Mat) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn nnz(m: &Mat) -> usize {
    m.iter().filter(|x| x.abs() > 0.0).count()
}

pub fn is_symmetric(m: &Mat, rel_tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= rel_tol * scale))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// (smallest, largest) eigenvalue of a symmetric matrix.
pub fn sym_eig_extremes(m: &Mat) -> (f64, f64) {
    let eig = SymmetricEigen::new(symmetrize(m));
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Largest |eigenvalue| of a symmetric matrix by power iteration.
pub fn power_norm_sym(m: &Mat, iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // deterministic, non-degenerate start
    let mut x = DVector::from_fn(n, |i, _| 1.0 + (i as f64) / (n as f64));
    x /= x.norm();
    let mut est = 0.0;
    for _ in 0..iters {
        let y = m * &x;
        let ny = y.norm();
        if ny == 0.0 || !ny.is_finite() {
            return ny;
        }
        let converged = (ny - est).abs() <= 1e-12 * ny;
        est = ny;
        x = y / ny;
        if converged {
            break;
        }
    }
    est
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex::new(x, 0.0))
}

/// `I - b * z` for a complex scalar `z`.
pub fn identity_minus_scaled(b: &Mat, z: Complex<f64>) -> CMat {
    let p = b.nrows();
    CMat::from_fn(p, p, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex::new(id, 0.0) - z * b[(i, j)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_cycles_do_not_stall_the_schur_sweep() {
        for n in 2..16 {
            let c = Mat::from_fn(n, n, |i, j| if j == (i + 1) % n { 0.9 } else { 0.0 });
            let rho = spectral_radius(&c).unwrap();
            assert!((rho - 0.9).abs() < 1e-10, "n = {n}: {rho}");
        }
    }

    #[test]
    fn radius_of_upper_triangular_example() {
        let a = 0.5;
        let b = Mat::from_row_slice(2, 2, &[a, 1.0 / a, 0.0, a]);
        assert!((spectral_radius(&b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn radius_trivial_cases() {
        assert_eq!(spectral_radius(&Mat::zeros(3, 3)).unwrap(), 0.0);
        let d = Mat::from_diagonal(&DVector::from_vec(vec![0.3, 0.7]));
        assert!((spectral_radius(&d).unwrap() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn radius_of_rotation_is_modulus() {
        // eigenvalues 0.6 +- 0.6i
        let b = Mat::from_row_slice(2, 2, &[0.6, -0.6, 0.6, 0.6]);
        let r = spectral_radius(&b).unwrap();
        assert!((r - 0.6 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn radius_rejects_nan() {
        let mut b = Mat::zeros(2, 2);
        b[(0, 1)] = f64::NAN;
        assert!(matches!(spectral_radius(&b), Err(Error::NonFinite(_))));
    }

    #[test]
    fn operator_norms() {
        let b = Mat::from_row_slice(2, 3, &[1.0, -2.0, 0.0, 3.0, 0.0, 4.0]);
        assert_eq!(norm_1(&b), 4.0);
        assert_eq!(norm_inf(&b), 7.0);
        assert_eq!(norm_1_to_2(&b), 4.0);
        assert_eq!(norm_2_to_inf(&b), 5.0);
        assert_eq!(entrywise_l1(&b), 10.0);
        assert_eq!(nnz(&b), 4);
    }

    #[test]
    fn power_iteration_matches_eigensolver() {
        let q = Mat::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, -3.0, 0.1, 0.0, 0.1, 1.0]);
        let (lo, hi) = sym_eig_extremes(&q);
        let exact = lo.abs().max(hi.abs());
        assert!((power_norm_sym(&q, 2000) - exact).abs() < 1e-8 * exact);
    }
}
