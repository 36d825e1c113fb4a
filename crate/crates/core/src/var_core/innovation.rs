use nalgebra::{Cholesky, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationFamily {
    Gaussian,
    /// `Sigma^{1/2} u` with `u_i` i.i.d. uniform on `[-sqrt(3), sqrt(3)]`.
    BoundedUniform,
    /// `Sigma^{1/2} u` with `u_i` i.i.d. uniform on `{-1, +1}`.
    RademacherScaled,
}

impl std::str::FromStr for InnovationFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(InnovationFamily::Gaussian),
            "bounded_uniform" => Ok(InnovationFamily::BoundedUniform),
            "rademacher_scaled" => Ok(InnovationFamily::RademacherScaled),
            other => invalid(format!("unknown innovation family '{other}'")),
        }
    }
}

impl InnovationFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            InnovationFamily::Gaussian => "gaussian",
            InnovationFamily::BoundedUniform => "bounded_uniform",
            InnovationFamily::RademacherScaled => "rademacher_scaled",
        }
    }
}

/// Distribution of the innovations: family, covariance and the constant of
/// the convex concentration property.
#[derive(Debug, Clone)]
pub struct InnovationSpec {
    family: InnovationFamily,
    covariance: Mat,
    ccp_constant: f64,
    factor: Mat,
    cov_norm: f64,
}

impl InnovationSpec {
    /// Spec with the default concentration constant: `sqrt(2 ||Sigma||_2)` for
    /// Gaussian noise, an upper bound on the support diameter otherwise.
    pub fn new(family: InnovationFamily, covariance: Mat) -> Result<Self> {
        let p = linalg::ensure_square(&covariance, "innovation covariance")?;
        linalg::ensure_finite(&covariance, "innovation covariance")?;
        if p == 0 {
            return invalid("innovation covariance must be non-empty");
        }
        if !linalg::is_symmetric(&covariance, 1e-12) {
            return Err(Error::NotPositiveDefinite("covariance is not symmetric".into()));
        }
        let covariance = linalg::symmetrize(&covariance);
        let (lo, hi) = linalg::sym_eig_extremes(&covariance);
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {lo:e} is not positive"
            )));
        }
        let factor = Cholesky::new(covariance.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorisation failed".into()))?
            .l();
        let ccp_constant = match family {
            InnovationFamily::Gaussian => (2.0 * hi).sqrt(),
            // diameter of Sigma^{1/2} [-a, a]^p is at most 2 a sqrt(p ||Sigma||_2)
            InnovationFamily::BoundedUniform => 2.0 * (3.0 * p as f64 * hi).sqrt(),
            InnovationFamily::RademacherScaled => 2.0 * (p as f64 * hi).sqrt(),
        };
        Ok(InnovationSpec {
            family,
            covariance,
            ccp_constant,
            factor,
            cov_norm: hi,
        })
    }

    pub fn gaussian_identity(p: usize) -> Self {
        Self::new(InnovationFamily::Gaussian, Mat::identity(p, p)).expect("identity is SPD")
    }

    /// Override the concentration constant; it must satisfy `2 c^2 >= ||Sigma||_2`.
    pub fn with_ccp_constant(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return invalid(format!("ccp constant must be positive, got {c}"));
        }
        if 2.0 * c * c < self.cov_norm * (1.0 - 1e-12) {
            return invalid(format!(
                "ccp constant {c} violates 2c^2 >= ||Sigma||_2 = {}",
                self.cov_norm
            ));
        }
        self.ccp_constant = c;
        Ok(self)
    }

    pub fn family(&self) -> InnovationFamily {
        self.family
    }

    pub fn covariance(&self) -> &Mat {
        &self.covariance
    }

    pub fn ccp_constant(&self) -> f64 {
        self.ccp_constant
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    /// `||Sigma||_2`.
    pub fn covariance_norm(&self) -> f64 {
        self.cov_norm
    }

    /// Half-width of the coordinate support of the standardised draw, if bounded.
    pub fn standard_bound(&self) -> Option<f64> {
        match self.family {
            InnovationFamily::Gaussian => None,
            InnovationFamily::BoundedUniform => Some(3f64.sqrt()),
            InnovationFamily::RademacherScaled => Some(1.0),
        }
    }

    /// One zero-mean draw with covariance `Sigma`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let p = self.dim();
        let half = 3f64.sqrt();
        let u = DVector::from_iterator(
            p,
            (0..p).map(|_| match self.family {
                InnovationFamily::Gaussian => rng.sample::<f64, _>(StandardNormal),
                InnovationFamily::BoundedUniform => rng.random_range(-half..=half),
                InnovationFamily::RademacherScaled => {
                    if rng.random_bool(0.5) {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }),
        );
        &self.factor * u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn cov() -> Mat {
        Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])
    }

    #[test]
    fn default_constants_satisfy_ccp_floor() {
        for fam in [
            InnovationFamily::Gaussian,
            InnovationFamily::BoundedUniform,
            InnovationFamily::RademacherScaled,
        ] {
            let spec = InnovationSpec::new(fam, cov()).unwrap();
            let c = spec.ccp_constant();
            assert!(2.0 * c * c >= spec.covariance_norm());
        }
    }

    #[test]
    fn gaussian_constant_is_sqrt_two_norm() {
        let spec = InnovationSpec::gaussian_identity(3);
        assert!((spec.ccp_constant() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let bad = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            InnovationSpec::new(InnovationFamily::Gaussian, bad),
            Err(Error::NotPositiveDefinite(_))
        ));
        let asym = Mat::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(InnovationSpec::new(InnovationFamily::Gaussian, asym).is_err());
    }

    #[test]
    fn ccp_override_is_validated() {
        let spec = InnovationSpec::new(InnovationFamily::Gaussian, cov()).unwrap();
        assert!(spec.clone().with_ccp_constant(0.1).is_err());
        assert_eq!(spec.with_ccp_constant(5.0).unwrap().ccp_constant(), 5.0);
    }

    #[test]
    fn bounded_families_stay_in_support() {
        for fam in [InnovationFamily::BoundedUniform, InnovationFamily::RademacherScaled] {
            let spec = InnovationSpec::new(fam, cov()).unwrap();
            let mut r = rng::stream(3, 0);
            let mut first: Option<DVector<f64>> = None;
            for _ in 0..2000 {
                let e = spec.draw(&mut r);
                let base = first.get_or_insert_with(|| e.clone());
                assert!((&e - &*base).norm() <= spec.ccp_constant() + 1e-12);
            }
        }
    }
}
