use rand::Rng;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Mat};
use crate::rng;

/// Support shapes for generated transition matrices.
///
/// Edges follow the influence-graph convention: a nonzero `B[i][j]` is an edge
/// `i -> j`. An in-star is therefore a single nonzero column and an out-star a
/// single nonzero row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportPattern {
    InStar,
    OutStar,
    Chain,
    RandomSparse,
    Diagonal,
}

impl SupportPattern {
    /// Nonzero count forced by a structured pattern, `None` for random supports.
    pub fn implied_nnz(self, p: usize) -> Option<usize> {
        match self {
            SupportPattern::Diagonal => Some(p),
            SupportPattern::Chain | SupportPattern::InStar | SupportPattern::OutStar => {
                Some(p.saturating_sub(1))
            }
            SupportPattern::RandomSparse => None,
        }
    }

    pub fn is_nilpotent(self) -> bool {
        matches!(
            self,
            SupportPattern::Chain | SupportPattern::InStar | SupportPattern::OutStar
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SupportPattern::InStar => "in_star",
            SupportPattern::OutStar => "out_star",
            SupportPattern::Chain => "chain",
            SupportPattern::RandomSparse => "random_sparse",
            SupportPattern::Diagonal => "diagonal",
        }
    }
}

impl std::str::FromStr for SupportPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in_star" => Ok(SupportPattern::InStar),
            "out_star" => Ok(SupportPattern::OutStar),
            "chain" => Ok(SupportPattern::Chain),
            "random_sparse" => Ok(SupportPattern::RandomSparse),
            "diagonal" => Ok(SupportPattern::Diagonal),
            other => invalid(format!("unknown support pattern '{other}'")),
        }
    }
}

/// A dense p x p transition matrix plus the metadata it was generated with.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: Mat,
    pub pattern: Option<SupportPattern>,
    pub seed: Option<u64>,
    /// For nilpotent patterns `target_rho` is applied as the entry magnitude.
    pub rho_is_magnitude: bool,
}

impl TransitionMatrix {
    pub fn new(entries: Mat) -> Result<Self> {
        linalg::ensure_square(&entries, "transition matrix")?;
        linalg::ensure_finite(&entries, "transition matrix")?;
        Ok(TransitionMatrix {
            entries,
            pattern: None,
            seed: None,
            rho_is_magnitude: false,
        })
    }

    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    pub fn into_entries(self) -> Mat {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn nnz(&self) -> usize {
        linalg::nnz(&self.entries)
    }

    pub fn spectral_radius(&self) -> f64 {
        // entries are finite and square by construction
        linalg::spectral_radius(&self.entries).unwrap_or(f64::INFINITY)
    }

    /// Error unless the spectral radius is strictly below one.
    pub fn ensure_stable(&self) -> Result<f64> {
        ensure_stable(&self.entries)
    }
}

pub(crate) fn ensure_stable(b: &Mat) -> Result<f64> {
    let rho = linalg::spectral_radius(b)?;
    if rho < 1.0 {
        Ok(rho)
    } else {
        Err(Error::Unstable { rho })
    }
}

const MAX_SUPPORT_DRAWS: usize = 1000;

/// Generate a sparse transition matrix with the requested support pattern.
///
/// Non-nilpotent supports are rescaled so that the spectral radius equals
/// `target_rho`. Chains and stars are nilpotent (radius zero), so for them
/// `target_rho` becomes the common entry magnitude and `rho_is_magnitude` is
/// set. Random supports draw magnitudes in `[0.5, 1]` with random signs and
/// are redrawn until the support carries a cycle.
pub fn generate_sparse_transition(
    pattern: SupportPattern,
    p: usize,
    k: usize,
    target_rho: f64,
    seed: u64,
) -> Result<TransitionMatrix> {
    if p == 0 {
        return invalid("dimension p must be positive");
    }
    if !(target_rho > 0.0 && target_rho < 1.0) {
        return invalid(format!("target_rho must lie in (0, 1), got {target_rho}"));
    }
    if k == 0 || k > p * p {
        return Err(Error::Infeasible(format!(
            "need 1 <= k <= p^2 = {}, got k = {k}",
            p * p
        )));
    }
    if let Some(implied) = pattern.implied_nnz(p) {
        if k != implied {
            return Err(Error::Infeasible(format!(
                "pattern {} with p = {p} has exactly {implied} nonzeros, got k = {k}",
                pattern.as_str()
            )));
        }
    }

    let mut b = Mat::zeros(p, p);
    match pattern {
        SupportPattern::Diagonal => b.fill_diagonal(target_rho),
        SupportPattern::Chain => {
            for i in 0..p - 1 {
                b[(i + 1, i)] = target_rho;
            }
        }
        SupportPattern::InStar => {
            for i in 1..p {
                b[(i, 0)] = target_rho;
            }
        }
        SupportPattern::OutStar => {
            for j in 1..p {
                b[(0, j)] = target_rho;
            }
        }
        SupportPattern::RandomSparse => {
            b = random_sparse(p, k, target_rho, seed)?;
        }
    }

    Ok(TransitionMatrix {
        entries: b,
        pattern: Some(pattern),
        seed: Some(seed),
        rho_is_magnitude: pattern.is_nilpotent(),
    })
}

fn random_sparse(p: usize, k: usize, target_rho: f64, seed: u64) -> Result<Mat> {
    let mut rng = rng::stream(seed, rng::STREAM_SUPPORT);
    for _ in 0..MAX_SUPPORT_DRAWS {
        let mut b = Mat::zeros(p, p);
        for idx in sample(&mut rng, p * p, k).into_iter() {
            let magnitude = rng.random_range(0.5..=1.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            b[(idx / p, idx % p)] = sign * magnitude;
        }
        let rho = linalg::spectral_radius(&b)?;
        // a support without cycles is nilpotent; its computed radius is rounding noise
        if rho > 1e-6 {
            let scaled = b * (target_rho / rho);
            let check = linalg::spectral_radius(&scaled)?;
            if (check - target_rho).abs() <= 1e-8 {
                return Ok(scaled);
            }
        }
    }
    Err(Error::Infeasible(format!(
        "no support with a nonzero spectral radius found for p = {p}, k = {k} after {MAX_SUPPORT_DRAWS} draws"
    )))
}
