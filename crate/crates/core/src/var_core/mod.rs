//! VAR(1) model: sparse transition generators, innovation families,
//! trajectory simulation and exact population autocovariances.

mod innovation;
mod process;
pub(crate) mod transition;

pub use innovation::{InnovationFamily, InnovationSpec};
pub use process::{
    autocovariance, simulate, simulate_with_burn_in, stationary_covariance, Trajectory,
};
pub use transition::{generate_sparse_transition, SupportPattern, TransitionMatrix};

pub use crate::linalg::spectral_radius;
