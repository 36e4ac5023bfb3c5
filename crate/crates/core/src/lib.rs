//! Measurement dynamics as coarse-grained unitary evolution plus Bohmian
//! trajectories averaged over stochastic apparatus parameters.
//!
//! Natural units (ħ = m = 1) are the default everywhere; both constants are
//! configurable through [`Units`].

pub mod bohmian;
pub mod error;
pub mod experiments;
pub mod grid_field;
pub mod io;
pub mod operator_algebra;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod stochastic;
pub mod verify;

pub use error::{Error, Result};
pub use par::Execution;

use serde::{Deserialize, Serialize};

/// Reduced Planck constant and particle mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Units {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}
