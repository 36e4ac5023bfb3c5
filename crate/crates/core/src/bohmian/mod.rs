//! Guidance-equation trajectories: `dx/dt = (ħ/m) Im(∇ψ/ψ)`.

mod guidance;
mod history;
mod integrate;
mod sampling;

pub use guidance::{velocity_at, GuidanceField, SpinRule};
pub use history::{Event, FieldHistory, Side, Timeline};
pub use integrate::{integrate_ensemble, integrate_trajectory, EnsembleRun, IntegrationOptions, Trajectory};
pub use sampling::{equivariance_distance, ks_critical_1pct, sample_quantum_equilibrium, EnsembleSpec};

use crate::grid_field::{Region, EXTERIOR_LABEL};

/// Label of the box holding the trajectory at `t_loc`, or `"ex"`.
pub fn detector_assignment(trajectory: &Trajectory, region: &Region, t_loc: f64) -> String {
    trajectory
        .position_at(t_loc)
        .map_or(EXTERIOR_LABEL, |p| region.label_at(&p))
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_by_box() {
        let region = Region::intervals(&[0.0, 1.0, 2.0], ["1", "2"]).unwrap();
        let inside = Trajectory::start(0.0, [1.5, 0.0]);
        let outside = Trajectory::start(0.0, [5.0, 0.0]);
        assert_eq!(detector_assignment(&inside, &region, 0.0), "2");
        assert_eq!(detector_assignment(&outside, &region, 0.0), "ex");
    }
}
