//! Shared fixtures for the benchmarks.

use dfl_core::cdlm::ObsRow;
use dfl_core::harness::{simulate_dataset, DgpSpec, SimulatedData};
use dfl_core::nalgebra::DVector;
use dfl_core::CdlmSpec;

/// Standard simulated dataset with `horizon` time points and `dim` predictors.
pub fn fixture(horizon: usize, dim: usize) -> SimulatedData {
    simulate_dataset(&DgpSpec { horizon, dim, ..DgpSpec::default() }).expect("valid fixture spec")
}

/// State-space model for the fixture: one regression row per time point,
/// plus a unit shrinkage row for every coefficient, as in a DFL sweep.
pub fn cdlm_fixture(horizon: usize, dim: usize) -> CdlmSpec {
    let sim = fixture(horizon, dim);
    let d = &sim.data;
    let mut spec = CdlmSpec::new(horizon, DVector::zeros(dim), DVector::from_element(dim, 10.0)).expect("valid spec");
    for t in 0..horizon {
        let row = d.predictors.row(t).transpose();
        spec.push_row(t, ObsRow::dense(row, d.y[t], 1.0)).expect("row fits");
        for i in 0..dim {
            spec.push_row(t, ObsRow::unit(i, 0.0, 5.0).without_dof()).expect("row fits");
        }
        if t > 0 {
            spec.set_evolution(t, DVector::from_element(dim, 0.01)).expect("valid evolution");
        }
    }
    spec
}
