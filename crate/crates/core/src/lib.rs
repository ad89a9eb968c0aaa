//! Numerical laboratory for the heat flow of harmonic maps from flat tori
//! into CAT(0) spaces.
//!
//! The crate discretizes two constructions of the flow, the implicit
//! minimizing-movement (proximal) scheme and the weighted energy-dissipation
//! (WED) elliptic regularization, and audits the inequalities that such flows
//! satisfy: nonpositive-curvature comparisons, the evolution variational
//! inequality, sub-caloricity of energy densities, frequency monotonicity,
//! and Lipschitz scaling.

pub mod cat0;
pub mod error;
pub mod flow;
pub mod grid;
pub mod oracle;
pub mod sample;
pub mod scenario;
pub mod sum;
pub mod verify;

pub use cat0::{TargetPoint, TargetSpace};
pub use scenario::{run_scenario, ScenarioConfig};
pub use verify::VerifierReport;
pub use error::{Error, Result};
pub use grid::{
    dirichlet_energy, energy_density, l2_distance, time_density, DensityField, Grid, GridMap,
};
pub use flow::{
    proximal_step, run_flow, wed_minimize, FlowTrace, SliceDiagnostics, SolverOptions,
    SpaceTimeMap, SweepOrder, TimeSlices,
};
