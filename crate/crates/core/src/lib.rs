//! Distributed nonlinear-PI consensus for single- and double-integrator
//! agents whose input gains have unknown, possibly different signs, over
//! switching directed topologies that need be neither balanced nor strongly
//! connected at any instant.
//!
//! - [`digraph`]: graphs, Laplacians, SCCs, basis bicomponents, joint-basis check.
//! - [`schedule`]: switching signals and their dwell/reactivation properties.
//! - [`dynamics`]: control laws and closed-loop vector fields.
//! - [`simulate`]: segment-aligned RK4 integration of the hybrid closed loop.
//! - [`metrics`]: consensus, Nussbaum-bound and decay diagnostics.
//! - [`config`]: TOML scenario files.

pub mod config;
pub mod digraph;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod metrics;
pub mod schedule;
pub mod simulate;

pub use digraph::{
    has_jointly_strongly_connected_basis, union_graph, BasisBicomponent, DiGraph, Laplacian,
    LeftEigenvector,
};
pub use dynamics::{ControllerParams, DiState, GainVector, SiState};
pub use error::{Error, Result};
pub use metrics::DiagnosticsReport;
pub use schedule::{Segment, SwitchSchedule, ValidationReport};
pub use simulate::{simulate, simulate_fixed_graph, Model, Scenario, SimSettings, Trajectory};
