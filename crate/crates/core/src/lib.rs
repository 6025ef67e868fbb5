//! Closed-form optimal control for input-affine nonlinear systems.
//!
//! For plants `x' = f(x) + g(x) tau` with known dynamics, the HJB equation
//! admits a closed-form solution once the plant is written in augmented
//! drift-free form `x' = P(x) u`. This crate provides:
//!
//! * [`dynamics`]: plant models and the three built-in benchmark systems.
//! * [`regulation`]: the closed-form regulator, gamma admissibility checks
//!   and HJB diagnostics.
//! * [`tracking`]: the tracking law with pseudoinverse feedforward.
//! * [`simulation`]: fixed-step closed-loop integration and Lyapunov series.
//! * [`metrics`]: ITSE, cumulative cost, convergence/wall time and tables.
//! * [`sola`]: the adaptive-critic comparison baseline.
//! * [`scenario`]: scenario files, run/bench/verify-gamma commands and
//!   output formats used by the `hjb` binary.

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod regulation;
pub mod scenario;
pub mod simulation;
pub mod sola;
pub mod tracking;

pub use dynamics::{builtin_example, AugmentedMatrix, DynamicsModel, ExampleIIParams, ExampleId, StateVector};
pub use error::{ControlError, Result};
pub use metrics::{comparison_table, ComparisonTable, MetricsReport, RunOutcome};
pub use regulation::{regulation_control, ClosedFormRegulator, ControlDecision, CostConfig};
pub use simulation::{simulate_closed_loop, simulate_tracking, Controller, IntegratorConfig, Trajectory};
pub use sola::{simulate_sola, BasisSet, SolaConfig};
pub use tracking::{tracking_control, ClosedFormTracker, ReferenceTrajectory};
