//! Executable probability calculus for bipartite Bell experiments.
//!
//! Behaviors `P(X,Y|A,B)` and finite hidden-variable models are checked
//! against the locality and independence conditions (no-conspiracy,
//! Bell-locality, parameter and outcome independence, the FR condition,
//! no-signaling, no-extension), tested for membership in the local polytope,
//! generated from two-qubit quantum states, and simulated run by run.

// `!(x <= tol)` is used on purpose so that NaN fails tolerance checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod format;
pub mod geometry;
pub mod joint;
pub mod model;
pub mod quantum;
pub mod simulator;

pub use error::{GeometryError, ModelError, QuantumError, SimulationError, VerifyError};
pub use joint::{build_joint, Conditional, JointDistribution, Marginal, Var};
pub use model::{
    averaged_behavior, validate_behavior, Behavior, Component, ExtensionLabel, HvModel, Scenario,
    SettingPolicy, ValidationReport, Violation, EPS_NORM, EPS_ZERO,
};
