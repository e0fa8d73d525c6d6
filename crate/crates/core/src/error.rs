use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("scenario counts must all be at least 1")]
    EmptyScenario,
    #[error("{what}: expected {expected} entries, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("behaviors are defined over different scenarios")]
    ScenarioMismatch,
    #[error("component {lambda} has a behavior over a different scenario")]
    ComponentScenario { lambda: usize },
    #[error("a hidden-variable model needs at least one component")]
    NoComponents,
    #[error("model violates probabilistic invariants:\n{0}")]
    Invalid(ValidationReport),
    #[error("variable {0} appears both as target and as given")]
    OverlappingVariables(String),
    #[error("variable {var} index {index} out of range (size {size})")]
    IndexOutOfRange {
        var: String,
        index: usize,
        size: usize,
    },
    #[error("model carries no (psi, xi) labels")]
    MissingLabels,
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("operation needs two outcomes per side, scenario is {0}")]
    NotBinary(String),
    #[error("operation needs the (2, 2, 2, 2) scenario, got {0}")]
    NotChsh(String),
    #[error("{count} deterministic strategies exceed the cap of {cap}")]
    CapExceeded { count: String, cap: usize },
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
    #[error("solver result failed independent verification: {0}")]
    Inconclusive(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("direction has norm {0}, expected 1")]
    NotUnit(f64),
    #[error("state has squared norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("at least one measurement direction per side is required")]
    NoDirections,
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("number of runs must be at least 1")]
    NoRuns,
    #[error("transcript is empty")]
    EmptyTranscript,
    #[error("condition {0} cannot be checked on a transcript")]
    UnsupportedCondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("number of trials must be at least 1")]
    NoTrials,
}
