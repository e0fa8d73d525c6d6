//! Locality and independence conditions as residual checkers.
//!
//! Every checker enumerates a fixed list of cells and computes, per cell, the
//! absolute difference between the two sides of one line of its defining
//! equation. Cells whose conditioning event has probability below the
//! vacuity guard are skipped and counted. The verdict is derived from the
//! largest residual: `holds = max_deviation <= tolerance`.

use std::fmt;

mod checkers;
mod equivalence;
pub mod random;

pub use checkers::{
    check_bell_local_conditional, check_bell_local_factorized, check_fr, check_no_conspiracy,
    check_no_extension, check_no_signaling, check_outcome_independence,
    check_parameter_independence, BellLocalConditional, BellLocalFactorized, FreeChoice,
    NoConspiracy, NoExtension, NoSignaling, OutcomeIndependence, ParameterIndependence,
};
pub use equivalence::{
    verify_bell_local_equivalence, verify_fr_equivalence, verify_jarrett, DirectionFailures,
    EquivalenceReport,
};

/// The conditions a checker can test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConditionKind {
    NoConspiracy,
    BellLocalFactorized,
    BellLocalConditional,
    ParameterIndependence,
    OutcomeIndependence,
    FreeChoice,
    NoSignaling,
    NoExtension,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 8] = [
        ConditionKind::NoConspiracy,
        ConditionKind::BellLocalFactorized,
        ConditionKind::BellLocalConditional,
        ConditionKind::ParameterIndependence,
        ConditionKind::OutcomeIndependence,
        ConditionKind::FreeChoice,
        ConditionKind::NoSignaling,
        ConditionKind::NoExtension,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionKind::NoConspiracy => "no-conspiracy",
            ConditionKind::BellLocalFactorized => "bell-local",
            ConditionKind::BellLocalConditional => "bell-local-conditional",
            ConditionKind::ParameterIndependence => "parameter-independence",
            ConditionKind::OutcomeIndependence => "outcome-independence",
            ConditionKind::FreeChoice => "fr",
            ConditionKind::NoSignaling => "no-signaling",
            ConditionKind::NoExtension => "no-extension",
        }
    }

    /// Parses a name as printed by [`ConditionKind::name`]; `pi` and `oi` are
    /// accepted as short forms.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "pi" => return Some(ConditionKind::ParameterIndependence),
            "oi" => return Some(ConditionKind::OutcomeIndependence),
            _ => {}
        }
        ConditionKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Meaning of each position of a [`Cell`] index on the given line.
    pub fn cell_labels(self, line: u8) -> &'static [&'static str] {
        use ConditionKind::*;
        match (self, line) {
            (NoConspiracy, _) => &["lambda", "a", "b"],
            (BellLocalFactorized, 0) => &["lambda", "a", "b", "x", "y"],
            (BellLocalFactorized, 1) => &["lambda", "a", "b", "x"],
            (BellLocalFactorized, _) => &["lambda", "a", "b", "y"],
            (BellLocalConditional, _) => &["lambda", "a", "b", "x", "y"],
            (ParameterIndependence, 0) => &["lambda", "a", "b", "x"],
            (ParameterIndependence, _) => &["lambda", "a", "b", "y"],
            (OutcomeIndependence, _) => &["lambda", "a", "b", "x", "y"],
            (FreeChoice, 0) => &["lambda", "a", "b", "y"],
            (FreeChoice, _) => &["lambda", "a", "b", "x"],
            (NoSignaling, 0) => &["a", "b", "b'", "x"],
            (NoSignaling, _) => &["a", "a'", "b", "y"],
            (NoExtension, _) => &["psi", "xi", "a", "b", "x", "y"],
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One residual of a condition: a line of the defining equation and the
/// variable values it is evaluated at.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub line: u8,
    pub index: Vec<usize>,
}

impl Cell {
    pub fn new(line: u8, index: Vec<usize>) -> Self {
        Cell { line, index }
    }

    pub fn describe(&self, kind: ConditionKind) -> String {
        let labels = kind.cell_labels(self.line);
        let parts: Vec<String> = labels
            .iter()
            .zip(&self.index)
            .map(|(l, v)| format!("{l}={v}"))
            .collect();
        format!("line {} ({})", self.line + 1, parts.join(", "))
    }
}

/// Verdict of one checker.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub condition: ConditionKind,
    pub holds: bool,
    pub max_deviation: f64,
    /// Cell achieving `max_deviation`; `None` only when every cell is vacuous.
    pub worst_cell: Option<Cell>,
    pub vacuous_cells: usize,
    pub evaluated_cells: usize,
    pub tolerance_used: f64,
    /// Smallest subgroup size entering a finite-sample check.
    pub sample_support: Option<u64>,
}

impl ConditionReport {
    pub fn worst_cell_description(&self) -> String {
        self.worst_cell
            .as_ref()
            .map(|c| c.describe(self.condition))
            .unwrap_or_else(|| "-".into())
    }
}

/// A condition evaluated cell by cell.
pub trait Residual {
    fn kind(&self) -> ConditionKind;

    /// All cells, in a fixed order.
    fn cells(&self) -> Vec<Cell>;

    /// Residual at `cell`, or `None` when its conditioning event is vacuous.
    fn deviation(&self, cell: &Cell) -> Option<f64>;

    fn report(&self, tol: f64) -> ConditionReport {
        let mut max_deviation = 0.0;
        let mut worst_cell = None;
        let mut vacuous_cells = 0;
        let mut evaluated_cells = 0;
        for cell in self.cells() {
            match self.deviation(&cell) {
                None => vacuous_cells += 1,
                Some(d) => {
                    evaluated_cells += 1;
                    // NaN must not hide behind a comparison that is always false
                    let d = if d.is_nan() { f64::INFINITY } else { d };
                    if worst_cell.is_none() || d > max_deviation {
                        max_deviation = d;
                        worst_cell = Some(cell);
                    }
                }
            }
        }
        ConditionReport {
            condition: self.kind(),
            holds: max_deviation <= tol,
            max_deviation,
            worst_cell,
            vacuous_cells,
            evaluated_cells,
            tolerance_used: tol,
            sample_support: None,
        }
    }
}
