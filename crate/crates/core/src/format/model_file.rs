//! JSON model files.
//!
//! A file carries a scenario and exactly one of three sections:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "metadata": { "name": "pr-box", "description": "..." },
//!   "scenario": { "settings_a": 2, "settings_b": 2, "outcomes_x": 2, "outcomes_y": 2 },
//!   "behavior": [[[[0.5, 0.0], [0.0, 0.5]], ...], ...]
//! }
//! ```
//!
//! `hv_model` holds `components`, each with `weight`, `behavior`, an optional
//! `policy` (`[a][b]`, uniform when omitted) and optional `psi`/`xi` tags.
//! `quantum` holds a `state` (`"singlet"` or `{"amplitudes": [[re, im], x4]}`)
//! and `directions_a`/`directions_b`, each entry either an angle in degrees
//! in the x-z plane, `{"polar": .., "azimuthal": ..}` in degrees, or
//! `{"x": .., "y": .., "z": ..}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ModelError, QuantumError};
use crate::model::{
    validate_behavior, Behavior, Component, ExtensionLabel, HvModel, Scenario, SettingPolicy,
    EPS_NORM,
};
use crate::quantum::{pure_state_behavior, singlet_behavior, MeasurementDirection, TwoQubitState};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format_version {0} (this build reads {FORMAT_VERSION})")]
    Version(u32),
    #[error("expected exactly one of behavior, hv_model, quantum; found {0}")]
    Sections(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("quantum section: {0}")]
    Quantum(#[from] QuantumError),
    #[error("malformed transcript at line {line}: {message}")]
    Transcript { line: usize, message: String },
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        let (line, column) = (e.line(), e.column());
        let message = e.to_string();
        match e.classify() {
            Category::Data => FormatError::Schema {
                line,
                column,
                message,
            },
            _ => FormatError::Syntax {
                line,
                column,
                message,
            },
        }
    }
}

impl From<ModelError> for FormatError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Invalid(r) => FormatError::Invariant(r.to_string()),
            other => FormatError::Dimension(other.to_string()),
        }
    }
}

pub type Table4 = Vec<Vec<Vec<Vec<f64>>>>;
pub type Table2 = Vec<Vec<f64>>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl Metadata {
    fn is_empty(&self) -> bool {
        self.name.is_none() && self.description.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub settings_a: usize,
    pub settings_b: usize,
    pub outcomes_x: usize,
    pub outcomes_y: usize,
}

impl From<Scenario> for ScenarioSpec {
    fn from(s: Scenario) -> Self {
        ScenarioSpec {
            settings_a: s.settings_a,
            settings_b: s.settings_b,
            outcomes_x: s.outcomes_x,
            outcomes_y: s.outcomes_y,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Table2>,
    pub behavior: Table4,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvModelSpec {
    pub components: Vec<ComponentSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Preset(String),
    Amplitudes { amplitudes: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    /// Angle from the z axis in the x-z plane, degrees.
    InPlane(f64),
    Angles {
        polar: f64,
        azimuthal: f64,
    },
    Cartesian {
        x: f64,
        y: f64,
        z: f64,
    },
}

impl DirectionSpec {
    pub fn to_direction(&self) -> Result<MeasurementDirection, QuantumError> {
        match *self {
            DirectionSpec::InPlane(deg) => Ok(MeasurementDirection::in_plane(deg)),
            DirectionSpec::Angles { polar, azimuthal } => {
                Ok(MeasurementDirection::from_angles(polar, azimuthal))
            }
            DirectionSpec::Cartesian { x, y, z } => MeasurementDirection::new(x, y, z),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSpec {
    pub state: StateSpec,
    pub directions_a: Vec<DirectionSpec>,
    pub directions_b: Vec<DirectionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Metadata::is_empty")]
    pub metadata: Metadata,
    pub scenario: ScenarioSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior: Option<Table4>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hv_model: Option<HvModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<QuantumSpec>,
}

/// A model file turned into library values.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedModel {
    Behavior(Behavior),
    HvModel(HvModel),
    /// The behavior predicted by the file's quantum section.
    Quantum(Behavior),
}

impl LoadedModel {
    /// The behavior seen after averaging out any hidden variable.
    pub fn behavior(&self) -> Behavior {
        match self {
            LoadedModel::Behavior(b) | LoadedModel::Quantum(b) => b.clone(),
            LoadedModel::HvModel(m) => crate::model::averaged_behavior(m),
        }
    }

    /// A hidden-variable view: the model itself, or the behavior as a single
    /// component with uniform settings.
    pub fn hv_model(&self) -> HvModel {
        match self {
            LoadedModel::HvModel(m) => m.clone(),
            LoadedModel::Behavior(b) | LoadedModel::Quantum(b) => HvModel::single(b.clone()),
        }
    }
}

fn flatten4(t: &Table4, s: Scenario, what: &str) -> Result<Vec<f64>, FormatError> {
    let shape_err = |detail: String| FormatError::Dimension(format!("{what}: {detail}"));
    if t.len() != s.settings_a {
        return Err(shape_err(format!(
            "{} settings for A, scenario has {}",
            t.len(),
            s.settings_a
        )));
    }
    let mut out = Vec::with_capacity(s.behavior_len());
    for (a, ta) in t.iter().enumerate() {
        if ta.len() != s.settings_b {
            return Err(shape_err(format!(
                "[{a}] has {} settings for B, expected {}",
                ta.len(),
                s.settings_b
            )));
        }
        for (b, tb) in ta.iter().enumerate() {
            if tb.len() != s.outcomes_x {
                return Err(shape_err(format!(
                    "[{a}][{b}] has {} outcomes X, expected {}",
                    tb.len(),
                    s.outcomes_x
                )));
            }
            for (x, tx) in tb.iter().enumerate() {
                if tx.len() != s.outcomes_y {
                    return Err(shape_err(format!(
                        "[{a}][{b}][{x}] has {} outcomes Y, expected {}",
                        tx.len(),
                        s.outcomes_y
                    )));
                }
                out.extend_from_slice(tx);
            }
        }
    }
    Ok(out)
}

fn nest4(b: &Behavior) -> Table4 {
    let s = b.scenario();
    (0..s.settings_a)
        .map(|a| {
            (0..s.settings_b)
                .map(|bb| {
                    (0..s.outcomes_x)
                        .map(|x| (0..s.outcomes_y).map(|y| b.get(a, bb, x, y)).collect())
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn flatten2(t: &Table2, s: Scenario, what: &str) -> Result<Vec<f64>, FormatError> {
    if t.len() != s.settings_a || t.iter().any(|r| r.len() != s.settings_b) {
        return Err(FormatError::Dimension(format!(
            "{what}: expected {}x{} table",
            s.settings_a, s.settings_b
        )));
    }
    Ok(t.iter().flatten().copied().collect())
}

impl ModelFile {
    pub fn from_behavior(b: &Behavior, metadata: Metadata) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            metadata,
            scenario: b.scenario().into(),
            behavior: Some(nest4(b)),
            hv_model: None,
            quantum: None,
        }
    }

    /// Writes every component's policy explicitly.
    pub fn from_hv_model(m: &HvModel, metadata: Metadata) -> Self {
        let labels = m.labels();
        let s = m.scenario();
        let components = m
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| ComponentSpec {
                weight: c.weight,
                policy: Some(
                    (0..s.settings_a)
                        .map(|a| (0..s.settings_b).map(|b| c.policy.get(a, b)).collect())
                        .collect(),
                ),
                behavior: nest4(&c.behavior),
                psi: labels.map(|l| l[i].psi.clone()),
                xi: labels.map(|l| l[i].xi.clone()),
            })
            .collect();
        ModelFile {
            format_version: FORMAT_VERSION,
            metadata,
            scenario: s.into(),
            behavior: None,
            hv_model: Some(HvModelSpec { components }),
            quantum: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize infallibly")
    }

    /// Builds the library values and checks every invariant at `eps_norm`.
    pub fn load(&self, eps_norm: f64) -> Result<LoadedModel, FormatError> {
        if self.format_version != FORMAT_VERSION {
            return Err(FormatError::Version(self.format_version));
        }
        let sections = self.behavior.is_some() as usize
            + self.hv_model.is_some() as usize
            + self.quantum.is_some() as usize;
        if sections != 1 {
            return Err(FormatError::Sections(sections));
        }
        let sc = self.scenario;
        let s = Scenario::new(sc.settings_a, sc.settings_b, sc.outcomes_x, sc.outcomes_y)
            .map_err(|e| FormatError::Dimension(e.to_string()))?;
        if let Some(t) = &self.behavior {
            let b = Behavior::new(s, flatten4(t, s, "behavior")?)?;
            let report = validate_behavior(&b, eps_norm);
            if !report.is_valid() {
                return Err(FormatError::Invariant(report.to_string()));
            }
            return Ok(LoadedModel::Behavior(b));
        }
        if let Some(hv) = &self.hv_model {
            return Ok(LoadedModel::HvModel(load_hv(hv, s, eps_norm)?));
        }
        let q = self.quantum.as_ref().expect("one section present");
        let behavior = load_quantum(q, s)?;
        Ok(LoadedModel::Quantum(behavior))
    }
}

fn load_hv(hv: &HvModelSpec, s: Scenario, eps_norm: f64) -> Result<HvModel, FormatError> {
    let tagged = hv
        .components
        .iter()
        .filter(|c| c.psi.is_some() || c.xi.is_some())
        .count();
    let fully_tagged = hv
        .components
        .iter()
        .filter(|c| c.psi.is_some() && c.xi.is_some())
        .count();
    if tagged > 0 && fully_tagged != hv.components.len() {
        return Err(FormatError::Invariant(
            "psi/xi tags must be given as a pair on every component or on none".into(),
        ));
    }
    let mut components = Vec::with_capacity(hv.components.len());
    for (i, c) in hv.components.iter().enumerate() {
        let behavior = Behavior::new(
            s,
            flatten4(&c.behavior, s, &format!("component {i} behavior"))?,
        )?;
        let policy = match &c.policy {
            Some(t) => SettingPolicy::new(
                s.settings_a,
                s.settings_b,
                flatten2(t, s, &format!("component {i} policy"))?,
            )?,
            None => SettingPolicy::uniform(s.settings_a, s.settings_b),
        };
        components.push(Component {
            weight: c.weight,
            policy,
            behavior,
        });
    }
    let labels = (tagged > 0).then(|| {
        hv.components
            .iter()
            .map(|c| ExtensionLabel {
                psi: c.psi.clone().unwrap_or_default(),
                xi: c.xi.clone().unwrap_or_default(),
            })
            .collect()
    });
    let m = HvModel::new(s, components, labels)?;
    let report = m.validate(eps_norm);
    if !report.is_valid() {
        return Err(FormatError::Invariant(report.to_string()));
    }
    Ok(m)
}

fn load_quantum(q: &QuantumSpec, s: Scenario) -> Result<Behavior, FormatError> {
    let expected = Scenario {
        settings_a: q.directions_a.len(),
        settings_b: q.directions_b.len(),
        outcomes_x: 2,
        outcomes_y: 2,
    };
    if s != expected {
        return Err(FormatError::Dimension(format!(
            "quantum section implies scenario {expected}, file declares {s}"
        )));
    }
    let dirs = |v: &[DirectionSpec]| -> Result<Vec<MeasurementDirection>, QuantumError> {
        v.iter().map(DirectionSpec::to_direction).collect()
    };
    let (da, db) = (dirs(&q.directions_a)?, dirs(&q.directions_b)?);
    match &q.state {
        StateSpec::Preset(name) if name == "singlet" => Ok(singlet_behavior(&da, &db)?),
        StateSpec::Preset(name) => Err(FormatError::Invariant(format!(
            "unknown state preset {name:?}"
        ))),
        StateSpec::Amplitudes { amplitudes } => {
            let amps: [[f64; 2]; 4] = amplitudes.as_slice().try_into().map_err(|_| {
                FormatError::Dimension(format!(
                    "state needs 4 amplitudes, found {}",
                    amplitudes.len()
                ))
            })?;
            let psi = TwoQubitState::new(amps.map(|[re, im]| Complex64::new(re, im)))?;
            Ok(pure_state_behavior(&psi, &da, &db)?)
        }
    }
}

/// Parses and fully validates a model file at the default tolerance.
pub fn parse_model(text: &str) -> Result<ModelFile, FormatError> {
    parse_model_with(text, EPS_NORM)
}

pub fn parse_model_with(text: &str, eps_norm: f64) -> Result<ModelFile, FormatError> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.load(eps_norm)?;
    Ok(file)
}

/// JSON text of a hidden-variable model as a model file.
pub fn serialize_model(m: &HvModel) -> String {
    ModelFile::from_hv_model(m, Metadata::default()).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIFORM: &str = r#"{
        "format_version": 1,
        "scenario": {"settings_a": 1, "settings_b": 1, "outcomes_x": 2, "outcomes_y": 2},
        "behavior": [[[[0.25, 0.25], [0.25, 0.25]]]]
    }"#;

    #[test]
    fn minimal_uniform_document() {
        let f = parse_model(UNIFORM).unwrap();
        match f.load(EPS_NORM).unwrap() {
            LoadedModel::Behavior(b) => assert!(validate_behavior(&b, 1e-12).is_valid()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_row_names_the_cell() {
        let text = UNIFORM.replace("[0.25, 0.25], [0.25, 0.25]", "[0.25, 0.25], [0.25, 0.15]");
        match parse_model(&text) {
            Err(FormatError::Invariant(msg)) => assert!(msg.contains("a=0, b=0"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_location() {
        let text = UNIFORM.replace("\"behavior\":", "\"behavior\"");
        match parse_model(&text) {
            Err(FormatError::Syntax { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_rejected_with_location() {
        let text = UNIFORM.replace(
            "\"format_version\": 1,",
            "\"format_version\": 1, \"extra\": 3,",
        );
        match parse_model(&text) {
            Err(FormatError::Schema {
                line: 2, message, ..
            }) => assert!(message.contains("extra")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_table_is_a_dimension_error() {
        let text = UNIFORM.replace("[0.25, 0.25], [0.25, 0.25]", "[0.5, 0.25], [0.25]");
        assert!(matches!(parse_model(&text), Err(FormatError::Dimension(_))));
    }

    #[test]
    fn two_sections_rejected() {
        let text = UNIFORM.replace(
            "\"behavior\"",
            "\"quantum\": {\"state\": \"singlet\", \"directions_a\": [0], \"directions_b\": [0]}, \"behavior\"",
        );
        assert!(matches!(parse_model(&text), Err(FormatError::Sections(2))));
    }

    #[test]
    fn version_gate() {
        let text = UNIFORM.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(parse_model(&text), Err(FormatError::Version(2))));
    }

    #[test]
    fn singlet_preset_matches_library() {
        let text = r#"{
            "format_version": 1,
            "scenario": {"settings_a": 2, "settings_b": 2, "outcomes_x": 2, "outcomes_y": 2},
            "quantum": {"state": "singlet", "directions_a": [0, 90], "directions_b": [45, 135]}
        }"#;
        let loaded = parse_model(text).unwrap().load(EPS_NORM).unwrap();
        let (da, db) = crate::quantum::tsirelson_directions();
        let expected = singlet_behavior(&da, &db).unwrap();
        assert_eq!(loaded, LoadedModel::Quantum(expected));
    }

    #[test]
    fn amplitudes_and_mixed_direction_forms() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!(
            r#"{{
            "format_version": 1,
            "scenario": {{"settings_a": 2, "settings_b": 1, "outcomes_x": 2, "outcomes_y": 2}},
            "quantum": {{
                "state": {{"amplitudes": [[0, 0], [{h}, 0], [-{h}, 0], [0, 0]]}},
                "directions_a": [{{"x": 0, "y": 0, "z": 1}}, {{"polar": 90, "azimuthal": 90}}],
                "directions_b": [{{"x": 0, "y": 1, "z": 0}}]
            }}
        }}"#
        );
        let b = parse_model(&text)
            .unwrap()
            .load(EPS_NORM)
            .unwrap()
            .behavior();
        // a = 1 is the y axis, equal to Bob's: perfect anticorrelation
        assert!((b.get(1, 0, 0, 1) - 0.5).abs() < 1e-12);
        assert!(b.get(1, 0, 0, 0).abs() < 1e-12);
        // a = 0 is z, orthogonal to y: uniform
        for v in b.row(0, 0) {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn half_tagged_components_rejected() {
        let text = r#"{
            "format_version": 1,
            "scenario": {"settings_a": 1, "settings_b": 1, "outcomes_x": 1, "outcomes_y": 1},
            "hv_model": {"components": [
                {"weight": 0.5, "behavior": [[[[1.0]]]], "psi": "p"},
                {"weight": 0.5, "behavior": [[[[1.0]]]], "psi": "p", "xi": "1"}
            ]}
        }"#;
        assert!(matches!(parse_model(text), Err(FormatError::Invariant(_))));
    }

    #[test]
    fn omitted_policy_defaults_to_uniform() {
        let text = r#"{
            "format_version": 1,
            "scenario": {"settings_a": 2, "settings_b": 2, "outcomes_x": 1, "outcomes_y": 1},
            "hv_model": {"components": [{"weight": 1.0, "behavior": [[[[1.0]], [[1.0]]], [[[1.0]], [[1.0]]]]}]}
        }"#;
        match parse_model(text).unwrap().load(EPS_NORM).unwrap() {
            LoadedModel::HvModel(m) => {
                assert_eq!(m.components()[0].policy, SettingPolicy::uniform(2, 2))
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
