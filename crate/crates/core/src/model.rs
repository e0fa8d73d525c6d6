//! Scenarios, behaviors, setting policies and finite hidden-variable models.
//!
//! All probability tables are stored flat in row-major order. A [`Behavior`]
//! is indexed `[a][b][x][y]`, a [`SettingPolicy`] `[a][b]`.

use std::fmt;

use crate::error::ModelError;

/// Tolerance for normalization and other probabilistic invariants.
pub const EPS_NORM: f64 = 1e-9;
/// Below this mass a conditioning event is treated as impossible.
pub const EPS_ZERO: f64 = 1e-12;

/// Number of settings and outcomes on each side of a bipartite experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub settings_a: usize,
    pub settings_b: usize,
    pub outcomes_x: usize,
    pub outcomes_y: usize,
}

impl Scenario {
    pub fn new(
        settings_a: usize,
        settings_b: usize,
        outcomes_x: usize,
        outcomes_y: usize,
    ) -> Result<Self, ModelError> {
        if settings_a == 0 || settings_b == 0 || outcomes_x == 0 || outcomes_y == 0 {
            return Err(ModelError::EmptyScenario);
        }
        Ok(Scenario {
            settings_a,
            settings_b,
            outcomes_x,
            outcomes_y,
        })
    }

    /// The two-setting, two-outcome scenario of the CHSH inequality.
    pub fn chsh() -> Self {
        Scenario {
            settings_a: 2,
            settings_b: 2,
            outcomes_x: 2,
            outcomes_y: 2,
        }
    }

    pub fn setting_pairs(&self) -> usize {
        self.settings_a * self.settings_b
    }

    pub fn outcome_pairs(&self) -> usize {
        self.outcomes_x * self.outcomes_y
    }

    /// Number of entries of a behavior table.
    pub fn behavior_len(&self) -> usize {
        self.setting_pairs() * self.outcome_pairs()
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((a * self.settings_b + b) * self.outcomes_x + x) * self.outcomes_y + y
    }

    /// Number of deterministic product strategies, `nX^nA * nY^nB`, or `None`
    /// when it does not fit in a `usize`.
    pub fn deterministic_count(&self) -> Option<usize> {
        let alice = checked_pow(self.outcomes_x, self.settings_a)?;
        let bob = checked_pow(self.outcomes_y, self.settings_b)?;
        alice.checked_mul(bob)
    }

    pub fn is_binary(&self) -> bool {
        self.outcomes_x == 2 && self.outcomes_y == 2
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let exp = u32::try_from(exp).ok()?;
    base.checked_pow(exp)
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.settings_a, self.settings_b, self.outcomes_x, self.outcomes_y
        )
    }
}

/// Conditional distribution `P(X,Y|A,B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    p: Vec<f64>,
}

impl Behavior {
    /// Wraps a flat `[a][b][x][y]` table. Only the length is checked here;
    /// probabilistic invariants are checked by [`validate_behavior`].
    pub fn new(scenario: Scenario, p: Vec<f64>) -> Result<Self, ModelError> {
        if p.len() != scenario.behavior_len() {
            return Err(ModelError::Dimension {
                what: "behavior table".into(),
                expected: scenario.behavior_len(),
                found: p.len(),
            });
        }
        Ok(Behavior { scenario, p })
    }

    pub fn from_fn(
        scenario: Scenario,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut p = Vec::with_capacity(scenario.behavior_len());
        for a in 0..scenario.settings_a {
            for b in 0..scenario.settings_b {
                for x in 0..scenario.outcomes_x {
                    for y in 0..scenario.outcomes_y {
                        p.push(f(a, b, x, y));
                    }
                }
            }
        }
        Behavior { scenario, p }
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let v = 1.0 / scenario.outcome_pairs() as f64;
        Behavior {
            scenario,
            p: vec![v; scenario.behavior_len()],
        }
    }

    /// Point mass on `(x, y) = (alice[a], bob[b])` for every setting pair.
    pub fn deterministic(scenario: Scenario, alice: &[usize], bob: &[usize]) -> Self {
        Behavior::from_fn(scenario, |a, b, x, y| {
            if alice[a] == x && bob[b] == y {
                1.0
            } else {
                0.0
            }
        })
    }

    /// The Popescu-Rohrlich box: `P(x,y|a,b) = 1/2` when `x XOR y = a AND b`.
    pub fn pr_box() -> Self {
        Behavior::from_fn(
            Scenario::chsh(),
            |a, b, x, y| {
                if (x ^ y) == (a & b) {
                    0.5
                } else {
                    0.0
                }
            },
        )
    }

    /// Elementwise `v * self + (1 - v) * other`.
    pub fn mix(&self, other: &Behavior, v: f64) -> Result<Behavior, ModelError> {
        if self.scenario != other.scenario {
            return Err(ModelError::ScenarioMismatch);
        }
        let p = self
            .p
            .iter()
            .zip(&other.p)
            .map(|(s, o)| v * s + (1.0 - v) * o)
            .collect();
        Ok(Behavior {
            scenario: self.scenario,
            p,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.scenario.index(a, b, x, y)]
    }

    /// The `(x, y)` block for setting pair `(a, b)`, row-major in `x`.
    pub fn row(&self, a: usize, b: usize) -> &[f64] {
        let n = self.scenario.outcome_pairs();
        let start = self.scenario.index(a, b, 0, 0);
        &self.p[start..start + n]
    }

    /// `P(x|a,b) = sum_y P(x,y|a,b)`.
    pub fn marginal_a(&self, a: usize, b: usize, x: usize) -> f64 {
        (0..self.scenario.outcomes_y)
            .map(|y| self.get(a, b, x, y))
            .sum()
    }

    /// `P(y|a,b) = sum_x P(x,y|a,b)`.
    pub fn marginal_b(&self, a: usize, b: usize, y: usize) -> f64 {
        (0..self.scenario.outcomes_x)
            .map(|x| self.get(a, b, x, y))
            .sum()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(s, o)| (s - o).abs())
            .fold(0.0, f64::max)
    }
}

/// Joint distribution `P(A,B)` of the two settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingPolicy {
    settings_a: usize,
    settings_b: usize,
    q: Vec<f64>,
}

impl SettingPolicy {
    pub fn new(settings_a: usize, settings_b: usize, q: Vec<f64>) -> Result<Self, ModelError> {
        if q.len() != settings_a * settings_b {
            return Err(ModelError::Dimension {
                what: "setting policy".into(),
                expected: settings_a * settings_b,
                found: q.len(),
            });
        }
        Ok(SettingPolicy {
            settings_a,
            settings_b,
            q,
        })
    }

    /// Uniform product distribution; the default for a freely chosen setting.
    pub fn uniform(settings_a: usize, settings_b: usize) -> Self {
        let v = 1.0 / (settings_a * settings_b) as f64;
        SettingPolicy {
            settings_a,
            settings_b,
            q: vec![v; settings_a * settings_b],
        }
    }

    pub fn product(pa: &[f64], pb: &[f64]) -> Self {
        let q = pa
            .iter()
            .flat_map(|&x| pb.iter().map(move |&y| x * y))
            .collect();
        SettingPolicy {
            settings_a: pa.len(),
            settings_b: pb.len(),
            q,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.settings_a, self.settings_b)
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.q[a * self.settings_b + b]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    fn fits(&self, scenario: &Scenario) -> bool {
        self.settings_a == scenario.settings_a && self.settings_b == scenario.settings_b
    }
}

/// One value of the hidden variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub policy: SettingPolicy,
    pub behavior: Behavior,
}

/// `(psi, xi)` tags splitting a hidden variable into a quantum state and
/// additional structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtensionLabel {
    pub psi: String,
    pub xi: String,
}

/// A finite hidden-variable ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct HvModel {
    scenario: Scenario,
    components: Vec<Component>,
    labels: Option<Vec<ExtensionLabel>>,
}

impl HvModel {
    /// Checks structure only (shapes, label count). Use [`HvModel::validate`]
    /// for the probabilistic invariants.
    pub fn new(
        scenario: Scenario,
        components: Vec<Component>,
        labels: Option<Vec<ExtensionLabel>>,
    ) -> Result<Self, ModelError> {
        if components.is_empty() {
            return Err(ModelError::NoComponents);
        }
        for (lambda, c) in components.iter().enumerate() {
            if c.behavior.scenario() != scenario {
                return Err(ModelError::ComponentScenario { lambda });
            }
            if !c.policy.fits(&scenario) {
                return Err(ModelError::Dimension {
                    what: format!("setting policy of component {lambda}"),
                    expected: scenario.setting_pairs(),
                    found: c.policy.as_slice().len(),
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != components.len() {
                return Err(ModelError::Dimension {
                    what: "extension labels".into(),
                    expected: components.len(),
                    found: labels.len(),
                });
            }
        }
        Ok(HvModel {
            scenario,
            components,
            labels,
        })
    }

    /// A model with a single hidden-variable value and uniform settings.
    pub fn single(behavior: Behavior) -> Self {
        let s = behavior.scenario();
        HvModel {
            scenario: s,
            components: vec![Component {
                weight: 1.0,
                policy: SettingPolicy::uniform(s.settings_a, s.settings_b),
                behavior,
            }],
            labels: None,
        }
    }

    /// Mixture of behaviors with uniform settings for every component.
    pub fn mixture(weights: &[f64], behaviors: Vec<Behavior>) -> Result<Self, ModelError> {
        let scenario = behaviors
            .first()
            .ok_or(ModelError::NoComponents)?
            .scenario();
        if weights.len() != behaviors.len() {
            return Err(ModelError::Dimension {
                what: "mixture weights".into(),
                expected: behaviors.len(),
                found: weights.len(),
            });
        }
        let components = weights
            .iter()
            .zip(behaviors)
            .map(|(&weight, behavior)| Component {
                weight,
                policy: SettingPolicy::uniform(scenario.settings_a, scenario.settings_b),
                behavior,
            })
            .collect();
        HvModel::new(scenario, components, None)
    }

    pub fn with_labels(self, labels: Vec<ExtensionLabel>) -> Result<Self, ModelError> {
        HvModel::new(self.scenario, self.components, Some(labels))
    }

    /// Replaces every component's policy.
    pub fn with_policy(mut self, policy: &SettingPolicy) -> Result<Self, ModelError> {
        if !policy.fits(&self.scenario) {
            return Err(ModelError::Dimension {
                what: "setting policy".into(),
                expected: self.scenario.setting_pairs(),
                found: policy.as_slice().len(),
            });
        }
        for c in &mut self.components {
            c.policy = policy.clone();
        }
        Ok(self)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn labels(&self) -> Option<&[ExtensionLabel]> {
        self.labels.as_deref()
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut total = 0.0;
        for (lambda, c) in self.components.iter().enumerate() {
            total += c.weight;
            if !c.weight.is_finite() || c.weight < 0.0 {
                report.push(Some(lambda), Violation::NegativeWeight { value: c.weight });
            }
            let mut q_sum = 0.0;
            for a in 0..self.scenario.settings_a {
                for b in 0..self.scenario.settings_b {
                    let v = c.policy.get(a, b);
                    q_sum += v;
                    if !v.is_finite() || v < 0.0 {
                        report.push(Some(lambda), Violation::NegativePolicy { a, b, value: v });
                    }
                }
            }
            if !((q_sum - 1.0).abs() <= tol) {
                report.push(
                    Some(lambda),
                    Violation::PolicyNormalization {
                        deviation: q_sum - 1.0,
                    },
                );
            }
            for v in validate_behavior(&c.behavior, tol).violations {
                report.push(Some(lambda), v.violation);
            }
        }
        if !((total - 1.0).abs() <= tol) {
            report.push(
                None,
                Violation::WeightNormalization {
                    deviation: total - 1.0,
                },
            );
        }
        report
    }
}

/// A violated probabilistic invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NegativeEntry {
        a: usize,
        b: usize,
        x: usize,
        y: usize,
        value: f64,
    },
    RowNormalization {
        a: usize,
        b: usize,
        deviation: f64,
    },
    NegativeWeight {
        value: f64,
    },
    WeightNormalization {
        deviation: f64,
    },
    NegativePolicy {
        a: usize,
        b: usize,
        value: f64,
    },
    PolicyNormalization {
        deviation: f64,
    },
}

impl Violation {
    pub fn magnitude(&self) -> f64 {
        match *self {
            Violation::NegativeEntry { value, .. }
            | Violation::NegativeWeight { value }
            | Violation::NegativePolicy { value, .. } => value.abs(),
            Violation::RowNormalization { deviation, .. }
            | Violation::WeightNormalization { deviation }
            | Violation::PolicyNormalization { deviation } => deviation.abs(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeEntry { a, b, x, y, value } => {
                write!(f, "negative entry p[{a}][{b}][{x}][{y}] = {value:e}")
            }
            Violation::RowNormalization { a, b, deviation } => {
                write!(f, "row (a={a}, b={b}) sums to 1 {deviation:+e}")
            }
            Violation::NegativeWeight { value } => write!(f, "negative weight {value:e}"),
            Violation::WeightNormalization { deviation } => {
                write!(f, "weights sum to 1 {deviation:+e}")
            }
            Violation::NegativePolicy { a, b, value } => {
                write!(f, "negative policy entry q[{a}][{b}] = {value:e}")
            }
            Violation::PolicyNormalization { deviation } => {
                write!(f, "policy sums to 1 {deviation:+e}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocatedViolation {
    /// Hidden-variable component, when the violation belongs to one.
    pub lambda: Option<usize>,
    pub violation: Violation,
}

impl fmt::Display for LocatedViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lambda {
            Some(l) => write!(f, "component {l}: {}", self.violation),
            None => write!(f, "{}", self.violation),
        }
    }
}

/// List of violated invariants; empty when everything holds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<LocatedViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, lambda: Option<usize>, violation: Violation) {
        self.violations.push(LocatedViolation { lambda, violation });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks nonnegativity and per-setting normalization of a behavior.
pub fn validate_behavior(b: &Behavior, tol: f64) -> ValidationReport {
    let s = b.scenario();
    let mut report = ValidationReport::default();
    for a in 0..s.settings_a {
        for bb in 0..s.settings_b {
            let mut sum = 0.0;
            for x in 0..s.outcomes_x {
                for y in 0..s.outcomes_y {
                    let v = b.get(a, bb, x, y);
                    sum += v;
                    // `!(v >= 0)` also catches NaN
                    if !(v >= 0.0) {
                        report.push(
                            None,
                            Violation::NegativeEntry {
                                a,
                                b: bb,
                                x,
                                y,
                                value: v,
                            },
                        );
                    }
                }
            }
            if !((sum - 1.0).abs() <= tol) {
                report.push(
                    None,
                    Violation::RowNormalization {
                        a,
                        b: bb,
                        deviation: sum - 1.0,
                    },
                );
            }
        }
    }
    report
}

/// `sum_lambda P(lambda) * P(X,Y|A,B,lambda)`, with settings treated as free
/// inputs (policies are ignored).
pub fn averaged_behavior(m: &HvModel) -> Behavior {
    let s = m.scenario();
    let mut p = vec![0.0; s.behavior_len()];
    for c in m.components() {
        for (acc, v) in p.iter_mut().zip(c.behavior.as_slice()) {
            *acc += c.weight * v;
        }
    }
    Behavior { scenario: s, p }
}
