//! The full joint `P(lambda, A, B, X, Y)` and the marginal/conditional
//! calculus every condition checker is built on.

use std::fmt;

use crate::error::ModelError;
use crate::model::{HvModel, Scenario, SettingPolicy, EPS_NORM, EPS_ZERO};

/// A random variable of the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Lambda,
    A,
    B,
    X,
    Y,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::Lambda, Var::A, Var::B, Var::X, Var::Y];

    fn axis(self) -> usize {
        match self {
            Var::Lambda => 0,
            Var::A => 1,
            Var::B => 2,
            Var::X => 3,
            Var::Y => 4,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Var::Lambda => "lambda",
            Var::A => "A",
            Var::B => "B",
            Var::X => "X",
            Var::Y => "Y",
        };
        f.write_str(s)
    }
}

/// `P(lambda, a, b, x, y)` as a dense table indexed `[lambda][a][b][x][y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    scenario: Scenario,
    lambdas: usize,
    table: Vec<f64>,
}

/// Builds `P(lambda) P(a,b|lambda) P(x,y|a,b,lambda)`, validating the model at
/// the default normalization tolerance.
pub fn build_joint(
    m: &HvModel,
    external_policy: Option<&SettingPolicy>,
) -> Result<JointDistribution, ModelError> {
    JointDistribution::build(m, external_policy, EPS_NORM)
}

impl JointDistribution {
    /// `external_policy`, when given, replaces every component's policy.
    pub fn build(
        m: &HvModel,
        external_policy: Option<&SettingPolicy>,
        eps_norm: f64,
    ) -> Result<Self, ModelError> {
        let m = match external_policy {
            Some(policy) => m.clone().with_policy(policy)?,
            None => m.clone(),
        };
        let report = m.validate(eps_norm);
        if !report.is_valid() {
            return Err(ModelError::Invalid(report));
        }
        let s = m.scenario();
        let mut table = Vec::with_capacity(m.len() * s.behavior_len());
        for c in m.components() {
            for a in 0..s.settings_a {
                for b in 0..s.settings_b {
                    let wq = c.weight * c.policy.get(a, b);
                    table.extend(c.behavior.row(a, b).iter().map(|p| wq * p));
                }
            }
        }
        Ok(JointDistribution {
            scenario: s,
            lambdas: m.len(),
            table,
        })
    }

    /// Unnormalized table in the same layout, such as run counts.
    pub(crate) fn from_raw(scenario: Scenario, lambdas: usize, table: Vec<f64>) -> Self {
        debug_assert_eq!(table.len(), lambdas * scenario.behavior_len());
        JointDistribution {
            scenario,
            lambdas,
            table,
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn lambdas(&self) -> usize {
        self.lambdas
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.table
    }

    pub fn dims(&self) -> [usize; 5] {
        let s = self.scenario;
        [
            self.lambdas,
            s.settings_a,
            s.settings_b,
            s.outcomes_x,
            s.outcomes_y,
        ]
    }

    pub fn size(&self, var: Var) -> usize {
        self.dims()[var.axis()]
    }

    pub fn get(&self, lambda: usize, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.table[lambda * self.scenario.behavior_len() + self.scenario.index(a, b, x, y)]
    }

    /// Sums out every variable not in `vars`; the result is laid out in the
    /// order of `vars`.
    pub fn marginal(&self, vars: &[Var]) -> Marginal {
        let dims = self.dims();
        let out_dims: Vec<usize> = vars.iter().map(|v| dims[v.axis()]).collect();
        let mut strides = [0usize; 5];
        let mut stride = 1;
        for (v, d) in vars.iter().zip(&out_dims).rev() {
            strides[v.axis()] = stride;
            stride *= d;
        }
        let mut table = vec![0.0; stride];
        let mut idx = [0usize; 5];
        for &p in &self.table {
            let pos: usize = (0..5).map(|k| idx[k] * strides[k]).sum();
            table[pos] += p;
            for k in (0..5).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Marginal {
            vars: vars.to_vec(),
            dims: out_dims,
            table,
        }
    }

    /// `P(targets | givens)` with the default vacuity guard.
    pub fn conditional(
        &self,
        targets: &[Var],
        givens: &[(Var, usize)],
    ) -> Result<Conditional, ModelError> {
        self.conditional_with(targets, givens, EPS_ZERO)
    }

    /// `P(targets | givens)`. When `P(givens) < eps_zero` the result is flagged
    /// vacuous and its table is left at zero.
    pub fn conditional_with(
        &self,
        targets: &[Var],
        givens: &[(Var, usize)],
        eps_zero: f64,
    ) -> Result<Conditional, ModelError> {
        for (i, t) in targets.iter().enumerate() {
            if givens.iter().any(|(g, _)| g == t) || targets[..i].contains(t) {
                return Err(ModelError::OverlappingVariables(t.to_string()));
            }
        }
        for (i, (g, v)) in givens.iter().enumerate() {
            if givens[..i].iter().any(|(h, _)| h == g) {
                return Err(ModelError::OverlappingVariables(g.to_string()));
            }
            let size = self.size(*g);
            if *v >= size {
                return Err(ModelError::IndexOutOfRange {
                    var: g.to_string(),
                    index: *v,
                    size,
                });
            }
        }
        let mut vars: Vec<Var> = givens.iter().map(|(g, _)| *g).collect();
        vars.extend_from_slice(targets);
        let joint = self.marginal(&vars);
        let given_idx: Vec<usize> = givens.iter().map(|(_, v)| *v).collect();
        let target_len: usize = targets.iter().map(|t| self.size(*t)).product();
        let block = joint.block(&given_idx);
        let mass: f64 = block.iter().sum();
        let vacuous = mass < eps_zero;
        let table = if vacuous {
            vec![0.0; target_len]
        } else {
            block.iter().map(|p| p / mass).collect()
        };
        Ok(Conditional {
            targets: targets.to_vec(),
            dims: targets.iter().map(|t| self.size(*t)).collect(),
            table,
            mass,
            vacuous,
        })
    }
}

/// A marginal table over an ordered list of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    vars: Vec<Var>,
    dims: Vec<usize>,
    table: Vec<f64>,
}

impl Marginal {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.table
    }

    /// Entry at `idx`, given in the order of [`Marginal::vars`].
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut pos = 0;
        for (i, d) in idx.iter().zip(&self.dims) {
            pos = pos * d + i;
        }
        self.table[pos]
    }

    /// The contiguous sub-table obtained by fixing a prefix of the variables.
    fn block(&self, prefix: &[usize]) -> &[f64] {
        let mut pos = 0;
        for (i, d) in prefix.iter().zip(&self.dims) {
            pos = pos * d + i;
        }
        let len: usize = self.dims[prefix.len()..].iter().product();
        &self.table[pos * len..(pos + 1) * len]
    }
}

/// Result of [`JointDistribution::conditional`].
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    pub targets: Vec<Var>,
    pub dims: Vec<usize>,
    /// Row-major over `targets`; all zero when vacuous.
    pub table: Vec<f64>,
    /// Probability of the conditioning event.
    pub mass: f64,
    pub vacuous: bool,
}

impl Conditional {
    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut pos = 0;
        for (i, d) in idx.iter().zip(&self.dims) {
            pos = pos * d + i;
        }
        self.table[pos]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{averaged_behavior, Behavior, Component, HvModel};

    fn product_behavior(s: Scenario, pa: &[f64], pb: &[f64]) -> Behavior {
        Behavior::from_fn(s, |_, _, x, y| pa[x] * pb[y])
    }

    #[test]
    fn uniform_single_lambda_is_flat() {
        let j = build_joint(&HvModel::single(Behavior::uniform(Scenario::chsh())), None).unwrap();
        assert_eq!(j.as_slice().len(), 16);
        assert!(j.as_slice().iter().all(|&p| p == 1.0 / 16.0));
    }

    #[test]
    fn deterministic_opposites_zero_mixed_cells() {
        let s = Scenario::chsh();
        let m = HvModel::mixture(
            &[0.5, 0.5],
            vec![
                Behavior::deterministic(s, &[0, 0], &[0, 0]),
                Behavior::deterministic(s, &[1, 1], &[1, 1]),
            ],
        )
        .unwrap();
        let j = build_joint(&m, None).unwrap();
        for l in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    assert_eq!(j.get(l, a, b, 0, 1), 0.0);
                    assert_eq!(j.get(l, a, b, 1, 0), 0.0);
                    assert_eq!(j.get(l, a, b, l, l), 0.125);
                }
            }
        }
    }

    #[test]
    fn invalid_model_is_rejected_with_report() {
        let s = Scenario::chsh();
        let m = HvModel::mixture(
            &[0.7, 0.7],
            vec![Behavior::uniform(s), Behavior::uniform(s)],
        )
        .unwrap();
        match build_joint(&m, None) {
            Err(ModelError::Invalid(r)) => assert!(!r.is_valid()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn external_policy_overrides() {
        let s = Scenario::chsh();
        let m = HvModel::single(Behavior::uniform(s));
        let policy = SettingPolicy::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let j = build_joint(&m, Some(&policy)).unwrap();
        let pa = j.marginal(&[Var::A, Var::B]);
        assert_eq!(pa.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn side_marginal_of_product_model() {
        let s = Scenario::new(2, 3, 2, 3).unwrap();
        let b = product_behavior(s, &[0.3, 0.7], &[0.2, 0.5, 0.3]);
        let j = build_joint(&HvModel::single(b), None).unwrap();
        for a in 0..2 {
            let c = j.conditional(&[Var::X], &[(Var::A, a)]).unwrap();
            assert!(!c.vacuous);
            assert!((c.table[0] - 0.3).abs() < 1e-15);
            assert!((c.table[1] - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn setting_is_uniform_given_other_and_lambda() {
        let s = Scenario::new(3, 2, 2, 2).unwrap();
        let m = HvModel::mixture(
            &[0.4, 0.6],
            vec![Behavior::uniform(s), Behavior::uniform(s)],
        )
        .unwrap();
        let j = build_joint(&m, None).unwrap();
        for l in 0..2 {
            for b in 0..2 {
                let c = j
                    .conditional(&[Var::A], &[(Var::B, b), (Var::Lambda, l)])
                    .unwrap();
                for v in &c.table {
                    assert!((v - 1.0 / 3.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_probability_condition_is_vacuous() {
        let s = Scenario::chsh();
        let policy = SettingPolicy::new(2, 2, vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        let m = HvModel::single(Behavior::uniform(s))
            .with_policy(&policy)
            .unwrap();
        let j = build_joint(&m, None).unwrap();
        let c = j
            .conditional(&[Var::X], &[(Var::B, 1), (Var::Lambda, 0)])
            .unwrap();
        assert!(c.vacuous);
        assert_eq!(c.mass, 0.0);
        assert!(c.table.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let j = build_joint(&HvModel::single(Behavior::uniform(Scenario::chsh())), None).unwrap();
        assert!(matches!(
            j.conditional(&[Var::X, Var::A], &[(Var::A, 0)]),
            Err(ModelError::OverlappingVariables(_))
        ));
        assert!(matches!(
            j.conditional(&[Var::X], &[(Var::A, 5)]),
            Err(ModelError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn marginal_over_lambda_recovers_average() {
        let s = Scenario::chsh();
        let comps = vec![
            Component {
                weight: 0.25,
                policy: SettingPolicy::product(&[0.6, 0.4], &[0.3, 0.7]),
                behavior: Behavior::pr_box(),
            },
            Component {
                weight: 0.75,
                policy: SettingPolicy::product(&[0.6, 0.4], &[0.3, 0.7]),
                behavior: product_behavior(s, &[0.9, 0.1], &[0.2, 0.8]),
            },
        ];
        let m = HvModel::new(s, comps, None).unwrap();
        let j = build_joint(&m, None).unwrap();
        let avg = averaged_behavior(&m);
        for a in 0..2 {
            for b in 0..2 {
                let c = j
                    .conditional(&[Var::X, Var::Y], &[(Var::A, a), (Var::B, b)])
                    .unwrap();
                for (u, v) in c.table.iter().zip(avg.row(a, b)) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }
}
