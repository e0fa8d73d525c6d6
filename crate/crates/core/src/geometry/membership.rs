use crate::error::GeometryError;
use crate::model::{Behavior, Scenario};
use crate::quantum::sign;

use super::simplex::phase_one;
use super::strategies::{strategies, DeterministicStrategy, DEFAULT_STRATEGY_CAP};

pub const DEFAULT_TOL_LP: f64 = 1e-8;
pub const DEFAULT_TOL_BIS: f64 = 1e-6;
pub const DEFAULT_MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Copy, Debug)]
pub struct MembershipOptions {
    pub tol_lp: f64,
    pub cap: usize,
    pub max_pivots: usize,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            tol_lp: DEFAULT_TOL_LP,
            cap: DEFAULT_STRATEGY_CAP,
            max_pivots: DEFAULT_MAX_PIVOTS,
        }
    }
}

/// Linear functional `sum c[a][b][x][y] P(x,y|a,b)` whose maximum over local
/// behaviors is `local_bound` and whose value on the tested behavior exceeds it.
#[derive(Clone, Debug, PartialEq)]
pub struct BellFunctional {
    pub scenario: Scenario,
    pub coefficients: Vec<f64>,
    pub local_bound: f64,
    pub value: f64,
}

impl BellFunctional {
    pub fn evaluate(&self, b: &Behavior) -> f64 {
        self.coefficients
            .iter()
            .zip(b.as_slice())
            .map(|(c, p)| c * p)
            .sum()
    }

    /// Maximum of the functional over every deterministic strategy.
    pub fn max_over_strategies(&self, cap: usize) -> Result<f64, GeometryError> {
        Ok(strategies(self.scenario, cap)?
            .iter()
            .map(|d| d.evaluate(self.scenario, &self.coefficients))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Coefficients of the correlators `E(a,b)` in binary scenarios:
    /// `(1/4) sum_{x,y} s(x) s(y) c[a][b][x][y]`.
    pub fn correlator_projection(&self) -> Option<Vec<Vec<f64>>> {
        let s = self.scenario;
        if !s.is_binary() {
            return None;
        }
        Some(
            (0..s.settings_a)
                .map(|a| {
                    (0..s.settings_b)
                        .map(|b| {
                            let mut v = 0.0;
                            for x in 0..2 {
                                for y in 0..2 {
                                    v += sign(x) * sign(y) * self.coefficients[s.index(a, b, x, y)];
                                }
                            }
                            v / 4.0
                        })
                        .collect()
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LocalityCertificate {
    /// Convex weights on deterministic strategies reproducing the behavior.
    Member {
        weights: Vec<(DeterministicStrategy, f64)>,
        residual: f64,
    },
    NonMember(BellFunctional),
}

impl LocalityCertificate {
    pub fn is_member(&self) -> bool {
        matches!(self, LocalityCertificate::Member { .. })
    }

    pub fn functional(&self) -> Option<&BellFunctional> {
        match self {
            LocalityCertificate::NonMember(f) => Some(f),
            LocalityCertificate::Member { .. } => None,
        }
    }
}

pub fn local_membership(b: &Behavior, tol_lp: f64) -> Result<LocalityCertificate, GeometryError> {
    local_membership_with(
        b,
        &MembershipOptions {
            tol_lp,
            ..MembershipOptions::default()
        },
    )
}

/// Decides whether `b` is a convex mixture of deterministic strategies.
///
/// Either certificate is re-checked against the strategy list before it is
/// returned; a certificate that does not survive the check is reported as
/// [`GeometryError::Inconclusive`].
pub fn local_membership_with(
    b: &Behavior,
    opts: &MembershipOptions,
) -> Result<LocalityCertificate, GeometryError> {
    let s = b.scenario();
    let strats = strategies(s, opts.cap)?;
    let len = s.behavior_len();

    // rows: one per behavior entry, then sum of weights = 1
    let mut a = vec![vec![0.0; strats.len()]; len + 1];
    for (k, d) in strats.iter().enumerate() {
        for (ai, &x) in d.alice.iter().enumerate() {
            for (bi, &y) in d.bob.iter().enumerate() {
                a[s.index(ai, bi, x, y)][k] = 1.0;
            }
        }
        a[len][k] = 1.0;
    }
    let mut rhs = b.as_slice().to_vec();
    rhs.push(1.0);

    let sol = phase_one(&a, &rhs, opts.max_pivots)?;

    if sol.objective <= opts.tol_lp {
        let weights: Vec<(DeterministicStrategy, f64)> = strats
            .into_iter()
            .zip(sol.x)
            .filter(|(_, w)| *w > 0.0)
            .collect();
        let mut recon = vec![0.0; len];
        for (d, w) in &weights {
            for (ai, &x) in d.alice.iter().enumerate() {
                for (bi, &y) in d.bob.iter().enumerate() {
                    recon[s.index(ai, bi, x, y)] += w;
                }
            }
        }
        let residual = recon
            .iter()
            .zip(b.as_slice())
            .map(|(r, p)| (r - p).abs())
            .fold(0.0, f64::max);
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if residual > opts.tol_lp || (total - 1.0).abs() > opts.tol_lp {
            return Err(GeometryError::Inconclusive(format!(
                "decomposition reproduces the behavior only to {residual:.3e}"
            )));
        }
        return Ok(LocalityCertificate::Member { weights, residual });
    }

    // Fold the normalization dual into the entries: on normalized behaviors
    // sum_{abxy} P = nA nB, so a constant spread evenly is the same functional.
    let spread = (s.settings_a * s.settings_b) as f64;
    let c0 = sol.dual[len] / spread;
    let mut coefficients: Vec<f64> = sol.dual[..len].iter().map(|y| y + c0).collect();
    let raw_bound = strats
        .iter()
        .map(|d| d.evaluate(s, &coefficients))
        .fold(f64::NEG_INFINITY, f64::max);
    for c in coefficients.iter_mut() {
        *c -= raw_bound / spread;
    }
    let local_bound = strats
        .iter()
        .map(|d| d.evaluate(s, &coefficients))
        .fold(f64::NEG_INFINITY, f64::max);
    let f = BellFunctional {
        scenario: s,
        value: 0.0,
        local_bound,
        coefficients,
    };
    let value = f.evaluate(b);
    if !(value > local_bound + opts.tol_lp) {
        return Err(GeometryError::Inconclusive(format!(
            "separating functional gives {value:.3e} against local bound {local_bound:.3e}"
        )));
    }
    Ok(LocalityCertificate::NonMember(BellFunctional {
        value,
        ..f
    }))
}

/// Largest `v` with `v b + (1 - v) uniform` local, found by bisection on
/// `[0, 1]` down to width `tol_bis` and reported as the bracket midpoint.
/// Local behaviors return exactly 1.
pub fn local_visibility(b: &Behavior, tol_bis: f64) -> Result<f64, GeometryError> {
    local_visibility_with(b, tol_bis, &MembershipOptions::default())
}

pub fn local_visibility_with(
    b: &Behavior,
    tol_bis: f64,
    opts: &MembershipOptions,
) -> Result<f64, GeometryError> {
    if local_membership_with(b, opts)?.is_member() {
        return Ok(1.0);
    }
    let noise = Behavior::uniform(b.scenario());
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > tol_bis {
        let mid = 0.5 * (lo + hi);
        if local_membership_with(&b.mix(&noise, mid)?, opts)?.is_member() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chsh_max;
    use crate::quantum::{singlet_behavior, tsirelson_directions};

    #[test]
    fn deterministic_and_uniform_are_members() {
        let s = Scenario::chsh();
        let d = Behavior::deterministic(s, &[1, 0], &[0, 1]);
        match local_membership(&d, DEFAULT_TOL_LP).unwrap() {
            LocalityCertificate::Member { weights, residual } => {
                assert!(residual <= DEFAULT_TOL_LP);
                assert_eq!(weights.len(), 1);
                assert_eq!(weights[0].0.alice, vec![1, 0]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(local_membership(&Behavior::uniform(s), DEFAULT_TOL_LP)
            .unwrap()
            .is_member());
    }

    #[test]
    fn pr_box_functional_is_chsh_shaped() {
        let pr = Behavior::pr_box();
        let cert = local_membership(&pr, DEFAULT_TOL_LP).unwrap();
        let f = cert.functional().expect("PR box is nonlocal");
        assert!(f.value > f.local_bound + DEFAULT_TOL_LP);
        assert!(
            (f.max_over_strategies(DEFAULT_STRATEGY_CAP).unwrap() - f.local_bound).abs() < 1e-12
        );
        let proj = f.correlator_projection().unwrap();
        let scale = proj.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.0);
        let signs: Vec<f64> = proj.iter().flatten().map(|v| v / scale).collect();
        for v in &signs {
            assert!((v.abs() - 1.0).abs() < 1e-9, "projection {signs:?}");
        }
        let negatives = signs.iter().filter(|v| **v < 0.0).count();
        assert!(negatives % 2 == 1, "projection {signs:?}");
    }

    #[test]
    fn tsirelson_point_is_separated() {
        let (da, db) = tsirelson_directions();
        let p = singlet_behavior(&da, &db).unwrap();
        let cert = local_membership(&p, DEFAULT_TOL_LP).unwrap();
        let f = cert.functional().unwrap();
        assert!(f.value > f.max_over_strategies(DEFAULT_STRATEGY_CAP).unwrap() + DEFAULT_TOL_LP);
    }

    #[test]
    fn visibilities() {
        let pr = local_visibility(&Behavior::pr_box(), DEFAULT_TOL_BIS).unwrap();
        assert!((pr - 0.5).abs() < 1e-5);
        let (da, db) = tsirelson_directions();
        let p = singlet_behavior(&da, &db).unwrap();
        let v = local_visibility(&p, DEFAULT_TOL_BIS).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
        assert!((v - 2.0 / chsh_max(&p).unwrap().value).abs() < 1e-5);
        assert_eq!(
            local_visibility(&Behavior::uniform(Scenario::chsh()), 1e-6).unwrap(),
            1.0
        );
    }

    #[test]
    fn larger_scenario_member() {
        let s = Scenario::new(3, 2, 3, 2).unwrap();
        let all = strategies(s, DEFAULT_STRATEGY_CAP).unwrap();
        let mix = all[3]
            .behavior(s)
            .mix(&all[17].behavior(s), 0.3)
            .unwrap()
            .mix(&all[40].behavior(s), 0.6)
            .unwrap();
        assert!(local_membership(&mix, DEFAULT_TOL_LP).unwrap().is_member());
    }
}
