//! Seeded random hidden-variable models for the equivalence suites.
//!
//! Probability vectors are drawn by normalizing independent uniform(0,1)
//! draws. Each trial gets its own ChaCha8 stream (`seed`, stream = trial
//! index), so results do not depend on evaluation order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Behavior, Component, HvModel, Scenario, SettingPolicy};

/// What the per-component behaviors are constrained to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Arbitrary conditional distributions.
    Unconstrained,
    /// Product of one-sided marginals; Bell-local.
    Product,
    /// Setting-independent marginals with correlated outcomes: parameter
    /// independence holds, outcome independence fails.
    ParameterIndependentOnly,
}

impl Family {
    pub const ALL: [Family; 3] = [
        Family::Unconstrained,
        Family::Product,
        Family::ParameterIndependentOnly,
    ];

    /// 40% unconstrained, 30% product, 30% parameter-independent only.
    pub fn pick(rng: &mut impl Rng) -> Family {
        let u: f64 = rng.gen();
        if u < 0.4 {
            Family::Unconstrained
        } else if u < 0.7 {
            Family::Product
        } else {
            Family::ParameterIndependentOnly
        }
    }
}

/// How settings are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyMode {
    Uniform,
    /// One random product distribution shared by all components.
    SharedProduct,
    /// One random non-product distribution shared by all components.
    SharedCorrelated,
    /// An independent random distribution per component.
    LambdaDependent,
}

impl PolicyMode {
    pub fn pick(rng: &mut impl Rng) -> PolicyMode {
        match rng.gen_range(0..4) {
            0 => PolicyMode::Uniform,
            1 => PolicyMode::SharedProduct,
            2 => PolicyMode::SharedCorrelated,
            _ => PolicyMode::LambdaDependent,
        }
    }
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Flat Dirichlet draw of length `n`.
pub fn probability_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= sum);
    v
}

pub fn random_scenario(rng: &mut impl Rng) -> Scenario {
    Scenario {
        settings_a: rng.gen_range(2..=3),
        settings_b: rng.gen_range(2..=3),
        outcomes_x: rng.gen_range(2..=3),
        outcomes_y: rng.gen_range(2..=3),
    }
}

pub fn random_behavior(rng: &mut impl Rng, s: Scenario, family: Family) -> Behavior {
    match family {
        Family::Unconstrained => {
            let mut p = Vec::with_capacity(s.behavior_len());
            for _ in 0..s.setting_pairs() {
                p.extend(probability_vector(rng, s.outcome_pairs()));
            }
            Behavior::new(s, p).expect("sized from scenario")
        }
        Family::Product => {
            let alice = side_marginals(rng, s.settings_a, s.outcomes_x);
            let bob = side_marginals(rng, s.settings_b, s.outcomes_y);
            Behavior::from_fn(s, |a, b, x, y| alice[a][x] * bob[b][y])
        }
        Family::ParameterIndependentOnly => {
            let alice = side_marginals(rng, s.settings_a, s.outcomes_x);
            let bob = side_marginals(rng, s.settings_b, s.outcomes_y);
            let mut p = Vec::with_capacity(s.behavior_len());
            for pa in &alice {
                for pb in &bob {
                    p.extend(correlated_block(rng, pa, pb));
                }
            }
            Behavior::new(s, p).expect("sized from scenario")
        }
    }
}

fn side_marginals(rng: &mut impl Rng, settings: usize, outcomes: usize) -> Vec<Vec<f64>> {
    (0..settings)
        .map(|_| probability_vector(rng, outcomes))
        .collect()
}

/// `pa (x) pb + t * g` where `g` has zero row and column sums, so both
/// marginals are exactly `pa` and `pb`, and `t` keeps every entry positive.
fn correlated_block(rng: &mut impl Rng, pa: &[f64], pb: &[f64]) -> Vec<f64> {
    let (nx, ny) = (pa.len(), pb.len());
    let h: Vec<f64> = (0..nx * ny).map(|_| rng.gen::<f64>() - 0.5).collect();
    let row_mean: Vec<f64> = (0..nx)
        .map(|x| (0..ny).map(|y| h[x * ny + y]).sum::<f64>() / ny as f64)
        .collect();
    let col_mean: Vec<f64> = (0..ny)
        .map(|y| (0..nx).map(|x| h[x * ny + y]).sum::<f64>() / nx as f64)
        .collect();
    let grand = h.iter().sum::<f64>() / (nx * ny) as f64;
    let g: Vec<f64> = (0..nx * ny)
        .map(|i| h[i] - row_mean[i / ny] - col_mean[i % ny] + grand)
        .collect();
    let mut t_max = f64::INFINITY;
    for x in 0..nx {
        for y in 0..ny {
            let gi = g[x * ny + y];
            if gi < 0.0 {
                t_max = t_max.min(pa[x] * pb[y] / -gi);
            }
        }
    }
    let t = if t_max.is_finite() {
        t_max * rng.gen_range(0.2..0.9)
    } else {
        0.0
    };
    (0..nx * ny)
        .map(|i| pa[i / ny] * pb[i % ny] + t * g[i])
        .collect()
}

fn random_policy(rng: &mut impl Rng, s: Scenario, correlated: bool) -> SettingPolicy {
    if correlated {
        let q = probability_vector(rng, s.setting_pairs());
        SettingPolicy::new(s.settings_a, s.settings_b, q).expect("sized from scenario")
    } else {
        let pa = probability_vector(rng, s.settings_a);
        let pb = probability_vector(rng, s.settings_b);
        SettingPolicy::product(&pa, &pb)
    }
}

/// A model whose every component follows `family`.
pub fn random_model(rng: &mut impl Rng, family: Family, mode: PolicyMode) -> HvModel {
    let s = random_scenario(rng);
    let lambdas = rng.gen_range(1..=3);
    let weights = probability_vector(rng, lambdas);
    let shared = match mode {
        PolicyMode::Uniform => Some(SettingPolicy::uniform(s.settings_a, s.settings_b)),
        PolicyMode::SharedProduct => Some(random_policy(rng, s, false)),
        PolicyMode::SharedCorrelated => Some(random_policy(rng, s, true)),
        PolicyMode::LambdaDependent => None,
    };
    let components = weights
        .into_iter()
        .map(|weight| {
            let policy = shared
                .clone()
                .unwrap_or_else(|| random_policy(rng, s, true));
            Component {
                weight,
                policy,
                behavior: random_behavior(rng, s, family),
            }
        })
        .collect();
    HvModel::new(s, components, None).expect("consistent by construction")
}

/// The model of trial `trial`, with family and policy mode drawn from the
/// trial's own stream.
pub fn mixed_trial(seed: u64, trial: u64) -> (Family, PolicyMode, HvModel) {
    let mut rng = trial_rng(seed, trial);
    let family = Family::pick(&mut rng);
    let mode = PolicyMode::pick(&mut rng);
    let model = random_model(&mut rng, family, mode);
    (family, mode, model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EPS_NORM;

    #[test]
    fn same_trial_same_model() {
        assert_eq!(mixed_trial(7, 3).2, mixed_trial(7, 3).2);
        assert_ne!(mixed_trial(7, 3).2, mixed_trial(7, 4).2);
    }

    #[test]
    fn generated_models_are_valid() {
        for t in 0..200 {
            let (_, _, m) = mixed_trial(11, t);
            assert!(m.validate(EPS_NORM).is_valid(), "trial {t}");
        }
    }

    #[test]
    fn family_mix_is_roughly_forty_thirty_thirty() {
        let mut counts = [0usize; 3];
        for t in 0..3000 {
            let f = mixed_trial(1, t).0;
            counts[Family::ALL.iter().position(|g| *g == f).unwrap()] += 1;
        }
        // binomial sd is below 30 for each count
        assert!((counts[0] as i64 - 1200).abs() < 150, "{counts:?}");
        assert!((counts[1] as i64 - 900).abs() < 150, "{counts:?}");
        assert!((counts[2] as i64 - 900).abs() < 150, "{counts:?}");
    }

    #[test]
    fn pi_only_block_keeps_marginals() {
        let mut rng = trial_rng(5, 0);
        let pa = probability_vector(&mut rng, 3);
        let pb = probability_vector(&mut rng, 2);
        let block = correlated_block(&mut rng, &pa, &pb);
        for x in 0..3 {
            let row: f64 = (0..2).map(|y| block[x * 2 + y]).sum();
            assert!((row - pa[x]).abs() < 1e-15);
        }
        for y in 0..2 {
            let col: f64 = (0..3).map(|x| block[x * 2 + y]).sum();
            assert!((col - pb[y]).abs() < 1e-15);
        }
        assert!(block.iter().all(|p| *p > 0.0));
    }
}
