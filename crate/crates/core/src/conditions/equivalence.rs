//! Randomized verification of the logical equivalences between conditions.

use rayon::prelude::*;

use super::random::{mixed_trial, random_model, trial_rng, Family, PolicyMode};
use super::{
    check_bell_local_conditional, check_bell_local_factorized, check_fr, check_no_conspiracy,
    check_outcome_independence, check_parameter_independence,
};
use crate::error::VerifyError;
use crate::format::serialize_model;
use crate::joint::{build_joint, JointDistribution, Marginal, Var};
use crate::model::{HvModel, EPS_ZERO};

/// Intermediate identities of the derivation may lose up to this factor of
/// the tolerance the antecedent was checked at.
const STEP_SLACK: f64 = 10.0;

/// Counts of trials where one side of a biconditional held without the other,
/// and where an intermediate derivation step failed to reproduce.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DirectionFailures {
    pub lhs_without_rhs: usize,
    pub rhs_without_lhs: usize,
    pub proof_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub name: &'static str,
    pub trials: usize,
    pub agreements: usize,
    /// Serialized model of the first failing trial.
    pub counterexample: Option<String>,
    pub direction_failures: DirectionFailures,
    /// Trials on which the left-hand side held.
    pub lhs_held: usize,
    /// Trials on which the right-hand side held.
    pub rhs_held: usize,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.agreements == self.trials
    }
}

struct Outcome {
    lhs: bool,
    rhs: bool,
    steps_ok: bool,
}

fn collect(name: &'static str, results: Vec<(HvModel, Outcome)>) -> EquivalenceReport {
    let mut report = EquivalenceReport {
        name,
        trials: results.len(),
        agreements: 0,
        counterexample: None,
        direction_failures: DirectionFailures::default(),
        lhs_held: 0,
        rhs_held: 0,
    };
    for (model, o) in results {
        report.lhs_held += o.lhs as usize;
        report.rhs_held += o.rhs as usize;
        if o.lhs && !o.rhs {
            report.direction_failures.lhs_without_rhs += 1;
        }
        if o.rhs && !o.lhs {
            report.direction_failures.rhs_without_lhs += 1;
        }
        if !o.steps_ok {
            report.direction_failures.proof_steps += 1;
        }
        if o.lhs == o.rhs && o.steps_ok {
            report.agreements += 1;
        } else if report.counterexample.is_none() {
            report.counterexample = Some(serialize_model(&model));
        }
    }
    report
}

/// Conditionals of the joint needed by the derivation steps.
struct Tables {
    dims: [usize; 5],
    full: Marginal,
    lab: Marginal,
    labx: Marginal,
    laby: Marginal,
    la: Marginal,
    lb: Marginal,
    lax: Marginal,
    lby: Marginal,
}

impl Tables {
    fn new(j: &JointDistribution) -> Self {
        use Var::*;
        Tables {
            dims: j.dims(),
            full: j.marginal(&Var::ALL),
            lab: j.marginal(&[Lambda, A, B]),
            labx: j.marginal(&[Lambda, A, B, X]),
            laby: j.marginal(&[Lambda, A, B, Y]),
            la: j.marginal(&[Lambda, A]),
            lb: j.marginal(&[Lambda, B]),
            lax: j.marginal(&[Lambda, A, X]),
            lby: j.marginal(&[Lambda, B, Y]),
        }
    }

    /// Calls `f` on every non-vacuous `(lambda, a, b, x, y)` with the
    /// conditionals `[P(x,y|a,b,l), P(x|a,b,l), P(y|a,b,l), P(x|a,l), P(y|b,l)]`
    /// and returns the largest value `f` produces.
    fn max_over(&self, mut f: impl FnMut([f64; 5]) -> f64) -> f64 {
        let [nl, na, nb, nx, ny] = self.dims;
        let mut worst: f64 = 0.0;
        for l in 0..nl {
            for a in 0..na {
                for b in 0..nb {
                    let pab = self.lab.get(&[l, a, b]);
                    if pab < EPS_ZERO {
                        continue;
                    }
                    for x in 0..nx {
                        for y in 0..ny {
                            let v = [
                                self.full.get(&[l, a, b, x, y]) / pab,
                                self.labx.get(&[l, a, b, x]) / pab,
                                self.laby.get(&[l, a, b, y]) / pab,
                                self.lax.get(&[l, a, x]) / self.la.get(&[l, a]),
                                self.lby.get(&[l, b, y]) / self.lb.get(&[l, b]),
                            ];
                            let r = f(v);
                            worst = if r.is_nan() {
                                f64::INFINITY
                            } else {
                                worst.max(r)
                            };
                        }
                    }
                }
            }
        }
        worst
    }

    /// Factorization implies one-sided setting independence (sum over the
    /// other outcome), and then, substituting back, the conditional form.
    fn forward_steps(&self) -> f64 {
        self.max_over(|[pxy, px, py, pxa, pyb]| {
            let summed = (py - pyb).abs().max((px - pxa).abs());
            let cond_x = if py >= EPS_ZERO {
                (pxy / py - pxa).abs()
            } else {
                0.0
            };
            let cond_y = if px >= EPS_ZERO {
                (pxy / px - pyb).abs()
            } else {
                0.0
            };
            summed.max(cond_x).max(cond_y)
        })
    }

    /// Conditional form gives `P(x,y) = P(x|a) P(y|a,b)` and
    /// `P(x,y) = P(y|b) P(x|a,b)`; summing the latter over x yields
    /// `P(y|a,b) = P(y|b)` and hence factorization.
    fn converse_steps(&self) -> f64 {
        self.max_over(|[pxy, px, py, pxa, pyb]| {
            let int1 = (pxy - pxa * py).abs();
            let int2 = (pxy - pyb * px).abs();
            let summed = (py - pyb).abs();
            let factorized = (pxy - pxa * pyb).abs();
            int1.max(int2).max(summed).max(factorized)
        })
    }
}

fn bell_local_trial(m: &HvModel, tol: f64) -> Outcome {
    let lhs = check_bell_local_factorized(m, tol).holds;
    let rhs = check_bell_local_conditional(m, tol).holds;
    let j = build_joint(m, None).expect("generated models are valid");
    let tables = Tables::new(&j);
    let bound = STEP_SLACK * tol;
    let mut steps_ok = true;
    if lhs {
        steps_ok &= tables.forward_steps() <= bound;
    }
    if rhs {
        steps_ok &= tables.converse_steps() <= bound;
    }
    Outcome { lhs, rhs, steps_ok }
}

fn fr_trial(m: &HvModel, tol: f64) -> Outcome {
    let j = build_joint(m, None).expect("generated models are valid");
    let lhs = check_fr(&j, tol).holds;
    let rhs = check_no_conspiracy(&j, tol).holds && check_parameter_independence(&j, tol).holds;
    Outcome {
        lhs,
        rhs,
        steps_ok: true,
    }
}

fn jarrett_trial(m: &HvModel, tol: f64) -> Outcome {
    let j = build_joint(m, None).expect("generated models are valid");
    let lhs = check_bell_local_factorized(m, tol).holds;
    let rhs =
        check_parameter_independence(&j, tol).holds && check_outcome_independence(&j, tol).holds;
    Outcome {
        lhs,
        rhs,
        steps_ok: true,
    }
}

fn run_mixed(
    name: &'static str,
    trials: usize,
    seed: u64,
    tol: f64,
    trial: fn(&HvModel, f64) -> Outcome,
) -> Result<EquivalenceReport, VerifyError> {
    if trials == 0 {
        return Err(VerifyError::NoTrials);
    }
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let (_, _, m) = mixed_trial(seed, t);
            let o = trial(&m, tol);
            (m, o)
        })
        .collect();
    Ok(collect(name, results))
}

/// Factorized Bell-locality agrees with its conditional form on random
/// models, and the intermediate identities of both derivation directions
/// hold whenever their antecedent does.
pub fn verify_bell_local_equivalence(
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<EquivalenceReport, VerifyError> {
    run_mixed(
        "bell-local <=> bell-local-conditional",
        trials,
        seed,
        tol,
        bell_local_trial,
    )
}

/// The FR condition agrees with no-conspiracy together with parameter
/// independence on random models.
pub fn verify_fr_equivalence(
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<EquivalenceReport, VerifyError> {
    run_mixed(
        "fr <=> no-conspiracy & parameter-independence",
        trials,
        seed,
        tol,
        fr_trial,
    )
}

/// Bell-locality agrees with parameter independence together with outcome
/// independence, on `trials_per_family` models of each family.
pub fn verify_jarrett(
    trials_per_family: usize,
    seed: u64,
    tol: f64,
) -> Result<EquivalenceReport, VerifyError> {
    if trials_per_family == 0 {
        return Err(VerifyError::NoTrials);
    }
    let jobs: Vec<(usize, u64)> = (0..Family::ALL.len())
        .flat_map(|f| (0..trials_per_family as u64).map(move |t| (f, t)))
        .collect();
    let results = jobs
        .into_par_iter()
        .map(|(f, t)| {
            let mut rng = trial_rng(seed, (f as u64) << 32 | t);
            let mode = PolicyMode::pick(&mut rng);
            let m = random_model(&mut rng, Family::ALL[f], mode);
            let o = jarrett_trial(&m, tol);
            (m, o)
        })
        .collect();
    Ok(collect(
        "bell-local <=> parameter-independence & outcome-independence",
        results,
    ))
}
