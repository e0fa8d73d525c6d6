//! Finite-sample versions of the checkers that only need run frequencies.
//!
//! Every residual is recast as a comparison of two proportions: the
//! frequency of a target event inside a subgroup against the frequency in a
//! second, disjoint group sharing the same context. The deviation of a cell
//! is the pooled two-proportion z-score, and a condition holds when no cell
//! exceeds the threshold `z`. Cells with an empty group are vacuous.

use crate::conditions::{Cell, ConditionKind, ConditionReport};
use crate::error::SimulationError;
use crate::joint::{JointDistribution, Var};

use super::Transcript;

/// Successes and trials of the two groups compared by one cell.
#[derive(Clone, Copy, Debug)]
struct Split {
    k1: f64,
    n1: f64,
    k2: f64,
    n2: f64,
}

impl Split {
    fn z(&self) -> f64 {
        let (p1, p2) = (self.k1 / self.n1, self.k2 / self.n2);
        let pooled = (self.k1 + self.k2) / (self.n1 + self.n2);
        let se = (pooled * (1.0 - pooled) * (1.0 / self.n1 + 1.0 / self.n2)).sqrt();
        if se > 0.0 {
            (p1 - p2).abs() / se
        } else {
            // pooled frequency is 0 or 1, so both groups agree exactly
            0.0
        }
    }
}

fn counts(t: &Transcript) -> JointDistribution {
    let s = t.scenario;
    let len = s.behavior_len();
    let mut table = vec![0.0; t.lambdas * len];
    for r in &t.runs {
        table[r.lambda * len + s.index(r.a, r.b, r.x, r.y)] += 1.0;
    }
    JointDistribution::from_raw(s, t.lambdas, table)
}

fn splits(t: &Transcript, condition: ConditionKind) -> Result<Vec<(Cell, Split)>, SimulationError> {
    use Var::*;
    let j = counts(t);
    let [nl, na, nb, nx, ny] = j.dims();
    let total = t.runs.len() as f64;
    let mut out = Vec::new();
    match condition {
        ConditionKind::NoSignaling => {
            let ab = j.marginal(&[A, B]);
            let abx = j.marginal(&[A, B, X]);
            let aby = j.marginal(&[A, B, Y]);
            for a in 0..na {
                for b in 0..nb {
                    for b2 in b + 1..nb {
                        for x in 0..nx {
                            let sp = Split {
                                k1: abx.get(&[a, b, x]),
                                n1: ab.get(&[a, b]),
                                k2: abx.get(&[a, b2, x]),
                                n2: ab.get(&[a, b2]),
                            };
                            out.push((Cell::new(0, vec![a, b, b2, x]), sp));
                        }
                    }
                }
            }
            for a in 0..na {
                for a2 in a + 1..na {
                    for b in 0..nb {
                        for y in 0..ny {
                            let sp = Split {
                                k1: aby.get(&[a, b, y]),
                                n1: ab.get(&[a, b]),
                                k2: aby.get(&[a2, b, y]),
                                n2: ab.get(&[a2, b]),
                            };
                            out.push((Cell::new(1, vec![a, a2, b, y]), sp));
                        }
                    }
                }
            }
        }
        ConditionKind::NoConspiracy => {
            let lab = j.marginal(&[Lambda, A, B]);
            let la = j.marginal(&[Lambda, A]);
            let lb = j.marginal(&[Lambda, B]);
            let ma = j.marginal(&[A]);
            let mb = j.marginal(&[B]);
            for line in 0..2u8 {
                for l in 0..nl {
                    for a in 0..na {
                        for b in 0..nb {
                            let k1 = lab.get(&[l, a, b]);
                            // line 0: frequency of A = a given (B = b, lambda) against the rest;
                            // line 1: frequency of B = b given (A = a, lambda) against the rest
                            let (n1, target) = if line == 0 {
                                (lb.get(&[l, b]), ma.get(&[a]))
                            } else {
                                (la.get(&[l, a]), mb.get(&[b]))
                            };
                            let sp = Split {
                                k1,
                                n1,
                                k2: target - k1,
                                n2: total - n1,
                            };
                            out.push((Cell::new(line, vec![l, a, b]), sp));
                        }
                    }
                }
            }
        }
        ConditionKind::ParameterIndependence => {
            let lab = j.marginal(&[Lambda, A, B]);
            let la = j.marginal(&[Lambda, A]);
            let lb = j.marginal(&[Lambda, B]);
            let labx = j.marginal(&[Lambda, A, B, X]);
            let laby = j.marginal(&[Lambda, A, B, Y]);
            let lax = j.marginal(&[Lambda, A, X]);
            let lby = j.marginal(&[Lambda, B, Y]);
            for l in 0..nl {
                for a in 0..na {
                    for b in 0..nb {
                        let n1 = lab.get(&[l, a, b]);
                        for x in 0..nx {
                            let k1 = labx.get(&[l, a, b, x]);
                            let sp = Split {
                                k1,
                                n1,
                                k2: lax.get(&[l, a, x]) - k1,
                                n2: la.get(&[l, a]) - n1,
                            };
                            out.push((Cell::new(0, vec![l, a, b, x]), sp));
                        }
                    }
                }
            }
            for l in 0..nl {
                for a in 0..na {
                    for b in 0..nb {
                        let n1 = lab.get(&[l, a, b]);
                        for y in 0..ny {
                            let k1 = laby.get(&[l, a, b, y]);
                            let sp = Split {
                                k1,
                                n1,
                                k2: lby.get(&[l, b, y]) - k1,
                                n2: lb.get(&[l, b]) - n1,
                            };
                            out.push((Cell::new(1, vec![l, a, b, y]), sp));
                        }
                    }
                }
            }
        }
        ConditionKind::OutcomeIndependence => {
            let lab = j.marginal(&[Lambda, A, B]);
            let labx = j.marginal(&[Lambda, A, B, X]);
            let laby = j.marginal(&[Lambda, A, B, Y]);
            for line in 0..2u8 {
                for l in 0..nl {
                    for a in 0..na {
                        for b in 0..nb {
                            let n = lab.get(&[l, a, b]);
                            for x in 0..nx {
                                for y in 0..ny {
                                    let k1 = j.get(l, a, b, x, y);
                                    // line 0 splits on y and counts x; line 1 the reverse
                                    let (n1, target) = if line == 0 {
                                        (laby.get(&[l, a, b, y]), labx.get(&[l, a, b, x]))
                                    } else {
                                        (labx.get(&[l, a, b, x]), laby.get(&[l, a, b, y]))
                                    };
                                    let sp = Split {
                                        k1,
                                        n1,
                                        k2: target - k1,
                                        n2: n - n1,
                                    };
                                    out.push((Cell::new(line, vec![l, a, b, x, y]), sp));
                                }
                            }
                        }
                    }
                }
            }
        }
        other => return Err(SimulationError::UnsupportedCondition(other.name().into())),
    }
    Ok(out)
}

/// Finite-sample check of `condition` on the transcript's frequencies.
///
/// Supported conditions are no-signaling, no-conspiracy, parameter
/// independence and outcome independence. `max_deviation` is the largest
/// z-score, `tolerance_used` is `z`, and `sample_support` is the smallest
/// group size among evaluated cells (0 when every cell is vacuous).
pub fn empirical_condition_check(
    t: &Transcript,
    condition: ConditionKind,
    z: f64,
) -> Result<ConditionReport, SimulationError> {
    if t.runs.is_empty() {
        return Err(SimulationError::EmptyTranscript);
    }
    let mut max_deviation = 0.0;
    let mut worst_cell = None;
    let mut vacuous_cells = 0;
    let mut evaluated_cells = 0;
    let mut support: Option<f64> = None;
    for (cell, sp) in splits(t, condition)? {
        if sp.n1 <= 0.0 || sp.n2 <= 0.0 {
            vacuous_cells += 1;
            continue;
        }
        evaluated_cells += 1;
        let m = sp.n1.min(sp.n2);
        support = Some(support.map_or(m, |s: f64| s.min(m)));
        let d = sp.z();
        if worst_cell.is_none() || d > max_deviation {
            max_deviation = d;
            worst_cell = Some(cell);
        }
    }
    Ok(ConditionReport {
        condition,
        holds: max_deviation <= z,
        max_deviation,
        worst_cell,
        vacuous_cells,
        evaluated_cells,
        tolerance_used: z,
        sample_support: Some(support.unwrap_or(0.0) as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Behavior, HvModel, Scenario};
    use crate::quantum::{singlet_behavior, tsirelson_directions};
    use crate::simulator::simulate;

    fn signaling(shift: f64) -> Behavior {
        // Alice's marginal for outcome 0 is 0.5 + shift when b = 1
        Behavior::from_fn(Scenario::chsh(), |_, b, x, _| {
            let px = if b == 1 { 0.5 + shift } else { 0.5 };
            0.5 * if x == 0 { px } else { 1.0 - px }
        })
    }

    #[test]
    fn singlet_transcript_does_not_signal() {
        let (da, db) = tsirelson_directions();
        let m = HvModel::single(singlet_behavior(&da, &db).unwrap());
        let t = simulate(&m, 100_000, 9).unwrap();
        let r = empirical_condition_check(&t, ConditionKind::NoSignaling, 5.0).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.tolerance_used, 5.0);
        assert_eq!(r.vacuous_cells, 0);
    }

    #[test]
    fn signaling_transcript_is_detected() {
        let t = simulate(&HvModel::single(signaling(0.2)), 10_000, 4).unwrap();
        let r = empirical_condition_check(&t, ConditionKind::NoSignaling, 5.0).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_cell.as_ref().unwrap().line, 0);
        let pi = empirical_condition_check(&t, ConditionKind::ParameterIndependence, 5.0).unwrap();
        assert!(!pi.holds);
    }

    #[test]
    fn singlet_fails_outcome_independence_only() {
        let (da, db) = tsirelson_directions();
        let m = HvModel::single(singlet_behavior(&da, &db).unwrap());
        let t = simulate(&m, 20_000, 2).unwrap();
        let oi = empirical_condition_check(&t, ConditionKind::OutcomeIndependence, 5.0).unwrap();
        assert!(!oi.holds);
        for k in [
            ConditionKind::ParameterIndependence,
            ConditionKind::NoConspiracy,
        ] {
            assert!(empirical_condition_check(&t, k, 5.0).unwrap().holds, "{k}");
        }
    }

    #[test]
    fn tiny_samples_report_support() {
        let t = simulate(&HvModel::single(Behavior::pr_box()), 10, 1).unwrap();
        let r = empirical_condition_check(&t, ConditionKind::NoSignaling, 5.0).unwrap();
        assert!(r.holds);
        assert!(r.sample_support.unwrap() <= 10);
    }

    #[test]
    fn unsupported_conditions() {
        let t = simulate(&HvModel::single(Behavior::pr_box()), 10, 1).unwrap();
        for k in [
            ConditionKind::BellLocalFactorized,
            ConditionKind::FreeChoice,
            ConditionKind::NoExtension,
        ] {
            assert!(matches!(
                empirical_condition_check(&t, k, 5.0),
                Err(SimulationError::UnsupportedCondition(_))
            ));
        }
    }
}
