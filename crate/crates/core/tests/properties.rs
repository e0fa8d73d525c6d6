use proptest::prelude::*;

use bellkit_core::conditions::random::{random_model, trial_rng, Family, PolicyMode};
use bellkit_core::conditions::{
    check_no_signaling, check_parameter_independence, BellLocalConditional, BellLocalFactorized,
    ConditionReport, FreeChoice, NoConspiracy, NoSignaling, OutcomeIndependence,
    ParameterIndependence, Residual,
};
use bellkit_core::format::{parse_model, parse_transcript, serialize_model, write_transcript};
use bellkit_core::geometry::{
    chsh_max, enumerate_deterministic, local_membership, LocalityCertificate,
};
use bellkit_core::quantum::{pure_state_behavior, MeasurementDirection, TwoQubitState};
use bellkit_core::simulator::simulate;
use bellkit_core::{averaged_behavior, build_joint, Behavior, HvModel, Scenario, Var};
use num_complex::Complex64;

const MODES: [PolicyMode; 4] = [
    PolicyMode::Uniform,
    PolicyMode::SharedProduct,
    PolicyMode::SharedCorrelated,
    PolicyMode::LambdaDependent,
];

fn model(seed: u64, family: usize, mode: usize) -> HvModel {
    random_model(&mut trial_rng(seed, 0), Family::ALL[family], MODES[mode])
}

fn any_model() -> impl Strategy<Value = HvModel> {
    (any::<u64>(), 0..3usize, 0..4usize).prop_map(|(s, f, m)| model(s, f, m))
}

fn free_model() -> impl Strategy<Value = HvModel> {
    // settings independent of lambda
    (any::<u64>(), 0..3usize, 0..3usize).prop_map(|(s, f, m)| model(s, f, m))
}

fn direction() -> impl Strategy<Value = MeasurementDirection> {
    (0.0..180.0f64, 0.0..360.0f64).prop_map(|(p, a)| MeasurementDirection::from_angles(p, a))
}

fn state() -> impl Strategy<Value = TwoQubitState> {
    prop::array::uniform8(-1.0..1.0f64)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let amps: [Complex64; 4] =
                std::array::from_fn(|i| Complex64::new(v[2 * i] / n, v[2 * i + 1] / n));
            TwoQubitState::new(amps).unwrap()
        })
}

fn all_reports(m: &HvModel, tol: f64) -> Vec<ConditionReport> {
    let j = build_joint(m, None).unwrap();
    let avg = averaged_behavior(m);
    vec![
        NoConspiracy::new(&j).report(tol),
        ParameterIndependence::new(&j).report(tol),
        OutcomeIndependence::new(&j).report(tol),
        FreeChoice::new(&j).report(tol),
        BellLocalFactorized::new(m).report(tol),
        BellLocalConditional::new(m).report(tol),
        NoSignaling::new(&avg).report(tol),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_is_weight_times_policy_times_behavior(m in any_model()) {
        let j = build_joint(&m, None).unwrap();
        let s = m.scenario();
        let total: f64 = j.as_slice().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for (l, c) in m.components().iter().enumerate() {
            for a in 0..s.settings_a {
                for b in 0..s.settings_b {
                    for x in 0..s.outcomes_x {
                        for y in 0..s.outcomes_y {
                            let expect = c.weight * c.policy.get(a, b) * c.behavior.get(a, b, x, y);
                            prop_assert!((j.get(l, a, b, x, y) - expect).abs() < 1e-15);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn conditioning_on_lambda_and_settings_recovers_behaviors(m in any_model()) {
        let j = build_joint(&m, None).unwrap();
        let s = m.scenario();
        for (l, c) in m.components().iter().enumerate() {
            for a in 0..s.settings_a {
                for b in 0..s.settings_b {
                    let cond = j
                        .conditional(&[Var::X, Var::Y], &[(Var::Lambda, l), (Var::A, a), (Var::B, b)])
                        .unwrap();
                    if cond.vacuous {
                        continue;
                    }
                    for x in 0..s.outcomes_x {
                        for y in 0..s.outcomes_y {
                            prop_assert!((cond.get(&[x, y]) - c.behavior.get(a, b, x, y)).abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn marginalizing_lambda_gives_averaged_behavior(seed in any::<u64>(), f in 0..3usize) {
        let m = model(seed, f, 0);
        let j = build_joint(&m, None).unwrap();
        let avg = averaged_behavior(&m);
        let s = m.scenario();
        for a in 0..s.settings_a {
            for b in 0..s.settings_b {
                let cond = j.conditional(&[Var::X, Var::Y], &[(Var::A, a), (Var::B, b)]).unwrap();
                for x in 0..s.outcomes_x {
                    for y in 0..s.outcomes_y {
                        prop_assert!((cond.get(&[x, y]) - avg.get(a, b, x, y)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn verdicts_are_monotone_in_tolerance(m in any_model(), t1 in 0.0..0.3f64, dt in 0.0..0.3f64) {
        let lo = all_reports(&m, t1);
        let hi = all_reports(&m, t1 + dt);
        for (r1, r2) in lo.iter().zip(&hi) {
            prop_assert_eq!(r1.max_deviation, r2.max_deviation);
            prop_assert!(!r1.holds || r2.holds);
        }
    }

    #[test]
    fn worst_cell_reproduces_max_deviation(m in any_model()) {
        let j = build_joint(&m, None).unwrap();
        let avg = averaged_behavior(&m);
        let checkers: Vec<Box<dyn Residual + '_>> = vec![
            Box::new(NoConspiracy::new(&j)),
            Box::new(ParameterIndependence::new(&j)),
            Box::new(OutcomeIndependence::new(&j)),
            Box::new(FreeChoice::new(&j)),
            Box::new(BellLocalFactorized::new(&m)),
            Box::new(BellLocalConditional::new(&m)),
            Box::new(NoSignaling::new(&avg)),
        ];
        for c in &checkers {
            let r = c.report(1e-9);
            prop_assert_eq!(r.vacuous_cells + r.evaluated_cells, c.cells().len());
            match &r.worst_cell {
                Some(cell) => prop_assert_eq!(c.deviation(cell), Some(r.max_deviation)),
                None => prop_assert_eq!(r.evaluated_cells, 0),
            }
            for cell in c.cells() {
                if let Some(d) = c.deviation(&cell) {
                    prop_assert!(d <= r.max_deviation);
                }
            }
        }
    }

    #[test]
    fn parameter_independence_implies_no_signaling(m in free_model()) {
        let j = build_joint(&m, None).unwrap();
        let tol = 1e-9;
        if check_parameter_independence(&j, tol).holds {
            prop_assert!(check_no_signaling(&averaged_behavior(&m), 10.0 * tol).holds);
        }
    }

    #[test]
    fn model_file_round_trip(m in any_model()) {
        let text = serialize_model(&m);
        let back = parse_model(&text).unwrap().load(1e-9).unwrap().hv_model();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn transcript_round_trip(m in any_model(), n in 1u64..300, seed in any::<u64>()) {
        let t = simulate(&m, n, seed).unwrap();
        let mut buf = Vec::new();
        write_transcript(&t, &mut buf).unwrap();
        let back = parse_transcript(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn quantum_behaviors_do_not_signal(
        psi in state(),
        da in prop::collection::vec(direction(), 1..4),
        db in prop::collection::vec(direction(), 1..4),
    ) {
        let b = pure_state_behavior(&psi, &da, &db).unwrap();
        let r = check_no_signaling(&b, 1e-12);
        prop_assert!(r.holds, "{:?}", r);
    }

    #[test]
    fn quantum_chsh_respects_tsirelson(psi in state(), d in prop::collection::vec(direction(), 4)) {
        let b = pure_state_behavior(&psi, &d[..2], &d[2..]).unwrap();
        prop_assert!(chsh_max(&b).unwrap().value <= 8f64.sqrt() + 1e-9);
    }

    #[test]
    fn local_mixtures_respect_chsh_bound(w in prop::collection::vec(0.0..1.0f64, 16)) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 1e-6);
        let verts = enumerate_deterministic(Scenario::chsh()).unwrap();
        let p = Behavior::from_fn(Scenario::chsh(), |a, b, x, y| {
            verts.iter().zip(&w).map(|(v, wi)| wi / total * v.get(a, b, x, y)).sum()
        });
        prop_assert!(chsh_max(&p).unwrap().value <= 2.0 + 1e-9);
        prop_assert!(local_membership(&p, 1e-8).unwrap().is_member());
    }

    #[test]
    fn certificates_verify(v in 0.0..1.0f64, u in 0.0..1.0f64) {
        // noisy PR box mixed with a deterministic point
        let s = Scenario::chsh();
        let p = Behavior::pr_box()
            .mix(&Behavior::uniform(s), v).unwrap()
            .mix(&Behavior::deterministic(s, &[0, 1], &[1, 1]), u).unwrap();
        match local_membership(&p, 1e-8).unwrap() {
            LocalityCertificate::Member { weights, .. } => {
                let recon = Behavior::from_fn(s, |a, b, x, y| {
                    weights.iter().map(|(d, w)| w * d.behavior(s).get(a, b, x, y)).sum()
                });
                prop_assert!(recon.max_abs_diff(&p) < 1e-8);
                prop_assert!(weights.iter().all(|(_, w)| *w >= 0.0));
            }
            LocalityCertificate::NonMember(f) => {
                let bound = verts_max(&f.coefficients);
                prop_assert!(f.evaluate(&p) > bound + 1e-8);
                // only CHSH violations separate points on this segment
                prop_assert!(chsh_max(&p).unwrap().value > 2.0);
            }
        }
    }
}

fn verts_max(c: &[f64]) -> f64 {
    enumerate_deterministic(Scenario::chsh())
        .unwrap()
        .iter()
        .map(|d| d.as_slice().iter().zip(c).map(|(p, c)| p * c).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}
