use crate::error::SimulationError;
use crate::geometry::ChshVariant;
use crate::model::{Behavior, Scenario};
use crate::quantum::sign;

use super::Transcript;

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalChsh {
    pub value: f64,
    /// `sqrt(sum_ab (1 - E_ab^2) / n_ab)`.
    pub std_error: f64,
    pub variant: ChshVariant,
    pub correlators: [[f64; 2]; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSummary {
    pub scenario: Scenario,
    pub runs: u64,
    /// Counts indexed like a behavior, `[a][b][x][y]`.
    pub counts: Vec<u64>,
    /// Runs per `(a, b)`, indexed `a * settings_b + b`.
    pub setting_counts: Vec<u64>,
    /// Relative frequencies per `(a, b)`; unsampled rows are uniform.
    pub behavior: Behavior,
    /// Binomial standard error `sqrt(p (1 - p) / n_ab)` per entry; zero for
    /// unsampled rows.
    pub std_errors: Vec<f64>,
    pub unsampled: Vec<(usize, usize)>,
    /// Present in the CHSH scenario when every setting pair was sampled.
    pub chsh: Option<EmpiricalChsh>,
    /// `max_ab 0.5 sum_xy |p_hat - p_ref|` when a reference is given.
    pub tv_distance: Option<f64>,
}

pub fn summarize(
    t: &Transcript,
    reference: Option<&Behavior>,
) -> Result<EmpiricalSummary, SimulationError> {
    if t.runs.is_empty() {
        return Err(SimulationError::EmptyTranscript);
    }
    let s = t.scenario;
    if let Some(r) = reference {
        if r.scenario() != s {
            return Err(crate::error::ModelError::ScenarioMismatch.into());
        }
    }
    let mut counts = vec![0u64; s.behavior_len()];
    for r in &t.runs {
        counts[s.index(r.a, r.b, r.x, r.y)] += 1;
    }
    let mut setting_counts = vec![0u64; s.setting_pairs()];
    let mut unsampled = Vec::new();
    let mut p = vec![0.0; s.behavior_len()];
    let mut std_errors = vec![0.0; s.behavior_len()];
    let k = s.outcome_pairs();
    for a in 0..s.settings_a {
        for b in 0..s.settings_b {
            let ab = a * s.settings_b + b;
            let row = &counts[ab * k..(ab + 1) * k];
            let n: u64 = row.iter().sum();
            setting_counts[ab] = n;
            if n == 0 {
                unsampled.push((a, b));
                p[ab * k..(ab + 1) * k].fill(1.0 / k as f64);
                continue;
            }
            for (i, &c) in row.iter().enumerate() {
                let ph = c as f64 / n as f64;
                p[ab * k + i] = ph;
                std_errors[ab * k + i] = (ph * (1.0 - ph) / n as f64).sqrt();
            }
        }
    }
    let behavior = Behavior::new(s, p)?;

    let chsh = (s == Scenario::chsh() && unsampled.is_empty()).then(|| {
        let mut e = [[0.0; 2]; 2];
        let mut var = 0.0;
        for (a, row) in e.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                for x in 0..2 {
                    for y in 0..2 {
                        *cell += sign(x) * sign(y) * behavior.get(a, b, x, y);
                    }
                }
                var += (1.0 - *cell * *cell) / setting_counts[a * 2 + b] as f64;
            }
        }
        let mut variant = ChshVariant(0);
        let mut value = variant.evaluate(&e);
        for v in ChshVariant::all().skip(1) {
            let val = v.evaluate(&e);
            if val > value {
                variant = v;
                value = val;
            }
        }
        EmpiricalChsh {
            value,
            std_error: var.max(0.0).sqrt(),
            variant,
            correlators: e,
        }
    });

    let tv_distance = reference.map(|r| {
        let mut worst = 0.0_f64;
        for a in 0..s.settings_a {
            for b in 0..s.settings_b {
                if setting_counts[a * s.settings_b + b] == 0 {
                    continue;
                }
                let d: f64 = behavior
                    .row(a, b)
                    .iter()
                    .zip(r.row(a, b))
                    .map(|(p, q)| (p - q).abs())
                    .sum();
                worst = worst.max(0.5 * d);
            }
        }
        worst
    });

    Ok(EmpiricalSummary {
        scenario: s,
        runs: t.runs.len() as u64,
        counts,
        setting_counts,
        behavior,
        std_errors,
        unsampled,
        chsh,
        tv_distance,
    })
}
