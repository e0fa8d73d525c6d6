//! Monte-Carlo runs of a hidden-variable model.
//!
//! Each run draws `lambda`, then `(a, b)` from that component's policy, then
//! `(x, y)` from its behavior, using three uniforms from the run's own
//! SplitMix64 substream. Runs are generated in parallel but depend only on
//! `(seed, run index)`, so the transcript does not depend on the thread count.

mod empirical;
pub mod rng;
mod summary;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::SimulationError;
use crate::model::{HvModel, Scenario, EPS_NORM};

pub use empirical::empirical_condition_check;
pub use rng::SplitMix64;
pub use summary::{summarize, EmpiricalChsh, EmpiricalSummary};

/// Runs handed to one rayon task.
const BLOCK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RunRecord {
    pub run: u64,
    pub lambda: usize,
    pub a: usize,
    pub b: usize,
    pub x: usize,
    pub y: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub scenario: Scenario,
    /// Number of hidden-variable components in the simulated model.
    pub lambdas: usize,
    pub seed: u64,
    /// Hex SHA-256 of the model, see [`model_digest`].
    pub model_digest: String,
    pub runs: Vec<RunRecord>,
}

/// SHA-256 over a canonical encoding: a tag, the four scenario counts, the
/// component count, then per component its weight, policy and behavior as
/// little-endian IEEE bits, and finally the extension labels if present.
pub fn model_digest(m: &HvModel) -> String {
    let mut h = Sha256::new();
    h.update(b"bellkit-model-v1");
    let s = m.scenario();
    for n in [
        s.settings_a,
        s.settings_b,
        s.outcomes_x,
        s.outcomes_y,
        m.len(),
    ] {
        h.update((n as u64).to_le_bytes());
    }
    for c in m.components() {
        h.update(c.weight.to_bits().to_le_bytes());
        for v in c.policy.as_slice().iter().chain(c.behavior.as_slice()) {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    match m.labels() {
        None => h.update([0u8]),
        Some(labels) => {
            h.update([1u8]);
            for l in labels {
                for text in [&l.psi, &l.xi] {
                    h.update((text.len() as u64).to_le_bytes());
                    h.update(text.as_bytes());
                }
            }
        }
    }
    hex::encode(h.finalize())
}

/// Cumulative sums for inverse-CDF sampling.
fn cumulative(p: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    p.into_iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// First index whose cumulative mass exceeds `u`. Zero-probability entries
/// never satisfy this before an earlier entry does. If rounding leaves the
/// total just below `u`, the last entry with positive mass is returned.
fn draw(cdf: &[f64], u: f64) -> usize {
    if let Some(i) = cdf.iter().position(|&c| u < c) {
        return i;
    }
    let mut prev = 0.0;
    let mut last = 0;
    for (i, &c) in cdf.iter().enumerate() {
        if c > prev {
            last = i;
        }
        prev = c;
    }
    last
}

struct Sampler {
    scenario: Scenario,
    weights: Vec<f64>,
    /// Per component, over flattened `(a, b)`.
    policies: Vec<Vec<f64>>,
    /// Per component and `(a, b)`, over flattened `(x, y)`.
    behaviors: Vec<Vec<Vec<f64>>>,
}

impl Sampler {
    fn new(m: &HvModel) -> Self {
        let s = m.scenario();
        Sampler {
            scenario: s,
            weights: cumulative(m.components().iter().map(|c| c.weight)),
            policies: m
                .components()
                .iter()
                .map(|c| cumulative(c.policy.as_slice().iter().copied()))
                .collect(),
            behaviors: m
                .components()
                .iter()
                .map(|c| {
                    (0..s.settings_a)
                        .flat_map(|a| (0..s.settings_b).map(move |b| (a, b)))
                        .map(|(a, b)| cumulative(c.behavior.row(a, b).iter().copied()))
                        .collect()
                })
                .collect(),
        }
    }

    fn run(&self, seed: u64, run: u64) -> RunRecord {
        let mut rng = SplitMix64::for_run(seed, run);
        let lambda = draw(&self.weights, rng.next_f64());
        let ab = draw(&self.policies[lambda], rng.next_f64());
        let xy = draw(&self.behaviors[lambda][ab], rng.next_f64());
        let s = self.scenario;
        RunRecord {
            run,
            lambda,
            a: ab / s.settings_b,
            b: ab % s.settings_b,
            x: xy / s.outcomes_y,
            y: xy % s.outcomes_y,
        }
    }
}

/// Simulates `n_runs` runs of `m`, which must be valid at the default
/// normalization tolerance.
pub fn simulate(m: &HvModel, n_runs: u64, seed: u64) -> Result<Transcript, SimulationError> {
    if n_runs == 0 {
        return Err(SimulationError::NoRuns);
    }
    let report = m.validate(EPS_NORM);
    if !report.is_valid() {
        return Err(crate::error::ModelError::Invalid(report).into());
    }
    let sampler = Sampler::new(m);
    let blocks = n_runs.div_ceil(BLOCK);
    let runs: Vec<RunRecord> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let end = ((k + 1) * BLOCK).min(n_runs);
            (k * BLOCK..end).map(|r| sampler.run(seed, r))
        })
        .collect();
    Ok(Transcript {
        scenario: m.scenario(),
        lambdas: m.len(),
        seed,
        model_digest: model_digest(m),
        runs,
    })
}
