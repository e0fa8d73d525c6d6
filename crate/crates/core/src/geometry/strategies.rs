use crate::error::GeometryError;
use crate::model::{Behavior, Scenario};

/// Default limit on the number of deterministic strategies enumerated.
pub const DEFAULT_STRATEGY_CAP: usize = 1_000_000;

/// Outcome functions `a -> x` and `b -> y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn behavior(&self, s: Scenario) -> Behavior {
        Behavior::deterministic(s, &self.alice, &self.bob)
    }

    /// `sum c[a][b][x][y] D[a][b][x][y]` for this strategy's point mass `D`.
    pub fn evaluate(&self, s: Scenario, coefficients: &[f64]) -> f64 {
        let mut v = 0.0;
        for (a, &x) in self.alice.iter().enumerate() {
            for (b, &y) in self.bob.iter().enumerate() {
                v += coefficients[s.index(a, b, x, y)];
            }
        }
        v
    }
}

/// All deterministic product strategies in a fixed order: strategy `k` reads
/// Alice's outcomes from the low mixed-radix digits of `k` (setting 0 least
/// significant) and Bob's from the remaining ones.
pub fn strategies(s: Scenario, cap: usize) -> Result<Vec<DeterministicStrategy>, GeometryError> {
    let count = match s.deterministic_count() {
        Some(c) if c <= cap => c,
        Some(c) => {
            return Err(GeometryError::CapExceeded {
                count: c.to_string(),
                cap,
            })
        }
        None => {
            return Err(GeometryError::CapExceeded {
                count: format!(
                    "{}^{} * {}^{}",
                    s.outcomes_x, s.settings_a, s.outcomes_y, s.settings_b
                ),
                cap,
            })
        }
    };
    Ok((0..count)
        .map(|mut k| {
            let alice = (0..s.settings_a)
                .map(|_| {
                    let x = k % s.outcomes_x;
                    k /= s.outcomes_x;
                    x
                })
                .collect();
            let bob = (0..s.settings_b)
                .map(|_| {
                    let y = k % s.outcomes_y;
                    k /= s.outcomes_y;
                    y
                })
                .collect();
            DeterministicStrategy { alice, bob }
        })
        .collect())
}

/// Vertices of the local polytope, as behaviors.
pub fn enumerate_deterministic(s: Scenario) -> Result<Vec<Behavior>, GeometryError> {
    enumerate_deterministic_with_cap(s, DEFAULT_STRATEGY_CAP)
}

pub fn enumerate_deterministic_with_cap(
    s: Scenario,
    cap: usize,
) -> Result<Vec<Behavior>, GeometryError> {
    Ok(strategies(s, cap)?.iter().map(|d| d.behavior(s)).collect())
}
