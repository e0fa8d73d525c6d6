use crate::error::GeometryError;
use crate::model::{Behavior, Scenario};
use crate::quantum::sign;

/// `E(a,b) = sum_{x,y} s(x) s(y) P(x,y|a,b)` with outcome 0 as `+1` and
/// outcome 1 as `-1`. Indexed `[a][b]`.
pub fn correlators(b: &Behavior) -> Result<Vec<Vec<f64>>, GeometryError> {
    let s = b.scenario();
    if !s.is_binary() {
        return Err(GeometryError::NotBinary(s.to_string()));
    }
    Ok((0..s.settings_a)
        .map(|a| {
            (0..s.settings_b)
                .map(|bb| {
                    let mut e = 0.0;
                    for x in 0..2 {
                        for y in 0..2 {
                            e += sign(x) * sign(y) * b.get(a, bb, x, y);
                        }
                    }
                    e
                })
                .collect()
        })
        .collect())
}

/// One of the eight CHSH expressions
/// `sign * (E00 + E01 + E10 + E11 - 2 E(minus))`: the minus sign sits on one
/// of the four correlators and the whole expression may be negated.
///
/// Variant `k` puts the minus on `E(k/4, (k/2)%2)` and negates when `k` is
/// odd; variant 6 is the textbook `E00 + E01 + E10 - E11`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChshVariant(pub usize);

impl ChshVariant {
    pub fn all() -> impl Iterator<Item = ChshVariant> {
        (0..8).map(ChshVariant)
    }

    pub fn minus_cell(self) -> (usize, usize) {
        (self.0 / 4, (self.0 / 2) % 2)
    }

    pub fn overall_sign(self) -> f64 {
        if self.0.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Coefficient of `E(a,b)`.
    pub fn coefficient(self, a: usize, b: usize) -> f64 {
        let c = if (a, b) == self.minus_cell() {
            -1.0
        } else {
            1.0
        };
        self.overall_sign() * c
    }

    pub fn evaluate(self, e: &[[f64; 2]; 2]) -> f64 {
        let mut v = 0.0;
        for (a, row) in e.iter().enumerate() {
            for (b, val) in row.iter().enumerate() {
                v += self.coefficient(a, b) * val;
            }
        }
        v
    }

    pub fn describe(self) -> String {
        let mut out = String::new();
        for a in 0..2 {
            for b in 0..2 {
                let c = self.coefficient(a, b);
                if out.is_empty() {
                    if c < 0.0 {
                        out.push('-');
                    }
                } else {
                    out.push_str(if c < 0.0 { " - " } else { " + " });
                }
                out.push_str(&format!("E{a}{b}"));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChshResult {
    pub value: f64,
    pub variant: ChshVariant,
    pub correlators: [[f64; 2]; 2],
}

/// Largest of the eight CHSH expressions.
pub fn chsh_max(b: &Behavior) -> Result<ChshResult, GeometryError> {
    if b.scenario() != Scenario::chsh() {
        return Err(GeometryError::NotChsh(b.scenario().to_string()));
    }
    let e = correlators(b)?;
    let table = [[e[0][0], e[0][1]], [e[1][0], e[1][1]]];
    let mut best = ChshVariant(0);
    let mut value = best.evaluate(&table);
    for v in ChshVariant::all().skip(1) {
        let val = v.evaluate(&table);
        if val > value {
            best = v;
            value = val;
        }
    }
    Ok(ChshResult {
        value,
        variant: best,
        correlators: table,
    })
}
