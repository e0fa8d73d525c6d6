//! Dense phase-1 simplex with Bland's rule.
//!
//! Solves `min sum(s)` subject to `A w + s = b`, `w, s >= 0`, which is zero
//! exactly when `A w = b, w >= 0` is feasible. The optimal dual `y` satisfies
//! `y . A_j <= 0` for every column and `y . b = objective`, so when the
//! objective is positive `y` is a Farkas certificate of infeasibility.

use crate::error::GeometryError;

const PIVOT_EPS: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct PhaseOne {
    /// Optimal sum of artificial variables.
    pub objective: f64,
    /// Primal values of the original columns.
    pub x: Vec<f64>,
    /// Dual values, one per row, in the orientation of the input rows.
    pub dual: Vec<f64>,
    pub pivots: usize,
}

/// `a` is row-major with `m` rows of length `n`.
pub fn phase_one(a: &[Vec<f64>], b: &[f64], max_pivots: usize) -> Result<PhaseOne, GeometryError> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let rhs = n + m;

    // rows with negative right-hand side are negated so artificials start feasible
    let flip: Vec<f64> = b
        .iter()
        .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        for j in 0..n {
            t[i][j] = flip[i] * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][rhs] = flip[i] * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // reduced costs; artificials cost 1, originals cost 0
    let mut r = vec![0.0; width];
    for j in 0..n {
        r[j] = -(0..m).map(|i| t[i][j]).sum::<f64>();
    }
    r[rhs] = -(0..m).map(|i| t[i][rhs]).sum::<f64>();

    let mut pivots = 0;
    while let Some(enter) = (0..n + m).find(|&j| r[j] < -PIVOT_EPS) {
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > PIVOT_EPS {
                let ratio = t[i][rhs] / t[i][enter];
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best || (ratio == best && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        // phase 1 is bounded below by zero, so an unbounded ray cannot occur;
        // reaching here means the tableau has lost precision
        let Some(p) = leave else {
            return Err(GeometryError::Inconclusive(
                "simplex found no leaving row for an improving column".into(),
            ));
        };
        if pivots >= max_pivots {
            return Err(GeometryError::IterationLimit(max_pivots));
        }
        pivots += 1;

        let piv = t[p][enter];
        for v in t[p].iter_mut() {
            *v /= piv;
        }
        let prow = t[p].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let f = row[enter];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
        let f = r[enter];
        for (v, pv) in r.iter_mut().zip(&prow) {
            *v -= f * pv;
        }
        basis[p] = enter;
    }

    let mut x = vec![0.0; n];
    let mut objective = 0.0;
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i][rhs];
        } else {
            objective += t[i][rhs];
        }
    }
    let dual = (0..m).map(|i| flip[i] * (1.0 - r[n + i])).collect();
    Ok(PhaseOne {
        objective,
        x,
        dual,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_system() {
        // w0 + w1 = 1, w0 - w1 = 0.5
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let sol = phase_one(&a, &[1.0, 0.5], 100).unwrap();
        assert!(sol.objective.abs() < 1e-12);
        assert!((sol.x[0] - 0.75).abs() < 1e-12);
        assert!((sol.x[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system_gives_farkas_dual() {
        // w0 + w1 = 1, w0 + w1 = 2
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let b = [1.0, 2.0];
        let sol = phase_one(&a, &b, 100).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        for j in 0..2 {
            let yaj: f64 = sol.dual.iter().zip(&a).map(|(y, row)| y * row[j]).sum();
            assert!(yaj <= 1e-12);
        }
        let yb: f64 = sol.dual.iter().zip(&b).map(|(y, b)| y * b).sum();
        assert!((yb - sol.objective).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_rows_are_handled() {
        // -w0 = -0.3, w0 + w1 = 1
        let a = vec![vec![-1.0, 0.0], vec![1.0, 1.0]];
        let sol = phase_one(&a, &[-0.3, 1.0], 100).unwrap();
        assert!(sol.objective.abs() < 1e-12);
        assert!((sol.x[0] - 0.3).abs() < 1e-12);
        // w0 = -1 is infeasible for w0 >= 0
        let sol = phase_one(&[vec![1.0]], &[-1.0], 100).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!(-sol.dual[0] > 0.5);
        assert!(sol.dual[0] <= 1e-12);
    }

    #[test]
    fn pivot_limit() {
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        assert!(matches!(
            phase_one(&a, &[1.0, 0.5], 0),
            Err(GeometryError::IterationLimit(0))
        ));
    }
}
