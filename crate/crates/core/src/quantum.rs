//! Two-qubit pure states measured along spin directions.
//!
//! Outcome 0 is the `+1` eigenvalue of `sigma . n`, outcome 1 the `-1`
//! eigenvalue, matching the sign convention used for correlators.

use num_complex::Complex64;

use crate::error::QuantumError;
use crate::model::{Behavior, Scenario};

const UNIT_TOL: f64 = 1e-12;

/// Bloch direction of a projective spin measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementDirection([f64; 3]);

impl MeasurementDirection {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, QuantumError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(QuantumError::NotUnit(norm));
        }
        Ok(MeasurementDirection([x, y, z]))
    }

    /// `(sin p cos a, sin p sin a, cos p)` for polar angle `p` and azimuth `a`
    /// in degrees. The result is unit up to rounding of `sin`/`cos`
    /// (a few ulp), well inside the unit-norm tolerance.
    pub fn from_angles(polar_deg: f64, azimuthal_deg: f64) -> Self {
        let (p, a) = (polar_deg.to_radians(), azimuthal_deg.to_radians());
        MeasurementDirection([p.sin() * a.cos(), p.sin() * a.sin(), p.cos()])
    }

    /// Direction at `deg` from the z axis inside the x-z plane.
    pub fn in_plane(deg: f64) -> Self {
        Self::from_angles(deg, 0.0)
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &MeasurementDirection) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// `(I + s sigma.n) / 2` with `s = +1` for outcome 0 and `-1` for outcome 1.
    fn projector(&self, outcome: usize) -> [[Complex64; 2]; 2] {
        let s = sign(outcome);
        let [x, y, z] = self.0;
        let half = |c: Complex64| c * 0.5;
        [
            [
                half(Complex64::new(1.0 + s * z, 0.0)),
                half(Complex64::new(s * x, -s * y)),
            ],
            [
                half(Complex64::new(s * x, s * y)),
                half(Complex64::new(1.0 - s * z, 0.0)),
            ],
        ]
    }
}

/// Measurement angles in the x-z plane maximizing the CHSH value of the
/// singlet: Alice at 0 and 90 degrees, Bob at 45 and 135 degrees.
pub fn tsirelson_directions() -> (Vec<MeasurementDirection>, Vec<MeasurementDirection>) {
    (
        vec![
            MeasurementDirection::in_plane(0.0),
            MeasurementDirection::in_plane(90.0),
        ],
        vec![
            MeasurementDirection::in_plane(45.0),
            MeasurementDirection::in_plane(135.0),
        ],
    )
}

/// Outcome label to spin sign.
pub fn sign(outcome: usize) -> f64 {
    if outcome == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Amplitudes on `|00>, |01>, |10>, |11>`, Alice's qubit first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState([Complex64; 4]);

impl TwoQubitState {
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self, QuantumError> {
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(TwoQubitState(amplitudes))
    }

    /// `(|01> - |10>) / sqrt 2`.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitState([
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
            Complex64::new(0.0, 0.0),
        ])
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        self.0
    }
}

fn check_dirs(
    dirs_a: &[MeasurementDirection],
    dirs_b: &[MeasurementDirection],
) -> Result<Scenario, QuantumError> {
    if dirs_a.is_empty() || dirs_b.is_empty() {
        return Err(QuantumError::NoDirections);
    }
    for d in dirs_a.iter().chain(dirs_b) {
        let [x, y, z] = d.0;
        MeasurementDirection::new(x, y, z)?;
    }
    Ok(Scenario {
        settings_a: dirs_a.len(),
        settings_b: dirs_b.len(),
        outcomes_x: 2,
        outcomes_y: 2,
    })
}

/// Closed form for the singlet: `P(x,y|a,b) = (1 - s(x) s(y) a.b) / 4`.
pub fn singlet_behavior(
    dirs_a: &[MeasurementDirection],
    dirs_b: &[MeasurementDirection],
) -> Result<Behavior, QuantumError> {
    let s = check_dirs(dirs_a, dirs_b)?;
    Ok(Behavior::from_fn(s, |a, b, x, y| {
        (1.0 - sign(x) * sign(y) * dirs_a[a].dot(&dirs_b[b])) / 4.0
    }))
}

/// `P(x,y|a,b) = <psi| P_x(a) (x) P_y(b) |psi>`.
pub fn pure_state_behavior(
    psi: &TwoQubitState,
    dirs_a: &[MeasurementDirection],
    dirs_b: &[MeasurementDirection],
) -> Result<Behavior, QuantumError> {
    let s = check_dirs(dirs_a, dirs_b)?;
    TwoQubitState::new(psi.0)?;
    let amp = psi.0;
    Ok(Behavior::from_fn(s, |a, b, x, y| {
        let pa = dirs_a[a].projector(x);
        let pb = dirs_b[b].projector(y);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                let bra = amp[2 * i + j].conj();
                for k in 0..2 {
                    for l in 0..2 {
                        acc += bra * pa[i][k] * pb[j][l] * amp[2 * k + l];
                    }
                }
            }
        }
        // expectation of a positive operator; only rounding can push it below zero
        acc.re.max(0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_behavior;

    #[test]
    fn equal_axes_anticorrelate() {
        let d = MeasurementDirection::from_angles(30.0, 70.0);
        let p = singlet_behavior(&[d], &[d]).unwrap();
        assert!(p.get(0, 0, 0, 0).abs() < 1e-15);
        assert!(p.get(0, 0, 1, 1).abs() < 1e-15);
        assert!((p.get(0, 0, 0, 1) - 0.5).abs() < 1e-15);
        assert!((p.get(0, 0, 1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_axes_are_uniform() {
        let p = singlet_behavior(
            &[MeasurementDirection::new(1.0, 0.0, 0.0).unwrap()],
            &[MeasurementDirection::new(0.0, 0.0, 1.0).unwrap()],
        )
        .unwrap();
        assert_eq!(p.row(0, 0), &[0.25; 4]);
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(matches!(
            MeasurementDirection::new(1.0, 1.0, 0.0),
            Err(QuantumError::NotUnit(_))
        ));
        let bad = MeasurementDirection([0.0, 0.0, 2.0]);
        assert!(singlet_behavior(&[bad], &[bad]).is_err());
        assert!(singlet_behavior(&[], &[bad]).is_err());
    }

    #[test]
    fn state_must_be_normalized() {
        let c = Complex64::new(0.6, 0.0);
        assert!(TwoQubitState::new([c, c, c, c]).is_err());
    }

    #[test]
    fn product_eigenstate_is_deterministic() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let psi = TwoQubitState::new([one, zero, zero, zero]).unwrap();
        let z = MeasurementDirection::new(0.0, 0.0, 1.0).unwrap();
        let p = pure_state_behavior(&psi, &[z], &[z]).unwrap();
        assert_eq!(p.row(0, 0), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn singlet_state_matches_closed_form() {
        let dirs: Vec<_> = [
            (0.0, 0.0),
            (90.0, 0.0),
            (45.0, 30.0),
            (120.0, 200.0),
            (10.0, 300.0),
        ]
        .iter()
        .map(|&(p, a)| MeasurementDirection::from_angles(p, a))
        .collect();
        let closed = singlet_behavior(&dirs, &dirs).unwrap();
        let general = pure_state_behavior(&TwoQubitState::singlet(), &dirs, &dirs).unwrap();
        assert!(closed.max_abs_diff(&general) < 1e-12);
        assert!(validate_behavior(&general, 1e-12).is_valid());
    }
}
