//! Linear stability of stationary modes in the frame rotating with `e^{ibz}`.
//!
//! Writing `u = e^{ibz} (w + eps)` gives `d eps/dz = i R(w + eps)`, with `R`
//! the stationary residual, so the linearization is `i` times the residual
//! Jacobian in the real `(Re, Im)` layout.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::eigen_real;
use crate::error::{Error, Result};
use crate::model::{residual_jacobian, CouplerParams, FieldState, StationaryMode};

/// Threshold on `Re lambda` above which an eigenvalue counts as unstable.
pub const GROWTH_TOL: f64 = 1e-8;
/// Eigenvalues this close to zero are attributed to the U(1) phase mode.
/// That mode is a 2x2 Jordan block, so rounding splits it to about `sqrt(eps)`.
pub const GAUGE_TOL: f64 = 1e-6;
/// Largest residual accepted for a mode to be linearized.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    #[serde(with = "crate::serde_util::complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    /// Largest `Re lambda` outside the gauge neighbourhood of zero.
    pub max_growth: f64,
    pub n_unstable: usize,
    pub stable: bool,
}

impl StabilityReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        let growth = |l: &Complex64| if l.norm() < GAUGE_TOL { 0.0 } else { l.re };
        let max_growth = eigenvalues.iter().map(growth).fold(f64::NEG_INFINITY, f64::max);
        let n_unstable = eigenvalues.iter().filter(|l| growth(l) > GROWTH_TOL).count();
        Self {
            eigenvalues,
            max_growth,
            n_unstable,
            stable: max_growth <= GROWTH_TOL,
        }
    }
}

fn check_autonomous(params: &CouplerParams) -> Result<()> {
    if !params.is_autonomous() {
        return Err(Error::InvalidParams(
            "linear stability needs autonomous dynamics (no detuned mixing)".into(),
        ));
    }
    Ok(())
}

/// Real 8x8 matrix of `d(Re eps, Im eps)/dz` for propagation constant `b`.
/// Complex `b` gives the formal spectrum used for ghost states.
pub fn linearization_matrix_at(params: &CouplerParams, b: Complex64, w: &FieldState) -> DMatrix<f64> {
    let j = residual_jacobian(params, b, w);
    // multiplying by i maps (re, im) rows to (-im, re)
    DMatrix::from_fn(8, 8, |r, c| if r < 4 { -j[r + 4][c] } else { j[r - 4][c] })
}

pub fn linearization_matrix(mode: &StationaryMode) -> Result<DMatrix<f64>> {
    check_autonomous(&mode.params)?;
    mode.w.ensure_finite("stationary mode")?;
    let res = mode.residual_norm();
    if !(res < RESIDUAL_TOL) {
        return Err(Error::InvalidInput(format!(
            "mode residual {res:e} is too large to linearize about"
        )));
    }
    Ok(linearization_matrix_at(&mode.params, Complex64::new(mode.b, 0.0), &mode.w))
}

pub fn stability_report(mode: &StationaryMode) -> Result<StabilityReport> {
    let m = linearization_matrix(mode)?;
    Ok(StabilityReport::from_eigenvalues(eigen_real(&m)?))
}

/// Spectrum of the linearization for a complex propagation constant. No
/// residual check and no stability classification.
pub fn formal_spectrum(params: &CouplerParams, b: Complex64, w: &FieldState) -> Result<Vec<Complex64>> {
    check_autonomous(params)?;
    w.ensure_finite("field state")?;
    eigen_real(&linearization_matrix_at(params, b, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{circular_mode, ExactModeSpec};
    use crate::model::{rhs_unchecked, Sign, I};

    fn circ(gamma: f64, alpha: u8, sign: Sign) -> StationaryMode {
        let p = CouplerParams::new(1.0, gamma, alpha).unwrap();
        circular_mode(&ExactModeSpec::new(p, sign, 2.0)).unwrap()
    }

    #[test]
    fn zero_state_reproduces_linear_spectrum() {
        let p = CouplerParams::new(1.0, 0.0, 0).unwrap();
        let mode = StationaryMode {
            w: FieldState::ZERO,
            b: 0.0,
            params: p,
            family: crate::model::Family::Numeric,
        };
        let r = stability_report(&mode).unwrap();
        let s2 = 2f64.sqrt();
        let expected: Vec<Complex64> = [s2, s2, -s2, -s2].iter().map(|&x| Complex64::new(0.0, x)).collect();
        let mut exp8 = expected.clone();
        exp8.extend(expected);
        assert!(crate::eigen::multiset_distance(&r.eigenvalues, &exp8).unwrap() < 1e-10);
        assert!(r.stable);
    }

    #[test]
    fn matrix_matches_finite_differences_of_dynamics() {
        let mode = circ(0.7, 1, Sign::Minus);
        let m = linearization_matrix(&mode).unwrap();
        let b = Complex64::new(mode.b, 0.0);
        let g = |e: &FieldState| {
            let u = mode.w + *e;
            rhs_unchecked(&mode.params, 0.0, &u) - u.scale(I * b)
        };
        let dir = FieldState::from_re_im([[0.3, -0.1], [0.2, 0.5], [-0.4, 0.1], [0.05, 0.25]]);
        let h = 1e-6;
        let fd = (g(&(dir * h)) - g(&(dir * -h))) * (0.5 / h);
        let x = dir.to_real();
        let mx: Vec<f64> = (0..8).map(|r| (0..8).map(|c| m[(r, c)] * x[c]).sum()).collect();
        let fd = fd.to_real();
        for r in 0..8 {
            assert!((mx[r] - fd[r]).abs() < 1e-6, "row {r}");
        }
    }

    #[test]
    fn circular_counts_alpha0() {
        // the b~_- family carries the larger amplitude at fixed b
        assert!(stability_report(&circ(0.5, 0, Sign::Plus)).unwrap().stable);
        assert!(stability_report(&circ(0.5, 0, Sign::Minus)).unwrap().stable);
        assert_eq!(stability_report(&circ(1.2, 0, Sign::Minus)).unwrap().n_unstable, 1);
        assert_eq!(stability_report(&circ(1.2, 0, Sign::Plus)).unwrap().n_unstable, 2);
    }

    #[test]
    fn spectrum_is_conjugate_closed_and_has_gauge_mode() {
        let r = stability_report(&circ(0.9, 0, Sign::Plus)).unwrap();
        let conj: Vec<_> = r.eigenvalues.iter().map(|l| l.conj()).collect();
        assert!(crate::eigen::multiset_distance(&r.eigenvalues, &conj).unwrap() < 1e-12);
        assert!(r.eigenvalues.iter().any(|l| l.norm() < GAUGE_TOL));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut mode = circ(0.5, 0, Sign::Plus);
        mode.b += 0.1;
        assert!(stability_report(&mode).is_err());
        let mut mode = circ(0.5, 0, Sign::Plus);
        mode.params = CouplerParams::detuned(1.0, 0.5, 0.1, 0.2).unwrap();
        assert!(stability_report(&mode).is_err());
    }
}
