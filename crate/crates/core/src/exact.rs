//! Closed-form stationary modes.
//!
//! The circularly polarized family exists for both `alpha`; the elliptically
//! polarized family has a closed form only for `alpha = 1`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CouplerParams, Family, FieldState, Sign, StationaryMode, I};
use crate::spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactModeSpec {
    /// Which linear eigenvalue `b~_±` the family bifurcates from.
    pub sign: Sign,
    pub b: f64,
    pub params: CouplerParams,
}

impl ExactModeSpec {
    pub fn new(params: CouplerParams, sign: Sign, b: f64) -> Self {
        Self { sign, b, params }
    }
}

fn check_b(b: f64) -> Result<()> {
    if !b.is_finite() {
        return Err(Error::NonFinite("propagation constant"));
    }
    Ok(())
}

/// Squared amplitude of the circular family, `3 (b - b~) / (5 - alpha)`.
pub fn circular_rho2(spec: &ExactModeSpec) -> Result<f64> {
    check_b(spec.b)?;
    let bt = spectrum::btilde(&spec.params, spec.sign)?;
    let rho2 = 3.0 * (spec.b - bt) / (5.0 - spec.params.alpha_f64());
    if rho2 < 0.0 {
        return Err(Error::FamilyDoesNotExist(format!(
            "circular{} needs b >= {bt}, got b = {}",
            spec.sign.symbol(),
            spec.b
        )));
    }
    Ok(rho2)
}

/// Phase `phi` of the circular family, the principal half-argument of
/// `[b~ (1 - i) - gamma (1 + i)] / (2k)`.
pub fn circular_phase(params: &CouplerParams, sign: Sign) -> Result<f64> {
    let bt = spectrum::btilde(params, sign)?;
    let rhs = (Complex64::new(bt, -bt) - Complex64::new(params.gamma, params.gamma)) / (2.0 * params.k);
    Ok(0.5 * rhs.arg())
}

/// Circularly polarized mode `(rho e^{i phi}, -i rho e^{-i phi}, i rho e^{i phi}, rho e^{-i phi})`.
pub fn circular_mode(spec: &ExactModeSpec) -> Result<StationaryMode> {
    let rho = circular_rho2(spec)?.sqrt();
    let phi = circular_phase(&spec.params, spec.sign)?;
    let e = Complex64::from_polar(rho, phi);
    let ec = e.conj();
    Ok(StationaryMode {
        w: FieldState([e, -I * ec, I * e, ec]),
        b: spec.b,
        params: spec.params,
        family: Family::circular(spec.sign),
    })
}

/// Elliptically polarized mode for `alpha = 1`:
/// `w1 = conj(w4) = rho e^{i phi}`, `w2 = conj(w3) = c rho e^{-i phi}` with
/// `c = -1 ± sqrt 2`, `rho^2 = (b - b~) / (4 ∓ 2 sqrt 2)` and
/// `phi = ∓ asin(gamma / (sqrt 2 k)) / 2`.
pub fn elliptic_mode_alpha1(spec: &ExactModeSpec) -> Result<StationaryMode> {
    let p = &spec.params;
    if p.alpha != 1 {
        return Err(Error::InvalidParams(
            "the closed-form elliptic family requires alpha = 1".into(),
        ));
    }
    check_b(spec.b)?;
    let ratio = p.gamma / (SQRT_2 * p.k);
    if ratio > 1.0 {
        return Err(Error::BrokenPhase {
            gamma: p.gamma,
            critical: p.gamma_cr1(),
        });
    }
    let bt = spectrum::btilde(p, spec.sign)?;
    let s = spec.sign.value();
    let den = 4.0 - s * 2.0 * SQRT_2;
    let rho2 = (spec.b - bt) / den;
    if rho2 < 0.0 {
        return Err(Error::FamilyDoesNotExist(format!(
            "elliptic{} needs b >= {bt}, got b = {}",
            spec.sign.symbol(),
            spec.b
        )));
    }
    let c = -1.0 + s * SQRT_2;
    let phi = -s * 0.5 * ratio.asin();
    let w1 = Complex64::from_polar(rho2.sqrt(), phi);
    let w2 = w1.conj() * c;
    Ok(StationaryMode {
        w: FieldState([w1, w2, w2.conj(), w1.conj()]),
        b: spec.b,
        params: *p,
        family: Family::elliptic(spec.sign),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::pt_apply;

    fn spec(gamma: f64, alpha: u8, sign: Sign, b: f64) -> ExactModeSpec {
        ExactModeSpec::new(CouplerParams::new(1.0, gamma, alpha).unwrap(), sign, b)
    }

    #[test]
    fn circular_values() {
        let m = circular_mode(&spec(0.5, 0, Sign::Plus, 2.0)).unwrap();
        let rho2 = 3.0 * (2.0 - 1.75f64.sqrt()) / 5.0;
        assert!((rho2 - 0.4062746).abs() < 1e-7);
        for a in m.w.intensities() {
            assert!((a - rho2).abs() < 1e-14);
        }
        assert!(m.residual_norm() < 1e-12);
        assert!((pt_apply(&m.w) - m.w).norm_inf() < 1e-15);
    }

    #[test]
    fn circular_at_threshold_is_zero() {
        let bt = 1.75f64.sqrt();
        let m = circular_mode(&spec(0.5, 1, Sign::Plus, bt)).unwrap();
        assert!(m.w.norm() < 1e-15);
    }

    #[test]
    fn circular_energy_slope() {
        for alpha in [0u8, 1] {
            let u = |b| circular_mode(&spec(0.3, alpha, Sign::Minus, b)).unwrap().power();
            let slope = u(2.0) - u(1.0);
            assert!((slope - 12.0 / (5.0 - alpha as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_rejects_below_threshold_and_broken_phase() {
        assert!(matches!(
            circular_mode(&spec(0.5, 0, Sign::Plus, 1.0)),
            Err(Error::FamilyDoesNotExist(_))
        ));
        assert!(matches!(
            circular_mode(&spec(1.5, 0, Sign::Plus, 2.0)),
            Err(Error::BrokenPhase { .. })
        ));
    }

    #[test]
    fn circular_pair_coincides_at_breaking_point() {
        let g = SQRT_2;
        let a = circular_mode(&spec(g, 0, Sign::Plus, 1.0)).unwrap();
        let b = circular_mode(&spec(g, 0, Sign::Minus, 1.0)).unwrap();
        assert!((a.w - b.w).norm_inf() < 1e-7);
    }

    #[test]
    fn elliptic_values() {
        let m = elliptic_mode_alpha1(&spec(0.5, 1, Sign::Plus, 2.0)).unwrap();
        let amp = m.w.amplitudes();
        assert!((amp[0] * amp[0] - 0.57796178).abs() < 1e-8);
        assert!((amp[1] / amp[0] - (SQRT_2 - 1.0)).abs() < 1e-14);
        assert!((m.w[0].arg() + 0.18068356).abs() < 1e-8);
        assert!(m.residual_norm() < 1e-12);
        assert!((pt_apply(&m.w) - m.w).norm_inf() < 1e-15);
        let m = elliptic_mode_alpha1(&spec(0.5, 1, Sign::Minus, 2.0)).unwrap();
        assert!(m.residual_norm() < 1e-12);
    }

    #[test]
    fn elliptic_conservative_limit_is_real() {
        for sign in [Sign::Plus, Sign::Minus] {
            let m = elliptic_mode_alpha1(&spec(0.0, 1, sign, 2.0)).unwrap();
            assert!(m.w.iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn elliptic_requires_alpha_one() {
        assert!(matches!(
            elliptic_mode_alpha1(&spec(0.5, 0, Sign::Plus, 2.0)),
            Err(Error::InvalidParams(_))
        ));
        assert!(elliptic_mode_alpha1(&spec(0.5, 1, Sign::Plus, 0.0)).is_err());
    }
}
