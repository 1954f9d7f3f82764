//! Damped Gauss-Newton for stationary modes with the U(1) gauge fixed.
//!
//! Unknowns are the 8 real coordinates of `w`. Equations are the 8 real
//! residual components plus gauge rows. The global phase is fixed by
//! `Im w_m = 0` with `m` the dominant site of the seed. For `alpha = 1` the
//! equations are also invariant under a common rotation of the polarization
//! plane in both arms, which acts as opposite phases on the two circular
//! components `s± = w_x ± i w_y`; there one phase per circular component is
//! fixed instead. At a solution the system is consistent with full column
//! rank, so least-squares steps converge quadratically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{residual_jacobian, stationary_residual, CouplerParams, Family, FieldState, StationaryMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Convergence threshold on the residual infinity norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative singular value below which the Jacobian counts as degenerate.
    pub degeneracy: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            degeneracy: 1e-10,
        }
    }
}

/// Symmetry-fixing conditions appended to the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// `Im w_m = 0`.
    Phase(usize),
    /// `Re(s±_A s±_B) = 0` for both circular components. PT-symmetric
    /// modes satisfy both, so the representative stays PT-symmetric.
    Circular,
}

/// Circular components per arm: `s± = (w_0 ± i w_2, w_1 ± i w_3)`.
pub fn circular_components(w: &FieldState) -> ([Complex64; 2], [Complex64; 2]) {
    let i = crate::model::I;
    (
        [w.0[0] + i * w.0[2], w.0[1] + i * w.0[3]],
        [w.0[0] - i * w.0[2], w.0[1] - i * w.0[3]],
    )
}

fn from_circular(sp: [Complex64; 2], sm: [Complex64; 2]) -> FieldState {
    let i = crate::model::I;
    FieldState([
        (sp[0] + sm[0]) * 0.5,
        (sp[1] + sm[1]) * 0.5,
        (sp[0] - sm[0]) / (2.0 * i),
        (sp[1] - sm[1]) / (2.0 * i),
    ])
}

fn unit_phase(c: Complex64) -> Complex64 {
    if c.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        c.conj() / c.norm()
    }
}

/// Phase that turns `s_A s_B` into a multiple of `i^target`.
fn sector_rotation(s: [Complex64; 2], target: f64) -> Complex64 {
    let prod = s[0] * s[1];
    if prod.norm() == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::from_polar(1.0, 0.5 * (target * std::f64::consts::FRAC_PI_2 - prod.arg()))
}

impl Gauge {
    pub fn for_seed(params: &CouplerParams, w: &FieldState) -> Self {
        if params.alpha == 1 {
            Gauge::Circular
        } else {
            Gauge::Phase(w.dominant_index())
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Gauge::Phase(_) => 1,
            Gauge::Circular => 2,
        }
    }

    /// Values of the gauge conditions.
    pub fn values(&self, w: &FieldState) -> Vec<f64> {
        match *self {
            Gauge::Phase(m) => vec![w.0[m].im],
            Gauge::Circular => {
                let (sp, sm) = circular_components(w);
                vec![(sp[0] * sp[1]).re, (sm[0] * sm[1]).re]
            }
        }
    }

    /// Gradients in the `(Re, Im)` layout.
    pub fn gradients(&self, w: &FieldState) -> Vec<[f64; 8]> {
        match *self {
            Gauge::Phase(m) => {
                let mut g = [0.0; 8];
                g[4 + m] = 1.0;
                vec![g]
            }
            Gauge::Circular => {
                let (sp, sm) = circular_components(w);
                let i = crate::model::I;
                let one = Complex64::new(1.0, 0.0);
                [(sp, one), (sm, -one)]
                    .iter()
                    .map(|&(s, sign)| {
                        // d s_arm / d(Re w_j, Im w_j) for j = arm and j = arm + 2
                        let mut g = [0.0; 8];
                        for arm in 0..2 {
                            let other = s[1 - arm];
                            g[arm] += other.re;
                            g[4 + arm] += (other * i).re;
                            g[arm + 2] += (other * i * sign).re;
                            g[arm + 6] += (other * -sign).re;
                        }
                        g
                    })
                    .collect()
            }
        }
    }

    /// Move `w` along its symmetry orbit onto a point satisfying the
    /// conditions.
    pub fn fix(&self, w: &FieldState) -> FieldState {
        match *self {
            Gauge::Phase(m) => w.scale(unit_phase(w.0[m])),
            Gauge::Circular => {
                let (sp, sm) = circular_components(w);
                let (rp, rm) = (sector_rotation(sp, 1.0), sector_rotation(sm, -1.0));
                from_circular([sp[0] * rp, sp[1] * rp], [sm[0] * rm, sm[1] * rm])
            }
        }
    }
}

pub(crate) fn svd_solve(j: &DMatrix<f64>, rhs: &DVector<f64>, degeneracy: f64) -> Result<DVector<f64>> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > degeneracy * smax.max(1.0)) {
        return Err(Error::DegeneratePoint { sigma_min: smin });
    }
    svd.solve(rhs, 0.0).map_err(|e| Error::Singular(e.to_string()))
}

fn system(params: &CouplerParams, b: f64, w: &FieldState, gauge: &Gauge) -> (DVector<f64>, DMatrix<f64>) {
    let r = stationary_residual(params, b, w).to_real();
    let jr = residual_jacobian(params, Complex64::new(b, 0.0), w);
    let n = 8 + gauge.rows();
    let mut f = DVector::zeros(n);
    let mut j = DMatrix::zeros(n, 8);
    for row in 0..8 {
        f[row] = r[row];
        for c in 0..8 {
            j[(row, c)] = jr[row][c];
        }
    }
    for (k, (v, g)) in gauge.values(w).into_iter().zip(gauge.gradients(w)).enumerate() {
        f[8 + k] = v;
        for c in 0..8 {
            j[(8 + k, c)] = g[c];
        }
    }
    (f, j)
}

/// Solve the stationary equations at fixed `b` starting from `w0`.
pub fn newton_solve(params: &CouplerParams, b: f64, w0: &FieldState) -> Result<StationaryMode> {
    newton_solve_with(params, b, w0, &NewtonOptions::default())
}

pub fn newton_solve_with(
    params: &CouplerParams,
    b: f64,
    w0: &FieldState,
    opts: &NewtonOptions,
) -> Result<StationaryMode> {
    params.validate()?;
    if !b.is_finite() {
        return Err(Error::NonFinite("propagation constant"));
    }
    w0.ensure_finite("initial guess")?;
    if w0.norm() == 0.0 {
        return Err(Error::InvalidInput("initial guess must be nonzero".into()));
    }
    let gauge = Gauge::for_seed(params, w0);
    let mut w = gauge.fix(w0);
    let mut res = stationary_residual(params, b, &w).norm_inf();
    for _ in 0..opts.max_iter {
        if res < opts.tol {
            return Ok(StationaryMode {
                w,
                b,
                params: *params,
                family: Family::Numeric,
            });
        }
        let (f, j) = system(params, b, &w, &gauge);
        let dx = svd_solve(&j, &(-&f), opts.degeneracy)?;
        let x = DVector::from_column_slice(&w.to_real());
        let f0 = f.norm();
        let mut t = 1.0;
        loop {
            let trial = FieldState::from_real((&x + &dx * t).as_slice());
            let (ft, _) = system(params, b, &trial, &gauge);
            if ft.norm() <= (1.0 - 1e-4 * t) * f0 || t < 1e-10 {
                w = trial;
                break;
            }
            t *= 0.5;
        }
        res = stationary_residual(params, b, &w).norm_inf();
    }
    if res < opts.tol {
        return Ok(StationaryMode {
            w,
            b,
            params: *params,
            family: Family::Numeric,
        });
    }
    Err(Error::NoConvergence {
        what: "newton",
        iterations: opts.max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{circular_mode, ExactModeSpec};
    use crate::model::Sign;

    #[test]
    fn recovers_perturbed_circular_mode() {
        let p = CouplerParams::new(1.0, 0.5, 0).unwrap();
        let exact = circular_mode(&ExactModeSpec::new(p, Sign::Plus, 2.0)).unwrap();
        let noise = FieldState::from_re_im([[1e-3, -5e-4], [2e-4, 7e-4], [-9e-4, 1e-4], [3e-4, -2e-4]]);
        let m = newton_solve(&p, 2.0, &(exact.w + noise)).unwrap();
        assert!(m.residual_norm() < 1e-12);
        assert!(m.w.gauge_distance(&exact.w) < 1e-10);
    }

    #[test]
    fn gauge_rotated_seeds_agree() {
        let p = CouplerParams::new(1.0, 0.8, 1).unwrap();
        let exact = circular_mode(&ExactModeSpec::new(p, Sign::Minus, 1.5)).unwrap();
        let a = newton_solve(&p, 1.5, &exact.w.scale(Complex64::from_polar(1.0, 0.7))).unwrap();
        let b = newton_solve(&p, 1.5, &exact.w.scale(Complex64::from_polar(1.0, -2.1))).unwrap();
        assert!(a.w.gauge_distance(&b.w) < 1e-10);
    }

    #[test]
    fn alpha_one_elliptic_mode_has_two_symmetries() {
        let p = CouplerParams::new(1.0, 0.3, 1).unwrap();
        let exact = crate::exact::elliptic_mode_alpha1(&ExactModeSpec::new(p, Sign::Plus, 2.0)).unwrap();
        let jr = residual_jacobian(&p, Complex64::new(2.0, 0.0), &exact.w);
        let sv = DMatrix::from_fn(8, 8, |r, c| jr[r][c]).singular_values();
        assert_eq!(sv.iter().filter(|&&s| s < 1e-10).count(), 2);
        let noise = FieldState::from_re_im([[1e-3, -5e-4], [2e-4, 7e-4], [-9e-4, 1e-4], [3e-4, -2e-4]]);
        let m = newton_solve(&p, 2.0, &(exact.w + noise)).unwrap();
        assert!(m.residual_norm() < 1e-12);
        assert!((crate::model::pt_apply(&m.w) - m.w).norm_inf() < 1e-10);
        assert!(m.w.gauge_distance(&exact.w) < 1e-10);
    }

    #[test]
    fn circular_gauge_round_trip() {
        let w = FieldState::from_re_im([[0.3, 0.1], [-0.2, 0.5], [0.7, -0.4], [0.05, 0.2]]);
        let (sp, sm) = circular_components(&w);
        assert!((from_circular(sp, sm) - w).norm_inf() < 1e-15);
        let g = Gauge::Circular;
        assert!(g.values(&g.fix(&w)).iter().all(|v| v.abs() < 1e-15));
        let h = 1e-7;
        let x = w.to_real();
        for (row, grad) in g.gradients(&w).iter().enumerate() {
            for c in 0..8 {
                let mut xp = x;
                let mut xm = x;
                xp[c] += h;
                xm[c] -= h;
                let fd = (g.values(&FieldState::from_real(&xp))[row] - g.values(&FieldState::from_real(&xm))[row]) / (2.0 * h);
                assert!((fd - grad[c]).abs() < 1e-7, "row {row} col {c}");
            }
        }
    }

    #[test]
    fn rejects_zero_seed() {
        let p = CouplerParams::new(1.0, 0.5, 0).unwrap();
        assert!(matches!(newton_solve(&p, 2.0, &FieldState::ZERO), Err(Error::InvalidInput(_))));
    }
}
