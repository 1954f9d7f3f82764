//! Ghost states: stationary solutions with complex propagation constant.
//!
//! Under the ansatz `w = (c1 e^{i phi1}, c2 e^{i phi2}, i w_1, i w_2)` the
//! stationary system reduces to two complex equations
//!
//! ```text
//! b w_1 = k (1 + i) w_2 - i gamma w_1 + s c1^2 w_1
//! b w_2 = k (1 - i) w_1 + i gamma w_2 + s c2^2 w_2,     s = (5 - alpha) / 3
//! ```
//!
//! with `b = B e^{i phi_b}`. Branches are pinned either by `|b|` or by
//! `Re b`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::continuation::Termination;
use crate::error::{Error, Result};
use crate::model::{stationary_residual_complex, CouplerParams, FieldState, StationaryMode, I};

/// Largest full-system residual accepted for a ghost.
pub const VERIFY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostMode {
    pub c1: f64,
    pub c2: f64,
    pub phi1: f64,
    pub phi2: f64,
    #[serde(rename = "B")]
    pub b_mod: f64,
    pub phi_b: f64,
    pub params: CouplerParams,
}

impl GhostMode {
    pub fn b_complex(&self) -> Complex64 {
        Complex64::from_polar(self.b_mod, self.phi_b)
    }

    pub fn dphi(&self) -> f64 {
        self.phi2 - self.phi1
    }

    pub fn field(&self) -> FieldState {
        let w1 = Complex64::from_polar(self.c1, self.phi1);
        let w2 = Complex64::from_polar(self.c2, self.phi2);
        FieldState([w1, w2, I * w1, I * w2])
    }

    /// Infinity norm of the full stationary residual at complex `b`.
    pub fn full_residual(&self) -> f64 {
        stationary_residual_complex(&self.params, self.b_complex(), &self.field()).norm_inf()
    }

    /// `Im(b) (c1^2 + c2^2) - gamma (c2^2 - c1^2)`.
    pub fn balance_defect(&self) -> f64 {
        let (a1, a2) = (self.c1 * self.c1, self.c2 * self.c2);
        self.b_complex().im * (a1 + a2) - self.params.gamma * (a2 - a1)
    }

    /// View a real-`b` stationary mode of ansatz form as a ghost with
    /// `phi_b = 0`. Fails if `w_3 != i w_1` or `w_4 != i w_2`.
    pub fn from_stationary(mode: &StationaryMode) -> Result<Self> {
        let w = mode.w;
        let scale = w.norm().max(1e-300);
        if (w[2] - I * w[0]).norm() > 1e-9 * scale || (w[3] - I * w[1]).norm() > 1e-9 * scale {
            return Err(Error::InvalidInput("mode is not of the form (w1, w2, i w1, i w2)".into()));
        }
        Ok(Self {
            c1: w[0].norm(),
            c2: w[1].norm(),
            phi1: w[0].arg(),
            phi2: w[1].arg(),
            b_mod: mode.b.abs(),
            phi_b: if mode.b < 0.0 { std::f64::consts::PI } else { 0.0 },
            params: mode.params,
        })
    }
}

fn nl_coeff(params: &CouplerParams) -> f64 {
    5.0 - params.alpha_f64()
}

/// The closed-form expressions for `sin phi_b`, `cos phi_b` and the two
/// pairs of expressions for `sin`/`cos` of `phi2 - phi1`.
struct Displayed {
    sin_b: f64,
    cos_b: f64,
    sin_d: [f64; 2],
    cos_d: [f64; 2],
}

fn displayed(params: &CouplerParams, c1: f64, c2: f64, b_mod: f64, sin_b: Option<f64>, cos_b: Option<f64>) -> Displayed {
    let (a1, a2) = (c1 * c1, c2 * c2);
    let g = params.gamma;
    let k = params.k;
    let n = nl_coeff(params);
    let sb = sin_b.unwrap_or((a2 - a1) * g / ((a1 + a2) * b_mod));
    let cb = cos_b.unwrap_or(n * (a1 + a2) / (3.0 * b_mod));
    let bb = 3.0 * b_mod;
    Displayed {
        sin_b: sb,
        cos_b: cb,
        sin_d: [
            (3.0 * g - bb * (sb + cb) + n * a2) * c2 / (6.0 * k * c1),
            (3.0 * g + bb * (sb - cb) + n * a1) * c1 / (6.0 * k * c2),
        ],
        cos_d: [
            (3.0 * g - bb * (sb - cb) - n * a2) * c2 / (6.0 * k * c1),
            (3.0 * g + bb * (sb + cb) - n * a1) * c1 / (6.0 * k * c2),
        ],
    }
}

fn check_ghost(g: &GhostMode) -> Result<()> {
    g.params.validate()?;
    let vals = [g.c1, g.c2, g.phi1, g.phi2, g.b_mod, g.phi_b];
    if !vals.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("ghost mode"));
    }
    if g.c1 <= 0.0 || g.c2 <= 0.0 {
        return Err(Error::InvalidInput("ghost amplitudes must be positive".into()));
    }
    if g.b_mod <= 0.0 {
        return Err(Error::InvalidInput("ghost propagation constant modulus must be positive".into()));
    }
    Ok(())
}

/// Four consistency defects of the reduced algebra, all zero at a ghost:
/// `sin^2 + cos^2 - 1` of `phi_b` from its closed forms, the mismatch of
/// the two `sin(phi2 - phi1)` forms, the mismatch of the two `cos` forms and
/// `sin^2 + cos^2 - 1` of `phi2 - phi1`.
pub fn ghost_residual(g: &GhostMode) -> Result<[f64; 4]> {
    check_ghost(g)?;
    let d = displayed(&g.params, g.c1, g.c2, g.b_mod, None, None);
    Ok([
        d.sin_b * d.sin_b + d.cos_b * d.cos_b - 1.0,
        d.sin_d[0] - d.sin_d[1],
        d.cos_d[0] - d.cos_d[1],
        d.sin_d[0] * d.sin_d[0] + d.cos_d[0] * d.cos_d[0] - 1.0,
    ])
}

/// Which part of the complex propagation constant is held along a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pinning {
    /// `|b| = B` fixed.
    #[default]
    Modulus,
    /// `Re b = B cos phi_b` fixed.
    RealPart,
}

/// Unknowns `(c1, c2, dphi, B, phi_b)`; equations: `phi_b` against its two
/// closed forms, `dphi` against the second-equation forms, and the pin.
fn equations(params: &CouplerParams, pin: Pinning, target: f64, x: &[f64]) -> DVector<f64> {
    let [c1, c2, dphi, bm, pb] = [x[0], x[1], x[2], x[3], x[4]];
    let (a1, a2) = (c1 * c1, c2 * c2);
    let n = nl_coeff(params);
    let d = displayed(params, c1, c2, bm, Some(pb.sin()), Some(pb.cos()));
    DVector::from_vec(vec![
        bm * pb.sin() * (a1 + a2) - params.gamma * (a2 - a1),
        3.0 * bm * pb.cos() - n * (a1 + a2),
        dphi.sin() - d.sin_d[0],
        dphi.cos() - d.cos_d[0],
        match pin {
            Pinning::Modulus => bm - target,
            Pinning::RealPart => bm * pb.cos() - target,
        },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostOptions {
    pub pinning: Pinning,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GhostOptions {
    fn default() -> Self {
        Self {
            pinning: Pinning::Modulus,
            tol: 1e-13,
            max_iter: 50,
        }
    }
}

/// Newton on the reduced ghost algebra with `phi1 = 0`, then verification
/// against the full complex-`b` stationary system.
pub fn ghost_solve(params: &CouplerParams, target: f64, seed: &GhostMode, opts: &GhostOptions) -> Result<GhostMode> {
    params.validate()?;
    check_ghost(&GhostMode { params: *params, ..*seed })?;
    if !target.is_finite() || target <= 0.0 {
        return Err(Error::InvalidInput(format!("pinned value must be positive, got {target}")));
    }
    let f = |x: &[f64]| equations(params, opts.pinning, target, x);
    let mut x = vec![seed.c1, seed.c2, seed.dphi(), seed.b_mod, seed.phi_b];
    let mut fx = f(&x);
    let mut iters = 0;
    while fx.amax() >= opts.tol {
        if iters == opts.max_iter {
            return Err(Error::NoConvergence {
                what: "ghost newton",
                iterations: iters,
                residual: fx.amax(),
            });
        }
        iters += 1;
        let h = 1e-7;
        let j = DMatrix::from_fn(5, 5, |r, c| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            let hc = h * x[c].abs().max(1.0);
            xp[c] += hc;
            xm[c] -= hc;
            (f(&xp)[r] - f(&xm)[r]) / (2.0 * hc)
        });
        let dx = j
            .lu()
            .solve(&(-&fx))
            .ok_or_else(|| Error::DegeneratePoint { sigma_min: 0.0 })?;
        let f0 = fx.norm();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + t * d).collect();
            let ft = f(&trial);
            if (ft.norm() <= (1.0 - 1e-4 * t) * f0 && trial[0] > 0.0 && trial[1] > 0.0 && trial[3] > 0.0)
                || t < 1e-8
            {
                x = trial;
                fx = ft;
                break;
            }
            t *= 0.5;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("ghost newton iterate"));
        }
    }
    let g = GhostMode {
        c1: x[0].abs(),
        c2: x[1].abs(),
        phi1: 0.0,
        phi2: x[2],
        b_mod: x[3],
        phi_b: x[4],
        params: *params,
    };
    let residual = g.full_residual();
    if !(residual < VERIFY_TOL) || x[0] <= 0.0 || x[1] <= 0.0 {
        return Err(Error::SpuriousRoot { residual });
    }
    Ok(g)
}

/// Closed-form ghost at `|b| = B` with the sign of `c2^2 - c1^2` given by
/// `upper`. `X = s^2 (c1^2 + c2^2)^2` solves
/// `X^2 - (B^2 - 5 gamma^2) X - 4 gamma^2 (B^2 - gamma^2 + 2 k^2) = 0`.
pub fn ghost_closed_form(params: &CouplerParams, b_mod: f64, upper: bool) -> Result<GhostMode> {
    params.validate()?;
    let (g, k) = (params.gamma, params.k);
    let s = nl_coeff(params) / 3.0;
    let p = b_mod * b_mod - 5.0 * g * g;
    let q = 4.0 * g * g * (b_mod * b_mod - g * g + 2.0 * k * k);
    let x = 0.5 * (p + (p * p + 4.0 * q).sqrt());
    if !(x > 0.0) {
        return Err(Error::FamilyDoesNotExist("ghost amplitude vanishes".into()));
    }
    let ssum = x.sqrt() / s;
    let ratio = 1.0 - 8.0 * k * k / (x + 4.0 * g * g);
    if ratio < 0.0 {
        return Err(Error::FamilyDoesNotExist("ghost asymmetry is imaginary (below the pitchfork)".into()));
    }
    let diff = ssum * ratio.sqrt() * if upper { 1.0 } else { -1.0 };
    let (a1, a2) = (0.5 * (ssum - diff), 0.5 * (ssum + diff));
    let (c1, c2) = (a1.sqrt(), a2.sqrt());
    let sin_b = g * diff / (ssum * b_mod);
    let cos_b = s * ssum / b_mod;
    // k (cos d - sin d) = s c1 c2 and k (cos d + sin d) = 2 gamma c1^2 c2 / (S c2)
    let cm = s * c1 * c2 / k;
    let cp = 2.0 * g * c1 * c2 / (ssum * k);
    let dphi = (0.5 * (cp - cm)).atan2(0.5 * (cp + cm));
    Ok(GhostMode {
        c1,
        c2,
        phi1: 0.0,
        phi2: dphi,
        b_mod,
        phi_b: sin_b.atan2(cos_b),
        params: *params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostBranch {
    pub pinning: Pinning,
    pub pinned_value: f64,
    pub points: Vec<GhostMode>,
    pub termination: Termination,
}

impl GhostBranch {
    pub fn gamma_end(&self) -> Option<f64> {
        self.points.last().map(|g| g.params.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostBranchOptions {
    pub step: f64,
    pub step_min: f64,
    /// Branch is lost once `c1^2 + c2^2` falls below this.
    pub min_power: f64,
    pub solver: GhostOptions,
}

impl Default for GhostBranchOptions {
    fn default() -> Self {
        Self {
            step: 1e-2,
            step_min: 1e-9,
            min_power: 1e-8,
            solver: GhostOptions::default(),
        }
    }
}

/// Follow a ghost branch in `gamma` from `seed` (at `gamma_range.0`).
///
/// The step is halved on failure; once it underflows the branch is
/// classified as lost (amplitudes collapsing) or folded.
pub fn ghost_branch(
    params: &CouplerParams,
    target: f64,
    gamma_range: (f64, f64),
    seed: &GhostMode,
    opts: &GhostBranchOptions,
) -> Result<GhostBranch> {
    let (g0, g1) = gamma_range;
    if !(g0.is_finite() && g1.is_finite()) || g0 == g1 {
        return Err(Error::InvalidInput(format!("bad gamma range {gamma_range:?}")));
    }
    let dir = (g1 - g0).signum();
    let first = ghost_solve(&params.with_gamma(g0), target, seed, &opts.solver)?;
    let mut points = vec![first];
    let mut h = opts.step;
    let termination = loop {
        let last = *points.last().unwrap();
        let gl = last.params.gamma;
        if (gl - g1) * dir >= 0.0 {
            break Termination::Boundary;
        }
        let gn = if (gl + dir * h - g1) * dir > 0.0 { g1 } else { gl + dir * h };
        // secant predictor
        let guess = match points.len() {
            1 => last,
            n => extrapolate(&points[n - 2], &last, gn),
        };
        match ghost_solve(&params.with_gamma(gn), target, &guess, &opts.solver) {
            Ok(g) if step_ok(&last, &g, h) => {
                let power = g.c1 * g.c1 + g.c2 * g.c2;
                points.push(g);
                if power < opts.min_power {
                    break Termination::ExistenceLost;
                }
                h = (h * 1.5).min(opts.step);
            }
            _ => {
                h *= 0.5;
                if h < opts.step_min {
                    let power = last.c1 * last.c1 + last.c2 * last.c2;
                    break if power < 1e-2 { Termination::ExistenceLost } else { Termination::Fold };
                }
            }
        }
    };
    Ok(GhostBranch {
        pinning: opts.solver.pinning,
        pinned_value: target,
        points,
        termination,
    })
}

fn extrapolate(a: &GhostMode, b: &GhostMode, gamma: f64) -> GhostMode {
    let t = (gamma - b.params.gamma) / (b.params.gamma - a.params.gamma);
    let lerp = |x: f64, y: f64| y + t * (y - x);
    GhostMode {
        c1: lerp(a.c1, b.c1).max(1e-3 * b.c1),
        c2: lerp(a.c2, b.c2).max(1e-3 * b.c2),
        phi1: 0.0,
        phi2: lerp(a.dphi(), b.dphi()),
        b_mod: lerp(a.b_mod, b.b_mod),
        phi_b: lerp(a.phi_b, b.phi_b),
        params: b.params.with_gamma(gamma),
    }
}

/// Rejects jumps to a different root between consecutive branch points.
fn step_ok(a: &GhostMode, b: &GhostMode, h: f64) -> bool {
    let da = (a.c1 - b.c1).abs() + (a.c2 - b.c2).abs() + (a.phi_b - b.phi_b).abs();
    let dd = (a.dphi() - b.dphi()).sin().abs();
    da + dd < 10.0 * h.sqrt().max(h)
}

/// Seed for a ghost near the pitchfork: the symmetric ghost-form mode with
/// its two amplitudes split by the factor `1 ± eta`.
pub fn seed_from_symmetric(mode: &StationaryMode, eta: f64) -> Result<GhostMode> {
    let mut g = GhostMode::from_stationary(mode)?;
    let c = g.c1;
    g.c1 = c * (1.0 - eta);
    g.c2 = c * (1.0 + eta);
    Ok(g)
}

/// Formal linearization spectrum of a ghost (not a stability verdict).
pub fn ghost_spectrum(g: &GhostMode) -> Result<Vec<Complex64>> {
    crate::stability::formal_spectrum(&g.params, g.b_complex(), &g.field())
}
