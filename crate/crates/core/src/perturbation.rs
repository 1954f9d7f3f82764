//! Small-amplitude bifurcation theory for `alpha = 0`.
//!
//! Near a linear eigenvalue `b~` a nonlinear mode looks like
//! `w = eps w~(theta) + O(eps^3)`, `b = b~ + eps^2 B2 + ...`. The angle
//! `theta` is fixed by solvability of the `eps^3` problem: the projection of
//! `F(w~) w~` onto the eigenspace of `b~` must be `B2 w~` with real `B2`. The
//! energy slope at the bifurcation is then `dU/db = <w~, w~> / B2`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CouplerParams, FieldState, Sign};
use crate::spectrum::{self, pt_eigenvector};

/// Angular resolution of the root scan.
pub const SCAN_STEP: f64 = 1e-3;
/// Bisection stops once the bracket is this narrow.
pub const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictedFamily {
    Circular,
    Elliptic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPrediction {
    pub btilde: f64,
    pub theta: f64,
    #[serde(rename = "B2")]
    pub b2: f64,
    /// `<w~, w~>`
    pub norm2: f64,
    /// `dU/db` at the bifurcation point.
    pub slope: f64,
    pub family: PredictedFamily,
}

impl BifurcationPrediction {
    /// `B2` for the eigenvector rescaled to `<w~, w~> = norm2`. `B2` grows
    /// linearly with `<w~, w~>`, so predictions at different `theta` are
    /// only comparable at a common normalization.
    pub fn b2_at_norm(&self, norm2: f64) -> f64 {
        self.b2 * norm2 / self.norm2
    }
}

/// Root of the equal-moduli condition: `pi/8 - atan(b~/gamma)/2`, with
/// `atan(±inf) = ±pi/2` at `gamma = 0`.
pub fn theta_circular(btilde: f64, gamma: f64) -> Result<f64> {
    if btilde == 0.0 && gamma == 0.0 {
        return Err(Error::InvalidInput(
            "theta_circular is undefined for b~ = gamma = 0".into(),
        ));
    }
    let at = if gamma == 0.0 {
        FRAC_PI_2.copysign(btilde)
    } else {
        (btilde / gamma).atan()
    };
    Ok(FRAC_PI_8 - 0.5 * at)
}

/// `B2` of the circularly polarized family; `F(w~)` is `5/3` times identity there.
pub fn b2_circular() -> f64 {
    5.0 / 3.0
}

/// `<w~, w~> / B2 = 4 / (5/3)`, independent of `k` and `gamma`.
pub fn slope_circular() -> f64 {
    4.0 / b2_circular()
}

/// Diagonal of the `alpha = 0` nonlinearity matrix `F(w)`.
pub fn nonlinearity_diag(w: &FieldState) -> [f64; 4] {
    let a = w.intensities();
    [
        a[0] + 2.0 / 3.0 * a[2],
        a[1] + 2.0 / 3.0 * a[3],
        2.0 / 3.0 * a[0] + a[2],
        2.0 / 3.0 * a[1] + a[3],
    ]
}

fn apply_f(w: &FieldState) -> FieldState {
    let d = nonlinearity_diag(w);
    FieldState(std::array::from_fn(|j| w.0[j] * d[j]))
}

fn check_regime(params: &CouplerParams) -> Result<()> {
    if params.alpha != 0 {
        return Err(Error::InvalidParams(
            "perturbation theory is formulated for alpha = 0".into(),
        ));
    }
    if params.gamma <= 0.0 {
        return Err(Error::InvalidParams(
            "solvability relations need gamma > 0".into(),
        ));
    }
    Ok(())
}

/// Both solvability quotients
/// `<F(w~) w~, (w~^(j))*> / <w~, (w~^(j))*>`, `j = 1, 2`.
pub fn b2_solvability(
    params: &CouplerParams,
    btilde: f64,
    theta: f64,
) -> Result<(Complex64, Complex64)> {
    check_regime(params)?;
    let (e1, e2) = spectrum::orthogonal_pair(params, btilde)?;
    let w = pt_eigenvector(params, btilde, theta)?.v;
    let fw = apply_f(&w);
    let mut q = [Complex64::new(0.0, 0.0); 2];
    for (slot, basis) in q.iter_mut().zip([&e1.v, &e2.v]) {
        // <g, conj(h)> is the bilinear sum g_j h_j
        let den = w.dot_bilinear(basis);
        if den.norm() < 1e-14 {
            return Err(Error::Singular(format!(
                "solvability denominator vanishes at theta = {theta}"
            )));
        }
        *slot = fw.dot_bilinear(basis) / den;
    }
    Ok((q[0], q[1]))
}

struct Projector {
    basis: [FieldState; 2],
    gram_inv: [[Complex64; 2]; 2],
}

impl Projector {
    fn new(params: &CouplerParams, btilde: f64) -> Result<Self> {
        let (e1, e2) = spectrum::orthogonal_pair(params, btilde)?;
        let basis = [e1.v, e2.v];
        let g = |i: usize, j: usize| basis[i].dot_bilinear(&basis[j]);
        let det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        if det.norm() < 1e-14 {
            return Err(Error::Singular("degenerate eigenspace Gram matrix".into()));
        }
        let gram_inv = [[g(1, 1) / det, -g(0, 1) / det], [-g(1, 0) / det, g(0, 0) / det]];
        Ok(Self { basis, gram_inv })
    }

    /// Coordinates in the PT-invariant basis of the oblique projection of `v`
    /// onto the eigenspace.
    fn coords(&self, v: &FieldState) -> [Complex64; 2] {
        let r = [v.dot_bilinear(&self.basis[0]), v.dot_bilinear(&self.basis[1])];
        [
            self.gram_inv[0][0] * r[0] + self.gram_inv[0][1] * r[1],
            self.gram_inv[1][0] * r[0] + self.gram_inv[1][1] * r[1],
        ]
    }
}

/// Signed mismatch whose zeros are the solvability roots: the 2-D cross
/// product between the eigenspace coordinates of `w~(theta)` and of the
/// projection of `F(w~) w~`. Both coordinate pairs are real for PT-invariant
/// vectors, so this is a real function of `theta` with period `pi`.
pub fn solvability_mismatch(params: &CouplerParams, btilde: f64, theta: f64) -> Result<f64> {
    check_regime(params)?;
    let proj = Projector::new(params, btilde)?;
    Ok(mismatch_with(&proj, params, btilde, theta))
}

fn mismatch_with(proj: &Projector, params: &CouplerParams, btilde: f64, theta: f64) -> f64 {
    // pt_eigenvector cannot fail here: the phase was checked when building `proj`
    let w = pt_eigenvector(params, btilde, theta).map(|e| e.v).unwrap_or_default();
    let l = proj.coords(&w);
    let c = proj.coords(&apply_f(&w));
    (c[0] * l[1] - c[1] * l[0]).re
}

fn is_circular(v: &FieldState) -> bool {
    v.amplitudes().iter().all(|a| (a - 1.0).abs() < 1e-6)
}

/// Prediction for the circular family bifurcating from `b~_sign`.
pub fn predict_circular(params: &CouplerParams, sign: Sign) -> Result<BifurcationPrediction> {
    let bt = spectrum::btilde(params, sign)?;
    let theta = theta_circular(bt, params.gamma)?;
    let v = pt_eigenvector(params, bt, theta)?.v;
    let norm2 = v.dot(&v).re;
    let b2 = b2_circular();
    Ok(BifurcationPrediction {
        btilde: bt,
        theta,
        b2,
        norm2,
        slope: norm2 / b2,
        family: PredictedFamily::Circular,
    })
}

/// Existence predicate for the elliptic family: `0 < gamma <= k`.
pub fn elliptic_family_exists(params: &CouplerParams) -> bool {
    params.gamma > 0.0 && params.gamma <= params.gamma_cr2()
}

/// All elliptic solvability roots `theta* in [0, pi)` for `b~_sign`.
///
/// Scans the mismatch at resolution [`SCAN_STEP`], refines every sign change
/// by bisection and keeps roots whose eigenvector has unequal moduli (the
/// circular roots are dropped). Roots where the two quotients fail to agree
/// after refinement are reported as errors, not silently skipped.
pub fn elliptic_roots(params: &CouplerParams, sign: Sign) -> Result<Vec<BifurcationPrediction>> {
    check_regime(params)?;
    let bt = spectrum::btilde(params, sign)?;
    let proj = Projector::new(params, bt)?;
    let f = |th: f64| mismatch_with(&proj, params, bt, th);

    let n = (PI / SCAN_STEP).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| PI * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();

    let mut roots = Vec::new();
    for i in 0..n {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (vals[i], vals[i + 1]);
        let root = if fa == 0.0 {
            a
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            bisect(&f, a, b, fa)
        } else {
            continue;
        };
        roots.push(root);
    }

    let mut out: Vec<BifurcationPrediction> = Vec::new();
    for theta in roots {
        let v = pt_eigenvector(params, bt, theta)?.v;
        if is_circular(&v) {
            continue;
        }
        let (q1, q2) = b2_solvability(params, bt, theta)?;
        let scale = q1.norm().max(1.0);
        if (q1 - q2).norm() > 1e-8 * scale || q1.im.abs() > 1e-10 * scale {
            return Err(Error::RootFinder(format!(
                "bracketed root theta = {theta} does not equalize the quotients ({q1}, {q2})"
            )));
        }
        if out.iter().any(|p| (p.theta - theta).abs() < 1e-9) {
            continue;
        }
        let norm2 = v.dot(&v).re;
        out.push(BifurcationPrediction {
            btilde: bt,
            theta,
            b2: q1.re,
            norm2,
            slope: norm2 / q1.re,
            family: PredictedFamily::Elliptic,
        });
    }
    Ok(out)
}

/// First elliptic root, or `None` when the family does not exist.
pub fn elliptic_root(params: &CouplerParams, sign: Sign) -> Result<Option<f64>> {
    Ok(elliptic_roots(params, sign)?.first().map(|p| p.theta))
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > BISECTION_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
