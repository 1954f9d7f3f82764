//! The coupled-mode quadrimer: parameters, field states, the z-evolution
//! right-hand side, the stationary residual and the PT action.
//!
//! Sites are numbered 0..4 in code (1..4 in the physics). Sites 0 and 2 are
//! the two polarizations of the active arm, 1 and 3 those of the lossy arm.
//! Polarization partners are (0, 2) and (1, 3).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Polarization partner of each site.
pub const PARTNER: [usize; 4] = [2, 3, 0, 1];

/// Physical parameters of the coupler.
///
/// `alpha` switches the four-wave-mixing terms: 1 for matched polarizations
/// (zero mismatch, `delta1 = delta2 = 0`), 0 for the large-mismatch limit where
/// they are dropped. `detuned_mixing` keeps the mixing terms with their
/// `exp(±i delta z)` phases when `alpha = 0`; it only affects the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerParams {
    pub k: f64,
    pub gamma: f64,
    pub alpha: u8,
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub delta2: f64,
    #[serde(default)]
    pub detuned_mixing: bool,
}

impl CouplerParams {
    pub fn new(k: f64, gamma: f64, alpha: u8) -> Result<Self> {
        let p = Self {
            k,
            gamma,
            alpha,
            delta1: 0.0,
            delta2: 0.0,
            detuned_mixing: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Large-mismatch parameters with the mixing terms re-enabled at the given
    /// detunings. Only meaningful for z-evolution.
    pub fn detuned(k: f64, gamma: f64, delta1: f64, delta2: f64) -> Result<Self> {
        let p = Self {
            k,
            gamma,
            alpha: 0,
            delta1,
            delta2,
            detuned_mixing: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k, self.gamma, self.delta1, self.delta2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("coupler parameters"));
        }
        if self.k <= 0.0 {
            return Err(Error::InvalidParams(format!("k must be > 0, got {}", self.k)));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.alpha > 1 {
            return Err(Error::InvalidParams(format!(
                "alpha must be 0 or 1, got {}",
                self.alpha
            )));
        }
        if self.alpha == 1 && (self.delta1 != 0.0 || self.delta2 != 0.0) {
            return Err(Error::InvalidParams(
                "alpha = 1 is the zero-mismatch limit; delta1 and delta2 must be 0".into(),
            ));
        }
        if self.alpha == 1 && self.detuned_mixing {
            return Err(Error::InvalidParams(
                "detuned mixing override only applies to alpha = 0".into(),
            ));
        }
        Ok(())
    }

    pub fn alpha_f64(&self) -> f64 {
        f64::from(self.alpha)
    }

    /// True when the z-evolution has no explicit z-dependence.
    pub fn is_autonomous(&self) -> bool {
        !self.detuned_mixing || (self.delta1 == 0.0 && self.delta2 == 0.0)
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    /// Primary critical point `sqrt(2) k` (linear PT-symmetry breaking).
    pub fn gamma_cr1(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.k
    }

    /// Secondary critical point `k`.
    pub fn gamma_cr2(&self) -> f64 {
        self.k
    }

    /// Diagonal gain/loss signs: sites 0, 2 gain, sites 1, 3 loss.
    pub(crate) fn gain_sign(j: usize) -> f64 {
        if j % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Four complex amplitudes `(u1, u2, u3, u4)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldState(pub [Complex64; 4]);

impl FieldState {
    pub const ZERO: FieldState = FieldState([Complex64::new(0.0, 0.0); 4]);

    pub fn new(u: [Complex64; 4]) -> Self {
        Self(u)
    }

    pub fn from_re_im(parts: [[f64; 2]; 4]) -> Self {
        Self(parts.map(|[re, im]| Complex64::new(re, im)))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.0.iter()
    }

    pub fn intensities(&self) -> [f64; 4] {
        self.0.map(|c| c.norm_sqr())
    }

    pub fn amplitudes(&self) -> [f64; 4] {
        self.0.map(|c| c.norm())
    }

    /// `arg(u_{j+1}) - arg(u_j)` wrapped to `(-pi, pi]`.
    pub fn phase_diffs(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (j, d) in out.iter_mut().enumerate() {
            *d = (self.0[j + 1] * self.0[j].conj()).arg();
        }
        out
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        power(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|c| c * s))
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|c| c.conj()))
    }

    /// Sesquilinear product `sum_j g_j conj(h_j)`.
    pub fn dot(&self, other: &FieldState) -> Complex64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(g, h)| g * h.conj())
            .sum()
    }

    /// Bilinear product `sum_j g_j h_j`.
    pub fn dot_bilinear(&self, other: &FieldState) -> Complex64 {
        self.0.iter().zip(other.0.iter()).map(|(g, h)| g * h).sum()
    }

    /// Real 8-vector layout `(Re u1..Re u4, Im u1..Im u4)`.
    pub fn to_real(&self) -> [f64; 8] {
        let mut x = [0.0; 8];
        for j in 0..4 {
            x[j] = self.0[j].re;
            x[j + 4] = self.0[j].im;
        }
        x
    }

    /// `(Re u1, Im u1, ..., Re u4, Im u4)`, the CSV column order.
    pub fn to_real_interleaved(&self) -> [f64; 8] {
        std::array::from_fn(|i| if i % 2 == 0 { self.0[i / 2].re } else { self.0[i / 2].im })
    }

    pub fn from_real(x: &[f64]) -> Self {
        debug_assert!(x.len() >= 8);
        let mut u = [Complex64::new(0.0, 0.0); 4];
        for j in 0..4 {
            u[j] = Complex64::new(x[j], x[j + 4]);
        }
        Self(u)
    }

    /// Index of the largest-modulus component.
    pub fn dominant_index(&self) -> usize {
        let mut best = 0;
        for j in 1..4 {
            if self.0[j].norm() > self.0[best].norm() {
                best = j;
            }
        }
        best
    }

    /// Representative of the U(1) orbit with `u_m` real and positive,
    /// `m` being the dominant component.
    pub fn gauge_aligned(&self) -> Self {
        let m = self.dominant_index();
        let c = self.0[m];
        if c.norm() == 0.0 {
            return *self;
        }
        self.scale(c.conj() / c.norm())
    }

    /// Distance between the U(1) orbits of two states (both aligned on the
    /// dominant component of `self`).
    pub fn gauge_distance(&self, other: &FieldState) -> f64 {
        // optimal phase: arg of <self, other>
        let ov = self.dot(other);
        let rot = if ov.norm() > 0.0 { ov / ov.norm() } else { Complex64::new(1.0, 0.0) };
        (*self - other.scale(rot)).norm()
    }
}

impl Index<usize> for FieldState {
    type Output = Complex64;
    fn index(&self, j: usize) -> &Complex64 {
        &self.0[j]
    }
}

impl IndexMut<usize> for FieldState {
    fn index_mut(&mut self, j: usize) -> &mut Complex64 {
        &mut self.0[j]
    }
}

impl Add for FieldState {
    type Output = FieldState;
    fn add(self, rhs: FieldState) -> FieldState {
        FieldState(std::array::from_fn(|j| self.0[j] + rhs.0[j]))
    }
}

impl Sub for FieldState {
    type Output = FieldState;
    fn sub(self, rhs: FieldState) -> FieldState {
        FieldState(std::array::from_fn(|j| self.0[j] - rhs.0[j]))
    }
}

impl Mul<f64> for FieldState {
    type Output = FieldState;
    fn mul(self, rhs: f64) -> FieldState {
        FieldState(self.0.map(|c| c * rhs))
    }
}

impl fmt::Display for FieldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, c) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", c.re, c.im)?;
        }
        write!(f, ")")
    }
}

// JSON layout: [[re, im], [re, im], [re, im], [re, im]]
impl Serialize for FieldState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        for c in &self.0 {
            seq.serialize_element(&[c.re, c.im])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for FieldState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        if pairs.len() != 4 {
            return Err(de::Error::invalid_length(pairs.len(), &"4 [re, im] pairs"));
        }
        Ok(FieldState::from_re_im([pairs[0], pairs[1], pairs[2], pairs[3]]))
    }
}

/// Which linear eigenvalue `b~_±` a family bifurcates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "p" => Ok(Sign::Plus),
            "-" | "minus" | "m" => Ok(Sign::Minus),
            other => Err(Error::Parse(format!("sign must be + or -, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "circular+")]
    CircularPlus,
    #[serde(rename = "circular-")]
    CircularMinus,
    #[serde(rename = "elliptic+")]
    EllipticPlus,
    #[serde(rename = "elliptic-")]
    EllipticMinus,
    #[serde(rename = "numeric")]
    Numeric,
}

impl Family {
    pub fn circular(sign: Sign) -> Self {
        match sign {
            Sign::Plus => Family::CircularPlus,
            Sign::Minus => Family::CircularMinus,
        }
    }

    pub fn elliptic(sign: Sign) -> Self {
        match sign {
            Sign::Plus => Family::EllipticPlus,
            Sign::Minus => Family::EllipticMinus,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Family::CircularPlus => "circular+",
            Family::CircularMinus => "circular-",
            Family::EllipticPlus => "elliptic+",
            Family::EllipticMinus => "elliptic-",
            Family::Numeric => "numeric",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A solution `w` of the stationary problem with real propagation constant `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryMode {
    pub w: FieldState,
    pub b: f64,
    pub params: CouplerParams,
    pub family: Family,
}

impl StationaryMode {
    pub fn power(&self) -> f64 {
        power(&self.w)
    }

    pub fn residual_norm(&self) -> f64 {
        stationary_residual(&self.params, self.b, &self.w).norm_inf()
    }
}

/// Cubic self- and cross-phase modulation coefficient of site `j`.
#[inline]
fn kerr(u: &FieldState, j: usize) -> f64 {
    u.0[j].norm_sqr() + 2.0 / 3.0 * u.0[PARTNER[j]].norm_sqr()
}

/// Right-hand side of the stationary system for complex `b`:
/// `H w + F(w) w + (alpha/3) w_p^2 conj(w_j) - b w`.
pub fn stationary_residual_complex(params: &CouplerParams, b: Complex64, w: &FieldState) -> FieldState {
    let lin = apply_linear(params, w);
    let a3 = params.alpha_f64() / 3.0;
    FieldState(std::array::from_fn(|j| {
        let p = PARTNER[j];
        lin.0[j] + kerr(w, j) * w.0[j] + a3 * w.0[p] * w.0[p] * w.0[j].conj() - b * w.0[j]
    }))
}

/// Stationary residual for real propagation constant `b`. Zero iff `w` is a
/// stationary mode.
pub fn stationary_residual(params: &CouplerParams, b: f64, w: &FieldState) -> FieldState {
    stationary_residual_complex(params, Complex64::new(b, 0.0), w)
}

/// `H w` with `H` the linear coupling matrix (gain on sites 0, 2).
pub fn apply_linear(params: &CouplerParams, w: &FieldState) -> FieldState {
    let k = params.k;
    let ig = I * params.gamma;
    let [w1, w2, w3, w4] = w.0;
    FieldState([
        -ig * w1 + k * (w2 + w4),
        ig * w2 + k * (w1 - w3),
        -ig * w3 + k * (w4 - w2),
        ig * w4 + k * (w1 + w3),
    ])
}

/// `du/dz` without input checks; used inside integrators.
pub(crate) fn rhs_unchecked(params: &CouplerParams, z: f64, u: &FieldState) -> FieldState {
    let lin = apply_linear(params, u);
    let mixing = if params.alpha == 1 {
        Some([Complex64::new(1.0, 0.0); 2])
    } else if params.detuned_mixing {
        Some([
            Complex64::from_polar(1.0, params.delta1 * z),
            Complex64::from_polar(1.0, params.delta2 * z),
        ])
    } else {
        None
    };
    FieldState(std::array::from_fn(|j| {
        let p = PARTNER[j];
        let mut f = lin.0[j] + kerr(u, j) * u.0[j];
        if let Some(ph) = mixing {
            // e^{+i delta z} on sites 0, 1 and e^{-i delta z} on their partners
            let phase = if j < 2 { ph[j] } else { ph[j - 2].conj() };
            f += u.0[p] * u.0[p] * u.0[j].conj() * phase / 3.0;
        }
        I * f
    }))
}

/// `du/dz` of the coupled-mode equations.
pub fn rhs_dynamic(params: &CouplerParams, z: f64, u: &FieldState) -> Result<FieldState> {
    params.validate()?;
    if !z.is_finite() {
        return Err(Error::NonFinite("propagation distance"));
    }
    u.ensure_finite("field state")?;
    Ok(rhs_unchecked(params, z, u))
}

/// PT action `P conj(u) = (u4*, u3*, u2*, u1*)`.
pub fn pt_apply(u: &FieldState) -> FieldState {
    let [a, b, c, d] = u.0;
    FieldState([d.conj(), c.conj(), b.conj(), a.conj()])
}

/// Total power `U = sum |u_j|^2`.
pub fn power(u: &FieldState) -> f64 {
    u.0.iter().map(|c| c.norm_sqr()).sum()
}

/// Analytic `dU/dz = 2 gamma (|u1|^2 + |u3|^2 - |u2|^2 - |u4|^2)`.
pub fn power_imbalance(params: &CouplerParams, u: &FieldState) -> f64 {
    let s: f64 = (0..4)
        .map(|j| CouplerParams::gain_sign(j) * u.0[j].norm_sqr())
        .sum();
    2.0 * params.gamma * s
}

/// Wirtinger derivatives `(A, B)` of the stationary residual at `w`:
/// `dR = A dw + B conj(dw)`.
pub fn residual_wirtinger(
    params: &CouplerParams,
    b: Complex64,
    w: &FieldState,
) -> ([[Complex64; 4]; 4], [[Complex64; 4]; 4]) {
    let zero = Complex64::new(0.0, 0.0);
    let k = params.k;
    let g = params.gamma;
    let a3 = params.alpha_f64() / 3.0;
    let mut a = [[zero; 4]; 4];
    let mut bm = [[zero; 4]; 4];
    // linear part H - b
    let h = [
        [-I * g, k.into(), zero, k.into()],
        [k.into(), I * g, (-k).into(), zero],
        [zero, (-k).into(), -I * g, k.into()],
        [k.into(), zero, k.into(), I * g],
    ];
    for j in 0..4 {
        for l in 0..4 {
            a[j][l] = h[j][l];
        }
        a[j][j] -= b;
    }
    for j in 0..4 {
        let p = PARTNER[j];
        let wj = w.0[j];
        let wp = w.0[p];
        a[j][j] += 2.0 * wj.norm_sqr() + 2.0 / 3.0 * wp.norm_sqr();
        bm[j][j] += wj * wj + a3 * wp * wp;
        a[j][p] += 2.0 / 3.0 * wp.conj() * wj + 2.0 * a3 * wp * wj.conj();
        bm[j][p] += 2.0 / 3.0 * wp * wj;
    }
    (a, bm)
}

/// Real 8x8 Jacobian of the stationary residual in the `(Re, Im)` layout.
pub fn residual_jacobian(params: &CouplerParams, b: Complex64, w: &FieldState) -> [[f64; 8]; 8] {
    let (a, bm) = residual_wirtinger(params, b, w);
    let mut j = [[0.0; 8]; 8];
    for r in 0..4 {
        for c in 0..4 {
            let s = a[r][c] + bm[r][c];
            let d = a[r][c] - bm[r][c];
            j[r][c] = s.re;
            j[r][c + 4] = -d.im;
            j[r + 4][c] = s.im;
            j[r + 4][c + 4] = d.re;
        }
    }
    j
}

/// Derivative of the residual with respect to `gamma`.
pub fn residual_dgamma(w: &FieldState) -> FieldState {
    FieldState(std::array::from_fn(|j| {
        -I * CouplerParams::gain_sign(j) * w.0[j]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rhs_hand_evaluated() {
        let p = CouplerParams::new(1.0, 0.5, 0).unwrap();
        let u = FieldState([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let d = rhs_dynamic(&p, 0.0, &u).unwrap();
        let want = [c(0.5, 1.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 1.0)];
        for j in 0..4 {
            assert!((d[j] - want[j]).norm() < 1e-15, "site {j}: {}", d[j]);
        }
    }

    #[test]
    fn rhs_zero_state() {
        let p = CouplerParams::new(1.0, 0.0, 0).unwrap();
        assert_eq!(rhs_dynamic(&p, 3.0, &FieldState::ZERO).unwrap(), FieldState::ZERO);
    }

    #[test]
    fn rhs_rejects_nonfinite() {
        let p = CouplerParams::new(1.0, 0.0, 0).unwrap();
        let mut u = FieldState::ZERO;
        u[2] = c(f64::NAN, 0.0);
        assert!(matches!(rhs_dynamic(&p, 0.0, &u), Err(Error::NonFinite(_))));
    }

    #[test]
    fn params_validation() {
        assert!(CouplerParams::new(0.0, 0.1, 0).is_err());
        assert!(CouplerParams::new(1.0, -0.1, 0).is_err());
        assert!(CouplerParams::new(1.0, 0.1, 2).is_err());
        let mut p = CouplerParams::new(1.0, 0.1, 1).unwrap();
        p.delta1 = 0.3;
        assert!(p.validate().is_err());
        assert!(CouplerParams::detuned(1.0, 0.1, 0.3, -0.2).is_ok());
    }

    #[test]
    fn pt_apply_definition() {
        let u = FieldState([c(1.0, 0.0), c(0.0, 2.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = pt_apply(&u);
        assert_eq!(v, FieldState([c(4.0, 0.0), c(3.0, 0.0), c(0.0, -2.0), c(1.0, 0.0)]));
        assert_eq!(pt_apply(&v), u);
    }

    #[test]
    fn power_values() {
        let ones = FieldState([c(1.0, 0.0); 4]);
        assert_eq!(power(&ones), 4.0);
        assert_eq!(power(&FieldState::ZERO), 0.0);
    }

    #[test]
    fn power_imbalance_values() {
        let p = CouplerParams::new(1.0, 0.5, 0).unwrap();
        let u = FieldState([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((power_imbalance(&p, &u) - 1.0).abs() < 1e-15);
        let p0 = CouplerParams::new(1.0, 0.0, 0).unwrap();
        assert_eq!(power_imbalance(&p0, &u), 0.0);
        let balanced = FieldState([c(0.3, 0.4), c(0.0, 0.5), c(1.0, 0.0), c(0.6, 0.8)]);
        assert!(power_imbalance(&p, &balanced).abs() < 1e-15);
    }

    #[test]
    fn zero_is_stationary() {
        let p = CouplerParams::new(1.3, 0.7, 1).unwrap();
        assert_eq!(stationary_residual(&p, 2.5, &FieldState::ZERO), FieldState::ZERO);
    }

    #[test]
    fn field_state_json_layout() {
        let u = FieldState([c(1.0, -2.0), c(0.5, 0.0), c(0.0, 0.25), c(-1.0, 3.0)]);
        let s = serde_json::to_string(&u).unwrap();
        assert_eq!(s, "[[1.0,-2.0],[0.5,0.0],[0.0,0.25],[-1.0,3.0]]");
        let back: FieldState = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
        assert!(serde_json::from_str::<FieldState>("[[1,2],[3,4]]").is_err());
    }

    #[test]
    fn phase_diffs_wrap() {
        let u = FieldState([
            Complex64::from_polar(1.0, 3.0),
            Complex64::from_polar(1.0, -3.0),
            Complex64::from_polar(1.0, -2.0),
            Complex64::from_polar(1.0, 1.0),
        ]);
        let d = u.phase_diffs();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!((d[0] - (-6.0 + two_pi)).abs() < 1e-12);
        assert!((d[1] - 1.0).abs() < 1e-12);
        assert!((d[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let p = CouplerParams::new(0.8, 0.45, 1).unwrap();
        let w = FieldState([c(0.3, -0.7), c(1.1, 0.2), c(-0.4, 0.9), c(0.6, 0.5)]);
        let b = c(1.7, 0.3);
        let jac = residual_jacobian(&p, b, &w);
        let x0 = w.to_real();
        let h = 1e-6;
        for col in 0..8 {
            let mut xp = x0;
            let mut xm = x0;
            xp[col] += h;
            xm[col] -= h;
            let rp = stationary_residual_complex(&p, b, &FieldState::from_real(&xp)).to_real();
            let rm = stationary_residual_complex(&p, b, &FieldState::from_real(&xm)).to_real();
            for row in 0..8 {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                assert!(
                    (fd - jac[row][col]).abs() < 1e-8,
                    "J[{row}][{col}] = {} vs fd {fd}",
                    jac[row][col]
                );
            }
        }
    }
}
