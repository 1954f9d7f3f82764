//! Linear problem: the 4x4 coupling matrix, its two double eigenvalues and
//! the PT-invariant eigenvectors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::eigen_numeric;
use crate::error::{Error, Result};
use crate::model::{pt_apply, CouplerParams, FieldState, I};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSpectrum {
    #[serde(with = "crate::serde_util::complex")]
    pub b_plus: Complex64,
    #[serde(with = "crate::serde_util::complex")]
    pub b_minus: Complex64,
    pub broken: bool,
    pub gamma_cr1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PTEigenvector {
    pub theta: f64,
    pub btilde: f64,
    pub v: FieldState,
}

/// The linear coupling matrix with diagonal `(-i g, i g, -i g, i g)`.
pub fn build_h(params: &CouplerParams) -> DMatrix<Complex64> {
    let k = Complex64::new(params.k, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let ig = I * params.gamma;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            -ig, k, z, k, //
            k, ig, -k, z, //
            z, -k, -ig, k, //
            k, z, k, ig,
        ],
    )
}

/// The site-reversal matrix `P`.
pub fn p_matrix() -> DMatrix<Complex64> {
    DMatrix::from_fn(4, 4, |i, j| {
        if i + j == 3 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Closed-form double eigenvalues `±sqrt(2k^2 - g^2)`; above the breaking
/// point they are `±i sqrt(g^2 - 2k^2)`.
pub fn eigenvalues_closed(params: &CouplerParams) -> LinearSpectrum {
    let d = 2.0 * params.k * params.k - params.gamma * params.gamma;
    let gamma_cr1 = params.gamma_cr1();
    let broken = params.gamma > gamma_cr1;
    let root = if d >= 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-d).sqrt())
    };
    LinearSpectrum {
        b_plus: root,
        b_minus: -root,
        broken,
        gamma_cr1,
    }
}

/// Real eigenvalue `b~_±` for the unbroken phase.
pub fn btilde(params: &CouplerParams, sign: crate::model::Sign) -> Result<f64> {
    let spec = eigenvalues_closed(params);
    if spec.broken {
        return Err(Error::BrokenPhase {
            gamma: params.gamma,
            critical: spec.gamma_cr1,
        });
    }
    Ok(sign.value() * spec.b_plus.re)
}

/// Eigenvalues of `H` from the dense solver.
pub fn eigenvalues_numeric(params: &CouplerParams) -> Result<Vec<Complex64>> {
    eigen_numeric(&build_h(params))
}

/// Locates the PT-breaking point for coupling `k` from the numerical
/// spectrum: the smallest `gamma` at which `H` acquires eigenvalues with
/// imaginary part above `1e-6`.
pub fn breaking_point_numeric(k: f64) -> Result<f64> {
    let broken_at = |g: f64| -> Result<bool> {
        let p = CouplerParams::new(k, g, 0)?;
        let ev = eigenvalues_numeric(&p)?;
        Ok(ev.iter().any(|z| z.im.abs() > 1e-6))
    };
    let mut lo = 0.0;
    let mut hi = 2.0 * k;
    if broken_at(lo)? || !broken_at(hi)? {
        return Err(Error::RootFinder("breaking point not bracketed".into()));
    }
    while hi - lo > 1e-12 * k {
        let mid = 0.5 * (lo + hi);
        if broken_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Numerical rank of `H - b~ I` (singular values above `tol`).
pub fn rank_of_shifted(params: &CouplerParams, btilde: f64, tol: f64) -> usize {
    let mut m = build_h(params);
    for i in 0..4 {
        m[(i, i)] -= btilde;
    }
    m.singular_values().iter().filter(|s| **s > tol).count()
}

fn ensure_unbroken(params: &CouplerParams) -> Result<()> {
    if params.gamma > params.gamma_cr1() {
        return Err(Error::BrokenPhase {
            gamma: params.gamma,
            critical: params.gamma_cr1(),
        });
    }
    Ok(())
}

/// PT-invariant eigenvector built from `a = exp(i theta)`:
/// `(a*, i a* (g - i b)/k - a, -i a (g + i b)/k - a*, a)`.
pub fn pt_eigenvector(params: &CouplerParams, btilde: f64, theta: f64) -> Result<PTEigenvector> {
    ensure_unbroken(params)?;
    if !btilde.is_finite() || !theta.is_finite() {
        return Err(Error::NonFinite("eigenvector arguments"));
    }
    let a = Complex64::from_polar(1.0, theta);
    let ac = a.conj();
    let k = params.k;
    let g = params.gamma;
    let v = FieldState([
        ac,
        I * ac * (g - I * btilde) / k - a,
        -I * a * (g + I * btilde) / k - ac,
        a,
    ]);
    Ok(PTEigenvector { theta, btilde, v })
}

/// The angle of the second member of the orthogonal pair.
pub fn theta2(params: &CouplerParams, btilde: f64) -> Result<f64> {
    if params.gamma == 0.0 {
        return Err(Error::Singular(
            "second orthogonal eigenvector angle is undefined at gamma = 0".into(),
        ));
    }
    Ok(((2.0 * params.k - btilde) / params.gamma).atan())
}

/// Two PT-invariant eigenvectors for `b~`, orthogonal in `<g, h> = sum g h*`.
pub fn orthogonal_pair(
    params: &CouplerParams,
    btilde: f64,
) -> Result<(PTEigenvector, PTEigenvector)> {
    ensure_unbroken(params)?;
    let t2 = theta2(params, btilde)?;
    Ok((pt_eigenvector(params, btilde, 0.0)?, pt_eigenvector(params, btilde, t2)?))
}

/// `max_j |(H v - b v)_j|`.
pub fn eigen_defect(params: &CouplerParams, btilde: f64, v: &FieldState) -> f64 {
    let hv = crate::model::apply_linear(params, v);
    (hv - *v * btilde).norm_inf()
}

/// `max_j |(PT v - v)_j|`.
pub fn pt_defect(v: &FieldState) -> f64 {
    (pt_apply(v) - *v).norm_inf()
}
