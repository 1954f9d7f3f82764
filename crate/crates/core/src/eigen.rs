//! Dense non-Hermitian eigenvalues for small matrices.
//!
//! Both routes balance the matrix, reduce it to upper Hessenberg form with
//! Householder reflections and then run shifted QR with deflation. Complex
//! input uses single Wilkinson shifts; real input uses the Francis double
//! shift so that complex eigenvalues come out in exact conjugate pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dimension the solver is specified for.
pub const MAX_DIM: usize = 8;

const ITER_PER_DIM: usize = 100;

fn check_input(rows: usize, cols: usize, finite: impl Fn() -> bool) -> Result<()> {
    if rows != cols {
        return Err(Error::InvalidInput(format!("matrix is {rows}x{cols}, not square")));
    }
    if rows > MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "matrix dimension {rows} exceeds {MAX_DIM}"
        )));
    }
    if !finite() {
        return Err(Error::NonFinite("matrix entries"));
    }
    Ok(())
}

/// All eigenvalues (with multiplicity) of a complex square matrix, `n <= 8`.
pub fn eigen_numeric(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    check_input(m.nrows(), m.ncols(), || {
        m.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    })?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    balance_complex(&mut a);
    hessenberg_complex(&mut a);
    qr_complex(&mut a)
}

/// All eigenvalues of a real square matrix, `n <= 8`. Complex eigenvalues are
/// returned as exact conjugate pairs.
pub fn eigen_real(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    check_input(m.nrows(), m.ncols(), || m.iter().all(|v| v.is_finite()))?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    balance_real(&mut a);
    hessenberg_real(&mut a);
    hqr(&a)
}

fn abs1(c: Complex64) -> f64 {
    c.re.abs() + c.im.abs()
}

fn balance_complex(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let (f, changed) = balance_factor(c, r);
            if changed {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

fn balance_real(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let (f, changed) = balance_factor(c, r);
            if changed {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Power-of-two scaling that brings column norm `c` and row norm `r` together.
fn balance_factor(mut c: f64, r: f64) -> (f64, bool) {
    let s = c + r;
    let mut f = 1.0;
    let mut g = r / 2.0;
    while c < g {
        f *= 2.0;
        c *= 4.0;
    }
    g = r * 2.0;
    while c > g {
        f /= 2.0;
        c /= 4.0;
    }
    (f, (c + r) / f < 0.95 * s)
}

fn hessenberg_complex(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for c in v.iter_mut() {
            *c /= vn;
        }
        // A <- (I - 2 v v^H) A
        for j in 0..n {
            let s: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt.conj() * a[(k + 1 + t, j)])
                .sum();
            for (t, vt) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= 2.0 * vt * s;
            }
        }
        // A <- A (I - 2 v v^H)
        for i in 0..n {
            let s: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| a[(i, k + 1 + t)] * vt)
                .sum();
            for (t, vt) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= 2.0 * s * vt.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

fn hessenberg_real(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for c in v.iter_mut() {
            *c /= vn;
        }
        for j in 0..n {
            let s: f64 = v.iter().enumerate().map(|(t, vt)| vt * a[(k + 1 + t, j)]).sum();
            for (t, vt) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= 2.0 * vt * s;
            }
        }
        for i in 0..n {
            let s: f64 = v.iter().enumerate().map(|(t, vt)| a[(i, k + 1 + t)] * vt).sum();
            for (t, vt) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= 2.0 * s * vt;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_complex(h: &mut DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let mut eig = vec![zero; n];
    let cap = ITER_PER_DIM * n;
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n as isize - 1;
    let norm = h.iter().map(|c| abs1(*c)).fold(0.0, f64::max);
    while hi >= 0 {
        let hiu = hi as usize;
        // look for a negligible subdiagonal
        let mut l = hiu;
        while l > 0 {
            let mut s = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            if s == 0.0 {
                s = norm;
            }
            if abs1(h[(l, l - 1)]) <= f64::EPSILON * s {
                h[(l, l - 1)] = zero;
                break;
            }
            l -= 1;
        }
        if l == hiu {
            eig[hiu] = h[(hiu, hiu)];
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > cap {
            return Err(Error::EigenNoConvergence { n });
        }
        let mu = if its % 11 == 10 {
            // exceptional shift
            let s = h[(hiu, hiu - 1)].norm()
                + if hiu >= 2 { h[(hiu - 1, hiu - 2)].norm() } else { 0.0 };
            h[(hiu, hiu)] + Complex64::new(0.75 * s, 0.0)
        } else {
            wilkinson_shift(
                h[(hiu - 1, hiu - 1)],
                h[(hiu - 1, hiu)],
                h[(hiu, hiu - 1)],
                h[(hiu, hiu)],
            )
        };
        for i in l..=hiu {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hiu - l);
        for i in l..hiu {
            let a = h[(i, i)];
            let b = h[(i + 1, i)];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (1.0, zero)
            } else if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                (a.norm() / r, (a / a.norm()) * b.conj() / r)
            };
            for j in i..=hiu {
                let x = h[(i, j)];
                let y = h[(i + 1, j)];
                h[(i, j)] = x * c + s * y;
                h[(i + 1, j)] = -s.conj() * x + y * c;
            }
            rots.push((c, s));
        }
        for (t, &(c, s)) in rots.iter().enumerate() {
            let i = l + t;
            for r in l..=(i + 1).min(hiu) {
                let x = h[(r, i)];
                let y = h[(r, i + 1)];
                h[(r, i)] = x * c + y * s.conj();
                h[(r, i + 1)] = -x * s + y * c;
            }
        }
        for i in l..=hiu {
            h[(i, i)] += mu;
        }
    }
    Ok(eig)
}

/// Francis double-shift QR on a real upper Hessenberg matrix.
fn hqr(h: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    // 1-based working copy
    let mut a = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let cap = ITER_PER_DIM * n;
    let mut total = 0usize;
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0usize;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            total += 1;
            if total > cap {
                return Err(Error::EigenNoConvergence { n });
            }
            if its == 10 || its == 20 {
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                r = x - z;
                let s = y - z;
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = nn.min(k + 3);
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Greedy matching of two eigenvalue multisets; returns the largest distance
/// between matched pairs, or `None` when the lengths differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        used[idx] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal() {
        let d = [c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0), c(0.0, 0.0)];
        let m = DMatrix::from_fn(4, 4, |i, j| if i == j { d[i] } else { c(0.0, 0.0) });
        let ev = eigen_numeric(&m).unwrap();
        assert!(multiset_distance(&ev, &d).unwrap() < 1e-14);
    }

    #[test]
    fn companion_of_lambda_squared_plus_one() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let ev = eigen_numeric(&m).unwrap();
        assert!(multiset_distance(&ev, &[c(0.0, 1.0), c(0.0, -1.0)]).unwrap() < 1e-14);
        let mr = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let ev = eigen_real(&mr).unwrap();
        assert!(multiset_distance(&ev, &[c(0.0, 1.0), c(0.0, -1.0)]).unwrap() < 1e-14);
    }

    #[test]
    fn companion_with_known_roots() {
        // (x-1)(x-2)(x+3)(x-0.5)(x+1.5)
        let roots = [1.0, 2.0, -3.0, 0.5, -1.5];
        let mut coeffs = vec![1.0];
        for r in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, a) in coeffs.iter().enumerate() {
                next[i] += a;
                next[i + 1] -= a * r;
            }
            coeffs = next;
        }
        let n = roots.len();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -coeffs[j + 1]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let ev = eigen_real(&m).unwrap();
        let want: Vec<_> = roots.iter().map(|r| c(*r, 0.0)).collect();
        assert!(multiset_distance(&ev, &want).unwrap() < 1e-10);
        let mc = m.map(|v| c(v, 0.0));
        let ev = eigen_numeric(&mc).unwrap();
        assert!(multiset_distance(&ev, &want).unwrap() < 1e-10);
    }

    #[test]
    fn similarity_transformed_8x8() {
        // T D T^-1 with T unit upper triangular: eigenvalues are D's diagonal
        let d = [
            c(1.0, 0.5),
            c(-2.0, 0.0),
            c(0.3, -1.2),
            c(3.0, 3.0),
            c(-0.7, 0.1),
            c(0.0, 2.0),
            c(1.5, -0.5),
            c(-1.0, -1.0),
        ];
        let t = DMatrix::from_fn(8, 8, |i, j| {
            if i == j {
                c(1.0, 0.0)
            } else if j > i {
                c(0.3 * ((i + 2 * j) as f64).sin(), 0.2 * ((3 * i + j) as f64).cos())
            } else {
                c(0.0, 0.0)
            }
        });
        let tinv = t.clone().try_inverse().unwrap();
        let dm = DMatrix::from_fn(8, 8, |i, j| if i == j { d[i] } else { c(0.0, 0.0) });
        let m = &t * dm * tinv;
        let ev = eigen_numeric(&m).unwrap();
        assert!(multiset_distance(&ev, &d).unwrap() < 1e-10);
    }

    #[test]
    fn real_spectrum_is_conjugate_closed() {
        let m = DMatrix::from_fn(8, 8, |i, j| ((i * 7 + j * 3) as f64).sin() + if i == j { 0.5 } else { 0.0 });
        let ev = eigen_real(&m).unwrap();
        let conj: Vec<_> = ev.iter().map(|z| z.conj()).collect();
        assert_eq!(multiset_distance(&ev, &conj).unwrap(), 0.0);
        // trace check
        let tr: f64 = (0..8).map(|i| m[(i, i)]).sum();
        let s: Complex64 = ev.iter().sum();
        assert!((s.re - tr).abs() < 1e-10 && s.im.abs() < 1e-12);
        let mc = m.map(|v| c(v, 0.0));
        let evc = eigen_numeric(&mc).unwrap();
        assert!(multiset_distance(&ev, &evc).unwrap() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let m = DMatrix::from_element(9, 9, c(1.0, 0.0));
        assert!(eigen_numeric(&m).is_err());
        let m = DMatrix::from_element(2, 3, 1.0);
        assert!(eigen_real(&m).is_err());
        let m = DMatrix::from_element(2, 2, f64::NAN);
        assert!(eigen_real(&m).is_err());
    }

    #[test]
    fn small_sizes() {
        assert!(eigen_real(&DMatrix::<f64>::zeros(0, 0)).unwrap().is_empty());
        let ev = eigen_real(&DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_eq!(ev, vec![c(4.0, 0.0)]);
    }
}
