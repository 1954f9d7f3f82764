//! Branch continuation in `b` or `gamma`.
//!
//! The extended unknown is `x = (Re w, Im w, p)` with `p` the active
//! parameter. Residual plus gauge row give 9 equations whose Jacobian has a
//! one-dimensional kernel along the branch; its null vector is the tangent.
//! Steps use the parameter as the natural coordinate while the tangent leans
//! on it, and switch to pseudo-arclength when its parameter component drops
//! below [`NATURAL_THRESHOLD`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    residual_dgamma, residual_jacobian, stationary_residual, CouplerParams, Family, FieldState, Sign,
    StationaryMode,
};
use crate::newton::{newton_solve_with, svd_solve, Gauge, NewtonOptions};
use crate::perturbation;
use crate::spectrum::{self, pt_eigenvector};
use crate::stability::{stability_report, StabilityReport};

/// Below this relative size of the tangent's parameter component the
/// corrector switches to pseudo-arclength.
pub const NATURAL_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    B,
    Gamma,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b" => Ok(Axis::B),
            "gamma" | "g" => Ok(Axis::Gamma),
            _ => Err(Error::Parse(format!("unknown axis {s:?} (expected b or gamma)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Fold,
    Boundary,
    ExistenceLost,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub param: f64,
    pub mode: StationaryMode,
    #[serde(rename = "U")]
    pub u: f64,
    pub amplitudes: [f64; 4],
    pub phase_diffs: [f64; 3],
    /// Parameter component of the unit tangent, oriented along the march.
    pub tangent_param: f64,
    pub stability: Option<StabilityReport>,
}

impl BranchPoint {
    fn new(param: f64, mode: StationaryMode, tangent_param: f64) -> Self {
        Self {
            param,
            u: mode.power(),
            amplitudes: mode.w.amplitudes(),
            phase_diffs: mode.w.phase_diffs(),
            mode,
            tangent_param,
            stability: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchCurve {
    pub label: String,
    pub axis: Axis,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub max_steps: usize,
    /// Stop at the first fold instead of following the branch around it.
    pub stop_at_fold: bool,
    /// The branch is considered lost once `|w|` drops below this.
    pub min_norm: f64,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            step_init: 1e-2,
            step_min: 1e-8,
            step_max: 2e-2,
            max_steps: 20_000,
            stop_at_fold: true,
            min_norm: 1e-4,
            newton: NewtonOptions::default(),
        }
    }
}

fn with_param(params: &CouplerParams, axis: Axis, b: f64, p: f64) -> (CouplerParams, f64) {
    match axis {
        Axis::B => (*params, p),
        Axis::Gamma => (params.with_gamma(p), b),
    }
}

struct Extended<'a> {
    params: &'a CouplerParams,
    axis: Axis,
    /// Fixed `b` when the axis is `gamma`.
    b: f64,
    gauge: Gauge,
}

impl Extended<'_> {
    fn split(&self, x: &DVector<f64>) -> (CouplerParams, f64, FieldState) {
        let w = FieldState::from_real(&x.as_slice()[..8]);
        let (p, b) = with_param(self.params, self.axis, self.b, x[8]);
        (p, b, w)
    }

    fn rows(&self) -> usize {
        8 + self.gauge.rows()
    }

    /// Residual and gauge rows with their Jacobian in `(w, p)`.
    fn eval(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (p, b, w) = self.split(x);
        let r = stationary_residual(&p, b, &w).to_real();
        let jr = residual_jacobian(&p, Complex64::new(b, 0.0), &w);
        let dp = match self.axis {
            Axis::B => (w * -1.0).to_real(),
            Axis::Gamma => residual_dgamma(&w).to_real(),
        };
        let n = self.rows();
        let mut f = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 9);
        for row in 0..8 {
            f[row] = r[row];
            for c in 0..8 {
                j[(row, c)] = jr[row][c];
            }
            j[(row, 8)] = dp[row];
        }
        for (k, (v, g)) in self.gauge.values(&w).into_iter().zip(self.gauge.gradients(&w)).enumerate() {
            f[8 + k] = v;
            for c in 0..8 {
                j[(8 + k, c)] = g[c];
            }
        }
        (f, j)
    }

    fn tangent(&self, x: &DVector<f64>) -> DVector<f64> {
        let (_, j) = self.eval(x);
        // square up so the SVD yields the full right singular basis
        let mut sq = DMatrix::zeros(j.nrows().max(9), 9);
        sq.rows_mut(0, j.nrows()).copy_from(&j);
        let svd = sq.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        v_t.row(imin).transpose()
    }

    /// Corrector. With `arclength = Some((t, x_pred))` solves the extra
    /// equation `t . (x - x_pred) = 0`; otherwise holds the parameter fixed.
    fn correct(
        &self,
        x0: &DVector<f64>,
        arclength: Option<(&DVector<f64>, &DVector<f64>)>,
        opts: &NewtonOptions,
    ) -> Result<DVector<f64>> {
        let mut x = x0.clone();
        for _ in 0..opts.max_iter {
            let (f, j) = self.eval(&x);
            if f.amax() < opts.tol {
                return Ok(x);
            }
            let n = self.rows();
            let dx = match arclength {
                Some((t, xp)) => {
                    let mut fa = DVector::zeros(n + 1);
                    fa.rows_mut(0, n).copy_from(&f);
                    fa[n] = t.dot(&(&x - xp));
                    let mut ja = DMatrix::zeros(n + 1, 9);
                    ja.rows_mut(0, n).copy_from(&j);
                    ja.row_mut(n).copy_from(&t.transpose());
                    svd_solve(&ja, &(-fa), opts.degeneracy)?
                }
                None => {
                    let jw = j.columns(0, 8).into_owned();
                    let d = svd_solve(&jw, &(-f), opts.degeneracy)?;
                    let mut dx = DVector::zeros(9);
                    dx.rows_mut(0, 8).copy_from(&d);
                    dx
                }
            };
            x += dx;
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("corrector iterate"));
            }
        }
        let (f, _) = self.eval(&x);
        Err(Error::NoConvergence {
            what: "continuation corrector",
            iterations: opts.max_iter,
            residual: f.amax(),
        })
    }
}

fn active_param(mode: &StationaryMode, axis: Axis) -> f64 {
    match axis {
        Axis::B => mode.b,
        Axis::Gamma => mode.params.gamma,
    }
}

/// Relative amplitude spread `(max - min) / mean`.
fn spread(w: &FieldState) -> f64 {
    let a = w.amplitudes();
    let mean = a.iter().sum::<f64>() / 4.0;
    let (lo, hi) = a.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    if mean > 0.0 { (hi - lo) / mean } else { 0.0 }
}

fn is_circular(w: &FieldState) -> bool {
    let a = w.amplitudes();
    let mean = a.iter().sum::<f64>() / 4.0;
    a.iter().all(|x| (x - mean).abs() < 1e-6 * mean.max(1e-300))
}

/// Follow the branch through `seed` from `range.0` towards `range.1`.
pub fn continue_branch(
    params: &CouplerParams,
    axis: Axis,
    range: (f64, f64),
    seed: &StationaryMode,
    opts: &ContinuationOptions,
) -> Result<BranchCurve> {
    params.validate()?;
    let (start, end) = range;
    if !(start.is_finite() && end.is_finite()) || start == end {
        return Err(Error::InvalidInput(format!("bad continuation range {range:?}")));
    }
    let dir = (end - start).signum();
    let seed_param = active_param(seed, axis);
    if (seed_param - start).abs() > 1e-12 * start.abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "seed parameter {seed_param} differs from range start {start}"
        )));
    }
    let (p0, b0) = with_param(params, axis, seed.b, start);
    let first = newton_solve_with(&p0, b0, &seed.w, &opts.newton)?;
    let gauge = Gauge::for_seed(&p0, &first.w);
    let ext = Extended {
        params: &p0,
        axis,
        b: first.b,
        gauge,
    };
    let family = seed.family;
    let label = family.tag().to_string();

    let pack = |w: &FieldState, p: f64| {
        let mut x = DVector::zeros(9);
        x.rows_mut(0, 8).copy_from_slice(&gauge.fix(w).to_real());
        x[8] = p;
        x
    };
    let unpack = |x: &DVector<f64>| {
        let (p, b, w) = ext.split(x);
        StationaryMode { w, b, params: p, family }
    };

    let mut x = pack(&first.w, start);
    let mut t = ext.tangent(&x);
    if t[8] * dir < 0.0 {
        t = -t;
    }
    let mut points = vec![BranchPoint::new(start, unpack(&x), t[8])];
    let mut ds = opts.step_init;
    let mut termination = Termination::MaxSteps;

    for _ in 0..opts.max_steps {
        let natural = t[8].abs() >= NATURAL_THRESHOLD;
        let mut pred = &x + &t * ds;
        let mut reaches_end = false;
        if natural && (pred[8] - end) * dir >= 0.0 {
            // land exactly on the boundary
            let h = (end - x[8]) / t[8];
            pred = &x + &t * h;
            pred[8] = end;
            reaches_end = true;
        }
        let attempt = if natural {
            ext.correct(&pred, None, &opts.newton)
        } else {
            ext.correct(&pred, Some((&t, &pred)), &opts.newton)
        };
        let accepted = attempt.ok().filter(|xn| {
            let step = (xn - &x).norm();
            step < 2.0 * ds.max((pred.clone() - &x).norm()) && xn[8].is_finite()
        });
        let Some(mut xn) = accepted else {
            ds *= 0.5;
            if ds < opts.step_min {
                return Err(Error::StepUnderflow { param: x[8] });
            }
            continue;
        };
        // the arclength corrector can overshoot the boundary
        if !natural && (xn[8] - end) * dir > 0.0 {
            let mut q = xn.clone();
            q[8] = end;
            if let Ok(xe) = ext.correct(&q, None, &opts.newton) {
                xn = xe;
                reaches_end = true;
            }
        }
        let mut tn = ext.tangent(&xn);
        if tn.dot(&(&xn - &x)) < 0.0 {
            tn = -tn;
        }
        let fold = tn[8] * t[8] < 0.0;
        let mode = unpack(&xn);
        let prev = &points[points.len() - 1].mode.w;
        if prev.dot(&mode.w).re <= 0.0 {
            // stepped through w = 0 onto the mirror image: the branch has
            // shrunk into the linear limit
            termination = Termination::ExistenceLost;
            break;
        }
        x = xn;
        t = tn;
        let norm = mode.w.norm();
        points.push(BranchPoint::new(x[8], mode, t[8]));
        if norm < opts.min_norm {
            termination = Termination::ExistenceLost;
            break;
        }
        if fold && opts.stop_at_fold {
            // a turning point on the circular set is where an asymmetric
            // branch ends on the symmetric one
            let s0 = spread(&points[0].mode.w);
            termination = if s0 > 1e-6 && spread(&mode.w) < 0.1 * s0 {
                Termination::ExistenceLost
            } else {
                Termination::Fold
            };
            break;
        }
        if reaches_end || (x[8] - end) * dir >= 0.0 {
            termination = Termination::Boundary;
            break;
        }
        if axis == Axis::Gamma && x[8] < 0.0 {
            termination = Termination::Boundary;
            break;
        }
        ds = (ds * 1.3).min(opts.step_max);
    }
    Ok(BranchCurve {
        label,
        axis,
        points,
        termination,
    })
}

/// Fill in the stability report of every point, in parallel.
pub fn attach_stability(curve: &mut BranchCurve) -> Result<()> {
    let reports: Vec<Result<StabilityReport>> =
        curve.points.par_iter().map(|p| stability_report(&p.mode)).collect();
    for (p, r) in curve.points.iter_mut().zip(reports) {
        p.stability = Some(r?);
    }
    Ok(())
}

/// Parameter values where the tangent's parameter component changes sign,
/// refined by a parabola through the three points around the turn.
pub fn detect_fold(curve: &BranchCurve) -> Vec<f64> {
    let pts = &curve.points;
    let mut folds = Vec::new();
    if pts.len() < 3 {
        return folds;
    }
    let mut s = vec![0.0];
    for w in pts.windows(2) {
        let d = (w[1].mode.w - w[0].mode.w).norm();
        let dp = w[1].param - w[0].param;
        s.push(s.last().unwrap() + (d * d + dp * dp).sqrt());
    }
    for i in 0..pts.len() - 1 {
        if pts[i].tangent_param * pts[i + 1].tangent_param >= 0.0 {
            continue;
        }
        // extreme point among the neighbours of the sign change
        let c = if i == 0 {
            1
        } else if i + 1 == pts.len() - 1 {
            i
        } else {
            let (a, b) = (pts[i].param, pts[i + 1].param);
            let towards = pts[i].tangent_param.signum();
            if (b - a) * towards > 0.0 { i + 1 } else { i }
        };
        let c = c.clamp(1, pts.len() - 2);
        folds.push(parabola_extremum(
            [s[c - 1], s[c], s[c + 1]],
            [pts[c - 1].param, pts[c].param, pts[c + 1].param],
        ));
    }
    folds
}

fn parabola_extremum(s: [f64; 3], p: [f64; 3]) -> f64 {
    let d1 = (p[1] - p[0]) / (s[1] - s[0]);
    let d2 = (p[2] - p[1]) / (s[2] - s[1]);
    let a = (d2 - d1) / (s[2] - s[0]);
    if a == 0.0 || !a.is_finite() {
        return p[1];
    }
    let b = d1 - a * (s[0] + s[1]);
    let sv = -b / (2.0 * a);
    let v = p[0] + d1 * (sv - s[0]) + a * (sv - s[0]) * (sv - s[1]);
    if v.is_finite() { v } else { p[1] }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingKind {
    PitchforkCandidate,
    UnclassifiedCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchCrossing {
    pub param: f64,
    pub n_before: usize,
    pub n_after: usize,
    pub kind: CrossingKind,
}

/// Parameter values where the number of unstable eigenvalues changes,
/// located by bisection between the bracketing points. A crossing is a
/// pitchfork candidate when one of `others` passes within `match_tol` of the
/// mode there, in the parameter and in the component amplitudes. Amplitudes
/// are used instead of the fields because a bifurcating branch may end on a
/// discrete symmetry image of the mode, which differs in its phases.
pub fn detect_branch_point(
    curve: &BranchCurve,
    others: &[BranchCurve],
    match_tol: f64,
) -> Vec<BranchCrossing> {
    let mut out = Vec::new();
    let count = |p: &BranchPoint| p.stability.as_ref().map(|s| s.n_unstable);
    for w in curve.points.windows(2) {
        let (Some(n0), Some(n1)) = (count(&w[0]), count(&w[1])) else {
            continue;
        };
        if n0 == n1 {
            continue;
        }
        let (param, mode) = refine_crossing(curve.axis, &w[0], &w[1], n0);
        let near = others.iter().any(|c| {
            c.points.iter().any(|q| {
                (q.param - param).abs() < match_tol && amplitude_distance(&q.mode.w, &mode.w) < match_tol
            })
        });
        out.push(BranchCrossing {
            param,
            n_before: n0,
            n_after: n1,
            kind: if near {
                CrossingKind::PitchforkCandidate
            } else {
                CrossingKind::UnclassifiedCrossing
            },
        });
    }
    out
}

fn amplitude_distance(a: &FieldState, b: &FieldState) -> f64 {
    let (x, y) = (a.amplitudes(), b.amplitudes());
    (0..4).map(|j| (x[j] - y[j]).abs()).fold(0.0, f64::max)
}

fn refine_crossing(axis: Axis, a: &BranchPoint, b: &BranchPoint, n_a: usize) -> (f64, StationaryMode) {
    let (mut lo, mut hi) = (a.clone(), b.clone());
    for _ in 0..40 {
        if (hi.param - lo.param).abs() < 1e-7 {
            break;
        }
        let mid = 0.5 * (lo.param + hi.param);
        let w0 = (lo.mode.w + hi.mode.w) * 0.5;
        let (p, bb) = with_param(&lo.mode.params, axis, lo.mode.b, mid);
        let Ok(m) = newton_solve_with(&p, bb, &w0, &NewtonOptions::default()) else {
            break;
        };
        if m.w.gauge_distance(&lo.mode.w) > 2.0 * lo.mode.w.gauge_distance(&hi.mode.w) + 1e-9 {
            break;
        }
        let Ok(r) = stability_report(&m) else { break };
        let pt = BranchPoint::new(mid, m, 0.0);
        if r.n_unstable == n_a {
            lo = pt;
        } else {
            hi = pt;
        }
    }
    let mid = 0.5 * (lo.param + hi.param);
    (mid, lo.mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub rng_seed: u64,
    pub random_draws: usize,
    /// Seeds `eps w~(theta)` use `eps` in `0.1, 0.2, ..., 1.0`.
    pub eps_steps: usize,
    /// Angles scanned in addition to the predicted ones.
    pub theta_grid: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            rng_seed: 20_240_601,
            random_draws: 20,
            eps_steps: 10,
            theta_grid: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub rng_seed: u64,
    pub attempts: usize,
    pub converged: usize,
    /// Distinct gauge classes found.
    pub modes: Vec<StationaryMode>,
}

impl SearchResult {
    /// Converged modes with unequal component amplitudes.
    pub fn elliptic(&self) -> Vec<&StationaryMode> {
        self.modes.iter().filter(|m| !is_circular(&m.w)).collect()
    }
}

/// Multi-seed search for stationary modes at fixed `b`.
///
/// Seeds are `eps w~(theta)` for both linear eigenvalues, for every
/// predicted elliptic root (when `alpha = 0`) and for a uniform `theta`
/// grid, plus random complex vectors from a seeded ChaCha stream.
pub fn search_modes(params: &CouplerParams, b: f64, opts: &SearchOptions) -> Result<SearchResult> {
    params.validate()?;
    let mut seeds: Vec<FieldState> = Vec::new();
    if params.gamma <= params.gamma_cr1() {
        for sign in [Sign::Plus, Sign::Minus] {
            let bt = spectrum::btilde(params, sign)?;
            let mut thetas: Vec<f64> = (0..opts.theta_grid)
                .map(|i| std::f64::consts::PI * i as f64 / opts.theta_grid as f64)
                .collect();
            if params.alpha == 0 && params.gamma > 0.0 {
                thetas.extend(perturbation::elliptic_roots(params, sign)?.iter().map(|r| r.theta));
            }
            for th in thetas {
                let v = pt_eigenvector(params, bt, th)?.v;
                let v = v * (2.0 / v.norm());
                for e in 1..=opts.eps_steps {
                    seeds.push(v * (e as f64 / opts.eps_steps as f64));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    for _ in 0..opts.random_draws {
        let w = FieldState(std::array::from_fn(|_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        }));
        seeds.push(w);
    }
    let attempts = seeds.len();
    let found: Vec<StationaryMode> = seeds
        .par_iter()
        .filter_map(|w0| newton_solve_with(params, b, w0, &NewtonOptions::default()).ok())
        .filter(|m| m.w.norm() > 1e-6)
        .collect();
    let converged = found.len();
    let mut modes: Vec<StationaryMode> = Vec::new();
    for m in found {
        if !modes.iter().any(|q| q.w.gauge_distance(&m.w) < 1e-8) {
            modes.push(m);
        }
    }
    Ok(SearchResult {
        rng_seed: opts.rng_seed,
        attempts,
        converged,
        modes,
    })
}

/// Newton from the small-amplitude prediction `eps w~(theta*)` at
/// `b = b~ + eps^2 B2`. With `b = None` the predicted `b` is used.
pub fn seed_from_prediction(
    params: &CouplerParams,
    pred: &perturbation::BifurcationPrediction,
    eps: f64,
    b: Option<f64>,
) -> Result<StationaryMode> {
    let v = pt_eigenvector(params, pred.btilde, pred.theta)?.v;
    let b = b.unwrap_or(pred.btilde + eps * eps * pred.b2);
    let mut m = newton_solve_with(params, b, &(v * eps), &NewtonOptions::default())?;
    m.family = Family::Numeric;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{circular_mode, ExactModeSpec};

    fn p(g: f64, alpha: u8) -> CouplerParams {
        CouplerParams::new(1.0, g, alpha).unwrap()
    }

    #[test]
    fn b_continuation_reproduces_circular_family() {
        let pp = p(0.5, 0);
        let bt = spectrum::btilde(&pp, Sign::Plus).unwrap();
        let b0 = bt + 0.01;
        let seed = circular_mode(&ExactModeSpec::new(pp, Sign::Plus, b0)).unwrap();
        let curve = continue_branch(&pp, Axis::B, (b0, 3.0), &seed, &ContinuationOptions::default()).unwrap();
        assert_eq!(curve.termination, Termination::Boundary);
        assert!((curve.points.last().unwrap().param - 3.0).abs() < 1e-12);
        for pt in &curve.points {
            let exact = circular_mode(&ExactModeSpec::new(pp, Sign::Plus, pt.param)).unwrap();
            assert!((pt.u - exact.power()).abs() < 1e-10);
        }
        assert!(detect_fold(&curve).is_empty());
    }

    #[test]
    fn gamma_continuation_folds_at_breaking_point() {
        let pp = p(0.0, 0);
        let seed = circular_mode(&ExactModeSpec::new(pp, Sign::Minus, 2.0)).unwrap();
        let curve = continue_branch(&pp, Axis::Gamma, (0.0, 1.6), &seed, &ContinuationOptions::default()).unwrap();
        assert_eq!(curve.termination, Termination::Fold);
        let folds = detect_fold(&curve);
        assert_eq!(folds.len(), 1);
        assert!((folds[0] - 2f64.sqrt()).abs() < 1e-3, "{folds:?}");
    }

    #[test]
    fn search_finds_elliptic_modes_only_below_secondary_point() {
        let opts = SearchOptions::default();
        let r = search_modes(&p(0.5, 0), 2.0, &opts).unwrap();
        assert!(!r.elliptic().is_empty());
        let r = search_modes(&p(1.1, 0), 2.0, &opts).unwrap();
        assert!(r.elliptic().is_empty());
    }
}
