//! Propagation in `z`: adaptive Dormand-Prince 5(4) with dense output,
//! seeded perturbations of stationary modes, and fits on intensity traces.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ghost::GhostMode;
use crate::model::{power, power_imbalance, rhs_unchecked, CouplerParams, FieldState, StationaryMode};

/// Real state: 8 field components plus the running integral of the power
/// imbalance, which is what the power-law check compares against.
const N: usize = 9;
type State = [f64; N];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of the output grid.
    pub sample_dz: f64,
    pub max_steps: usize,
    /// Field norm at which a run is declared a blowup and truncated.
    pub blowup_norm: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            sample_dz: 0.1,
            max_steps: 20_000_000,
            blowup_norm: 1e12,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = |t: f64| (1e-13..=1e-3).contains(&t);
        if !ok(self.rtol) || !ok(self.atol) {
            return Err(Error::InvalidInput(format!(
                "tolerances must lie in [1e-13, 1e-3], got rtol={} atol={}",
                self.rtol, self.atol
            )));
        }
        if !(self.sample_dz > 0.0 && self.sample_dz.is_finite()) {
            return Err(Error::InvalidInput("sample spacing must be positive".into()));
        }
        if !(self.blowup_norm > 0.0) {
            return Err(Error::InvalidInput("blowup norm must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TraceStatus {
    Completed,
    Blowup { z: f64 },
    StepLimit { z: f64 },
}

impl std::fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceStatus::Completed => write!(f, "completed"),
            TraceStatus::Blowup { z } => write!(f, "blowup at z={z}"),
            TraceStatus::StepLimit { z } => write!(f, "step limit at z={z}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub params: CouplerParams,
    pub initial: String,
    pub options: IntegratorOptions,
    pub z_max: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub z: Vec<f64>,
    pub intensities: Vec<[f64; 4]>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    /// `U(0) + int_0^z dU/dz` with `dU/dz` from the gain/loss balance.
    pub balance: Vec<f64>,
    pub status: TraceStatus,
    /// Field at the last sample.
    pub final_state: FieldState,
    pub meta: TraceMeta,
}

impl EvolutionTrace {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn blew_up(&self) -> bool {
        !matches!(self.status, TraceStatus::Completed)
    }

    /// Largest `|U - balance| / max(1, U)` over the samples.
    pub fn power_law_defect(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.balance)
            .map(|(u, q)| (u - q).abs() / u.max(1.0))
            .fold(0.0, f64::max)
    }

    /// Pointwise `U` interpolated linearly between samples.
    pub fn power_at(&self, z: f64) -> Option<f64> {
        interp(&self.z, &self.u, z)
    }
}

fn interp(zs: &[f64], ys: &[f64], z: f64) -> Option<f64> {
    let n = zs.len();
    if n == 0 || z < zs[0] || z > zs[n - 1] {
        return None;
    }
    let i = zs.partition_point(|&x| x <= z).clamp(1, n.max(2) - 1);
    if n == 1 {
        return Some(ys[0]);
    }
    let (z0, z1) = (zs[i - 1], zs[i]);
    let t = (z - z0) / (z1 - z0);
    Some(ys[i - 1] + t * (ys[i] - ys[i - 1]))
}

fn pack(u: &FieldState, q: f64) -> State {
    let r = u.to_real();
    let mut y = [0.0; N];
    y[..8].copy_from_slice(&r);
    y[8] = q;
    y
}

fn unpack(y: &State) -> FieldState {
    FieldState::from_real(&y[..8])
}

fn deriv(params: &CouplerParams, z: f64, y: &State) -> State {
    let u = unpack(y);
    let mut d = pack(&rhs_unchecked(params, z, &u), 0.0);
    d[8] = power_imbalance(params, &u);
    d
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// continuous extension
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct Step {
    y1: State,
    k: [State; 7],
    err: f64,
}

fn attempt(params: &CouplerParams, z: f64, y: &State, f0: &State, h: f64, opts: &IntegratorOptions) -> Step {
    let mut k = [[0.0; N]; 7];
    k[0] = *f0;
    for s in 1..7 {
        let mut yt = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    yt[i] += h * a * kj[i];
                }
            }
        }
        if s == 6 {
            // FSAL stage evaluates at the new point
            k[6] = deriv(params, z + h, &yt);
            let mut err = 0.0;
            for i in 0..N {
                let e: f64 = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = opts.atol + opts.rtol * y[i].abs().max(yt[i].abs());
                err += (e / sc).powi(2);
            }
            return Step {
                y1: yt,
                k,
                err: (err / N as f64).sqrt(),
            };
        }
        k[s] = deriv(params, z + C[s] * h, &yt);
    }
    unreachable!()
}

fn dense(y0: &State, st: &Step, h: f64, theta: f64) -> State {
    let t1 = 1.0 - theta;
    let mut out = [0.0; N];
    for i in 0..N {
        let diff = st.y1[i] - y0[i];
        let bspl = h * st.k[0][i] - diff;
        let r4 = diff - h * st.k[6][i] - bspl;
        let r5 = h * (0..7).map(|j| D[j] * st.k[j][i]).sum::<f64>();
        out[i] = y0[i] + theta * (diff + t1 * (bspl + theta * (r4 + t1 * r5)));
    }
    out
}

/// Integrates from `z = 0` to `z_max`, sampling every `opts.sample_dz`.
pub fn integrate(params: &CouplerParams, u0: &FieldState, z_max: f64, opts: &IntegratorOptions) -> Result<EvolutionTrace> {
    integrate_labelled(params, u0, z_max, opts, "user".into())
}

fn integrate_labelled(
    params: &CouplerParams,
    u0: &FieldState,
    z_max: f64,
    opts: &IntegratorOptions,
    initial: String,
) -> Result<EvolutionTrace> {
    params.validate()?;
    opts.validate()?;
    u0.ensure_finite("initial field")?;
    if !(z_max > 0.0 && z_max.is_finite()) {
        return Err(Error::InvalidInput(format!("z_max must be positive, got {z_max}")));
    }
    let n_samples = (z_max / opts.sample_dz).round() as usize;
    let grid: Vec<f64> = (0..=n_samples)
        .map(|i| (i as f64 * opts.sample_dz).min(z_max))
        .collect();

    let u_start = power(u0);
    let mut trace = EvolutionTrace {
        z: Vec::with_capacity(grid.len()),
        intensities: Vec::with_capacity(grid.len()),
        u: Vec::with_capacity(grid.len()),
        balance: Vec::with_capacity(grid.len()),
        status: TraceStatus::Completed,
        final_state: *u0,
        meta: TraceMeta {
            params: *params,
            initial,
            options: *opts,
            z_max,
            accepted_steps: 0,
            rejected_steps: 0,
        },
    };
    let record = |tr: &mut EvolutionTrace, z: f64, y: &State| {
        let u = unpack(y);
        tr.z.push(z);
        tr.intensities.push(u.intensities());
        tr.u.push(power(&u));
        tr.balance.push(u_start + y[8]);
        tr.final_state = u;
    };

    let mut z = 0.0;
    let mut y = pack(u0, 0.0);
    let mut f = deriv(params, z, &y);
    record(&mut trace, 0.0, &y);
    let mut next = 1;
    if u0.norm() > opts.blowup_norm {
        trace.status = TraceStatus::Blowup { z: 0.0 };
        return Ok(trace);
    }

    let scale0 = f.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-8);
    let mut h = (0.01 / scale0).min(opts.sample_dz).min(z_max);
    let h_min = 1e-14 * z_max.max(1.0);
    let mut steps = 0usize;
    while next < grid.len() {
        if steps >= opts.max_steps {
            trace.status = TraceStatus::StepLimit { z };
            break;
        }
        steps += 1;
        h = h.min(z_max - z);
        let st = attempt(params, z, &y, &f, h, opts);
        if !(st.err <= 1.0) {
            trace.meta.rejected_steps += 1;
            let fac = if st.err.is_finite() { (0.9 * st.err.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= fac;
            if h < h_min {
                trace.status = TraceStatus::StepLimit { z };
                break;
            }
            continue;
        }
        trace.meta.accepted_steps += 1;
        let z1 = if z_max - (z + h) < h_min { z_max } else { z + h };
        while next < grid.len() && grid[next] <= z1 {
            let theta = (grid[next] - z) / h;
            let ys = dense(&y, &st, h, theta.min(1.0));
            record(&mut trace, grid[next], &ys);
            next += 1;
        }
        z = z1;
        y = st.y1;
        f = st.k[6];
        if unpack(&y).norm() > opts.blowup_norm {
            trace.status = TraceStatus::Blowup { z };
            break;
        }
        let fac = if st.err > 0.0 { 0.9 * st.err.powf(-0.2) } else { 10.0 };
        h *= fac.clamp(0.2, 10.0);
    }
    Ok(trace)
}

/// `w + eps r` with `r` a unit-norm complex vector drawn from `rng_seed`.
pub fn perturb(mode: &StationaryMode, eps: f64, rng_seed: u64) -> Result<FieldState> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("perturbation size must be non-negative, got {eps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let r = FieldState(std::array::from_fn(|_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }));
    let r = r * (1.0 / r.norm());
    Ok(mode.w + r * eps)
}

/// Evolves `perturb(mode, eps, seed)` and tags the trace with its origin.
pub fn evolve_perturbed(
    mode: &StationaryMode,
    eps: f64,
    rng_seed: u64,
    z_max: f64,
    opts: &IntegratorOptions,
) -> Result<EvolutionTrace> {
    let u0 = perturb(mode, eps, rng_seed)?;
    let label = format!("{} b={} eps={eps} seed={rng_seed}", mode.family, mode.b);
    integrate_labelled(&mode.params, &u0, z_max, opts, label)
}

/// Intensities of the ghost ansatz `w e^{i b z}` on the grid `z`.
pub fn ghost_trace(ghost: &GhostMode, z: &[f64]) -> EvolutionTrace {
    let w = ghost.field();
    let rate = -2.0 * ghost.b_complex().im;
    let base = w.intensities();
    let intensities: Vec<[f64; 4]> = z.iter().map(|&zz| base.map(|i| i * (rate * zz).exp())).collect();
    let u: Vec<f64> = intensities.iter().map(|i| i.iter().sum()).collect();
    EvolutionTrace {
        z: z.to_vec(),
        balance: u.clone(),
        u,
        intensities,
        status: TraceStatus::Completed,
        final_state: w,
        meta: TraceMeta {
            params: ghost.params,
            initial: format!("ghost B={} phi_b={}", ghost.b_mod, ghost.phi_b),
            options: IntegratorOptions::default(),
            z_max: z.last().copied().unwrap_or(0.0),
            accepted_steps: 0,
            rejected_steps: 0,
        },
    }
}

/// Log-linear least-squares slope of `max_j |I_j(z) - I_j*|` over `window`.
/// For a perturbed stationary mode this is the growth rate `Re lambda`.
pub fn deviation_growth_rate(trace: &EvolutionTrace, reference: &[f64; 4], window: (f64, f64)) -> Result<f64> {
    let mut pts = Vec::new();
    for (z, i) in trace.z.iter().zip(&trace.intensities) {
        if *z >= window.0 && *z <= window.1 {
            let d = (0..4).map(|j| (i[j] - reference[j]).abs()).fold(0.0, f64::max);
            if d <= 0.0 {
                return Err(Error::InvalidInput("zero deviation inside the fit window".into()));
            }
            pts.push((*z, d.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(Error::InvalidInput("fit window holds fewer than three samples".into()));
    }
    Ok(linear_slope(&pts))
}

fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx) * (p.0 - mx))
    });
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftFit {
    pub shift: f64,
    /// Mean squared difference of `ln U` per sample at the optimum.
    pub misfit: f64,
}

/// Shift `s` minimizing the mean of `(ln U_a(z) - ln U_b(z - s))^2` over the
/// samples of `a` inside `window`. A scan over `shifts` brackets the minimum
/// and golden-section search refines it.
pub fn overlay_shift_fit(
    a: &EvolutionTrace,
    b: &EvolutionTrace,
    window: (f64, f64),
    shifts: (f64, f64),
) -> Result<ShiftFit> {
    let support = |t: &EvolutionTrace| match (t.z.first(), t.z.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::InvalidInput("empty trace".into())),
    };
    let (a0, a1) = support(a)?;
    let (b0, b1) = support(b)?;
    if !(window.0 < window.1) || window.0 < a0 || window.1 > a1 {
        return Err(Error::InvalidInput(format!(
            "window [{}, {}] exceeds trace support [{a0}, {a1}]",
            window.0, window.1
        )));
    }
    if !(shifts.0 <= shifts.1) || window.0 - shifts.1 < b0 || window.1 - shifts.0 > b1 {
        return Err(Error::InvalidInput(format!(
            "shifted window exceeds reference support [{b0}, {b1}]"
        )));
    }
    let samples: Vec<(f64, f64)> = a
        .z
        .iter()
        .zip(&a.u)
        .filter(|(z, _)| **z >= window.0 && **z <= window.1)
        .map(|(z, u)| (*z, *u))
        .collect();
    if samples.iter().any(|(_, u)| !(*u > 0.0)) || b.u.iter().any(|u| !(*u > 0.0)) {
        return Err(Error::InvalidInput("intensities must be strictly positive".into()));
    }
    let log_b: Vec<f64> = b.u.iter().map(|u| u.ln()).collect();
    let cost = |s: f64| {
        samples
            .iter()
            .map(|(z, u)| {
                let lb = interp(&b.z, &log_b, z - s).expect("window checked against support");
                (u.ln() - lb).powi(2)
            })
            .sum::<f64>()
            / samples.len() as f64
    };
    // coarse scan first: oscillating traces give a multimodal cost
    let n = 400;
    let dh = (shifts.1 - shifts.0) / n as f64;
    let best = (0..=n)
        .map(|i| shifts.0 + i as f64 * dh)
        .min_by(|x, y| cost(*x).total_cmp(&cost(*y)))
        .unwrap_or(shifts.0);
    let shift = golden_section(&cost, (best - dh).max(shifts.0), (best + dh).min(shifts.1), 1e-9);
    Ok(ShiftFit {
        shift,
        misfit: cost(shift),
    })
}

/// First sample where `U` reaches `onset` times its initial value, and the
/// first later sample where it reaches `end` times (or the trace end).
pub fn growth_window(trace: &EvolutionTrace, onset: f64, end: f64) -> Option<(f64, f64)> {
    let u0 = *trace.u.first()?;
    let i = trace.u.iter().position(|&u| u >= onset * u0)?;
    let j = trace.u[i..]
        .iter()
        .position(|&u| u >= end * u0)
        .map_or(trace.len() - 1, |j| i + j);
    (j > i).then(|| (trace.z[i], trace.z[j]))
}

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Gain sites grow monotonically and lossy sites decay on average up to
    /// the blowup.
    GainGrowth,
    /// Runs to `z_max` with power bounded by `bound_factor` times the start.
    BoundedOscillation,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Number of final samples checked for monotone growth and decay.
    pub late_samples: usize,
    pub bound_factor: f64,
    /// Largest `| |u1|^2 - |u3|^2 | / |u1|^2` at the trace end for growth runs.
    pub gain_balance: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            late_samples: 20,
            bound_factor: 10.0,
            gain_balance: 0.05,
        }
    }
}

/// Gain sites are 0 and 2, lossy sites 1 and 3.
pub fn classify(trace: &EvolutionTrace, opts: &ClassifyOptions) -> Outcome {
    let n = trace.len();
    if n < 2 {
        return Outcome::Other;
    }
    let u0 = trace.u[0];
    match trace.status {
        TraceStatus::Completed => {
            let umax = trace.u.iter().cloned().fold(0.0, f64::max);
            let umin = trace.u.iter().cloned().fold(f64::INFINITY, f64::min);
            if umax <= opts.bound_factor * u0 && umax > umin {
                Outcome::BoundedOscillation
            } else {
                Outcome::Other
            }
        }
        TraceStatus::Blowup { .. } => {
            let late = &trace.intensities[n.saturating_sub(opts.late_samples)..];
            let zs = &trace.z[n - late.len()..];
            let rising = |j: usize| late.windows(2).all(|p| p[1][j] >= p[0][j]);
            // lossy sites beat quickly, so decay is judged by the log-linear trend
            let falling = |j: usize| {
                let pts: Vec<(f64, f64)> = zs.iter().zip(late).map(|(z, i)| (*z, i[j].max(f64::MIN_POSITIVE).ln())).collect();
                linear_slope(&pts) < 0.0
            };
            let last = trace.intensities[n - 1];
            let balanced = (last[0] - last[2]).abs() / last[0] < opts.gain_balance;
            if rising(0) && rising(2) && falling(1) && falling(3) && balanced {
                Outcome::GainGrowth
            } else {
                Outcome::Other
            }
        }
        TraceStatus::StepLimit { .. } => Outcome::Other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub seed: u64,
    pub outcome: Outcome,
    pub status: TraceStatus,
    pub final_intensities: [f64; 4],
    pub power_law_defect: f64,
}

/// Evolves `perturb(mode, eps, seed)` for every seed in parallel.
pub fn seed_sweep(
    mode: &StationaryMode,
    eps: f64,
    seeds: &[u64],
    z_max: f64,
    opts: &IntegratorOptions,
    classify_opts: &ClassifyOptions,
) -> Result<Vec<SweepRun>> {
    use rayon::prelude::*;
    seeds
        .par_iter()
        .map(|&seed| {
            let tr = evolve_perturbed(mode, eps, seed, z_max, opts)?;
            Ok(SweepRun {
                seed,
                outcome: classify(&tr, classify_opts),
                status: tr.status,
                final_intensities: *tr.intensities.last().expect("trace holds the initial sample"),
                power_law_defect: tr.power_law_defect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostOverlay {
    pub window: (f64, f64),
    /// Against the exponential `|w_j|^2 e^{-2 Im(b) z}`.
    pub closed_form: ShiftFit,
    /// Against the evolution started from the ghost field.
    pub evolved: ShiftFit,
    pub unstable: EvolutionTrace,
    pub ghost_evolution: EvolutionTrace,
}

/// Overlays the evolution of a perturbed unstable mode on its ghost, both
/// as the exponential ansatz and as the propagated ghost field. The window
/// runs from where the power has doubled to where it has grown 1000-fold.
pub fn ghost_overlay(
    mode: &StationaryMode,
    ghost: &GhostMode,
    eps: f64,
    rng_seed: u64,
    z_max: f64,
    opts: &IntegratorOptions,
) -> Result<GhostOverlay> {
    let unstable = evolve_perturbed(mode, eps, rng_seed, z_max, opts)?;
    let window = growth_window(&unstable, 2.0, 1e3)
        .ok_or_else(|| Error::InvalidInput("no growth onset inside the trace".into()))?;
    let ghost_evolution = integrate_labelled(
        &ghost.params,
        &ghost.field(),
        z_max,
        opts,
        format!("ghost B={} phi_b={}", ghost.b_mod, ghost.phi_b),
    )?;
    let dz = opts.sample_dz;
    let n = (2.0 * z_max / dz).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| -z_max + i as f64 * dz).collect();
    let exp_trace = ghost_trace(ghost, &grid);
    let closed_form = overlay_shift_fit(&unstable, &exp_trace, window, (window.1 - z_max, window.0))?;
    let g_end = *ghost_evolution.z.last().expect("trace holds the initial sample");
    let evolved = overlay_shift_fit(&unstable, &ghost_evolution, window, (window.1 - g_end, window.0))?;
    Ok(GhostOverlay {
        window,
        closed_form,
        evolved,
        unstable,
        ghost_evolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{circular_mode, ExactModeSpec};
    use crate::model::Sign;

    fn circ(b: f64, gamma: f64, sign: Sign) -> StationaryMode {
        let p = CouplerParams::new(1.0, gamma, 0).unwrap();
        circular_mode(&ExactModeSpec::new(p, sign, b)).unwrap()
    }

    #[test]
    fn hermitian_run_conserves_power() {
        let p = CouplerParams::new(1.0, 0.0, 0).unwrap();
        let u0 = FieldState::from_re_im([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        let opts = IntegratorOptions::default();
        let tr = integrate(&p, &u0, 10.0, &opts).unwrap();
        assert!(tr.power_law_defect() < 1e-9);
        for u in &tr.u {
            assert!((u - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_mode_keeps_intensities() {
        let p = CouplerParams::new(1.0, 0.0, 0).unwrap();
        let m = circular_mode(&ExactModeSpec::new(p, Sign::Plus, 2.0)).unwrap();
        let tr = integrate(&p, &m.w, 100.0, &IntegratorOptions::default()).unwrap();
        let i0 = m.w.intensities();
        for i in &tr.intensities {
            for j in 0..4 {
                assert!((i[j] - i0[j]).abs() < 1e-8);
            }
        }
        assert_eq!(tr.status, TraceStatus::Completed);
        assert!((tr.z.last().unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(tr.len(), 1001);
    }

    #[test]
    fn dense_output_matches_stepping_endpoints() {
        let m = circ(2.0, 0.5, Sign::Plus);
        let u0 = perturb(&m, 1e-2, 3).unwrap();
        let coarse = integrate(&m.params, &u0, 10.0, &IntegratorOptions { sample_dz: 0.37, ..Default::default() }).unwrap();
        let fine = integrate(&m.params, &u0, 10.0, &IntegratorOptions { sample_dz: 0.01, ..Default::default() }).unwrap();
        for (z, u) in coarse.z.iter().zip(&coarse.u) {
            let i = (z / 0.01).round() as usize;
            assert!((fine.z[i] - z).abs() < 1e-9);
            assert!((fine.u[i] - u).abs() < 1e-8, "z={z}");
        }
    }

    #[test]
    fn perturb_is_deterministic() {
        let m = circ(2.0, 0.5, Sign::Plus);
        assert_eq!(perturb(&m, 0.0, 1).unwrap(), m.w);
        assert_eq!(perturb(&m, 1e-3, 7).unwrap(), perturb(&m, 1e-3, 7).unwrap());
        assert_ne!(perturb(&m, 1e-3, 7).unwrap(), perturb(&m, 1e-3, 8).unwrap());
        let d = perturb(&m, 1e-3, 7).unwrap() - m.w;
        assert!((d.norm() - 1e-3).abs() < 1e-15);
        assert!(perturb(&m, -1.0, 7).is_err());
    }

    #[test]
    fn rejects_bad_options() {
        let p = CouplerParams::new(1.0, 0.5, 0).unwrap();
        let u0 = FieldState::from_re_im([[1.0, 0.0]; 4]);
        let bad = IntegratorOptions::default().with_tolerances(1e-15, 1e-12);
        assert!(integrate(&p, &u0, 1.0, &bad).is_err());
        assert!(integrate(&p, &u0, -1.0, &IntegratorOptions::default()).is_err());
    }

    #[test]
    fn blowup_is_recorded_not_raised() {
        let p = CouplerParams::new(1.0, 0.5, 0).unwrap();
        let u0 = FieldState::from_re_im([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        let opts = IntegratorOptions { blowup_norm: 10.0, ..Default::default() };
        let tr = integrate(&p, &u0, 2000.0, &opts).unwrap();
        let TraceStatus::Blowup { z } = tr.status else {
            panic!("expected blowup, got {}", tr.status)
        };
        assert!(z < 2000.0);
        assert!(tr.final_state.norm() <= 10.0);
        assert!(tr.power_law_defect() < 1e-6);
    }

    #[test]
    fn shift_fit_recovers_synthetic_delay() {
        let m = circ(2.0, 0.5, Sign::Plus);
        let u0 = perturb(&m, 1e-1, 5).unwrap();
        let tr = integrate(&m.params, &u0, 60.0, &IntegratorOptions::default()).unwrap();
        let fit = overlay_shift_fit(&tr, &tr, (10.0, 40.0), (-8.0, 8.0)).unwrap();
        assert!(fit.shift.abs() < 1e-6 && fit.misfit < 1e-12, "{fit:?}");
        let mut delayed = tr.clone();
        delayed.z.iter_mut().for_each(|z| *z -= 5.0);
        let fit = overlay_shift_fit(&tr, &delayed, (10.0, 40.0), (-8.0, 8.0)).unwrap();
        assert!((fit.shift - 5.0).abs() < 0.01, "{}", fit.shift);
        assert!(overlay_shift_fit(&tr, &tr, (10.0, 80.0), (-1.0, 1.0)).is_err());
    }
}
