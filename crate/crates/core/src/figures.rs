//! Recipes that regenerate the data behind each figure: mode families in
//! `(b, U)`, `gamma`-continuation at fixed `b`, stability spectra, seed
//! sweeps and the ghost overlay.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuation::{
    attach_stability, continue_branch, search_modes, seed_from_prediction, Axis, BranchCurve, ContinuationOptions,
    SearchOptions,
};
use crate::dynamics::{
    evolve_perturbed, ghost_overlay, seed_sweep, ClassifyOptions, EvolutionTrace, GhostOverlay, IntegratorOptions,
    Outcome, SweepRun,
};
use crate::error::{Error, Result};
use crate::exact::{circular_mode, elliptic_mode_alpha1, ExactModeSpec};
use crate::ghost::{ghost_branch, ghost_closed_form, ghost_spectrum, GhostBranch, GhostBranchOptions, GhostMode};
use crate::model::{CouplerParams, Family, Sign, StationaryMode};
use crate::newton::newton_solve;
use crate::perturbation::elliptic_roots;
use crate::spectrum::btilde;
use crate::stability::stability_report;

/// Upper end of the `b` axis for family plots.
pub const B_MAX: f64 = 4.0;
/// Perturbation size used to leave the linear limit for elliptic seeds.
pub const ELLIPTIC_SEED_EPS: f64 = 0.05;
/// Guard used by the dynamics recipes; see `IntegratorOptions::blowup_norm`.
pub const GROWTH_BLOWUP_NORM: f64 = 100.0;

fn labelled(mut c: BranchCurve, label: String) -> BranchCurve {
    c.label = label;
    c
}

fn with_stability(mut c: BranchCurve) -> Result<BranchCurve> {
    attach_stability(&mut c)?;
    Ok(c)
}

/// Joins a curve traced downwards with one traced upwards from the same seed.
fn join(down: BranchCurve, up: BranchCurve) -> BranchCurve {
    let mut points: Vec<_> = down.points.into_iter().rev().collect();
    points.extend(up.points.into_iter().skip(1));
    BranchCurve { points, ..up }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyPanel {
    pub name: String,
    pub gamma: f64,
    pub alpha: u8,
    pub curves: Vec<BranchCurve>,
}

/// Families in the `(b, U)` plane for one `(gamma, alpha)` at `k = 1`.
pub fn family_panel(name: &str, gamma: f64, alpha: u8, opts: &ContinuationOptions) -> Result<FamilyPanel> {
    let p = CouplerParams::new(1.0, gamma, alpha)?;
    let mut jobs: Vec<(String, StationaryMode, (f64, f64))> = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let bt = btilde(&p, sign)?;
        let seed = circular_mode(&ExactModeSpec::new(p, sign, B_MAX))?;
        jobs.push((format!("circular{}", sign.symbol()), seed, (B_MAX, bt - 1.0)));
        if alpha == 1 {
            if let Ok(seed) = elliptic_mode_alpha1(&ExactModeSpec::new(p, sign, B_MAX)) {
                jobs.push((format!("elliptic{}", sign.symbol()), seed, (B_MAX, bt - 1.0)));
            }
        } else {
            // the second root seeds a symmetry image of the same family
            if let Some(root) = elliptic_roots(&p, sign)?.first() {
                let seed = seed_from_prediction(&p, root, ELLIPTIC_SEED_EPS, None)?;
                jobs.push((format!("elliptic{}", sign.symbol()), seed, (seed.b, B_MAX)));
            }
        }
    }
    let curves = jobs
        .into_par_iter()
        .map(|(label, seed, range)| {
            let c = continue_branch(&p, Axis::B, range, &seed, opts)?;
            with_stability(labelled(c, label))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyPanel {
        name: name.to_string(),
        gamma,
        alpha,
        curves,
    })
}

/// Panels A-D: `gamma` in {0.5, 1.1} by `alpha` in {0, 1}.
pub fn figure2(opts: &ContinuationOptions) -> Result<Vec<FamilyPanel>> {
    [("A", 0.5, 0), ("B", 0.5, 1), ("C", 1.1, 0), ("D", 1.1, 1)]
        .iter()
        .map(|&(n, g, a)| family_panel(n, g, a, opts))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaBundle {
    pub alpha: u8,
    pub b: f64,
    pub curves: Vec<BranchCurve>,
    pub ghosts: Vec<(String, GhostBranch)>,
}

/// Pitchfork offset at which ghost branches are started from the closed form.
pub const GHOST_START: f64 = 1e-3;
/// `gamma` at which the asymmetric `alpha = 0` branches are located by search.
pub const ELLIPTIC_SEARCH_GAMMA: f64 = 0.5;

/// Modes with the same sorted amplitudes are symmetry images of each other.
fn same_profile(a: &StationaryMode, b: &StationaryMode) -> bool {
    let sorted = |m: &StationaryMode| {
        let mut x = m.w.amplitudes();
        x.sort_by(f64::total_cmp);
        x
    };
    let (x, y) = (sorted(a), sorted(b));
    (0..4).all(|j| (x[j] - y[j]).abs() < 1e-8)
}

/// Branches at fixed `b` continued in `gamma` at `k = 1`: both circular
/// families, the asymmetric families, and the ghost pair.
pub fn gamma_bundle(alpha: u8, b: f64, opts: &ContinuationOptions) -> Result<GammaBundle> {
    let p0 = CouplerParams::new(1.0, 0.0, alpha)?;
    let g_hi = 1.5;
    let mut jobs: Vec<(String, StationaryMode, (f64, f64))> = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let seed = circular_mode(&ExactModeSpec::new(p0, sign, b))?;
        jobs.push((format!("circular{}", sign.symbol()), seed, (0.0, g_hi)));
    }
    let mut split_jobs: Vec<(String, StationaryMode)> = Vec::new();
    if alpha == 1 {
        for sign in [Sign::Plus, Sign::Minus] {
            let seed = elliptic_mode_alpha1(&ExactModeSpec::new(p0, sign, b))?;
            jobs.push((format!("elliptic{}", sign.symbol()), seed, (0.0, g_hi)));
        }
    } else {
        let ps = p0.with_gamma(ELLIPTIC_SEARCH_GAMMA);
        let found = search_modes(&ps, b, &SearchOptions::default())?;
        let mut ell: Vec<StationaryMode> = Vec::new();
        for m in found.elliptic() {
            if !ell.iter().any(|q| same_profile(q, m)) {
                ell.push(*m);
            }
        }
        ell.sort_by(|x, y| x.power().total_cmp(&y.power()));
        // the lower-power family ends on the lower-amplitude circular branch
        for (m, sign) in ell.into_iter().zip([Sign::Plus, Sign::Minus]) {
            split_jobs.push((format!("elliptic{}", sign.symbol()), m));
        }
    }
    let mut curves = jobs
        .into_par_iter()
        .map(|(label, seed, range)| {
            let c = continue_branch(&seed.params, Axis::Gamma, range, &seed, opts)?;
            with_stability(labelled(c, label))
        })
        .collect::<Result<Vec<_>>>()?;
    let split = split_jobs
        .into_par_iter()
        .map(|(label, seed)| {
            let g0 = seed.params.gamma;
            let down = continue_branch(&seed.params, Axis::Gamma, (g0, 0.0), &seed, opts)?;
            let up = continue_branch(&seed.params, Axis::Gamma, (g0, g_hi), &seed, opts)?;
            with_stability(labelled(join(down, up), label))
        })
        .collect::<Result<Vec<_>>>()?;
    curves.extend(split);

    let gp = p0.with_gamma(1.0 + GHOST_START);
    let ghosts = [("ghost-upper", true), ("ghost-lower", false)]
        .par_iter()
        .map(|&(label, upper)| {
            let seed = ghost_closed_form(&gp, b, upper)?;
            let br = ghost_branch(&gp, b, (gp.gamma, 3.0), &seed, &GhostBranchOptions::default())?;
            Ok((label.to_string(), br))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaBundle {
        alpha,
        b,
        curves,
        ghosts,
    })
}

pub fn figure3(opts: &ContinuationOptions) -> Result<GammaBundle> {
    gamma_bundle(0, 2.0, opts)
}

pub fn figure4(opts: &ContinuationOptions) -> Result<GammaBundle> {
    gamma_bundle(1, 2.0, opts)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub panel: String,
    pub branch: String,
    pub gamma: f64,
    #[serde(with = "crate::serde_util::complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    pub n_unstable: Option<usize>,
}

/// Mode of `curve` at exactly `gamma`, by Newton from the nearest point.
pub fn mode_at_gamma(curve: &BranchCurve, gamma: f64) -> Result<StationaryMode> {
    let near = curve
        .points
        .iter()
        .min_by(|a, b| (a.param - gamma).abs().total_cmp(&(b.param - gamma).abs()))
        .ok_or_else(|| Error::InvalidInput("empty curve".into()))?;
    let span = |f: fn(f64, f64) -> f64| curve.points.iter().map(|p| p.param).fold(near.param, f);
    if gamma < span(f64::min) || gamma > span(f64::max) {
        return Err(Error::FamilyDoesNotExist(format!("{} does not reach gamma = {gamma}", curve.label)));
    }
    let m = &near.mode;
    let mut out = newton_solve(&m.params.with_gamma(gamma), m.b, &m.w)?;
    out.family = m.family;
    Ok(out)
}

/// Ghost of `branch` at exactly `gamma`, interpolated by the closed form.
fn ghost_at_gamma(branch: &GhostBranch, gamma: f64, upper: bool) -> Result<GhostMode> {
    let p = branch
        .points
        .first()
        .ok_or_else(|| Error::InvalidInput("empty ghost branch".into()))?
        .params;
    ghost_closed_form(&p.with_gamma(gamma), branch.pinned_value, upper)
}

/// Stability spectra at the sample points: `alpha = 0` at `gamma` 0.5 and
/// 1.2, `alpha = 1` at 1.2.
pub fn figure5(fig3: &GammaBundle, fig4: &GammaBundle) -> Result<Vec<SpectrumSample>> {
    let mut out = Vec::new();
    for (panel, bundle, gamma) in [("a0-g0.5", fig3, 0.5), ("a0-g1.2", fig3, 1.2), ("a1-g1.2", fig4, 1.2)] {
        for c in &bundle.curves {
            let Ok(m) = mode_at_gamma(c, gamma) else { continue };
            let r = stability_report(&m)?;
            out.push(SpectrumSample {
                panel: panel.into(),
                branch: c.label.clone(),
                gamma,
                eigenvalues: r.eigenvalues,
                n_unstable: Some(r.n_unstable),
            });
        }
        for (label, br) in &bundle.ghosts {
            if br.gamma_end().is_some_and(|e| e >= gamma) && gamma > 1.0 {
                let g = ghost_at_gamma(br, gamma, label.ends_with("upper"))?;
                out.push(SpectrumSample {
                    panel: panel.into(),
                    branch: label.clone(),
                    gamma,
                    eigenvalues: ghost_spectrum(&g)?,
                    n_unstable: None,
                });
            }
        }
    }
    Ok(out)
}

pub const FIG6_SEEDS: u64 = 32;
pub const FIG6_EPS: f64 = 1e-3;
pub const FIG6_ZMAX: f64 = 2000.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFigure {
    pub mode: StationaryMode,
    pub eps: f64,
    pub z_max: f64,
    pub runs: Vec<SweepRun>,
    /// First growth run and first bounded run, if any.
    pub growth: Option<EvolutionTrace>,
    pub bounded: Option<EvolutionTrace>,
}

/// Seed sweep on the unstable circular mode at `b = 3`, `gamma = 0.5`,
/// `alpha = 0` (the lower-amplitude family).
pub fn figure6(opts: &IntegratorOptions) -> Result<SweepFigure> {
    let p = CouplerParams::new(1.0, 0.5, 0)?;
    let mode = circular_mode(&ExactModeSpec::new(p, Sign::Plus, 3.0))?;
    let seeds: Vec<u64> = (0..FIG6_SEEDS).collect();
    let runs = seed_sweep(&mode, FIG6_EPS, &seeds, FIG6_ZMAX, opts, &ClassifyOptions::default())?;
    let pick = |o: Outcome| -> Result<Option<EvolutionTrace>> {
        runs.iter()
            .find(|r| r.outcome == o)
            .map(|r| evolve_perturbed(&mode, FIG6_EPS, r.seed, FIG6_ZMAX, opts))
            .transpose()
    };
    Ok(SweepFigure {
        growth: pick(Outcome::GainGrowth)?,
        bounded: pick(Outcome::BoundedOscillation)?,
        mode,
        eps: FIG6_EPS,
        z_max: FIG6_ZMAX,
        runs,
    })
}

pub const FIG7_GAMMA: f64 = 1.02;
pub const FIG7_EPS: f64 = 1e-3;
pub const FIG7_SEED: u64 = 0;
pub const FIG7_ZMAX: f64 = 200.0;

/// Lower-amplitude circular mode and its growing ghost at `gamma = 1.02`,
/// `b = 2`, `alpha = 0`.
pub fn figure7_inputs() -> Result<(StationaryMode, GhostMode)> {
    let p = CouplerParams::new(1.0, FIG7_GAMMA, 0)?;
    let mode = circular_mode(&ExactModeSpec::new(p, Sign::Plus, 2.0))?;
    let ghost = ghost_closed_form(&p, 2.0, false)?;
    Ok((mode, ghost))
}

pub fn figure7(opts: &IntegratorOptions) -> Result<GhostOverlay> {
    let (mode, ghost) = figure7_inputs()?;
    ghost_overlay(&mode, &ghost, FIG7_EPS, FIG7_SEED, FIG7_ZMAX, opts)
}

/// Integrator settings of the dynamics recipes.
pub fn dynamics_options() -> IntegratorOptions {
    IntegratorOptions {
        blowup_norm: GROWTH_BLOWUP_NORM,
        ..IntegratorOptions::default()
    }
}

pub fn family_of(curve: &BranchCurve) -> Family {
    curve.points.first().map_or(Family::Numeric, |p| p.mode.family)
}
