//! Command-line front end. Every numeric option can also come from a JSON
//! config file (`--config`); flags win over the file, the file wins over
//! built-in defaults, and the effective configuration (minus the output path)
//! is written next to every file output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::continuation::{
    attach_stability, continue_branch, search_modes, Axis, ContinuationOptions, SearchOptions,
};
use crate::dynamics::{evolve_perturbed, IntegratorOptions};
use crate::error::{Error, Result};
use crate::exact::{circular_mode, elliptic_mode_alpha1, ExactModeSpec};
use crate::figures;
use crate::ghost::{ghost_branch, ghost_closed_form, GhostBranchOptions, GhostOptions, Pinning};
use crate::io::{fmt17, write_branch_bundle, write_branch_csv, write_ghost_csv, write_json, write_trace};
use crate::model::{CouplerParams, Sign, StationaryMode};
use crate::perturbation::{elliptic_roots, predict_circular};
use crate::spectrum::eigenvalues_closed;
use crate::stability::stability_report;

/// Merged job configuration. All fields are optional so that a config file
/// may set any subset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pin: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<bool>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        JobConfig { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl JobConfig {
    /// Field-wise `self` where set, else `lower`.
    pub fn overlay(self, lower: JobConfig) -> JobConfig {
        overlay!(
            self, lower, k, gamma, alpha, b, family, sign, axis, from, to, eps, seed, z_max, rtol, atol, dz,
            blowup_norm, pin, draws, stability, out
        )
    }

    pub fn load(path: &Path) -> Result<JobConfig> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))
    }

    fn params(&self) -> Result<CouplerParams> {
        CouplerParams::new(self.k.unwrap_or(1.0), self.gamma.unwrap_or(0.0), self.alpha.unwrap_or(0))
    }

    fn require<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
        v.clone().ok_or_else(|| Error::Parse(format!("missing required option --{name}")))
    }

    fn sign(&self) -> Result<Sign> {
        self.sign.as_deref().unwrap_or("+").parse()
    }

    fn integrator(&self) -> IntegratorOptions {
        let d = IntegratorOptions::default();
        IntegratorOptions {
            rtol: self.rtol.unwrap_or(d.rtol),
            atol: self.atol.unwrap_or(d.atol),
            sample_dz: self.dz.unwrap_or(d.sample_dz),
            blowup_norm: self.blowup_norm.unwrap_or(d.blowup_norm),
            ..d
        }
    }

    fn out(&self) -> Result<PathBuf> {
        Self::require(&self.out, "out")
    }
}

#[derive(Parser, Debug)]
#[command(name = "ptcoupler", version, about = "PT-symmetric birefringent coupler: modes, stability, ghosts, dynamics")]
struct Cli {
    /// JSON file with default values for any option.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<u8>,
}

#[derive(Args, Debug, Default)]
struct ModeArgs {
    /// circular or elliptic
    #[arg(long)]
    family: Option<String>,
    /// + or -
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct DynArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    z_max: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    /// Output sample spacing in z.
    #[arg(long)]
    dz: Option<f64>,
    #[arg(long)]
    blowup_norm: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Linear propagation constants and PT phase.
    Spectrum {
        #[command(flatten)]
        p: ParamArgs,
    },
    /// Small-amplitude bifurcation predictions.
    Predict {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<String>,
    },
    /// Exact stationary mode.
    Mode {
        #[command(flatten)]
        p: ParamArgs,
        #[command(flatten)]
        m: ModeArgs,
    },
    /// Multi-seed Newton search for stationary modes at fixed b.
    Solve {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Continue a family in b or gamma and write a branch CSV.
    Continue {
        #[command(flatten)]
        p: ParamArgs,
        #[command(flatten)]
        m: ModeArgs,
        /// b or gamma
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
        /// Attach stability spectra (default true).
        #[arg(long)]
        stability: Option<bool>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear stability spectrum of an exact mode.
    Stability {
        #[command(flatten)]
        p: ParamArgs,
        #[command(flatten)]
        m: ModeArgs,
    },
    /// Ghost branch in gamma at fixed |b| (or Re b).
    Ghost {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        /// modulus or real
        #[arg(long)]
        pin: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate a perturbed exact mode and write its intensity trace.
    Evolve {
        #[command(flatten)]
        p: ParamArgs,
        #[command(flatten)]
        m: ModeArgs,
        #[command(flatten)]
        d: DynArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind figure N (2 to 7) into a directory.
    Figure {
        n: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl ParamArgs {
    fn config(&self) -> JobConfig {
        JobConfig {
            k: self.k,
            gamma: self.gamma,
            alpha: self.alpha,
            ..Default::default()
        }
    }
}

impl ModeArgs {
    fn config(&self) -> JobConfig {
        JobConfig {
            family: self.family.clone(),
            sign: self.sign.clone(),
            b: self.b,
            ..Default::default()
        }
    }
}

impl DynArgs {
    fn config(&self) -> JobConfig {
        JobConfig {
            eps: self.eps,
            seed: self.seed,
            z_max: self.z_max,
            rtol: self.rtol,
            atol: self.atol,
            dz: self.dz,
            blowup_norm: self.blowup_norm,
            ..Default::default()
        }
    }
}

impl Command {
    fn flags(&self) -> JobConfig {
        match self {
            Command::Spectrum { p } => p.config(),
            Command::Predict { p, sign } => JobConfig {
                sign: sign.clone(),
                ..p.config()
            },
            Command::Mode { p, m } | Command::Stability { p, m } => m.config().overlay(p.config()),
            Command::Solve { p, b, seed, draws } => JobConfig {
                b: *b,
                seed: *seed,
                draws: *draws,
                ..p.config()
            },
            Command::Continue { p, m, axis, from, to, stability, out } => JobConfig {
                axis: axis.clone(),
                from: *from,
                to: *to,
                stability: *stability,
                out: out.clone(),
                ..m.config().overlay(p.config())
            },
            Command::Ghost { p, b, from, to, pin, out } => JobConfig {
                b: *b,
                from: *from,
                to: *to,
                pin: pin.clone(),
                out: out.clone(),
                ..p.config()
            },
            Command::Evolve { p, m, d, out } => JobConfig {
                out: out.clone(),
                ..d.config().overlay(m.config()).overlay(p.config())
            },
            Command::Figure { out, .. } => JobConfig {
                out: out.clone(),
                ..Default::default()
            },
        }
    }
}

impl Command {
    /// Values used for options left unset by both flags and config file.
    fn defaults(&self) -> JobConfig {
        let params = JobConfig {
            k: Some(1.0),
            gamma: Some(0.0),
            alpha: Some(0),
            ..Default::default()
        };
        let mode = JobConfig {
            family: Some("circular".into()),
            sign: Some("+".into()),
            ..params.clone()
        };
        match self {
            Command::Spectrum { .. } => params,
            Command::Predict { .. } | Command::Mode { .. } | Command::Stability { .. } => mode,
            Command::Solve { .. } => {
                let d = SearchOptions::default();
                JobConfig {
                    seed: Some(d.rng_seed),
                    draws: Some(d.random_draws),
                    ..params
                }
            }
            Command::Continue { .. } => JobConfig {
                axis: Some("b".into()),
                stability: Some(true),
                ..mode
            },
            Command::Ghost { .. } => JobConfig {
                b: Some(2.0),
                from: Some(1.0 + figures::GHOST_START),
                to: Some(3.0),
                pin: Some("modulus".into()),
                ..params
            },
            Command::Evolve { .. } => {
                let d = IntegratorOptions::default();
                JobConfig {
                    eps: Some(1e-3),
                    seed: Some(0),
                    z_max: Some(100.0),
                    rtol: Some(d.rtol),
                    atol: Some(d.atol),
                    dz: Some(d.sample_dz),
                    blowup_norm: Some(d.blowup_norm),
                    ..mode
                }
            }
            // recipes carry their own settings, echoed in their summaries
            Command::Figure { .. } => JobConfig::default(),
        }
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    match writeln!(out) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Real when the imaginary part vanishes, `[re, im]` otherwise.
fn maybe_real(z: Complex64) -> serde_json::Value {
    if z.im == 0.0 { json!(z.re) } else { json!([z.re, z.im]) }
}

fn exact_mode(cfg: &JobConfig) -> Result<StationaryMode> {
    let p = cfg.params()?;
    let spec = ExactModeSpec::new(p, cfg.sign()?, JobConfig::require(&cfg.b, "b")?);
    match cfg.family.as_deref().unwrap_or("circular") {
        "circular" => circular_mode(&spec),
        "elliptic" => elliptic_mode_alpha1(&spec),
        other => Err(Error::Parse(format!("unknown family {other:?} (expected circular or elliptic)"))),
    }
}

/// Seed for `continue`: the exact mode at the start of the range, or for
/// `alpha = 0` elliptic families the first asymmetric mode found by search.
fn continuation_seed(cfg: &JobConfig, axis: Axis, start: f64) -> Result<StationaryMode> {
    let mut c = cfg.clone();
    match axis {
        Axis::B => c.b = Some(start),
        Axis::Gamma => c.gamma = Some(start),
    }
    let p = c.params()?;
    if c.family.as_deref() == Some("elliptic") && p.alpha == 0 {
        let b = JobConfig::require(&c.b, "b")?;
        let found = search_modes(&p, b, &SearchOptions::default())?;
        let mut ell: Vec<StationaryMode> = found.elliptic().into_iter().cloned().collect();
        ell.sort_by(|x, y| x.power().total_cmp(&y.power()));
        let pick = match c.sign()? {
            Sign::Plus => ell.first(),
            Sign::Minus => ell.last(),
        };
        return pick
            .cloned()
            .ok_or_else(|| Error::FamilyDoesNotExist(format!("no asymmetric mode found at gamma = {}, b = {b}", p.gamma)));
    }
    exact_mode(&c)
}

fn sidecar(path: &Path, cfg: &JobConfig, extra: serde_json::Value) -> Result<()> {
    let mut v = json!({ "config": cfg });
    if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    write_json(&v, &path.with_extension("json"))
}

fn run(cmd: Command, cfg: JobConfig) -> Result<()> {
    match cmd {
        Command::Spectrum { .. } => {
            let s = eigenvalues_closed(&cfg.params()?);
            print_json(&json!({
                "b_plus": maybe_real(s.b_plus),
                "b_minus": maybe_real(s.b_minus),
                "gamma_cr1": s.gamma_cr1,
                "broken": s.broken,
            }))
        }
        Command::Predict { .. } => {
            let p = cfg.params()?;
            let sign = cfg.sign()?;
            let circular = predict_circular(&p, sign)?;
            let elliptic = if p.alpha == 0 && p.gamma > 0.0 { elliptic_roots(&p, sign)? } else { Vec::new() };
            print_json(&json!({ "circular": circular, "elliptic": elliptic }))
        }
        Command::Mode { .. } => print_json(&exact_mode(&cfg)?),
        Command::Stability { .. } => print_json(&stability_report(&exact_mode(&cfg)?)?),
        Command::Solve { .. } => {
            let p = cfg.params()?;
            let d = SearchOptions::default();
            let opts = SearchOptions {
                rng_seed: cfg.seed.unwrap_or(d.rng_seed),
                random_draws: cfg.draws.unwrap_or(d.random_draws),
                ..d
            };
            print_json(&search_modes(&p, JobConfig::require(&cfg.b, "b")?, &opts)?)
        }
        Command::Continue { .. } => {
            let axis: Axis = cfg.axis.as_deref().unwrap_or("b").parse()?;
            let from = JobConfig::require(&cfg.from, "from")?;
            let to = JobConfig::require(&cfg.to, "to")?;
            let seed = continuation_seed(&cfg, axis, from)?;
            let mut curve = continue_branch(&seed.params, axis, (from, to), &seed, &ContinuationOptions::default())?;
            if cfg.stability.unwrap_or(true) {
                attach_stability(&mut curve)?;
            }
            let out = cfg.out()?;
            write_branch_csv(&curve, &out)?;
            sidecar(&out, &cfg, json!({ "label": curve.label, "termination": curve.termination }))
        }
        Command::Ghost { .. } => {
            let p = cfg.params()?;
            let b = cfg.b.unwrap_or(2.0);
            let from = cfg.from.unwrap_or(1.0 + figures::GHOST_START);
            let to = cfg.to.unwrap_or(3.0);
            let pinning = match cfg.pin.as_deref().unwrap_or("modulus") {
                "modulus" => Pinning::Modulus,
                "real" => Pinning::RealPart,
                other => return Err(Error::Parse(format!("unknown pinning {other:?} (expected modulus or real)"))),
            };
            let opts = GhostBranchOptions {
                solver: GhostOptions { pinning, ..GhostOptions::default() },
                ..GhostBranchOptions::default()
            };
            let ps = p.with_gamma(from);
            let mut branches = Vec::new();
            for (label, upper) in [("ghost-upper", true), ("ghost-lower", false)] {
                let seed = ghost_closed_form(&ps, b, upper)?;
                branches.push((label.to_string(), ghost_branch(&ps, b, (from, to), &seed, &opts)?));
            }
            let out = cfg.out()?;
            let refs: Vec<(String, _)> = branches.iter().map(|(l, b)| (l.clone(), b)).collect();
            write_ghost_csv(&refs, &out)?;
            let ends: Vec<_> = branches
                .iter()
                .map(|(l, b)| json!({ "branch": l, "termination": b.termination, "gamma_end": b.gamma_end() }))
                .collect();
            sidecar(&out, &cfg, json!({ "branches": ends }))
        }
        Command::Evolve { .. } => {
            let mode = exact_mode(&cfg)?;
            let eps = cfg.eps.unwrap_or(1e-3);
            let seed = cfg.seed.unwrap_or(0);
            let z_max = cfg.z_max.unwrap_or(100.0);
            let trace = evolve_perturbed(&mode, eps, seed, z_max, &cfg.integrator())?;
            write_trace(&trace, &cfg.out()?, &serde_json::to_value(&cfg)?)?;
            eprintln!("{}", trace.status);
            Ok(())
        }
        Command::Figure { n, .. } => run_figure(n, &cfg),
    }
}

fn run_figure(n: u8, cfg: &JobConfig) -> Result<()> {
    if !(2..=7).contains(&n) {
        return Err(Error::Parse(format!("no recipe for figure {n} (expected 2 to 7)")));
    }
    let dir = cfg.out()?;
    fs::create_dir_all(&dir)?;
    let copts = ContinuationOptions::default();
    let summary = |name: &str, v: serde_json::Value| -> Result<()> {
        write_json(&json!({ "config": cfg, "figure": n, "summary": v }), &dir.join(format!("{name}.json")))
    };
    let curve_summary = |curves: &[crate::continuation::BranchCurve]| -> Vec<serde_json::Value> {
        curves
            .iter()
            .map(|c| json!({ "branch": c.label, "termination": c.termination, "points": c.points.len() }))
            .collect()
    };
    match n {
        2 => {
            let mut all = Vec::new();
            for panel in figures::figure2(&copts)? {
                write_branch_bundle(&panel.curves, &dir.join(format!("fig2_{}.csv", panel.name)))?;
                all.push(json!({
                    "panel": panel.name, "gamma": panel.gamma, "alpha": panel.alpha,
                    "branches": curve_summary(&panel.curves),
                }));
            }
            summary("fig2", json!(all))
        }
        3 | 4 => {
            let bundle = if n == 3 { figures::figure3(&copts)? } else { figures::figure4(&copts)? };
            write_gamma_bundle(&bundle, &dir, &format!("fig{n}"))?;
            let ghosts: Vec<_> = bundle
                .ghosts
                .iter()
                .map(|(l, g)| json!({ "branch": l, "termination": g.termination, "gamma_end": g.gamma_end() }))
                .collect();
            summary(&format!("fig{n}"), json!({ "branches": curve_summary(&bundle.curves), "ghosts": ghosts }))
        }
        5 => {
            let f3 = figures::figure3(&copts)?;
            let f4 = figures::figure4(&copts)?;
            let samples = figures::figure5(&f3, &f4)?;
            let mut w = csv::Writer::from_path(dir.join("fig5_spectra.csv")).map_err(to_io)?;
            w.write_record(["panel", "branch", "gamma", "re_lambda", "im_lambda"]).map_err(to_io)?;
            for s in &samples {
                for l in &s.eigenvalues {
                    w.write_record([s.panel.clone(), s.branch.clone(), fmt17(s.gamma), fmt17(l.re), fmt17(l.im)])
                        .map_err(to_io)?;
                }
            }
            w.flush()?;
            let counts: Vec<_> = samples
                .iter()
                .map(|s| json!({ "panel": s.panel, "branch": s.branch, "n_unstable": s.n_unstable }))
                .collect();
            summary("fig5", json!(counts))
        }
        6 => {
            let opts = merged_dynamics(cfg);
            let fig = figures::figure6(&opts)?;
            let mut w = csv::Writer::from_path(dir.join("fig6_runs.csv")).map_err(to_io)?;
            w.write_record(["seed", "outcome", "status", "i1", "i2", "i3", "i4", "power_law_defect"])
                .map_err(to_io)?;
            for r in &fig.runs {
                let outcome = serde_json::to_value(r.outcome)?;
                let mut rec = vec![r.seed.to_string(), outcome.as_str().unwrap_or_default().to_string(), r.status.to_string()];
                rec.extend(r.final_intensities.map(fmt17));
                rec.push(fmt17(r.power_law_defect));
                w.write_record(&rec).map_err(to_io)?;
            }
            w.flush()?;
            let cfg_v = serde_json::to_value(cfg)?;
            if let Some(t) = &fig.growth {
                write_trace(t, &dir.join("fig6_growth.csv"), &cfg_v)?;
            }
            if let Some(t) = &fig.bounded {
                write_trace(t, &dir.join("fig6_bounded.csv"), &cfg_v)?;
            }
            summary("fig6", json!({ "mode": fig.mode, "eps": fig.eps, "z_max": fig.z_max, "options": opts }))
        }
        7 => {
            let opts = merged_dynamics(cfg);
            let ov = figures::figure7(&opts)?;
            let cfg_v = serde_json::to_value(cfg)?;
            write_trace(&ov.unstable, &dir.join("fig7_unstable.csv"), &cfg_v)?;
            write_trace(&ov.ghost_evolution, &dir.join("fig7_ghost.csv"), &cfg_v)?;
            summary(
                "fig7",
                json!({ "window": ov.window, "closed_form": ov.closed_form, "evolved": ov.evolved, "options": opts }),
            )
        }
        _ => unreachable!("figure number checked above"),
    }
}

fn merged_dynamics(cfg: &JobConfig) -> IntegratorOptions {
    let d = figures::dynamics_options();
    IntegratorOptions {
        rtol: cfg.rtol.unwrap_or(d.rtol),
        atol: cfg.atol.unwrap_or(d.atol),
        sample_dz: cfg.dz.unwrap_or(d.sample_dz),
        blowup_norm: cfg.blowup_norm.unwrap_or(d.blowup_norm),
        ..d
    }
}

fn to_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn write_gamma_bundle(bundle: &figures::GammaBundle, dir: &Path, stem: &str) -> Result<()> {
    write_branch_bundle(&bundle.curves, &dir.join(format!("{stem}_branches.csv")))?;
    let refs: Vec<(String, _)> = bundle.ghosts.iter().map(|(l, g)| (l.clone(), g)).collect();
    write_ghost_csv(&refs, &dir.join(format!("{stem}_ghosts.csv")))
}

/// Parses `argv`, runs the command and returns the process exit code:
/// 0 on success, 2 on usage errors (including invalid parameter values), 1
/// on numerical failures.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let file = match cli.config.as_deref().map(JobConfig::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cfg = cli.command.flags().overlay(file).overlay(cli.command.defaults());
    match run(cli.command, cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::InvalidParams(_) | Error::InvalidInput(_) => 2,
                _ => 1,
            }
        }
    }
}
