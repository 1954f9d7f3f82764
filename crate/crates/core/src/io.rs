//! CSV and JSON output. Floats are written with 17 significant digits so
//! every value reads back bit-for-bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::continuation::BranchCurve;
use crate::dynamics::EvolutionTrace;
use crate::error::{Error, Result};
use crate::ghost::GhostBranch;
use crate::model::StationaryMode;

pub const BRANCH_COLUMNS: [&str; 13] = [
    "param",
    "b",
    "U",
    "a1",
    "a2",
    "a3",
    "a4",
    "dphi12",
    "dphi23",
    "dphi34",
    "max_re_lambda",
    "n_unstable",
    "stable",
];

pub const GHOST_COLUMNS: [&str; 8] = ["gamma", "c1", "c2", "dphi", "B", "phi_b", "re_b", "im_b"];

pub const TRACE_COLUMNS: [&str; 6] = ["z", "i1", "i2", "i3", "i4", "U"];

pub const MODE_COLUMNS: [&str; 11] = [
    "b", "U", "u1_re", "u1_im", "u2_re", "u2_im", "u3_re", "u3_im", "u4_re", "u4_im", "family",
];

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// One row of a branch CSV. Stability columns are empty when no report is
/// attached.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub param: f64,
    pub b: f64,
    pub u: f64,
    pub amplitudes: [f64; 4],
    pub phase_diffs: [f64; 3],
    pub max_re_lambda: Option<f64>,
    pub n_unstable: Option<usize>,
    pub stable: Option<bool>,
}

impl BranchRow {
    /// CSV fields in `BRANCH_COLUMNS` order.
    pub fn record(&self) -> Vec<String> {
        let mut f = vec![fmt17(self.param), fmt17(self.b), fmt17(self.u)];
        f.extend(self.amplitudes.iter().map(|x| fmt17(*x)));
        f.extend(self.phase_diffs.iter().map(|x| fmt17(*x)));
        f.push(self.max_re_lambda.map(fmt17).unwrap_or_default());
        f.push(self.n_unstable.map(|n| n.to_string()).unwrap_or_default());
        f.push(self.stable.map(|s| if s { "1" } else { "0" }.to_string()).unwrap_or_default());
        f
    }
}

pub fn branch_rows(curve: &BranchCurve) -> Vec<BranchRow> {
    curve
        .points
        .iter()
        .map(|p| BranchRow {
            param: p.param,
            b: p.mode.b,
            u: p.u,
            amplitudes: p.amplitudes,
            phase_diffs: p.phase_diffs,
            max_re_lambda: p.stability.as_ref().map(|s| s.max_growth),
            n_unstable: p.stability.as_ref().map(|s| s.n_unstable),
            stable: p.stability.as_ref().map(|s| s.stable),
        })
        .collect()
}

pub fn write_branch_csv_to<W: Write>(curve: &BranchCurve, out: W) -> Result<()> {
    write_branch_bundle_to(std::slice::from_ref(curve), out, false)
}

pub fn write_branch_csv(curve: &BranchCurve, path: &Path) -> Result<()> {
    write_branch_csv_to(curve, File::create(path)?)
}

/// Several curves in one file, with a leading `branch` column.
pub fn write_branch_bundle(curves: &[BranchCurve], path: &Path) -> Result<()> {
    write_branch_bundle_to(curves, File::create(path)?, true)
}

fn write_branch_bundle_to<W: Write>(curves: &[BranchCurve], out: W, labelled: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = Vec::new();
    if labelled {
        header.push("branch");
    }
    header.extend(BRANCH_COLUMNS);
    w.write_record(&header).map_err(csv_err)?;
    for c in curves {
        for row in branch_rows(c) {
            let mut rec = Vec::new();
            if labelled {
                rec.push(c.label.clone());
            }
            rec.extend(row.record());
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn opt<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
    if s.trim().is_empty() { Ok(None) } else { f(s).map(Some) }
}

/// Reads the rows of a single-curve or bundled branch CSV, returning the
/// branch label (empty for single-curve files) with each row.
pub fn read_branch_csv_from<R: Read>(input: R) -> Result<Vec<(String, BranchRow)>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let off = usize::from(header.get(0) == Some("branch"));
    let expected: Vec<&str> = BRANCH_COLUMNS.to_vec();
    let got: Vec<&str> = header.iter().skip(off).collect();
    if got != expected {
        return Err(Error::Parse(format!("unexpected branch CSV header {got:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let g = |i: usize| rec.get(i + off).unwrap_or("");
        let num = |i: usize| parse_f64(g(i));
        let label = if off == 1 { rec.get(0).unwrap_or("").to_string() } else { String::new() };
        rows.push((
            label,
            BranchRow {
                param: num(0)?,
                b: num(1)?,
                u: num(2)?,
                amplitudes: [num(3)?, num(4)?, num(5)?, num(6)?],
                phase_diffs: [num(7)?, num(8)?, num(9)?],
                max_re_lambda: opt(g(10), parse_f64)?,
                n_unstable: opt(g(11), |s| {
                    s.trim().parse().map_err(|_| Error::Parse(format!("bad count {s:?}")))
                })?,
                stable: opt(g(12), |s| match s.trim() {
                    "1" => Ok(true),
                    "0" => Ok(false),
                    _ => Err(Error::Parse(format!("bad stable flag {s:?}"))),
                })?,
            },
        ));
    }
    Ok(rows)
}

pub fn read_branch_csv(path: &Path) -> Result<Vec<(String, BranchRow)>> {
    read_branch_csv_from(File::open(path)?)
}

pub fn write_ghost_csv_to<W: Write>(branches: &[(String, &GhostBranch)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["branch"];
    header.extend(GHOST_COLUMNS);
    w.write_record(&header).map_err(csv_err)?;
    for (label, br) in branches {
        for g in &br.points {
            let b = g.b_complex();
            let mut rec = vec![label.clone()];
            rec.extend(
                [g.params.gamma, g.c1, g.c2, g.dphi(), g.b_mod, g.phi_b, b.re, b.im].map(fmt17),
            );
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ghost_csv(branches: &[(String, &GhostBranch)], path: &Path) -> Result<()> {
    write_ghost_csv_to(branches, File::create(path)?)
}

pub fn write_trace_csv_to<W: Write>(trace: &EvolutionTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS).map_err(csv_err)?;
    for ((z, i), u) in trace.z.iter().zip(&trace.intensities).zip(&trace.u) {
        w.write_record([*z, i[0], i[1], i[2], i[3], *u].map(fmt17)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Trace CSV plus a `.json` sidecar with status, metadata and `config`.
pub fn write_trace(trace: &EvolutionTrace, path: &Path, config: &serde_json::Value) -> Result<()> {
    write_trace_csv_to(trace, File::create(path)?)?;
    let side = serde_json::json!({
        "status": trace.status,
        "power_law_defect": trace.power_law_defect(),
        "samples": trace.len(),
        "meta": trace.meta,
        "config": config,
    });
    write_json(&side, &path.with_extension("json"))
}

pub fn write_modes_csv_to<W: Write>(modes: &[StationaryMode], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MODE_COLUMNS).map_err(csv_err)?;
    for m in modes {
        let mut rec = vec![fmt17(m.b), fmt17(m.power())];
        rec.extend(m.w.to_real_interleaved().map(fmt17));
        rec.push(m.family.tag().to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn rejects_foreign_header() {
        let data = "x,y\n1,2\n";
        assert!(read_branch_csv_from(data.as_bytes()).is_err());
    }
}
