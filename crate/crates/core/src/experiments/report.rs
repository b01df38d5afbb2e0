//! Calibration of the error-bound constant and the bound curves drawn over
//! the sweep scatter.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bounds::{calibrate_constant, error_bound};
use crate::error::{Error, Result};

use super::results::SweepRecord;

/// Calibrated bound for one bin-width percentage, one point per `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub delta_pct: f64,
    /// `(s, bound on the relative error)`, ascending in `s`.
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub n: usize,
    pub c: f64,
    pub curves: Vec<BoundCurve>,
    /// Successful records only.
    pub records: Vec<SweepRecord>,
    pub failed: usize,
}

impl Report {
    /// Fraction of successful records with `abs_err ≤ c · bound_c1`.
    pub fn coverage(&self, records: &[SweepRecord]) -> f64 {
        coverage(self.c, records)
    }

    pub fn delta_pcts(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c.delta_pct).collect()
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "C = {:.6}", self.c);
        let _ = writeln!(out, "records = {} ({} failed)", self.records.len() + self.failed, self.failed);
        let _ = writeln!(out, "coverage = {:.4}", self.coverage(&self.records));
        let _ = writeln!(out, "\ndelta_pct,s,median_rel_err,bound_rel_err,topo_exact_frac");
        for curve in &self.curves {
            for &(s, bound) in &curve.points {
                let cell: Vec<&SweepRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.s == s && r.delta_pct == curve.delta_pct)
                    .collect();
                let med = median(cell.iter().map(|r| r.rel_err)).unwrap_or(f64::NAN);
                let topo = cell.iter().filter(|r| r.topo_exact).count() as f64 / cell.len().max(1) as f64;
                let _ = writeln!(out, "{},{s},{med:.6e},{bound:.6e},{topo:.3}", curve.delta_pct);
            }
        }
        out
    }
}

pub fn coverage(c: f64, records: &[SweepRecord]) -> f64 {
    let ok: Vec<&SweepRecord> = records.iter().filter(|r| r.succeeded()).collect();
    if ok.is_empty() {
        return f64::NAN;
    }
    ok.iter().filter(|r| r.abs_err <= c * r.bound_c1).count() as f64 / ok.len() as f64
}

pub fn median<I: IntoIterator<Item = f64>>(values: I) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

/// Calibrates `C` over every successful record and builds one bound curve
/// per bin-width percentage. Each curve point uses the largest `Δ` of its
/// cell, scaled to relative error by `‖w⋆‖₂`, so it sits on or above every
/// scatter point of that cell.
pub fn calibrate_and_overlay(records: &[SweepRecord]) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::DegenerateInput("no sweep records to calibrate".into()));
    }
    let n = records[0].n;
    if records.iter().any(|r| r.n != n) {
        return Err(Error::DegenerateInput("records mix networks of different size".into()));
    }
    let ok: Vec<SweepRecord> = records.iter().copied().filter(SweepRecord::succeeded).collect();
    if ok.is_empty() {
        return Err(Error::Numeric("every solve in the sweep failed".into()));
    }
    let c = calibrate_constant(ok.iter().map(SweepRecord::observation))?;
    let w_norm = ok
        .iter()
        .find(|r| r.rel_err > 0.0)
        .map_or(1.0, |r| r.abs_err / r.rel_err);

    let mut cells: BTreeMap<(u64, usize), f64> = BTreeMap::new();
    for r in &ok {
        let delta = cells.entry((r.delta_pct.to_bits(), r.s)).or_insert(0.0);
        *delta = delta.max(r.delta);
    }
    let mut curves: Vec<BoundCurve> = Vec::new();
    for ((bits, s), delta) in cells {
        let pct = f64::from_bits(bits);
        let bound = error_bound(c, delta, n, s)? / w_norm;
        match curves.last_mut() {
            Some(curve) if curve.delta_pct == pct => curve.points.push((s, bound)),
            _ => curves.push(BoundCurve {
                delta_pct: pct,
                points: vec![(s, bound)],
            }),
        }
    }
    Ok(Report {
        n,
        c,
        curves,
        failed: records.len() - ok.len(),
        records: ok,
    })
}
