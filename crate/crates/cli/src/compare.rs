//! Per-momentum comparison of a run table against a theory dispersion.

use std::path::Path;

use floquet_xxz::scalar::phase_distance;

use crate::error::CliError;
use crate::output::Table;

/// Momenta closer than this are the same grid point.
const GRID_TOL: f64 = 1e-9;

/// Default tolerance when comparing two dispersion tables.
pub const DISPERSION_TOL: f64 = 1e-9;

#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub tolerance: f64,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.failed == 0 && self.passed > 0
    }
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read(path: &Path) -> Result<Csv, CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| err(&e))?;
    let header = r
        .headers()
        .map_err(|e| err(&e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| err(&e))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(&e))?;
        rows.push(row);
    }
    Ok(Csv { header, rows })
}

fn has_header(c: &Csv, want: &[&str]) -> bool {
    c.header.len() >= want.len() && c.header.iter().zip(want).all(|(a, b)| a == b)
}

/// Dispersion rows keyed by `k`, ascending.
fn dispersion(c: &Csv) -> Vec<(f64, f64, f64)> {
    let mut v: Vec<_> = c.rows.iter().map(|r| (r[0], r[1], r[2])).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Frequency of maximal power per `k`, ascending in `k`, plus the frequency step.
fn peaks(c: &Csv) -> (Vec<(f64, f64)>, f64) {
    let mut best: Vec<(f64, f64, f64)> = Vec::new();
    for r in &c.rows {
        let (k, w, p) = (r[0], r[1], r[2]);
        match best.iter_mut().find(|b| (b.0 - k).abs() < GRID_TOL) {
            Some(b) if p > b.2 => *b = (k, w, p),
            Some(_) => {}
            None => best.push((k, w, p)),
        }
    }
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ws: Vec<f64> = c.rows.iter().map(|r| r[1]).collect();
    ws.sort_by(f64::total_cmp);
    ws.dedup_by(|a, b| (*a - *b).abs() < GRID_TOL);
    let step = ws
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    (best.into_iter().map(|b| (b.0, b.1)).collect(), step)
}

fn check_grid(run: &[f64], theory: &[f64]) -> Result<(), CliError> {
    let same = run.len() == theory.len()
        && run
            .iter()
            .zip(theory)
            .all(|(a, b)| (a - b).abs() < GRID_TOL);
    if same {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "momentum grids differ: run has {} points, theory has {}",
            run.len(),
            theory.len()
        )))
    }
}

fn nan_eq_distance(a: f64, b: f64) -> f64 {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => 0.0,
        (false, false) => phase_distance(a, b).abs(),
        _ => f64::INFINITY,
    }
}

pub fn compare(run: &Path, theory: &Path, tolerance: Option<f64>) -> Result<Report, CliError> {
    let th = read(theory)?;
    if !has_header(&th, &["k", "E_plus", "E_minus"]) {
        return Err(CliError::Runtime(format!(
            "{}: expected a dispersion table with columns k,E_plus,E_minus",
            theory.display()
        )));
    }
    let th = dispersion(&th);
    let rc = read(run)?;
    let mut table = Table::new("comparison.csv", "k,measured,theory,deviation,status");
    let (mut passed, mut failed, mut skipped) = (0, 0, 0);
    let mut tally = |table: &mut Table, k: f64, m: String, t: String, d: f64, status: &str| {
        match status {
            "PASS" => passed += 1,
            "FAIL" => failed += 1,
            _ => skipped += 1,
        }
        table.row([k.to_string(), m, t, d.to_string(), status.to_string()]);
    };
    let tol;
    if has_header(&rc, &["k", "omega", "power"]) {
        let (pk, step) = peaks(&rc);
        tol = tolerance.unwrap_or(step);
        check_grid(
            &pk.iter().map(|p| p.0).collect::<Vec<_>>(),
            &th.iter().map(|t| t.0).collect::<Vec<_>>(),
        )?;
        for (&(k, w), &(_, up, lo)) in pk.iter().zip(&th) {
            if up.is_nan() || lo.is_nan() {
                tally(&mut table, k, w.to_string(), "NaN".into(), f64::NAN, "SKIP");
                continue;
            }
            let (d, near) = [up, lo]
                .into_iter()
                .map(|e| (phase_distance(w, e).abs(), e))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("two bands");
            let status = if d <= tol + 1e-12 { "PASS" } else { "FAIL" };
            tally(&mut table, k, w.to_string(), near.to_string(), d, status);
        }
    } else if has_header(&rc, &["k", "E_plus", "E_minus"]) {
        tol = tolerance.unwrap_or(DISPERSION_TOL);
        let rd = dispersion(&rc);
        check_grid(
            &rd.iter().map(|r| r.0).collect::<Vec<_>>(),
            &th.iter().map(|t| t.0).collect::<Vec<_>>(),
        )?;
        for (&(k, up, lo), &(_, tu, tl)) in rd.iter().zip(&th) {
            let d = nan_eq_distance(up, tu).max(nan_eq_distance(lo, tl));
            let status = if d <= tol { "PASS" } else { "FAIL" };
            tally(
                &mut table,
                k,
                format!("{up};{lo}"),
                format!("{tu};{tl}"),
                d,
                status,
            );
        }
    } else {
        return Err(CliError::Runtime(format!(
            "{}: expected a band table (k,omega,power) or a dispersion table (k,E_plus,E_minus)",
            run.display()
        )));
    }
    Ok(Report {
        table,
        passed,
        failed,
        skipped,
        tolerance: tol,
    })
}
