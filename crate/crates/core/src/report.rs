//! The nonrelativistic-limit sweep and its reproducible outputs: per-c rows,
//! the fitted decay rate of the second component, CSV emission with a fixed
//! column layout, a JSON run manifest, and a plot script for the CSV.

use crate::field::ScalarField;
use crate::graph::MetricGraph;
use crate::mesh::Mesh;
use crate::nlde::{initial_guess, solve_nlde, NldeParams};
use crate::nlse::{solve_nlse_on_mesh, NlseOptions, SolveRoute};
use crate::operators::{assemble_dirac, constraint_basis};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

/// Sign convention adopted for the limit problem, recorded in manifests.
pub const NLSE_SIGN_CONVENTION: &str = "-g'' - lambda*g = 2*m*chi_K*|g|^(p-2)*g";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("sweep needs a non-empty c list")]
    EmptySweep,
    #[error("c values must be positive and distinct, got {0}")]
    BadSpeedList(f64),
    #[error("rate fit needs at least 3 positive points")]
    InsufficientData,
    #[error("io error at {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Nlse(#[from] crate::nlse::NlseError),
    #[error(transparent)]
    Operator(#[from] crate::operators::OperatorError),
}

/// Sweep configuration; mirrors the JSON config format of the CLI, which
/// rejects unknown keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub graph: String,
    pub m: f64,
    pub p: f64,
    pub c_list: Vec<f64>,
    pub h: f64,
    pub trunc_length: f64,
    pub seed: u64,
    pub out_dir: String,
}

/// One converged row of the sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub c: f64,
    pub omega: f64,
    pub omega_minus_mc2: f64,
    pub l2_u2: f64,
    pub h1_u2: f64,
    pub h1_u1_minus_g: f64,
    pub action: f64,
    pub residual: f64,
    pub newton_iters: usize,
}

/// A row that failed to solve, recorded instead of silently dropped.
#[derive(Debug, Clone)]
pub struct FailedRow {
    pub c: f64,
    pub error: String,
}

/// Sweep output: rows ascending in c, the fitted decay slope, and the
/// Schrödinger reference data.
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failed: Option<FailedRow>,
    /// least-squares slope of log ‖u²‖_{H¹} against log c.
    pub h1_u2_slope: Option<f64>,
    pub nlse_lambda: f64,
    pub nlse_energy: f64,
    pub nlse_route: SolveRoute,
    /// mc²-offset the multipliers converge to: λ/(2m).
    pub limit_offset: f64,
    pub m: f64,
    pub p: f64,
}

/// Least-squares slope on log-log axes.
pub fn fit_rate(series: &[(f64, f64)]) -> Result<f64, ReportError> {
    if series.len() < 3 || series.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(ReportError::InsufficientData);
    }
    let n = series.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in series {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Run the sweep: one Schrödinger solve, then Dirac solves continued from
/// the largest c downward, reported ascending.
pub fn run_sweep(graph: &MetricGraph, config: &SweepConfig) -> Result<SweepReport, ReportError> {
    if config.c_list.is_empty() {
        return Err(ReportError::EmptySweep);
    }
    for &c in &config.c_list {
        if !(c > 0.0) {
            return Err(ReportError::BadSpeedList(c));
        }
    }
    let mesh = Arc::new(Mesh::build(graph, config.h, config.trunc_length)?);
    let nlse = solve_nlse_on_mesh(&mesh, config.m, config.p, 1.0, &NlseOptions::default())?;
    let basis = constraint_basis(&mesh)?;

    let mut cs = config.c_list.clone();
    cs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (m, p) = (config.m, config.p);

    let mut rows: Vec<SweepRow> = Vec::with_capacity(cs.len());
    let mut failed = None;
    let mut warm: Option<(crate::field::SpinorField, f64)> = None; // (u, omega - mc²)
    for &c in &cs {
        let op = match assemble_dirac(&mesh, &basis, m, c) {
            Ok(op) => op,
            Err(e) => {
                failed = Some(FailedRow { c, error: e.to_string() });
                break;
            }
        };
        let (guess, omega0) = match &warm {
            Some((u, offset)) => (u.clone(), m * c * c + offset),
            None => initial_guess(&nlse, m, c),
        };
        match solve_nlde(&op, p, &guess, omega0, &NldeParams::default()) {
            Ok(sol) => {
                let mc2 = m * c * c;
                let diff = u1_minus_g(&sol.u, &nlse.g);
                let h1_diff = {
                    let l2 = diff.norm(crate::field::NormKind::L2, crate::field::Region::Graph);
                    let grads = mesh.gradient_mids(diff.values());
                    let d2: f64 = grads
                        .iter()
                        .enumerate()
                        .map(|(j, g)| g * g * mesh.mid_weight(j))
                        .sum();
                    (l2 * l2 + d2).sqrt()
                };
                rows.push(SweepRow {
                    c,
                    omega: sol.omega,
                    omega_minus_mc2: sol.omega - mc2,
                    l2_u2: sol.u.comp2_l2(),
                    h1_u2: sol.u.comp2_h1(),
                    h1_u1_minus_g: h1_diff,
                    action: sol.action,
                    residual: sol.residual,
                    newton_iters: sol.newton_iterations,
                });
                warm = Some((sol.u, sol.omega - mc2));
            }
            Err(e) => {
                failed = Some(FailedRow { c, error: e.to_string() });
                break;
            }
        }
    }
    rows.sort_by(|a, b| a.c.partial_cmp(&b.c).unwrap());
    let h1_u2_slope = fit_rate(
        &rows.iter().map(|r| (r.c, r.h1_u2)).collect::<Vec<_>>(),
    )
    .ok();
    Ok(SweepReport {
        rows,
        failed,
        h1_u2_slope,
        nlse_lambda: nlse.lambda,
        nlse_energy: nlse.energy,
        nlse_route: nlse.route,
        limit_offset: nlse.lambda / (2.0 * m),
        m: config.m,
        p: config.p,
    })
}

/// Real first component minus the reference scalar, sign-aligned.
fn u1_minus_g(u: &crate::field::SpinorField, g: &ScalarField) -> ScalarField {
    let mesh = g.mesh().clone();
    let dot: f64 = u
        .comp1()
        .iter()
        .zip(g.values())
        .enumerate()
        .map(|(i, (a, b))| a.re * b * mesh.node_weight(i))
        .sum();
    let sign = if dot < 0.0 { -1.0 } else { 1.0 };
    let vals: Vec<f64> =
        u.comp1().iter().zip(g.values()).map(|(a, b)| sign * a.re - b).collect();
    ScalarField::from_values(&mesh, vals)
}

fn fmt(v: f64) -> String {
    // 17 significant digits: round-trips f64 bit-exactly
    format!("{v:.16e}")
}

/// The exact CSV column header, one row per c.
pub const CSV_HEADER: &str =
    "c,omega,omega_minus_mc2,l2_u2,h1_u2,h1_u1_minus_g,action,residual,newton_iters";

pub fn csv_text(report: &SweepReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt(r.c),
            fmt(r.omega),
            fmt(r.omega_minus_mc2),
            fmt(r.l2_u2),
            fmt(r.h1_u2),
            fmt(r.h1_u1_minus_g),
            fmt(r.action),
            fmt(r.residual),
            r.newton_iters
        ));
    }
    out
}

/// Sidecar manifest: config echo, versions, wall clock, tolerances, status.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SweepConfig,
    pub crate_version: String,
    pub wall_clock_seconds: f64,
    pub newton_tolerance: f64,
    pub flow_energy_tolerance: f64,
    pub nlse_sign_convention: String,
    pub nlse_lambda: f64,
    pub nlse_energy: f64,
    pub nlse_route: String,
    pub limit_offset: f64,
    pub h1_u2_slope: Option<f64>,
    pub rows_written: usize,
    pub failed_row: Option<(f64, String)>,
    pub status: String,
}

/// Write CSV + manifest + plot script into `config.out_dir`.
pub fn emit_report(
    report: &SweepReport,
    config: &SweepConfig,
    wall_clock_seconds: f64,
    dir: &Path,
) -> Result<(), ReportError> {
    let werr = |path: &Path, source: std::io::Error| ReportError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| werr(dir, e))?;
    let csv_path = dir.join("sweep.csv");
    std::fs::write(&csv_path, csv_text(report)).map_err(|e| werr(&csv_path, e))?;

    let manifest = Manifest {
        config: config.clone(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds,
        newton_tolerance: NldeParams::default().newton_tol,
        flow_energy_tolerance: NlseOptions::default().flow_energy_tol,
        nlse_sign_convention: NLSE_SIGN_CONVENTION.to_string(),
        nlse_lambda: report.nlse_lambda,
        nlse_energy: report.nlse_energy,
        nlse_route: format!("{:?}", report.nlse_route),
        limit_offset: report.limit_offset,
        h1_u2_slope: report.h1_u2_slope,
        rows_written: report.rows.len(),
        failed_row: report.failed.as_ref().map(|f| (f.c, f.error.clone())),
        status: if report.failed.is_none() { "ok".into() } else { "failed".into() },
    };
    let man_path = dir.join("manifest.json");
    std::fs::write(&man_path, serde_json::to_string_pretty(&manifest).expect("serializes"))
        .map_err(|e| werr(&man_path, e))?;

    let plot_path = dir.join("plot_sweep.gnuplot");
    let plot = "\
# gnuplot script for the sweep CSV
set datafile separator ','
set key autotitle columnhead
set logscale x
set logscale y
set xlabel 'c'
set ylabel 'second-component norms'
plot 'sweep.csv' using 1:4 with linespoints, \\
     'sweep.csv' using 1:5 with linespoints
pause -1
";
    std::fs::write(&plot_path, plot).map_err(|e| werr(&plot_path, e))?;
    Ok(())
}

/// Parse a CSV produced by [`emit_report`] back into numeric rows.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, ReportError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(ReportError::InsufficientData);
        }
        let f = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
        rows.push(SweepRow {
            c: f(cols[0]),
            omega: f(cols[1]),
            omega_minus_mc2: f(cols[2]),
            l2_u2: f(cols[3]),
            h1_u2: f(cols[4]),
            h1_u1_minus_g: f(cols[5]),
            action: f(cols[6]),
            residual: f(cols[7]),
            newton_iters: cols[8].trim().parse().unwrap_or(0),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_rate_exact_power_laws() {
        let xs = [3.0, 7.0, 11.0, 19.0];
        let inv: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 1.0 / x)).collect();
        let s = fit_rate(&inv).unwrap();
        assert!((s + 1.0).abs() < 1e-10, "slope {s}");
        let flat: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 7.0)).collect();
        let s = fit_rate(&flat).unwrap();
        assert!(s.abs() < 1e-10, "slope {s}");
        assert!(matches!(fit_rate(&inv[..2]), Err(ReportError::InsufficientData)));
        assert!(matches!(
            fit_rate(&[(1.0, 1.0), (2.0, -0.5), (3.0, 1.0)]),
            Err(ReportError::InsufficientData)
        ));
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let report = SweepReport {
            rows: vec![SweepRow {
                c: 10.0,
                omega: 99.861234567890123,
                omega_minus_mc2: -0.138765432109877,
                l2_u2: 1.234e-2,
                h1_u2: 5.678e-2,
                h1_u1_minus_g: 3.21e-4,
                action: 50.01,
                residual: 8.8e-13,
                newton_iters: 4,
            }],
            failed: None,
            h1_u2_slope: Some(-1.0),
            nlse_lambda: -0.2775,
            nlse_energy: -0.0587,
            nlse_route: SolveRoute::Flow,
            limit_offset: -0.13875,
            m: 1.0,
            p: 3.0,
        };
        let text = csv_text(&report);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 9);
        let rows = parse_csv(&text).unwrap();
        let a = &report.rows[0];
        let b = &rows[0];
        assert_eq!(a.c.to_bits(), b.c.to_bits());
        assert_eq!(a.omega.to_bits(), b.omega.to_bits());
        assert_eq!(a.omega_minus_mc2.to_bits(), b.omega_minus_mc2.to_bits());
        assert_eq!(a.residual.to_bits(), b.residual.to_bits());
        assert_eq!(a.newton_iters, b.newton_iters);
    }

    #[test]
    fn empty_sweep_rejected() {
        let g = crate::graph::line_graph(1.0);
        let config = SweepConfig {
            graph: "line".into(),
            m: 1.0,
            p: 3.0,
            c_list: vec![],
            h: 0.1,
            trunc_length: 4.0,
            seed: 0,
            out_dir: ".".into(),
        };
        assert!(matches!(run_sweep(&g, &config), Err(ReportError::EmptySweep)));
    }
}
