//! Command implementations behind the `msh2` binary.
//!
//! Each command takes the problem file bytes plus flags and returns the text
//! to emit, so the binary and the tests share one code path.

pub mod problem;

use std::fmt::Write as _;

use msh2::analysis::analyze;
use msh2::model::validate_assumptions;
use msh2::sim::{simulate_closed_loop, sweep, SweepRow};
use msh2::synthesis::synthesize;
use msh2::{Error, SpectralModel};
use serde_json::json;

use problem::{ControllerFile, ProblemFile};

pub const CSV_HEADER: &str = "param,J_theory,J_sim,ci,ms_stable,rho_ghat,margin";

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Validation(_) | Error::Dimension(_) => EXIT_INPUT,
            Error::Infeasible(_) | Error::Structural(_) => EXIT_INFEASIBLE,
            Error::Factorization { .. } | Error::Unstable { .. } | Error::Numerical(_) => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message,
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Text produced by a command; a nonzero `code` with `Ok` output means the
/// command ran but reports a negative verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub code: i32,
    /// Controller JSON for `--out` on `synthesize`.
    pub artifact: Option<String>,
    /// Diagnostics for stderr.
    pub notes: Vec<String>,
}

impl Output {
    fn ok(text: String) -> Self {
        Output {
            text,
            code: EXIT_OK,
            artifact: None,
            notes: Vec::new(),
        }
    }
}

pub fn parse_problem(bytes: &[u8]) -> CliResult<ProblemFile> {
    serde_json::from_slice(bytes).map_err(|e| input_error(format!("problem file: {e}")))
}

pub fn parse_controller(bytes: &[u8]) -> CliResult<ControllerFile> {
    serde_json::from_slice(bytes).map_err(|e| input_error(format!("controller file: {e}")))
}

/// Twelve significant digits; missing values print as `nan`.
pub fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.11e}"),
        Some(x) if x.is_infinite() => if x > 0.0 { "inf" } else { "-inf" }.to_string(),
        _ => "nan".to_string(),
    }
}

pub fn csv_row(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        num(Some(row.param)),
        num(row.j_theory),
        num(row.j_sim),
        num(row.ci),
        u8::from(row.ms_stable),
        num(row.rho_ghat),
        num(row.margin)
    )
}

pub fn csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_row(row));
        out.push('\n');
    }
    out
}

fn empty_row(param: f64) -> SweepRow {
    SweepRow {
        param,
        j_theory: None,
        j_sim: None,
        ci: None,
        ms_stable: false,
        rho_ghat: None,
        margin: None,
        diverged: 0,
        error: None,
    }
}

pub fn cmd_validate(bytes: &[u8], as_json: bool) -> CliResult<Output> {
    let problem = parse_problem(bytes)?;
    let plant = problem.plant.build()?;
    let noise = problem.noise.channel()?.noise_model()?;
    let spectral = SpectralModel::from_noise(&noise)?;
    let report = validate_assumptions(&plant, &spectral.h)?;
    let code = if report.pass() { EXIT_OK } else { EXIT_INFEASIBLE };
    let checks = [
        ("stabilizable_ab2", report.stabilizable_ab2),
        (
            "no_unit_circle_unobservable_ac1",
            report.no_unit_circle_unobservable_ac1,
        ),
        ("detectable_ac2", report.detectable_ac2),
        ("no_unit_circle_unstabilizable", report.no_unit_circle_unstabilizable),
        ("h_nonzero_at_unstable_poles", report.h_nonzero_at_unstable_poles),
        ("gy_minimum_phase", report.gy_minimum_phase),
        ("c2_psi_full_column_rank", report.c2_psi_full_column_rank),
    ];
    let pairs = |zs: &[msh2::linalg::Complex<f64>]| zs.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
    let text = if as_json {
        let mut value = json!({
            "pass": report.pass(),
            "failures": report.failures(),
            "r1": report.r1,
            "r2": report.r2,
            "unstable_poles": pairs(&report.unstable_poles),
            "zeros": pairs(&report.zeros),
            "margins": report.margins.iter().map(|(k, v)| json!({"check": k, "margin": finite(*v)})).collect::<Vec<_>>(),
            "ambiguous": report.ambiguous,
        });
        for (name, ok) in checks {
            value[name] = json!(ok);
        }
        format!("{}\n", serde_json::to_string_pretty(&value).expect("report serializes"))
    } else {
        let mut s = String::new();
        for (name, ok) in checks {
            let _ = writeln!(s, "{name:<34}{}", if ok { "pass" } else { "FAIL" });
        }
        let degree = |r: Option<usize>| r.map_or("none".to_string(), |v| v.to_string());
        let _ = writeln!(
            s,
            "relative degrees: r1 = {}, r2 = {}",
            degree(report.r1),
            degree(report.r2)
        );
        let _ = writeln!(s, "unstable poles: {}", fmt_complex(&report.unstable_poles));
        for (name, margin) in &report.margins {
            let _ = writeln!(s, "margin {name}: {margin:.3e}");
        }
        for note in &report.ambiguous {
            let _ = writeln!(s, "ambiguous: {note}");
        }
        if report.pass() {
            s.push_str("verdict: pass\n");
        } else {
            let _ = writeln!(s, "verdict: fail: {}", report.failures().join("; "));
        }
        s
    };
    Ok(Output {
        text,
        code,
        artifact: None,
        notes: Vec::new(),
    })
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn fmt_complex(zs: &[msh2::linalg::Complex<f64>]) -> String {
    if zs.is_empty() {
        return "none".into();
    }
    zs.iter()
        .map(|z| {
            if z.im.abs() < 1e-12 {
                format!("{:.6}", z.re)
            } else {
                format!("{:.6}{:+.6}i", z.re, z.im)
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn cmd_synthesize(bytes: &[u8], as_json: bool) -> CliResult<Output> {
    let problem = parse_problem(bytes)?;
    let plant = problem.plant.build()?;
    let noise = problem.noise.channel()?.noise_model()?;
    let res = synthesize(&plant, &noise)?;
    let file = ControllerFile::from_design(&res);
    let artifact = serde_json::to_string_pretty(&file).expect("controller serializes") + "\n";
    let text = if as_json {
        artifact.clone()
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "controller order: {}", res.controller.order());
        let _ = writeln!(s, "J_opt: {}", num(Some(res.j_opt)));
        let _ = writeln!(s, "mare iterations: {}", res.mare.iterations);
        let _ = writeln!(s, "mare residual: {:.3e}", res.mare.residual);
        let _ = writeln!(s, "state-feedback spectral radius: {:.6}", res.mare.closed_loop_radius);
        let _ = writeln!(s, "noise loop margin: {:.6}", res.stability.margin);
        if res.static_feedback {
            s.push_str("static full-state law (observer not needed)\n");
        }
        s
    };
    Ok(Output {
        text,
        code: EXIT_OK,
        artifact: Some(artifact),
        notes: Vec::new(),
    })
}

fn controller_for(problem: &ProblemFile, controller: Option<&[u8]>) -> CliResult<msh2::StateSpace> {
    match controller {
        Some(bytes) => Ok(parse_controller(bytes)?.build()?),
        None => {
            let plant = problem.plant.build()?;
            let noise = problem.noise.channel()?.noise_model()?;
            Ok(synthesize(&plant, &noise)?.controller)
        }
    }
}

/// Exact analysis of `controller` (or of the optimal design when absent) as one CSV row.
pub fn cmd_analyze(bytes: &[u8], controller: Option<&[u8]>) -> CliResult<Output> {
    let problem = parse_problem(bytes)?;
    let plant = problem.plant.build()?;
    let noise = problem.noise.channel()?.noise_model()?;
    let k = controller_for(&problem, controller)?;
    let report = analyze(&plant, &noise, &k)?;
    let mut row = empty_row(problem.param);
    row.j_theory = report.j_h2;
    row.ms_stable = report.ms_stable;
    row.rho_ghat = Some(report.rho);
    row.margin = Some(report.margin);
    Ok(Output::ok(csv(&[row])))
}

pub fn cmd_simulate(bytes: &[u8], controller: Option<&[u8]>, seed: Option<u64>) -> CliResult<Output> {
    let problem = parse_problem(bytes)?;
    let plant = problem.plant.build()?;
    let channel = problem.noise.channel()?;
    let noise = channel.noise_model()?;
    let spec = problem
        .sim
        .as_ref()
        .ok_or_else(|| input_error("simulate needs a sim block".into()))?;
    let cfg = spec.config(channel, seed)?;
    let k = controller_for(&problem, controller)?;
    let mut row = empty_row(problem.param);
    if let Ok(report) = analyze(&plant, &noise, &k) {
        row.j_theory = report.j_h2;
        row.ms_stable = report.ms_stable;
        row.rho_ghat = Some(report.rho);
        row.margin = Some(report.margin);
    }
    let res = simulate_closed_loop(&plant, &k, &cfg)?;
    row.j_sim = Some(res.mean_power_z);
    row.ci = Some(res.ci_halfwidth);
    let mut out = Output::ok(csv(&[row]));
    if res.diverged > 0 {
        out.notes
            .push(format!("{} of {} runs diverged", res.diverged, cfg.runs));
    }
    Ok(out)
}

/// Design and analyze at every grid point; Monte-Carlo columns are filled
/// when the problem has a sim block. Failed points print as `nan` rows.
pub fn cmd_sweep(bytes: &[u8], seed: Option<u64>) -> CliResult<Output> {
    let problem = parse_problem(bytes)?;
    let plant = problem.plant.build()?;
    let spec = problem
        .sweep
        .as_ref()
        .ok_or_else(|| input_error("sweep needs a sweep block".into()))?;
    let grid = spec.grid(&problem.noise)?;
    let cfg = match &problem.sim {
        Some(sim) => Some(sim.config(problem.noise.channel()?, seed)?),
        None => None,
    };
    let rows = sweep(&plant, &grid, cfg.as_ref());
    let mut out = Output::ok(csv(&rows));
    out.notes = sweep_notes(&rows);
    Ok(out)
}

fn sweep_notes(rows: &[SweepRow]) -> Vec<String> {
    rows.iter()
        .filter_map(|r| {
            r.error
                .as_ref()
                .map(|e| format!("param {}: {e}", num(Some(r.param))))
                .or_else(|| {
                    (r.diverged > 0).then(|| format!("param {}: {} runs diverged", num(Some(r.param)), r.diverged))
                })
        })
        .collect()
}
