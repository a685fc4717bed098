//! Run orchestration and the on-disk formats: `trace.csv`,
//! `snapshots.csv`, `summary.json`, `compare.json` and the config echo.
//!
//! Floating-point CSV fields are printed with 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{parse_config, to_config_string, RawConfig};
use crate::coupler::{RunConfig, SimState, Solver, StepRecord, Trajectory};
use crate::diagnostics::{defect_proxy, gronwall_check, rel_energy_series, DefectProxy, GronwallFit, RelEnergyRecord};
use crate::eos::EosParams;
use crate::error::{Error, Result};
use crate::reference::fine_reference;

pub const TRACE_SCHEMA: &str = "bifluid-trace/1";
pub const SNAPSHOT_SCHEMA: &str = "bifluid-snapshots/1";
pub const SUMMARY_SCHEMA: &str = "bifluid-summary/1";
pub const COMPARE_SCHEMA: &str = "bifluid-compare/1";

pub const TRACE_FILE: &str = "trace.csv";
pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_ECHO_FILE: &str = "config.echo";
pub const COMPARE_FILE: &str = "compare.json";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column names of `trace.csv`; `rel_energy` is present only when a
/// reference is attached.
pub fn trace_columns(with_reference: bool) -> Vec<&'static str> {
    let mut cols = vec![
        "t",
        "mass_R",
        "mass_Z",
        "kinetic",
        "helmholtz",
        "dissipation_cum",
        "residual_E7",
        "min_R",
        "max_R",
        "min_Z",
        "max_Z",
        "cone_margin_low",
        "cone_margin_high",
        "picard_iters",
    ];
    if with_reference {
        cols.push("rel_energy");
    }
    cols.extend(["residual_E7_aux", "mass_res_R", "mass_res_Z"]);
    cols
}

fn trace_row(rec: &StepRecord, with_reference: bool) -> String {
    let mut f: Vec<String> = [
        rec.t,
        rec.mass_r,
        rec.mass_z,
        rec.kinetic,
        rec.helmholtz,
        rec.dissipation_cum,
        rec.residual_e7,
        rec.min_r,
        rec.max_r,
        rec.min_z,
        rec.max_z,
        rec.cone_margin_low,
        rec.cone_margin_high,
    ]
    .iter()
    .map(|x| fmt_f64(*x))
    .collect();
    f.push(rec.picard_iters.to_string());
    if with_reference {
        f.push(fmt_f64(rec.rel_energy.unwrap_or(f64::NAN)));
    }
    for x in [rec.residual_e7_aux, rec.mass_res_r, rec.mass_res_z] {
        f.push(fmt_f64(x));
    }
    f.join(",")
}

/// Rows at the output cadence (the records whose times match a snapshot).
pub fn write_trace(path: &Path, traj: &Trajectory, with_reference: bool) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("#schema={TRACE_SCHEMA}\n"));
    out.push_str(&trace_columns(with_reference).join(","));
    out.push('\n');
    for rec in cadence_records(traj) {
        out.push_str(&trace_row(rec, with_reference));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn cadence_records(traj: &Trajectory) -> impl Iterator<Item = &StepRecord> {
    let mut j = 0;
    traj.records.iter().filter(move |r| {
        while j < traj.snapshots.len() && traj.snapshots[j].t < r.t {
            j += 1;
        }
        j < traj.snapshots.len() && traj.snapshots[j].t == r.t
    })
}

pub fn write_snapshots(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "#schema={SNAPSHOT_SCHEMA}")?;
    writeln!(out, "t,i,R,Z,u")?;
    for s in &traj.snapshots {
        for i in 0..s.r.len() {
            writeln!(
                out,
                "{},{i},{},{},{}",
                fmt_f64(s.t),
                fmt_f64(s.r[i]),
                fmt_f64(s.z[i]),
                fmt_f64(s.u[i])
            )?;
        }
    }
    Ok(())
}

/// Reads `snapshots.csv`; `v` is left empty.
pub fn read_snapshots(path: &Path, dt: f64) -> Result<Trajectory> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let schema = lines.next().unwrap_or("");
    if schema != format!("#schema={SNAPSHOT_SCHEMA}") {
        return Err(Error::Format(format!("{}: unexpected schema line '{schema}'", path.display())));
    }
    if lines.next() != Some("t,i,R,Z,u") {
        return Err(Error::Format(format!("{}: unexpected header", path.display())));
    }
    let mut snapshots: Vec<SimState> = Vec::new();
    for (n, line) in lines.enumerate() {
        let bad = || Error::Format(format!("{}: malformed row {}", path.display(), n + 3));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let t = num(f[0])?;
        let i: usize = f[1].parse().map_err(|_| bad())?;
        if i == 0 {
            snapshots.push(SimState {
                t,
                r: Vec::new(),
                z: Vec::new(),
                v: Vec::new(),
                u: Vec::new(),
            });
        }
        let s = snapshots.last_mut().ok_or_else(bad)?;
        if s.t != t || s.r.len() != i {
            return Err(bad());
        }
        s.r.push(num(f[2])?);
        s.z.push(num(f[3])?);
        s.u.push(num(f[4])?);
    }
    let n_cells = snapshots.first().map(|s| s.r.len()).unwrap_or(0);
    if n_cells == 0 || snapshots.iter().any(|s| s.r.len() != n_cells) {
        return Err(Error::Format(format!("{}: ragged or empty snapshots", path.display())));
    }
    Ok(Trajectory {
        dt,
        n_cells,
        snapshots,
        records: Vec::new(),
    })
}

/// Extremes of the defect proxies over all snapshots for one factor.
fn defect_summary(k: usize, proxies: &[DefectProxy]) -> Value {
    let fold = |f: &dyn Fn(&DefectProxy) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        proxies.iter().map(f).fold(init, pick)
    };
    json!({
        "k": k,
        "min_gap": fold(&|p| p.min_gap, f64::INFINITY, f64::min),
        "max_delta_p": fold(&|p| p.delta_p, f64::NEG_INFINITY, f64::max),
        "max_delta_h": fold(&|p| p.delta_h, f64::NEG_INFINITY, f64::max),
        "max_delta_kinetic": fold(&|p| p.delta_kinetic, f64::NEG_INFINITY, f64::max),
        "max_sandwich_excess": fold(&|p| p.sandwich_excess, f64::NEG_INFINITY, f64::max),
        "max_trace_excess": fold(&|p| p.trace_excess, f64::NEG_INFINITY, f64::max),
        "max_trace_excess_1d": fold(&|p| p.trace_excess_1d, f64::NEG_INFINITY, f64::max),
        "trace_ratio_low": fold(&|p| p.trace_ratio_low, f64::INFINITY, f64::min),
        "trace_ratio_high": fold(&|p| p.trace_ratio_high, f64::NEG_INFINITY, f64::max),
    })
}

fn gronwall_json(fit: &GronwallFit) -> Value {
    json!({
        "c_fit": fit.c_fit,
        "c_max": fit.c_max,
        "value0": fit.value0,
        "max_value": fit.max_value,
        "pass": fit.pass,
    })
}

/// Everything `run` produces in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub rel_energy: Option<Vec<RelEnergyRecord>>,
    pub gronwall: Option<GronwallFit>,
    pub defects: Vec<(usize, Vec<DefectProxy>)>,
    pub summary: Value,
}

fn fold_records(traj: &Trajectory, f: impl Fn(&StepRecord) -> f64, max: bool) -> f64 {
    let init = if max { f64::NEG_INFINITY } else { f64::INFINITY };
    traj.records
        .iter()
        .map(f)
        .fold(init, |a, b| if max { a.max(b) } else { a.min(b) })
}

fn summary_json(cfg: &RunConfig, traj: &Trajectory, gronwall: Option<&GronwallFit>, defects: &[(usize, Vec<DefectProxy>)]) -> Value {
    let last = traj.records.last().expect("initial record");
    json!({
        "schema": SUMMARY_SCHEMA,
        "status": "ok",
        "exit_code": 0,
        "error": Value::Null,
        "n_cells": cfg.n_cells,
        "n_modes": cfg.n_modes,
        "dt": cfg.dt,
        "steps": traj.records.len() - 1,
        "t_final": last.t,
        "final": {
            "kinetic": last.kinetic,
            "helmholtz": last.helmholtz,
            "mass_R": last.mass_r,
            "mass_Z": last.mass_z,
            "dissipation_cum": last.dissipation_cum,
        },
        "max_residual_E7": fold_records(traj, |r| r.residual_e7, true),
        "max_residual_E7_aux": fold_records(traj, |r| r.residual_e7_aux, true),
        "max_mass_residual_R": fold_records(traj, |r| r.mass_res_r, true),
        "max_mass_residual_Z": fold_records(traj, |r| r.mass_res_z, true),
        "max_picard_iters": traj.records.iter().map(|r| r.picard_iters).max().unwrap_or(0),
        "min_R": fold_records(traj, |r| r.min_r, false),
        "max_R": fold_records(traj, |r| r.max_r, true),
        "min_Z": fold_records(traj, |r| r.min_z, false),
        "max_Z": fold_records(traj, |r| r.max_z, true),
        "min_cone_margin_low": fold_records(traj, |r| r.cone_margin_low, false),
        "min_cone_margin_high": fold_records(traj, |r| r.cone_margin_high, false),
        "gronwall": gronwall.map(gronwall_json).unwrap_or(Value::Null),
        "defect": defects.iter().map(|(k, p)| defect_summary(*k, p)).collect::<Vec<_>>(),
    })
}

/// Error form of `summary.json`.
pub fn error_json(err: &Error) -> Value {
    let t = match err {
        Error::AtTime { t, .. } => json!(t),
        _ => Value::Null,
    };
    let residuals = match err.root() {
        Error::NonConvergence { residuals } => json!(residuals),
        _ => Value::Null,
    };
    json!({
        "schema": SUMMARY_SCHEMA,
        "status": "error",
        "exit_code": err.exit_code(),
        "error": {
            "kind": err.root().kind(),
            "message": err.to_string(),
            "t": t,
            "residuals": residuals,
        },
    })
}

pub fn to_pretty_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Runs the coupler, the optional fine reference and the defect proxies
/// without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    let solver = Solver::new(cfg)?;
    let mut trajectory = solver.run()?;
    let (rel_energy, gronwall) = match cfg.reference_refine {
        Some(k) => {
            let fine = fine_reference(cfg, k)?;
            let mut series = rel_energy_series(&trajectory, &fine, &cfg.eos)?;
            let fit = gronwall_check(&mut series, cfg.gronwall_c_max);
            for rec in trajectory.records.iter_mut() {
                if let Some(s) = series.iter().find(|s| s.t == rec.t) {
                    rec.rel_energy = Some(s.value);
                }
            }
            (Some(series), Some(fit))
        }
        None => (None, None),
    };
    let mut defects = Vec::new();
    for &k in &cfg.coarsen {
        if cfg.n_cells % k == 0 {
            defects.push((k, defect_proxy(&trajectory, k, &cfg.eos)?));
        }
    }
    let summary = summary_json(cfg, &trajectory, gronwall.as_ref(), &defects);
    Ok(RunOutput {
        trajectory,
        rel_energy,
        gronwall,
        defects,
        summary,
    })
}

/// `execute` plus all output files in `cfg.output_dir`. On failure the
/// error form of `summary.json` is written before the error is returned.
pub fn run_to_dir(cfg: &RunConfig) -> Result<RunOutput> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_ECHO_FILE), to_config_string(cfg))?;
    match execute(cfg) {
        Ok(out) => {
            let with_ref = out.rel_energy.is_some();
            write_trace(&dir.join(TRACE_FILE), &out.trajectory, with_ref)?;
            write_snapshots(&dir.join(SNAPSHOT_FILE), &out.trajectory)?;
            fs::write(dir.join(SUMMARY_FILE), to_pretty_json(&out.summary))?;
            Ok(out)
        }
        Err(e) => {
            fs::write(dir.join(SUMMARY_FILE), to_pretty_json(&error_json(&e)))?;
            Err(e)
        }
    }
}

fn load_run(dir: &Path) -> Result<(RunConfig, Trajectory)> {
    let cfg = parse_config(&dir.join(CONFIG_ECHO_FILE))?;
    let traj = read_snapshots(&dir.join(SNAPSHOT_FILE), cfg.dt)?;
    Ok((cfg, traj))
}

/// Relative energy of the coarse run against the restricted fine run,
/// Gronwall fit and defect proxies of the fine run; the result is also
/// written to `<coarse>/compare.json`.
pub fn compare_dirs(coarse: &Path, fine: &Path) -> Result<Value> {
    let (ccfg, ctraj) = load_run(coarse)?;
    let (_, ftraj) = load_run(fine)?;
    let eos: EosParams = ccfg.eos;
    let mut series = rel_energy_series(&ctraj, &ftraj, &eos)?;
    let fit = gronwall_check(&mut series, ccfg.gronwall_c_max);
    let mut defects = Vec::new();
    for &k in &ccfg.coarsen {
        if ftraj.n_cells % k == 0 {
            defects.push(defect_summary(k, &defect_proxy(&ftraj, k, &eos)?));
        }
    }
    let out = json!({
        "schema": COMPARE_SCHEMA,
        "coarse_cells": ctraj.n_cells,
        "fine_cells": ftraj.n_cells,
        "rel_energy": series,
        "gronwall": gronwall_json(&fit),
        "defect": defects,
    });
    fs::write(coarse.join(COMPARE_FILE), to_pretty_json(&out))?;
    Ok(out)
}

/// Outcome of one sweep member.
#[derive(Debug)]
pub struct SweepResult {
    pub value: String,
    pub dir: PathBuf,
    pub result: Result<()>,
}

/// One run per value of `key`, concurrently, each in
/// `<output.dir>/<key>=<value>`. Config errors for any value abort the
/// whole sweep before anything runs.
pub fn sweep(raw: &RawConfig, key: &str, values: &[String]) -> Result<Vec<SweepResult>> {
    if values.is_empty() {
        return Err(Error::Validation(vec![format!("sweep over {key} needs at least one value")]));
    }
    let base = PathBuf::from(raw.get("output.dir").unwrap_or(crate::coupler::DEFAULT_OUTPUT_DIR));
    let mut cfgs = Vec::with_capacity(values.len());
    for v in values {
        let mut r = raw.clone();
        r.set(key, v)?;
        let dir = base.join(format!("{key}={v}"));
        r.set("output.dir", &dir.to_string_lossy())?;
        cfgs.push((v.clone(), dir, r.into_config()?));
    }
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = cfgs
            .iter()
            .map(|(_, _, cfg)| s.spawn(move || run_to_dir(cfg).map(|_| ())))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Solver("sweep worker panicked".into()))))
            .collect::<Vec<_>>()
    });
    Ok(cfgs
        .into_iter()
        .zip(results)
        .map(|((value, dir, _), result)| SweepResult { value, dir, result })
        .collect())
}
