//! Subcommand pipelines, result files and the on-disk cache.
//!
//! Each run writes into `<output>/<command>-<hash>/`. The directory is
//! assembled under a temporary name and renamed into place, so a directory
//! that exists is complete. `result.json` in it is the [`ResultRecord`].

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{RunConfig, VERSION};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::normal_form::{hopf_orbit, NormalFormData};
use crate::spectral::{find_ic, leading_eigenpairs_with, track_branches, Operator, TrackOptions};
use crate::tdgl::{detect_vortices, run, track_vortices, Simulator, VortexSnapshot};
use crate::validate::{crosscheck, CrosscheckOptions};
use crate::vortex_law::{
    assign_degrees, classify_scenario_with, critical_points, extract_beta, predict_vortices,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    IcFind,
    NormalForm,
    Beta,
    Predict,
    Simulate,
    Sweep,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::IcFind => "ic-find",
            Command::NormalForm => "normal-form",
            Command::Beta => "beta",
            Command::Predict => "predict",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n4: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub version: String,
    pub command: Command,
    /// File names relative to the run directory.
    pub payloads: Vec<String>,
    pub summary: Summary,
    /// `false` when `validate` found a mismatch.
    pub passed: bool,
}

/// Outcome of [`run_command`].
#[derive(Debug)]
pub struct Outcome {
    pub record: ResultRecord,
    pub dir: PathBuf,
    pub cached: bool,
}

/// Files of one run, collected in memory before the atomic write.
struct Payload {
    hash: String,
    files: Vec<(String, Vec<u8>)>,
}

impl Payload {
    fn header(&self) -> String {
        format!("# vortexlab {VERSION} config {}\n", self.hash)
    }

    fn csv(&mut self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
        let mut s = self.header();
        s.push_str(&columns.join(","));
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        self.files.push((name.to_string(), s.into_bytes()));
    }

    fn json(&mut self, name: &str, body: Value) {
        let v = json!({ "config_hash": self.hash, "version": VERSION, "data": body });
        let mut s = serde_json::to_string_pretty(&v).expect("json serializes");
        s.push('\n');
        self.files.push((name.to_string(), s.into_bytes()));
    }

    /// Raw little-endian `(re, im)` pairs, row-major in `y`, with a JSON sidecar.
    fn field(&mut self, name: &str, grid: &Grid, u: &ComplexField) {
        let mut bytes = Vec::with_capacity(16 * grid.len());
        for v in u.values() {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        self.files.push((format!("{name}.field"), bytes));
        self.json(
            &format!("{name}.field.json"),
            json!({
                "nx": grid.nx(),
                "ny": grid.ny(),
                "L": grid.half_width(),
                "K": grid.half_height(),
                "dtype": "complex128-le",
                "layout": "index = j * nx + i, x = -L + i dx, y = -K + j dy",
            }),
        );
    }
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn operator(cfg: &RunConfig) -> Result<Operator> {
    Operator::new(&cfg.params(), cfg.nx, cfg.ny)
}

fn normal_form(cfg: &RunConfig, op: &Operator) -> Result<NormalFormData> {
    NormalFormData::compute(op, &cfg.eigen_options())
}

fn spectrum(cfg: &RunConfig, out: &mut Payload, sum: &mut Summary) -> Result<()> {
    match &cfg.sweep {
        Some(axis) => {
            let opts = TrackOptions { k: cfg.eigs, eig: cfg.eigen_options(), ..TrackOptions::default() };
            let sweep = track_branches(axis.param.sweep_param(), &axis.values(), &cfg.params(), cfg.nx, cfg.ny, &opts)?;
            let mut rows = Vec::new();
            for (v, pts) in sweep.values.iter().zip(&sweep.points) {
                for (k, p) in pts.iter().enumerate() {
                    rows.push(vec![num(*v), (k + 1).to_string(), p.branch.to_string(), num(p.lambda.re), num(p.lambda.im)]);
                }
            }
            out.csv("spectrum.csv", &["value", "index", "branch", "re", "im"], rows);
            out.json("events.json", json!({ "param": sweep.param, "events": sweep.events }));
        }
        None => {
            let op = operator(cfg)?;
            let pairs = leading_eigenpairs_with(&op, cfg.eigs, &cfg.eigen_options(), &[])?;
            sum.lambda1 = Some(pairs[0].lambda);
            let rows = pairs
                .iter()
                .enumerate()
                .map(|(k, p)| vec![(k + 1).to_string(), num(p.lambda.re), num(p.lambda.im)]);
            out.csv("spectrum.csv", &["index", "re", "im"], rows);
        }
    }
    Ok(())
}

fn ic_find(cfg: &RunConfig, out: &mut Payload, sum: &mut Summary) -> Result<()> {
    let r = find_ic(&cfg.params(), cfg.nx, cfg.ny, (cfg.ic_lo, cfg.ic_hi), &cfg.eigen_options())?;
    sum.ic = Some(r.ic);
    out.json("ic.json", serde_json::to_value(&r).expect("serializes"));
    Ok(())
}

fn normal_form_cmd(cfg: &RunConfig, out: &mut Payload, sum: &mut Summary) -> Result<()> {
    let op = operator(cfg)?;
    let nf = normal_form(cfg, &op)?;
    sum.lambda1 = Some(nf.lambda1);
    sum.n4 = Some(nf.n4);
    sum.gamma = Some(nf.gamma_ratio);
    let orbit = hopf_orbit(&nf, cfg.eps * nf.lambda1.re).ok();
    sum.period = orbit.map(|o| o.period);
    out.json(
        "normal_form.json",
        json!({
            "lambda1": nf.lambda1,
            "n4": nf.n4,
            "gamma": nf.gamma_ratio,
            "pairing": nf.pairing,
            "supercritical": nf.supercritical,
            "orbit": orbit,
        }),
    );
    out.field("u1", op.grid(), &nf.u1);
    Ok(())
}

fn beta_cmd(cfg: &RunConfig, out: &mut Payload, sum: &mut Summary) -> Result<()> {
    let op = operator(cfg)?;
    let nf = normal_form(cfg, &op)?;
    let beta = extract_beta(op.grid(), &nf.u1)?;
    let scenario = classify_scenario_with(&beta, cfg.prominence);
    sum.lambda1 = Some(nf.lambda1);
    sum.scenario = Some(scenario.to_string());
    let rows = (0..beta.len()).map(|j| {
        vec![num(beta.y[j]), num(beta.beta[j]), num(beta.g[j]), (beta.unreliable[j] as u8).to_string()]
    });
    out.csv("beta.csv", &["y", "beta", "g", "unreliable"], rows);
    out.json(
        "beta.json",
        json!({
            "scenario": scenario,
            "critical_points": critical_points(&beta, cfg.prominence),
            "boundary_slopes": beta.boundary_slopes(),
        }),
    );
    Ok(())
}

fn predict_cmd(cfg: &RunConfig, out: &mut Payload, sum: &mut Summary) -> Result<()> {
    let op = operator(cfg)?;
    let grid = op.grid();
    let nf = normal_form(cfg, &op)?;
    let orbit = hopf_orbit(&nf, cfg.eps * nf.lambda1.re)?;
    let beta = extract_beta(grid, &nf.u1)?;
    let mut pred = predict_vortices(&beta, orbit.chi, (0.0, cfg.periods * orbit.period))?;
    assign_degrees(&mut pred, grid, &nf.u1.scaled(Complex64::new(1.0, 0.0) / beta.scale));
    sum.lambda1 = Some(nf.lambda1);
    sum.n4 = Some(nf.n4);
    sum.gamma = Some(nf.gamma_ratio);
    sum.period = Some(orbit.period);
    sum.scenario = Some(classify_scenario_with(&beta, cfg.prominence).to_string());
    let mut rows = Vec::new();
    for (k, tr) in pred.tracks.iter().enumerate() {
        for &(t, y) in &tr.points {
            rows.push(vec![k.to_string(), tr.n.to_string(), tr.degree.to_string(), num(t), num(y)]);
        }
    }
    out.csv("tracks.csv", &["track", "n", "degree", "t", "y"], rows);
    out.json("events.json", json!({ "chi": pred.chi, "events": pred.events }));
    Ok(())
}

fn simulate_cmd(cfg: &RunConfig, out: &mut Payload, sum: &mut Summary) -> Result<()> {
    let op = operator(cfg)?;
    let grid = op.grid().clone();
    let nf = normal_form(cfg, &op)?;
    let orbit = hopf_orbit(&nf, cfg.eps * nf.lambda1.re)?;
    let dt = cfg.dt.unwrap_or_else(|| crate::tdgl::default_dt(&grid).min(orbit.period / 200.0));
    let params = cfg.params().with_gamma(nf.lambda1.re + orbit.eps);
    let sim = Simulator::from_operator(op.with_params(&params)?, dt)?;
    let a0 = Complex64::new(orbit.amplitude, 0.0);
    let psi0 = &nf.u1.scaled(a0) + &nf.u2(&grid).scaled(a0.conj());
    let t_record = cfg.settle * orbit.period;
    let t_end = t_record + cfg.periods * orbit.period;
    let stride = ((orbit.period / 256.0) / dt).floor().max(1.0) as usize;
    let mut snaps: Vec<VortexSnapshot> = Vec::new();
    let (last, rec) = run(&sim, &psi0, t_end, stride, &[0.0], |s| {
        if s.t >= t_record - 1e-9 {
            let mut snap = detect_vortices(&grid, &s.psi, 0.5);
            snap.t = s.t;
            snaps.push(snap);
        }
    })?;
    let tracks = track_vortices(&grid, &snaps)?;
    sum.lambda1 = Some(nf.lambda1);
    sum.period = Some(orbit.period);
    let rows = (0..rec.t.len()).filter(|&k| rec.t[k] >= t_record - 1e-9).map(|k| {
        let p = rec.probes[k][0];
        vec![num(rec.t[k]), num(rec.max_abs[k]), rec.total_degree[k].to_string(), num(p.re), num(p.im)]
    });
    out.csv("timeseries.csv", &["t", "max_abs", "total_degree", "probe_re", "probe_im"], rows);
    let mut vrows = Vec::new();
    for s in &snaps {
        for v in &s.vortices {
            vrows.push(vec![num(s.t), num(v.x), num(v.y), v.degree.to_string()]);
        }
    }
    out.csv("vortices.csv", &["t", "x", "y", "degree"], vrows);
    out.json(
        "tracks.json",
        json!({
            "dt": dt,
            "gamma": params.gamma,
            "orbit": orbit,
            "max_coexisting": snaps.iter().map(|s| s.vortices.len()).max().unwrap_or(0),
            "tracks": tracks.tracks.iter().map(|t| json!({
                "degree": t.degree,
                "start": t.points[0],
                "end": t.points[t.points.len() - 1],
                "excursion": t.excursion(),
            })).collect::<Vec<_>>(),
            "events": tracks.events,
        }),
    );
    out.field("psi_final", &grid, &last.psi);
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    lambda1: Option<Complex64>,
    n4: Option<Complex64>,
    gamma: Option<f64>,
    scenario: Option<String>,
    error: Option<String>,
}

fn sweep_point(cfg: &RunConfig, value: f64) -> SweepRow {
    let axis = cfg.sweep.expect("checked by caller");
    let mut c = cfg.clone();
    match axis.param {
        crate::config::AxisName::I => c.current = value,
        crate::config::AxisName::H => c.h = value,
    }
    let mut row = SweepRow { value, lambda1: None, n4: None, gamma: None, scenario: None, error: None };
    let r = (|| -> Result<()> {
        let op = operator(&c)?;
        let pairs = leading_eigenpairs_with(&op, 2, &c.eigen_options(), &[])?;
        row.lambda1 = Some(pairs[0].lambda);
        let nf = NormalFormData::from_u1(&op, pairs[0].lambda, pairs[0].u.clone())?;
        row.n4 = Some(nf.n4);
        row.gamma = Some(nf.gamma_ratio);
        let beta = extract_beta(op.grid(), &nf.u1)?;
        row.scenario = Some(classify_scenario_with(&beta, c.prominence).to_string());
        Ok(())
    })();
    if let Err(e) = r {
        row.error = Some(e.to_string());
    }
    row
}

fn sweep_cmd(cfg: &RunConfig, out: &mut Payload, _sum: &mut Summary) -> Result<()> {
    let axis = cfg.sweep.ok_or_else(|| Error::param("sweep", "the sweep command needs a [sweep] table"))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let values = axis.values();
    let rows: Vec<SweepRow> = pool.install(|| values.par_iter().map(|&v| sweep_point(cfg, v)).collect());
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let csv = rows.iter().map(|r| {
        vec![
            num(r.value),
            opt(r.lambda1.map(|l| l.re)),
            opt(r.lambda1.map(|l| l.im)),
            opt(r.n4.map(|l| l.re)),
            opt(r.n4.map(|l| l.im)),
            opt(r.gamma),
            r.scenario.clone().unwrap_or_default(),
        ]
    });
    out.csv("sweep.csv", &["value", "lambda1_re", "lambda1_im", "n4_re", "n4_im", "gamma", "scenario"], csv);
    out.json("sweep.json", json!({ "param": axis.param, "points": rows }));
    Ok(())
}

/// Amplitude and frequency within 5 %, center-line RMS within 2 cells.
fn validate_cmd(cfg: &RunConfig, out: &mut Payload, sum: &mut Summary) -> Result<bool> {
    let op = operator(cfg)?;
    let nf = normal_form(cfg, &op)?;
    let opts = CrosscheckOptions {
        eps_frac: cfg.eps,
        dt: cfg.dt,
        settle_periods: cfg.settle,
        measure_periods: cfg.periods.max(1.0),
        start_fraction: 1.0,
    };
    let c = crosscheck(&op, &nf, &opts)?;
    let amp_err = (c.amplitude - c.orbit.amplitude).abs() / c.orbit.amplitude;
    let chi_err = (c.chi - c.orbit.chi).abs() / c.orbit.chi;
    let passed = amp_err <= 0.05 && chi_err <= 0.05 && c.rms_cells_fitted <= 2.0;
    sum.lambda1 = Some(nf.lambda1);
    sum.n4 = Some(nf.n4);
    sum.gamma = Some(nf.gamma_ratio);
    sum.period = Some(2.0 * std::f64::consts::PI / c.chi);
    let rows = c.crossings.iter().map(|x| {
        vec![num(x.t), num(x.y), num(x.beta_measured), num(x.y_error), num(x.y_error_fitted)]
    });
    out.csv("crossings.csv", &["t", "y", "beta_measured", "y_error", "y_error_fitted"], rows);
    out.json(
        "validate.json",
        json!({
            "passed": passed,
            "eps": c.eps,
            "dt": c.dt,
            "amplitude": { "predicted": c.orbit.amplitude, "measured": c.amplitude, "rel_error": amp_err },
            "chi": { "predicted": c.orbit.chi, "measured": c.chi, "rel_error": chi_err },
            "probe_period": c.probe_period,
            "peak_abs": c.peak_abs,
            "phase_offset": c.phase_offset,
            "rms_cells": c.rms_cells,
            "rms_cells_fitted": c.rms_cells_fitted,
        }),
    );
    Ok(passed)
}

fn result_dir(cfg: &RunConfig, cmd: Command, hash: &str) -> PathBuf {
    cfg.output.join(format!("{}-{hash}", cmd.name()))
}

fn read_record(dir: &Path) -> Option<ResultRecord> {
    let text = fs::read_to_string(dir.join("result.json")).ok()?;
    serde_json::from_str(&text).ok()
}

fn io_error(e: std::io::Error, what: &Path) -> Error {
    Error::Invalid(format!("{}: {e}", what.display()))
}

fn write_atomic(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let parent = dir.parent().expect("result dir has a parent");
    let tmp = parent.join(format!(
        ".tmp-{}-{}",
        dir.file_name().unwrap().to_string_lossy(),
        std::process::id()
    ));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| io_error(e, &tmp))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| io_error(e, &tmp))?;
    for (name, bytes) in files {
        let p = tmp.join(name);
        fs::write(&p, bytes).map_err(|e| io_error(e, &p))?;
    }
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| io_error(e, dir))?;
    }
    fs::rename(&tmp, dir).map_err(|e| io_error(e, dir))
}

/// Runs `cmd`, or returns the cached record when caching is on and a
/// complete result directory for the same hash exists.
///
/// Dense kernels are switched to sequential mode so results do not depend
/// on the number of threads.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    faer::set_global_parallelism(faer::Par::Seq);
    cfg.check_output()?;
    let hash = cfg.hash();
    let dir = result_dir(cfg, cmd, &hash);
    if cfg.cache {
        if let Some(record) = read_record(&dir) {
            log::info!("{} served from cache {}", cmd.name(), dir.display());
            return Ok(Outcome { record, dir, cached: true });
        }
    }
    let mut out = Payload { hash: hash.clone(), files: Vec::new() };
    let mut sum = Summary::default();
    let canonical: Value = serde_json::from_str(&cfg.canonical()).expect("canonical config is json");
    out.json("config.json", canonical);
    let passed = match cmd {
        Command::Spectrum => spectrum(cfg, &mut out, &mut sum).map(|_| true),
        Command::IcFind => ic_find(cfg, &mut out, &mut sum).map(|_| true),
        Command::NormalForm => normal_form_cmd(cfg, &mut out, &mut sum).map(|_| true),
        Command::Beta => beta_cmd(cfg, &mut out, &mut sum).map(|_| true),
        Command::Predict => predict_cmd(cfg, &mut out, &mut sum).map(|_| true),
        Command::Simulate => simulate_cmd(cfg, &mut out, &mut sum).map(|_| true),
        Command::Sweep => sweep_cmd(cfg, &mut out, &mut sum).map(|_| true),
        Command::Validate => validate_cmd(cfg, &mut out, &mut sum),
    }?;
    let mut payloads: Vec<String> = out.files.iter().map(|f| f.0.clone()).collect();
    payloads.sort();
    let record = ResultRecord {
        config_hash: hash,
        version: VERSION.to_string(),
        command: cmd,
        payloads,
        summary: sum,
        passed,
    };
    let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
    text.push('\n');
    out.files.push(("result.json".into(), text.into_bytes()));
    write_atomic(&dir, &out.files)?;
    Ok(Outcome { record, dir, cached: false })
}

/// Exit status for an error: 2 for configuration problems, 3 for solver
/// failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams { .. } | Error::GridTooCoarse(_) => 2,
        _ => 3,
    }
}

/// Machine-readable error report.
pub fn error_json(e: &Error) -> String {
    let kind = format!("{e:?}");
    let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error");
    json!({ "error": kind, "message": e.to_string(), "exit_code": exit_code(e) }).to_string()
}
