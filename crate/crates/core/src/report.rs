//! Task execution and reports.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bmap::section_splitting_check;
use crate::config::Config;
use crate::constructions::{
    emit_profile_table, find_taming_t, folded_to_log, lefschetz_local_eta, log_to_folded, thurston_assemble,
    dense_determinant_check, FoldOptions, TamingSearch,
};
use crate::form::BForm;
use crate::geometry::{closedness, cosymplectic_extract, dual_bivector, invert_bivector, log_symplectic_check};
use crate::linalg::{
    blend_acs, is_tame, matrix_rows, real_eigenvalue_report, retract_to_acs, verify_pair_lemma, LinOp, PairMaps,
    SkewForm,
};
use crate::scene::{Category, MatRef, Op, Placed, Scene, SceneError, Task, World};
use crate::topology::{obstruction_a, obstruction_b, surface_log_admissibility, DEFAULT_BOX};

/// Largest `‖J² + I‖_F` accepted from `retract_to_acs`.
const RETRACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Config,
    /// Run only tasks in these categories; empty means all.
    pub categories: Vec<Category>,
    /// Run only these operations; empty means all.
    pub ops: Vec<String>,
    /// Directory for auxiliary files such as profile tables.
    pub out_dir: Option<PathBuf>,
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub name: String,
    pub op: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: Config,
    pub tasks: Vec<TaskReport>,
    pub pass: bool,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Runs the selected tasks in declaration order. Input errors in the scene
/// itself are returned as `Err`; task failures are recorded in the report.
pub fn run(scene: &Scene, opts: &RunOptions) -> Result<Report, SceneError> {
    let start = Instant::now();
    let (mut world, tasks) = scene.resolve()?;
    let mut reports = Vec::new();
    for task in &tasks {
        if !opts.categories.is_empty() && !opts.categories.contains(&task.op.category()) {
            continue;
        }
        if !opts.ops.is_empty() && !opts.ops.iter().any(|o| o == task.op.name()) {
            continue;
        }
        let (status, result, error) = match execute(task, &mut world, opts) {
            Ok((true, v)) => (Status::Pass, v, None),
            Ok((false, v)) => (Status::Fail, v, None),
            Err(e) => (Status::Error, Value::Null, Some(e)),
        };
        reports.push(TaskReport { name: task.name.clone(), op: task.op.name(), status, result, error });
    }
    let exit_code = if reports.iter().any(|r| r.status == Status::Error) {
        1
    } else if reports.iter().any(|r| r.status == Status::Fail) {
        2
    } else {
        0
    };
    Ok(Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: opts.config,
        tasks: reports,
        pass: exit_code == 0,
        exit_code,
        wall_clock_seconds: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

type Outcome = Result<(bool, Value), String>;

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn verdict(found: bool, expect: Option<bool>) -> bool {
    expect.is_none_or(|e| e == found)
}

fn mat(w: &World, r: &MatRef) -> Result<DMatrix<f64>, String> {
    w.matrix(r).map_err(err)
}

fn linop(w: &World, r: &MatRef) -> Result<LinOp, String> {
    LinOp::new(mat(w, r)?).map_err(err)
}

fn skew(w: &World, r: &MatRef) -> Result<SkewForm, String> {
    SkewForm::new(mat(w, r)?).map_err(err)
}

fn fold_options(collar: Option<f64>, r0: Option<f64>, r1: Option<f64>) -> FoldOptions {
    let d = FoldOptions::default();
    FoldOptions { collar, r0: r0.unwrap_or(d.r0), r1: r1.unwrap_or(d.r1), ..d }
}

fn search(t_max: Option<f64>, steps: Option<usize>) -> TamingSearch {
    let d = TamingSearch::default();
    TamingSearch { t_max: t_max.unwrap_or(d.t_max), bisection_steps: steps.unwrap_or(d.bisection_steps) }
}

fn save_form(w: &mut World, name: &Option<String>, value: BForm, chart: &crate::chart::BChart) {
    if let Some(n) = name {
        w.forms.insert(n.clone(), Placed { value, chart: chart.clone() });
    }
}

fn execute(task: &Task, w: &mut World, opts: &RunOptions) -> Outcome {
    let cfg = &opts.config;
    match &task.op {
        Op::Closedness { form } => {
            let f = w.form(form).map_err(err)?;
            let pts = f.chart.grid(cfg.grid_points).points();
            let v = closedness(&f.value, &pts, cfg.tol.zero).map_err(err)?;
            Ok((v.is_zero(), value(v)))
        }
        Op::DualBivector { form, save } => {
            let f = w.form(form).map_err(err)?.clone();
            let pi = dual_bivector(&f.value, &f.chart, cfg).map_err(err)?;
            let out = json!({ "bivector": pi.to_string() });
            if let Some(n) = save {
                w.bivectors.insert(n.clone(), Placed { value: pi, chart: f.chart });
            }
            Ok((true, out))
        }
        Op::InvertBivector { bivector, save } => {
            let p = w.bivector(bivector).map_err(err)?.clone();
            let omega = invert_bivector(&p.value, &p.chart, cfg).map_err(err)?;
            let out = json!({ "form": omega.to_string() });
            save_form(w, save, omega, &p.chart);
            Ok((true, out))
        }
        Op::LogSymplecticCheck { bivector } => {
            let p = w.bivector(bivector).map_err(err)?;
            let r = log_symplectic_check(&p.value.anchor(), &p.chart, cfg).map_err(err)?;
            Ok((r.pass, value(r)))
        }
        Op::CosymplecticExtract { form, save_theta } => {
            let f = w.form(form).map_err(err)?.clone();
            let data = cosymplectic_extract(&f.value, &f.chart, cfg).map_err(err)?;
            let out = value(&data);
            save_form(w, save_theta, data.theta, &f.chart);
            Ok((true, out))
        }
        Op::ValidateBmap { map } => {
            let c = w.map(map).map_err(err)?.validate(cfg);
            Ok((c.pass, value(c)))
        }
        Op::SectionSplittingCheck { map, section } => {
            let c = section_splitting_check(w.map(map).map_err(err)?, w.map(section).map_err(err)?, cfg).map_err(err)?;
            Ok((c.pass, value(c)))
        }
        Op::HasRealEigenvalue { matrix, expect } => {
            let r = real_eigenvalue_report(&linop(w, matrix)?).map_err(err)?;
            let found = r.has_real;
            Ok((verdict(found, *expect), value(r)))
        }
        Op::RetractToAcs { matrix } => {
            let j = retract_to_acs(&linop(w, matrix)?).map_err(err)?;
            let residual = j.complex_structure_residual();
            Ok((
                residual <= RETRACT_TOL,
                json!({ "j": matrix_rows(j.matrix()), "residual": residual, "threshold": RETRACT_TOL }),
            ))
        }
        Op::IsTame { omega, t, j, expect } => {
            let j = linop(w, j)?;
            let t = match t {
                Some(t) => mat(w, t)?,
                None => DMatrix::identity(j.dim(), j.dim()),
            };
            let r = is_tame(&skew(w, omega)?, &t, &j).map_err(err)?;
            Ok((verdict(r.tame, *expect), value(r)))
        }
        Op::BlendAcs { js, weights, t, omega } => {
            let js = js.iter().map(|m| linop(w, m)).collect::<Result<Vec<_>, _>>()?;
            let n = js.first().map_or(0, LinOp::dim);
            let t = match t {
                Some(t) => mat(w, t)?,
                None => DMatrix::identity(n, n),
            };
            let (j, r) = blend_acs(&js, weights, &t, &skew(w, omega)?).map_err(err)?;
            Ok((r.tame, json!({ "j": matrix_rows(j.matrix()), "taming": value(r) })))
        }
        Op::PairLemma { f, bf, rho_v, rho_w, v1, w1, expect } => {
            let maps = PairMaps {
                f: mat(w, f)?,
                bf: mat(w, bf)?,
                rho_v: mat(w, rho_v)?,
                rho_w: mat(w, rho_w)?,
                v1: mat(w, v1)?,
                w1: mat(w, w1)?,
            };
            let (holds, violated) = match verify_pair_lemma(&maps) {
                Ok(b) => (b, None),
                Err(e) => (false, Some(e.to_string())),
            };
            Ok((verdict(holds, Some(expect.unwrap_or(true))), json!({ "holds": holds, "violated": violated })))
        }
        Op::FindTamingT { fstar, eta, operator, t_max, bisection_steps } => {
            let f = w.form(fstar).map_err(err)?;
            let e = w.form(eta).map_err(err)?;
            let j = w.operator(operator).map_err(err)?;
            let (t, cert) =
                find_taming_t(&f.value, &e.value, j, &f.chart, cfg, &search(*t_max, *bisection_steps)).map_err(err)?;
            Ok((cert.pass, json!({ "t": t, "certificate": value(cert) })))
        }
        Op::ThurstonAssemble { map, omega_y, cover, operator, t_max, bisection_steps, dense_check, save } => {
            let f = w.map(map).map_err(err)?.clone();
            let out = thurston_assemble(
                &f,
                &w.form(omega_y).map_err(err)?.value,
                w.cover(cover).map_err(err)?,
                w.operator(operator).map_err(err)?,
                cfg,
                &search(*t_max, *bisection_steps),
            )
            .map_err(err)?;
            let mut cert = out.certificate;
            if let Some(per_axis) = dense_check {
                dense_determinant_check(&out.omega, &f.source, *per_axis, cfg, &mut cert);
            }
            let res = json!({ "t": out.t, "omega": out.omega.to_string(), "eta": out.eta.to_string(), "certificate": value(&cert) });
            save_form(w, save, out.omega, &f.source);
            Ok((cert.pass, res))
        }
        Op::LefschetzLocalEta { r0, r1, primitive, save } => {
            let m = lefschetz_local_eta(*r0, *r1, *primitive, cfg).map_err(err)?;
            let res = json!({ "eta": m.eta.to_string(), "sigma": m.sigma.to_string(), "certificate": value(&m.certificate) });
            save_form(w, save, m.eta, &m.chart);
            Ok((m.certificate.pass, res))
        }
        Op::LogToFolded { form, collar, r0, r1, save } => {
            let f = w.form(form).map_err(err)?.clone();
            let out = log_to_folded(&f.value, &f.chart, &fold_options(*collar, *r0, *r1), cfg).map_err(err)?;
            let res = json!({
                "omega": out.omega.to_string(),
                "scale": out.scale,
                "certificate": value(&out.certificate),
            });
            save_form(w, save, out.omega, &f.chart);
            Ok((out.certificate.pass, res))
        }
        Op::FoldedToLog { form, theta, collar, r0, r1, save } => {
            let f = w.form(form).map_err(err)?.clone();
            let th = w.form(theta).map_err(err)?.value.clone();
            let (omega, cert) =
                folded_to_log(&f.value, &th, &f.chart, &fold_options(*collar, *r0, *r1), cfg).map_err(err)?;
            let res = json!({ "omega": omega.to_string(), "certificate": value(&cert) });
            save_form(w, save, omega, &f.chart);
            Ok((cert.pass, res))
        }
        Op::SurfaceLogAdmissibility { surface, cycle, expect } => {
            let r = surface_log_admissibility(w.surface(surface).map_err(err)?, w.cycle(cycle).map_err(err)?)
                .map_err(err)?;
            Ok((verdict(r.admissible, *expect), value(r)))
        }
        Op::ObstructionA { ring, n, search_box, expect_obstructed } => {
            let ring = w.ring(ring).map_err(err)?;
            let n = n.or(ring.n).unwrap_or(2);
            let r = obstruction_a(ring, n, search_box.unwrap_or(DEFAULT_BOX)).map_err(err)?;
            Ok((verdict(r.obstructed, *expect_obstructed), value(r)))
        }
        Op::ObstructionB { ring, expect_obstructed } => {
            let r = obstruction_b(w.ring(ring).map_err(err)?).map_err(err)?;
            Ok((verdict(r.obstructed, *expect_obstructed), value(r)))
        }
        Op::ProfileTable { profile, samples, r_max, file } => {
            let spec = w.profile(profile).map_err(err)?;
            let table = emit_profile_table(spec, *samples, *r_max);
            let mut res = json!({ "profile": value(spec), "samples": samples });
            if let Some(file) = file {
                let path = opts.out_dir.clone().unwrap_or_default().join(file);
                std::fs::write(&path, &table).map_err(|e| format!("{}: {e}", path.display()))?;
                res["file"] = json!(file);
            } else {
                res["table"] = json!(table);
            }
            Ok((true, res))
        }
    }
}
