//! Scene files: named charts, forms, maps and other inputs, plus a task list.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::Value;

use crate::bivector::BBivector;
use crate::bmap::BMapModel;
use crate::chart::BChart;
use crate::constructions::{CoverData, CoverDatum, OperatorField, Primitive, ProfileSpec};
use crate::expr::{parse_expr, Expr};
use crate::form::{BForm, Frame};
use crate::topology::{CohomologyRing, TriangulatedSurface, Z2Cycle};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("undefined {kind} `{name}`")]
    Unresolved { kind: &'static str, name: String },
    #[error("{kind} `{name}`: {msg}")]
    Invalid { kind: &'static str, name: String, msg: String },
    #[error("task `{task}`: {msg}")]
    Task { task: String, msg: String },
}

impl SceneError {
    fn invalid(kind: &'static str, name: &str, msg: impl ToString) -> Self {
        SceneError::Invalid { kind, name: name.to_string(), msg: msg.to_string() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDef {
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub periodic: Vec<bool>,
    #[serde(default = "yes")]
    pub has_z: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormDef {
    pub chart: String,
    #[serde(default = "log")]
    pub frame: Frame,
    pub src: String,
}

fn log() -> Frame {
    Frame::Log
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDef {
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub u: Option<String>,
    #[serde(default)]
    pub first: Option<String>,
    pub rest: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverItemDef {
    pub weight: String,
    pub alpha: String,
    #[serde(default)]
    pub eta: Option<String>,
    #[serde(default)]
    pub region: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverDef {
    /// Base chart, for the partition weights.
    pub base: String,
    pub xi: String,
    pub items: Vec<CoverItemDef>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SurfaceDef {
    Builtin {
        builtin: String,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        subdivide: usize,
    },
    Explicit(TriangulatedSurface),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CycleDef {
    Builtin {
        builtin: String,
        #[serde(default)]
        n: Option<usize>,
    },
    Explicit(Z2Cycle),
}

/// A matrix given inline or by name.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatRef {
    Name(String),
    Inline(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub charts: BTreeMap<String, ChartDef>,
    #[serde(default)]
    pub forms: BTreeMap<String, FormDef>,
    #[serde(default)]
    pub bivectors: BTreeMap<String, FormDef>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapDef>,
    /// Pointwise operator fields, as rows of expressions.
    #[serde(default)]
    pub operators: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    pub matrices: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default)]
    pub covers: BTreeMap<String, CoverDef>,
    #[serde(default)]
    pub profiles: BTreeMap<String, ProfileSpec>,
    #[serde(default)]
    pub rings: BTreeMap<String, CohomologyRing>,
    #[serde(default)]
    pub surfaces: BTreeMap<String, SurfaceDef>,
    #[serde(default)]
    pub cycles: BTreeMap<String, CycleDef>,
    #[serde(default)]
    pub tasks: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Verify,
    Construct,
    Convert,
    Check,
    Profile,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Op {
    Closedness {
        form: String,
    },
    DualBivector {
        form: String,
        #[serde(default)]
        save: Option<String>,
    },
    InvertBivector {
        bivector: String,
        #[serde(default)]
        save: Option<String>,
    },
    LogSymplecticCheck {
        bivector: String,
    },
    CosymplecticExtract {
        form: String,
        #[serde(default)]
        save_theta: Option<String>,
    },
    ValidateBmap {
        map: String,
    },
    SectionSplittingCheck {
        map: String,
        section: String,
    },
    HasRealEigenvalue {
        matrix: MatRef,
        #[serde(default)]
        expect: Option<bool>,
    },
    RetractToAcs {
        matrix: MatRef,
    },
    IsTame {
        omega: MatRef,
        #[serde(default)]
        t: Option<MatRef>,
        j: MatRef,
        #[serde(default)]
        expect: Option<bool>,
    },
    BlendAcs {
        js: Vec<MatRef>,
        weights: Vec<f64>,
        #[serde(default)]
        t: Option<MatRef>,
        omega: MatRef,
    },
    PairLemma {
        f: MatRef,
        bf: MatRef,
        rho_v: MatRef,
        rho_w: MatRef,
        v1: MatRef,
        w1: MatRef,
        #[serde(default)]
        expect: Option<bool>,
    },
    FindTamingT {
        fstar: String,
        eta: String,
        operator: String,
        #[serde(default)]
        t_max: Option<f64>,
        #[serde(default)]
        bisection_steps: Option<usize>,
    },
    ThurstonAssemble {
        map: String,
        omega_y: String,
        cover: String,
        operator: String,
        #[serde(default)]
        t_max: Option<f64>,
        #[serde(default)]
        bisection_steps: Option<usize>,
        /// Points per axis for the dense determinant check.
        #[serde(default)]
        dense_check: Option<usize>,
        #[serde(default)]
        save: Option<String>,
    },
    LefschetzLocalEta {
        r0: f64,
        r1: f64,
        #[serde(default)]
        primitive: Primitive,
        #[serde(default)]
        save: Option<String>,
    },
    LogToFolded {
        form: String,
        #[serde(default)]
        collar: Option<f64>,
        #[serde(default)]
        r0: Option<f64>,
        #[serde(default)]
        r1: Option<f64>,
        #[serde(default)]
        save: Option<String>,
    },
    FoldedToLog {
        form: String,
        theta: String,
        #[serde(default)]
        collar: Option<f64>,
        #[serde(default)]
        r0: Option<f64>,
        #[serde(default)]
        r1: Option<f64>,
        #[serde(default)]
        save: Option<String>,
    },
    SurfaceLogAdmissibility {
        surface: String,
        cycle: String,
        #[serde(default)]
        expect: Option<bool>,
    },
    ObstructionA {
        ring: String,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        search_box: Option<i64>,
        #[serde(default)]
        expect_obstructed: Option<bool>,
    },
    ObstructionB {
        ring: String,
        #[serde(default)]
        expect_obstructed: Option<bool>,
    },
    ProfileTable {
        profile: String,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        r_max: Option<f64>,
        /// Also write the table to this path, relative to the report.
        #[serde(default)]
        file: Option<String>,
    },
}

fn default_samples() -> usize {
    200
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Closedness { .. } => "closedness",
            Op::DualBivector { .. } => "dual_bivector",
            Op::InvertBivector { .. } => "invert_bivector",
            Op::LogSymplecticCheck { .. } => "log_symplectic_check",
            Op::CosymplecticExtract { .. } => "cosymplectic_extract",
            Op::ValidateBmap { .. } => "validate_bmap",
            Op::SectionSplittingCheck { .. } => "section_splitting_check",
            Op::HasRealEigenvalue { .. } => "has_real_eigenvalue",
            Op::RetractToAcs { .. } => "retract_to_acs",
            Op::IsTame { .. } => "is_tame",
            Op::BlendAcs { .. } => "blend_acs",
            Op::PairLemma { .. } => "pair_lemma",
            Op::FindTamingT { .. } => "find_taming_t",
            Op::ThurstonAssemble { .. } => "thurston_assemble",
            Op::LefschetzLocalEta { .. } => "lefschetz_local_eta",
            Op::LogToFolded { .. } => "log_to_folded",
            Op::FoldedToLog { .. } => "folded_to_log",
            Op::SurfaceLogAdmissibility { .. } => "surface_log_admissibility",
            Op::ObstructionA { .. } => "obstruction_a",
            Op::ObstructionB { .. } => "obstruction_b",
            Op::ProfileTable { .. } => "profile_table",
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Op::Closedness { .. }
            | Op::DualBivector { .. }
            | Op::LogSymplecticCheck { .. }
            | Op::CosymplecticExtract { .. }
            | Op::ValidateBmap { .. }
            | Op::SectionSplittingCheck { .. }
            | Op::HasRealEigenvalue { .. }
            | Op::RetractToAcs { .. }
            | Op::IsTame { .. }
            | Op::PairLemma { .. } => Category::Verify,
            Op::FindTamingT { .. } | Op::ThurstonAssemble { .. } | Op::LefschetzLocalEta { .. } | Op::BlendAcs { .. } => {
                Category::Construct
            }
            Op::InvertBivector { .. } | Op::LogToFolded { .. } | Op::FoldedToLog { .. } => Category::Convert,
            Op::SurfaceLogAdmissibility { .. } | Op::ObstructionA { .. } | Op::ObstructionB { .. } => Category::Check,
            Op::ProfileTable { .. } => Category::Profile,
        }
    }

    /// Forms (first) and bivectors (second) this task reads by name.
    fn reads(&self) -> (Vec<&str>, Vec<&str>) {
        match self {
            Op::Closedness { form }
            | Op::DualBivector { form, .. }
            | Op::CosymplecticExtract { form, .. }
            | Op::LogToFolded { form, .. } => (vec![form], vec![]),
            Op::FoldedToLog { form, theta, .. } => (vec![form, theta], vec![]),
            Op::InvertBivector { bivector, .. } | Op::LogSymplecticCheck { bivector } => (vec![], vec![bivector]),
            Op::FindTamingT { fstar, eta, .. } => (vec![fstar, eta], vec![]),
            Op::ThurstonAssemble { omega_y, .. } => (vec![omega_y], vec![]),
            _ => (vec![], vec![]),
        }
    }

    /// Forms (first) and bivectors (second) this task defines.
    fn writes(&self) -> (Vec<&str>, Vec<&str>) {
        match self {
            Op::DualBivector { save: Some(s), .. } => (vec![], vec![s]),
            Op::InvertBivector { save: Some(s), .. }
            | Op::ThurstonAssemble { save: Some(s), .. }
            | Op::LefschetzLocalEta { save: Some(s), .. }
            | Op::LogToFolded { save: Some(s), .. }
            | Op::FoldedToLog { save: Some(s), .. }
            | Op::CosymplecticExtract { save_theta: Some(s), .. } => (vec![s], vec![]),
            _ => (vec![], vec![]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Task {
    pub name: String,
    pub op: Op,
}

/// A named form with its chart.
#[derive(Debug, Clone)]
pub struct Placed<T> {
    pub value: T,
    pub chart: BChart,
}

/// Scene with every definition resolved.
#[derive(Debug, Clone, Default)]
pub struct World {
    pub charts: BTreeMap<String, BChart>,
    pub forms: BTreeMap<String, Placed<BForm>>,
    pub bivectors: BTreeMap<String, Placed<BBivector>>,
    pub maps: BTreeMap<String, BMapModel>,
    pub operators: BTreeMap<String, OperatorField>,
    pub matrices: BTreeMap<String, DMatrix<f64>>,
    pub covers: BTreeMap<String, CoverData>,
    pub profiles: BTreeMap<String, ProfileSpec>,
    pub rings: BTreeMap<String, CohomologyRing>,
    pub surfaces: BTreeMap<String, TriangulatedSurface>,
    pub cycles: BTreeMap<String, Z2Cycle>,
}

fn get<'a, T>(m: &'a BTreeMap<String, T>, kind: &'static str, name: &str) -> Result<&'a T, SceneError> {
    m.get(name).ok_or_else(|| SceneError::Unresolved { kind, name: name.to_string() })
}

impl World {
    pub fn chart(&self, name: &str) -> Result<&BChart, SceneError> {
        get(&self.charts, "chart", name)
    }
    pub fn form(&self, name: &str) -> Result<&Placed<BForm>, SceneError> {
        get(&self.forms, "form", name)
    }
    pub fn bivector(&self, name: &str) -> Result<&Placed<BBivector>, SceneError> {
        get(&self.bivectors, "bivector", name)
    }
    pub fn map(&self, name: &str) -> Result<&BMapModel, SceneError> {
        get(&self.maps, "map", name)
    }
    pub fn operator(&self, name: &str) -> Result<&OperatorField, SceneError> {
        get(&self.operators, "operator", name)
    }
    pub fn cover(&self, name: &str) -> Result<&CoverData, SceneError> {
        get(&self.covers, "cover", name)
    }
    pub fn profile(&self, name: &str) -> Result<&ProfileSpec, SceneError> {
        get(&self.profiles, "profile", name)
    }
    pub fn ring(&self, name: &str) -> Result<&CohomologyRing, SceneError> {
        get(&self.rings, "ring", name)
    }
    pub fn surface(&self, name: &str) -> Result<&TriangulatedSurface, SceneError> {
        get(&self.surfaces, "surface", name)
    }
    pub fn cycle(&self, name: &str) -> Result<&Z2Cycle, SceneError> {
        get(&self.cycles, "cycle", name)
    }

    pub fn matrix(&self, r: &MatRef) -> Result<DMatrix<f64>, SceneError> {
        match r {
            MatRef::Name(n) => get(&self.matrices, "matrix", n).cloned(),
            MatRef::Inline(rows) => to_matrix(rows).map_err(|m| SceneError::invalid("matrix", "<inline>", m)),
        }
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err("rows have different lengths".into());
    }
    Ok(DMatrix::from_fn(rows.len(), c, |i, j| rows[i][j]))
}

fn expr(src: &str, dim: usize, kind: &'static str, name: &str) -> Result<Expr, SceneError> {
    parse_expr(src, Some(dim)).map_err(|e| SceneError::invalid(kind, name, e))
}

/// Parses scene text; errors carry the line and column.
pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    serde_json::from_str(text).map_err(|e| SceneError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })
}

impl Scene {
    /// Resolves all definitions and type-checks the task list, including
    /// names produced by earlier tasks.
    pub fn resolve(&self) -> Result<(World, Vec<Task>), SceneError> {
        let mut w = World::default();
        for (name, c) in &self.charts {
            let chart = BChart::new(c.domain.clone(), c.periodic.clone(), c.has_z)
                .map_err(|e| SceneError::invalid("chart", name, e))?;
            w.charts.insert(name.clone(), chart);
        }
        for (name, f) in &self.forms {
            let chart = w.chart(&f.chart)?.clone();
            let value = BForm::parse(&f.src, chart.dim, f.frame).map_err(|e| SceneError::invalid("form", name, e))?;
            w.forms.insert(name.clone(), Placed { value, chart });
        }
        for (name, f) in &self.bivectors {
            let chart = w.chart(&f.chart)?.clone();
            let value =
                BBivector::parse(&f.src, chart.dim, f.frame).map_err(|e| SceneError::invalid("bivector", name, e))?;
            w.bivectors.insert(name.clone(), Placed { value, chart });
        }
        for (name, m) in &self.maps {
            let source = w.chart(&m.source)?.clone();
            let target = w.chart(&m.target)?.clone();
            let n = source.dim;
            let opt = |s: &Option<String>| s.as_deref().map(|s| expr(s, n, "map", name)).transpose();
            let rest = m.rest.iter().map(|s| expr(s, n, "map", name)).collect::<Result<Vec<_>, _>>()?;
            let model = BMapModel::new(source, target, opt(&m.u)?, opt(&m.first)?, rest)
                .map_err(|e| SceneError::invalid("map", name, e))?;
            w.maps.insert(name.clone(), model);
        }
        for (name, rows) in &self.operators {
            let n = rows.len();
            let entries = rows
                .iter()
                .map(|r| r.iter().map(|s| expr(s, n, "operator", name)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let op = OperatorField::new(entries).map_err(|e| SceneError::invalid("operator", name, e))?;
            w.operators.insert(name.clone(), op);
        }
        for (name, rows) in &self.matrices {
            let m = to_matrix(rows).map_err(|e| SceneError::invalid("matrix", name, e))?;
            w.matrices.insert(name.clone(), m);
        }
        for (name, c) in &self.covers {
            let base = w.chart(&c.base)?.dim;
            let xi = w.form(&c.xi)?.value.clone();
            let mut items = Vec::new();
            for it in &c.items {
                items.push(CoverDatum {
                    weight: expr(&it.weight, base, "cover", name)?,
                    region: it.region.clone(),
                    eta: it.eta.as_deref().map(|e| w.form(e).map(|f| f.value.clone())).transpose()?,
                    alpha: w.form(&it.alpha)?.value.clone(),
                });
            }
            w.covers.insert(name.clone(), CoverData { xi, items });
        }
        w.profiles = self.profiles.clone();
        for (name, r) in &self.rings {
            r.validate().map_err(|e| SceneError::invalid("ring", name, e))?;
            w.rings.insert(name.clone(), r.clone());
        }
        for (name, s) in &self.surfaces {
            let surf = surface(s).map_err(|m| SceneError::invalid("surface", name, m))?;
            w.surfaces.insert(name.clone(), surf);
        }
        for (name, c) in &self.cycles {
            let cycle = cycle(c).map_err(|m| SceneError::invalid("cycle", name, m))?;
            w.cycles.insert(name.clone(), cycle);
        }
        let tasks = self.tasks()?;
        self.check_references(&w, &tasks)?;
        Ok((w, tasks))
    }

    fn tasks(&self) -> Result<Vec<Task>, SceneError> {
        let mut out = Vec::new();
        let mut names = BTreeSet::new();
        for (i, v) in self.tasks.iter().enumerate() {
            let mut obj = v.as_object().cloned().ok_or_else(|| SceneError::Task {
                task: format!("#{i}"),
                msg: "a task must be an object".into(),
            })?;
            let name = match obj.remove("name") {
                Some(Value::String(s)) => s,
                None => format!("task{i}"),
                Some(_) => return Err(SceneError::Task { task: format!("#{i}"), msg: "name must be a string".into() }),
            };
            if let Some(op) = obj.remove("construct") {
                if obj.contains_key("op") {
                    return Err(SceneError::Task { task: name, msg: "both `op` and `construct` given".into() });
                }
                obj.insert("op".into(), op);
            }
            if !names.insert(name.clone()) {
                return Err(SceneError::Task { task: name, msg: "duplicate task name".into() });
            }
            let op: Op = serde_json::from_value(Value::Object(obj))
                .map_err(|e| SceneError::Task { task: name.clone(), msg: e.to_string() })?;
            out.push(Task { name, op });
        }
        Ok(out)
    }

    fn check_references(&self, w: &World, tasks: &[Task]) -> Result<(), SceneError> {
        let mut forms: BTreeSet<&str> = w.forms.keys().map(String::as_str).collect();
        let mut bivectors: BTreeSet<&str> = w.bivectors.keys().map(String::as_str).collect();
        for t in tasks {
            let wrap = |e: SceneError| SceneError::Task { task: t.name.clone(), msg: e.to_string() };
            let (rf, rb) = t.op.reads();
            for f in rf {
                if !forms.contains(f) {
                    return Err(wrap(SceneError::Unresolved { kind: "form", name: f.into() }));
                }
            }
            for b in rb {
                if !bivectors.contains(b) {
                    return Err(wrap(SceneError::Unresolved { kind: "bivector", name: b.into() }));
                }
            }
            let mats = |rs: &[&MatRef]| -> Result<(), SceneError> {
                rs.iter().try_for_each(|r| w.matrix(r).map(|_| ())).map_err(wrap)
            };
            match &t.op {
                Op::ValidateBmap { map } => {
                    w.map(map).map_err(wrap)?;
                }
                Op::SectionSplittingCheck { map, section } => {
                    w.map(map).map_err(wrap)?;
                    w.map(section).map_err(wrap)?;
                }
                Op::FindTamingT { operator, .. } => {
                    w.operator(operator).map_err(wrap)?;
                }
                Op::ThurstonAssemble { map, cover, operator, .. } => {
                    w.map(map).map_err(wrap)?;
                    w.cover(cover).map_err(wrap)?;
                    w.operator(operator).map_err(wrap)?;
                }
                Op::SurfaceLogAdmissibility { surface, cycle, .. } => {
                    w.surface(surface).map_err(wrap)?;
                    w.cycle(cycle).map_err(wrap)?;
                }
                Op::ObstructionA { ring, .. } | Op::ObstructionB { ring, .. } => {
                    w.ring(ring).map_err(wrap)?;
                }
                Op::ProfileTable { profile, .. } => {
                    w.profile(profile).map_err(wrap)?;
                }
                Op::HasRealEigenvalue { matrix, .. } | Op::RetractToAcs { matrix } => mats(&[matrix])?,
                Op::IsTame { omega, t, j, .. } => {
                    mats(&[omega, j])?;
                    mats(&t.iter().collect::<Vec<_>>())?;
                }
                Op::BlendAcs { js, t, omega, .. } => {
                    mats(&js.iter().chain(t).chain([omega]).collect::<Vec<_>>())?;
                }
                Op::PairLemma { f, bf, rho_v, rho_w, v1, w1, .. } => mats(&[f, bf, rho_v, rho_w, v1, w1])?,
                _ => {}
            }
            let (wf, wb) = t.op.writes();
            forms.extend(wf);
            bivectors.extend(wb);
        }
        Ok(())
    }
}

fn surface(s: &SurfaceDef) -> Result<TriangulatedSurface, String> {
    let surf = match s {
        SurfaceDef::Explicit(t) => t.clone(),
        SurfaceDef::Builtin { builtin, n, subdivide } => {
            let n = n.unwrap_or(4);
            if n < 3 && matches!(builtin.as_str(), "torus" | "klein_bottle") {
                return Err("grid surfaces need n >= 3".into());
            }
            let mut s = match builtin.as_str() {
                "rp2" => TriangulatedSurface::rp2(),
                "sphere" => TriangulatedSurface::sphere(),
                "torus" => TriangulatedSurface::torus(n),
                "klein_bottle" => TriangulatedSurface::klein_bottle(n),
                other => return Err(format!("unknown builtin surface `{other}`")),
            };
            for _ in 0..*subdivide {
                s = s.barycentric_subdivision().0;
            }
            s
        }
    };
    surf.validate().map_err(|e| e.to_string())?;
    Ok(surf)
}

fn cycle(c: &CycleDef) -> Result<Z2Cycle, String> {
    match c {
        CycleDef::Explicit(z) => Ok(z.clone()),
        CycleDef::Builtin { builtin, n } => {
            let n = n.unwrap_or(4);
            match builtin.as_str() {
                "empty" => Ok(Z2Cycle::empty()),
                "sphere_equator" => Ok(TriangulatedSurface::sphere_equator()),
                "grid_circle_i" => Ok(TriangulatedSurface::grid_circle_i(n)),
                "grid_circle_j" => Ok(TriangulatedSurface::grid_circle_j(n)),
                "klein_dual" => Ok(TriangulatedSurface::klein_dual_cycle(n)),
                other => Err(format!("unknown builtin cycle `{other}`")),
            }
        }
    }
}
