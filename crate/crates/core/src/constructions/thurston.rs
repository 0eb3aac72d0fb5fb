use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ConstructionError, OperatorField};
use crate::bmap::BMapModel;
use crate::certificate::{Certificate, Relation};
use crate::chart::BChart;
use crate::config::Config;
use crate::expr::Expr;
use crate::form::{BForm, Frame};
use crate::geometry::closedness;
use crate::linalg::{is_tame, kernel_basis, LinOp, SkewForm};
use crate::zero::{zero_test, zero_test_all};

/// One element of the fiberwise cover.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverDatum {
    /// Partition weight on the base chart.
    pub weight: Expr,
    /// Box in the base chart; `None` means the support of the weight.
    pub region: Option<Vec<[f64; 2]>>,
    /// Closed 2-form on the total space; defaults to `ξ + dα`.
    pub eta: Option<BForm>,
    /// Primitive with `η − ξ = dα`.
    pub alpha: BForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverData {
    /// Reference representative ξ.
    pub xi: BForm,
    pub items: Vec<CoverDatum>,
}

impl CoverData {
    /// A single element with weight 1 and zero primitive.
    pub fn trivial(xi: BForm) -> Self {
        let alpha = BForm::zero(xi.dim(), 1, xi.frame());
        CoverData {
            xi,
            items: vec![CoverDatum { weight: Expr::one(), region: None, eta: None, alpha }],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TamingSearch {
    pub t_max: f64,
    pub bisection_steps: usize,
}

impl Default for TamingSearch {
    fn default() -> Self {
        TamingSearch { t_max: 1.0, bisection_steps: 60 }
    }
}

#[derive(Debug, Clone)]
pub struct ThurstonOutput {
    pub omega: BForm,
    pub eta: BForm,
    pub t: f64,
    pub certificate: Certificate,
}

fn unit_directions(seed: u64, stream: u64, n: usize, k: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..k)
        .map(|_| {
            let mut v: Vec<f64> = (0..n)
                .map(|_| {
                    // Box–Muller
                    let u1: f64 = 1.0 - rng.random::<f64>();
                    let u2: f64 = rng.random::<f64>();
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        })
        .collect()
}

fn quad(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * m[(i, j)] * v[j];
        }
    }
    s
}

fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Bisection for `t` with `(f*ω + tη)(v, Jv) > 0` on the sampled unit
/// sphere bundle over the chart grid.
pub fn find_taming_t(
    fstar: &BForm,
    eta: &BForm,
    j: &OperatorField,
    chart: &BChart,
    cfg: &Config,
    search: &TamingSearch,
) -> Result<(f64, Certificate), ConstructionError> {
    let n = chart.dim;
    if j.dim() != n {
        return Err(ConstructionError::OperatorShape { expected: n, got: j.dim() });
    }
    let grid = chart.grid(cfg.grid_points);
    let pts = grid.points();
    let (fc, ec, jc) = (fstar.compile(), eta.compile(), j.compile());
    let k = cfg.sphere_samples.max(1);
    // per point: (F J, E J) and the sampled pairs (a, e)
    let samples: Vec<(DMatrix<f64>, DMatrix<f64>, Vec<(f64, f64)>)> = pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let jm = jc.at(p);
            let fj = fc.matrix_at(p) * &jm;
            let ej = ec.matrix_at(p) * &jm;
            let pairs = unit_directions(cfg.seed, i as u64, n, k)
                .iter()
                .map(|v| (quad(&fj, v), quad(&ej, v)))
                .collect();
            (fj, ej, pairs)
        })
        .collect();
    let feasible = |t: f64| samples.iter().all(|(_, _, s)| s.iter().all(|(a, e)| a + t * e > 0.0));
    let (mut t, t_sup) = if feasible(search.t_max) {
        (search.t_max, search.t_max)
    } else {
        let (mut lo, mut hi) = (0.0, search.t_max);
        for _ in 0..search.bisection_steps {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo == 0.0 {
            let mut worst = (f64::INFINITY, 0, 0);
            for (i, (_, _, s)) in samples.iter().enumerate() {
                for (d, (a, e)) in s.iter().enumerate() {
                    let q = a + hi * e;
                    if q < worst.0 {
                        worst = (q, i, d);
                    }
                }
            }
            let dir = unit_directions(cfg.seed, worst.1 as u64, n, k).swap_remove(worst.2);
            return Err(ConstructionError::NoTamingT { point: pts[worst.1].clone(), direction: dir, value: worst.0 });
        }
        (lo / 2.0, lo)
    };
    // the sampled sphere can miss bad directions; the symmetric part's
    // smallest eigenvalue cannot, so t is halved until it is positive too
    let eig_at = |t: f64| -> (usize, f64) {
        let eig: Vec<f64> = samples.par_iter().map(|(fj, ej, _)| sym_min_eig(&(fj + ej * t))).collect();
        eig.iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc })
    };
    let mut halvings = 0;
    let (mut eig_idx, mut eig_min) = eig_at(t);
    while !(eig_min > 0.0) && halvings < search.bisection_steps {
        t *= 0.5;
        halvings += 1;
        (eig_idx, eig_min) = eig_at(t);
    }
    if !(eig_min > 0.0) {
        let (fj, ej, _) = &samples[eig_idx];
        let m = fj + ej * t;
        let eig = ((&m + m.transpose()) * 0.5).symmetric_eigen();
        let kmin = eig.eigenvalues.imin();
        return Err(ConstructionError::NoTamingT {
            point: pts[eig_idx].clone(),
            direction: eig.eigenvectors.column(kmin).iter().copied().collect(),
            value: eig_min,
        });
    }
    let mut sampled = (f64::INFINITY, 0);
    for (i, (_, _, s)) in samples.iter().enumerate() {
        for (a, e) in s {
            if a + t * e < sampled.0 {
                sampled = (a + t * e, i);
            }
        }
    }
    let mut cert = Certificate::new("find_taming_t").with_grid(grid.spec());
    cert.record_config(cfg);
    cert.sphere_samples = Some(k);
    cert.seed = Some(cfg.seed);
    cert.param("t", t);
    cert.param("t_max", search.t_max);
    cert.fact("sampled_t_sup", t_sup);
    cert.fact("bisection_steps", search.bisection_steps);
    cert.fact("eigen_halvings", halvings);
    cert.check("sampled_margin", sampled.0, Relation::Greater, 0.0);
    cert.fact("sampled_argmin", &pts[sampled.1]);
    cert.check("pointwise_eigen_margin", eig_min, Relation::Greater, 0.0);
    cert.fact("eigen_argmin", &pts[eig_idx]);
    Ok((t, cert))
}

fn matching_frame(a: &BForm, frame: Frame) -> BForm {
    if frame == Frame::Log {
        a.to_log_frame()
    } else {
        a.clone()
    }
}

/// `ω_t = f*ω_Y + tη` with `η = ξ + d(Σ (φᵢ∘f) αᵢ)`.
pub fn thurston_assemble(
    f: &BMapModel,
    omega_y: &BForm,
    cover: &CoverData,
    j: &OperatorField,
    cfg: &Config,
    search: &TamingSearch,
) -> Result<ThurstonOutput, ConstructionError> {
    f.ensure_valid(cfg)?;
    let n = f.source.dim;
    if j.dim() != n {
        return Err(ConstructionError::OperatorShape { expected: n, got: j.dim() });
    }
    let fstar = f.pullback(omega_y)?;
    let frame = fstar.frame();
    let xi = matching_frame(&cover.xi, frame);
    let src_grid = f.source.grid(cfg.grid_points);
    let src_pts = src_grid.points();
    let base_pts = f.target.grid(cfg.grid_points).points();

    // cover data
    if cover.items.is_empty() {
        return Err(ConstructionError::Cover("empty cover".into()));
    }
    let sum = cover.items.iter().fold(Expr::zero(), |acc, c| &acc + &c.weight);
    let partition = zero_test(&(&sum - &Expr::one()), &base_pts, cfg.tol.zero);
    if !partition.is_zero() {
        return Err(ConstructionError::Cover(format!("weights do not sum to 1 (max {})", partition.max_abs())));
    }
    for (i, c) in cover.items.iter().enumerate() {
        let w = c.weight.compile();
        if let Some(p) = base_pts.iter().find(|p| w.eval(p) < -cfg.tol.zero) {
            return Err(ConstructionError::Cover(format!("weight {i} is negative at {p:?}")));
        }
    }
    if !closedness(&xi, &src_pts, cfg.tol.zero)?.is_zero() {
        return Err(ConstructionError::Cover("ξ is not closed".into()));
    }
    let mut etas = Vec::new();
    for (i, c) in cover.items.iter().enumerate() {
        let alpha = matching_frame(&c.alpha, frame);
        let d_alpha = alpha.b_d()?;
        let eta_i = match &c.eta {
            Some(e) => {
                let e = matching_frame(e, frame);
                if !closedness(&e, &src_pts, cfg.tol.zero)?.is_zero() {
                    return Err(ConstructionError::Cover(format!("η{i} is not closed")));
                }
                let diff = e.sub(&xi)?.sub(&d_alpha)?;
                if !zero_test_all(diff.coeffs().map(|(_, c)| c), &src_pts, cfg.tol.zero).is_zero() {
                    return Err(ConstructionError::Cover(format!("η{i} − ξ ≠ dα{i}")));
                }
                e
            }
            None => xi.add(&d_alpha)?,
        };
        etas.push((alpha, eta_i));
    }

    // taming preconditions
    let df = f.b_differential()?;
    let jc = j.compile();
    let wy = omega_y.compile();
    let weights: Vec<_> = cover
        .items
        .iter()
        .map(|c| c.weight.substitute(&|k| f.components()[k].clone()).compile())
        .collect();
    let eta_c: Vec<_> = etas.iter().map(|(_, e)| e.compile()).collect();
    let check = |p: &Vec<f64>| -> Result<(), ConstructionError> {
        let t = df.at(p);
        let jm = jc.at(p);
        let id = DMatrix::<f64>::identity(n, n);
        let res = (&jm * &jm + &id).norm();
        if res > 1e-10 {
            return Err(ConstructionError::Precondition { point: p.clone(), detail: format!("J² + I = {res}") });
        }
        let y = f.apply(p);
        let rep = is_tame(&SkewForm::new(wy.matrix_at(&y))?, &t, &LinOp::new(jm.clone())?)?;
        if !rep.tame {
            return Err(ConstructionError::Precondition {
                point: p.clone(),
                detail: format!("J is not (ω_Y, f)-tame: margin {} ({})", rep.margin, rep.reason.unwrap_or_default()),
            });
        }
        let ker = kernel_basis(&t, cfg.tol.rank);
        if ker.ncols() == 0 {
            return Ok(());
        }
        for (i, c) in cover.items.iter().enumerate() {
            let inside = match &c.region {
                Some(b) => y.iter().zip(b).all(|(v, [lo, hi])| lo <= v && v <= hi),
                None => weights[i].eval(p) > 0.0,
            };
            if !inside {
                continue;
            }
            let q = ker.transpose() * eta_c[i].matrix_at(p) * &jm * &ker;
            let m = sym_min_eig(&q);
            if !(m > 0.0) {
                return Err(ConstructionError::Precondition {
                    point: p.clone(),
                    detail: format!("η{i} does not tame J on ker b df: margin {m}"),
                });
            }
        }
        Ok(())
    };
    src_pts.par_iter().map(check).collect::<Result<Vec<()>, _>>()?;

    // η = ξ + d(Σ (φᵢ∘f) αᵢ)
    let mut mix = BForm::zero(n, 1, frame);
    for (c, (alpha, _)) in cover.items.iter().zip(&etas) {
        let phi = c.weight.substitute(&|k| f.components()[k].clone());
        mix = mix.add(&alpha.scale(&phi))?;
    }
    let eta = xi.add(&mix.b_d()?)?;
    let d_fstar = closedness(&fstar, &src_pts, cfg.tol.zero)?;
    let d_eta = closedness(&eta, &src_pts, cfg.tol.zero)?;

    let (t, search_cert) = find_taming_t(&fstar, &eta, j, &f.source, cfg, search)?;
    let omega = fstar.add(&eta.scale(&Expr::from_f64(t)))?;

    let mut cert = Certificate::new("thurston").with_grid(src_grid.spec());
    cert.record_config(cfg);
    cert.sphere_samples = search_cert.sphere_samples;
    cert.seed = Some(cfg.seed);
    cert.param("t", t);
    cert.param("t_max", search.t_max);
    cert.fact("partition_of_unity", &partition);
    cert.require("pullback_closed", d_fstar.is_zero());
    cert.require("eta_closed", d_eta.is_zero());
    cert.fact("d_pullback", &d_fstar);
    cert.fact("d_eta", &d_eta);
    for c in &search_cert.checks {
        cert.check(&c.name, c.value, c.relation, c.threshold);
    }
    for (k, v) in &search_cert.facts {
        if k != "tolerances" {
            cert.fact(k, v);
        }
    }
    dense_determinant_check(&omega, &f.source, src_grid.axis(1).len(), cfg, &mut cert);
    Ok(ThurstonOutput { omega, eta, t, certificate: cert })
}

/// Independent nondegeneracy check: LU determinants of the coefficient
/// matrix on a grid with twice the per-axis resolution, Z included.
pub fn dense_determinant_check(omega: &BForm, chart: &BChart, per_axis: usize, cfg: &Config, cert: &mut Certificate) {
    let dense = chart.grid_per_axis(2 * per_axis);
    let wc = omega.compile();
    let dets: Vec<(f64, bool)> = (0..dense.len())
        .into_par_iter()
        .map(|i| {
            let p = dense.point(i);
            (wc.matrix_at(&p).lu().determinant(), p[0] == 0.0)
        })
        .collect();
    let min_all = dets.iter().map(|d| d.0.abs()).fold(f64::INFINITY, f64::min);
    let min_z = dets.iter().filter(|d| d.1).map(|d| d.0.abs()).fold(f64::INFINITY, f64::min);
    cert.fact("dense_grid", dense.spec());
    cert.check("dense_min_abs_det", min_all, Relation::Greater, cfg.tol.nondegenerate);
    if chart.has_z {
        cert.check("dense_min_abs_det_on_z", min_z, Relation::Greater, cfg.tol.nondegenerate);
    }
}
