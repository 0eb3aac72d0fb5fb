use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConstructionError, ProfileSpec};
use crate::certificate::{Certificate, Relation};
use crate::chart::BChart;
use crate::config::Config;
use crate::expr::{Expr, Profile};
use crate::form::{BForm, Frame};
use crate::linalg::{kernel_basis, LinOp};
use crate::zero::zero_test_all;

/// Choice of primitive `α` with `dα = σ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    /// `(1/2) Σ (x dy − y dx)`
    #[default]
    Radial,
    /// `x1 dy1 + x2 dy2`
    Linear,
}

#[derive(Debug, Clone)]
pub struct LefschetzModel {
    pub chart: BChart,
    pub eta: BForm,
    pub sigma: BForm,
    pub certificate: Certificate,
}

const DIM: usize = 4;

fn x(i: usize) -> Expr {
    Expr::coord(i)
}

fn d(e: &Expr) -> BForm {
    BForm::d_scalar(DIM, Frame::Smooth, e)
}

/// Local model at a critical point of `f = z1² + z2²` on `ℂ²` with real
/// coordinates `(x1, y1, x2, y2)`. With `w1 = z1 + i z2`, `w2 = z1 − i z2`
/// (so `f = w1 w2`) and `σ = σ1 + σ2`, `σk = (i/4) dwk∧dw̄k`,
///
/// ```text
/// η = B(|w1|²/2) σ1 + B(|w2|²/2) σ2 + d((1 − B(r²)) α)
/// ```
///
/// where `B` is the radial bump on `[r0², r1²]`.
pub fn lefschetz_local_eta(r0: f64, r1: f64, primitive: Primitive, cfg: &Config) -> Result<LefschetzModel, ConstructionError> {
    if !(0.0 < r0 && r0 < r1) {
        return Err(ConstructionError::Radii(r0, r1));
    }
    let chart = BChart::cube(DIM, 1.0, false);
    let spec = ProfileSpec::RadialBump { r0, r1 };
    let bump = spec.bump();
    let b = |arg: Expr| Expr::profile(bump.clone(), 0, arg);
    let (u1, v1) = (&x(0) - &x(3), &x(1) + &x(2));
    let (u2, v2) = (&x(0) + &x(3), &x(1) - &x(2));
    let half = Expr::ratio(1, 2);
    let sigma1 = d(&u1).wedge(&d(&v1))?.scale(&half);
    let sigma2 = d(&u2).wedge(&d(&v2))?.scale(&half);
    let sigma = sigma1.add(&sigma2)?;
    let alpha = match primitive {
        Primitive::Radial => d(&x(1))
            .scale(&x(0))
            .sub(&d(&x(0)).scale(&x(1)))?
            .add(&d(&x(3)).scale(&x(2)).sub(&d(&x(2)).scale(&x(3)))?)?
            .scale(&half),
        Primitive::Linear => d(&x(1)).scale(&x(0)).add(&d(&x(3)).scale(&x(2)))?,
    };
    let r2 = (0..DIM).fold(Expr::zero(), |acc, i| &acc + &x(i).pow(2));
    let n1 = &(&u1.pow(2) + &v1.pow(2)) * &half;
    let n2 = &(&u2.pow(2) + &v2.pow(2)) * &half;
    let fiber_part = sigma1.scale(&b(n1.clone())).add(&sigma2.scale(&b(n2.clone())))?;
    let exact_part = alpha.scale(&(&Expr::one() - &b(r2.clone()))).b_d()?;
    let eta = fiber_part.add(&exact_part)?;

    let mut cert = Certificate::new("lefschetz_local").with_grid(chart.grid(cfg.grid_points).spec());
    cert.record_config(cfg);
    cert.seed = Some(cfg.seed);
    cert.param("r0", r0);
    cert.param("r1", r1);
    cert.fact("profile", &spec);
    cert.fact("bump", Profile::name(&bump));
    cert.fact("primitive", primitive);
    cert.fact("d_alpha_is_sigma", alpha.b_d()? == sigma);

    let d_eta = eta.b_d()?;
    let pts = chart.grid(cfg.grid_points).points();
    let closed = zero_test_all(d_eta.coeffs().map(|(_, c)| c), &pts, cfg.tol.zero);
    cert.require("closed_exact", closed.is_exact());
    cert.fact("d_eta", &closed);

    // samples in the unit ball
    let n_samples = cfg.sphere_samples.max(1) * 32;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(n_samples);
    while samples.len() < n_samples {
        let p: Vec<f64> = (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            samples.push(p);
        }
    }
    // points inside r0 along a few rays, including the origin
    for k in 0..=16 {
        let r = r0 * k as f64 / 16.0;
        for axis in 0..DIM {
            let mut p = vec![0.0; DIM];
            p[axis] = r;
            samples.push(p);
        }
    }
    let radius = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ec = eta.compile();
    let sc = sigma.compile();
    let xc = exact_part.compile();
    let mut inner = (0usize, 0.0f64);
    let mut outer = (0usize, 0.0f64);
    for p in &samples {
        let r = radius(p);
        if r <= r0 {
            inner.0 += 1;
            inner.1 = inner.1.max((ec.matrix_at(p) - sc.matrix_at(p)).amax());
        } else if r >= r1 {
            outer.0 += 1;
            outer.1 = outer.1.max(xc.matrix_at(p).amax());
        }
    }
    cert.fact("inner_samples", inner.0);
    cert.check("inner_max_abs_eta_minus_sigma", inner.1, Relation::LessEq, 0.0);
    cert.fact("outer_samples", outer.0);
    cert.check("outer_max_abs_exact_part", outer.1, Relation::LessEq, 0.0);

    // fiber tangent planes at regular points
    let re = &(&x(0).pow(2) - &x(1).pow(2)) + &(&x(2).pow(2) - &x(3).pow(2));
    let two = Expr::int(2);
    let im = &(&(&x(0) * &x(1)) * &two) + &(&(&x(2) * &x(3)) * &two);
    let grads: Vec<Vec<_>> = [re, im].iter().map(|f| (0..DIM).map(|i| f.diff(i).compile()).collect()).collect();
    let j = LinOp::standard(DIM);
    let mut fibers = 0usize;
    let mut margin = (f64::INFINITY, Vec::new());
    let mut j_complex = true;
    for p in &samples {
        if radius(p) < 1e-3 {
            continue;
        }
        let df = DMatrix::from_fn(2, DIM, |a, i| grads[a][i].eval(p));
        let ker = kernel_basis(&df, cfg.tol.rank);
        if ker.ncols() != 2 {
            continue;
        }
        fibers += 1;
        let v = ker.column(0).into_owned();
        let jv = j.matrix() * &v;
        j_complex &= (&df * &jv).amax() <= 1e-9 * df.amax().max(1.0);
        let q = (v.transpose() * ec.matrix_at(p) * jv)[(0, 0)] / v.norm_squared();
        if q < margin.0 {
            margin = (q, p.clone());
        }
    }
    cert.fact("regular_fiber_samples", fibers);
    cert.require("fiber_tangents_j_complex", j_complex);
    cert.check("fiber_samples", fibers as f64, Relation::GreaterEq, 500.0);
    cert.check("fiber_taming_margin", margin.0, Relation::Greater, 0.0);
    cert.fact("fiber_argmin", &margin.1);
    if !(margin.0 > 0.0) {
        return Err(ConstructionError::NotTame { point: margin.1, margin: margin.0 });
    }
    Ok(LefschetzModel { chart, eta, sigma, certificate: cert })
}
