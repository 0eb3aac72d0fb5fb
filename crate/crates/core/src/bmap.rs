//! Chart-level b-maps `f: (X, {x1=0}) -> (Y, {y1=0})`, supplied with the
//! first component factored as `f1 = x1·u`.

use nalgebra::DMatrix;

use crate::chart::BChart;
use crate::certificate::{Certificate, Relation};
use crate::config::Config;
use crate::expr::{CompiledExpr, Expr};
use crate::form::{BForm, Frame, FormError};
use crate::zero::zero_test_all;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BMapError {
    #[error("target has a hypersurface; f1 must be supplied as x1*u")]
    NotFactored,
    #[error("b-map target needs a source hypersurface")]
    SourceWithoutZ,
    #[error("expected {expected} components, got {got}")]
    Components { expected: usize, got: usize },
    #[error("u vanishes on the sampled domain (min |u| = {min_abs} at {at:?})")]
    UVanishes { min_abs: f64, at: Vec<f64> },
    #[error("component uses a coordinate outside the source chart")]
    Coordinate,
    #[error("form lives on a chart of dimension {got}, target has {expected}")]
    FormDimension { expected: usize, got: usize },
    #[error("log-frame form needs a target hypersurface")]
    FrameMismatch,
    #[error("s is not a section of f: max |f∘s - id| = {0}")]
    NotSection(f64),
    #[error(transparent)]
    Form(#[from] FormError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BMapModel {
    pub source: BChart,
    pub target: BChart,
    /// Factor `u` with `f1 = x1·u`; required when the target has Z.
    pub u: Option<Expr>,
    /// Components `f1..fm`. When `u` is set, entry 0 is `x1·u`.
    components: Vec<Expr>,
}

impl BMapModel {
    /// `rest` holds `f2..fm`; `first` is `f1` when the target has no Z.
    pub fn new(
        source: BChart,
        target: BChart,
        u: Option<Expr>,
        first: Option<Expr>,
        rest: Vec<Expr>,
    ) -> Result<Self, BMapError> {
        if rest.len() + 1 != target.dim {
            return Err(BMapError::Components { expected: target.dim - 1, got: rest.len() });
        }
        let f1 = match (target.has_z, u.as_ref(), first) {
            (true, Some(u), _) => {
                if !source.has_z {
                    return Err(BMapError::SourceWithoutZ);
                }
                &Expr::coord(0) * u
            }
            (true, None, _) => return Err(BMapError::NotFactored),
            (false, _, Some(f)) => f,
            (false, Some(u), None) => &Expr::coord(0) * u,
            (false, None, None) => return Err(BMapError::NotFactored),
        };
        let mut components = vec![f1];
        components.extend(rest);
        if components.iter().any(|c| c.coord_bound() > source.dim)
            || u.as_ref().is_some_and(|u| u.coord_bound() > source.dim)
        {
            return Err(BMapError::Coordinate);
        }
        let u = if target.has_z { u } else { None };
        Ok(BMapModel {
            source,
            target,
            u,
            components,
        })
    }

    pub fn identity(chart: BChart) -> Self {
        let rest = (1..chart.dim).map(Expr::coord).collect();
        let u = chart.has_z.then(Expr::one);
        let first = (!chart.has_z).then(|| Expr::coord(0));
        BMapModel::new(chart.clone(), chart, u, first, rest).expect("identity is a b-map")
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    fn source_frame(&self) -> Frame {
        if self.source.has_z {
            Frame::Log
        } else {
            Frame::Smooth
        }
    }

    /// Pullbacks of the target coframe, in the source frame.
    pub fn pulled_coframe(&self, target_frame: Frame) -> Result<Vec<BForm>, BMapError> {
        let n = self.source.dim;
        let sf = self.source_frame();
        (0..self.target.dim)
            .map(|i| {
                if i == 0 && target_frame == Frame::Log {
                    let u = self.u.as_ref().ok_or(BMapError::FrameMismatch)?;
                    // f*λ = λ + du/u
                    let lam = BForm::coframe(n, Frame::Log, 0);
                    let du = BForm::d_scalar(n, Frame::Log, u);
                    if du.is_zero() {
                        return Ok(lam);
                    }
                    Ok(lam.add(&du.scale(&u.recip()))?)
                } else {
                    Ok(BForm::d_scalar(n, sf, &self.components[i]))
                }
            })
            .collect()
    }

    /// `f*a` for a form on the target chart.
    pub fn pullback(&self, a: &BForm) -> Result<BForm, BMapError> {
        if a.dim() != self.target.dim {
            return Err(BMapError::FormDimension { expected: self.target.dim, got: a.dim() });
        }
        if a.frame() == Frame::Log && !self.target.has_z {
            return Err(BMapError::FrameMismatch);
        }
        let coframe = self.pulled_coframe(a.frame())?;
        let out_frame = if a.frame() == Frame::Log { Frame::Log } else { self.source_frame() };
        let n = self.source.dim;
        let subs = |j: usize| self.components[j].clone();
        let mut out = BForm::zero(n, a.degree(), out_frame);
        for (mask, c) in a.coeffs() {
            let mut term = BForm::scalar(n, out_frame, c.substitute(&subs));
            for i in crate::form::indices_of(mask) {
                let e = if out_frame == coframe[i].frame() {
                    coframe[i].clone()
                } else {
                    coframe[i].to_log_frame()
                };
                term = term.wedge(&e)?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Minimum |u| over the source grid.
    pub fn u_margin(&self, cfg: &Config) -> (f64, Vec<f64>) {
        let Some(u) = &self.u else {
            return (f64::INFINITY, vec![]);
        };
        let pts = self.source.grid(cfg.grid_points).points();
        let c = u.compile();
        let mut best = (f64::INFINITY, vec![]);
        for p in pts {
            let v = c.eval(&p).abs();
            if !(v >= best.0) {
                best = (if v.is_nan() { 0.0 } else { v }, p);
            }
        }
        best
    }

    /// Checks `u` is nonvanishing on the sampled source domain.
    pub fn validate(&self, cfg: &Config) -> Certificate {
        let mut cert = Certificate::new("validate_bmap").with_grid(self.source.grid(cfg.grid_points).spec());
        cert.record_config(cfg);
        let (min_u, at) = self.u_margin(cfg);
        if self.u.is_some() {
            cert.check("min_abs_u", min_u, Relation::GreaterEq, cfg.tol.u_min);
            cert.fact("argmin_u", at);
        }
        cert.fact("source_has_z", self.source.has_z);
        cert.fact("target_has_z", self.target.has_z);
        cert
    }

    pub fn ensure_valid(&self, cfg: &Config) -> Result<(), BMapError> {
        let (min_abs, at) = self.u_margin(cfg);
        if min_abs < cfg.tol.u_min {
            return Err(BMapError::UVanishes { min_abs, at });
        }
        Ok(())
    }

    /// Compiled b-differential: row i is the pulled i-th target coframe.
    pub fn b_differential(&self) -> Result<Differential, BMapError> {
        let frame = if self.target.has_z { Frame::Log } else { Frame::Smooth };
        let rows = self.pulled_coframe(frame)?;
        let n = self.source.dim;
        let out_frame = if frame == Frame::Log { Frame::Log } else { self.source_frame() };
        Ok(Differential {
            rows: rows
                .iter()
                .map(|r| {
                    let r = if r.frame() == out_frame { r.clone() } else { r.to_log_frame() };
                    (0..n).map(|j| r.coeff(1 << j).compile()).collect()
                })
                .collect(),
            cols: n,
        })
    }

    /// Point image `f(x)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// Composition `self ∘ s` as expressions in the source of `s`.
    pub fn compose_after(&self, s: &BMapModel) -> Vec<Expr> {
        let subs = |j: usize| s.components[j].clone();
        self.components.iter().map(|c| c.substitute(&subs)).collect()
    }
}

/// Numeric b-differential evaluator.
#[derive(Debug, Clone)]
pub struct Differential {
    rows: Vec<Vec<CompiledExpr>>,
    cols: usize,
}

impl Differential {
    pub fn at(&self, p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.cols, |i, j| self.rows[i][j].eval(p))
    }
}

/// For a b-map `f` and a section `s` (f∘s = id), checks at sampled base
/// points that `ker b df ⊕ im b ds` spans the b-tangent space.
pub fn section_splitting_check(f: &BMapModel, s: &BMapModel, cfg: &Config) -> Result<Certificate, BMapError> {
    let base = s.source.grid(cfg.grid_points.min(2_000));
    let pts = base.points();
    let comp = f.compose_after(s);
    let residuals: Vec<Expr> = comp
        .iter()
        .enumerate()
        .map(|(j, c)| c - &Expr::coord(j))
        .collect();
    let verdict = zero_test_all(residuals.iter(), &pts, cfg.tol.zero);
    if !verdict.is_zero() {
        return Err(BMapError::NotSection(verdict.max_abs()));
    }
    let df = f.b_differential()?;
    let ds = s.b_differential()?;
    let n = f.source.dim;
    let mut min_rank = n;
    let mut worst = (f64::INFINITY, vec![]);
    for y in &pts {
        let x = s.apply(y);
        let k = crate::linalg::kernel_basis(&df.at(&x), cfg.tol.rank);
        let img = ds.at(y);
        let mut m = DMatrix::zeros(n, k.ncols() + img.ncols());
        m.columns_mut(0, k.ncols()).copy_from(&k);
        m.columns_mut(k.ncols(), img.ncols()).copy_from(&img);
        let svd = m.clone().svd(false, false);
        let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let r = crate::linalg::rank(&m, cfg.tol.rank);
        min_rank = min_rank.min(r);
        if smin < worst.0 {
            worst = (smin, y.clone());
        }
    }
    let mut cert = Certificate::new("section_splitting").with_grid(base.spec());
    cert.record_config(cfg);
    cert.fact("section_residual", verdict);
    cert.check("min_rank", min_rank as f64, Relation::GreaterEq, n as f64);
    cert.fact("min_singular_value", worst.0);
    cert.fact("argmin", worst.1);
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn e(s: &str) -> Expr {
        parse_expr(s, None).unwrap()
    }

    #[test]
    fn identity_pullback_is_identity() {
        let chart = BChart::torus(4, true);
        let id = BMapModel::identity(chart);
        let a = BForm::parse("sin(x2)*e{1,3} + x1*x4*e{2,4}", 4, Frame::Log).unwrap();
        assert_eq!(id.pullback(&a).unwrap(), a);
    }

    #[test]
    fn cylinder_projection_pullback() {
        let x = BChart::torus(4, true);
        let y = BChart::torus(2, true);
        let p = BMapModel::new(x, y, Some(Expr::one()), None, vec![e("x2")]).unwrap();
        let a = BForm::parse("e{1,2}", 2, Frame::Log).unwrap();
        assert_eq!(p.pullback(&a).unwrap(), BForm::parse("e{1,2}", 4, Frame::Log).unwrap());
    }

    #[test]
    fn log_derivative_of_factor() {
        // oracle: d log(x1 u) = dx1/x1 + du/u with u = 2 + sin x2
        let c = BChart::torus(2, true);
        let f = BMapModel::new(c.clone(), c, Some(e("2 + sin(x2)")), None, vec![e("x2")]).unwrap();
        let lam = BForm::parse("e{1}", 2, Frame::Log).unwrap();
        let got = f.pullback(&lam).unwrap();
        assert_eq!(got.coeff(1), Expr::one());
        for x2 in [-0.4, 0.0, 0.3] {
            let v = got.coeff(2).eval(&[0.1, x2]);
            assert!((v - x2.cos() / (2.0 + x2.sin())).abs() < 1e-15);
        }
    }

    #[test]
    fn pullback_commutes_with_d() {
        let c = BChart::torus(2, true);
        let f = BMapModel::new(c.clone(), c, Some(e("2 + sin(x2)")), None, vec![e("x2 + x1^2")]).unwrap();
        let a = BForm::parse("x2^2*e{1} + sin(x1)*e{2}", 2, Frame::Log).unwrap();
        let lhs = f.pullback(&a.b_d().unwrap()).unwrap();
        let rhs = f.pullback(&a).unwrap().b_d().unwrap();
        let diff = lhs.sub(&rhs).unwrap();
        let pts = c_points();
        assert!(zero_test_all(diff.coeffs().map(|(_, c)| c), &pts, 1e-10).is_zero());
    }

    fn c_points() -> Vec<Vec<f64>> {
        BChart::torus(2, true).grid(400).points()
    }

    #[test]
    fn validation_margins() {
        let cfg = Config::default();
        let t = BChart::torus(2, true);
        assert!(BMapModel::identity(t.clone()).validate(&cfg).pass);
        let bad = BMapModel::new(t.clone(), t.clone(), Some(e("x1")), None, vec![e("x2")]).unwrap();
        assert!(!bad.validate(&cfg).pass);
        assert!(matches!(
            BMapModel::new(t.clone(), t, None, None, vec![e("x2")]),
            Err(BMapError::NotFactored)
        ));
    }

    #[test]
    fn product_projection_is_valid() {
        let cfg = Config::default();
        let p = BMapModel::new(BChart::torus(4, true), BChart::torus(2, true), Some(Expr::one()), None, vec![e("x2")]).unwrap();
        assert!(p.validate(&cfg).pass);
    }
}
