//! The b-symplectic / log-Poisson dictionary and singular-locus checks.

use nalgebra::DMatrix;
use serde::Serialize;
use rayon::prelude::*;

use crate::bivector::BBivector;
use crate::chart::{BChart, GridSpec};
use crate::config::Config;
use crate::expr::{CompiledBatch, Expr};
use crate::form::{BForm, Frame, FormError};
use crate::zero::{zero_test, zero_test_all, ZeroVerdict};

/// Largest dimension handled by symbolic inversion.
pub const MAX_SYMBOLIC_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension {0} exceeds the symbolic limit of {MAX_SYMBOLIC_DIM}")]
    TooLarge(usize),
    #[error("chart has no hypersurface")]
    NoZ,
    #[error("chart has dimension {chart}, object has {object}")]
    ChartMismatch { chart: usize, object: usize },
    #[error("degenerate at {at:?}: |Pf| = {value}")]
    Degenerate { at: Vec<f64>, value: f64 },
    #[error("Schouten bracket [π,π] is nonzero (max {max_abs} at {at:?})")]
    NotPoisson { max_abs: f64, at: Vec<f64> },
    #[error("form is not closed (max |d| = {0})")]
    NotClosed(f64),
    #[error("θ is not closed (max |dθ| = {0})")]
    ThetaNotClosed(f64),
    #[error("σ is not closed (max |dσ| = {0})")]
    SigmaNotClosed(f64),
    #[error("degenerate collar data: min |θ∧σ^(n-1)| = {0}")]
    DegenerateCollar(f64),
    #[error("expected a {0}-frame object")]
    WrongFrame(&'static str),
    #[error(transparent)]
    Form(#[from] FormError),
}

fn minor(idx: &[usize], a: usize, b: usize) -> Vec<usize> {
    idx.iter().copied().filter(|&x| x != a && x != b).collect()
}

fn pf_expr(m: &[Vec<Expr>], idx: &[usize]) -> Expr {
    if idx.is_empty() {
        return Expr::one();
    }
    let mut acc = Expr::zero();
    for k in 1..idx.len() {
        let e = &m[idx[0]][idx[k]];
        if e.is_zero() {
            continue;
        }
        let t = e * &pf_expr(m, &minor(idx, idx[0], idx[k]));
        acc = if k % 2 == 1 { &acc + &t } else { &acc - &t };
    }
    acc
}

fn pf_num(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    (1..idx.len())
        .map(|k| {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            s * m[(idx[0], idx[k])] * pf_num(m, &minor(idx, idx[0], idx[k]))
        })
        .sum()
}

/// Pfaffian of an antisymmetric matrix of expressions (first-row expansion).
pub fn pfaffian(m: &[Vec<Expr>]) -> Expr {
    if m.len() % 2 == 1 {
        return Expr::zero();
    }
    pf_expr(m, &(0..m.len()).collect::<Vec<_>>())
}

pub fn pfaffian_f64(m: &DMatrix<f64>) -> f64 {
    if m.nrows() % 2 == 1 {
        return 0.0;
    }
    pf_num(m, &(0..m.nrows()).collect::<Vec<_>>())
}

/// Symbolic inverse of an antisymmetric matrix through Pfaffian minors:
/// `(A⁻¹)_{ji} = (-1)^{i+j+1} Pf(A without i, j) / Pf(A)` for `i < j`.
pub fn skew_inverse(m: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let n = m.len();
    let all: Vec<usize> = (0..n).collect();
    let inv_pf = pfaffian(m).recip();
    let mut out = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let p = pf_expr(m, &minor(&all, i, j));
            if p.is_zero() {
                continue;
            }
            // 0-based i + j has the same parity as 1-based i + j
            let v = &p * &inv_pf;
            let v = if (i + j) % 2 == 0 { -&v } else { v };
            out[i][j] = -&v;
            out[j][i] = v;
        }
    }
    out
}

/// Minimum `|Pf|` over the chart grid for a 2-form or bivector matrix.
fn degeneracy_scan(pf: &Expr, chart: &BChart, cfg: &Config) -> (f64, Vec<f64>) {
    let pts = chart.grid(cfg.grid_points).points();
    let c = pf.compile();
    let mut best = (f64::INFINITY, Vec::new());
    for p in pts {
        let v = c.eval(&p).abs();
        if !(v >= best.0) {
            best = (if v.is_nan() { 0.0 } else { v }, p);
        }
    }
    best
}

fn check_dims(chart: &BChart, dim: usize) -> Result<(), GeometryError> {
    if chart.dim != dim {
        return Err(GeometryError::ChartMismatch { chart: chart.dim, object: dim });
    }
    if dim > MAX_SYMBOLIC_DIM {
        return Err(GeometryError::TooLarge(dim));
    }
    Ok(())
}

/// `π = -Ω⁻¹`, entrywise in the frame of `ω`.
pub fn dual_bivector(omega: &BForm, chart: &BChart, cfg: &Config) -> Result<BBivector, GeometryError> {
    if omega.degree() != 2 {
        return Err(FormError::WrongDegree { expected: 2, got: omega.degree() }.into());
    }
    check_dims(chart, omega.dim())?;
    let m = omega.expr_matrix();
    let (min, at) = degeneracy_scan(&pfaffian(&m), chart, cfg);
    if min < cfg.tol.nondegenerate {
        return Err(GeometryError::Degenerate { at, value: min });
    }
    let inv = skew_inverse(&m);
    let neg: Vec<Vec<Expr>> = inv.iter().map(|r| r.iter().map(|e| -e).collect()).collect();
    Ok(BBivector::from_matrix(&neg, omega.frame()))
}

/// `ω = -Π⁻¹`, the inverse of [`dual_bivector`].
pub fn invert_bivector(pi: &BBivector, chart: &BChart, cfg: &Config) -> Result<BForm, GeometryError> {
    check_dims(chart, pi.dim())?;
    let m = pi.matrix();
    let (min, at) = degeneracy_scan(&pfaffian(&m), chart, cfg);
    if min < cfg.tol.nondegenerate {
        return Err(GeometryError::Degenerate { at, value: min });
    }
    let inv = skew_inverse(&m);
    let neg: Vec<Vec<Expr>> = inv.iter().map(|r| r.iter().map(|e| -e).collect()).collect();
    Ok(BForm::from_expr_matrix(&neg, pi.frame()))
}

/// Components `[π,π]^{ijk}` (up to an overall factor) for `i < j < k`:
/// the cyclic sum of `Σ_l π^{li} ∂_l π^{jk}`.
pub fn schouten_components(pi: &[Vec<Expr>]) -> Vec<((usize, usize, usize), Expr)> {
    let n = pi.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut s = Expr::zero();
                for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                    for (l, row) in pi.iter().enumerate() {
                        if row[a].is_zero() {
                            continue;
                        }
                        let d = pi[b][c].diff(l);
                        if !d.is_zero() {
                            s += &(&row[a] * &d);
                        }
                    }
                }
                out.push(((i, j, k), s));
            }
        }
    }
    out
}

/// Same components as [`schouten_components`], formed pointwise from
/// compiled entries and forward-mode first derivatives. Rational entries make the
/// expanded products far too large to build symbolically.
fn schouten_sampled(pi: &[Vec<Expr>], pts: &[Vec<f64>], tol: f64) -> ZeroVerdict {
    let n = pi.len();
    let batch = CompiledBatch::new(pi.iter().flatten());
    let worst = pts
        .par_iter()
        .map(|p| {
            let mut v = Vec::new();
            let mut dv = Vec::with_capacity(n);
            for l in 0..n {
                let (val, der) = batch.eval_with_derivative(p, l);
                v = val;
                dv.push(der);
            }
            let at = |i: usize, j: usize| v[i * n + j];
            let d = |l: usize, i: usize, j: usize| dv[l][i * n + j];
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let mut s = 0.0;
                        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                            for l in 0..n {
                                s += at(l, a) * d(l, b, c);
                            }
                        }
                        worst = if s.is_nan() { f64::INFINITY } else { worst.max(s.abs()) };
                    }
                }
            }
            (worst, p.clone())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .unwrap_or((0.0, Vec::new()));
    if worst.0 <= tol {
        ZeroVerdict::Sampled { max_abs: worst.0, points: pts.len(), tol }
    } else {
        ZeroVerdict::NonZero { max_abs: worst.0, at: worst.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalityReport {
    /// `h`, the Pfaffian of π, as an expression string.
    pub h: String,
    pub max_abs_h_on_z: f64,
    pub h_on_z_exact: bool,
    pub min_abs_dh_on_z: f64,
    pub argmin_dh: Vec<f64>,
    pub grid: GridSpec,
    pub zero_tol: f64,
    pub derivative_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schouten: Option<ZeroVerdict>,
    /// Other zeros of `h` along the x1 axis through the chart centre.
    pub companion_zeros: Vec<f64>,
    /// Whether `h` changes sign across Z at the sampled points.
    pub sign_change_across_z: bool,
    pub pass: bool,
}

/// Checks that `∧ⁿπ` vanishes transversally along `{x1 = 0}` and, in
/// dimension above 2, that `π` is Poisson. `pi` must be in the ordinary frame.
pub fn log_symplectic_check(pi: &BBivector, chart: &BChart, cfg: &Config) -> Result<TransversalityReport, GeometryError> {
    if pi.frame() != Frame::Smooth {
        return Err(GeometryError::WrongFrame("ordinary"));
    }
    check_dims(chart, pi.dim())?;
    if !chart.has_z {
        return Err(GeometryError::NoZ);
    }
    let m = pi.matrix();
    let schouten = if pi.dim() > 2 {
        let pts = chart.grid(cfg.grid_points.min(4_096)).points();
        let v = if m.iter().flatten().all(Expr::is_polynomial_trig) {
            let comps = schouten_components(&m);
            zero_test_all(comps.iter().map(|(_, e)| e), &pts, cfg.tol.zero)
        } else {
            schouten_sampled(&m, &pts, cfg.tol.zero)
        };
        if let ZeroVerdict::NonZero { max_abs, at } = &v {
            return Err(GeometryError::NotPoisson { max_abs: *max_abs, at: at.clone() });
        }
        Some(v)
    } else {
        None
    };
    Ok(transversality(&pfaffian(&m), chart, cfg, schouten))
}

/// Transversality of a scalar `h` along `{x1 = 0}` on the chart grid.
pub fn transversality(h: &Expr, chart: &BChart, cfg: &Config, schouten: Option<ZeroVerdict>) -> TransversalityReport {
    let grid = chart.grid(cfg.grid_points);
    let zpts = grid.z_points();
    let h_z = h.substitute_coord(0, &Expr::zero());
    let h_on_z = zero_test(&h_z, &zpts, cfg.tol.zero);
    let hb = CompiledBatch::new([h]);
    let mut min_dh = (f64::INFINITY, Vec::new());
    for p in &zpts {
        let v = hb.eval_with_derivative(p, 0).1[0].abs();
        if !(v >= min_dh.0) {
            min_dh = (if v.is_nan() { 0.0 } else { v }, p.clone());
        }
    }
    let hc = h.compile();
    let eps = 1e-3 * (chart.domain[0][1] - chart.domain[0][0]);
    let sign_change = zpts.iter().all(|p| {
        let mut a = p.clone();
        let mut b = p.clone();
        a[0] = -eps;
        b[0] = eps;
        hc.eval(&a) * hc.eval(&b) < 0.0
    });
    let companion = companion_zeros(h, chart, cfg.tol.zero);
    let max_h = h_on_z.max_abs();
    TransversalityReport {
        h: h.to_string(),
        max_abs_h_on_z: max_h,
        h_on_z_exact: h_on_z.is_exact(),
        min_abs_dh_on_z: min_dh.0,
        argmin_dh: min_dh.1,
        grid: grid.spec(),
        zero_tol: cfg.tol.zero,
        derivative_margin: cfg.tol.margin,
        schouten,
        companion_zeros: companion,
        sign_change_across_z: sign_change,
        pass: max_h <= cfg.tol.zero && min_dh.0 >= cfg.tol.margin,
    }
}

/// Zeros of `h` on the x1 axis through the chart centre, other than 0.
fn companion_zeros(h: &Expr, chart: &BChart, tol: f64) -> Vec<f64> {
    let c = h.compile();
    let mut base: Vec<f64> = chart.domain.iter().map(|[a, b]| 0.5 * (a + b)).collect();
    let [lo, hi] = chart.domain[0];
    let at = |x: f64, base: &mut Vec<f64>| {
        base[0] = x;
        c.eval(base)
    };
    let n = 4000;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if r.abs() > 1e-9 && roots.last().is_none_or(|&l| (r - l).abs() > 1e-9) {
            roots.push(r);
        }
    };
    let mut prev = at(xs[0], &mut base);
    if prev.abs() <= tol && !chart.is_periodic(0) {
        push(xs[0], &mut roots);
    }
    for w in xs.windows(2) {
        let v = at(w[1], &mut base);
        if v.abs() <= tol {
            push(w[1], &mut roots);
        } else if prev.abs() > tol && prev * v < 0.0 {
            let (mut a, mut b, mut fa) = (w[0], w[1], prev);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = at(m, &mut base);
                if fm * fa <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            push(0.5 * (a + b), &mut roots);
        }
        prev = v;
    }
    roots
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosymplecticData {
    #[serde(serialize_with = "display")]
    pub theta: BForm,
    #[serde(serialize_with = "display")]
    pub sigma: BForm,
    /// Minimum `|θ∧σ^(n-1)|` over the Z grid.
    pub margin: f64,
    pub d_theta: ZeroVerdict,
    pub d_sigma: ZeroVerdict,
    pub grid: GridSpec,
}

fn display<S: serde::Serializer>(f: &BForm, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(f)
}

/// Splits `ω = λ∧θ + σ` and restricts both parts to `{x1 = 0}`.
pub fn cosymplectic_extract(omega: &BForm, chart: &BChart, cfg: &Config) -> Result<CosymplecticData, GeometryError> {
    if omega.frame() != Frame::Log {
        return Err(GeometryError::WrongFrame("log"));
    }
    if omega.degree() != 2 {
        return Err(FormError::WrongDegree { expected: 2, got: omega.degree() }.into());
    }
    check_dims(chart, omega.dim())?;
    if !chart.has_z {
        return Err(GeometryError::NoZ);
    }
    let grid = chart.grid(cfg.grid_points);
    let pts = grid.points();
    let m = omega.expr_matrix();
    let (min, at) = degeneracy_scan(&pfaffian(&m), chart, cfg);
    if min < cfg.tol.nondegenerate {
        return Err(GeometryError::Degenerate { at, value: min });
    }
    let (beta, gamma) = omega.split_first_slot();
    let theta = beta.restrict_to_z();
    let sigma = gamma.restrict_to_z();
    let zpts = grid.z_points();
    let d_theta = closedness(&theta, &zpts, cfg.tol.zero)?;
    if !d_theta.is_zero() {
        return Err(GeometryError::ThetaNotClosed(d_theta.max_abs()));
    }
    let d_sigma = closedness(&sigma, &zpts, cfg.tol.zero)?;
    if !d_sigma.is_zero() {
        return Err(GeometryError::SigmaNotClosed(d_sigma.max_abs()));
    }
    let closed = closedness(omega, &pts, cfg.tol.zero)?;
    if !closed.is_zero() {
        return Err(GeometryError::NotClosed(closed.max_abs()));
    }
    let n = omega.dim() / 2;
    let top = theta.wedge(&sigma.wedge_power(n - 1)?)?;
    let full = ((1u32 << omega.dim()) - 1) & !1;
    let vol = top.coeff(full);
    let c = vol.compile();
    let margin = zpts.iter().map(|p| c.eval(p).abs()).fold(f64::INFINITY, f64::min);
    if !(margin >= cfg.tol.collar) {
        return Err(GeometryError::DegenerateCollar(margin));
    }
    Ok(CosymplecticData { theta, sigma, margin, d_theta, d_sigma, grid: grid.spec() })
}

/// Zero test of `b_d(a)`; top-degree forms are closed.
pub fn closedness(a: &BForm, pts: &[Vec<f64>], tol: f64) -> Result<ZeroVerdict, FormError> {
    if a.degree() >= a.dim() {
        return Ok(ZeroVerdict::Exact);
    }
    Ok(zero_test_all(a.b_d()?.coeffs().map(|(_, c)| c), pts, tol))
}

/// Largest deviation between two 2-forms over the chart grid.
pub fn max_form_difference(a: &BForm, b: &BForm, chart: &BChart, cfg: &Config) -> Result<f64, GeometryError> {
    let d = a.sub(b)?.compile();
    let pts = chart.grid(cfg.grid_points).points();
    let vals: Vec<f64> = pts.par_iter().map(|p| d.max_abs_at(p)).collect();
    Ok(vals.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config { grid_points: 2_000, ..Config::default() }
    }

    #[test]
    fn pfaffian_of_darboux() {
        let w = BForm::parse("e{1,2} + 3*e{3,4}", 4, Frame::Log).unwrap();
        assert_eq!(pfaffian(&w.expr_matrix()), Expr::int(3));
        let m = w.matrix_at(&[0.0; 4]);
        assert!((pfaffian_f64(&m).powi(2) - m.determinant()).abs() < 1e-12);
    }

    #[test]
    fn skew_inverse_matches_numeric() {
        // oracle: LU inverse of a constant skew matrix
        let w = BForm::parse(
            "2*e{1,2} + 1/3*e{1,3} - e{1,4} + 5*e{2,3} + 1/7*e{2,6} + e{3,4} - 2*e{4,5} + 3*e{5,6} + e{1,6}",
            6,
            Frame::Smooth,
        )
        .unwrap();
        let inv = skew_inverse(&w.expr_matrix());
        let num = w.matrix_at(&[0.0; 6]).try_inverse().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((inv[i][j].eval(&[0.0; 6]) - num[(i, j)]).abs() < 1e-12, "{i},{j}");
            }
        }
    }

    #[test]
    fn darboux_dual() {
        let chart = BChart::torus(4, true);
        let w = BForm::parse("e{1,2} + e{3,4}", 4, Frame::Log).unwrap();
        let pi = dual_bivector(&w, &chart, &cfg()).unwrap();
        assert_eq!(pi, BBivector::parse("e{1,2} + e{3,4}", 4, Frame::Log).unwrap());
        assert_eq!(pi.anchor(), BBivector::parse("x1*e{1,2} + e{3,4}", 4, Frame::Smooth).unwrap());
        assert_eq!(invert_bivector(&pi, &chart, &cfg()).unwrap(), w);
    }

    #[test]
    fn scalar_dual() {
        let chart = BChart::torus(2, true);
        let w = BForm::parse("2*e{1,2}", 2, Frame::Log).unwrap();
        let pi = dual_bivector(&w, &chart, &cfg()).unwrap();
        assert_eq!(pi, BBivector::parse("1/2*e{1,2}", 2, Frame::Log).unwrap());
    }

    #[test]
    fn degenerate_form_reports_location() {
        let chart = BChart::torus(2, true);
        let w = BForm::parse("x1*e{1,2}", 2, Frame::Log).unwrap();
        assert!(matches!(dual_bivector(&w, &chart, &cfg()), Err(GeometryError::Degenerate { .. })));
    }

    #[test]
    fn sin_torus_transversality() {
        let chart = BChart::torus(2, true);
        let pi = BBivector::parse("sin(2*pi*x1)*e{1,2}", 2, Frame::Smooth).unwrap();
        let r = log_symplectic_check(&pi, &chart, &cfg()).unwrap();
        assert!(r.pass);
        assert!((r.min_abs_dh_on_z - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(r.companion_zeros.len(), 1);
        assert!((r.companion_zeros[0] - 0.5).abs() < 1e-9);
        assert!(r.sign_change_across_z);
    }

    #[test]
    fn tangential_zero_fails() {
        let chart = BChart::torus(2, true);
        let pi = BBivector::parse("x1^2*e{1,2}", 2, Frame::Smooth).unwrap();
        let r = log_symplectic_check(&pi, &chart, &cfg()).unwrap();
        assert!(!r.pass);
        assert_eq!(r.min_abs_dh_on_z, 0.0);
    }

    #[test]
    fn darboux_anchor_passes() {
        let chart = BChart::torus(4, true);
        let pi = BBivector::parse("x1*e{1,2} + e{3,4}", 4, Frame::Smooth).unwrap();
        let r = log_symplectic_check(&pi, &chart, &cfg()).unwrap();
        assert!(r.pass && r.h_on_z_exact);
        assert_eq!(r.h, "x1");
        assert!(r.schouten.as_ref().unwrap().is_exact());
    }

    #[test]
    fn non_poisson_rejected() {
        let chart = BChart::torus(4, true);
        let pi = BBivector::parse("x1*e{1,2} + x2*e{2,3} + e{3,4}", 4, Frame::Smooth).unwrap();
        assert!(matches!(log_symplectic_check(&pi, &chart, &cfg()), Err(GeometryError::NotPoisson { .. })));
    }

    #[test]
    fn cosymplectic_examples() {
        let c4 = BChart::torus(4, true);
        let w = BForm::parse("e{1,2} + e{3,4}", 4, Frame::Log).unwrap();
        let d = cosymplectic_extract(&w, &c4, &cfg()).unwrap();
        assert_eq!(d.theta, BForm::parse("e{2}", 4, Frame::Log).unwrap());
        assert_eq!(d.sigma, BForm::parse("e{3,4}", 4, Frame::Log).unwrap());
        let c2 = BChart::torus(2, true);
        let d = cosymplectic_extract(&BForm::parse("e{1,2}", 2, Frame::Log).unwrap(), &c2, &cfg()).unwrap();
        assert!(d.sigma.is_zero() && d.margin == 1.0);
        let bad = BForm::parse("e{1,2} + x3*e{1,4} + e{3,4}", 4, Frame::Log).unwrap();
        assert!(matches!(
            cosymplectic_extract(&bad, &c4, &cfg()),
            Err(GeometryError::ThetaNotClosed(_))
        ));
    }
}
