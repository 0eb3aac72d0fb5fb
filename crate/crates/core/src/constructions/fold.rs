use serde::Serialize;

use super::ConstructionError;
use crate::certificate::{Certificate, Relation};
use crate::chart::BChart;
use crate::config::Config;
use crate::expr::{rational_from_f64, Expr, Profile, E2};
use crate::form::{BForm, Frame, FormError};
use crate::geometry::{
    closedness, cosymplectic_extract, dual_bivector, log_symplectic_check, pfaffian, transversality,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldOptions {
    /// Collar half-width in x1; defaults to the distance from Z to the
    /// nearest x1 boundary of the chart.
    pub collar: Option<f64>,
    pub r0: f64,
    pub r1: f64,
    /// Halvings allowed when searching `|t|`.
    pub max_halvings: usize,
}

impl Default for FoldOptions {
    fn default() -> Self {
        FoldOptions { collar: None, r0: 0.25, r1: 0.75, max_halvings: 40 }
    }
}

impl FoldOptions {
    fn collar_width(&self, chart: &BChart) -> f64 {
        self.collar
            .unwrap_or_else(|| (-chart.domain[0][0]).min(chart.domain[0][1]))
    }

    fn check(&self) -> Result<(), ConstructionError> {
        if !(0.0 < self.r0 && self.r0 < self.r1 && self.r1 <= 1.0) {
            return Err(ConstructionError::Radii(self.r0, self.r1));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FoldedForm {
    /// The folded form in the ordinary frame.
    pub omega: BForm,
    /// The same form written in the log frame (valid off Z), with the
    /// slope factor `x1·f'(x1/s)/s` as a single profile.
    pub log_view: BForm,
    /// Rescaling: the profile is `x²` for `|x1| <= s` and `ln` for `|x1| >= e²s`.
    pub scale: f64,
    pub certificate: Certificate,
}

fn x1() -> Expr {
    Expr::coord(0)
}

/// Smallest over Z of the largest coefficient of `(ω|_Z)^(n-1)`.
fn restricted_power_margin(omega: &BForm, zpts: &[Vec<f64>]) -> Result<f64, FormError> {
    let n = omega.dim() / 2;
    let p = omega.restrict_to_z().wedge_power(n - 1)?.compile();
    Ok(zpts
        .iter()
        .map(|x| p.max_abs_at(x))
        .fold(f64::INFINITY, f64::min))
}

/// Top-degree coefficient of a form on the chart minus the x1 slot.
fn z_top(form: &BForm) -> Expr {
    let full = ((1u32 << form.dim()) - 1) & !1;
    form.coeff(full)
}

fn min_abs(e: &Expr, pts: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let c = e.compile();
    let mut best = (f64::INFINITY, Vec::new());
    for p in pts {
        let v = c.eval(p).abs();
        if !(v >= best.0) {
            best = (if v.is_nan() { 0.0 } else { v }, p.clone());
        }
    }
    best
}

fn max_coeff_diff(a: &BForm, b: &BForm, pts: &[&Vec<f64>]) -> Result<f64, FormError> {
    let d = a.sub(b)?.compile();
    Ok(pts.iter().map(|p| d.max_abs_at(p)).fold(0.0, f64::max))
}

/// Replaces `λ∧β` by `d f(|x1|) ∧ β` near Z, with `f` the fold profile
/// rescaled so the collar `|x1| <= (e²+1)s` fits in `r1` of the collar width.
pub fn log_to_folded(omega_b: &BForm, chart: &BChart, opts: &FoldOptions, cfg: &Config) -> Result<FoldedForm, ConstructionError> {
    opts.check()?;
    if omega_b.frame() != Frame::Log {
        return Err(crate::geometry::GeometryError::WrongFrame("log").into());
    }
    let collar = cosymplectic_extract(omega_b, chart, cfg)?;
    let (beta, gamma) = omega_b.split_first_slot();
    if gamma.depends_on(0) {
        return Err(ConstructionError::Collar(
            "the λ-free part depends on x1 inside the collar".into(),
        ));
    }
    let width = opts.collar_width(chart);
    let s = opts.r1 * width / (E2 + 1.0);
    let s_expr = Expr::constant(rational_from_f64(s));
    let arg = &x1() * &s_expr.recip();
    let slope = &Expr::profile(Profile::FoldSlope, 0, arg.clone()) * &s_expr.recip();
    let logcoef = Expr::profile(Profile::FoldLogCoef, 0, arg);

    let n = omega_b.dim();
    let mut omega = BForm::zero(n, 2, Frame::Smooth);
    let mut log_view = BForm::zero(n, 2, Frame::Log);
    for (m, c) in gamma.coeffs() {
        omega.set(m, c.clone());
        log_view.set(m, c.clone());
    }
    for (m, c) in beta.coeffs() {
        omega.set(m | 1, &slope * c);
        log_view.set(m | 1, &logcoef * c);
    }

    let grid = chart.grid(cfg.grid_points);
    let pts = grid.points();
    let zpts = grid.z_points();
    let mut cert = Certificate::new("log_to_folded").with_grid(grid.spec());
    cert.record_config(cfg);
    cert.param("collar", width);
    cert.param("r1", opts.r1);
    cert.param("scale", s);
    cert.param("fold_kappa", crate::expr::fold_kappa());
    cert.fact("theta", collar.theta.to_string());
    cert.fact("sigma", collar.sigma.to_string());
    cert.fact("collar_margin", collar.margin);

    let monotone = (1..=4000).all(|i| Profile::FoldSlope.eval(0, (E2 + 2.0) * i as f64 / 4000.0) > 0.0);
    if !monotone {
        return Err(ConstructionError::Collar("fold profile is not monotone".into()));
    }
    cert.require("profile_monotone", monotone);

    let closed = closedness(&omega, &pts, cfg.tol.zero)?;
    cert.require("closed", closed.is_zero());
    cert.fact("d_omega", &closed);

    let h = pfaffian(&omega.expr_matrix());
    let report = transversality(&h, chart, cfg, None);
    cert.check("max_abs_h_on_z", report.max_abs_h_on_z, Relation::LessEq, cfg.tol.zero);
    cert.check("min_abs_dh_on_z", report.min_abs_dh_on_z, Relation::GreaterEq, cfg.tol.margin);
    cert.fact("fold_transversality", &report);
    let power = restricted_power_margin(&omega, &zpts)?;
    cert.check("restricted_power_margin", power, Relation::Greater, 0.0);

    let outside: Vec<&Vec<f64>> = pts.iter().filter(|p| p[0].abs() >= E2 * s).collect();
    let log_diff = max_coeff_diff(&log_view, omega_b, &outside)?;
    // compare with the anchor inverse of the input in the ordinary frame
    let mut inverse = BForm::zero(n, 2, Frame::Smooth);
    for (m, c) in omega_b.coeffs() {
        inverse.set(m, if m & 1 != 0 { c * &x1().recip() } else { c.clone() });
    }
    let ordinary = max_coeff_diff(&omega, &inverse, &outside)?;
    cert.fact("outside_collar_points", outside.len());
    cert.check("outside_collar_log_frame_diff", log_diff, Relation::LessEq, 1e-9);
    cert.check("outside_collar_ordinary_diff", ordinary, Relation::LessEq, 1e-9);
    if !report.pass {
        return Err(ConstructionError::NotFolded(format!(
            "fold transversality fails: max |h| on Z = {}, min |∂1 h| = {}",
            report.max_abs_h_on_z, report.min_abs_dh_on_z
        )));
    }
    Ok(FoldedForm { omega, log_view, scale: s, certificate: cert })
}

/// `ω_b = t k(x1) λ∧θ + ω` with `k λ = d(φ(|x1|) ln|x1|)`, `φ` a cutoff
/// equal to 1 on `|x1| <= r0·c` and 0 beyond `r1·c`.
pub fn folded_to_log(
    omega: &BForm,
    theta: &BForm,
    chart: &BChart,
    opts: &FoldOptions,
    cfg: &Config,
) -> Result<(BForm, Certificate), ConstructionError> {
    opts.check()?;
    if omega.frame() != Frame::Smooth || omega.degree() != 2 {
        return Err(crate::geometry::GeometryError::WrongFrame("ordinary").into());
    }
    if theta.degree() != 1 || theta.dim() != omega.dim() {
        return Err(FormError::WrongDegree { expected: 1, got: theta.degree() }.into());
    }
    if !chart.has_z {
        return Err(crate::geometry::GeometryError::NoZ.into());
    }
    let n = omega.dim();
    let half = n / 2;
    let grid = chart.grid(cfg.grid_points);
    let pts = grid.points();
    let zpts = grid.z_points();
    let mut cert = Certificate::new("folded_to_log").with_grid(grid.spec());
    cert.record_config(cfg);

    // folded hypotheses
    let closed = closedness(omega, &pts, cfg.tol.zero)?;
    if !closed.is_zero() {
        return Err(ConstructionError::NotFolded(format!("not closed (max {})", closed.max_abs())));
    }
    let report = transversality(&pfaffian(&omega.expr_matrix()), chart, cfg, None);
    if !report.pass {
        return Err(ConstructionError::NotFolded(format!(
            "ω^n does not vanish transversally on Z (max |h| = {}, min |∂1 h| = {})",
            report.max_abs_h_on_z, report.min_abs_dh_on_z
        )));
    }
    let power = restricted_power_margin(omega, &zpts)?;
    if !(power > 0.0) {
        return Err(ConstructionError::NotFolded("ω^(n-1) vanishes on Z".into()));
    }
    cert.fact("fold_transversality", &report);
    cert.check("restricted_power_margin", power, Relation::Greater, 0.0);

    // θ, extended constantly in x1
    if !theta.coeff(1).is_zero() {
        return Err(ConstructionError::Collar("θ has a dx1 component".into()));
    }
    let mut th = BForm::zero(n, 1, Frame::Log);
    for (m, c) in theta.coeffs() {
        th.set(m, c.substitute_coord(0, &Expr::zero()));
    }
    let d_theta = closedness(&th, &zpts, cfg.tol.zero)?;
    if !d_theta.is_zero() {
        return Err(ConstructionError::Collar(format!("θ is not closed (max {})", d_theta.max_abs())));
    }
    let omega_log = omega.to_log_frame();
    let on_z = omega_log.restrict_to_z();
    let vol = z_top(&th.wedge(&on_z.wedge_power(half - 1)?)?);
    let (theta_margin, _) = min_abs(&vol, &zpts);
    if !(theta_margin >= cfg.tol.collar) {
        return Err(ConstructionError::ThetaDegenerate(theta_margin));
    }
    cert.check("theta_margin", theta_margin, Relation::GreaterEq, cfg.tol.collar);

    // the closed b-form k(x1) λ∧θ
    let width = opts.collar_width(chart);
    let (lo, hi) = (opts.r0 * width, opts.r1 * width);
    let k = Expr::profile(
        Profile::LogCutoff { lo: rational_from_f64(lo), hi: rational_from_f64(hi) },
        0,
        x1(),
    );
    let lam_theta = BForm::coframe(n, Frame::Log, 0).wedge(&th)?.scale(&k);

    // sign from one off-Z sample inside the inner collar
    let mut probe: Vec<f64> = chart.domain.iter().map(|[a, b]| 0.5 * (a + b)).collect();
    probe[0] = 0.5 * lo;
    let top = (1u32 << n) - 1;
    let vol_omega = omega_log.wedge_power(half)?.coeff(top).eval(&probe);
    let vol_mixed = BForm::coframe(n, Frame::Log, 0)
        .wedge(&th)?
        .wedge(&omega_log.wedge_power(half - 1)?)?
        .coeff(top)
        .eval(&probe);
    if vol_omega == 0.0 || vol_mixed == 0.0 || !vol_omega.is_finite() || !vol_mixed.is_finite() {
        return Err(ConstructionError::ThetaDegenerate(vol_mixed.abs()));
    }
    let sign = if (vol_omega > 0.0) == (vol_mixed > 0.0) { 1.0 } else { -1.0 };
    cert.fact("orientation_probe", &probe);
    cert.param("t_sign", sign);

    let mut t_abs = 1.0;
    let mut halvings = 0;
    let (out, pf_min, sign_consistent) = loop {
        let t = Expr::from_f64(sign * t_abs);
        let candidate = omega_log.add(&lam_theta.scale(&t))?;
        let pf = pfaffian(&candidate.expr_matrix()).compile();
        let vals: Vec<f64> = pts.iter().map(|p| pf.eval(p)).collect();
        let min = vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let consistent = vals.iter().all(|v| *v > 0.0) || vals.iter().all(|v| *v < 0.0);
        if min >= cfg.tol.nondegenerate && consistent {
            break (candidate, min, consistent);
        }
        if halvings == opts.max_halvings {
            return Err(ConstructionError::NoValidT(t_abs));
        }
        t_abs *= 0.5;
        halvings += 1;
    };
    cert.param("t", sign * t_abs);
    cert.param("cutoff_lo", lo);
    cert.param("cutoff_hi", hi);
    cert.fact("halvings", halvings);
    cert.check("min_abs_b_pfaffian", pf_min, Relation::GreaterEq, cfg.tol.nondegenerate);
    cert.require("b_pfaffian_sign_constant", sign_consistent);

    let d_out = closedness(&out, &pts, cfg.tol.zero)?;
    cert.require("closed", d_out.is_zero());
    cert.fact("d_omega", &d_out);

    let outside: Vec<&Vec<f64>> = pts.iter().filter(|p| p[0].abs() >= hi).collect();
    let diff = max_coeff_diff(&out, &omega_log, &outside)?;
    cert.fact("outside_collar_points", outside.len());
    cert.check("outside_collar_diff", diff, Relation::LessEq, 1e-9);

    let pi = dual_bivector(&out, chart, cfg)?;
    let lsc = log_symplectic_check(&pi.anchor(), chart, cfg)?;
    cert.require("log_symplectic_check", lsc.pass);
    cert.fact("z_companion_zeros", &lsc.companion_zeros);
    cert.fact("log_symplectic_report", &lsc);
    Ok((out, cert))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config { grid_points: 2_000, ..Config::default() }
    }

    fn half_chart() -> BChart {
        BChart::new(vec![[-0.25, 0.25], [-0.5, 0.5]], vec![false, true], true).unwrap()
    }

    fn sin_model() -> BForm {
        BForm::parse("1/(2*pi)*recip(profile(sinc, 2*pi*x1))*e{1,2}", 2, Frame::Log).unwrap()
    }

    #[test]
    fn darboux_dim2_collar_is_x_squared() {
        let chart = BChart::cube(2, 12.0, true);
        let opts = FoldOptions { collar: Some((E2 + 1.0) / 0.75), ..FoldOptions::default() };
        let w = BForm::parse("e{1,2}", 2, Frame::Log).unwrap();
        let out = log_to_folded(&w, &chart, &opts, &cfg()).unwrap();
        assert_eq!(out.scale, 1.0);
        assert!(out.certificate.pass, "{:?}", out.certificate.failed_checks());
        for x in [-0.9, -0.3, 0.0, 0.5, 1.0] {
            assert!((out.omega.coeff(0b11).eval(&[x, 0.2]) - 2.0 * x).abs() < 1e-15);
        }
        // log region: 1/x1 exactly as the profile gives it
        let x = E2 + 1.0;
        assert!((out.omega.coeff(0b11).eval(&[x, 0.0]) - 1.0 / x).abs() < 1e-16);
    }

    #[test]
    fn sin_model_folds_and_returns() {
        let chart = half_chart();
        let w = sin_model();
        let folded = log_to_folded(&w, &chart, &FoldOptions::default(), &cfg()).unwrap();
        assert!(folded.certificate.pass, "{:?}", folded.certificate.failed_checks());
        let theta = cosymplectic_extract(&w, &chart, &cfg()).unwrap().theta;
        let (back, cert) = folded_to_log(&folded.omega, &theta, &chart, &FoldOptions::default(), &cfg()).unwrap();
        assert!(cert.pass, "{:?}", cert.failed_checks());
        let far: Vec<Vec<f64>> = chart
            .grid(2_000)
            .points()
            .into_iter()
            .filter(|p| p[0].abs() >= 0.1875)
            .collect();
        let d = back.sub(&w).unwrap().compile();
        let err = far.iter().map(|p| d.max_abs_at(p)).fold(0.0, f64::max);
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn sin_torus_folded_two_charts() {
        let chart = half_chart();
        let theta = BForm::parse("e{2}", 2, Frame::Smooth).unwrap();
        let a = BForm::parse("sin(2*pi*x1)*e{1,2}", 2, Frame::Smooth).unwrap();
        // component at x1 = 1/2, chart coordinate shifted by 1/2
        let b = BForm::parse("sin(2*pi*x1 + pi)*e{1,2}", 2, Frame::Smooth).unwrap();
        let (_, ca) = folded_to_log(&a, &theta, &chart, &FoldOptions::default(), &cfg()).unwrap();
        let (_, cb) = folded_to_log(&b, &theta, &chart, &FoldOptions::default(), &cfg()).unwrap();
        assert!(ca.pass && cb.pass);
        assert_eq!(ca.parameters["t_sign"], 1.0);
        assert_eq!(cb.parameters["t_sign"], -1.0);
    }

    #[test]
    fn darboux_folded_dim4() {
        let chart = BChart::cube(4, 0.5, true);
        let w = BForm::parse("x1*e{1,2} + e{3,4}", 4, Frame::Smooth).unwrap();
        let theta = BForm::parse("e{2}", 4, Frame::Smooth).unwrap();
        let (out, cert) = folded_to_log(&w, &theta, &chart, &FoldOptions::default(), &cfg()).unwrap();
        assert!(cert.pass, "{:?}", cert.failed_checks());
        // b-determinant oracle
        for p in chart.grid(625).points() {
            assert!(out.matrix_at(&p).determinant() > 0.0);
        }
        let zero = BForm::zero(4, 1, Frame::Smooth);
        assert!(matches!(
            folded_to_log(&w, &zero, &chart, &FoldOptions::default(), &cfg()),
            Err(ConstructionError::ThetaDegenerate(_))
        ));
    }

    #[test]
    fn darboux_collar_dim4_roundtrip() {
        let chart = BChart::new(vec![[-0.5, 0.5], [-0.5, 0.5], [-0.5, 0.5], [-0.5, 0.5]], vec![false, true, true, true], true).unwrap();
        let w = BForm::parse(
            "e{1,2} + 1/4*cos(2*pi*x4)*e{1,4} + (1 + 1/2*cos(2*pi*x3))*e{3,4}",
            4,
            Frame::Log,
        )
        .unwrap();
        let folded = log_to_folded(&w, &chart, &FoldOptions::default(), &cfg()).unwrap();
        assert!(folded.certificate.pass, "{:?}", folded.certificate.failed_checks());
        let theta = cosymplectic_extract(&w, &chart, &cfg()).unwrap().theta;
        let (_, cert) = folded_to_log(&folded.omega, &theta, &chart, &FoldOptions::default(), &cfg()).unwrap();
        assert!(cert.pass, "{:?}", cert.failed_checks());
    }

    #[test]
    fn x1_dependent_gamma_rejected() {
        let chart = BChart::cube(4, 0.5, true);
        let w = BForm::parse("e{1,2} + (1 + x1^2)*e{3,4}", 4, Frame::Log).unwrap();
        assert!(log_to_folded(&w, &chart, &FoldOptions::default(), &cfg()).is_err());
    }
}
