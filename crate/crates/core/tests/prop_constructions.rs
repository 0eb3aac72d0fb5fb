mod common;

use common::*;
use logsymp::bmap::BMapModel;
use logsymp::chart::BChart;
use logsymp::config::Config;
use logsymp::constructions::{
    folded_to_log, lefschetz_local_eta, log_to_folded, thurston_assemble, CoverData, CoverDatum, FoldOptions,
    OperatorField, Primitive, ProfileSpec, TamingSearch,
};
use logsymp::expr::{parse_expr, Expr};
use logsymp::form::{BForm, Frame};
use logsymp::geometry::{cosymplectic_extract, dual_bivector, log_symplectic_check};
use proptest::prelude::*;
use rand::Rng;

fn form(src: &str, dim: usize) -> BForm {
    BForm::parse(src, dim, Frame::Log).unwrap()
}

fn sym_min_eig(m: &nalgebra::DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Projection `T⁴ → T²` with a two-element fiber cover; the primitive
/// amplitudes are the random part.
fn product_case(a1: i64, a2: i64) -> (BMapModel, BForm, CoverData, OperatorField) {
    let x = BChart::new(vec![[-0.5, 0.5]; 4], vec![true; 4], true).unwrap();
    let y = BChart::new(vec![[-0.5, 0.5]; 2], vec![true; 2], true).unwrap();
    let f = BMapModel::new(x, y, Some(Expr::one()), None, vec![Expr::coord(1)]).unwrap();
    let omega_y = form("e{1,2}", 2);
    let weight = parse_expr("cos(pi*x1)^2", None).unwrap();
    let cover = CoverData {
        xi: form("e{3,4}", 4),
        items: vec![
            CoverDatum {
                weight: weight.clone(),
                region: None,
                eta: None,
                alpha: form(&format!("{a1}/(8*pi)*sin(2*pi*x3)*e{{4}}"), 4),
            },
            CoverDatum {
                weight: &Expr::one() - &weight,
                region: None,
                eta: None,
                alpha: form(&format!("{a2}/(8*pi)*cos(2*pi*x4)*e{{3}}"), 4),
            },
        ],
    };
    let j = OperatorField::new(
        [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
            .iter()
            .map(|row| row.iter().map(|&v| Expr::int(v)).collect())
            .collect(),
    )
    .unwrap();
    (f, omega_y, cover, j)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn thurston_output_is_closed_and_tame_below_t(a1 in 1i64..=3, a2 in 1i64..=3, s in 0.05f64..=1.0) {
        let cfg = Config { grid_points: 1_296, sphere_samples: 16, ..Config::default() };
        let (f, omega_y, cover, j) = product_case(a1, a2);
        let out = thurston_assemble(&f, &omega_y, &cover, &j, &cfg, &TamingSearch::default()).unwrap();
        prop_assert!(out.certificate.pass);
        prop_assert!(out.omega.b_d().unwrap().is_zero());
        prop_assert!(out.t > 0.0);
        // ω_{t'} = ω_t + (t' − t)η
        let t2 = s * out.t;
        let w2 = out.omega.add(&out.eta.scale(&Expr::constant(logsymp::expr::rational_from_f64(t2 - out.t)))).unwrap();
        let wc = w2.compile();
        let jc = j.compile();
        for p in f.source.grid(cfg.grid_points).points() {
            let m = wc.matrix_at(&p) * jc.at(&p);
            prop_assert!(sym_min_eig(&m) > 0.0, "t' = {t2} not tame at {p:?}");
        }
    }

    #[test]
    fn lefschetz_primitives_differ_by_exact_form(r0 in 0.2f64..0.25, r1 in 0.75f64..0.8) {
        let cfg = Config::default();
        let radial = lefschetz_local_eta(r0, r1, Primitive::Radial, &cfg).unwrap();
        let linear = lefschetz_local_eta(r0, r1, Primitive::Linear, &cfg).unwrap();
        prop_assert!(radial.certificate.pass && linear.certificate.pass);
        for c in &radial.certificate.checks {
            if c.name.starts_with("inner") || c.name.starts_with("outer") {
                prop_assert_eq!(Some(c.value), linear.certificate.margin(&c.name));
            }
        }
        // radial − linear primitive = −d(½(x1 y1 + x2 y2))
        let g = parse_expr("1/2*(x1*x2 + x3*x4)", None).unwrap();
        let r2 = parse_expr("x1^2 + x2^2 + x3^2 + x4^2", None).unwrap();
        let bump = Expr::profile(ProfileSpec::RadialBump { r0, r1 }.bump(), 0, r2);
        let expected = BForm::d_scalar(4, Frame::Smooth, &g)
            .scale(&(&bump - &Expr::one()))
            .b_d()
            .unwrap();
        prop_assert_eq!(radial.eta.sub(&linear.eta).unwrap(), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fold_then_unfold_restores_the_form(seed in any::<u64>(), four in any::<bool>()) {
        let mut r = rng(seed);
        let cfg = Config::default();
        let a = r.random_range(1..=4);
        let (chart, w) = if four {
            let b = r.random_range(-2..=2);
            let c = r.random_range(2..=4);
            let d = r.random_range(-1..=1);
            (
                BChart::new(vec![[-0.5, 0.5]; 4], vec![false, true, true, true], true).unwrap(),
                form(&format!("{a}/2*e{{1,2}} + {b}/8*cos(2*pi*x4)*e{{1,4}} + ({c}/2 + {d}/2*cos(2*pi*x3))*e{{3,4}}"), 4),
            )
        } else {
            (
                BChart::new(vec![[-0.5, 0.5], [-0.5, 0.5]], vec![false, true], true).unwrap(),
                form(&format!("({a} + 1/4*sin(2*pi*x2))*e{{1,2}}"), 2),
            )
        };
        let opts = FoldOptions::default();
        let folded = log_to_folded(&w, &chart, &opts, &cfg).unwrap();
        prop_assert!(folded.certificate.pass, "{:?}", folded.certificate.failed_checks());
        let theta = cosymplectic_extract(&w, &chart, &cfg).unwrap().theta;
        let (back, cert) = folded_to_log(&folded.omega, &theta, &chart, &opts, &cfg).unwrap();
        prop_assert!(cert.pass, "{:?}", cert.failed_checks());
        let pi = dual_bivector(&back, &chart, &cfg).unwrap();
        prop_assert!(log_symplectic_check(&pi.anchor(), &chart, &cfg).unwrap().pass);
        let width = 0.5;
        let diff = back.sub(&w).unwrap().compile();
        for p in chart.grid(cfg.grid_points).points() {
            if p[0].abs() >= opts.r1 * width {
                prop_assert!(diff.max_abs_at(&p) <= 1e-9);
            }
        }
    }
}
