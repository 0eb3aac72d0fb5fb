mod common;

use common::*;
use logsymp::linalg::{blend_acs, is_tame, retract_to_acs, LinOp, SkewForm};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn even_dim() -> impl Strategy<Value = usize> {
    (1usize..=4).prop_map(|k| 2 * k)
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Complex structure `S J₀ S⁻¹` with `S` near the identity, so it tames
/// the standard form on the first block.
fn near_standard(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let s = near_identity(r, n, 0.3);
    &s * standard_j(n) * s.try_inverse().unwrap()
}

/// `(ω, T, J₁, J₂)` on `ℝ^(2m) ⊕ ℝ^(2k)`: `T` kills the second block, both
/// `J`s preserve it and tame the standard form on each block.
fn taming_pair(r: &mut ChaCha8Rng) -> (SkewForm, DMatrix<f64>, LinOp, LinOp) {
    let m = r.random_range(1..=2);
    let k = r.random_range(0..=1);
    let (a, b) = (2 * m, 2 * k);
    let t = block_diag(&DMatrix::identity(a, a), &DMatrix::zeros(b, b));
    let j1 = block_diag(&near_standard(r, a), &near_standard(r, b));
    let j2 = block_diag(&near_standard(r, a), &near_standard(r, b));
    let omega = SkewForm::new(standard_j(a + b).transpose()).unwrap();
    (omega, t, LinOp::new(j1).unwrap(), LinOp::new(j2).unwrap())
}

/// Dense sampled minimum of `ω(Tv, TJv)` over unit `v` orthogonal to ker T.
/// The complement comes from the SVD of `T`.
fn brute_force_margin(r: &mut ChaCha8Rng, omega: &DMatrix<f64>, t: &DMatrix<f64>, j: &DMatrix<f64>) -> f64 {
    let svd = t.clone().svd(false, true);
    let vt = svd.v_t.unwrap();
    let tol = 1e-9 * svd.singular_values.max().max(1.0);
    let rows: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    let basis = DMatrix::from_fn(t.ncols(), rows.len(), |i, c| vt[(rows[c], i)]);
    let mut best = f64::INFINITY;
    for _ in 0..200_000 {
        let u: Vec<f64> = (0..rows.len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-3 || norm > 1.0 {
            continue;
        }
        let v = &basis * DMatrix::from_column_slice(rows.len(), 1, &u) / norm;
        let q = ((t * &v).transpose() * omega * (t * j * &v))[(0, 0)];
        best = best.min(q);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn retraction_is_idempotent(seed in any::<u64>(), n in even_dim()) {
        let mut r = rng(seed);
        let a = LinOp::new(random_eigen_free(&mut r, n)).unwrap();
        let j = retract_to_acs(&a).unwrap();
        prop_assert!(j.complex_structure_residual() <= 1e-10);
        let jj = retract_to_acs(&j).unwrap();
        prop_assert!((jj.matrix() - j.matrix()).norm() <= 1e-10);
    }

    #[test]
    fn retraction_is_equivariant(seed in any::<u64>(), n in even_dim()) {
        let mut r = rng(seed);
        let a = random_eigen_free(&mut r, n);
        let t = random_invertible(&mut r, n);
        let b = &t * &a * t.clone().try_inverse().unwrap();
        let ja = retract_to_acs(&LinOp::new(a).unwrap()).unwrap();
        let jb = retract_to_acs(&LinOp::new(b).unwrap()).unwrap();
        let err = (&t * ja.matrix() - jb.matrix() * &t).norm();
        prop_assert!(err <= 1e-9 * t.norm(), "equivariance error {err:e}");
    }

    #[test]
    fn blending_preserves_taming(seed in any::<u64>(), w in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let (omega, t, j1, j2) = taming_pair(&mut r);
        prop_assume!(is_tame(&omega, &t, &j1).unwrap().tame && is_tame(&omega, &t, &j2).unwrap().tame);
        let (j, rep) = blend_acs(&[j1, j2], &[w, 1.0 - w], &t, &omega).unwrap();
        prop_assert!(rep.tame);
        prop_assert!(j.complex_structure_residual() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn margin_matches_sphere_sampling(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (omega, t, j, _) = taming_pair(&mut r);
        let rep = is_tame(&omega, &t, &j).unwrap();
        prop_assume!(rep.tame);
        let brute = brute_force_margin(&mut r, omega.matrix(), &t, j.matrix());
        prop_assert!(brute >= rep.margin - 1e-12, "sampled {brute} below margin {}", rep.margin);
        prop_assert!((brute - rep.margin).abs() <= 0.05 * rep.margin, "margin {} vs sampled {brute}", rep.margin);
    }
}
