//! Random inputs shared by the acceptance harness and property tests.
#![allow(dead_code)]

use logsymp::chart::BChart;
use logsymp::expr::Expr;
use logsymp::form::{mask_of, BForm, Frame};
use logsymp::linalg::{PairLemmaError, PairMaps};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_rational(r: &mut ChaCha8Rng) -> Expr {
    let mut n = r.random_range(-4..=4);
    if n == 0 {
        n = 1;
    }
    Expr::ratio(n, r.random_range(1..=3))
}

/// A sum of one to three terms `c · x_i^a · x_j^b · g`, with `g` one of
/// `1, sin(k x_i), cos(k x_i), exp(x_i/2)`.
pub fn random_expr(r: &mut ChaCha8Rng, dim: usize) -> Expr {
    let mut e = Expr::zero();
    for _ in 0..r.random_range(1..=3) {
        let mut t = small_rational(r);
        for _ in 0..r.random_range(0..=2) {
            t = &t * &Expr::coord(r.random_range(0..dim)).pow(r.random_range(1..=2));
        }
        let i = r.random_range(0..dim);
        let k = Expr::int(r.random_range(1..=2));
        let g = match r.random_range(0..4) {
            0 => Expr::one(),
            1 => (&k * &Expr::coord(i)).sin(),
            2 => (&k * &Expr::coord(i)).cos(),
            _ => (&Expr::ratio(1, 2) * &Expr::coord(i)).exp(),
        };
        e = &e + &(&t * &g);
    }
    e
}

fn subsets(dim: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << dim)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..dim).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// Random form of the given degree; each basis term appears with probability 0.6.
pub fn random_form(r: &mut ChaCha8Rng, dim: usize, degree: usize, frame: Frame) -> BForm {
    let mut a = BForm::zero(dim, degree, frame);
    for idx in subsets(dim, degree) {
        if r.random_bool(0.6) {
            a.set(mask_of(&idx), random_expr(r, dim));
        }
    }
    a
}

pub fn random_frame(r: &mut ChaCha8Rng) -> Frame {
    if r.random_bool(0.5) {
        Frame::Log
    } else {
        Frame::Smooth
    }
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

/// `I + s·R`, invertible for small `s`.
pub fn near_identity(r: &mut ChaCha8Rng, n: usize, s: f64) -> DMatrix<f64> {
    DMatrix::identity(n, n) + random_matrix(r, n, n) * (s / n as f64)
}

/// Random invertible matrix with condition number kept moderate.
pub fn random_invertible(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let m = random_matrix(r, n, n);
        let svd = m.clone().svd(false, false);
        let s = &svd.singular_values;
        if n == 0 || s.min() > 0.2 * s.max() {
            return m;
        }
    }
}

pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n / 2 {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// `S D S⁻¹` with `D` made of rotation-scaling blocks, so no real eigenvalues.
pub fn random_eigen_free(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for k in 0..n / 2 {
        let a = r.random_range(-2.0..2.0);
        let b = r.random_range(0.3..2.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        d[(2 * k, 2 * k)] = a;
        d[(2 * k + 1, 2 * k + 1)] = a;
        d[(2 * k, 2 * k + 1)] = -b;
        d[(2 * k + 1, 2 * k)] = b;
    }
    let s = random_invertible(r, n);
    &s * d * s.clone().try_inverse().unwrap()
}

/// Random complex structure `S J₀ S⁻¹`.
pub fn random_complex_structure(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let s = random_invertible(r, n);
    &s * standard_j(n) * s.clone().try_inverse().unwrap()
}

/// Closed b-symplectic 2-form on `[-1, 1]^dim`: a nondegenerate constant
/// part `PᵀJP` plus a small exact perturbation.
pub fn random_b_symplectic(r: &mut ChaCha8Rng, dim: usize) -> BForm {
    let p = near_identity(r, dim, 0.5);
    let c = p.transpose() * standard_j(dim).transpose() * &p;
    let mut w = BForm::zero(dim, 2, Frame::Log);
    for i in 0..dim {
        for j in i + 1..dim {
            let q = (c[(i, j)] * 64.0).round() as i64;
            if q != 0 {
                w.set(mask_of(&[i, j]), Expr::ratio(q, 64));
            }
        }
    }
    let mut alpha = BForm::zero(dim, 1, Frame::Log);
    for i in 0..dim {
        if r.random_bool(0.5) {
            alpha.set(mask_of(&[i]), random_expr(r, dim).scale(&logsymp::expr::rational(1, 40)));
        }
    }
    w.add(&alpha.b_d().unwrap()).unwrap()
}

/// Product of random elementary integer column operations and swaps.
pub fn random_unimodular(r: &mut impl Rng, n: usize) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..3 * n {
        let (i, j) = (r.random_range(0..n), r.random_range(0..n));
        if i == j {
            continue;
        }
        let k = r.random_range(-2..=2);
        for row in u.iter_mut() {
            row[i] += k * row[j];
        }
        if r.random_bool(0.3) {
            for row in u.iter_mut() {
                row.swap(i, j);
            }
        }
    }
    u
}

pub fn cube(dim: usize) -> BChart {
    BChart::cube(dim, 1.0, true)
}

/// Which hypothesis a negative control breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    Commuting,
    ImageRhoV,
    ImageRhoW,
    Quotient,
    Kernel,
    Shape,
}

pub const MUTATIONS: [Mutation; 6] = [
    Mutation::Commuting,
    Mutation::ImageRhoV,
    Mutation::ImageRhoW,
    Mutation::Quotient,
    Mutation::Kernel,
    Mutation::Shape,
];

impl Mutation {
    pub fn matches(self, e: &PairLemmaError) -> bool {
        matches!(
            (self, e),
            (Mutation::Commuting, PairLemmaError::NotCommuting(_))
                | (Mutation::ImageRhoV, PairLemmaError::ImageRhoV { .. })
                | (Mutation::ImageRhoW, PairLemmaError::ImageRhoW { .. })
                | (Mutation::Quotient, PairLemmaError::QuotientNotIso { .. })
                | (Mutation::Kernel, PairLemmaError::KernelNotIso { .. })
                | (Mutation::Shape, PairLemmaError::Shape(_))
        )
    }
}

fn block(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let (r0, c0) = a.shape();
    let (r1, c1) = d.shape();
    let mut m = DMatrix::zeros(r0 + r1, c0 + c1);
    m.view_mut((0, 0), (r0, c0)).copy_from(a);
    m.view_mut((0, c0), (r0, c1)).copy_from(b);
    m.view_mut((r0, 0), (r1, c0)).copy_from(c);
    m.view_mut((r0, c0), (r1, c1)).copy_from(d);
    m
}

fn singular(r: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    random_matrix(r, n, rank) * random_matrix(r, rank, n)
}

/// Tuple satisfying the pair-lemma hypotheses, built in adapted bases:
/// `F = B_W [[A, C], [0, D]] B_V⁻¹`, `bF = G_W [[K, X], [0, A]] G_V⁻¹`,
/// `ρ = M [0 | I] G⁻¹`, with `D`, `K` invertible and `A` possibly singular.
/// A mutation breaks exactly one hypothesis.
pub fn pair_tuple(r: &mut ChaCha8Rng, mutation: Option<Mutation>) -> PairMaps {
    let v1 = r.random_range(1..=3);
    let q = r.random_range(1..=3);
    let k = r.random_range(1..=3);
    let n = v1 + q;
    let bn = k + v1;
    let bv = random_invertible(r, n);
    let bw = random_invertible(r, n);
    let gv = random_invertible(r, bn);
    let gw = random_invertible(r, bn);
    let (mv, mw) = (bv.columns(0, v1).into_owned(), bw.columns(0, v1).into_owned());
    let a = if r.random_bool(0.5) {
        random_invertible(r, v1)
    } else {
        let rank = r.random_range(0..v1);
        singular(r, v1, rank)
    };
    let c = random_matrix(r, v1, q);
    let d = match mutation {
        Some(Mutation::Quotient) => singular(r, q, q - 1),
        _ => random_invertible(r, q),
    };
    let kk = match mutation {
        Some(Mutation::Kernel) => singular(r, k, k - 1),
        _ => random_invertible(r, k),
    };
    let x = random_matrix(r, k, v1);
    let f = &bw * block(&a, &c, &DMatrix::zeros(q, v1), &d) * bv.clone().try_inverse().unwrap();
    let mut bf = &gw * block(&kk, &x, &DMatrix::zeros(v1, k), &a) * gv.clone().try_inverse().unwrap();
    let proj = block(&DMatrix::zeros(0, k), &DMatrix::zeros(0, v1), &DMatrix::zeros(v1, k), &DMatrix::identity(v1, v1));
    let rho_v = &mv * &proj * gv.clone().try_inverse().unwrap();
    let rho_w = &mw * &proj * gw.clone().try_inverse().unwrap();
    let (mut v1m, mut w1m) = (mv.clone(), mw.clone());
    match mutation {
        Some(Mutation::Commuting) => {
            bf += &gw * block(&DMatrix::zeros(k, k), &DMatrix::zeros(k, v1), &DMatrix::zeros(v1, k), &DMatrix::identity(v1, v1))
                * gv.clone().try_inverse().unwrap();
        }
        Some(Mutation::ImageRhoV) => v1m = bv.columns(v1, 1).into_owned(),
        Some(Mutation::ImageRhoW) => w1m = bw.columns(v1, 1).into_owned(),
        Some(Mutation::Shape) => bf = random_matrix(r, bn + 1, bn),
        _ => {}
    }
    PairMaps { f, bf, rho_v, rho_w, v1: v1m, w1: w1m }
}
