//! Differential forms in a single chart, in the b-coframe
//! `{λ = dx1/x1, dx2, ..., dxm}` or the ordinary coframe `{dx1, ..., dxm}`.
//!
//! Basis k-vectors are index bitmasks (bit `i` is slot `i+1`), so a
//! coefficient map keyed by mask is antisymmetric by construction. In the
//! log frame an ordinary `dx1` is always stored as `x1·λ`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::expr::{parse_form_terms, CompiledBatch, Expr, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Slot 1 is `λ = dx1/x1`.
    #[serde(alias = "b")]
    Log,
    /// Slot 1 is `dx1`.
    #[serde(alias = "ordinary")]
    Smooth,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormError {
    #[error("chart dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("degree {0} exceeds chart dimension {1}")]
    Degree(usize, usize),
    #[error("coframe mismatch")]
    Frame,
    #[error("expected a form of degree {expected}, got {got}")]
    WrongDegree { expected: usize, got: usize },
    #[error("parse error {0}")]
    Parse(#[from] ParseError),
    #[error("coefficient uses x{0} outside the chart")]
    Coordinate(usize),
}

/// Sign of `e_a ∧ e_b` relative to `e_{a|b}`, or `None` if they share a slot.
pub fn wedge_sign(a: u32, b: u32) -> Option<i32> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    Some(if swaps % 2 == 0 { 1 } else { -1 })
}

/// Mask of a sorted index list (zero-based).
pub fn mask_of(indices: &[usize]) -> u32 {
    indices.iter().fold(0, |m, i| m | (1 << i))
}

pub fn indices_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BForm {
    dim: usize,
    degree: usize,
    frame: Frame,
    coeffs: BTreeMap<u32, Expr>,
}

impl BForm {
    pub fn zero(dim: usize, degree: usize, frame: Frame) -> Self {
        BForm {
            dim,
            degree,
            frame,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn scalar(dim: usize, frame: Frame, e: Expr) -> Self {
        let mut f = BForm::zero(dim, 0, frame);
        f.set(0, e);
        f
    }

    /// Basis element from zero-based indices (any order; sign applied).
    pub fn basis(dim: usize, frame: Frame, indices: &[usize]) -> Self {
        let mut f = BForm::scalar(dim, frame, Expr::one());
        for &i in indices {
            f = f.wedge(&BForm::coframe(dim, frame, i)).expect("basis within chart");
        }
        f
    }

    /// The i-th coframe element as stored (λ for i = 0 in the log frame).
    pub fn coframe(dim: usize, frame: Frame, i: usize) -> Self {
        let mut f = BForm::zero(dim, 1, frame);
        f.set(1 << i, Expr::one());
        f
    }

    /// The ordinary differential `dx_i`, normalized for the frame.
    pub fn dx(dim: usize, frame: Frame, i: usize) -> Self {
        let mut f = BForm::zero(dim, 1, frame);
        let c = if i == 0 && frame == Frame::Log { Expr::coord(0) } else { Expr::one() };
        f.set(1 << i, c);
        f
    }

    /// Exterior derivative of a function.
    pub fn d_scalar(dim: usize, frame: Frame, e: &Expr) -> Self {
        BForm::scalar(dim, frame, e.clone()).b_d().expect("degree 0 < dim")
    }

    pub fn parse(src: &str, dim: usize, frame: Frame) -> Result<Self, FormError> {
        let (degree, coeffs) = parse_form_terms(src, Some(dim))?;
        Ok(BForm {
            dim,
            degree: degree.unwrap_or(0),
            frame,
            coeffs,
        })
    }

    /// Parses and checks the degree; the literal `0` is accepted for any degree.
    pub fn parse_degree(src: &str, dim: usize, frame: Frame, degree: usize) -> Result<Self, FormError> {
        let (d, coeffs) = parse_form_terms(src, Some(dim))?;
        match d {
            None => Ok(BForm::zero(dim, degree, frame)),
            Some(d) if d == degree => Ok(BForm { dim, degree, frame, coeffs }),
            Some(d) => Err(FormError::WrongDegree { expected: degree, got: d }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn coeff(&self, mask: u32) -> Expr {
        self.coeffs.get(&mask).cloned().unwrap_or_default()
    }

    /// Coefficient by zero-based sorted indices.
    pub fn coeff_at(&self, indices: &[usize]) -> Expr {
        self.coeff(mask_of(indices))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (u32, &Expr)> {
        self.coeffs.iter().map(|(k, v)| (*k, v))
    }

    pub fn set(&mut self, mask: u32, e: Expr) {
        debug_assert_eq!(mask.count_ones() as usize, self.degree);
        if e.is_zero() {
            self.coeffs.remove(&mask);
        } else {
            self.coeffs.insert(mask, e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check_compatible(&self, other: &BForm) -> Result<(), FormError> {
        if self.dim != other.dim {
            return Err(FormError::Dimension(self.dim, other.dim));
        }
        if self.frame != other.frame {
            return Err(FormError::Frame);
        }
        Ok(())
    }

    pub fn add(&self, other: &BForm) -> Result<BForm, FormError> {
        self.check_compatible(other)?;
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(FormError::WrongDegree { expected: self.degree, got: other.degree });
        }
        let mut out = if self.is_zero() { other.clone() } else { self.clone() };
        let src = if self.is_zero() { &BForm::zero(self.dim, 0, self.frame) } else { other };
        for (m, c) in &src.coeffs {
            let next = &out.coeff(*m) + c;
            out.set(*m, next);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &BForm) -> Result<BForm, FormError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, s: &Expr) -> BForm {
        let mut out = BForm::zero(self.dim, self.degree, self.frame);
        for (m, c) in &self.coeffs {
            out.set(*m, c * s);
        }
        out
    }

    pub fn wedge(&self, other: &BForm) -> Result<BForm, FormError> {
        self.check_compatible(other)?;
        let degree = self.degree + other.degree;
        if degree > self.dim {
            return Err(FormError::Degree(degree, self.dim));
        }
        let mut out = BForm::zero(self.dim, degree, self.frame);
        for (ma, ca) in &self.coeffs {
            for (mb, cb) in &other.coeffs {
                if let Some(sign) = wedge_sign(*ma, *mb) {
                    let term = &(ca * cb) * &Expr::int(sign as i64);
                    let next = &out.coeff(ma | mb) + &term;
                    out.set(ma | mb, next);
                }
            }
        }
        Ok(out)
    }

    /// `k`-fold wedge power (`k = 0` gives the constant 1).
    pub fn wedge_power(&self, k: usize) -> Result<BForm, FormError> {
        let mut out = BForm::scalar(self.dim, self.frame, Expr::one());
        for _ in 0..k {
            out = out.wedge(self)?;
        }
        Ok(out)
    }

    /// Exterior derivative in the frame: `dλ = 0` and `dx1 = x1·λ`.
    pub fn b_d(&self) -> Result<BForm, FormError> {
        if self.degree >= self.dim {
            return Err(FormError::Degree(self.degree + 1, self.dim));
        }
        let mut out = BForm::zero(self.dim, self.degree + 1, self.frame);
        for (m, c) in &self.coeffs {
            for j in 0..self.dim {
                let Some(sign) = wedge_sign(1 << j, *m) else { continue };
                let mut dc = c.diff(j);
                if dc.is_zero() {
                    continue;
                }
                if j == 0 && self.frame == Frame::Log {
                    dc = &dc * &Expr::coord(0);
                }
                let key = m | (1 << j);
                let next = &out.coeff(key) + &(&dc * &Expr::int(sign as i64));
                out.set(key, next);
            }
        }
        Ok(out)
    }

    /// Rewrites an ordinary-frame form in the log frame (multiplying every
    /// coefficient carrying slot 1 by `x1`).
    pub fn to_log_frame(&self) -> BForm {
        match self.frame {
            Frame::Log => self.clone(),
            Frame::Smooth => {
                let mut out = BForm::zero(self.dim, self.degree, Frame::Log);
                for (m, c) in &self.coeffs {
                    let c = if m & 1 != 0 { c * &Expr::coord(0) } else { c.clone() };
                    out.set(*m, c);
                }
                out
            }
        }
    }

    /// Pullback to `{x1 = 0}` in the same chart: substitutes `x1 = 0`
    /// and drops every term with slot 1.
    pub fn restrict_to_z(&self) -> BForm {
        let mut out = BForm::zero(self.dim, self.degree, self.frame);
        for (m, c) in &self.coeffs {
            if m & 1 == 0 {
                out.set(*m, c.substitute_coord(0, &Expr::zero()));
            }
        }
        out
    }

    /// Interior product-like extraction: the 1-form β with `self = λ∧β + γ`
    /// for a 2-form (slot 1 removed), and γ the slot-1-free part.
    pub fn split_first_slot(&self) -> (BForm, BForm) {
        let mut beta = BForm::zero(self.dim, self.degree.saturating_sub(1), self.frame);
        let mut gamma = BForm::zero(self.dim, self.degree, self.frame);
        for (m, c) in &self.coeffs {
            if m & 1 != 0 {
                // e_1 ∧ e_rest with rest = m without bit 0: sign +1
                beta.set(m & !1, c.clone());
            } else {
                gamma.set(*m, c.clone());
            }
        }
        (beta, gamma)
    }

    pub fn depends_on(&self, i: usize) -> bool {
        self.coeffs.values().any(|c| c.depends_on(i))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> BForm {
        let mut out = BForm::zero(self.dim, self.degree, self.frame);
        for (m, c) in &self.coeffs {
            out.set(*m, f(c));
        }
        out
    }

    pub fn with_dim(&self, dim: usize) -> Result<BForm, FormError> {
        if dim < self.coeffs.keys().map(|m| 32 - m.leading_zeros() as usize).max().unwrap_or(0) {
            return Err(FormError::Dimension(self.dim, dim));
        }
        for c in self.coeffs.values() {
            if c.coord_bound() > dim {
                return Err(FormError::Coordinate(c.coord_bound()));
            }
        }
        Ok(BForm { dim, ..self.clone() })
    }

    pub fn compile(&self) -> CompiledForm {
        CompiledForm {
            dim: self.dim,
            degree: self.degree,
            masks: self.coeffs.keys().copied().collect(),
            batch: CompiledBatch::new(self.coeffs.values()),
        }
    }

    /// Numeric coefficients at a point.
    pub fn evaluate(&self, p: &[f64]) -> BTreeMap<u32, f64> {
        self.coeffs.iter().map(|(m, c)| (*m, c.eval(p))).collect()
    }

    /// Antisymmetric coefficient matrix of a 2-form at a point.
    pub fn matrix_at(&self, p: &[f64]) -> DMatrix<f64> {
        self.compile().matrix_at(p)
    }

    /// Antisymmetric matrix of expressions (2-forms only).
    pub fn expr_matrix(&self) -> Vec<Vec<Expr>> {
        assert_eq!(self.degree, 2);
        let n = self.dim;
        let mut m = vec![vec![Expr::zero(); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = self.coeff_at(&[i, j]);
                m[j][i] = -&c;
                m[i][j] = c;
            }
        }
        m
    }

    pub fn from_expr_matrix(m: &[Vec<Expr>], frame: Frame) -> BForm {
        let n = m.len();
        let mut f = BForm::zero(n, 2, frame);
        for i in 0..n {
            for j in (i + 1)..n {
                f.set(mask_of(&[i, j]), m[i][j].clone());
            }
        }
        f
    }
}

/// Float evaluator for a form.
#[derive(Debug, Clone)]
pub struct CompiledForm {
    dim: usize,
    degree: usize,
    masks: Vec<u32>,
    batch: CompiledBatch,
}

impl CompiledForm {
    pub fn matrix_at(&self, p: &[f64]) -> DMatrix<f64> {
        assert_eq!(self.degree, 2, "matrix of a non-2-form");
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (mask, v) in self.masks.iter().zip(self.batch.eval(p)) {
            let idx = indices_of(*mask);
            m[(idx[0], idx[1])] = v;
            m[(idx[1], idx[0])] = -v;
        }
        m
    }

    pub fn values_at(&self, p: &[f64]) -> Vec<(u32, f64)> {
        self.masks.iter().copied().zip(self.batch.eval(p)).collect()
    }

    /// Largest absolute coefficient at a point.
    pub fn max_abs_at(&self, p: &[f64]) -> f64 {
        self.batch.eval(p).into_iter().map(f64::abs).fold(0.0, f64::max)
    }

    /// Coefficient of the top-degree slot (or of one mask).
    pub fn coeff_at(&self, mask: u32, p: &[f64]) -> f64 {
        match self.masks.iter().position(|m| *m == mask) {
            Some(k) => self.batch.eval(p)[k],
            None => 0.0,
        }
    }
}

impl fmt::Display for BForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if *m == 0 {
                write!(f, "({c})")?;
            } else {
                let idx: Vec<String> = indices_of(*m).iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "({c})*e{{{}}}", idx.join(","))?;
            }
        }
        Ok(())
    }
}
