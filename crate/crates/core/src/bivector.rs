//! Bivectors in the b-frame `{x1∂1, ∂2, ..., ∂m}` or the ordinary frame.

use std::fmt;

use crate::expr::Expr;
use crate::form::{BForm, Frame, FormError};

/// Antisymmetric 2-vector field. Storage reuses the 2-form layout; the
/// frame tag says whether slot 1 is `x1∂1` (log) or `∂1` (smooth).
#[derive(Debug, Clone, PartialEq)]
pub struct BBivector {
    entries: BForm,
}

impl BBivector {
    pub fn from_entries(entries: BForm) -> Result<Self, FormError> {
        if entries.degree() != 2 && !entries.is_zero() {
            return Err(FormError::WrongDegree { expected: 2, got: entries.degree() });
        }
        Ok(BBivector { entries })
    }

    /// Parses `coef * e{i,j}` sums, where `e{i,j}` stands for `e_i ∧ e_j` of the frame.
    pub fn parse(src: &str, dim: usize, frame: Frame) -> Result<Self, FormError> {
        Ok(BBivector {
            entries: BForm::parse_degree(src, dim, frame, 2)?,
        })
    }

    pub fn from_matrix(m: &[Vec<Expr>], frame: Frame) -> Self {
        BBivector {
            entries: BForm::from_expr_matrix(m, frame),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn frame(&self) -> Frame {
        self.entries.frame()
    }

    pub fn entry(&self, i: usize, j: usize) -> Expr {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.entries.coeff_at(&[i, j]),
            std::cmp::Ordering::Greater => -&self.entries.coeff_at(&[j, i]),
            std::cmp::Ordering::Equal => Expr::zero(),
        }
    }

    pub fn matrix(&self) -> Vec<Vec<Expr>> {
        self.entries.expr_matrix()
    }

    pub fn storage(&self) -> &BForm {
        &self.entries
    }

    /// Image under the anchor `x1∂1 ↦ x1·∂1`: an ordinary bivector.
    pub fn anchor(&self) -> BBivector {
        match self.frame() {
            Frame::Smooth => self.clone(),
            Frame::Log => {
                let mut out = BForm::zero(self.dim(), 2, Frame::Smooth);
                for (m, c) in self.entries.coeffs() {
                    let c = if m & 1 != 0 { c * &Expr::coord(0) } else { c.clone() };
                    out.set(m, c);
                }
                BBivector { entries: out }
            }
        }
    }
}

impl fmt::Display for BBivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.entries.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_multiplies_first_slot() {
        let pi = BBivector::parse("e{1,2} + e{3,4}", 4, Frame::Log).unwrap();
        let a = pi.anchor();
        assert_eq!(a.entry(0, 1), Expr::coord(0));
        assert_eq!(a.entry(1, 0), -&Expr::coord(0));
        assert_eq!(a.entry(2, 3), Expr::one());
    }
}
