//! Form-building constructions: Thurston assembly, the Lefschetz local
//! model and the log/folded conversions.

mod fold;
mod lefschetz;
mod profiles;
mod thurston;

use nalgebra::DMatrix;

use crate::bmap::BMapError;
use crate::expr::{CompiledExpr, Expr};
use crate::form::FormError;
use crate::geometry::GeometryError;
use crate::linalg::LinalgError;

pub use fold::{folded_to_log, log_to_folded, FoldOptions, FoldedForm};
pub use lefschetz::{lefschetz_local_eta, LefschetzModel, Primitive};
pub use profiles::{emit_profile_table, ProfileSpec};
pub use thurston::{dense_determinant_check, find_taming_t, thurston_assemble, CoverData, CoverDatum, TamingSearch, ThurstonOutput};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstructionError {
    #[error("taming precondition fails at {point:?}: {detail}")]
    Precondition { point: Vec<f64>, detail: String },
    #[error("no positive t found: q = {value} at {point:?} along {direction:?}")]
    NoTamingT { point: Vec<f64>, direction: Vec<f64>, value: f64 },
    #[error("cover data invalid: {0}")]
    Cover(String),
    #[error("radii must satisfy 0 < r0 < r1 (got {0}, {1})")]
    Radii(f64, f64),
    #[error("taming margin {margin} at {point:?}")]
    NotTame { point: Vec<f64>, margin: f64 },
    #[error("collar data: {0}")]
    Collar(String),
    #[error("θ is missing or degenerate: min |θ∧ω^(n-1)| on Z = {0}")]
    ThetaDegenerate(f64),
    #[error("not folded: {0}")]
    NotFolded(String),
    #[error("no valid t down to |t| = {0}")]
    NoValidT(f64),
    #[error("operator field has shape {got}, expected {expected}")]
    OperatorShape { expected: usize, got: usize },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    BMap(#[from] BMapError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A field of linear operators given by an expression matrix in the b-frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorField {
    entries: Vec<Vec<Expr>>,
}

impl OperatorField {
    pub fn new(entries: Vec<Vec<Expr>>) -> Result<Self, ConstructionError> {
        let n = entries.len();
        if let Some(r) = entries.iter().find(|r| r.len() != n) {
            return Err(ConstructionError::OperatorShape { expected: n, got: r.len() });
        }
        Ok(OperatorField { entries })
    }

    /// The constant standard structure `e_{2k-1} ↦ e_{2k}`.
    pub fn standard(dim: usize) -> Self {
        let m = crate::linalg::LinOp::standard(dim);
        OperatorField {
            entries: (0..dim)
                .map(|i| (0..dim).map(|j| Expr::from_f64(m.matrix()[(i, j)])).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<Expr>] {
        &self.entries
    }

    pub fn compile(&self) -> CompiledOperator {
        CompiledOperator {
            entries: self.entries.iter().map(|r| r.iter().map(Expr::compile).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledOperator {
    entries: Vec<Vec<CompiledExpr>>,
}

impl CompiledOperator {
    pub fn at(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.entries.len();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j].eval(p))
    }
}
