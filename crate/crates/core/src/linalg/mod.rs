//! Pointwise linear algebra: skew forms, operators, tameness and the
//! retraction onto complex structures.

mod pair;
mod retract;
mod taming;

use nalgebra::{DMatrix, Schur};
use serde::Serialize;

pub use pair::{verify_pair_lemma, PairLemmaError, PairMaps};
pub use retract::{retract_to_acs, sqrtm_principal};
pub use taming::{blend_acs, is_tame, TamingReport};

/// Tolerance for `‖A² + I‖` when flagging complex structures.
pub const COMPLEX_STRUCTURE_TOL: f64 = 1e-12;
/// Relative tolerance on imaginary parts when deciding eigenvalue reality.
pub const REAL_EIG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not antisymmetric (max asymmetry {0})")]
    NotSkew(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("eigenvalue solver did not converge")]
    EigenNonConvergence,
    #[error("operator has a real eigenvalue {0} (threshold {1})")]
    RealEigenvalue(f64, f64),
    #[error("square root iteration did not converge (residual {0})")]
    SqrtNonConvergence(f64),
    #[error("singular matrix")]
    Singular,
    #[error("weights must be nonnegative and sum to 1 (sum {0})")]
    Weights(f64),
    #[error("blended operator is not tame (margin {0})")]
    NotTame(f64),
    #[error("input operator {0} is not a complex structure")]
    NotComplexStructure(usize),
}

/// Antisymmetric bilinear form `ω(v, w) = vᵀ Ω w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewForm {
    m: DMatrix<f64>,
}

impl SkewForm {
    /// Takes a full matrix; asymmetry beyond `1e-12·max(1, ‖Ω‖)` is rejected
    /// and the antisymmetric part is stored.
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
        }
        let asym = (&m + m.transpose()).amax();
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(LinalgError::NotSkew(asym));
        }
        Ok(SkewForm {
            m: (&m - m.transpose()) * 0.5,
        })
    }

    /// Builds from the strict upper triangle, row by row.
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self, LinalgError> {
        if upper.len() != dim * dim.saturating_sub(1) / 2 {
            return Err(LinalgError::Dimension(format!(
                "expected {} upper entries, got {}",
                dim * dim.saturating_sub(1) / 2,
                upper.len()
            )));
        }
        let mut m = DMatrix::zeros(dim, dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i + 1..dim {
                m[(i, j)] = upper[k];
                m[(j, i)] = -upper[k];
                k += 1;
            }
        }
        Ok(SkewForm { m })
    }

    /// The standard form `Σ dx_{2k-1} ∧ dx_{2k}`.
    pub fn standard(dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim / 2 {
            m[(2 * k, 2 * k + 1)] = 1.0;
            m[(2 * k + 1, 2 * k)] = -1.0;
        }
        SkewForm { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn eval(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                s += v[i] * self.m[(i, j)] * w[j];
            }
        }
        s
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn is_nondegenerate(&self, tol: f64) -> bool {
        self.determinant().abs() > tol
    }
}

/// Linear operator with a cached complex-structure flag.
#[derive(Debug, Clone, PartialEq)]
pub struct LinOp {
    m: DMatrix<f64>,
    is_complex_structure: bool,
}

impl LinOp {
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
        }
        let n = m.nrows();
        let res = (&m * &m + DMatrix::identity(n, n)).norm();
        Ok(LinOp {
            is_complex_structure: res <= COMPLEX_STRUCTURE_TOL,
            m,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::NotSquare(n, rows.first().map_or(0, Vec::len)));
        }
        LinOp::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// The standard structure: `e_{2k-1} ↦ e_{2k}`, `e_{2k} ↦ -e_{2k-1}`.
    pub fn standard(dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim / 2 {
            m[(2 * k + 1, 2 * k)] = 1.0;
            m[(2 * k, 2 * k + 1)] = -1.0;
        }
        LinOp { m, is_complex_structure: true }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn is_complex_structure(&self) -> bool {
        self.is_complex_structure
    }

    /// `‖A² + I‖` in the Frobenius norm.
    pub fn complex_structure_residual(&self) -> f64 {
        let n = self.dim();
        (&self.m * &self.m + DMatrix::identity(n, n)).norm()
    }

    pub fn neg(&self) -> LinOp {
        LinOp {
            m: -&self.m,
            is_complex_structure: self.is_complex_structure,
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.m)
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Eigenvalues as `(re, im)` pairs.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(LinalgError::EigenNonConvergence)?;
    Ok(schur.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealEigenvalueReport {
    pub has_real: bool,
    pub threshold: f64,
    /// Smallest `|Im λ| / max(1, |Re λ|)` over the spectrum.
    pub min_relative_imag: f64,
}

/// Eigenvalue-reality test with the threshold and closest margin recorded.
pub fn real_eigenvalue_report(a: &LinOp) -> Result<RealEigenvalueReport, LinalgError> {
    let eig = eigenvalues(a.matrix())?;
    let min_rel = eig
        .iter()
        .map(|&(re, im)| im.abs() / re.abs().max(1.0))
        .fold(f64::INFINITY, f64::min);
    Ok(RealEigenvalueReport {
        has_real: min_rel <= REAL_EIG_TOL,
        threshold: REAL_EIG_TOL,
        min_relative_imag: min_rel,
    })
}

pub fn has_real_eigenvalue(a: &LinOp) -> Result<bool, LinalgError> {
    Ok(real_eigenvalue_report(a)?.has_real)
}

/// Numerical rank: singular values above `tol·max(1, σ_max)`.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * smax.max(1.0)).count()
}

/// Orthonormal basis of the kernel, as columns.
pub fn kernel_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad to square so the SVD returns a full right basis
    let mut a = DMatrix::zeros(m.nrows().max(n), n);
    a.rows_mut(0, m.nrows()).copy_from(m);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax.max(1.0);
    let cols: Vec<_> = (0..n)
        .filter(|&k| svd.singular_values[k] <= cut)
        .map(|k| vt.row(k).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space, as columns.
pub fn range_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let r = rank(m, tol);
    if r == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let mut a = DMatrix::zeros(m.nrows(), m.ncols().max(m.nrows()));
    a.columns_mut(0, m.ncols()).copy_from(m);
    let svd = a.svd(true, false);
    let u = svd.u.expect("requested u");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    DMatrix::from_columns(&idx[..r].iter().map(|&k| u.column(k).into_owned()).collect::<Vec<_>>())
}

/// Orthonormal complement of the span of the columns of `k` in `ℝⁿ`.
pub fn orthogonal_complement(k: &DMatrix<f64>, n: usize, tol: f64) -> DMatrix<f64> {
    if k.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    kernel_basis(&k.transpose(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(rows: &[&[f64]]) -> LinOp {
        LinOp::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn real_eigenvalue_examples() {
        assert!(!has_real_eigenvalue(&op(&[&[0.0, -1.0], &[1.0, 0.0]])).unwrap());
        assert!(has_real_eigenvalue(&op(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap());
        // characteristic polynomial t² + 4: roots ±2i
        assert!(!has_real_eigenvalue(&op(&[&[0.0, -4.0], &[1.0, 0.0]])).unwrap());
        // t² - 2t + 2 has roots 1 ± i; t² - 3t + 2 has roots 1, 2
        assert!(!has_real_eigenvalue(&op(&[&[1.0, -1.0], &[1.0, 1.0]])).unwrap());
        assert!(has_real_eigenvalue(&op(&[&[3.0, -2.0], &[1.0, 0.0]])).unwrap());
    }

    #[test]
    fn kernel_and_complement() {
        let t = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let k = kernel_basis(&t, 1e-9);
        assert_eq!(k.ncols(), 2);
        assert!((&t * &k).amax() < 1e-14);
        let c = orthogonal_complement(&k, 4, 1e-9);
        assert_eq!(c.ncols(), 2);
        assert!((k.transpose() * &c).amax() < 1e-14);
        assert_eq!(rank(&t, 1e-9), 2);
        assert_eq!(range_basis(&t, 1e-9).ncols(), 2);
    }

    #[test]
    fn complex_structure_flag() {
        assert!(op(&[&[1.0, -2.0], &[1.0, -1.0]]).is_complex_structure());
        assert!(!op(&[&[0.0, -4.0], &[1.0, 0.0]]).is_complex_structure());
        assert!(LinOp::standard(4).is_complex_structure());
        assert!(LinOp::new(LinOp::standard(4).matrix().clone()).unwrap().is_complex_structure());
    }

    #[test]
    fn skew_form_validation() {
        assert!(SkewForm::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).is_err());
        let w = SkewForm::from_upper(4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(w, SkewForm::standard(4));
        assert_eq!(w.eval(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]), 1.0);
    }
}
