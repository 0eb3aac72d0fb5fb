use nalgebra::DMatrix;
use serde::Serialize;

use super::{
    kernel_basis, orthogonal_complement, real_eigenvalue_report, retract_to_acs, LinOp, LinalgError, SkewForm,
};

const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TamingReport {
    pub tame: bool,
    /// Smallest eigenvalue of the symmetrized descended form on a
    /// complement of `ker T`. `-inf` when `J` does not preserve `ker T`.
    pub margin: f64,
    pub kernel_dim: usize,
    pub kernel_j_complex: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Checks `ω(Tv, TJv) > 0` for `v ∉ ker T`, where `T: V -> W` is given as a
/// `dim W × dim V` matrix.
pub fn is_tame(omega: &SkewForm, t: &DMatrix<f64>, j: &LinOp) -> Result<TamingReport, LinalgError> {
    if t.nrows() != omega.dim() || t.ncols() != j.dim() {
        return Err(LinalgError::Dimension(format!(
            "ω is {0}x{0}, T is {1}x{2}, J is {3}x{3}",
            omega.dim(),
            t.nrows(),
            t.ncols(),
            j.dim()
        )));
    }
    let n = j.dim();
    let k = kernel_basis(t, RANK_TOL);
    let kernel_dim = k.ncols();
    if kernel_dim > 0 {
        let leak = (t * j.matrix() * &k).amax();
        if leak > 1e-9 * t.amax().max(1.0) * j.matrix().amax().max(1.0) {
            return Ok(TamingReport {
                tame: false,
                margin: f64::NEG_INFINITY,
                kernel_dim,
                kernel_j_complex: false,
                reason: Some("not tame, kernel not J-complex".into()),
            });
        }
    }
    let c = orthogonal_complement(&k, n, RANK_TOL);
    if c.ncols() == 0 {
        return Ok(TamingReport {
            tame: true,
            margin: f64::INFINITY,
            kernel_dim,
            kernel_j_complex: true,
            reason: None,
        });
    }
    let tc = t * &c;
    let tjc = t * j.matrix() * &c;
    let q = tc.transpose() * omega.matrix() * tjc;
    let sym = (&q + q.transpose()) * 0.5;
    let margin = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TamingReport {
        tame: margin > 0.0,
        margin,
        kernel_dim,
        kernel_j_complex: true,
        reason: (margin <= 0.0).then(|| "descended form not positive definite".into()),
    })
}

/// Retracts the convex combination `Σ φᵢ Jᵢ` and checks the result is tame.
pub fn blend_acs(
    js: &[LinOp],
    weights: &[f64],
    t: &DMatrix<f64>,
    omega: &SkewForm,
) -> Result<(LinOp, TamingReport), LinalgError> {
    if js.is_empty() || js.len() != weights.len() {
        return Err(LinalgError::Dimension(format!(
            "{} operators, {} weights",
            js.len(),
            weights.len()
        )));
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || (sum - 1.0).abs() > 1e-12 {
        return Err(LinalgError::Weights(sum));
    }
    let n = js[0].dim();
    let mut a = DMatrix::zeros(n, n);
    for (i, (j, &w)) in js.iter().zip(weights).enumerate() {
        if j.dim() != n {
            return Err(LinalgError::Dimension(format!("operator {i} has dimension {}", j.dim())));
        }
        if !j.is_complex_structure() {
            return Err(LinalgError::NotComplexStructure(i));
        }
        a += j.matrix() * w;
    }
    let a = LinOp::new(a)?;
    let rep = real_eigenvalue_report(&a)?;
    if rep.has_real {
        return Err(LinalgError::RealEigenvalue(rep.min_relative_imag, rep.threshold));
    }
    let j = retract_to_acs(&a)?;
    let report = is_tame(omega, t, &j)?;
    if !report.tame {
        return Err(LinalgError::NotTame(report.margin));
    }
    Ok((j, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    #[test]
    fn standard_is_tame_with_unit_margin() {
        let r = is_tame(&SkewForm::standard(2), &id(2), &LinOp::standard(2)).unwrap();
        assert!(r.tame);
        assert!((r.margin - 1.0).abs() < 1e-14);
        let r = is_tame(&SkewForm::standard(2), &id(2), &LinOp::standard(2).neg()).unwrap();
        assert!(!r.tame);
    }

    #[test]
    fn projection_ignores_kernel_block() {
        let t = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let j = LinOp::standard(4);
        let r = is_tame(&SkewForm::standard(2), &t, &j).unwrap();
        assert!(r.tame && r.kernel_dim == 2);
        let mut m = j.matrix().clone();
        m[(2, 3)] = 1.0;
        m[(3, 2)] = -1.0;
        let r2 = is_tame(&SkewForm::standard(2), &t, &LinOp::new(m).unwrap()).unwrap();
        assert!(r2.tame);
        assert!((r.margin - r2.margin).abs() < 1e-14);
    }

    #[test]
    fn kernel_not_complex() {
        // J mixes ker T into its complement
        let t = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let mut m = DMatrix::zeros(4, 4);
        m[(2, 0)] = 1.0;
        m[(0, 2)] = -1.0;
        m[(3, 1)] = 1.0;
        m[(1, 3)] = -1.0;
        let r = is_tame(&SkewForm::standard(2), &t, &LinOp::new(m).unwrap()).unwrap();
        assert!(!r.tame && !r.kernel_j_complex);
    }

    #[test]
    fn blends() {
        let w = SkewForm::standard(2);
        let j = LinOp::standard(2);
        let (b, _) = blend_acs(&[j.clone()], &[1.0], &id(2), &w).unwrap();
        assert_eq!(b, j);
        let (b, _) = blend_acs(&[j.clone(), j.clone()], &[0.3, 0.7], &id(2), &w).unwrap();
        assert!((b.matrix() - j.matrix()).amax() < 1e-12);
        let j2 = LinOp::new(DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 1.0, -1.0])).unwrap();
        assert!(is_tame(&w, &id(2), &j2).unwrap().tame);
        let (b, rep) = blend_acs(&[j, j2], &[0.5, 0.5], &id(2), &w).unwrap();
        assert!(b.complex_structure_residual() < 1e-10);
        // direct evaluation of ω(v, Jv) on the circle
        let m = b.matrix();
        let min = (0..360)
            .map(|k| {
                let th = (k as f64).to_radians();
                let v = [th.cos(), th.sin()];
                let jv = [m[(0, 0)] * v[0] + m[(0, 1)] * v[1], m[(1, 0)] * v[0] + m[(1, 1)] * v[1]];
                w.eval(&v, &jv)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.0 && (min - rep.margin).abs() < 1e-3 * rep.margin.max(1.0));
        assert!(blend_acs(&[LinOp::standard(2)], &[0.5], &id(2), &w).is_err());
    }
}
