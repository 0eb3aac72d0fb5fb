use nalgebra::DMatrix;

use super::{kernel_basis, rank};

const RANK_TOL: f64 = 1e-9;
const COMMUTE_TOL: f64 = 1e-10;

/// The commuting square `bF: bV -> bW`, `F: V -> W` with anchors
/// `ρV: bV -> V`, `ρW: bW -> W`, and the subspaces `V₁ ⊂ V`, `W₁ ⊂ W`
/// given by spanning columns.
#[derive(Debug, Clone)]
pub struct PairMaps {
    pub f: DMatrix<f64>,
    pub bf: DMatrix<f64>,
    pub rho_v: DMatrix<f64>,
    pub rho_w: DMatrix<f64>,
    pub v1: DMatrix<f64>,
    pub w1: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairLemmaError {
    #[error("matrix shapes do not fit the square: {0}")]
    Shape(String),
    #[error("F∘ρV and ρW∘bF differ by {0}")]
    NotCommuting(f64),
    #[error("image of ρV has rank {image}, V₁ has rank {v1}, joint rank {joint}")]
    ImageRhoV { image: usize, v1: usize, joint: usize },
    #[error("image of ρW has rank {image}, W₁ has rank {w1}, joint rank {joint}")]
    ImageRhoW { image: usize, w1: usize, joint: usize },
    #[error("F does not map V₁ into W₁")]
    SubspaceNotPreserved,
    #[error("induced map V/V₁ -> W/W₁ is not invertible (rank {rank}, dims {dim_v} -> {dim_w})")]
    QuotientNotIso { rank: usize, dim_v: usize, dim_w: usize },
    #[error("bF: ker ρV -> ker ρW is not invertible (rank {rank}, dims {dim_v} -> {dim_w})")]
    KernelNotIso { rank: usize, dim_v: usize, dim_w: usize },
}

/// Verifies the hypotheses in order, then reports whether `ρV` restricts
/// to a bijection `ker bF -> ker F`.
pub fn verify_pair_lemma(m: &PairMaps) -> Result<bool, PairLemmaError> {
    let (dw, dv) = m.f.shape();
    let (dbw, dbv) = m.bf.shape();
    let shapes_ok = m.rho_v.shape() == (dv, dbv)
        && m.rho_w.shape() == (dw, dbw)
        && m.v1.nrows() == dv
        && m.w1.nrows() == dw;
    if !shapes_ok {
        return Err(PairLemmaError::Shape(format!(
            "F {:?}, bF {:?}, ρV {:?}, ρW {:?}, V₁ {:?}, W₁ {:?}",
            m.f.shape(),
            m.bf.shape(),
            m.rho_v.shape(),
            m.rho_w.shape(),
            m.v1.shape(),
            m.w1.shape()
        )));
    }
    let diff = (&m.f * &m.rho_v - &m.rho_w * &m.bf).amax();
    if diff > COMMUTE_TOL {
        return Err(PairLemmaError::NotCommuting(diff));
    }
    let (image, v1, joint) = joint_ranks(&m.rho_v, &m.v1);
    if image != v1 || joint != v1 {
        return Err(PairLemmaError::ImageRhoV { image, v1, joint });
    }
    let (image, w1, joint) = joint_ranks(&m.rho_w, &m.w1);
    if image != w1 || joint != w1 {
        return Err(PairLemmaError::ImageRhoW { image, w1, joint });
    }
    let fv1 = &m.f * &m.v1;
    if rank(&hcat(&m.w1, &fv1), RANK_TOL) != w1 {
        return Err(PairLemmaError::SubspaceNotPreserved);
    }
    let induced = rank(&hcat(&m.w1, &m.f), RANK_TOL) - w1;
    let (qv, qw) = (dv - v1, dw - w1);
    if induced != qv || qv != qw {
        return Err(PairLemmaError::QuotientNotIso { rank: induced, dim_v: qv, dim_w: qw });
    }
    let kv = kernel_basis(&m.rho_v, RANK_TOL);
    let kw = kernel_basis(&m.rho_w, RANK_TOL);
    let r = rank(&(&m.bf * &kv), RANK_TOL);
    if r != kv.ncols() || kv.ncols() != kw.ncols() {
        return Err(PairLemmaError::KernelNotIso { rank: r, dim_v: kv.ncols(), dim_w: kw.ncols() });
    }
    let kbf = kernel_basis(&m.bf, RANK_TOL);
    let kf = kernel_basis(&m.f, RANK_TOL);
    let img = &m.rho_v * &kbf;
    let injective = rank(&img, RANK_TOL) == kbf.ncols();
    let lands = (&m.f * &img).amax() <= COMMUTE_TOL * img.amax().max(1.0);
    Ok(injective && lands && kbf.ncols() == kf.ncols())
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    m
}

fn joint_ranks(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (usize, usize, usize) {
    (rank(a, RANK_TOL), rank(b, RANK_TOL), rank(&hcat(a, b), RANK_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    #[test]
    fn identities() {
        let i = DMatrix::identity(3, 3);
        let m = PairMaps { f: i.clone(), bf: i.clone(), rho_v: i.clone(), rho_w: i.clone(), v1: i.clone(), w1: i };
        assert!(verify_pair_lemma(&m).unwrap());
    }

    #[test]
    fn darboux_projection_at_z() {
        // anchor at x1 = 0 kills x1∂1; projection R⁴ -> R² onto (x1, x2)
        let rho_v = diag(&[0.0, 1.0, 1.0, 1.0]);
        let rho_w = diag(&[0.0, 1.0]);
        let f = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let v1 = DMatrix::from_row_slice(4, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let w1 = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let m = PairMaps { bf: f.clone(), f, rho_v, rho_w, v1, w1 };
        assert!(verify_pair_lemma(&m).unwrap());
    }

    #[test]
    fn broken_commutativity() {
        let i = DMatrix::identity(2, 2);
        let m = PairMaps { f: i.clone(), bf: i.clone() * 2.0, rho_v: i.clone(), rho_w: i.clone(), v1: i.clone(), w1: i };
        assert!(matches!(verify_pair_lemma(&m), Err(PairLemmaError::NotCommuting(_))));
    }
}
