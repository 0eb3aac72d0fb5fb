use nalgebra::{DMatrix, Schur};

use super::{real_eigenvalue_report, LinOp, LinalgError, REAL_EIG_TOL};

const NEWTON_MAX_ITER: usize = 60;

/// Principal square root of a matrix with no eigenvalues on `(-∞, 0]`,
/// via the real Schur form.
pub fn sqrtm_principal(m: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    if n == 0 {
        return Ok(m.clone());
    }
    let (q, t) = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or(LinalgError::EigenNonConvergence)?
        .unpack();
    let scale = t.amax().max(f64::MIN_POSITIVE);
    // block boundaries of the quasi-triangular factor
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-14 * scale {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    let mut u = DMatrix::<f64>::zeros(n, n);
    for &(s, k) in &blocks {
        if k == 1 {
            let v = t[(s, s)];
            if v <= 0.0 {
                return Err(LinalgError::RealEigenvalue(v, REAL_EIG_TOL));
            }
            u[(s, s)] = v.sqrt();
        } else {
            let b = t.view((s, s), (2, 2)).into_owned();
            let det = b.determinant();
            if det <= 0.0 {
                return Err(LinalgError::RealEigenvalue(det, REAL_EIG_TOL));
            }
            let sd = det.sqrt();
            let tr = b.trace() + 2.0 * sd;
            if tr <= 0.0 {
                return Err(LinalgError::RealEigenvalue(b.trace(), REAL_EIG_TOL));
            }
            let r = (b + DMatrix::identity(2, 2) * sd) / tr.sqrt();
            u.view_mut((s, s), (2, 2)).copy_from(&r);
        }
    }
    // off-diagonal blocks, by superdiagonals
    for d in 1..blocks.len() {
        for bi in 0..blocks.len() - d {
            let bj = bi + d;
            let (si, ki) = blocks[bi];
            let (sj, kj) = blocks[bj];
            let mut rhs = t.view((si, sj), (ki, kj)).into_owned();
            for &(sk, kk) in &blocks[bi + 1..bj] {
                rhs -= u.view((si, sk), (ki, kk)) * u.view((sk, sj), (kk, kj));
            }
            let uii = u.view((si, si), (ki, ki)).into_owned();
            let ujj = u.view((sj, sj), (kj, kj)).into_owned();
            let x = solve_sylvester(&uii, &ujj, &rhs)?;
            u.view_mut((si, sj), (ki, kj)).copy_from(&x);
        }
    }
    Ok(&q * u * q.transpose())
}

/// Solves `A X + X B = C` for small blocks through the Kronecker system.
fn solve_sylvester(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let (p, q) = (a.nrows(), b.nrows());
    let ip = DMatrix::<f64>::identity(p, p);
    let iq = DMatrix::<f64>::identity(q, q);
    let k = iq.kronecker(a) + b.transpose().kronecker(&ip);
    let rhs = DMatrix::from_column_slice(p * q, 1, c.as_slice());
    let x = k.lu().solve(&rhs).ok_or(LinalgError::Singular)?;
    Ok(DMatrix::from_column_slice(p, q, x.as_slice()))
}

/// `J = A (−A²)^{−1/2}` with the principal root, refined by Newton steps
/// `J ← (J − J⁻¹)/2`. Complex structures are returned unchanged.
pub fn retract_to_acs(a: &LinOp) -> Result<LinOp, LinalgError> {
    if a.is_complex_structure() {
        return Ok(a.clone());
    }
    let rep = real_eigenvalue_report(a)?;
    if rep.has_real {
        return Err(LinalgError::RealEigenvalue(rep.min_relative_imag, rep.threshold));
    }
    let n = a.dim();
    let m = -(a.matrix() * a.matrix());
    let s = sqrtm_principal(&m)?;
    let s_inv = s.try_inverse().ok_or(LinalgError::Singular)?;
    let mut j = a.matrix() * s_inv;
    let id = DMatrix::<f64>::identity(n, n);
    let mut res = (&j * &j + &id).norm();
    for _ in 0..NEWTON_MAX_ITER {
        if res <= 1e-13 * (n as f64) {
            break;
        }
        let j_inv = j.clone().try_inverse().ok_or(LinalgError::Singular)?;
        let next = (&j - j_inv) * 0.5;
        let next_res = (&next * &next + &id).norm();
        if next_res >= res && res <= 1e-11 {
            break;
        }
        j = next;
        res = next_res;
    }
    if res > 1e-11 {
        return Err(LinalgError::SqrtNonConvergence(res));
    }
    LinOp::new(j)
}
