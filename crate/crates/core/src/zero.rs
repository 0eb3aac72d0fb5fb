//! Zero tests: exact by canonical form, otherwise by sampling.

use rayon::prelude::*;
use serde::Serialize;

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ZeroVerdict {
    /// The canonical form is zero.
    Exact,
    /// Not zero in canonical form; every sample is within `tol`.
    Sampled { max_abs: f64, points: usize, tol: f64 },
    NonZero { max_abs: f64, at: Vec<f64> },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ZeroVerdict::Exact)
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            ZeroVerdict::Exact => 0.0,
            ZeroVerdict::Sampled { max_abs, .. } | ZeroVerdict::NonZero { max_abs, .. } => *max_abs,
        }
    }

    /// Combines verdicts for several expressions.
    pub fn and(self, other: ZeroVerdict) -> ZeroVerdict {
        use ZeroVerdict::*;
        match (self, other) {
            (NonZero { max_abs: a, at }, NonZero { max_abs: b, at: at2 }) => {
                if a >= b {
                    NonZero { max_abs: a, at }
                } else {
                    NonZero { max_abs: b, at: at2 }
                }
            }
            (n @ NonZero { .. }, _) | (_, n @ NonZero { .. }) => n,
            (Exact, s) | (s, Exact) => s,
            (Sampled { max_abs: a, points: p, tol }, Sampled { max_abs: b, points: q, .. }) => Sampled {
                max_abs: a.max(b),
                points: p.max(q),
                tol,
            },
        }
    }
}

/// Maximum absolute value over the points, with the arg-max. Deterministic.
pub fn max_abs_over(e: &Expr, points: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let c = e.compile();
    let vals: Vec<f64> = points.par_iter().map(|p| c.eval(p).abs()).collect();
    let mut best = (0.0, points.first().cloned().unwrap_or_default());
    for (v, p) in vals.iter().zip(points) {
        if !(v <= &best.0) {
            best = (if v.is_nan() { f64::INFINITY } else { *v }, p.clone());
        }
    }
    best
}

pub fn zero_test(e: &Expr, points: &[Vec<f64>], tol: f64) -> ZeroVerdict {
    if e.is_zero() {
        return ZeroVerdict::Exact;
    }
    let (max_abs, at) = max_abs_over(e, points);
    if max_abs <= tol {
        ZeroVerdict::Sampled { max_abs, points: points.len(), tol }
    } else {
        ZeroVerdict::NonZero { max_abs, at }
    }
}

/// Zero test of several expressions at once.
pub fn zero_test_all<'a>(es: impl IntoIterator<Item = &'a Expr>, points: &[Vec<f64>], tol: f64) -> ZeroVerdict {
    es.into_iter()
        .map(|e| zero_test(e, points, tol))
        .fold(ZeroVerdict::Exact, ZeroVerdict::and)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn pythagoras_falls_back_to_sampling() {
        let e = parse_expr("sin(x1)^2 + cos(x1)^2 - 1", None).unwrap();
        assert!(!e.is_zero());
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.1]).collect();
        let v = zero_test(&e, &pts, 1e-10);
        assert!(matches!(v, ZeroVerdict::Sampled { .. }));
        assert!(!zero_test(&parse_expr("x1", None).unwrap(), &pts, 1e-10).is_zero());
    }
}
