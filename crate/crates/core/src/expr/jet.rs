//! Truncated Taylor arithmetic in one variable.
//!
//! A `Jet` of order `n` holds the Taylor coefficients `c_0 ..= c_n` of a
//! function at a base point. Profile functions are written once in terms
//! of jets, and any derivative is read off as `k! * c_k`.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Jet(c)
    }

    /// The identity function seeded at `x`.
    pub fn variable(x: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x;
        if order >= 1 {
            c[1] = 1.0;
        }
        Jet(c)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// k-th derivative at the base point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.0.get(k).copied().unwrap_or(0.0) * fact
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut c = self.0.clone();
        c[0] += s;
        Jet(c)
    }

    /// Formal derivative, one order lower.
    pub fn differentiate(&self) -> Jet {
        if self.0.len() == 1 {
            return Jet(vec![0.0]);
        }
        Jet(self.0[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| c * (k + 1) as f64)
            .collect())
    }

    /// Jet of `x -> f(-x)` given the jet of `f` at `-x`.
    pub fn reflect(&self) -> Jet {
        Jet(self
            .0
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 1 { -c } else { *c })
            .collect())
    }

    pub fn truncate(&self, order: usize) -> Jet {
        Jet(self.0[..=order.min(self.order())].to_vec())
    }

    pub fn recip(&self) -> Jet {
        Jet::constant(1.0, self.order()).div(self)
    }

    pub fn div(&self, b: &Jet) -> Jet {
        let n = self.order();
        let mut q = vec![0.0; n + 1];
        for k in 0..=n {
            let mut s = self.0[k];
            for j in 1..=k {
                s -= b.0[j] * q[k - j];
            }
            q[k] = s / b.0[0];
        }
        Jet(q)
    }

    pub fn exp(&self) -> Jet {
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = self.0[0].exp();
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.0[j] * b[k - j];
            }
            b[k] = s / k as f64;
        }
        Jet(b)
    }

    pub fn ln(&self) -> Jet {
        let n = self.order();
        let a = &self.0;
        let mut b = vec![0.0; n + 1];
        b[0] = a[0].ln();
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * b[j] * a[k - j];
            }
            b[k] = (a[k] - s / k as f64) / a[0];
        }
        Jet(b)
    }

    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.order();
        let a = &self.0;
        let mut s = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..=n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc += j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Jet(s), Jet(c))
    }

    pub fn powi(&self, p: i32) -> Jet {
        if p < 0 {
            return self.powi(-p).recip();
        }
        let mut out = Jet::constant(1.0, self.order());
        for _ in 0..p {
            out = &out * self;
        }
        out
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, b: &Jet) -> Jet {
        Jet(self.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, b: &Jet) -> Jet {
        Jet(self.0.iter().zip(&b.0).map(|(x, y)| x - y).collect())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, b: &Jet) -> Jet {
        let n = self.order().min(b.order());
        let mut c = vec![0.0; n + 1];
        for (i, ai) in self.0.iter().enumerate().take(n + 1) {
            for j in 0..=(n - i) {
                c[i + j] += ai * b.0[j];
            }
        }
        Jet(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_variable_matches_factorials() {
        let j = Jet::variable(0.3, 5).exp();
        for k in 0..=5 {
            assert!((j.derivative(k) - 0.3f64.exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn quotient_rule() {
        let x = Jet::variable(1.7, 4);
        let (s, c) = x.sin_cos();
        let t = s.div(&c);
        // d/dx tan = 1 + tan^2
        let tan = 1.7f64.tan();
        assert!((t.derivative(1) - (1.0 + tan * tan)).abs() < 1e-10);
    }

    #[test]
    fn ln_inverts_exp() {
        let x = Jet::variable(0.8, 6);
        let back = x.exp().ln();
        for (a, b) in back.0.iter().zip(&x.0) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
