use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::expr::{fold_kappa, rational_from_f64, Expr, Profile};

/// A named one-variable profile with value and derivative evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// Monotone, `x²` on `[0, 1]`, `ln x` on `[e², ∞)`.
    LogFoldInterp,
    /// `b(r)`: 0 for `r <= r0`, 1 for `r >= r1`, a smooth step in `ln r²` between.
    RadialBump { r0: f64, r1: f64 },
}

impl ProfileSpec {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            ProfileSpec::LogFoldInterp => Profile::Fold.eval(0, r),
            ProfileSpec::RadialBump { .. } => self.bump().eval(0, r * r),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            ProfileSpec::LogFoldInterp => Profile::FoldSlope.eval(0, r),
            ProfileSpec::RadialBump { .. } => 2.0 * r * self.bump().eval(1, r * r),
        }
    }

    /// The underlying profile in the squared radius, for radial bumps.
    pub fn bump(&self) -> Profile {
        match self {
            ProfileSpec::RadialBump { r0, r1 } => Profile::Bump {
                lo: rational_from_f64(r0 * r0),
                hi: rational_from_f64(r1 * r1),
            },
            ProfileSpec::LogFoldInterp => Profile::Fold,
        }
    }

    /// The profile as an expression in `arg`.
    pub fn expr(&self, arg: Expr) -> Expr {
        match self {
            ProfileSpec::LogFoldInterp => Expr::profile(Profile::Fold, 0, arg),
            ProfileSpec::RadialBump { .. } => Expr::profile(self.bump(), 0, &arg * &arg),
        }
    }

    fn header(&self) -> String {
        match self {
            ProfileSpec::LogFoldInterp => format!(
                "# log_fold_interp: f = x^2 on [0,1], f = ln x on [e^2,inf)\n\
                 # f' = (1-S1)*2x + S1*((1-S3)*kappa + S3/x), S1 = step[1,5/4], S3 = step[e^2-1,e^2]\n\
                 # kappa = {:.17e}\n",
                fold_kappa()
            ),
            ProfileSpec::RadialBump { r0, r1 } => format!(
                "# radial_bump: b(r) = S((ln r^2 - ln r0^2)/(ln r1^2 - ln r0^2))\n# r0 = {r0}\n# r1 = {r1}\n"
            ),
        }
    }

    fn default_range(&self) -> f64 {
        match self {
            ProfileSpec::LogFoldInterp => 10.0,
            ProfileSpec::RadialBump { r1, .. } => 1.25 * r1,
        }
    }
}

/// Columnar `(r, f(r), f'(r))` table over `[0, r_max]`.
pub fn emit_profile_table(spec: &ProfileSpec, samples: usize, r_max: Option<f64>) -> String {
    let r_max = r_max.unwrap_or_else(|| spec.default_range());
    let n = samples.max(2);
    let mut out = spec.header();
    out.push_str("r\tf\tdf\n");
    for i in 0..n {
        let r = r_max * i as f64 / (n - 1) as f64;
        let _ = writeln!(out, "{:.17e}\t{:.17e}\t{:.17e}", r, spec.value(r), spec.derivative(r));
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::E2;

    fn rows(t: &str) -> Vec<[f64; 3]> {
        t.lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with('r'))
            .map(|l| {
                let v: Vec<f64> = l.split('\t').map(|x| x.parse().unwrap()).collect();
                [v[0], v[1], v[2]]
            })
            .collect()
    }

    #[test]
    fn fold_table() {
        let t = emit_profile_table(&ProfileSpec::LogFoldInterp, 201, None);
        let r = rows(&t);
        let half = r.iter().find(|x| x[0] == 0.5).unwrap();
        assert!((half[1] - 0.25).abs() < 1e-15);
        for w in r.windows(2).skip(1) {
            assert!(w[1][1] > w[0][1]);
        }
        let x = E2 + 1.0;
        assert!((ProfileSpec::LogFoldInterp.value(x) - x.ln()).abs() < 1e-14);
    }

    #[test]
    fn bump_range() {
        let b = ProfileSpec::RadialBump { r0: 0.25, r1: 0.75 };
        for i in 0..=100 {
            let r = i as f64 / 100.0;
            let v = b.value(r);
            assert!((0.0..=1.0).contains(&v));
            if r <= 0.25 {
                assert_eq!(v, 0.0);
            }
            if r >= 0.75 {
                assert_eq!(v, 1.0);
            }
        }
        // derivative against central differences in the transition
        for r in [0.3, 0.45, 0.6, 0.7] {
            let h = 1e-6;
            let fd = (b.value(r + h) - b.value(r - h)) / (2.0 * h);
            assert!((fd - b.derivative(r)).abs() <= 1e-6 * b.derivative(r).abs().max(1.0));
        }
    }
}
