//! Named one-variable profile functions.
//!
//! Profiles are opaque leaves of [`Expr`](super::Expr): symbolic
//! differentiation only bumps their derivative order, and numeric values of
//! any derivative come from Taylor jets. All profiles are exactly constant
//! (value and derivatives) outside their transition windows.
//!
//! The fold interpolation `f` on `[0, inf)` is defined through its slope
//!
//! ```text
//! f'(x) = (1 - S1(x)) * 2x + S1(x) * ((1 - S3(x)) * kappa + S3(x) / x)
//! ```
//!
//! with `S1` the smooth step on `[1, 5/4]`, `S3` the smooth step on
//! `[e^2 - 1, e^2]`, and `kappa > 0` fixed so that `f(1) = 1` and
//! `f(e^2) = 2`. Then `f = x^2` on `[0, 1]`, `f = ln x` on `[e^2, inf)`
//! and `f' > 0` on `(0, inf)`. The smooth step is
//! `S(u) = psi(u) / (psi(u) + psi(1 - u))` with `psi(u) = exp(-1/u)` for
//! `u > 0` and `0` otherwise.

use std::fmt;
use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::jet::Jet;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Profile {
    /// Smooth step: 0 for `x <= lo`, 1 for `x >= hi`.
    Step { lo: BigRational, hi: BigRational },
    /// Radial bump: smooth step in `ln x`, 0 for `x <= lo`, 1 for `x >= hi`.
    /// Requires `0 < lo < hi`.
    Bump { lo: BigRational, hi: BigRational },
    /// `sign(x) f'(|x|)`, the odd extension of the fold slope.
    FoldSlope,
    /// `f(|x|)`.
    Fold,
    /// `x sign(x) f'(|x|)`; equals `2x^2` near 0 and exactly 1 for `|x| >= e^2`.
    FoldLogCoef,
    /// `phi(|x|) + |x| ln|x| phi'(|x|)` with `phi = 1 - Step{lo,hi}`: the
    /// coefficient of `d(phi log|x|)` in the b-coframe.
    LogCutoff { lo: BigRational, hi: BigRational },
    /// `sin(x) / x`.
    Sinc,
}

pub const E2: f64 = 7.389_056_098_930_65;
const FOLD_S1_HI: f64 = 1.25;

fn psi(u: &Jet) -> Jet {
    if u.value() <= 0.0 {
        Jet::constant(0.0, u.order())
    } else {
        u.recip().scale(-1.0).exp()
    }
}

/// Smooth step jet in the normalized variable.
fn smooth_step(u: &Jet) -> Jet {
    let n = u.order();
    if u.value() <= 0.0 {
        return Jet::constant(0.0, n);
    }
    if u.value() >= 1.0 {
        return Jet::constant(1.0, n);
    }
    let a = psi(u);
    let b = psi(&(-u).add_scalar(1.0));
    a.div(&(&a + &b))
}

fn step_on(x: &Jet, lo: f64, hi: f64) -> Jet {
    smooth_step(&x.add_scalar(-lo).scale(1.0 / (hi - lo)))
}

fn log_step_on(x: &Jet, lo: f64, hi: f64) -> Jet {
    let n = x.order();
    if x.value() <= lo {
        return Jet::constant(0.0, n);
    }
    if x.value() >= hi {
        return Jet::constant(1.0, n);
    }
    let u = x.scale(1.0 / lo).ln().scale(1.0 / (hi / lo).ln());
    smooth_step(&u)
}

/// Fold slope `f'` on `y >= 0` with an arbitrary `kappa`.
fn fold_slope_with(y: &Jet, kappa: f64) -> Jet {
    let n = y.order();
    if y.value() <= 1.0 {
        return y.scale(2.0);
    }
    if y.value() >= E2 {
        return y.recip();
    }
    let s1 = step_on(y, 1.0, FOLD_S1_HI);
    let s3 = step_on(y, E2 - 1.0, E2);
    let one = Jet::constant(1.0, n);
    let inner = &(&one - &s3).scale(kappa) + &(&s3 * &y.recip());
    &(&(&one - &s1) * &y.scale(2.0)) + &(&s1 * &inner)
}

fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / 1e-2).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for (x, w) in NODES.iter().zip(WEIGHTS) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// The positive constant making the fold interpolation reach `ln(e^2) = 2`.
pub fn fold_kappa() -> f64 {
    static KAPPA: OnceLock<f64> = OnceLock::new();
    *KAPPA.get_or_init(|| {
        let slope = |k: f64| move |x: f64| fold_slope_with(&Jet::variable(x, 0), k).value();
        let at0 = gauss_legendre(slope(0.0), 1.0, E2);
        let at1 = gauss_legendre(slope(1.0), 1.0, E2);
        (1.0 - at0) / (at1 - at0)
    })
}

fn fold_slope(y: &Jet) -> Jet {
    fold_slope_with(y, fold_kappa())
}

/// `f(y)` for `y >= 0`.
fn fold_value(y: f64) -> f64 {
    if y <= 1.0 {
        y * y
    } else if y >= E2 {
        y.ln()
    } else {
        1.0 + gauss_legendre(|s| fold_slope(&Jet::variable(s, 0)).value(), 1.0, y)
    }
}

/// Even extension of a jet builder defined for nonnegative arguments.
/// The negated jet already carries the chain-rule sign.
fn even(x: &Jet, f: impl Fn(&Jet) -> Jet) -> Jet {
    if x.value() >= 0.0 {
        f(x)
    } else {
        f(&(-x))
    }
}

fn odd(x: &Jet, f: impl Fn(&Jet) -> Jet) -> Jet {
    if x.value() >= 0.0 {
        f(x)
    } else {
        -&f(&(-x))
    }
}

fn sinc(x: &Jet) -> Jet {
    if x.value().abs() < 0.5 {
        // Horner on sum (-1)^m x^{2m} / (2m+1)!
        let x2 = x * x;
        let mut coeffs = Vec::new();
        let mut fact = 1.0;
        for m in 0..14 {
            if m > 0 {
                fact *= ((2 * m) * (2 * m + 1)) as f64;
            }
            coeffs.push(if m % 2 == 0 { 1.0 } else { -1.0 } / fact);
        }
        let mut acc = Jet::constant(0.0, x.order());
        for c in coeffs.iter().rev() {
            acc = (&acc * &x2).add_scalar(*c);
        }
        acc
    } else {
        let (s, _) = x.sin_cos();
        s.div(x)
    }
}

fn rat(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Profile {
    /// Jet of the profile at the base point of `x`.
    pub fn jet(&self, x: &Jet) -> Jet {
        match self {
            Profile::Step { lo, hi } => step_on(x, rat(lo), rat(hi)),
            Profile::Bump { lo, hi } => log_step_on(x, rat(lo), rat(hi)),
            Profile::FoldSlope => odd(x, fold_slope),
            Profile::Fold => {
                let n = x.order();
                even(x, |y| {
                    // expand at a unit-seeded variable, integrate termwise, compose
                    let y0 = y.value();
                    let mut c = vec![fold_value(y0)];
                    if n > 0 {
                        let slope = fold_slope(&Jet::variable(y0, n - 1));
                        c.extend(slope.0.iter().enumerate().map(|(k, s)| s / (k + 1) as f64));
                    }
                    compose(&Jet(c), y)
                })
            }
            Profile::FoldLogCoef => even(x, |y| {
                if y.value() >= E2 {
                    Jet::constant(1.0, y.order())
                } else {
                    y * &fold_slope(y)
                }
            }),
            Profile::LogCutoff { lo, hi } => {
                let (lo, hi) = (rat(lo), rat(hi));
                even(x, |y| {
                    let n = y.order();
                    if y.value() <= lo {
                        return Jet::constant(1.0, n);
                    }
                    if y.value() >= hi {
                        return Jet::constant(0.0, n);
                    }
                    let wide = Jet::variable(y.value(), n + 1);
                    let phi = (-&step_on(&wide, lo, hi)).add_scalar(1.0);
                    // re-seed derivative on the caller's jet
                    let phi_y = compose(&phi, y);
                    let dphi_y = compose(&phi.differentiate(), y);
                    &phi_y + &(&(y * &y.ln()) * &dphi_y)
                })
            }
            Profile::Sinc => sinc(x),
        }
    }

    /// Value of the `order`-th derivative at `x`.
    pub fn eval(&self, order: u32, x: f64) -> f64 {
        self.jet(&Jet::variable(x, order as usize))
            .derivative(order as usize)
    }

    /// Declared domain: `Bump` needs positive arguments near its window
    /// but is total (0 below `lo`).
    pub fn name(&self) -> String {
        self.to_string()
    }
}

/// Composes a Taylor jet `g` (expanded at `y0`, in the local variable
/// `h = y - y0`) with the jet `y` whose base value is `y0`.
fn compose(g: &Jet, y: &Jet) -> Jet {
    let n = y.order();
    let mut h = y.clone();
    h.0[0] = 0.0;
    let mut acc = Jet::constant(0.0, n);
    for c in g.0.iter().take(n + 1).rev() {
        acc = (&acc * &h).add_scalar(*c);
    }
    acc
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Step { lo, hi } => write!(f, "step[{},{}]", fmt_rat(lo), fmt_rat(hi)),
            Profile::Bump { lo, hi } => write!(f, "bump[{},{}]", fmt_rat(lo), fmt_rat(hi)),
            Profile::FoldSlope => write!(f, "fold_slope"),
            Profile::Fold => write!(f, "fold"),
            Profile::FoldLogCoef => write!(f, "fold_logcoef"),
            Profile::LogCutoff { lo, hi } => {
                write!(f, "log_cutoff[{},{}]", fmt_rat(lo), fmt_rat(hi))
            }
            Profile::Sinc => write!(f, "sinc"),
        }
    }
}

impl Profile {
    /// Builds a profile from its name and bracketed parameters.
    pub fn from_parts(name: &str, params: &[BigRational]) -> Result<Profile, String> {
        let window = |params: &[BigRational]| -> Result<(BigRational, BigRational), String> {
            match params {
                [lo, hi] if lo < hi => Ok((lo.clone(), hi.clone())),
                [_, _] => Err(format!("profile {name}: window must satisfy lo < hi")),
                _ => Err(format!("profile {name} takes two parameters [lo,hi]")),
            }
        };
        let none = |p: Profile| {
            if params.is_empty() {
                Ok(p)
            } else {
                Err(format!("profile {name} takes no parameters"))
            }
        };
        match name {
            "step" => window(params).map(|(lo, hi)| Profile::Step { lo, hi }),
            "bump" => {
                let (lo, hi) = window(params)?;
                if lo <= BigRational::from_integer(0.into()) {
                    return Err("profile bump needs 0 < lo".into());
                }
                Ok(Profile::Bump { lo, hi })
            }
            "log_cutoff" => {
                let (lo, hi) = window(params)?;
                if lo <= BigRational::from_integer(0.into())
                    || hi > BigRational::from_integer(1.into())
                {
                    return Err("profile log_cutoff needs 0 < lo < hi <= 1".into());
                }
                Ok(Profile::LogCutoff { lo, hi })
            }
            "fold_slope" => none(Profile::FoldSlope),
            "fold" => none(Profile::Fold),
            "fold_logcoef" => none(Profile::FoldLogCoef),
            "sinc" => none(Profile::Sinc),
            _ => Err(format!("unknown profile '{name}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn fd(p: &Profile, order: u32, x: f64) -> f64 {
        let h = 1e-5;
        (p.eval(order, x + h) - p.eval(order, x - h)) / (2.0 * h)
    }

    #[test]
    fn fold_matches_square_and_log_regions() {
        let p = Profile::Fold;
        assert_eq!(p.eval(0, 0.5), 0.25);
        assert!((p.eval(0, E2 + 1.0) - (E2 + 1.0).ln()).abs() < 1e-15);
        // continuity of the glued integral at e^2
        assert!((p.eval(0, E2 - 1e-9) - 2.0).abs() < 1e-8);
        assert!(fold_kappa() > 0.0);
    }

    #[test]
    fn fold_is_strictly_increasing() {
        let p = Profile::Fold;
        let mut prev = p.eval(0, 0.0);
        for i in 1..=400 {
            let x = i as f64 * 0.025;
            let v = p.eval(0, x);
            assert!(v > prev, "not increasing at {x}");
            prev = v;
        }
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        let profiles = [
            Profile::Step { lo: r(1, 4), hi: r(3, 4) },
            Profile::Bump { lo: r(1, 16), hi: r(9, 16) },
            Profile::FoldSlope,
            Profile::Fold,
            Profile::FoldLogCoef,
            Profile::LogCutoff { lo: r(1, 4), hi: r(3, 4) },
            Profile::Sinc,
        ];
        let xs = [-3.1, -0.6, 0.3, 0.45, 0.5, 1.1, 1.2, 2.0, 4.0, 6.9];
        for p in &profiles {
            for &x in &xs {
                for order in 0..2 {
                    let exact = p.eval(order + 1, x);
                    let approx = fd(p, order, x);
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (exact - approx).abs() <= 1e-6 * scale,
                        "{p} order {order} at {x}: {exact} vs {approx}"
                    );
                }
            }
        }
    }

    #[test]
    fn cutoff_constant_outside_window() {
        let p = Profile::LogCutoff { lo: r(1, 4), hi: r(3, 4) };
        assert_eq!(p.eval(0, 0.1), 1.0);
        assert_eq!(p.eval(1, 0.1), 0.0);
        assert_eq!(p.eval(0, -0.8), 0.0);
        for i in 0..100 {
            let x = 0.25 + 0.005 * i as f64;
            assert!(p.eval(0, x) >= 0.0);
        }
    }

    #[test]
    fn logcoef_is_exactly_one_far_out() {
        assert_eq!(Profile::FoldLogCoef.eval(0, 8.0), 1.0);
        assert_eq!(Profile::FoldLogCoef.eval(0, -8.0), 1.0);
        assert_eq!(Profile::FoldLogCoef.eval(1, 8.0), 0.0);
    }

    #[test]
    fn sinc_near_zero() {
        assert!((Profile::Sinc.eval(0, 0.0) - 1.0).abs() < 1e-15);
        assert!((Profile::Sinc.eval(2, 0.0) + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn names_round_trip() {
        let p = Profile::LogCutoff { lo: r(1, 4), hi: r(3, 4) };
        assert_eq!(p.to_string(), "log_cutoff[1/4,3/4]");
        assert_eq!(Profile::from_parts("log_cutoff", &[r(1, 4), r(3, 4)]).unwrap(), p);
    }
}
