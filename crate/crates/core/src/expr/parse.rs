//! Parser for the scene expression grammar.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' ['-'] INT | '^' '(' ['-'] INT ')')?
//! primary := NUMBER | 'x'INT | 'pi' | FUNC '(' sum ')'
//!          | 'profile' '(' NAME ['[' NUMBER ',' NUMBER ']'] ',' sum [',' INT] ')'
//!          | 'e' '{' INT (',' INT)* '}' | '(' sum ')'
//! FUNC    := sin | cos | exp | recip
//! ```
//!
//! Numbers are decimals (`0.25`, `1e-3`) or `p/q` quotients and are read
//! as exact rationals. Basis symbols `e{i,j,...}` (one-based, `e1` is the
//! log slot) are only accepted by [`parse_form_terms`].

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{Expr, Profile};
use crate::form::wedge_sign;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: {}", self.position, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut int_part = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                int_part.push(chars[i]);
                i += 1;
            }
            let mut frac = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    frac.push(chars[i]);
                    i += 1;
                }
            }
            let mut exp10: i64 = 0;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                let mut neg = false;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    neg = chars[j] == '-';
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    let mut digits = String::new();
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        digits.push(chars[j]);
                        j += 1;
                    }
                    exp10 = digits.parse::<i64>().map_err(|_| ParseError {
                        position: i,
                        message: "exponent too large".into(),
                    })?;
                    if neg {
                        exp10 = -exp10;
                    }
                    i = j;
                }
            }
            let mantissa: BigInt = format!("{}{}", if int_part.is_empty() { "0" } else { &int_part }, frac)
                .parse()
                .expect("digits");
            let scale = exp10 - frac.len() as i64;
            let ten = BigInt::from(10);
            let value = if scale >= 0 {
                BigRational::from_integer(mantissa * num_traits::pow(ten, scale as usize))
            } else {
                BigRational::new(mantissa, num_traits::pow(ten, (-scale) as usize))
            };
            out.push((start, Tok::Num(value)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
            }
            out.push((start, Tok::Ident(s)));
            continue;
        }
        if "+-*/^(),[]{}".contains(c) {
            out.push((start, Tok::Sym(c)));
            i += 1;
            continue;
        }
        return Err(ParseError {
            position: i,
            message: format!("unexpected character '{c}'"),
        });
    }
    Ok(out)
}

/// A parsed value: a scalar, or a homogeneous combination of basis forms.
#[derive(Debug, Clone)]
enum Val {
    Scalar(Expr),
    Form(usize, BTreeMap<u32, Expr>),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    dim: Option<usize>,
    allow_basis: bool,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        position,
        message: message.into(),
    })
}

fn form_add(a: BTreeMap<u32, Expr>, b: &BTreeMap<u32, Expr>, sign: bool) -> BTreeMap<u32, Expr> {
    let mut out = a;
    for (k, v) in b {
        let cur = out.remove(k).unwrap_or_default();
        let next = if sign { &cur + v } else { &cur - v };
        if !next.is_zero() {
            out.insert(*k, next);
        }
    }
    out
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            err(self.here(), format!("expected '{c}'"))
        }
    }

    fn sum(&mut self) -> Result<Val, ParseError> {
        let mut acc = self.product()?;
        loop {
            let pos = self.here();
            let plus = if self.eat_sym('+') {
                true
            } else if self.eat_sym('-') {
                false
            } else {
                return Ok(acc);
            };
            let rhs = self.product()?;
            acc = match (acc, rhs) {
                (Val::Scalar(a), Val::Scalar(b)) => Val::Scalar(if plus { &a + &b } else { &a - &b }),
                (Val::Form(da, a), Val::Form(db, b)) => {
                    if da != db {
                        return err(pos, format!("adding forms of degree {da} and {db}"));
                    }
                    Val::Form(da, form_add(a, &b, plus))
                }
                (Val::Scalar(a), Val::Form(..)) | (Val::Form(..), Val::Scalar(a)) if a.is_zero() => {
                    return err(pos, "mixing scalar and form terms");
                }
                _ => return err(pos, "mixing scalar and form terms"),
            };
        }
    }

    fn product(&mut self) -> Result<Val, ParseError> {
        let mut acc = self.unary()?;
        loop {
            let pos = self.here();
            if self.eat_sym('*') {
                let rhs = self.unary()?;
                acc = self.mul(acc, rhs, pos)?;
            } else if self.eat_sym('/') {
                let rhs = self.unary()?;
                let Val::Scalar(d) = rhs else {
                    return err(pos, "division by a form");
                };
                if d.is_zero() {
                    return err(pos, "division by zero");
                }
                acc = self.mul(acc, Val::Scalar(d.recip()), pos)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn mul(&self, a: Val, b: Val, pos: usize) -> Result<Val, ParseError> {
        Ok(match (a, b) {
            (Val::Scalar(a), Val::Scalar(b)) => Val::Scalar(&a * &b),
            (Val::Scalar(s), Val::Form(d, f)) | (Val::Form(d, f), Val::Scalar(s)) => Val::Form(
                d,
                f.into_iter()
                    .map(|(k, v)| (k, &v * &s))
                    .filter(|(_, v)| !v.is_zero())
                    .collect(),
            ),
            (Val::Form(da, a), Val::Form(db, b)) => {
                if let Some(n) = self.dim {
                    if da + db > n {
                        return err(pos, "wedge degree exceeds chart dimension");
                    }
                }
                let mut out = BTreeMap::new();
                for (ka, va) in &a {
                    for (kb, vb) in &b {
                        if let Some(sign) = wedge_sign(*ka, *kb) {
                            let term = &(va * vb) * &Expr::int(sign as i64);
                            out = form_add(out, &BTreeMap::from([(ka | kb, term)]), true);
                        }
                    }
                }
                Val::Form(da + db, out)
            }
        })
    }

    fn unary(&mut self) -> Result<Val, ParseError> {
        if self.eat_sym('-') {
            let v = self.unary()?;
            return Ok(match v {
                Val::Scalar(e) => Val::Scalar(-&e),
                Val::Form(d, f) => Val::Form(d, f.into_iter().map(|(k, v)| (k, -&v)).collect()),
            });
        }
        if self.eat_sym('+') {
            return self.unary();
        }
        self.power()
    }

    fn int_literal(&mut self) -> Result<i64, ParseError> {
        let pos = self.here();
        let neg = self.eat_sym('-');
        match self.peek().cloned() {
            Some(Tok::Num(n)) if n.is_integer() => {
                self.pos += 1;
                let v: i64 = n
                    .to_integer()
                    .try_into()
                    .map_err(|_| ParseError { position: pos, message: "integer too large".into() })?;
                Ok(if neg { -v } else { v })
            }
            _ => err(pos, "expected integer"),
        }
    }

    fn power(&mut self) -> Result<Val, ParseError> {
        let base = self.primary()?;
        let pos = self.here();
        if self.eat_sym('^') {
            let k = if self.eat_sym('(') {
                let k = self.int_literal()?;
                self.expect_sym(')')?;
                k
            } else {
                self.int_literal()?
            };
            let Val::Scalar(b) = base else {
                return err(pos, "powers of forms are not supported");
            };
            if k < 0 && b.is_zero() {
                return err(pos, "negative power of zero");
            }
            let k: i32 = k.try_into().map_err(|_| ParseError { position: pos, message: "exponent too large".into() })?;
            return Ok(Val::Scalar(b.pow(k)));
        }
        Ok(base)
    }

    fn scalar_arg(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        match self.sum()? {
            Val::Scalar(e) => Ok(e),
            Val::Form(..) => err(pos, "function argument must be scalar"),
        }
    }

    fn number(&mut self) -> Result<BigRational, ParseError> {
        let pos = self.here();
        let neg = self.eat_sym('-');
        let Some(Tok::Num(n)) = self.peek().cloned() else {
            return err(pos, "expected number");
        };
        self.pos += 1;
        let mut v = n;
        if self.eat_sym('/') {
            let Some(Tok::Num(d)) = self.peek().cloned() else {
                return err(self.here(), "expected denominator");
            };
            if d.is_zero() {
                return err(self.here(), "division by zero");
            }
            self.pos += 1;
            v /= d;
        }
        Ok(if neg { -v } else { v })
    }

    fn primary(&mut self) -> Result<Val, ParseError> {
        let pos = self.here();
        let Some(tok) = self.peek().cloned() else {
            return err(pos, "unexpected end of input");
        };
        self.pos += 1;
        match tok {
            Tok::Num(n) => Ok(Val::Scalar(Expr::constant(n))),
            Tok::Sym('(') => {
                let v = self.sum()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            Tok::Sym(c) => err(pos, format!("unexpected '{c}'")),
            Tok::Ident(name) => self.ident(name, pos),
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Val, ParseError> {
        match name.as_str() {
            "pi" => return Ok(Val::Scalar(Expr::pi())),
            "sin" | "cos" | "exp" | "recip" => {
                self.expect_sym('(')?;
                let a = self.scalar_arg()?;
                self.expect_sym(')')?;
                return Ok(Val::Scalar(match name.as_str() {
                    "sin" => a.sin(),
                    "cos" => a.cos(),
                    "exp" => a.exp(),
                    _ => {
                        if a.is_zero() {
                            return err(pos, "recip of zero");
                        }
                        a.recip()
                    }
                }));
            }
            "profile" => return self.profile(pos),
            "e" if self.peek() == Some(&Tok::Sym('{')) => return self.basis(pos),
            _ => {}
        }
        if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
            if idx == 0 {
                return err(pos, "coordinates are numbered from x1");
            }
            if let Some(n) = self.dim {
                if idx > n {
                    return err(pos, format!("coordinate x{idx} outside chart of dimension {n}"));
                }
            }
            return Ok(Val::Scalar(Expr::coord(idx - 1)));
        }
        err(pos, format!("unknown identifier '{name}'"))
    }

    fn profile(&mut self, pos: usize) -> Result<Val, ParseError> {
        self.expect_sym('(')?;
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return err(self.here(), "expected profile name");
        };
        self.pos += 1;
        let mut params = Vec::new();
        if self.eat_sym('[') {
            loop {
                params.push(self.number()?);
                if self.eat_sym(']') {
                    break;
                }
                self.expect_sym(',')?;
            }
        }
        let profile = Profile::from_parts(&name, &params).map_err(|m| ParseError { position: pos, message: m })?;
        self.expect_sym(',')?;
        let arg = self.scalar_arg()?;
        let order = if self.eat_sym(',') {
            let k = self.int_literal()?;
            if k < 0 {
                return err(pos, "derivative order must be nonnegative");
            }
            k as u32
        } else {
            0
        };
        self.expect_sym(')')?;
        Ok(Val::Scalar(Expr::profile(profile, order, arg)))
    }

    fn basis(&mut self, pos: usize) -> Result<Val, ParseError> {
        if !self.allow_basis {
            return err(pos, "basis forms not allowed in scalar expressions");
        }
        self.expect_sym('{')?;
        let mut idx = Vec::new();
        loop {
            let p = self.here();
            let k = self.int_literal()?;
            if k < 1 || k > 31 {
                return err(p, "basis index out of range");
            }
            if let Some(n) = self.dim {
                if k as usize > n {
                    return err(p, format!("basis index {k} outside chart of dimension {n}"));
                }
            }
            idx.push(k as u32 - 1);
            if self.eat_sym('}') {
                break;
            }
            self.expect_sym(',')?;
        }
        // sort with sign
        let mut mask = 0u32;
        let mut sign = 1i64;
        for &i in &idx {
            match wedge_sign(mask, 1 << i) {
                Some(s) => {
                    sign *= s as i64;
                    mask |= 1 << i;
                }
                None => return Ok(Val::Form(idx.len(), BTreeMap::new())),
            }
        }
        Ok(Val::Form(idx.len(), BTreeMap::from([(mask, Expr::int(sign))])))
    }
}

fn run(src: &str, dim: Option<usize>, allow_basis: bool) -> Result<Val, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        dim,
        allow_basis,
    };
    let v = p.sum()?;
    if p.pos != p.toks.len() {
        return err(p.here(), "trailing input");
    }
    Ok(v)
}

/// Parses a scalar expression; `dim` bounds the admissible coordinates.
pub fn parse_expr(src: &str, dim: Option<usize>) -> Result<Expr, ParseError> {
    match run(src, dim, false)? {
        Val::Scalar(e) => Ok(e),
        Val::Form(..) => unreachable!(),
    }
}

/// Parses a combination of basis forms. Returns the degree (`None` for the
/// literal `0` or a scalar, which is read as a degree-0 form) and the
/// coefficient per index mask.
pub fn parse_form_terms(src: &str, dim: Option<usize>) -> Result<(Option<usize>, BTreeMap<u32, Expr>), ParseError> {
    match run(src, dim, true)? {
        Val::Scalar(e) => {
            if e.is_zero() {
                Ok((None, BTreeMap::new()))
            } else {
                Ok((Some(0), BTreeMap::from([(0u32, e)])))
            }
        }
        Val::Form(d, f) => Ok((Some(d), f)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::rational;

    #[test]
    fn decimal_and_quotient_are_exact() {
        assert_eq!(parse_expr("0.25", None).unwrap(), Expr::ratio(1, 4));
        assert_eq!(parse_expr("1/4", None).unwrap(), Expr::ratio(1, 4));
        assert_eq!(parse_expr("2.5e-1", None).unwrap(), Expr::ratio(1, 4));
    }

    #[test]
    fn precedence() {
        let e = parse_expr("-x1^2 + 2*x2/4", Some(2)).unwrap();
        let expect = &(-&Expr::coord(0).pow(2)) + &Expr::coord(1).scale(&rational(1, 2));
        assert_eq!(e, expect);
    }

    #[test]
    fn negative_powers() {
        let e = parse_expr("x1^(-2)", None).unwrap();
        assert_eq!(&e * &Expr::coord(0).pow(2), Expr::one());
        assert_eq!(parse_expr("x1^-2", None).unwrap(), e);
    }

    #[test]
    fn display_round_trips() {
        let srcs = [
            "sin(2*pi*x1)*x2 - 3/7*exp(x3^2)",
            "recip(2 + sin(x2))*cos(x2)",
            "profile(bump[1/16,9/16], x1^2 + x2^2, 1)*x3",
            "profile(fold_slope, 4*x1) + x1^(-1)*x2",
        ];
        for s in srcs {
            let e = parse_expr(s, None).unwrap();
            let back = parse_expr(&e.to_string(), None).unwrap();
            assert_eq!(e, back, "{s} -> {e}");
        }
    }

    #[test]
    fn basis_sorting_sign() {
        let (d, f) = parse_form_terms("e{2,1}", Some(2)).unwrap();
        assert_eq!(d, Some(2));
        assert_eq!(f[&0b11], Expr::int(-1));
        let (_, f) = parse_form_terms("e{1,1}", Some(2)).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expr("x1 + foo", Some(2)).unwrap_err();
        assert_eq!(e.position, 5);
        assert!(parse_expr("x3", Some(2)).is_err());
        assert!(parse_expr("e{1}", Some(2)).is_err());
        assert!(parse_form_terms("e{1} + e{1,2}", Some(2)).is_err());
    }
}
