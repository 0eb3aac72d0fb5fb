use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::TopologyError;

/// Default half-width of the integer search box for `n = 3`.
pub const DEFAULT_BOX: i64 = 10;

/// Rank and cup-product matrix on a basis of `H²`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohomologyRing {
    pub b2: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl CohomologyRing {
    pub fn new(q: Vec<Vec<i64>>, n: Option<usize>) -> Result<Self, TopologyError> {
        let r = CohomologyRing { b2: q.len(), q, n };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.q.len() != self.b2 || self.q.iter().any(|r| r.len() != self.b2) {
            return Err(TopologyError::Ring(format!("Q must be {0}x{0}", self.b2)));
        }
        for i in 0..self.b2 {
            for j in 0..i {
                if self.q[i][j] != self.q[j][i] {
                    return Err(TopologyError::Ring(format!("Q is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, a: &[i64]) -> i128 {
        let mut s = 0i128;
        for i in 0..self.b2 {
            for j in 0..self.b2 {
                s += self.q[i][j] as i128 * a[i] as i128 * a[j] as i128;
            }
        }
        s
    }

    fn rational(&self) -> Vec<Vec<BigRational>> {
        self.q
            .iter()
            .map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect())
            .collect()
    }

    fn bilinear(&self, a: &[BigRational], b: &[BigRational]) -> BigRational {
        let mut s = BigRational::zero();
        for i in 0..self.b2 {
            for j in 0..self.b2 {
                if self.q[i][j] != 0 {
                    s += BigRational::from_integer(self.q[i][j].into()) * &a[i] * &b[j];
                }
            }
        }
        s
    }

    /// `Uᵀ Q U`.
    pub fn change_basis(&self, u: &[Vec<i64>]) -> CohomologyRing {
        let n = self.b2;
        let mut out = vec![vec![0i64; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let mut s = 0i128;
                for k in 0..n {
                    for l in 0..n {
                        s += u[k][i] as i128 * self.q[k][l] as i128 * u[l][j] as i128;
                    }
                }
                *x = i64::try_from(s).expect("entry fits in i64");
            }
        }
        CohomologyRing { b2: n, q: out, n: self.n }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObstructionA {
    pub n: usize,
    /// Integer class with `a^(n-1) ≠ 0`.
    pub witness: Option<Vec<i64>>,
    /// Whether absence of a witness is a proof.
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_box: Option<i64>,
    pub obstructed: bool,
    pub note: String,
}

/// Looks for `a ∈ H²` with `a^(n-1) ≠ 0`.
pub fn obstruction_a(ring: &CohomologyRing, n: usize, search_box: i64) -> Result<ObstructionA, TopologyError> {
    ring.validate()?;
    match n {
        0 | 1 => Err(TopologyError::InvalidN(n)),
        2 => {
            let witness = (ring.b2 > 0).then(|| unit(ring.b2, 0));
            let note = if witness.is_some() {
                "any nonzero class works for n = 2".to_string()
            } else {
                "b2 = 0: H² vanishes".to_string()
            };
            Ok(ObstructionA { n, obstructed: witness.is_none(), witness, exact: true, search_box: None, note })
        }
        3 => {
            let witness = box_search(ring, search_box);
            let note = match &witness {
                Some(_) => "witness found by bounded search".to_string(),
                None => format!(
                    "none found in the box |a_i| <= {search_box}; this is evidence, not proof: only the supplied Q is searched"
                ),
            };
            Ok(ObstructionA {
                n,
                obstructed: witness.is_none(),
                witness,
                exact: false,
                search_box: Some(search_box),
                note,
            })
        }
        _ => Err(TopologyError::UnsupportedN(n)),
    }
}

/// Searches `|a_i| <= r` shell by shell, lexicographically within a shell.
fn box_search(ring: &CohomologyRing, r: i64) -> Option<Vec<i64>> {
    let d = ring.b2;
    if d == 0 || ring.q.iter().flatten().all(|&x| x == 0) {
        return None;
    }
    for radius in 1..=r {
        let mut a = vec![-radius; d];
        loop {
            if a.iter().any(|x| x.abs() == radius) && ring.eval(&a) != 0 {
                return Some(a);
            }
            let Some(k) = (0..d).rev().find(|&k| a[k] < radius) else { break };
            a[k] += 1;
            a[k + 1..].iter_mut().for_each(|x| *x = -radius);
        }
    }
    None
}

fn unit(n: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// A class `b = u + sqrt(r)·v` with `b² = 0`; `r = 1` and `v = 0` give a
/// rational class. Entries are rationals printed as `p/q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsotropicWitness {
    pub u: Vec<String>,
    pub v: Vec<String>,
    pub r: String,
    pub rational: bool,
    /// Integer form of a rational witness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integer: Option<Vec<String>>,
    #[serde(skip)]
    parts: (Vec<BigRational>, Vec<BigRational>, BigRational),
}

impl IsotropicWitness {
    /// Exact check: `Q(u,u) + r Q(v,v) = 0` and `Q(u,v) = 0`, `b ≠ 0`.
    pub fn verify(&self, ring: &CohomologyRing) -> bool {
        let (u, v, r) = &self.parts;
        let nonzero = u.iter().chain(v.iter()).any(|x| !x.is_zero());
        nonzero
            && (ring.bilinear(u, u) + r * ring.bilinear(v, v)).is_zero()
            && (self.rational || ring.bilinear(u, v).is_zero())
    }
}

/// `Pᵀ Q P = D` with every entry of `D` of one sign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefinitenessProof {
    pub sign: i8,
    pub diagonal: Vec<String>,
    /// Columns of `P`.
    pub basis: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObstructionB {
    pub b2: usize,
    pub b2_at_least_2: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<IsotropicWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definite: Option<DefinitenessProof>,
    pub obstructed: bool,
}

/// Looks for a nonzero `b` with `b² = 0`, by diagonalizing `Q` over ℚ.
pub fn obstruction_b(ring: &CohomologyRing) -> Result<ObstructionB, TopologyError> {
    ring.validate()?;
    let n = ring.b2;
    let (witness, definite) = if n == 0 {
        (None, None)
    } else if let Some(i) = (0..n).find(|&i| ring.q[i][i] == 0) {
        let e: Vec<BigRational> = unit(n, i).into_iter().map(|x| BigRational::from_integer(x.into())).collect();
        (Some(rational_witness(e)), None)
    } else {
        let (d, p) = diagonalize(ring.rational());
        if let Some(i) = d.iter().position(|x| x.is_zero()) {
            (Some(rational_witness(p[i].clone())), None)
        } else if let (Some(i), Some(j)) = (d.iter().position(|x| x.is_positive()), d.iter().position(|x| x.is_negative())) {
            (Some(mixed_witness(&d, &p, i, j)), None)
        } else {
            let sign = if d[0].is_positive() { 1 } else { -1 };
            let proof = DefinitenessProof {
                sign,
                diagonal: d.iter().map(ToString::to_string).collect(),
                basis: p.iter().map(|c| c.iter().map(ToString::to_string).collect()).collect(),
            };
            (None, Some(proof))
        }
    };
    let b2_at_least_2 = n >= 2;
    Ok(ObstructionB { b2: n, b2_at_least_2, obstructed: witness.is_none() || !b2_at_least_2, witness, definite })
}

/// Symmetric Gaussian elimination: returns `D` and the columns of `P` with
/// `Pᵀ Q P = diag(D)`.
fn diagonalize(mut a: Vec<Vec<BigRational>>) -> (Vec<BigRational>, Vec<Vec<BigRational>>) {
    let n = a.len();
    // columns of P, stored as rows for convenience
    let mut p: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for k in 0..n {
        if a[k][k].is_zero() {
            let swap = (k + 1..n).find(|&j| !a[j][j].is_zero());
            if let Some(j) = swap {
                a.swap(k, j);
                for row in a.iter_mut() {
                    row.swap(k, j);
                }
                p.swap(k, j);
            } else if let Some(j) = (k + 1..n).find(|&j| !a[k][j].is_zero()) {
                // e_k += e_j makes the pivot 2 a_kj
                for i in 0..n {
                    let x = a[j][i].clone();
                    a[k][i] += x;
                }
                for i in 0..n {
                    let x = a[i][j].clone();
                    a[i][k] += x;
                }
                let pj = p[j].clone();
                p[k].iter_mut().zip(pj).for_each(|(x, y)| *x += y);
            } else {
                continue;
            }
        }
        let pivot = a[k][k].clone();
        for j in k + 1..n {
            if a[k][j].is_zero() {
                continue;
            }
            let f = &a[k][j] / &pivot;
            for i in 0..n {
                let x = &f * &a[k][i];
                a[j][i] -= x;
            }
            for i in 0..n {
                let x = &f * &a[i][k];
                a[i][j] -= x;
            }
            let pk = p[k].clone();
            p[j].iter_mut().zip(pk).for_each(|(x, y)| *x -= &f * y);
        }
    }
    ((0..n).map(|i| a[i][i].clone()).collect(), p)
}

fn rational_witness(u: Vec<BigRational>) -> IsotropicWitness {
    let n = u.len();
    let zero = vec![BigRational::zero(); n];
    IsotropicWitness {
        u: u.iter().map(ToString::to_string).collect(),
        v: zero.iter().map(ToString::to_string).collect(),
        r: "1".into(),
        rational: true,
        integer: Some(to_integer(&u).iter().map(ToString::to_string).collect()),
        parts: (u, zero, BigRational::one()),
    }
}

/// From `d_i > 0 > d_j`: `b = p_i + sqrt(r) p_j` with `r = -d_i/d_j`.
fn mixed_witness(d: &[BigRational], p: &[Vec<BigRational>], i: usize, j: usize) -> IsotropicWitness {
    let r = -(&d[i] / &d[j]);
    if let Some(s) = rational_sqrt(&r) {
        let u: Vec<BigRational> = p[i].iter().zip(&p[j]).map(|(a, b)| a + &s * b).collect();
        return rational_witness(u);
    }
    IsotropicWitness {
        u: p[i].iter().map(ToString::to_string).collect(),
        v: p[j].iter().map(ToString::to_string).collect(),
        r: r.to_string(),
        rational: false,
        integer: None,
        parts: (p[i].clone(), p[j].clone(), r),
    }
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    let (a, b) = (r.numer().sqrt(), r.denom().sqrt());
    (&a * &a == *r.numer() && &b * &b == *r.denom()).then(|| BigRational::new(a, b))
}

fn to_integer(u: &[BigRational]) -> Vec<BigInt> {
    let l = u.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let v: Vec<BigInt> = u.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g.is_zero() {
        v
    } else {
        v.into_iter().map(|x| x / &g).collect()
    }
}
