//! Float evaluator for repeated sampling of one expression.
//!
//! Distinct atoms are numbered once and evaluated once per point, so a
//! reciprocal shared by many terms costs a single division.

use std::collections::HashMap;

use num_traits::ToPrimitive;

use super::{Atom, Expr, Profile};

type Sum = Vec<(f64, Vec<(usize, i32)>)>;

#[derive(Clone, Debug)]
enum Node {
    Coord(usize),
    Const(f64),
    Sin(Sum),
    Cos(Sum),
    Exp(Sum),
    Recip(Sum),
    Profile(Profile, u32, Sum),
}

#[derive(Clone, Debug, Default)]
pub struct CompiledExpr {
    /// Topologically ordered: a node only refers to earlier slots.
    nodes: Vec<Node>,
    top: Sum,
}

#[derive(Default)]
struct Builder<'a> {
    nodes: Vec<Node>,
    index: HashMap<&'a Atom, usize>,
    by_ptr: HashMap<(u8, *const Expr), usize>,
}

/// Identity of a shared payload, so repeated atoms skip the deep hash.
fn payload(a: &Atom) -> Option<(u8, *const Expr)> {
    match a {
        Atom::Sin(e) => Some((0, e.as_ptr())),
        Atom::Cos(e) => Some((1, e.as_ptr())),
        Atom::Exp(e) => Some((2, e.as_ptr())),
        Atom::Recip(e) => Some((3, e.as_ptr())),
        Atom::Profile { .. } | Atom::Coord(_) | Atom::Pi => None,
    }
}

impl<'a> Builder<'a> {
    fn sum(&mut self, e: &'a Expr) -> Sum {
        e.terms()
            .map(|(m, c)| {
                let factors = m.factors().iter().map(|(a, p)| (self.slot(a), *p)).collect();
                (c.to_f64().unwrap_or(f64::NAN), factors)
            })
            .collect()
    }

    fn slot(&mut self, a: &'a Atom) -> usize {
        let ptr = payload(a);
        if let Some(&k) = ptr.and_then(|p| self.by_ptr.get(&p)) {
            return k;
        }
        if let Some(&k) = self.index.get(a) {
            if let Some(p) = ptr {
                self.by_ptr.insert(p, k);
            }
            return k;
        }
        let node = match a {
            Atom::Coord(j) => Node::Coord(*j),
            Atom::Pi => Node::Const(std::f64::consts::PI),
            Atom::Sin(e) => Node::Sin(self.sum(e)),
            Atom::Cos(e) => Node::Cos(self.sum(e)),
            Atom::Exp(e) => Node::Exp(self.sum(e)),
            Atom::Recip(e) => Node::Recip(self.sum(e)),
            Atom::Profile { profile, order, arg } => Node::Profile(profile.clone(), *order, self.sum(arg)),
        };
        self.nodes.push(node);
        let k = self.nodes.len() - 1;
        self.index.insert(a, k);
        if let Some(p) = ptr {
            self.by_ptr.insert(p, k);
        }
        k
    }
}

fn eval_sum(s: &Sum, vals: &[f64]) -> f64 {
    let mut total = 0.0;
    for (c, factors) in s {
        let mut v = *c;
        for &(k, p) in factors {
            let base = vals[k];
            v *= if p == 1 { base } else { base.powi(p) };
        }
        total += v;
    }
    total
}

fn eval_nodes(nodes: &[Node], x: &[f64]) -> Vec<f64> {
    let mut vals = Vec::with_capacity(nodes.len());
    for n in nodes {
        let v = match n {
            Node::Coord(j) => x[*j],
            Node::Const(c) => *c,
            Node::Sin(s) => eval_sum(s, &vals).sin(),
            Node::Cos(s) => eval_sum(s, &vals).cos(),
            Node::Exp(s) => eval_sum(s, &vals).exp(),
            Node::Recip(s) => 1.0 / eval_sum(s, &vals),
            Node::Profile(p, k, s) => p.eval(*k, eval_sum(s, &vals)),
        };
        vals.push(v);
    }
    vals
}

fn eval_sum_dual(s: &Sum, vals: &[f64], ders: &[f64]) -> (f64, f64) {
    let (mut total, mut dtotal) = (0.0, 0.0);
    for (c, factors) in s {
        let (mut v, mut dv) = (*c, 0.0);
        for &(k, p) in factors {
            let (b, db) = (vals[k], ders[k]);
            let (f, df) = if p == 1 {
                (b, db)
            } else if db == 0.0 {
                (b.powi(p), 0.0)
            } else {
                (b.powi(p), p as f64 * b.powi(p - 1) * db)
            };
            dv = v * df + dv * f;
            v *= f;
        }
        total += v;
        dtotal += dv;
    }
    (total, dtotal)
}

/// Values and `∂/∂x_l` of every node, forward mode.
fn eval_nodes_dual(nodes: &[Node], x: &[f64], l: usize) -> (Vec<f64>, Vec<f64>) {
    let mut vals = Vec::with_capacity(nodes.len());
    let mut ders = Vec::with_capacity(nodes.len());
    for n in nodes {
        let (v, d) = match n {
            Node::Coord(j) => (x[*j], if *j == l { 1.0 } else { 0.0 }),
            Node::Const(c) => (*c, 0.0),
            Node::Sin(s) => {
                let (a, da) = eval_sum_dual(s, &vals, &ders);
                (a.sin(), a.cos() * da)
            }
            Node::Cos(s) => {
                let (a, da) = eval_sum_dual(s, &vals, &ders);
                (a.cos(), -a.sin() * da)
            }
            Node::Exp(s) => {
                let (a, da) = eval_sum_dual(s, &vals, &ders);
                (a.exp(), a.exp() * da)
            }
            Node::Recip(s) => {
                let (a, da) = eval_sum_dual(s, &vals, &ders);
                (1.0 / a, -da / (a * a))
            }
            Node::Profile(p, k, s) => {
                let (a, da) = eval_sum_dual(s, &vals, &ders);
                let d = if da == 0.0 { 0.0 } else { p.eval(k + 1, a) * da };
                (p.eval(*k, a), d)
            }
        };
        vals.push(v);
        ders.push(d);
    }
    (vals, ders)
}

/// Several expressions sharing one atom table.
#[derive(Clone, Debug, Default)]
pub struct CompiledBatch {
    nodes: Vec<Node>,
    tops: Vec<Sum>,
}

impl CompiledBatch {
    pub fn new<'a>(exprs: impl IntoIterator<Item = &'a Expr>) -> Self {
        let mut b = Builder::default();
        let tops = exprs.into_iter().map(|e| b.sum(e)).collect();
        CompiledBatch { nodes: b.nodes, tops }
    }

    pub fn len(&self) -> usize {
        self.tops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tops.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let vals = eval_nodes(&self.nodes, x);
        self.tops.iter().map(|s| eval_sum(s, &vals)).collect()
    }

    /// Values and partial derivatives in `x_l` of every expression.
    pub fn eval_with_derivative(&self, x: &[f64], l: usize) -> (Vec<f64>, Vec<f64>) {
        let (vals, ders) = eval_nodes_dual(&self.nodes, x, l);
        self.tops.iter().map(|s| eval_sum_dual(s, &vals, &ders)).unzip()
    }
}

impl CompiledExpr {
    pub fn new(e: &Expr) -> Self {
        let mut b = Builder::default();
        let top = b.sum(e);
        CompiledExpr { nodes: b.nodes, top }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_sum(&self.top, &eval_nodes(&self.nodes, x))
    }

    pub fn is_zero(&self) -> bool {
        self.top.is_empty()
    }
}
