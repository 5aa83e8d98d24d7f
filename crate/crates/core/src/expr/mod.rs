//! Metric-weight expressions over holomorphic and antiholomorphic coordinates.
//!
//! Every coordinate `t_k`, `z_k` has an independent barred partner `tb_k`,
//! `zb_k`. Differentiation treats the two as unrelated symbols, which is the
//! Wirtinger calculus: `d/dz` and `d/dzb` of a conjugate-consistent weight
//! evaluated at `zb = conj(z)` are the usual complex partial derivatives.
//!
//! Expressions are kept in a normal form: sums and products are flattened,
//! constants folded, like terms and like powers merged, and children sorted
//! by a fixed total order. Printing that normal form and parsing it back is a
//! fixed point.

mod diff;
mod eval;
mod parse;
mod print;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

pub use eval::{Assignment, EvalError};
pub use parse::{ParseError, ParseErrorKind};

/// Which family a coordinate belongs to: base `t` or fiber `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CoordKind {
    Base,
    Fiber,
}

/// A coordinate symbol. Indices are 1-based as in `t1`, `zb2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub kind: CoordKind,
    pub index: usize,
    pub barred: bool,
}

impl Var {
    pub fn t(index: usize) -> Var {
        Var {
            kind: CoordKind::Base,
            index,
            barred: false,
        }
    }

    pub fn tb(index: usize) -> Var {
        Var {
            kind: CoordKind::Base,
            index,
            barred: true,
        }
    }

    pub fn z(index: usize) -> Var {
        Var {
            kind: CoordKind::Fiber,
            index,
            barred: false,
        }
    }

    pub fn zb(index: usize) -> Var {
        Var {
            kind: CoordKind::Fiber,
            index,
            barred: true,
        }
    }

    /// The barred partner (or unbarred, if this one is barred).
    pub fn partner(self) -> Var {
        Var {
            barred: !self.barred,
            ..self
        }
    }

    pub fn name(&self) -> String {
        let stem = match (self.kind, self.barred) {
            (CoordKind::Base, false) => "t",
            (CoordKind::Base, true) => "tb",
            (CoordKind::Fiber, false) => "z",
            (CoordKind::Fiber, true) => "zb",
        };
        format!("{stem}{}", self.index)
    }
}

/// Number of base and fiber coordinates an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Dims {
    pub base: usize,
    pub fiber: usize,
}

impl Dims {
    pub fn new(base: usize, fiber: usize) -> Dims {
        Dims { base, fiber }
    }

    pub fn total(&self) -> usize {
        self.base + self.fiber
    }

    /// Unbarred coordinate for a flat index over `(t_1..t_m, z_1..z_n)`.
    pub fn coord(&self, flat: usize) -> Var {
        if flat < self.base {
            Var::t(flat + 1)
        } else {
            Var::z(flat - self.base + 1)
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        v.index >= 1
            && match v.kind {
                CoordKind::Base => v.index <= self.base,
                CoordKind::Fiber => v.index <= self.fiber,
            }
    }
}

#[derive(Debug)]
pub(crate) enum Node {
    Const(Complex64),
    Var(Var),
    Param(Arc<str>),
    Sum(Vec<MetricExpr>),
    Prod(Vec<MetricExpr>),
    Pow(MetricExpr, i32),
    Exp(MetricExpr),
    Log(MetricExpr),
}

/// Immutable, cheaply clonable expression handle.
#[derive(Clone)]
pub struct MetricExpr(Arc<Node>);

impl fmt::Debug for MetricExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MetricExpr({self})")
    }
}

impl fmt::Display for MetricExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::print(self))
    }
}

fn clean(c: Complex64) -> Complex64 {
    // fold -0.0 so printing is stable
    Complex64::new(c.re + 0.0, c.im + 0.0)
}

impl MetricExpr {
    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    fn wrap(node: Node) -> MetricExpr {
        MetricExpr(Arc::new(node))
    }

    pub fn constant(c: Complex64) -> MetricExpr {
        MetricExpr::wrap(Node::Const(clean(c)))
    }

    pub fn real(x: f64) -> MetricExpr {
        MetricExpr::constant(Complex64::new(x, 0.0))
    }

    pub fn zero() -> MetricExpr {
        MetricExpr::real(0.0)
    }

    pub fn one() -> MetricExpr {
        MetricExpr::real(1.0)
    }

    pub fn var(v: Var) -> MetricExpr {
        MetricExpr::wrap(Node::Var(v))
    }

    pub fn param(name: &str) -> MetricExpr {
        MetricExpr::wrap(Node::Param(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(Complex64::new(0.0, 0.0))
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(Complex64::new(1.0, 0.0))
    }

    /// Flattened, folded, merged and sorted n-ary sum.
    pub fn sum<I: IntoIterator<Item = MetricExpr>>(terms: I) -> MetricExpr {
        let mut constant = Complex64::new(0.0, 0.0);
        let mut split: Vec<(Complex64, MetricExpr)> = Vec::new();
        let mut push = |t: MetricExpr, constant: &mut Complex64| match t.node() {
            Node::Const(c) => *constant += c,
            _ => split.push(t.coefficient_split()),
        };
        for t in terms {
            if let Node::Sum(inner) = t.node() {
                for s in inner {
                    push(s.clone(), &mut constant);
                }
            } else {
                push(t, &mut constant);
            }
        }
        split.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<MetricExpr> = Vec::with_capacity(split.len() + 1);
        let mut i = 0;
        while i < split.len() {
            let rest = split[i].1.clone();
            let mut coeff = split[i].0;
            let mut j = i + 1;
            while j < split.len() && split[j].1 == rest {
                coeff += split[j].0;
                j += 1;
            }
            if coeff != Complex64::new(0.0, 0.0) {
                out.push(MetricExpr::product([MetricExpr::constant(coeff), rest]));
            }
            i = j;
        }
        if constant != Complex64::new(0.0, 0.0) {
            out.push(MetricExpr::constant(constant));
        }
        match out.len() {
            0 => MetricExpr::zero(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort();
                MetricExpr::wrap(Node::Sum(out))
            }
        }
    }

    /// Splits a non-constant term into its constant coefficient and the rest.
    fn coefficient_split(&self) -> (Complex64, MetricExpr) {
        if let Node::Prod(fs) = self.node() {
            if let Some(c) = fs[0].as_const() {
                let rest: Vec<MetricExpr> = fs[1..].to_vec();
                let rest = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    MetricExpr::wrap(Node::Prod(rest))
                };
                return (c, rest);
            }
        }
        (Complex64::new(1.0, 0.0), self.clone())
    }

    /// Flattened product with constants folded and equal bases merged.
    pub fn product<I: IntoIterator<Item = MetricExpr>>(factors: I) -> MetricExpr {
        let mut constant = Complex64::new(1.0, 0.0);
        let mut powers: Vec<(MetricExpr, i32)> = Vec::new();
        fn push(f: &MetricExpr, constant: &mut Complex64, powers: &mut Vec<(MetricExpr, i32)>) {
            match f.node() {
                Node::Const(c) => *constant *= c,
                Node::Prod(inner) => {
                    for g in inner {
                        push(g, constant, powers);
                    }
                }
                Node::Pow(b, k) => powers.push((b.clone(), *k)),
                _ => powers.push((f.clone(), 1)),
            }
        }
        for f in factors {
            push(&f, &mut constant, &mut powers);
        }
        if constant == Complex64::new(0.0, 0.0) {
            return MetricExpr::zero();
        }
        powers.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<MetricExpr> = Vec::with_capacity(powers.len() + 1);
        let mut i = 0;
        while i < powers.len() {
            let base = powers[i].0.clone();
            let mut exponent = powers[i].1;
            let mut j = i + 1;
            while j < powers.len() && powers[j].0 == base {
                exponent += powers[j].1;
                j += 1;
            }
            let merged = MetricExpr::pow(base, exponent);
            match merged.node() {
                Node::Const(c) => constant *= c,
                Node::Prod(inner) => out.extend(inner.iter().cloned()),
                _ => out.push(merged),
            }
            i = j;
        }
        if constant != Complex64::new(1.0, 0.0) || out.is_empty() {
            out.push(MetricExpr::constant(constant));
        }
        if out.len() == 1 {
            return out.pop().unwrap();
        }
        out.sort();
        MetricExpr::wrap(Node::Prod(out))
    }

    pub fn pow(base: MetricExpr, exponent: i32) -> MetricExpr {
        if exponent == 0 {
            return MetricExpr::one();
        }
        if exponent == 1 {
            return base;
        }
        match base.node() {
            Node::Const(c) => MetricExpr::constant(c.powi(exponent)),
            Node::Pow(b, k) => MetricExpr::pow(b.clone(), k * exponent),
            _ => MetricExpr::wrap(Node::Pow(base, exponent)),
        }
    }

    pub fn exp(arg: MetricExpr) -> MetricExpr {
        match arg.node() {
            Node::Const(c) => MetricExpr::constant(c.exp()),
            _ => MetricExpr::wrap(Node::Exp(arg)),
        }
    }

    pub fn log(arg: MetricExpr) -> MetricExpr {
        match arg.node() {
            Node::Const(c) if *c != Complex64::new(0.0, 0.0) => MetricExpr::constant(c.ln()),
            _ => MetricExpr::wrap(Node::Log(arg)),
        }
    }

    pub fn neg(&self) -> MetricExpr {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, c: Complex64) -> MetricExpr {
        MetricExpr::product([MetricExpr::constant(c), self.clone()])
    }

    pub fn add(&self, other: &MetricExpr) -> MetricExpr {
        MetricExpr::sum([self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &MetricExpr) -> MetricExpr {
        MetricExpr::sum([self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &MetricExpr) -> MetricExpr {
        MetricExpr::product([self.clone(), other.clone()])
    }

    pub fn div(&self, other: &MetricExpr) -> MetricExpr {
        MetricExpr::product([self.clone(), MetricExpr::pow(other.clone(), -1)])
    }

    /// Swaps every variable with its barred partner and conjugates constants.
    pub fn conjugate(&self) -> MetricExpr {
        self.map_leaves(&|node| match node {
            Node::Const(c) => Some(MetricExpr::constant(c.conj())),
            Node::Var(v) => Some(MetricExpr::var(v.partner())),
            _ => None,
        })
    }

    /// Replaces variables according to `subst`; unmapped variables stay.
    pub fn substitute(&self, subst: &BTreeMap<Var, MetricExpr>) -> MetricExpr {
        self.map_leaves(&|node| match node {
            Node::Var(v) => subst.get(v).cloned(),
            _ => None,
        })
    }

    /// Replaces named parameters by real values.
    pub fn bind_params(&self, values: &BTreeMap<String, f64>) -> MetricExpr {
        self.map_leaves(&|node| match node {
            Node::Param(p) => values.get(p.as_ref()).map(|x| MetricExpr::real(*x)),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&Node) -> Option<MetricExpr>) -> MetricExpr {
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Param(_) => {
                f(self.node()).unwrap_or_else(|| self.clone())
            }
            Node::Sum(ts) => MetricExpr::sum(ts.iter().map(|t| t.map_leaves(f))),
            Node::Prod(fs) => MetricExpr::product(fs.iter().map(|t| t.map_leaves(f))),
            Node::Pow(b, k) => MetricExpr::pow(b.map_leaves(f), *k),
            Node::Exp(a) => MetricExpr::exp(a.map_leaves(f)),
            Node::Log(a) => MetricExpr::log(a.map_leaves(f)),
        }
    }

    /// All coordinate symbols referenced, sorted.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let Node::Var(v) = n {
                out.push(*v);
            }
        });
        out.sort();
        out.dedup();
        out
    }

    /// All parameter names referenced, sorted.
    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let Node::Param(p) = n {
                out.push(p.to_string());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    fn visit(&self, f: &mut dyn FnMut(&Node)) {
        f(self.node());
        match self.node() {
            Node::Sum(xs) | Node::Prod(xs) => xs.iter().for_each(|x| x.visit(f)),
            Node::Pow(b, _) => b.visit(f),
            Node::Exp(a) | Node::Log(a) => a.visit(f),
            _ => {}
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// True when every variable index lies within `dims`.
    pub fn is_well_formed(&self, dims: Dims) -> bool {
        self.variables().into_iter().all(|v| dims.contains(v))
    }

    /// Exact partial derivative with respect to `var`, barred and unbarred
    /// symbols being independent.
    pub fn wirtinger(&self, var: Var) -> MetricExpr {
        diff::derivative(self, var)
    }

    pub fn eval(&self, at: &Assignment) -> Result<Complex64, EvalError> {
        eval::eval(self, at)
    }

    pub fn parse(text: &str, dims: Dims, params: &[&str]) -> Result<MetricExpr, ParseError> {
        parse::parse(text, dims, params)
    }

    fn rank(&self) -> u8 {
        match self.node() {
            Node::Const(_) => 0,
            Node::Param(_) => 1,
            Node::Var(_) => 2,
            Node::Pow(..) => 3,
            Node::Exp(_) => 4,
            Node::Log(_) => 5,
            Node::Prod(_) => 6,
            Node::Sum(_) => 7,
        }
    }
}

fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn cmp_slices(a: &[MetricExpr], b: &[MetricExpr]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.cmp(y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

impl Ord for MetricExpr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let r = self.rank().cmp(&other.rank());
        if r != Ordering::Equal {
            return r;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => cmp_complex(a, b),
            (Node::Param(a), Node::Param(b)) => a.cmp(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Pow(a, j), Node::Pow(b, k)) => a.cmp(b).then(j.cmp(k)),
            (Node::Exp(a), Node::Exp(b)) | (Node::Log(a), Node::Log(b)) => a.cmp(b),
            (Node::Prod(a), Node::Prod(b)) | (Node::Sum(a), Node::Sum(b)) => cmp_slices(a, b),
            _ => unreachable!("rank already separates variants"),
        }
    }
}

impl PartialOrd for MetricExpr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for MetricExpr {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for MetricExpr {}
