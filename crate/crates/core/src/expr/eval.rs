use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use super::{CoordKind, MetricExpr, Node, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("variable {0} is not assigned")]
    Unassigned(String),
    #[error("parameter `{0}` is not assigned")]
    UnassignedParam(String),
}

/// Values for every coordinate symbol and parameter.
///
/// Barred values are independent slots; [`Assignment::conjugate_consistent`]
/// fills them with the conjugates of their partners.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub t: Vec<Complex64>,
    pub tb: Vec<Complex64>,
    pub z: Vec<Complex64>,
    pub zb: Vec<Complex64>,
    pub params: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn conjugate_consistent(t: &[Complex64], z: &[Complex64]) -> Assignment {
        Assignment {
            t: t.to_vec(),
            tb: t.iter().map(|x| x.conj()).collect(),
            z: z.to_vec(),
            zb: z.iter().map(|x| x.conj()).collect(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_params(mut self, params: &BTreeMap<String, f64>) -> Assignment {
        self.params = params.clone();
        self
    }

    pub fn get(&self, v: Var) -> Option<Complex64> {
        let slot = match (v.kind, v.barred) {
            (CoordKind::Base, false) => &self.t,
            (CoordKind::Base, true) => &self.tb,
            (CoordKind::Fiber, false) => &self.z,
            (CoordKind::Fiber, true) => &self.zb,
        };
        v.index.checked_sub(1).and_then(|i| slot.get(i)).copied()
    }

    pub fn set(&mut self, v: Var, value: Complex64) {
        let slot = match (v.kind, v.barred) {
            (CoordKind::Base, false) => &mut self.t,
            (CoordKind::Base, true) => &mut self.tb,
            (CoordKind::Fiber, false) => &mut self.z,
            (CoordKind::Fiber, true) => &mut self.zb,
        };
        if slot.len() < v.index {
            slot.resize(v.index, Complex64::new(0.0, 0.0));
        }
        slot[v.index - 1] = value;
    }
}

pub(super) fn eval(e: &MetricExpr, at: &Assignment) -> Result<Complex64, EvalError> {
    match e.node() {
        Node::Const(c) => Ok(*c),
        Node::Var(v) => at.get(*v).ok_or_else(|| EvalError::Unassigned(v.name())),
        Node::Param(p) => at
            .params
            .get(p.as_ref())
            .map(|x| Complex64::new(*x, 0.0))
            .ok_or_else(|| EvalError::UnassignedParam(p.to_string())),
        Node::Sum(ts) => {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in ts {
                acc += eval(t, at)?;
            }
            Ok(acc)
        }
        Node::Prod(fs) => {
            let mut acc = Complex64::new(1.0, 0.0);
            for f in fs {
                acc *= eval(f, at)?;
            }
            Ok(acc)
        }
        Node::Pow(b, k) => {
            let x = eval(b, at)?;
            if *k < 0 && x == Complex64::new(0.0, 0.0) {
                return Err(EvalError::DivisionByZero);
            }
            Ok(x.powi(*k))
        }
        Node::Exp(a) => Ok(eval(a, at)?.exp()),
        Node::Log(a) => {
            let x = eval(a, at)?;
            if x == Complex64::new(0.0, 0.0) {
                return Err(EvalError::LogOfZero);
            }
            Ok(x.ln())
        }
    }
}
