use num_complex::Complex64;

use super::{MetricExpr, Node};

pub(super) fn print(e: &MetricExpr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn real(x: f64) -> String {
    format!("{x}")
}

/// Constants print so that re-parsing folds them back to the same value.
fn constant(c: Complex64, out: &mut String) {
    if c.im == 0.0 {
        if c.re < 0.0 {
            out.push_str(&format!("(-{})", real(-c.re)));
        } else {
            out.push_str(&real(c.re));
        }
    } else if c.re == 0.0 {
        if c.im < 0.0 {
            out.push_str(&format!("(-{}i)", real(-c.im)));
        } else {
            out.push_str(&format!("{}i", real(c.im)));
        }
    } else {
        let sign = if c.im < 0.0 { '-' } else { '+' };
        let re = if c.re < 0.0 {
            format!("-{}", real(-c.re))
        } else {
            real(c.re)
        };
        out.push_str(&format!("({re}{sign}{}i)", real(c.im.abs())));
    }
}

fn write_expr(e: &MetricExpr, out: &mut String) {
    match e.node() {
        Node::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                let (negative, body) = signed_term(t);
                match (i, negative) {
                    (0, false) => {}
                    (0, true) => out.push('-'),
                    (_, false) => out.push_str(" + "),
                    (_, true) => out.push_str(" - "),
                }
                write_term(&body, out);
            }
        }
        _ => write_term(e, out),
    }
}

/// Pulls a negative real leading coefficient out of a sum term.
fn signed_term(t: &MetricExpr) -> (bool, MetricExpr) {
    match t.node() {
        Node::Const(c) if c.im == 0.0 && c.re < 0.0 => (true, MetricExpr::constant(-c)),
        Node::Prod(fs) => match fs[0].as_const() {
            Some(c) if c.im == 0.0 && c.re < 0.0 => (true, t.neg()),
            _ => (false, t.clone()),
        },
        _ => (false, t.clone()),
    }
}

fn write_term(e: &MetricExpr, out: &mut String) {
    match e.node() {
        Node::Sum(_) => {
            out.push('(');
            write_expr(e, out);
            out.push(')');
        }
        Node::Prod(fs) => {
            let mut numer: Vec<MetricExpr> = Vec::new();
            let mut denom: Vec<MetricExpr> = Vec::new();
            for f in fs {
                match f.node() {
                    Node::Pow(b, k) if *k < 0 => denom.push(MetricExpr::pow(b.clone(), -k)),
                    _ => numer.push(f.clone()),
                }
            }
            if numer.is_empty() {
                out.push('1');
            }
            for (i, f) in numer.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                write_factor(f, out);
            }
            for d in &denom {
                out.push('/');
                write_factor(d, out);
            }
        }
        Node::Pow(b, k) if *k < 0 => {
            out.push_str("1/");
            write_factor(&MetricExpr::pow(b.clone(), -k), out);
        }
        _ => write_factor(e, out),
    }
}

fn write_factor(e: &MetricExpr, out: &mut String) {
    match e.node() {
        Node::Const(c) => constant(*c, out),
        Node::Var(v) => out.push_str(&v.name()),
        Node::Param(p) => out.push_str(p),
        Node::Sum(_) | Node::Prod(_) => {
            out.push('(');
            write_expr(e, out);
            out.push(')');
        }
        Node::Pow(b, k) => {
            write_base(b, out);
            out.push('^');
            out.push_str(&k.to_string());
        }
        Node::Exp(a) => {
            out.push_str("exp(");
            write_expr(a, out);
            out.push(')');
        }
        Node::Log(a) => {
            out.push_str("log(");
            write_expr(a, out);
            out.push(')');
        }
    }
}

fn write_base(b: &MetricExpr, out: &mut String) {
    match b.node() {
        Node::Var(_) | Node::Param(_) | Node::Exp(_) | Node::Log(_) => write_factor(b, out),
        _ => {
            out.push('(');
            write_expr(b, out);
            out.push(')');
        }
    }
}
