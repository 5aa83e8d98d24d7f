use super::{MetricExpr, Node, Var};

pub(super) fn derivative(e: &MetricExpr, var: Var) -> MetricExpr {
    match e.node() {
        Node::Const(_) | Node::Param(_) => MetricExpr::zero(),
        Node::Var(v) => {
            if *v == var {
                MetricExpr::one()
            } else {
                MetricExpr::zero()
            }
        }
        Node::Sum(ts) => MetricExpr::sum(ts.iter().map(|t| derivative(t, var))),
        Node::Prod(fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for (i, f) in fs.iter().enumerate() {
                let df = derivative(f, var);
                if df.is_zero() {
                    continue;
                }
                let rest = fs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, g)| g.clone());
                terms.push(MetricExpr::product(std::iter::once(df).chain(rest)));
            }
            MetricExpr::sum(terms)
        }
        Node::Pow(b, k) => {
            let db = derivative(b, var);
            if db.is_zero() {
                return MetricExpr::zero();
            }
            MetricExpr::product([
                MetricExpr::real(f64::from(*k)),
                MetricExpr::pow(b.clone(), k - 1),
                db,
            ])
        }
        Node::Exp(a) => {
            let da = derivative(a, var);
            if da.is_zero() {
                return MetricExpr::zero();
            }
            MetricExpr::product([e.clone(), da])
        }
        Node::Log(a) => {
            let da = derivative(a, var);
            if da.is_zero() {
                return MetricExpr::zero();
            }
            MetricExpr::product([da, MetricExpr::pow(a.clone(), -1)])
        }
    }
}
