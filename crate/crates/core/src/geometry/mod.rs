//! Hermitian metrics on bundles and line bundles over small chart atlases,
//! their Chern curvature, and the induced weight on `O(1)` over the
//! projectivized dual bundle.
//!
//! Conventions:
//! * A bundle metric is a matrix `H` of expressions with `|u|^2 = u* H u` for
//!   column vectors `u` in the local holomorphic frame.
//! * Curvature is `Theta_{jk} = -d/dtb_k (H^{-1} dH/dt_j)`, so a rank-one
//!   metric `H = exp(-phi)` has `Theta_{jk} = phi_{j kb}` and the
//!   Fubini-Study metric on `O(1)` is positive.
//! * A line weight `phi` means `h = exp(-phi)`; on a chart overlap
//!   `phi_to - phi_from = log|g|^2`.
//! * Frames change as `H_to = g* H_from g`.
//! * The induced weight on the fiber chart where the `l`-th homogeneous
//!   coordinate equals one is `log(zeta^T H^{-1} conj(zeta))`. Any other
//!   self-consistent pairing gives the same positivity verdicts.

mod catalog;

use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{Assignment, Dims, EvalError, MetricExpr, Var};
use crate::linalg::{self, c, CMatrix, HermMatrix, LinalgError};
use crate::sampling;

pub use catalog::{example_catalog, CatalogObject, CatalogParams, CATALOG};

/// Default number of validation samples per chart.
pub const DEFAULT_VALIDATION_SAMPLES: usize = 200;
/// Relative tolerance for transition compatibility checks.
pub const TRANSITION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("point {point:?} lies outside chart `{chart}`")]
    OutsideChart {
        chart: String,
        point: Vec<Complex64>,
    },
    #[error("no chart with index {0}")]
    UnknownChart(usize),
    #[error("metric is not positive definite on chart `{chart}` at {point:?} (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite {
        chart: String,
        point: Vec<Complex64>,
        min_eigenvalue: f64,
    },
    #[error("weight is not real on chart `{chart}` at {point:?} (imaginary part {imag:.3e})")]
    NotReal {
        chart: String,
        point: Vec<Complex64>,
        imag: f64,
    },
    #[error("transition {from}->{to} mismatch {error:.3e} at {point:?}")]
    TransitionMismatch {
        from: usize,
        to: usize,
        point: Vec<Complex64>,
        error: f64,
    },
    #[error("malformed geometry: {0}")]
    Malformed(String),
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error("invalid parameters for `{name}`: {reason}")]
    InvalidParameters { name: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// All of `C^d`.
    Plane,
    /// Polydisc `|x_i| < radius`.
    Polydisc(f64),
    /// A flat torus chart; coordinates are taken modulo the period lattice,
    /// so every point is accepted.
    Torus,
}

impl Domain {
    pub fn contains(&self, point: &[Complex64]) -> bool {
        match self {
            Domain::Plane | Domain::Torus => {
                point.iter().all(|x| x.re.is_finite() && x.im.is_finite())
            }
            Domain::Polydisc(r) => point.iter().all(|x| x.norm() < *r),
        }
    }

    fn sample_radius(&self) -> f64 {
        match self {
            Domain::Plane | Domain::Torus => 2.0,
            Domain::Polydisc(r) => 0.95 * r,
        }
    }

    pub fn sample(&self, dim: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
        sampling::polydisc(dim, count, self.sample_radius(), seed)
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub name: String,
    pub domain: Domain,
}

impl Chart {
    pub fn new(name: &str, domain: Domain) -> Chart {
        Chart {
            name: name.to_string(),
            domain,
        }
    }
}

/// Coordinates of chart `from` as holomorphic expressions in the
/// coordinates of chart `to`, in flat order `(t.., z..)`.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    pub from: usize,
    pub to: usize,
    pub holomorphic: Vec<MetricExpr>,
}

impl CoordinateMap {
    pub fn new(from: usize, to: usize, holomorphic: Vec<MetricExpr>) -> CoordinateMap {
        CoordinateMap {
            from,
            to,
            holomorphic,
        }
    }

    /// Evaluates the `from` coordinates at a point given in `to` coordinates.
    pub fn apply(&self, dims: Dims, point: &[Complex64]) -> Result<Vec<Complex64>, EvalError> {
        let at = assignment(dims, point);
        self.holomorphic.iter().map(|e| e.eval(&at)).collect()
    }

    /// `J[c][a] = d x_from_c / d y_to_a`.
    pub fn jacobian(&self, dims: Dims, point: &[Complex64]) -> Result<CMatrix, EvalError> {
        let at = assignment(dims, point);
        let n = dims.total();
        let mut j = CMatrix::zeros(n, n);
        for (ci, e) in self.holomorphic.iter().enumerate() {
            for a in 0..n {
                j[(ci, a)] = e.wirtinger(dims.coord(a)).eval(&at)?;
            }
        }
        Ok(j)
    }
}

/// Conjugate-consistent assignment for a flat point `(t.., z..)`.
pub fn assignment(dims: Dims, point: &[Complex64]) -> Assignment {
    let (t, z) = point.split_at(dims.base.min(point.len()));
    Assignment::conjugate_consistent(t, z)
}

fn eval_matrix(entries: &[MetricExpr], r: usize, at: &Assignment) -> Result<CMatrix, EvalError> {
    let mut m = CMatrix::zeros(r, r);
    for a in 0..r {
        for b in 0..r {
            m[(a, b)] = entries[a * r + b].eval(at)?;
        }
    }
    Ok(m)
}

#[derive(Debug)]
struct FieldDerivatives {
    /// `d/dt_j H`, per `j`.
    holo: Vec<Vec<MetricExpr>>,
    /// `d/dtb_k H`, per `k`.
    anti: Vec<Vec<MetricExpr>>,
    /// `d/dt_j d/dtb_k H`, row-major over `(j, k)`.
    mixed: Vec<Vec<MetricExpr>>,
}

#[derive(Debug)]
pub struct FieldChart {
    pub chart: Chart,
    /// Row-major `r x r` metric entries in base coordinates `t`.
    pub entries: Vec<MetricExpr>,
    derivs: OnceLock<FieldDerivatives>,
}

/// Frame change on an overlap: `H_to = g* H_from g`.
#[derive(Debug, Clone)]
pub struct FrameTransition {
    pub coords: CoordinateMap,
    /// Row-major `r x r` matrix in the `to` chart's coordinates.
    pub frame: Vec<MetricExpr>,
}

/// A Hermitian metric on a rank-`r` bundle over an `m`-dimensional base.
#[derive(Debug)]
pub struct HermitianField {
    pub rank: usize,
    pub base_dim: usize,
    pub charts: Vec<FieldChart>,
    pub transitions: Vec<FrameTransition>,
}

/// Chern curvature of a bundle metric at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePoint {
    pub point: Vec<Complex64>,
    pub base_dim: usize,
    pub rank: usize,
    /// `Theta_{jk}` as `r x r` endomorphisms, row-major over `(j, k)`.
    pub theta: Vec<CMatrix>,
}

impl CurvaturePoint {
    pub fn new(
        point: Vec<Complex64>,
        base_dim: usize,
        rank: usize,
        theta: Vec<CMatrix>,
    ) -> CurvaturePoint {
        assert_eq!(theta.len(), base_dim * base_dim);
        CurvaturePoint {
            point,
            base_dim,
            rank,
            theta,
        }
    }

    pub fn zero(base_dim: usize, rank: usize) -> CurvaturePoint {
        CurvaturePoint::new(
            vec![],
            base_dim,
            rank,
            vec![CMatrix::zeros(rank, rank); base_dim * base_dim],
        )
    }

    pub fn theta(&self, j: usize, k: usize) -> &CMatrix {
        &self.theta[j * self.base_dim + k]
    }

    /// `H Theta_{jk}`, the sesquilinear form `u -> H(Theta_{jk} u, u)`.
    pub fn lowered(&self, h: &HermMatrix, j: usize, k: usize) -> CMatrix {
        h.matrix() * self.theta(j, k)
    }

    /// Largest deviation of `(H Theta_{jk})*` from `H Theta_{kj}`.
    pub fn adjoint_defect(&self, h: &HermMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.base_dim {
            for k in 0..self.base_dim {
                let a = self.lowered(h, j, k).adjoint();
                let b = self.lowered(h, k, j);
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    /// Curvature in new base coordinates `t = C t'`.
    pub fn change_coordinates(&self, cm: &CMatrix) -> CurvaturePoint {
        let m = self.base_dim;
        let mut theta = vec![CMatrix::zeros(self.rank, self.rank); m * m];
        for j in 0..m {
            for k in 0..m {
                let mut acc = CMatrix::zeros(self.rank, self.rank);
                for a in 0..m {
                    for b in 0..m {
                        acc += self.theta(a, b) * (cm[(a, j)] * cm[(b, k)].conj());
                    }
                }
                theta[j * m + k] = acc;
            }
        }
        CurvaturePoint::new(self.point.clone(), m, self.rank, theta)
    }

    /// Rank-one curvature from the base block of a weight Hessian.
    pub fn from_hessian(h: &HessianPoint) -> CurvaturePoint {
        let m = h.dims.base;
        let theta = (0..m * m)
            .map(|idx| CMatrix::from_element(1, 1, h.hessian.matrix()[(idx / m, idx % m)]))
            .collect();
        CurvaturePoint::new(h.point.clone(), m, 1, theta)
    }
}

impl HermitianField {
    pub fn new(
        rank: usize,
        base_dim: usize,
        charts: Vec<(Chart, Vec<MetricExpr>)>,
        transitions: Vec<FrameTransition>,
    ) -> Result<HermitianField, GeometryError> {
        let dims = Dims::new(base_dim, 0);
        if charts.is_empty() {
            return Err(GeometryError::Malformed(
                "a field needs at least one chart".into(),
            ));
        }
        let mut out = Vec::with_capacity(charts.len());
        for (chart, entries) in charts {
            if entries.len() != rank * rank {
                return Err(GeometryError::Malformed(format!(
                    "chart `{}` has {} entries, expected {}",
                    chart.name,
                    entries.len(),
                    rank * rank
                )));
            }
            if let Some(bad) = entries.iter().find(|e| !e.is_well_formed(dims)) {
                return Err(GeometryError::Malformed(format!(
                    "entry `{bad}` uses undeclared variables"
                )));
            }
            out.push(FieldChart {
                chart,
                entries,
                derivs: OnceLock::new(),
            });
        }
        for tr in &transitions {
            if tr.coords.from >= out.len() || tr.coords.to >= out.len() {
                return Err(GeometryError::Malformed(
                    "transition references a missing chart".into(),
                ));
            }
            if tr.frame.len() != rank * rank || tr.coords.holomorphic.len() != base_dim {
                return Err(GeometryError::Malformed(
                    "transition has wrong shape".into(),
                ));
            }
        }
        Ok(HermitianField {
            rank,
            base_dim,
            charts: out,
            transitions,
        })
    }

    /// Rank-one field `H = exp(-phi)` from a line weight without fiber
    /// directions. The frame change is the inverse of the weight's `g`.
    pub fn from_line_weight(w: &LineWeight) -> Result<HermitianField, GeometryError> {
        if w.dims.fiber != 0 {
            return Err(GeometryError::Malformed(
                "weight has fiber directions".into(),
            ));
        }
        let charts = w
            .charts
            .iter()
            .map(|c| (c.chart.clone(), vec![MetricExpr::exp(c.phi.neg())]))
            .collect();
        let transitions = w
            .transitions
            .iter()
            .map(|t| FrameTransition {
                coords: t.coords.clone(),
                frame: vec![MetricExpr::pow(t.g.clone(), -1)],
            })
            .collect();
        HermitianField::new(1, w.dims.base, charts, transitions)
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.base_dim, 0)
    }

    fn chart(&self, chart: usize) -> Result<&FieldChart, GeometryError> {
        self.charts
            .get(chart)
            .ok_or(GeometryError::UnknownChart(chart))
    }

    fn check_point(&self, fc: &FieldChart, t: &[Complex64]) -> Result<(), GeometryError> {
        if t.len() != self.base_dim || !fc.chart.domain.contains(t) {
            return Err(GeometryError::OutsideChart {
                chart: fc.chart.name.clone(),
                point: t.to_vec(),
            });
        }
        Ok(())
    }

    pub fn metric_matrix(&self, chart: usize, t: &[Complex64]) -> Result<CMatrix, GeometryError> {
        let fc = self.chart(chart)?;
        self.check_point(fc, t)?;
        Ok(eval_matrix(
            &fc.entries,
            self.rank,
            &assignment(self.dims(), t),
        )?)
    }

    pub fn metric_at(&self, chart: usize, t: &[Complex64]) -> Result<HermMatrix, GeometryError> {
        Ok(HermMatrix::new(self.metric_matrix(chart, t)?)?)
    }

    fn derivatives<'a>(&self, fc: &'a FieldChart) -> &'a FieldDerivatives {
        fc.derivs.get_or_init(|| {
            let m = self.base_dim;
            let d =
                |es: &[MetricExpr], v: Var| es.iter().map(|e| e.wirtinger(v)).collect::<Vec<_>>();
            let holo: Vec<Vec<MetricExpr>> = (1..=m).map(|j| d(&fc.entries, Var::t(j))).collect();
            let anti: Vec<Vec<MetricExpr>> = (1..=m).map(|k| d(&fc.entries, Var::tb(k))).collect();
            let mut mixed = Vec::with_capacity(m * m);
            for hj in &holo {
                for k in 1..=m {
                    mixed.push(d(hj, Var::tb(k)));
                }
            }
            FieldDerivatives { holo, anti, mixed }
        })
    }

    /// Chern curvature `Theta_{jk} = H^{-1} dH_j H^{-1} dH_kb - H^{-1} ddH_{jkb}`
    /// from exact derivatives of the metric entries.
    pub fn curvature(
        &self,
        chart: usize,
        t: &[Complex64],
    ) -> Result<CurvaturePoint, GeometryError> {
        let fc = self.chart(chart)?;
        self.check_point(fc, t)?;
        let r = self.rank;
        let m = self.base_dim;
        let at = assignment(self.dims(), t);
        let h = eval_matrix(&fc.entries, r, &at)?;
        let h_inv = linalg::inverse(&h)?;
        let dv = self.derivatives(fc);
        let holo: Vec<CMatrix> = dv
            .holo
            .iter()
            .map(|e| eval_matrix(e, r, &at))
            .collect::<Result<_, _>>()?;
        let anti: Vec<CMatrix> = dv
            .anti
            .iter()
            .map(|e| eval_matrix(e, r, &at))
            .collect::<Result<_, _>>()?;
        let mut theta = Vec::with_capacity(m * m);
        for (j, dh) in holo.iter().enumerate() {
            let a = &h_inv * dh;
            for (k, dbh) in anti.iter().enumerate() {
                let mixed = eval_matrix(&dv.mixed[j * m + k], r, &at)?;
                theta.push(&a * &h_inv * dbh - &h_inv * mixed);
            }
        }
        Ok(CurvaturePoint::new(t.to_vec(), m, r, theta))
    }

    /// Samples every chart for positive definiteness and every transition
    /// for `H_to = g* H_from g`.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<FieldValidation, GeometryError> {
        let mut report = FieldValidation {
            samples: 0,
            min_eigenvalue: f64::INFINITY,
            max_transition_error: 0.0,
        };
        for (ci, fc) in self.charts.iter().enumerate() {
            for t in fc
                .chart
                .domain
                .sample(self.base_dim, samples, seed.wrapping_add(ci as u64))
            {
                let h = self.metric_matrix(ci, &t)?;
                let herm = HermMatrix::with_tolerance(h, 1e-10)?;
                let min = herm.min_eigenvalue();
                if min <= 0.0 {
                    return Err(GeometryError::NotPositiveDefinite {
                        chart: fc.chart.name.clone(),
                        point: t,
                        min_eigenvalue: min,
                    });
                }
                report.min_eigenvalue = report.min_eigenvalue.min(min);
                report.samples += 1;
            }
        }
        let dims = self.dims();
        for tr in &self.transitions {
            let to = &self.charts[tr.coords.to];
            for y in overlap_samples(&to.chart.domain, self.base_dim, samples, seed) {
                let Ok(x) = tr.coords.apply(dims, &y) else {
                    continue;
                };
                if !self.charts[tr.coords.from].chart.domain.contains(&x) {
                    continue;
                }
                let h_from = self.metric_matrix(tr.coords.from, &x)?;
                let h_to = self.metric_matrix(tr.coords.to, &y)?;
                let g = eval_matrix(&tr.frame, self.rank, &assignment(dims, &y))?;
                let pulled = g.adjoint() * h_from * g;
                let err = (&pulled - &h_to).norm() / h_to.norm().max(1e-300);
                if err > TRANSITION_TOL {
                    return Err(GeometryError::TransitionMismatch {
                        from: tr.coords.from,
                        to: tr.coords.to,
                        point: y,
                        error: err,
                    });
                }
                report.max_transition_error = report.max_transition_error.max(err);
            }
        }
        Ok(report)
    }
}

/// Sample points for overlap checks, kept away from coordinate hyperplanes.
fn overlap_samples(domain: &Domain, dim: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    domain
        .sample(dim, count, seed ^ 0x5eed)
        .into_iter()
        .filter(|p| p.iter().all(|x| x.norm() > 0.2))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldValidation {
    pub samples: usize,
    pub min_eigenvalue: f64,
    pub max_transition_error: f64,
}

#[derive(Debug)]
pub struct WeightChart {
    pub chart: Chart,
    pub phi: MetricExpr,
    hessian: OnceLock<Vec<MetricExpr>>,
}

/// Weight change on an overlap: `phi_to - phi_from = log|g|^2`.
#[derive(Debug, Clone)]
pub struct WeightTransition {
    pub coords: CoordinateMap,
    /// Holomorphic, in the `to` chart's coordinates.
    pub g: MetricExpr,
}

/// A line-bundle metric `h = exp(-phi)` given by local weights.
///
/// `dims.fiber` is nonzero for weights on a fibered total space, such as
/// the induced weight on a projectivized bundle; the base coordinates come
/// first in every flat coordinate vector.
#[derive(Debug)]
pub struct LineWeight {
    pub dims: Dims,
    pub charts: Vec<WeightChart>,
    pub transitions: Vec<WeightTransition>,
}

/// Full complex Hessian `phi_{a bb}` of a weight at one point.
#[derive(Debug, Clone)]
pub struct HessianPoint {
    pub point: Vec<Complex64>,
    pub dims: Dims,
    pub hessian: HermMatrix,
}

impl HessianPoint {
    pub fn fiber_block(&self) -> HermMatrix {
        let (m, n) = (self.dims.base, self.dims.fiber);
        HermMatrix::symmetrize(self.hessian.matrix().view((m, m), (n, n)).into_owned())
    }

    pub fn base_block(&self) -> HermMatrix {
        let m = self.dims.base;
        HermMatrix::symmetrize(self.hessian.matrix().view((0, 0), (m, m)).into_owned())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightValidation {
    pub samples: usize,
    pub max_imaginary: f64,
    pub max_transition_error: f64,
    pub max_hessian_error: f64,
}

impl LineWeight {
    pub fn new(
        dims: Dims,
        charts: Vec<(Chart, MetricExpr)>,
        transitions: Vec<WeightTransition>,
    ) -> Result<LineWeight, GeometryError> {
        if charts.is_empty() {
            return Err(GeometryError::Malformed(
                "a weight needs at least one chart".into(),
            ));
        }
        for (chart, phi) in &charts {
            if !phi.is_well_formed(dims) {
                return Err(GeometryError::Malformed(format!(
                    "weight on `{}` uses undeclared variables",
                    chart.name
                )));
            }
        }
        for tr in &transitions {
            if tr.coords.from >= charts.len() || tr.coords.to >= charts.len() {
                return Err(GeometryError::Malformed(
                    "transition references a missing chart".into(),
                ));
            }
            if tr.coords.holomorphic.len() != dims.total() {
                return Err(GeometryError::Malformed(
                    "transition has wrong shape".into(),
                ));
            }
        }
        let charts = charts
            .into_iter()
            .map(|(chart, phi)| WeightChart {
                chart,
                phi,
                hessian: OnceLock::new(),
            })
            .collect();
        Ok(LineWeight {
            dims,
            charts,
            transitions,
        })
    }

    /// The weight of `L^c`, i.e. every local weight multiplied by `c`.
    pub fn scaled(&self, factor: f64) -> LineWeight {
        self.map_weights(|_, phi| phi.scale(c(factor, 0.0)))
    }

    /// A new weight with each chart's `phi` replaced by `f(chart, phi)`;
    /// transitions are kept, so `f` must preserve them up to `|g|^2` powers
    /// the caller accounts for.
    pub fn map_weights(&self, f: impl Fn(usize, &MetricExpr) -> MetricExpr) -> LineWeight {
        LineWeight {
            dims: self.dims,
            charts: self
                .charts
                .iter()
                .enumerate()
                .map(|(i, wc)| WeightChart {
                    chart: wc.chart.clone(),
                    phi: f(i, &wc.phi),
                    hessian: OnceLock::new(),
                })
                .collect(),
            transitions: self.transitions.clone(),
        }
    }

    fn chart(&self, chart: usize) -> Result<&WeightChart, GeometryError> {
        self.charts
            .get(chart)
            .ok_or(GeometryError::UnknownChart(chart))
    }

    fn check_point(&self, wc: &WeightChart, x: &[Complex64]) -> Result<(), GeometryError> {
        if x.len() != self.dims.total() || !wc.chart.domain.contains(x) {
            return Err(GeometryError::OutsideChart {
                chart: wc.chart.name.clone(),
                point: x.to_vec(),
            });
        }
        Ok(())
    }

    pub fn phi_at(&self, chart: usize, x: &[Complex64]) -> Result<Complex64, GeometryError> {
        let wc = self.chart(chart)?;
        self.check_point(wc, x)?;
        Ok(wc.phi.eval(&assignment(self.dims, x))?)
    }

    /// Symbolic Hessian entries `d/dx_a d/dxb_b phi`, row-major.
    pub fn hessian_exprs(&self, chart: usize) -> Result<&[MetricExpr], GeometryError> {
        let wc = self.chart(chart)?;
        Ok(wc.hessian.get_or_init(|| {
            let n = self.dims.total();
            let mut out = Vec::with_capacity(n * n);
            for a in 0..n {
                let da = wc.phi.wirtinger(self.dims.coord(a));
                for b in 0..n {
                    out.push(da.wirtinger(self.dims.coord(b).partner()));
                }
            }
            out
        }))
    }

    /// Complex Hessian of the weight by exact differentiation.
    pub fn curvature(&self, chart: usize, x: &[Complex64]) -> Result<HessianPoint, GeometryError> {
        let wc = self.chart(chart)?;
        self.check_point(wc, x)?;
        let exprs = self.hessian_exprs(chart)?;
        let n = self.dims.total();
        let raw = eval_matrix(exprs, n, &assignment(self.dims, x))?;
        let hessian = HermMatrix::with_tolerance(raw, 1e-10)?;
        Ok(HessianPoint {
            point: x.to_vec(),
            dims: self.dims,
            hessian,
        })
    }

    /// Samples reality of every weight, the overlap rule
    /// `phi_to - phi_from = log|g|^2`, and the Hessian congruence
    /// `Hess_to = J^T Hess_from conj(J)` with `J = d x_from / d y_to`.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<WeightValidation, GeometryError> {
        let mut report = WeightValidation {
            samples: 0,
            max_imaginary: 0.0,
            max_transition_error: 0.0,
            max_hessian_error: 0.0,
        };
        let n = self.dims.total();
        for (ci, wc) in self.charts.iter().enumerate() {
            for x in wc
                .chart
                .domain
                .sample(n, samples, seed.wrapping_add(ci as u64))
            {
                let v = self.phi_at(ci, &x)?;
                let imag = v.im.abs() / (1.0 + v.re.abs());
                if imag > 1e-10 {
                    return Err(GeometryError::NotReal {
                        chart: wc.chart.name.clone(),
                        point: x,
                        imag: v.im,
                    });
                }
                report.max_imaginary = report.max_imaginary.max(imag);
                report.samples += 1;
            }
        }
        for tr in &self.transitions {
            let (from, to) = (tr.coords.from, tr.coords.to);
            for y in overlap_samples(&self.charts[to].chart.domain, n, samples, seed) {
                let Ok(x) = tr.coords.apply(self.dims, &y) else {
                    continue;
                };
                if !self.charts[from].chart.domain.contains(&x) {
                    continue;
                }
                let g = tr.g.eval(&assignment(self.dims, &y))?;
                let lhs = self.phi_at(to, &y)? - self.phi_at(from, &x)?;
                let err = (lhs.re - g.norm_sqr().ln()).abs() / (1.0 + lhs.re.abs());
                let mismatch = |error| GeometryError::TransitionMismatch {
                    from,
                    to,
                    point: y.clone(),
                    error,
                };
                if err > TRANSITION_TOL {
                    return Err(mismatch(err));
                }
                let h_from = self.curvature(from, &x)?;
                let h_to = self.curvature(to, &y)?;
                let jac = tr.coords.jacobian(self.dims, &y)?;
                let pulled = jac.transpose() * h_from.hessian.matrix() * jac.map(|v| v.conj());
                let herr =
                    (&pulled - h_to.hessian.matrix()).norm() / h_to.hessian.norm().max(1e-300);
                if herr > 1e-8 {
                    return Err(mismatch(herr));
                }
                report.max_transition_error = report.max_transition_error.max(err);
                report.max_hessian_error = report.max_hessian_error.max(herr);
            }
        }
        Ok(report)
    }
}

/// Curvature of a line weight: its full complex Hessian.
pub fn curvature_line(
    w: &LineWeight,
    chart: usize,
    x: &[Complex64],
) -> Result<HessianPoint, GeometryError> {
    w.curvature(chart, x)
}

/// Chern curvature of a bundle metric.
pub fn curvature_bundle(
    f: &HermitianField,
    chart: usize,
    t: &[Complex64],
) -> Result<CurvaturePoint, GeometryError> {
    f.curvature(chart, t)
}

fn symbolic_det(m: &[MetricExpr], r: usize) -> MetricExpr {
    match r {
        0 => MetricExpr::one(),
        1 => m[0].clone(),
        _ => {
            let mut terms = Vec::with_capacity(r);
            for col in 0..r {
                let minor = symbolic_minor(m, r, 0, col);
                let term = m[col].mul(&symbolic_det(&minor, r - 1));
                terms.push(if col % 2 == 0 { term } else { term.neg() });
            }
            MetricExpr::sum(terms)
        }
    }
}

fn symbolic_minor(m: &[MetricExpr], r: usize, row: usize, col: usize) -> Vec<MetricExpr> {
    let mut out = Vec::with_capacity((r - 1) * (r - 1));
    for a in (0..r).filter(|&a| a != row) {
        for b in (0..r).filter(|&b| b != col) {
            out.push(m[a * r + b].clone());
        }
    }
    out
}

/// `adj(M)[a][b] = (-1)^(a+b) det(minor(b, a))`.
fn symbolic_adjugate(m: &[MetricExpr], r: usize) -> Vec<MetricExpr> {
    if r == 1 {
        return vec![MetricExpr::one()];
    }
    let mut out = Vec::with_capacity(r * r);
    for a in 0..r {
        for b in 0..r {
            let d = symbolic_det(&symbolic_minor(m, r, b, a), r - 1);
            out.push(if (a + b) % 2 == 0 { d } else { d.neg() });
        }
    }
    out
}

/// Homogeneous fiber vector with a one in slot `fiber_chart`, fiber
/// coordinates filling the remaining slots in order.
fn homogeneous(r: usize, fiber_chart: usize, barred: bool) -> Vec<MetricExpr> {
    let mut next = 1;
    (0..r)
        .map(|slot| {
            if slot == fiber_chart {
                MetricExpr::one()
            } else {
                let v = if barred { Var::zb(next) } else { Var::z(next) };
                next += 1;
                MetricExpr::var(v)
            }
        })
        .collect()
}

fn induced_phi(f: &HermitianField, base_chart: usize, fiber_chart: usize) -> MetricExpr {
    let r = f.rank;
    let h = &f.charts[base_chart].entries;
    let adj = symbolic_adjugate(h, r);
    let det = symbolic_det(h, r);
    let zeta = homogeneous(r, fiber_chart, false);
    let zeta_bar = homogeneous(r, fiber_chart, true);
    let mut q = Vec::with_capacity(r * r);
    for a in 0..r {
        for b in 0..r {
            q.push(MetricExpr::product([
                zeta[a].clone(),
                adj[a * r + b].clone(),
                zeta_bar[b].clone(),
            ]));
        }
    }
    MetricExpr::log(MetricExpr::sum(q)).sub(&MetricExpr::log(det))
}

fn check_induced(
    f: &HermitianField,
    base_chart: usize,
    fiber_chart: usize,
) -> Result<(), GeometryError> {
    if f.rank == 0 {
        return Err(GeometryError::Malformed(
            "induced weight needs rank >= 1".into(),
        ));
    }
    if base_chart >= f.charts.len() {
        return Err(GeometryError::UnknownChart(base_chart));
    }
    if fiber_chart >= f.rank {
        return Err(GeometryError::UnknownChart(fiber_chart));
    }
    Ok(())
}

fn induced_chart(f: &HermitianField, base_chart: usize, fiber_chart: usize) -> Chart {
    let base = &f.charts[base_chart].chart;
    Chart::new(
        &format!("{}/fiber{}", base.name, fiber_chart),
        base.domain.clone(),
    )
}

/// Induced weight of `O(1)` over the projectivized dual bundle on one fiber
/// chart: `phi(t, w) = log(zeta(w)^T H(t)^{-1} conj(zeta(w)))`, base
/// coordinates first, fiber coordinates `z1..z_{r-1}` last.
pub fn induced_line_weight(
    f: &HermitianField,
    base_chart: usize,
    fiber_chart: usize,
) -> Result<LineWeight, GeometryError> {
    check_induced(f, base_chart, fiber_chart)?;
    let dims = Dims::new(f.base_dim, f.rank - 1);
    let phi = induced_phi(f, base_chart, fiber_chart);
    LineWeight::new(
        dims,
        vec![(induced_chart(f, base_chart, fiber_chart), phi)],
        vec![],
    )
}

/// The induced weight on all `r` fiber charts over one base chart, with the
/// fiber transitions from chart 0 to every other chart.
pub fn projectivized_weight(
    f: &HermitianField,
    base_chart: usize,
) -> Result<LineWeight, GeometryError> {
    check_induced(f, base_chart, 0)?;
    let r = f.rank;
    let dims = Dims::new(f.base_dim, r - 1);
    let charts = (0..r)
        .map(|l| {
            (
                induced_chart(f, base_chart, l),
                induced_phi(f, base_chart, l),
            )
        })
        .collect();
    let mut transitions = Vec::new();
    for l in 1..r {
        // chart-0 fiber coordinates zeta_i / zeta_0 written in chart-l
        // coordinates, where zeta_0 is the chart-l coordinate z1
        let zeta = homogeneous(r, l, false);
        let mut holo: Vec<MetricExpr> = (1..=f.base_dim)
            .map(|j| MetricExpr::var(Var::t(j)))
            .collect();
        for slot in 1..r {
            holo.push(zeta[slot].div(&zeta[0]));
        }
        transitions.push(WeightTransition {
            coords: CoordinateMap::new(0, l, holo),
            g: zeta[0].clone(),
        });
    }
    LineWeight::new(dims, charts, transitions)
}

/// Base point plus one fiber sample, on a fiber chart of a projectivized
/// weight.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FiberSample {
    pub chart: usize,
    pub z: Vec<Complex64>,
}

/// Default fiber samples: `per_chart` quasi-random points in the closed unit
/// polydisc of every fiber chart, which together cover the fiber.
pub fn fiber_samples(
    fiber_dim: usize,
    fiber_charts: usize,
    per_chart: usize,
    seed: u64,
) -> Vec<FiberSample> {
    let mut out = Vec::with_capacity(fiber_charts * per_chart);
    for chart in 0..fiber_charts {
        let mut pts = sampling::polydisc(
            fiber_dim,
            per_chart.saturating_sub(1),
            1.0,
            seed.wrapping_add(chart as u64),
        );
        pts.insert(0, vec![c(0.0, 0.0); fiber_dim]);
        out.extend(pts.into_iter().map(|z| FiberSample { chart, z }));
    }
    out
}

/// Concatenates base and fiber coordinates into a flat point.
pub fn total_point(t: &[Complex64], z: &[Complex64]) -> Vec<Complex64> {
    t.iter().chain(z).copied().collect()
}
