//! Pointwise decisions for the four positivity notions, with margins.
//!
//! Every margin is reported as `value - tau`, where `value` is the optimum
//! of the defining eigenvalue problem and `tau = REL_THRESHOLD * scale` is
//! the positivity threshold for the data's scale, so `margin > 0` exactly
//! when the verdict is positive.
//!
//! * RC: `min` over `H`-unit `u` of `lambda_max(M(u))`,
//!   `M(u)_{jk} = H(Theta_{jkb} u, u)`.
//! * Uniform RC: `max` over unit `v` of `lambda_min` of the pencil
//!   `(K(v), H)`, `K(v) = sum v_j vb_k H Theta_{jkb}`.
//! * Weak RC: over fiber samples, the smaller of the fiber-block minimum
//!   eigenvalue and the `r`-th largest eigenvalue of the full Hessian.
//! * Uniform weak RC: `max` over unit base `v` of `min` over fiber samples
//!   of `v* G v`, with `G` the horizontal part of the Hessian.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::fibration::{split_curvature, FibrationError, FibrationJet};
use crate::geometry::{total_point, CurvaturePoint, FiberSample, GeometryError, LineWeight};
use crate::linalg::{self, c, eig_herm, CMatrix, HermMatrix, LinalgError, REL_THRESHOLD};
use crate::optimize::{minimize_on_sphere, SearchDiagnostics, SearchOptions};

#[derive(Debug, Error)]
pub enum PositivityError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no fiber samples given")]
    NoFiberSamples,
    #[error("fiber block not positive at fiber chart {chart}, z = {z:?} (smallest eigenvalue {min_eigenvalue:.3e})")]
    FiberNotPositive {
        chart: usize,
        z: Vec<Complex64>,
        min_eigenvalue: f64,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Fibration(#[from] FibrationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Notion {
    Rc,
    UniformRc,
    WeakRc,
    UniformWeakRc,
}

impl Notion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Notion::Rc => "rc",
            Notion::UniformRc => "uniform-rc",
            Notion::WeakRc => "weak-rc",
            Notion::UniformWeakRc => "uniform-weak-rc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityVerdict {
    pub notion: Notion,
    pub point: Vec<Complex64>,
    /// `value - threshold`.
    pub margin: f64,
    /// Optimum of the defining eigenvalue problem.
    pub value: f64,
    pub threshold: f64,
    pub positive: bool,
    /// Optimal tangent direction, when the notion has one.
    pub witness_v: Option<Vec<Complex64>>,
    /// Worst section (`H`-unit), for RC.
    pub witness_u: Option<Vec<Complex64>>,
    /// Worst fiber sample, for the weak notions.
    pub witness_fiber: Option<FiberSample>,
    pub diagnostics: SearchDiagnostics,
    /// Number of fiber samples used by the weak notions.
    pub fiber_samples: usize,
}

impl PositivityVerdict {
    fn new(
        notion: Notion,
        point: &[Complex64],
        value: f64,
        threshold: f64,
        diagnostics: SearchDiagnostics,
    ) -> Self {
        // `+ 0.0` folds a negative zero into zero
        let value = value + 0.0;
        let margin = value - threshold + 0.0;
        PositivityVerdict {
            notion,
            point: point.to_vec(),
            margin,
            value,
            threshold,
            positive: margin > 0.0,
            witness_v: None,
            witness_u: None,
            witness_fiber: None,
            diagnostics,
            fiber_samples: 0,
        }
    }
}

fn complex_from_real(x: &[f64]) -> Vec<Complex64> {
    x.chunks(2).map(|p| c(p[0], p[1])).collect()
}

/// Curvature data reduced by the Cholesky factor `H = L L*`:
/// `R_{jk} = L^{-1} H Theta_{jkb} L^{-*}`, so that `H`-unit sections
/// `u = L^{-*} y` correspond to Euclidean-unit `y`.
struct Reduced {
    m: usize,
    r: usize,
    blocks: Vec<CMatrix>,
    l_inv_adj: CMatrix,
    scale: f64,
}

impl Reduced {
    fn new(cp: &CurvaturePoint, h: &HermMatrix) -> Result<Reduced, PositivityError> {
        if cp.rank != h.dim() {
            return Err(PositivityError::DimensionMismatch(format!(
                "curvature rank {} vs metric size {}",
                cp.rank,
                h.dim()
            )));
        }
        let min = h.min_eigenvalue();
        let chol = nalgebra::Cholesky::new(h.matrix().clone())
            .filter(|_| min > 0.0)
            .ok_or(LinalgError::NotPositiveDefinite {
                min_eigenvalue: min,
            })?;
        let l_inv = linalg::inverse(&chol.l())?;
        let l_inv_adj = l_inv.adjoint();
        let m = cp.base_dim;
        let mut blocks = Vec::with_capacity(m * m);
        let mut scale: f64 = 0.0;
        for j in 0..m {
            for k in 0..m {
                let b = &l_inv * cp.lowered(h, j, k) * &l_inv_adj;
                scale = scale.max(b.norm());
                blocks.push(b);
            }
        }
        Ok(Reduced {
            m,
            r: cp.rank,
            blocks,
            l_inv_adj,
            scale,
        })
    }

    fn threshold(&self) -> f64 {
        REL_THRESHOLD * self.scale
    }

    /// `M(u)` for `u = L^{-*} y`.
    fn section_matrix(&self, y: &[Complex64]) -> HermMatrix {
        let y = linalg::CVector::from_column_slice(y);
        let ya = y.adjoint();
        HermMatrix::symmetrize(CMatrix::from_fn(self.m, self.m, |j, k| {
            (&ya * &self.blocks[j * self.m + k] * &y)[(0, 0)]
        }))
    }

    /// The reduced pencil matrix `L^{-1} K(v) L^{-*}`.
    fn direction_matrix(&self, v: &[Complex64]) -> HermMatrix {
        let mut k = CMatrix::zeros(self.r, self.r);
        for a in 0..self.m {
            for b in 0..self.m {
                k += &self.blocks[a * self.m + b] * (v[a] * v[b].conj());
            }
        }
        HermMatrix::symmetrize(k)
    }
}

fn max_eigenvalue(m: &HermMatrix) -> f64 {
    *eig_herm(m).values.last().unwrap_or(&0.0)
}

fn min_eigenvalue_or_zero(m: &HermMatrix) -> f64 {
    *eig_herm(m).values.first().unwrap_or(&0.0)
}

/// `lambda_max(M(u))` after rescaling `u` to `H`-unit length.
pub fn rc_objective(
    cp: &CurvaturePoint,
    h: &HermMatrix,
    u: &[Complex64],
) -> Result<f64, PositivityError> {
    if cp.rank != h.dim() || u.len() != h.dim() {
        return Err(PositivityError::DimensionMismatch(
            "section and metric sizes differ".into(),
        ));
    }
    let uv = linalg::CVector::from_column_slice(u);
    let norm = h.quadratic_form(&uv).sqrt();
    let m = cp.base_dim;
    let mm = CMatrix::from_fn(m, m, |j, k| {
        (uv.adjoint() * cp.lowered(h, j, k) * &uv)[(0, 0)] / (norm * norm)
    });
    Ok(max_eigenvalue(&HermMatrix::symmetrize(mm)))
}

/// `lambda_min` of the pencil `(K(v), H)` after rescaling `v` to unit length.
pub fn uniform_rc_objective(
    cp: &CurvaturePoint,
    h: &HermMatrix,
    v: &[Complex64],
) -> Result<f64, PositivityError> {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut k = CMatrix::zeros(cp.rank, cp.rank);
    for a in 0..cp.base_dim {
        for b in 0..cp.base_dim {
            k += cp.lowered(h, a, b) * (v[a] * v[b].conj() / (norm * norm));
        }
    }
    Ok(linalg::pencil_eig(&HermMatrix::symmetrize(k), h)?.values[0])
}

/// RC margin at one point: sphere search over `H`-unit sections.
pub fn rc_margin(
    cp: &CurvaturePoint,
    h: &HermMatrix,
    opts: &SearchOptions,
) -> Result<PositivityVerdict, PositivityError> {
    let red = Reduced::new(cp, h)?;
    if red.m == 0 {
        return Ok(PositivityVerdict::new(
            Notion::Rc,
            &cp.point,
            0.0,
            red.threshold(),
            SearchDiagnostics::exact(),
        ));
    }
    let objective = |x: &[f64]| max_eigenvalue(&red.section_matrix(&complex_from_real(x)));
    let (y, value, diag) = minimize_on_sphere(2 * red.r, objective, opts);
    let y = linalg::CVector::from_vec(complex_from_real(&y));
    let u = (&red.l_inv_adj * y).iter().copied().collect();
    let mut verdict = PositivityVerdict::new(Notion::Rc, &cp.point, value, red.threshold(), diag);
    verdict.witness_u = Some(u);
    Ok(verdict)
}

/// Uniform RC margin at one point: sphere search over unit base directions;
/// exact for a one-dimensional base.
pub fn uniform_rc_margin(
    cp: &CurvaturePoint,
    h: &HermMatrix,
    opts: &SearchOptions,
) -> Result<PositivityVerdict, PositivityError> {
    let red = Reduced::new(cp, h)?;
    let objective = |v: &[Complex64]| min_eigenvalue_or_zero(&red.direction_matrix(v));
    let (v, value, diag) = match red.m {
        0 => (vec![], 0.0, SearchDiagnostics::exact()),
        1 => {
            let v = vec![c(1.0, 0.0)];
            let value = objective(&v);
            (v, value, SearchDiagnostics::exact())
        }
        m => {
            let (x, neg, diag) =
                minimize_on_sphere(2 * m, |x| -objective(&complex_from_real(x)), opts);
            (complex_from_real(&x), -neg, diag)
        }
    };
    let mut verdict =
        PositivityVerdict::new(Notion::UniformRc, &cp.point, value, red.threshold(), diag);
    verdict.witness_v = Some(v);
    Ok(verdict)
}

/// Hessians of a projectivized weight at `(t, z)` for every fiber sample.
fn sample_hessians(
    w: &LineWeight,
    t: &[Complex64],
    samples: &[FiberSample],
) -> Result<Vec<HermMatrix>, PositivityError> {
    if samples.is_empty() {
        return Err(PositivityError::NoFiberSamples);
    }
    if t.len() != w.dims.base {
        return Err(PositivityError::DimensionMismatch(format!(
            "base point has {} coordinates, expected {}",
            t.len(),
            w.dims.base
        )));
    }
    samples
        .iter()
        .map(|s| Ok(w.curvature(s.chart, &total_point(t, &s.z))?.hessian))
        .collect()
}

/// Weak RC check at base point `t`. The bundle rank is `fiber dim + 1`.
pub fn weak_rc_check(
    w: &LineWeight,
    t: &[Complex64],
    samples: &[FiberSample],
) -> Result<PositivityVerdict, PositivityError> {
    let hessians = sample_hessians(w, t, samples)?;
    let (m, r) = (w.dims.base, w.dims.fiber + 1);
    let mut worst = (f64::INFINITY, 0.0, 0);
    for (i, hess) in hessians.iter().enumerate() {
        let tau = REL_THRESHOLD * hess.norm();
        let jet = FibrationJet::from_matrix(hess, m)?;
        let fiber_min = jet.fiber_fiber.min_eigenvalue();
        let ev = eig_herm(hess).values;
        // r-th largest; absent when the total space has fewer than r directions
        let rth = if ev.len() >= r { ev[ev.len() - r] } else { 0.0 };
        let value = fiber_min.min(rth);
        if value - tau < worst.0 - worst.1 {
            worst = (value, tau, i);
        }
    }
    let mut verdict = PositivityVerdict::new(
        Notion::WeakRc,
        t,
        worst.0,
        worst.1,
        SearchDiagnostics::exact(),
    );
    verdict.witness_fiber = Some(samples[worst.2].clone());
    verdict.fiber_samples = samples.len();
    Ok(verdict)
}

/// Uniform weak RC check at base point `t` through the horizontal part of
/// the Hessian. A sample where the fiber block is not positive is reported
/// as an error, since the infimum over lifts is then unbounded.
pub fn uniform_weak_rc_check(
    w: &LineWeight,
    t: &[Complex64],
    samples: &[FiberSample],
    opts: &SearchOptions,
) -> Result<PositivityVerdict, PositivityError> {
    let hessians = sample_hessians(w, t, samples)?;
    let m = w.dims.base;
    let mut gs = Vec::with_capacity(hessians.len());
    let mut scale: f64 = 0.0;
    for (hess, s) in hessians.iter().zip(samples) {
        let jet = FibrationJet::from_matrix(hess, m)?;
        let fiber_min = jet.fiber_fiber.min_eigenvalue();
        if fiber_min <= REL_THRESHOLD * jet.fiber_fiber.norm() {
            return Err(PositivityError::FiberNotPositive {
                chart: s.chart,
                z: s.z.clone(),
                min_eigenvalue: fiber_min,
            });
        }
        let g = split_curvature(&jet)?.g;
        scale = scale.max(g.norm()).max(hess.norm());
        gs.push(g);
    }
    let worst_over_samples = |v: &[Complex64]| -> (f64, usize) {
        let vv = linalg::CVector::from_column_slice(v);
        gs.iter()
            .enumerate()
            .map(|(i, g)| (g.quadratic_form(&vv), i))
            .fold(
                (f64::INFINITY, 0),
                |acc, x| if x.0 < acc.0 { x } else { acc },
            )
    };
    let (v, diag) = match m {
        0 => (vec![], SearchDiagnostics::exact()),
        1 => (vec![c(1.0, 0.0)], SearchDiagnostics::exact()),
        _ => {
            let (x, _, diag) = minimize_on_sphere(
                2 * m,
                |x| -worst_over_samples(&complex_from_real(x)).0,
                opts,
            );
            (complex_from_real(&x), diag)
        }
    };
    let (value, idx) = if m == 0 {
        (0.0, 0)
    } else {
        worst_over_samples(&v)
    };
    let mut verdict =
        PositivityVerdict::new(Notion::UniformWeakRc, t, value, REL_THRESHOLD * scale, diag);
    verdict.witness_v = Some(v);
    verdict.witness_fiber = Some(samples[idx].clone());
    verdict.fiber_samples = samples.len();
    Ok(verdict)
}
