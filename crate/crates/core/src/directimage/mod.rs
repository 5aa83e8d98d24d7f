//! The `L^2` metric on the direct image `V = S^k E (x) det E` for the
//! projectivized rank-2 bundle `P(E*) -> X`, its curvature by finite
//! differences, and the pointwise check that positivity of the fibered
//! weight carries over to uniform RC-positivity of `V`.
//!
//! With `L = O(2+k)` and the fiber coordinate `w` on the chart `zeta = (1, w)`,
//! the fiber sections of `L (x) K_fiber` are `w^a dw`, `a = 0..=k`, and the
//! Gram matrix is
//! `Gram_{ab}(t) = integral conj(w^a) w^b (zeta^T H(t)^{-1} conj(zeta))^{-(2+k)} dx dy`.
//! The integral is split at `|w| = 1`; on the other chart `w' = 1/w` the
//! same sections read `w'^{k-a}` up to a sign that cancels in the pairing.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fibration::FibrationJet;
use crate::geometry::{
    fiber_samples, projectivized_weight, CurvaturePoint, GeometryError, HermitianField, LineWeight,
};
use crate::linalg::{self, c, CMatrix, HermMatrix, LinalgError, REL_THRESHOLD};
use crate::optimize::SearchOptions;
use crate::positivity::{
    uniform_rc_margin, uniform_rc_objective, uniform_weak_rc_check, PositivityError,
    PositivityVerdict,
};

#[derive(Debug, Error)]
pub enum DirectImageError {
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("fiber integral diverges: section degree {degree} against weight degree {weight}")]
    Divergent { degree: usize, weight: usize },
    #[error("quadrature did not converge (relative change {error:.3e} above {tol:.1e})")]
    QuadratureNotConverged { error: f64, tol: f64 },
    #[error("finite-difference residual {residual:.3e} above {tol:.1e}; step too large or quadrature noise")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("Gram matrix is not positive definite at {t:?}")]
    GramNotPositive { t: Vec<Complex64> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Positivity(#[from] PositivityError),
}

/// Which direct image the Gram matrix measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Twist {
    /// `S^k E (x) det E`, from `L = O(2+k)`.
    #[default]
    WithDet,
    /// `S^k E`, from `L = O(k) (x) K^{-1}` with the `K^{-1}` metric induced
    /// by `H`; the Gram matrix is divided by `det H(t)`.
    Plain,
}

/// Projectivized rank-2 bundle with twist `k` and its fibered weight.
#[derive(Debug)]
pub struct FibrationModel {
    pub field: HermitianField,
    pub k: usize,
    pub base_chart: usize,
    pub twist: Twist,
    /// `(2+k)` times the induced weight, over both fiber charts.
    pub weight: LineWeight,
}

impl FibrationModel {
    pub fn new(field: HermitianField, k: usize) -> Result<FibrationModel, DirectImageError> {
        FibrationModel::with_twist(field, k, Twist::WithDet)
    }

    pub fn with_twist(
        field: HermitianField,
        k: usize,
        twist: Twist,
    ) -> Result<FibrationModel, DirectImageError> {
        if field.rank != 2 {
            return Err(DirectImageError::Unsupported(format!(
                "rank {} (only rank 2 is supported)",
                field.rank
            )));
        }
        let base_chart = 0;
        let weight = projectivized_weight(&field, base_chart)?.scaled((field.rank + k) as f64);
        let model = FibrationModel {
            field,
            k,
            base_chart,
            twist,
            weight,
        };
        model.convergence_check()?;
        Ok(model)
    }

    pub fn rank(&self) -> usize {
        self.field.rank
    }

    pub fn base_dim(&self) -> usize {
        self.field.base_dim
    }

    /// `dim V_t = k + 1`.
    pub fn sections(&self) -> usize {
        self.k + 1
    }

    /// Degree check at `w -> infinity`: `|w^a|^2 |w|^{-2(2+k)}` must decay
    /// faster than `|w|^{-2}` for every section, i.e. `2(2+k) - 2a >= 4`.
    pub fn convergence_check(&self) -> Result<usize, DirectImageError> {
        let weight = 2 * (self.rank() + self.k);
        let degree = 2 * self.k;
        if weight < degree + 4 {
            return Err(DirectImageError::Divergent { degree, weight });
        }
        Ok(weight - degree - 2)
    }
}

/// Quadrature parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureOptions {
    /// Gauss-Legendre nodes per polar direction and chart.
    pub nodes: usize,
    /// Largest accepted relative change between `nodes` and `nodes/2`.
    pub tol: f64,
    /// Also integrate over the whole plane by `rho = tan(sigma)` as an
    /// independent check of the two-chart split.
    pub substitution_check: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            nodes: 64,
            tol: 1e-6,
            substitution_check: true,
        }
    }
}

/// The `L^2` metric on `V_t` in the basis `w^a dw`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramMetric {
    pub t: Vec<Complex64>,
    pub matrix: HermMatrix,
    pub nodes: usize,
    /// Relative change against the rule with half the nodes.
    pub estimated_error: f64,
    /// Relative difference to the single-chart substitution integral.
    pub substitution_error: Option<f64>,
}

fn gl_rule(nodes: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes.max(1)).expect("nonzero"));
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    rule.nodes()
        .zip(rule.weights())
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

fn relative_change(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Numerical evaluation of the fiber pairing for a fixed `H(t)`.
struct FiberIntegrand {
    /// `H^{-1}`.
    h_inv: CMatrix,
    power: i32,
    k: usize,
}

impl FiberIntegrand {
    /// `zeta^T H^{-1} conj(zeta)`.
    fn q(&self, zeta: [Complex64; 2]) -> f64 {
        let mut acc = c(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                acc += zeta[a] * self.h_inv[(a, b)] * zeta[b].conj();
            }
        }
        acc.re
    }

    fn accumulate(&self, out: &mut CMatrix, sections: impl Fn(usize) -> Complex64, density: f64) {
        let d = self.k + 1;
        let vals: Vec<Complex64> = (0..d).map(sections).collect();
        for a in 0..d {
            for b in 0..d {
                out[(a, b)] += vals[a].conj() * vals[b] * density;
            }
        }
    }

    /// Two unit discs in polar tensor quadrature.
    fn two_chart(&self, nodes: usize) -> CMatrix {
        let d = self.k + 1;
        let mut g = CMatrix::zeros(d, d);
        let radial = gl_rule(nodes, 0.0, 1.0);
        let angular = gl_rule(nodes, 0.0, 2.0 * std::f64::consts::PI);
        for &(rho, wr) in &radial {
            for &(theta, wt) in &angular {
                let w = Complex64::from_polar(rho, theta);
                let dens = wr * wt * rho;
                let q0 = self.q([c(1.0, 0.0), w]);
                self.accumulate(&mut g, |a| w.powi(a as i32), dens * q0.powi(-self.power));
                let q1 = self.q([w, c(1.0, 0.0)]);
                self.accumulate(
                    &mut g,
                    |a| w.powi((self.k - a) as i32),
                    dens * q1.powi(-self.power),
                );
            }
        }
        g
    }

    /// One chart over the whole plane, `rho = tan(sigma)`.
    fn substitution(&self, nodes: usize) -> CMatrix {
        let d = self.k + 1;
        let mut g = CMatrix::zeros(d, d);
        let radial = gl_rule(2 * nodes, 0.0, std::f64::consts::FRAC_PI_2);
        let angular = gl_rule(nodes, 0.0, 2.0 * std::f64::consts::PI);
        for &(sigma, ws) in &radial {
            let rho = sigma.tan();
            let jac = 1.0 / sigma.cos().powi(2);
            for &(theta, wt) in &angular {
                let w = Complex64::from_polar(rho, theta);
                let q0 = self.q([c(1.0, 0.0), w]);
                self.accumulate(
                    &mut g,
                    |a| w.powi(a as i32),
                    ws * wt * rho * jac * q0.powi(-self.power),
                );
            }
        }
        g
    }
}

/// Gram matrix at base point `t` (base chart of the model).
pub fn gram_at(
    model: &FibrationModel,
    t: &[Complex64],
    quad: &QuadratureOptions,
) -> Result<GramMetric, DirectImageError> {
    model.convergence_check()?;
    let h = model.field.metric_matrix(model.base_chart, t)?;
    let integrand = FiberIntegrand {
        h_inv: linalg::inverse(&h)?,
        power: (model.rank() + model.k) as i32,
        k: model.k,
    };
    let scale = match model.twist {
        Twist::WithDet => 1.0,
        Twist::Plain => 1.0 / linalg::det(&h).re,
    };
    let fine = integrand.two_chart(quad.nodes) * c(scale, 0.0);
    let coarse = integrand.two_chart((quad.nodes / 2).max(1)) * c(scale, 0.0);
    let estimated_error = relative_change(&coarse, &fine);
    if estimated_error > quad.tol {
        return Err(DirectImageError::QuadratureNotConverged {
            error: estimated_error,
            tol: quad.tol,
        });
    }
    let substitution_error = quad
        .substitution_check
        .then(|| relative_change(&(integrand.substitution(quad.nodes) * c(scale, 0.0)), &fine));
    let matrix = HermMatrix::with_tolerance(fine, 1e-9)?;
    if matrix.min_eigenvalue() <= 0.0 {
        return Err(DirectImageError::GramNotPositive { t: t.to_vec() });
    }
    Ok(GramMetric {
        t: t.to_vec(),
        matrix,
        nodes: quad.nodes,
        estimated_error,
        substitution_error,
    })
}

/// Finite-difference parameters for the curvature of the Gram metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdOptions {
    /// Initial step `h0`; Richardson extrapolation uses `h0` and `h0/2`.
    pub step: f64,
    /// Largest accepted extrapolation residual relative to the curvature scale.
    pub tol: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            step: 1e-3,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureV {
    /// `Theta^V_{jkb}` as `(k+1) x (k+1)` endomorphisms.
    #[serde(skip)]
    pub curvature: CurvaturePoint,
    pub gram: GramMetric,
    pub step: f64,
    /// Difference between the extrapolated and the finer estimate,
    /// relative to the curvature scale; the noise floor of the result.
    pub residual: f64,
}

/// Derivatives of the Gram matrix at `t0` from a central stencil of step
/// `h` over the `2m` real coordinates.
struct GramDerivatives {
    holo: Vec<CMatrix>,
    anti: Vec<CMatrix>,
    mixed: Vec<CMatrix>,
}

fn gram_derivatives(
    model: &FibrationModel,
    t0: &[Complex64],
    h: f64,
    quad: &QuadratureOptions,
) -> Result<GramDerivatives, DirectImageError> {
    let m = model.base_dim();
    let quad = QuadratureOptions {
        substitution_check: false,
        ..quad.clone()
    };
    let mut cache: BTreeMap<Vec<i8>, CMatrix> = BTreeMap::new();
    let mut value = |offset: &[i8]| -> Result<CMatrix, DirectImageError> {
        if let Some(v) = cache.get(offset) {
            return Ok(v.clone());
        }
        let t: Vec<Complex64> = (0..m)
            .map(|j| t0[j] + c(offset[2 * j] as f64 * h, offset[2 * j + 1] as f64 * h))
            .collect();
        let g = gram_at(model, &t, &quad)?.matrix.into_matrix();
        cache.insert(offset.to_vec(), g.clone());
        Ok(g)
    };
    let n = 2 * m;
    let unit = |pairs: &[(usize, i8)]| {
        let mut o = vec![0i8; n];
        for &(i, s) in pairs {
            o[i] += s;
        }
        o
    };
    let center = value(&unit(&[]))?;
    // real first derivatives
    let mut first = Vec::with_capacity(n);
    for i in 0..n {
        let d = (value(&unit(&[(i, 1)]))? - value(&unit(&[(i, -1)]))?) / c(2.0 * h, 0.0);
        first.push(d);
    }
    // real second derivatives
    let mut second = vec![CMatrix::zeros(0, 0); n * n];
    for i in 0..n {
        for j in i..n {
            let d = if i == j {
                (value(&unit(&[(i, 1)]))? - &center * c(2.0, 0.0) + value(&unit(&[(i, -1)]))?)
                    / c(h * h, 0.0)
            } else {
                (value(&unit(&[(i, 1), (j, 1)]))?
                    - value(&unit(&[(i, 1), (j, -1)]))?
                    - value(&unit(&[(i, -1), (j, 1)]))?
                    + value(&unit(&[(i, -1), (j, -1)]))?)
                    / c(4.0 * h * h, 0.0)
            };
            second[i * n + j] = d.clone();
            second[j * n + i] = d;
        }
    }
    let half = c(0.5, 0.0);
    let i_unit = c(0.0, 1.0);
    let holo = (0..m)
        .map(|j| (&first[2 * j] - &first[2 * j + 1] * i_unit) * half)
        .collect();
    let anti = (0..m)
        .map(|j| (&first[2 * j] + &first[2 * j + 1] * i_unit) * half)
        .collect();
    let mut mixed = Vec::with_capacity(m * m);
    for j in 0..m {
        for k in 0..m {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            let d = (&second[xj * n + xk]
                + &second[yj * n + yk]
                + (&second[xj * n + yk] - &second[yj * n + xk]) * i_unit)
                * c(0.25, 0.0);
            mixed.push(d);
        }
    }
    Ok(GramDerivatives { holo, anti, mixed })
}

fn curvature_from_derivatives(
    g: &CMatrix,
    d: &GramDerivatives,
    m: usize,
) -> Result<Vec<CMatrix>, DirectImageError> {
    let g_inv = linalg::inverse(g)?;
    let mut theta = Vec::with_capacity(m * m);
    for j in 0..m {
        let a = &g_inv * &d.holo[j];
        for k in 0..m {
            theta.push(&a * &g_inv * &d.anti[k] - &g_inv * &d.mixed[j * m + k]);
        }
    }
    Ok(theta)
}

/// Chern curvature of the Gram metric at `t0`, by central differences with
/// Richardson extrapolation between `h0` and `h0/2`.
pub fn curvature_v(
    model: &FibrationModel,
    t0: &[Complex64],
    quad: &QuadratureOptions,
    fd: &FdOptions,
) -> Result<CurvatureV, DirectImageError> {
    let m = model.base_dim();
    let gram = gram_at(model, t0, quad)?;
    let g = gram.matrix.matrix();
    let coarse = curvature_from_derivatives(g, &gram_derivatives(model, t0, fd.step, quad)?, m)?;
    let fine =
        curvature_from_derivatives(g, &gram_derivatives(model, t0, fd.step / 2.0, quad)?, m)?;
    let mut theta = Vec::with_capacity(m * m);
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (a, b) in coarse.iter().zip(&fine) {
        let r = (b * c(4.0, 0.0) - a) / c(3.0, 0.0);
        diff = diff.max((&r - b).norm());
        scale = scale.max(r.norm());
        theta.push(r);
    }
    let residual = diff / scale.max(1.0);
    if residual > fd.tol {
        return Err(DirectImageError::ResidualTooLarge {
            residual,
            tol: fd.tol,
        });
    }
    let curvature = CurvaturePoint::new(t0.to_vec(), m, model.sections(), theta);
    Ok(CurvatureV {
        curvature,
        gram,
        step: fd.step,
        residual,
    })
}

/// Parameters for the hypothesis/conclusion comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferOptions {
    pub search: SearchOptions,
    pub quadrature: QuadratureOptions,
    pub fd: FdOptions,
    /// Fiber samples per fiber chart.
    pub fiber_samples: usize,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            search: SearchOptions::default(),
            quadrature: QuadratureOptions::default(),
            fd: FdOptions::default(),
            fiber_samples: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub t: Vec<Complex64>,
    pub k: usize,
    pub twist: Twist,
    /// Smallest fiber-block eigenvalue of the `(2+k)` weight over samples,
    /// minus the positivity threshold.
    pub fiber_margin: f64,
    /// Uniform weak RC verdict of the `(2+k)` weight.
    pub hypothesis: PositivityVerdict,
    /// Uniform RC verdict of `(V, Gram)`.
    pub conclusion: PositivityVerdict,
    /// `lambda_min` of the pencil `(K(v), Gram)` at the hypothesis witness.
    pub conclusion_at_hypothesis_direction: f64,
    /// Numerical noise floor of the conclusion (finite-difference residual
    /// times the curvature scale, plus quadrature error).
    pub noise_floor: f64,
    pub hypothesis_holds: bool,
    /// `Some(conclusion positive)` when both hypothesis margins exceed ten
    /// times the noise floor; `None` when the hypothesis is not established.
    pub implication_holds: Option<bool>,
    pub gram: GramMetric,
    pub fd_residual: f64,
}

/// Compares positivity of the fibered weight at `t0` with uniform RC
/// positivity of the direct image at `t0`.
pub fn verify_positivity_transfer(
    model: &FibrationModel,
    t0: &[Complex64],
    opts: &TransferOptions,
) -> Result<TransferReport, DirectImageError> {
    let samples = fiber_samples(
        model.rank() - 1,
        model.rank(),
        opts.fiber_samples,
        opts.search.seed,
    );
    let m = model.base_dim();
    let mut fiber_margin = f64::INFINITY;
    for s in &samples {
        let hess = model
            .weight
            .curvature(s.chart, &crate::geometry::total_point(t0, &s.z))?
            .hessian;
        let jet = FibrationJet::from_matrix(&hess, m).map_err(PositivityError::from)?;
        let tau = REL_THRESHOLD * hess.norm();
        fiber_margin = fiber_margin.min(jet.fiber_fiber.min_eigenvalue() - tau);
    }
    let hypothesis = uniform_weak_rc_check(&model.weight, t0, &samples, &opts.search)?;
    let cv = curvature_v(model, t0, &opts.quadrature, &opts.fd)?;
    let conclusion = uniform_rc_margin(&cv.curvature, &cv.gram.matrix, &opts.search)?;
    let hyp_v = hypothesis.witness_v.clone().unwrap_or_default();
    let conclusion_at_hypothesis_direction = if hyp_v.is_empty() {
        0.0
    } else {
        uniform_rc_objective(&cv.curvature, &cv.gram.matrix, &hyp_v)?
    };
    let curvature_scale = cv
        .curvature
        .theta
        .iter()
        .map(|t| t.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let noise_floor = cv.residual * curvature_scale + cv.gram.estimated_error;
    let hypothesis_holds = fiber_margin > 0.0 && hypothesis.positive;
    let established = fiber_margin > 10.0 * noise_floor && hypothesis.margin > 10.0 * noise_floor;
    Ok(TransferReport {
        t: t0.to_vec(),
        k: model.k,
        twist: model.twist,
        fiber_margin,
        implication_holds: established.then_some(conclusion.positive),
        hypothesis,
        conclusion,
        conclusion_at_hypothesis_direction,
        noise_floor,
        hypothesis_holds,
        gram: cv.gram,
        fd_residual: cv.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{example_catalog, CatalogObject, CatalogParams};
    use std::f64::consts::PI;

    fn model(name: &str, a: Option<Vec<i32>>, k: usize) -> FibrationModel {
        let params = CatalogParams {
            a,
            k: Some(k),
            r: Some(2),
            ..Default::default()
        };
        match example_catalog(name, &params).unwrap() {
            CatalogObject::Model(m) => *m,
            other => panic!("unexpected {}", other.kind()),
        }
    }

    #[test]
    fn trivial_bundle_gram_values() {
        let q = QuadratureOptions::default();
        let g0 = gram_at(&model("split", Some(vec![0, 0]), 0), &[c(0.3, 0.2)], &q).unwrap();
        assert!((g0.matrix.matrix()[(0, 0)].re - PI).abs() < 1e-10);
        let g1 = gram_at(&model("split", Some(vec![0, 0]), 1), &[c(0.0, 0.0)], &q).unwrap();
        let gm = g1.matrix.matrix();
        assert!((gm[(0, 0)].re - PI / 2.0).abs() < 1e-10);
        assert!((gm[(1, 1)].re - PI / 2.0).abs() < 1e-10);
        assert!(gm[(0, 1)].norm() < 1e-12);
        assert!(g1.substitution_error.unwrap() < 1e-8);
    }

    #[test]
    fn split_line_sum_curvature() {
        let mdl = model("split", Some(vec![1, 2]), 0);
        let cv = curvature_v(
            &mdl,
            &[c(0.0, 0.0)],
            &QuadratureOptions::default(),
            &FdOptions::default(),
        )
        .unwrap();
        assert!((cv.curvature.theta(0, 0)[(0, 0)].re - 3.0).abs() < 1e-3);
    }

    #[test]
    fn flat_family_has_zero_curvature() {
        let mdl = model("flat", None, 1);
        let cv = curvature_v(
            &mdl,
            &[c(0.2, 0.1)],
            &QuadratureOptions::default(),
            &FdOptions::default(),
        )
        .unwrap();
        assert!(cv.curvature.theta(0, 0).norm() < 1e-8);
    }

    #[test]
    fn plain_twist_divides_by_determinant() {
        let params = CatalogParams {
            a: Some(vec![1, 2]),
            ..Default::default()
        };
        let CatalogObject::Field(f) = example_catalog("split", &params).unwrap() else {
            panic!()
        };
        let plain = FibrationModel::with_twist(f, 0, Twist::Plain).unwrap();
        let g = gram_at(&plain, &[c(0.5, 0.0)], &QuadratureOptions::default()).unwrap();
        assert!((g.matrix.matrix()[(0, 0)].re - PI).abs() < 1e-9);
    }

    #[test]
    fn rank_three_is_unsupported() {
        let params = CatalogParams {
            a: Some(vec![1, 1, 1]),
            ..Default::default()
        };
        let CatalogObject::Field(f) = example_catalog("split", &params).unwrap() else {
            panic!()
        };
        assert!(matches!(
            FibrationModel::new(f, 0),
            Err(DirectImageError::Unsupported(_))
        ));
    }
}
