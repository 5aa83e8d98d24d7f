//! Horizontal/vertical decomposition of a weight's complex Hessian on a
//! fibered total space, lifts of base directions, bordered determinants,
//! the top-degree wedge coefficient, and the spectral clamp used to turn a
//! form with `k` positive eigenvalues into a positive reference form.
//!
//! A jet at a point of the total space stores the Hessian blocks
//! `BB = (phi_{i jb})`, `BF = (phi_{i mub})` and `A = (phi_{lambda mub})`;
//! the remaining block is `FB = BF*`. Inverse-matrix index convention:
//! `phi^{lambda mub} = (A^{-1})_{mu lambda}`.

mod wedge;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::HessianPoint;
use crate::linalg::{
    self, c, count_positive, pencil_eig, random, CMatrix, CVector, HermMatrix, LinalgError,
};
use crate::optimize::nelder_mead;

pub use wedge::{wedge_brute_force, wedge_formula, WedgeResult, MAX_BRUTE_FORCE_DIM};

/// Agreement required between the closed-form lift infimum and the
/// numerical minimization.
pub const LIFT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FibrationError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("fiber block is not positive definite (smallest eigenvalue {min_eigenvalue:.3e}); infimum over lifts is -infinity")]
    IndefiniteFiber { min_eigenvalue: f64 },
    #[error("index ({i}, {j}) out of range for base dimension {m}")]
    IndexOutOfRange { i: usize, j: usize, m: usize },
    #[error(
        "closed-form lift infimum {closed:.12e} disagrees with numerical minimum {numerical:.12e}"
    )]
    LiftMismatch { closed: f64, numerical: f64 },
    #[error("hypothesis fails at sample {sample}: {reason}")]
    HypothesisFailure { sample: usize, reason: String },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Second-order data of a weight at one point of the total space.
#[derive(Debug, Clone, PartialEq)]
pub struct FibrationJet {
    pub m: usize,
    pub n: usize,
    pub base_base: HermMatrix,
    pub base_fiber: CMatrix,
    pub fiber_fiber: HermMatrix,
}

impl FibrationJet {
    pub fn new(
        base_base: HermMatrix,
        base_fiber: CMatrix,
        fiber_fiber: HermMatrix,
    ) -> Result<FibrationJet, FibrationError> {
        let (m, n) = (base_base.dim(), fiber_fiber.dim());
        if base_fiber.nrows() != m || base_fiber.ncols() != n {
            return Err(FibrationError::Invalid(format!(
                "base-fiber block is {}x{}, expected {m}x{n}",
                base_fiber.nrows(),
                base_fiber.ncols()
            )));
        }
        Ok(FibrationJet {
            m,
            n,
            base_base,
            base_fiber,
            fiber_fiber,
        })
    }

    /// Splits a full Hessian with `m` leading base coordinates.
    pub fn from_matrix(hessian: &HermMatrix, m: usize) -> Result<FibrationJet, FibrationError> {
        let d = hessian.dim();
        if m > d {
            return Err(FibrationError::Invalid(format!(
                "base dimension {m} exceeds {d}"
            )));
        }
        let h = hessian.matrix();
        let n = d - m;
        FibrationJet::new(
            HermMatrix::symmetrize(h.view((0, 0), (m, m)).into_owned()),
            h.view((0, m), (m, n)).into_owned(),
            HermMatrix::symmetrize(h.view((m, m), (n, n)).into_owned()),
        )
    }

    pub fn from_hessian(h: &HessianPoint) -> Result<FibrationJet, FibrationError> {
        FibrationJet::from_matrix(&h.hessian, h.dims.base)
    }

    /// `FB = BF*`, entries `phi_{lambda jb}`.
    pub fn fiber_base(&self) -> CMatrix {
        self.base_fiber.adjoint()
    }

    /// The assembled `(m+n) x (m+n)` Hessian.
    pub fn hessian(&self) -> HermMatrix {
        let (m, n) = (self.m, self.n);
        let mut h = CMatrix::zeros(m + n, m + n);
        h.view_mut((0, 0), (m, m))
            .copy_from(self.base_base.matrix());
        h.view_mut((0, m), (m, n)).copy_from(&self.base_fiber);
        h.view_mut((m, 0), (n, m)).copy_from(&self.fiber_base());
        h.view_mut((m, m), (n, n))
            .copy_from(self.fiber_fiber.matrix());
        HermMatrix::symmetrize(h)
    }

    /// Random jet with Hermitian base block, arbitrary coupling and a
    /// positive definite fiber block.
    pub fn random<R: Rng>(rng: &mut R, m: usize, n: usize) -> FibrationJet {
        let bb = random::random_herm(rng, m);
        let bb = HermMatrix::symmetrize(bb.matrix().scale(2.0));
        let bf = random::random_matrix(rng, m, n);
        let ff = random::random_pd(rng, n);
        FibrationJet::new(bb, bf, ff).expect("shapes match")
    }

    /// `Theta(v~, conj v~)` for the lift `v~ = (v, a)`:
    /// `v^T BB vb + v^T BF ab + a^T FB vb + a^T A ab`.
    pub fn lift_value(&self, v: &CVector, a: &CVector) -> f64 {
        let x = CVector::from_iterator(self.m + self.n, v.iter().chain(a.iter()).copied());
        (x.transpose() * self.hessian().matrix() * x.map(|z| z.conj()))[(0, 0)].re
    }

    fn fiber_inverse(&self) -> Result<CMatrix, FibrationError> {
        Ok(linalg::inverse(self.fiber_fiber.matrix())?)
    }

    fn require_positive_fiber(&self) -> Result<(), FibrationError> {
        let min = self.fiber_fiber.min_eigenvalue();
        if self.n > 0 && min <= 0.0 {
            return Err(FibrationError::IndefiniteFiber {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }
}

/// Horizontal component `G`, vertical component `V = A` and the lift
/// coefficients: `delta z_lambda = dz_lambda + sum_i lift[lambda][i] dt_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCurvature {
    pub g: HermMatrix,
    pub v: HermMatrix,
    pub lift: CMatrix,
}

impl SplitCurvature {
    /// `Theta_H(xi) + Theta_V(delta z(xi))` for the tangent vector `(v, a)`.
    pub fn pairing(&self, v: &CVector, a: &CVector) -> f64 {
        let horizontal = (v.transpose() * self.g.matrix() * v.map(|z| z.conj()))[(0, 0)].re;
        let dz = a + &self.lift * v;
        let vertical = (dz.transpose() * self.v.matrix() * dz.map(|z| z.conj()))[(0, 0)].re;
        horizontal + vertical
    }
}

/// `G = BB - BF A^{-1} FB`, `V = A`, `lift = (BF A^{-1})^T`.
pub fn split_curvature(jet: &FibrationJet) -> Result<SplitCurvature, FibrationError> {
    let a_inv = jet.fiber_inverse()?;
    let bf_a = &jet.base_fiber * &a_inv;
    let g = jet.base_base.matrix() - &bf_a * jet.fiber_base();
    Ok(SplitCurvature {
        g: HermMatrix::symmetrize(g),
        v: jet.fiber_fiber.clone(),
        lift: bf_a.transpose(),
    })
}

/// Closed-form and numerical infimum of `Theta` over lifts of `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftMinimum {
    pub closed_form: f64,
    pub numerical: f64,
    /// Fiber components of the numerically optimal lift.
    pub minimizer: CVector,
}

/// Returns `v^T G vb`, the infimum of `Theta(v~, conj v~)` over all lifts,
/// after checking it against an independent simplex minimization over the
/// fiber components.
pub fn min_over_lifts(jet: &FibrationJet, v: &CVector) -> Result<LiftMinimum, FibrationError> {
    if v.len() != jet.m {
        return Err(FibrationError::Invalid(format!(
            "tangent vector has length {}, expected {}",
            v.len(),
            jet.m
        )));
    }
    jet.require_positive_fiber()?;
    let split = split_curvature(jet)?;
    let closed_form = (v.transpose() * split.g.matrix() * v.map(|z| z.conj()))[(0, 0)].re;
    let n = jet.n;
    let to_vec = |x: &[f64]| CVector::from_fn(n, |i, _| c(x[2 * i], x[2 * i + 1]));
    let objective = |x: &[f64]| jet.lift_value(v, &to_vec(x));
    let scale = jet.hessian().norm().max(1e-300);
    let mut x = vec![0.0; 2 * n];
    let mut value = objective(&x);
    let mut step = 1.0;
    for _ in 0..6 {
        let found = nelder_mead(objective, &x, step, 4000, 1e-13);
        x = found.x;
        value = found.value;
        step = 0.1 * step.max(1e-4);
    }
    if (value - closed_form).abs() > LIFT_TOL * scale.max(closed_form.abs()) {
        return Err(FibrationError::LiftMismatch {
            closed: closed_form,
            numerical: value,
        });
    }
    Ok(LiftMinimum {
        closed_form,
        numerical: value,
        minimizer: to_vec(&x),
    })
}

/// Both sides of the completing-the-square identity for the lift `(v, a)`:
/// `Theta(v~) - v^T G vb` and `|A^{-1/2} phi_v + A^{1/2} ab|^2` with
/// `phi_v = FB vb`.
pub fn square_norm_identity(
    jet: &FibrationJet,
    v: &CVector,
    a: &CVector,
) -> Result<(f64, f64), FibrationError> {
    jet.require_positive_fiber()?;
    let split = split_curvature(jet)?;
    let g = (v.transpose() * split.g.matrix() * v.map(|z| z.conj()))[(0, 0)].re;
    let lhs = jet.lift_value(v, a) - g;
    let sqrt_a = linalg::sqrt_psd(&jet.fiber_fiber)?;
    let inv_sqrt_a = linalg::inverse(sqrt_a.matrix())?;
    let phi_v = jet.fiber_base() * v.map(|z| z.conj());
    let w = inv_sqrt_a * phi_v + sqrt_a.matrix() * a.map(|z| z.conj());
    Ok((lhs, w.norm_squared()))
}

/// Determinant of the bordered matrix with corner `phi_{i jb}`, top border
/// `phi_{i mub}`, left border `phi_{lambda jb}` and block `A`.
pub fn bordered_det(jet: &FibrationJet, i: usize, j: usize) -> Result<Complex64, FibrationError> {
    if i >= jet.m || j >= jet.m {
        return Err(FibrationError::IndexOutOfRange { i, j, m: jet.m });
    }
    Ok(linalg::det(&bordered_matrix(jet, i, j)))
}

fn bordered_matrix(jet: &FibrationJet, i: usize, j: usize) -> CMatrix {
    let n = jet.n;
    let fb = jet.fiber_base();
    let mut m = CMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = jet.base_base.matrix()[(i, j)];
    for l in 0..n {
        m[(0, l + 1)] = jet.base_fiber[(i, l)];
        m[(l + 1, 0)] = fb[(l, j)];
    }
    m.view_mut((1, 1), (n, n))
        .copy_from(jet.fiber_fiber.matrix());
    m
}

/// Matrix of all bordered determinants `D_{ij} = det M(i jb)`.
pub fn bordered_dets(jet: &FibrationJet) -> CMatrix {
    CMatrix::from_fn(jet.m, jet.m, |i, j| {
        linalg::det(&bordered_matrix(jet, i, j))
    })
}

/// Smooth spectral clamp: identity on `[a_inf, inf)`, constant `b_sup/eps`
/// on `(-inf, 0]`, and a `C^infinity` blend in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothClamp {
    pub a_inf: f64,
    pub b_sup: f64,
    pub eps: f64,
}

fn bump(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// The standard smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    let (p, q) = (bump(x), bump(1.0 - x));
    p / (p + q)
}

impl SmoothClamp {
    pub fn new(a_inf: f64, b_sup: f64, eps: f64) -> Result<SmoothClamp, FibrationError> {
        if !(a_inf > 0.0 && b_sup > 0.0 && eps > 0.0) {
            return Err(FibrationError::Invalid(format!(
                "clamp needs positive thresholds (a_inf {a_inf}, b_sup {b_sup}, eps {eps})"
            )));
        }
        Ok(SmoothClamp { a_inf, b_sup, eps })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s = smooth_step(x / self.a_inf);
        s * x + (1.0 - s) * (self.b_sup / self.eps)
    }

    /// Checks the four defining properties on a uniform grid of `points`
    /// over `[-a_inf, 2 a_inf]`; returns the first violation.
    pub fn validate(&self, points: usize) -> Result<(), FibrationError> {
        let lo = -self.a_inf;
        let hi = 2.0 * self.a_inf.max(self.b_sup);
        let cap = self.b_sup / self.eps;
        for i in 0..points {
            let x = lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64;
            let y = self.eval(x);
            let bad = |what: &str| {
                Err(FibrationError::Invalid(format!(
                    "clamp violates {what} at x = {x}: {y}"
                )))
            };
            if y <= 0.0 {
                return bad("positivity");
            }
            if x >= self.a_inf && y != x {
                return bad("identity above a_inf");
            }
            if x <= 0.0 && y != cap {
                return bad("constant below zero");
            }
            if (0.0..=self.a_inf).contains(&x) && y < x {
                return bad("psi(x) >= x");
            }
        }
        Ok(())
    }
}

/// Builds the clamp from per-sample eigenvalue lists (ascending, length
/// `m`): `a_inf` is the smallest `(m-k+1)`-th eigenvalue, `b_sup` the
/// largest absolute eigenvalue and `eps = 1/(m-k+1)`.
pub fn psi_epsilon_build(gammas: &[Vec<f64>], k: usize) -> Result<SmoothClamp, FibrationError> {
    let m = gammas
        .first()
        .map(Vec::len)
        .ok_or_else(|| FibrationError::Invalid("no samples".into()))?;
    if k == 0 || k > m {
        return Err(FibrationError::Invalid(format!("k = {k} outside 1..={m}")));
    }
    let idx = m - k;
    let mut a_inf = f64::INFINITY;
    let mut b_sup: f64 = 0.0;
    for (s, g) in gammas.iter().enumerate() {
        if g.len() != m {
            return Err(FibrationError::Invalid(format!(
                "sample {s} has {} eigenvalues, expected {m}",
                g.len()
            )));
        }
        if g[idx] <= 0.0 {
            return Err(FibrationError::HypothesisFailure {
                sample: s,
                reason: format!(
                    "eigenvalue {} of {m} is {:.6e}, fewer than {k} positive",
                    idx + 1,
                    g[idx]
                ),
            });
        }
        a_inf = a_inf.min(g[idx]);
        b_sup = g.iter().fold(b_sup, |acc, x| acc.max(x.abs()));
    }
    let clamp = SmoothClamp::new(a_inf, b_sup, 1.0 / (m - k + 1) as f64)?;
    clamp.validate(1000)?;
    Ok(clamp)
}

/// With the pencil decomposition `G W = beta0 W diag(gamma)`, `W* beta0 W = I`,
/// returns `beta = W^{-*} diag(psi(gamma)) W^{-1}`, so that the pencil
/// `(G, beta)` has eigenvalues `gamma / psi(gamma)`.
pub fn apply_spectral(
    g: &HermMatrix,
    beta0: &HermMatrix,
    psi: &SmoothClamp,
) -> Result<HermMatrix, FibrationError> {
    let eig = pencil_eig(g, beta0)?;
    let w_inv = linalg::inverse(&eig.vectors)?;
    let d = g.dim();
    let diag = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c(psi.eval(eig.values[i]), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(HermMatrix::symmetrize(w_inv.adjoint() * diag * w_inv))
}

/// Result of the eigenvalue-count / reference-form check over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClampConditionsReport {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    /// Every sample has at least `n + k` positive Hessian eigenvalues.
    pub condition_a: bool,
    /// Every sample has at least `k` positive eigenvalues of `G`.
    pub condition_b: bool,
    pub clamp: SmoothClamp,
    /// Smallest sum of `m-k+1` pencil eigenvalues of `(G, beta)` over samples.
    pub min_partial_sum: f64,
    /// `min_partial_sum - eps`; nonnegative when the constructed form
    /// attains the guaranteed bound.
    pub condition_c_margin: f64,
    pub condition_c: bool,
    /// For `k = 1`: whether the sign of the top wedge coefficient agrees
    /// with positivity of the trace of `G` against `beta` at every sample.
    pub wedge_sign_agrees: Option<bool>,
    /// Largest relative deviation of `beta` between samples over the same
    /// base point; zero would mean `beta` is constant along fibers.
    pub fiber_variation: f64,
}

/// Relative slack for the partial-sum bound.
pub const PARTIAL_SUM_TOL: f64 = 1e-9;

/// Checks the three equivalent eigenvalue conditions on samples
/// `(base point id, jet)`, constructing the reference form `beta` from
/// `beta0` (identity when `None`).
pub fn clamp_conditions_check(
    samples: &[(usize, FibrationJet)],
    k: usize,
    beta0: Option<&HermMatrix>,
) -> Result<ClampConditionsReport, FibrationError> {
    let Some((_, first)) = samples.first() else {
        return Err(FibrationError::Invalid("no samples".into()));
    };
    let (m, n) = (first.m, first.n);
    let identity = HermMatrix::identity(m);
    let beta0 = beta0.unwrap_or(&identity);
    let mut splits = Vec::with_capacity(samples.len());
    let mut gammas = Vec::with_capacity(samples.len());
    let mut condition_a = true;
    let mut condition_b = true;
    for (s, (_, jet)) in samples.iter().enumerate() {
        if jet.m != m || jet.n != n {
            return Err(FibrationError::Invalid(format!(
                "sample {s} has different dimensions"
            )));
        }
        jet.require_positive_fiber()
            .map_err(|e| FibrationError::HypothesisFailure {
                sample: s,
                reason: e.to_string(),
            })?;
        let hess = jet.hessian();
        let full = linalg::eig_herm(&hess).values;
        condition_a &= count_positive(&full, hess.norm()).count >= n + k;
        let split = split_curvature(jet)?;
        let gamma = pencil_eig(&split.g, beta0)?.values;
        condition_b &= count_positive(&gamma, split.g.norm()).count >= k;
        gammas.push(gamma);
        splits.push(split);
    }
    let clamp = psi_epsilon_build(&gammas, k)?;
    let mut min_partial_sum = f64::INFINITY;
    let mut wedge_ok = true;
    let mut betas = Vec::with_capacity(samples.len());
    for ((_, jet), split) in samples.iter().zip(&splits) {
        let beta = apply_spectral(&split.g, beta0, &clamp)?;
        let ev = pencil_eig(&split.g, &beta)?.values;
        let sum: f64 = ev[..m - k + 1].iter().sum();
        min_partial_sum = min_partial_sum.min(sum);
        if k == 1 {
            let coeff = wedge_formula(jet, &beta)?.formula;
            let trace: f64 = ev.iter().sum();
            wedge_ok &= (coeff > 0.0) == (trace > 0.0);
        }
        betas.push(beta);
    }
    let mut fiber_variation: f64 = 0.0;
    for (i, (bi, _)) in samples.iter().enumerate() {
        if let Some(j) = samples.iter().position(|(b, _)| b == bi) {
            let d = (betas[i].matrix() - betas[j].matrix()).norm() / betas[j].norm().max(1e-300);
            fiber_variation = fiber_variation.max(d);
        }
    }
    let condition_c_margin = min_partial_sum - clamp.eps;
    Ok(ClampConditionsReport {
        m,
        n,
        k,
        samples: samples.len(),
        condition_a,
        condition_b,
        clamp,
        min_partial_sum,
        condition_c_margin,
        condition_c: min_partial_sum >= clamp.eps * (1.0 - PARTIAL_SUM_TOL),
        wedge_sign_agrees: (k == 1).then_some(wedge_ok),
        fiber_variation,
    })
}

/// Both sides of the rearrangement of the fiber-integrand bracket, with
/// `b1[lambda] = (-1)^(n-lambda+1) u_{z_lambda t_1}` (1-based `lambda`).
///
/// The left side is the bracket expanded term by term in the mixed
/// derivatives `u_{z_lambda t_1}`; the right side is
/// `|u_z|^2 (phi11 - phi1* A^{-1} phi1) + |A^{-1/2} phi1 conj(u_z) + A^{1/2} conj(b1)|^2`.
pub fn bracket_identity(
    a: &HermMatrix,
    phi1: &CVector,
    u_z: Complex64,
    b1: &CVector,
    phi11: f64,
) -> Result<(f64, f64), FibrationError> {
    let n = a.dim();
    if phi1.len() != n || b1.len() != n {
        return Err(FibrationError::Invalid(
            "vector lengths must match the matrix".into(),
        ));
    }
    if a.min_eigenvalue() <= 0.0 {
        return Err(FibrationError::IndefiniteFiber {
            min_eigenvalue: a.min_eigenvalue(),
        });
    }
    let sign = |lambda: usize| {
        if (n - lambda + 1).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    };
    let u: Vec<Complex64> = (0..n).map(|l| b1[l] * sign(l + 1)).collect();
    let am = a.matrix();
    let mut lhs = c(u_z.norm_sqr() * phi11, 0.0);
    for l in 0..n {
        let s = sign(l + 1);
        lhs += u_z * u[l].conj() * phi1[l].conj() * s;
        lhs += u_z.conj() * u[l] * phi1[l] * s;
        for mu in 0..n {
            let s2 = if (l + mu) % 2 == 0 { 1.0 } else { -1.0 };
            lhs += u[l] * u[mu].conj() * am[(l, mu)] * s2;
        }
    }
    let a_inv = linalg::inverse(am)?;
    let schur = phi11 - (phi1.adjoint() * &a_inv * phi1)[(0, 0)].re;
    let sqrt_a = linalg::sqrt_psd(a)?;
    let inv_sqrt_a = linalg::inverse(sqrt_a.matrix())?;
    let w = inv_sqrt_a * phi1 * u_z.conj() + sqrt_a.matrix() * b1.map(|z| z.conj());
    let rhs = u_z.norm_sqr() * schur + w.norm_squared();
    Ok((lhs.re, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn block_diagonal_jet_has_trivial_lift() {
        let mut r = rng(1);
        let mut jet = FibrationJet::random(&mut r, 2, 2);
        jet.base_fiber = CMatrix::zeros(2, 2);
        let s = split_curvature(&jet).unwrap();
        assert_eq!(&s.g, &jet.base_base);
        assert!(s.lift.norm() == 0.0);
    }

    #[test]
    fn scalar_schur_case() {
        let jet = FibrationJet::new(
            HermMatrix::from_real_diagonal(&[3.0]),
            CMatrix::from_element(1, 1, c(1.0, 1.0)),
            HermMatrix::from_real_diagonal(&[4.0]),
        )
        .unwrap();
        let g = split_curvature(&jet).unwrap().g;
        assert!((g.matrix()[(0, 0)].re - (3.0 - 2.0 / 4.0)).abs() < 1e-15);
        let d = bordered_det(&jet, 0, 0).unwrap();
        assert!((d - c(3.0 * 4.0 - 2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn decomposition_reconstructs_pairing() {
        let mut r = rng(2);
        for _ in 0..100 {
            let (m, n) = (r.gen_range(1..=3), r.gen_range(1..=3));
            let jet = FibrationJet::random(&mut r, m, n);
            let s = split_curvature(&jet).unwrap();
            let v = random::random_matrix(&mut r, m, 1).column(0).into_owned();
            let a = random::random_matrix(&mut r, n, 1).column(0).into_owned();
            let direct = jet.lift_value(&v, &a);
            assert!((s.pairing(&v, &a) - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn lift_minimum_with_zero_coupling() {
        let mut r = rng(3);
        let mut jet = FibrationJet::random(&mut r, 1, 2);
        jet.base_fiber = CMatrix::zeros(1, 2);
        let v = CVector::from_element(1, c(1.0, 0.0));
        let lm = min_over_lifts(&jet, &v).unwrap();
        assert_eq!(lm.closed_form, jet.base_base.matrix()[(0, 0)].re);
        assert!(lm.minimizer.norm() < 1e-5);
    }

    #[test]
    fn indefinite_fiber_is_reported() {
        let jet = FibrationJet::new(
            HermMatrix::from_real_diagonal(&[1.0]),
            CMatrix::zeros(1, 1),
            HermMatrix::from_real_diagonal(&[-1.0]),
        )
        .unwrap();
        let v = CVector::from_element(1, c(1.0, 0.0));
        assert!(matches!(
            min_over_lifts(&jet, &v),
            Err(FibrationError::IndefiniteFiber { .. })
        ));
    }

    #[test]
    fn clamp_fixed_points() {
        let clamp = SmoothClamp::new(0.5, 3.0, 0.5).unwrap();
        assert_eq!(clamp.eval(0.5), 0.5);
        assert_eq!(clamp.eval(-1.0), 6.0);
        assert!(clamp.eval(0.25) >= 0.25);
        clamp.validate(1000).unwrap();
    }

    #[test]
    fn spectral_map_on_large_eigenvalues_gives_unit_pencil() {
        let mut r = rng(4);
        let beta0 = random::random_pd(&mut r, 3);
        let g = HermMatrix::symmetrize(beta0.matrix().scale(2.0));
        let clamp = SmoothClamp::new(1.0, 2.0, 1.0).unwrap();
        let beta = apply_spectral(&g, &beta0, &clamp).unwrap();
        for x in pencil_eig(&g, &beta).unwrap().values {
            assert!((x - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn negative_eigenvalues_map_into_minus_eps() {
        let g = HermMatrix::from_real_diagonal(&[-2.0, 0.5, 3.0]);
        let clamp = psi_epsilon_build(&[vec![-2.0, 0.5, 3.0]], 2).unwrap();
        let beta = apply_spectral(&g, &HermMatrix::identity(3), &clamp).unwrap();
        let ev = pencil_eig(&g, &beta).unwrap().values;
        assert!(ev[0] >= -clamp.eps - 1e-12 && ev[0] <= 0.0);
    }

    #[test]
    fn negative_definite_sample_is_named() {
        let good = FibrationJet::random(&mut rng(5), 2, 1);
        let mut bad = good.clone();
        bad.base_base = HermMatrix::from_real_diagonal(&[-50.0, -60.0]);
        let err = clamp_conditions_check(&[(0, good), (1, bad)], 1, None).unwrap_err();
        assert!(matches!(
            err,
            FibrationError::HypothesisFailure { sample: 1, .. }
        ));
    }

    #[test]
    fn identity_degenerate_cases() {
        let a = HermMatrix::from_real_diagonal(&[2.0, 3.0]);
        let b1 = CVector::from_vec(vec![c(0.5, 0.1), c(-0.3, 0.2)]);
        let (l, r) = bracket_identity(&a, &CVector::zeros(2), c(1.0, 1.0), &b1, 1.5).unwrap();
        assert!((l - r).abs() < 1e-12);
        let (l, r) = bracket_identity(&a, &b1, c(0.0, 0.0), &b1, 1.5).unwrap();
        let pure = (b1.transpose() * a.matrix() * b1.map(|z| z.conj()))[(0, 0)].re;
        assert!((l - pure).abs() < 1e-12 && (r - pure).abs() < 1e-12);
    }
}
