//! Top-degree coefficient of `Theta^{n+1} ^ beta^{m-1}` on a total space
//! of dimension `m + n`, by the closed formula and by direct expansion in
//! the exterior algebra.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::{bordered_dets, FibrationError, FibrationJet};
use crate::linalg::{self, c, HermMatrix};

/// Largest `m + n` for which the exterior-algebra expansion is run.
pub const MAX_BRUTE_FORCE_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WedgeResult {
    /// `(n+1)! (m-1)! tr(beta^{-1} D) det(beta)` with `D_{ij} = det M(i jb)`.
    pub formula: f64,
    /// Direct expansion, `None` when `m + n` exceeds the brute-force limit.
    pub brute_force: Option<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Both evaluations of the top coefficient, measured against the volume
/// form `prod_a (i dx_a ^ dxb_a)`. Requires `m >= 1` and `beta > 0`.
pub fn wedge_formula(jet: &FibrationJet, beta: &HermMatrix) -> Result<WedgeResult, FibrationError> {
    let (m, n) = (jet.m, jet.n);
    if m == 0 || beta.dim() != m {
        return Err(FibrationError::Invalid(format!(
            "beta must be {m}x{m} with m >= 1"
        )));
    }
    let min = beta.min_eigenvalue();
    if min <= 0.0 {
        return Err(FibrationError::Linalg(
            linalg::LinalgError::NotPositiveDefinite {
                min_eigenvalue: min,
            },
        ));
    }
    let d = bordered_dets(jet);
    let beta_inv = linalg::inverse(beta.matrix())?;
    let trace = (beta_inv * d).trace();
    let formula = (factorial(n + 1) * factorial(m - 1) * trace * linalg::det(beta.matrix())).re;
    let brute_force = (m + n <= MAX_BRUTE_FORCE_DIM).then(|| wedge_brute_force(jet, beta));
    Ok(WedgeResult {
        formula,
        brute_force,
    })
}

/// Forms as maps from generator bitmasks to coefficients. Generator `2a` is
/// `dx_a`, generator `2a+1` is `dxb_a`.
type Form = BTreeMap<u32, Complex64>;

fn wedge(p: &Form, q: &Form) -> Form {
    let mut out = Form::new();
    for (&a, &x) in p {
        for (&b, &y) in q {
            if a & b != 0 {
                continue;
            }
            // sign of moving every generator of b past the higher generators of a
            let mut swaps = 0;
            let mut rest = b;
            while rest != 0 {
                let j = rest.trailing_zeros();
                swaps += (a >> (j + 1)).count_ones();
                rest &= rest - 1;
            }
            let coeff = if swaps % 2 == 0 { x * y } else { -(x * y) };
            *out.entry(a | b).or_insert(c(0.0, 0.0)) += coeff;
        }
    }
    out
}

/// The (1,1)-form `i sum h_{ab} dx_a ^ dxb_b` for coordinates `offset..`.
fn one_one_form(h: &linalg::CMatrix, offset: usize) -> Form {
    let mut f = Form::new();
    let i = c(0.0, 1.0);
    for a in 0..h.nrows() {
        for b in 0..h.ncols() {
            let (ga, gb) = (2 * (a + offset), 2 * (b + offset) + 1);
            let sign = if ga < gb { 1.0 } else { -1.0 };
            *f.entry((1 << ga) | (1 << gb)).or_insert(c(0.0, 0.0)) += i * h[(a, b)] * sign;
        }
    }
    f
}

fn power(f: &Form, k: usize) -> Form {
    let mut out = Form::from([(0, c(1.0, 0.0))]);
    for _ in 0..k {
        out = wedge(&out, f);
    }
    out
}

/// Direct expansion of `Theta^{n+1} ^ beta^{m-1}` in the exterior algebra
/// on `2(m+n)` generators.
pub fn wedge_brute_force(jet: &FibrationJet, beta: &HermMatrix) -> f64 {
    let (m, n) = (jet.m, jet.n);
    let total = m + n;
    let theta = one_one_form(jet.hessian().matrix(), 0);
    let beta_form = one_one_form(beta.matrix(), 0);
    let top = wedge(&power(&theta, n + 1), &power(&beta_form, m - 1));
    let mask = if total == 16 {
        u32::MAX
    } else {
        (1u32 << (2 * total)) - 1
    };
    let coeff = top.get(&mask).copied().unwrap_or(c(0.0, 0.0));
    // prod_a (i dx_a ^ dxb_a) in the canonical generator order carries i^total
    let volume = c(0.0, 1.0).powi(total as i32);
    (coeff / volume).re
}
