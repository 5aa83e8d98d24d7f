//! Built-in examples over the projective line and a flat torus chart.
//!
//! The projective line uses the charts `U0` (coordinate `t1`) and `U1`
//! (coordinate `s = 1/t`, also written `t1` inside its chart).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    Chart, CoordinateMap, Domain, FrameTransition, GeometryError, HermitianField, LineWeight,
    WeightTransition, DEFAULT_VALIDATION_SAMPLES,
};
use crate::directimage::FibrationModel;
use crate::expr::{Dims, MetricExpr, Var};
use crate::linalg::c;

/// Catalog entries with a one-line description each.
pub const CATALOG: &[(&str, &str)] = &[
    ("fubini-study-line", "line weight twist*log(1+|t|^2) on O(twist) over the projective line; params: twist"),
    ("split", "direct sum of O(a_i) over the projective line with diagonal Fubini-Study powers; params: a"),
    (
        "perturbed-split",
        "split metric plus a seeded polynomial Hermitian perturbation of size eps; params: a, eps, seed",
    ),
    ("flat", "identity metric on the trivial rank-r bundle over an m-dimensional torus chart; params: r, m"),
];

/// Parameters for catalog entries. Unused fields are ignored by entries
/// that do not take them. Setting `k` on a rank-2 bundle entry returns the
/// fibration model used for direct images of `S^k E (x) det E`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug)]
pub enum CatalogObject {
    Field(HermitianField),
    Weight(LineWeight),
    Model(Box<FibrationModel>),
}

impl CatalogObject {
    pub fn kind(&self) -> &'static str {
        match self {
            CatalogObject::Field(_) => "hermitian-field",
            CatalogObject::Weight(_) => "line-weight",
            CatalogObject::Model(_) => "fibration-model",
        }
    }
}

/// Builds and validates a catalog entry.
pub fn example_catalog(name: &str, params: &CatalogParams) -> Result<CatalogObject, GeometryError> {
    let invalid = |reason: &str| GeometryError::InvalidParameters {
        name: name.to_string(),
        reason: reason.to_string(),
    };
    let seed = params.seed.unwrap_or(0);
    let field = match name {
        "fubini-study-line" => {
            let w = fubini_study_line(params.twist.unwrap_or(1));
            w.validate(DEFAULT_VALIDATION_SAMPLES, seed)?;
            if params.k.is_some() {
                return Err(invalid("`k` needs a bundle of rank 2"));
            }
            return Ok(CatalogObject::Weight(w));
        }
        "split" => {
            let a = params.a.clone().unwrap_or_else(|| vec![1, 2]);
            if a.is_empty() {
                return Err(invalid("`a` must be non-empty"));
            }
            split(&a)
        }
        "perturbed-split" => {
            let a = params.a.clone().unwrap_or_else(|| vec![1, 2]);
            if a.is_empty() {
                return Err(invalid("`a` must be non-empty"));
            }
            let eps = params.eps.unwrap_or(0.1);
            if !eps.is_finite() {
                return Err(invalid("`eps` must be finite"));
            }
            perturbed_split(&a, eps, seed)
        }
        "flat" => {
            let r = params.r.unwrap_or(2);
            let m = params.m.unwrap_or(1);
            if r == 0 || m == 0 {
                return Err(invalid("`r` and `m` must be positive"));
            }
            flat(r, m)
        }
        _ => return Err(GeometryError::UnknownExample(name.to_string())),
    };
    field
        .validate(DEFAULT_VALIDATION_SAMPLES, seed)
        .map_err(|e| match e {
            GeometryError::NotPositiveDefinite { .. } => {
                invalid(&format!("metric fails validation: {e}"))
            }
            other => other,
        })?;
    match params.k {
        None => Ok(CatalogObject::Field(field)),
        Some(k) => {
            if field.rank != 2 {
                return Err(invalid("`k` needs a bundle of rank 2"));
            }
            let model = FibrationModel::new(field, k).map_err(|e| invalid(&e.to_string()))?;
            Ok(CatalogObject::Model(Box::new(model)))
        }
    }
}

fn t() -> MetricExpr {
    MetricExpr::var(Var::t(1))
}

fn tb() -> MetricExpr {
    MetricExpr::var(Var::tb(1))
}

/// `1 + t1*tb1`.
fn fs_base() -> MetricExpr {
    MetricExpr::one().add(&t().mul(&tb()))
}

fn projective_charts() -> (Chart, Chart) {
    (
        Chart::new("U0", Domain::Plane),
        Chart::new("U1", Domain::Plane),
    )
}

/// Chart-0 coordinate `t = 1/s` expressed in chart 1.
fn inversion() -> CoordinateMap {
    CoordinateMap::new(0, 1, vec![MetricExpr::pow(t(), -1)])
}

fn fubini_study_line(twist: i32) -> LineWeight {
    let (u0, u1) = projective_charts();
    let phi = MetricExpr::log(fs_base()).scale(c(twist as f64, 0.0));
    let g = MetricExpr::pow(t(), twist);
    LineWeight::new(
        Dims::new(1, 0),
        vec![(u0, phi.clone()), (u1, phi)],
        vec![WeightTransition {
            coords: inversion(),
            g,
        }],
    )
    .expect("catalog weight is well formed")
}

fn diagonal(entries: Vec<MetricExpr>) -> Vec<MetricExpr> {
    let r = entries.len();
    let mut out = vec![MetricExpr::zero(); r * r];
    for (i, e) in entries.into_iter().enumerate() {
        out[i * r + i] = e;
    }
    out
}

/// Frame change `diag(s^{-a_i})` shared by all split-type metrics.
fn split_transition(a: &[i32]) -> FrameTransition {
    FrameTransition {
        coords: inversion(),
        frame: diagonal(a.iter().map(|&ai| MetricExpr::pow(t(), -ai)).collect()),
    }
}

fn split(a: &[i32]) -> HermitianField {
    let (u0, u1) = projective_charts();
    let h = diagonal(
        a.iter()
            .map(|&ai| MetricExpr::pow(fs_base(), -ai))
            .collect(),
    );
    HermitianField::new(
        a.len(),
        1,
        vec![(u0, h.clone()), (u1, h)],
        vec![split_transition(a)],
    )
    .expect("catalog field is well formed")
}

/// Split metric plus a global Hermitian perturbation. Off-diagonal entries
/// `eps*c*tb^p*t^q*(1+|t|^2)^{-d}` with `d = max(a_i+p, a_j+q)` and
/// diagonal factors `1 + eps*r_i*|t|^2/(1+|t|^2)` are chosen so that the
/// chart-1 expressions are again polynomial over a power of `1+|s|^2`.
fn perturbed_split(a: &[i32], eps: f64, seed: u64) -> HermitianField {
    let r = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h0 = vec![MetricExpr::zero(); r * r];
    let mut h1 = vec![MetricExpr::zero(); r * r];
    let fs = fs_base();
    let abs2 = t().mul(&tb());
    for i in 0..r {
        let ri: f64 = rng.gen_range(-1.0..1.0);
        let base = MetricExpr::pow(fs.clone(), -a[i]);
        let bump0 = abs2.div(&fs).scale(c(eps * ri, 0.0));
        let bump1 = MetricExpr::pow(fs.clone(), -1).scale(c(eps * ri, 0.0));
        h0[i * r + i] = base.mul(&MetricExpr::one().add(&bump0));
        h1[i * r + i] = base.mul(&MetricExpr::one().add(&bump1));
    }
    for i in 0..r {
        for j in i + 1..r {
            let coeff: Complex64 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * eps;
            let p: i32 = rng.gen_range(0..=1);
            let q: i32 = rng.gen_range(0..=1);
            let d = (a[i] + p).max(a[j] + q);
            let damp = MetricExpr::pow(fs.clone(), -d);
            let e0 = MetricExpr::product([
                MetricExpr::pow(tb(), p),
                MetricExpr::pow(t(), q),
                damp.clone(),
            ])
            .scale(coeff);
            let e1 = MetricExpr::product([
                MetricExpr::pow(tb(), d - a[i] - p),
                MetricExpr::pow(t(), d - a[j] - q),
                damp,
            ])
            .scale(coeff);
            h0[j * r + i] = e0.conjugate();
            h0[i * r + j] = e0;
            h1[j * r + i] = e1.conjugate();
            h1[i * r + j] = e1;
        }
    }
    let (u0, u1) = projective_charts();
    HermitianField::new(r, 1, vec![(u0, h0), (u1, h1)], vec![split_transition(a)])
        .expect("catalog field is well formed")
}

fn flat(r: usize, m: usize) -> HermitianField {
    let h = diagonal(vec![MetricExpr::one(); r]);
    HermitianField::new(r, m, vec![(Chart::new("torus", Domain::Torus), h)], vec![])
        .expect("catalog field is well formed")
}
