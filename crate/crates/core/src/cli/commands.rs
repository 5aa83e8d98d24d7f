//! The five commands. Each returns per-check records and a summary whose
//! values are derived from those records.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{Record, RunConfig, RunError};
use crate::directimage::{verify_positivity_transfer, FibrationModel, TransferOptions};
use crate::fibration::{
    bordered_dets, bracket_identity, clamp_conditions_check, min_over_lifts, split_curvature,
    square_norm_identity, wedge_formula, FibrationError, FibrationJet,
};
use crate::geometry::{
    example_catalog, fiber_samples, projectivized_weight, total_point, CatalogObject, FiberSample,
    HermitianField, CATALOG,
};
use crate::linalg::{self, c, random, CVector};
use crate::positivity::{
    rc_margin, uniform_rc_margin, uniform_weak_rc_check, weak_rc_check, PositivityVerdict,
};
use crate::sampling;

type Output = (Vec<Record>, BTreeMap<String, Value>);

fn load_field(cfg: &RunConfig) -> Result<HermitianField, RunError> {
    let mut params = cfg.example.params.clone();
    params.k = None;
    match example_catalog(&cfg.example.name, &params)
        .map_err(|e| RunError::computation("example", e))?
    {
        CatalogObject::Field(f) => Ok(f),
        CatalogObject::Weight(w) => {
            HermitianField::from_line_weight(&w).map_err(|e| RunError::computation("example", e))
        }
        CatalogObject::Model(m) => Ok(m.field),
    }
}

/// Explicit points, or the origin followed by seeded points in the unit
/// polydisc of the first chart.
fn base_points(cfg: &RunConfig, m: usize) -> Result<Vec<Vec<Complex64>>, RunError> {
    if !cfg.points.is_empty() {
        if let Some(bad) = cfg.points.iter().find(|p| p.len() != m) {
            return Err(RunError::Schema(format!(
                "point {bad:?} does not have {m} coordinates"
            )));
        }
        return Ok(cfg.points.clone());
    }
    let mut pts = vec![vec![c(0.0, 0.0); m]];
    pts.extend(sampling::polydisc(
        m,
        cfg.point_count.saturating_sub(1),
        1.0,
        cfg.seed,
    ));
    Ok(pts)
}

fn fiber_set(cfg: &RunConfig, rank: usize) -> Vec<FiberSample> {
    let per_chart = if rank == 1 { 1 } else { cfg.fiber_samples };
    fiber_samples(rank - 1, rank, per_chart, cfg.seed)
}

fn verdict_record(check: &str, index: usize, v: &PositivityVerdict) -> Record {
    Record {
        check: check.into(),
        index,
        point: v.point.clone(),
        notion: Some(v.notion.as_str().into()),
        value: v.value,
        margin: v.margin,
        positive: v.positive,
        details: serde_json::to_value(v).expect("verdict serializes"),
    }
}

fn min_margin(records: &[Record], pred: impl Fn(&Record) -> bool) -> Value {
    let sel: Vec<&Record> = records.iter().filter(|r| pred(r)).collect();
    if sel.is_empty() {
        return Value::Null;
    }
    let min = sel.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    json!({ "min_margin": min, "all_positive": sel.iter().all(|r| r.positive), "count": sel.len() })
}

pub(super) fn classify(cfg: &RunConfig) -> Result<Output, RunError> {
    let field = load_field(cfg)?;
    let points = base_points(cfg, field.base_dim)?;
    let weight =
        projectivized_weight(&field, 0).map_err(|e| RunError::computation("classify", e))?;
    let samples = fiber_set(cfg, field.rank);
    let search = crate::optimize::SearchOptions {
        seed: cfg.seed,
        ..cfg.search.clone()
    };
    let mut records = Vec::new();
    for (i, t) in points.iter().enumerate() {
        let err =
            |e: &dyn std::fmt::Display| RunError::computation("classify", format!("at {t:?}: {e}"));
        let cp = field.curvature(0, t).map_err(|e| err(&e))?;
        let h = field.metric_at(0, t).map_err(|e| err(&e))?;
        records.push(verdict_record(
            "classify",
            i,
            &rc_margin(&cp, &h, &search).map_err(|e| err(&e))?,
        ));
        records.push(verdict_record(
            "classify",
            i,
            &uniform_rc_margin(&cp, &h, &search).map_err(|e| err(&e))?,
        ));
        records.push(verdict_record(
            "classify",
            i,
            &weak_rc_check(&weight, t, &samples).map_err(|e| err(&e))?,
        ));
        records.push(verdict_record(
            "classify",
            i,
            &uniform_weak_rc_check(&weight, t, &samples, &search).map_err(|e| err(&e))?,
        ));
    }
    let mut summary = BTreeMap::new();
    for notion in ["rc", "uniform-rc", "weak-rc", "uniform-weak-rc"] {
        summary.insert(
            notion.to_string(),
            min_margin(&records, |r| r.notion.as_deref() == Some(notion)),
        );
    }
    summary.insert("fiber_samples".into(), json!(samples.len()));
    Ok((records, summary))
}

pub(super) fn fibration_check(cfg: &RunConfig) -> Result<Output, RunError> {
    let field = load_field(cfg)?;
    if field.rank < 2 {
        return Err(RunError::Schema(
            "fibration-check needs a bundle of rank >= 2".into(),
        ));
    }
    let m = field.base_dim;
    let k = cfg.k.unwrap_or(1);
    if k > m {
        return Err(RunError::Schema(format!(
            "k = {k} exceeds the base dimension {m}"
        )));
    }
    let points = base_points(cfg, m)?;
    let weight =
        projectivized_weight(&field, 0).map_err(|e| RunError::computation("fibration-check", e))?;
    let samples = fiber_set(cfg, field.rank);
    let mut records = Vec::new();
    let mut jets = Vec::new();
    for (i, t) in points.iter().enumerate() {
        let err = |check: &str, e: &dyn std::fmt::Display| {
            RunError::computation(check, format!("at {t:?}: {e}"))
        };
        let mut min_g = f64::INFINITY;
        let mut lift_err: f64 = 0.0;
        let mut square_err: f64 = 0.0;
        for (s, sample) in samples.iter().enumerate() {
            let hess = weight
                .curvature(sample.chart, &total_point(t, &sample.z))
                .map_err(|e| err("split", &e))?;
            let jet = FibrationJet::from_hessian(&hess).map_err(|e| err("split", &e))?;
            let g = split_curvature(&jet).map_err(|e| err("split", &e))?.g;
            min_g = min_g.min(g.min_eigenvalue());
            if s < 4 {
                let mut v = CVector::zeros(m);
                v[0] = c(1.0, 0.0);
                match min_over_lifts(&jet, &v) {
                    Ok(lm) => lift_err = lift_err.max((lm.closed_form - lm.numerical).abs()),
                    Err(FibrationError::LiftMismatch { closed, numerical }) => {
                        lift_err = lift_err.max((closed - numerical).abs())
                    }
                    Err(e) => return Err(err("lift", &e)),
                }
                let a = CVector::from_element(jet.n, c(0.3, -0.2));
                let (lhs, rhs) = square_norm_identity(&jet, &v, &a).map_err(|e| err("lift", &e))?;
                square_err = square_err.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
            }
            jets.push((i, jet));
        }
        records.push(Record {
            check: "horizontal-curvature".into(),
            index: i,
            point: t.clone(),
            notion: None,
            value: min_g,
            margin: min_g,
            positive: min_g > 0.0,
            details: json!({ "fiber_samples": samples.len() }),
        });
        let lift_ok = lift_err <= crate::fibration::LIFT_TOL && square_err <= cfg.tol.max(1e-10);
        records.push(Record {
            check: "lift-minimum".into(),
            index: i,
            point: t.clone(),
            notion: None,
            value: lift_err,
            margin: crate::fibration::LIFT_TOL - lift_err,
            positive: lift_ok,
            details: json!({ "closed_vs_numerical": lift_err, "square_norm_identity": square_err }),
        });
    }
    let mut summary = BTreeMap::new();
    summary.insert(
        "horizontal_curvature".into(),
        min_margin(&records, |r| r.check == "horizontal-curvature"),
    );
    summary.insert(
        "lift_checks_pass".into(),
        json!(records
            .iter()
            .filter(|r| r.check == "lift-minimum")
            .all(|r| r.positive)),
    );
    match clamp_conditions_check(&jets, k, None) {
        Ok(rep) => {
            records.push(Record {
                check: "eigenvalue-conditions".into(),
                index: 0,
                point: vec![],
                notion: None,
                value: rep.min_partial_sum,
                margin: rep.condition_c_margin,
                positive: rep.condition_c,
                details: serde_json::to_value(&rep).expect("report serializes"),
            });
            summary.insert(
                "eigenvalue_conditions".into(),
                json!({ "a": rep.condition_a, "b": rep.condition_b, "c": rep.condition_c, "k": k,
                        "fiber_variation": rep.fiber_variation }),
            );
        }
        Err(FibrationError::HypothesisFailure { sample, reason }) => {
            let (base, _) = &jets[sample];
            records.push(Record {
                check: "eigenvalue-conditions".into(),
                index: 0,
                point: points[*base].clone(),
                notion: None,
                value: 0.0,
                margin: 0.0,
                positive: false,
                details: json!({ "hypothesis_failure": { "sample": sample, "reason": reason } }),
            });
            summary.insert(
                "eigenvalue_conditions".into(),
                json!({ "hypothesis_failure": sample, "k": k }),
            );
        }
        Err(e) => return Err(RunError::computation("eigenvalue-conditions", e)),
    }
    Ok((records, summary))
}

fn identity_record(check: &str, index: usize, error: f64, tol: f64, details: Value) -> Record {
    Record {
        check: check.into(),
        index,
        point: vec![],
        notion: None,
        value: error,
        margin: tol - error,
        positive: error <= tol,
        details,
    }
}

fn random_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    random::random_matrix(rng, n, 1).column(0).into_owned()
}

pub(super) fn identities(cfg: &RunConfig) -> Result<Output, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tol = cfg.tol;
    let mut records = Vec::new();
    fn fail(check: &'static str) -> impl Fn(FibrationError) -> RunError {
        move |e| RunError::computation(check, e)
    }
    for i in 0..cfg.trials {
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let jet = FibrationJet::random(&mut rng, m, n);
        let g = split_curvature(&jet).map_err(fail("schur"))?.g;
        let det_a = linalg::det(jet.fiber_fiber.matrix());
        let ratio = bordered_dets(&jet) / det_a;
        let err = (&ratio - g.matrix()).norm() / g.norm().max(1e-300);
        records.push(identity_record(
            "schur",
            i,
            err,
            tol,
            json!({ "m": m, "n": n }),
        ));
    }
    for i in 0..cfg.trials {
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let jet = FibrationJet::random(&mut rng, m, n);
        let v = random_vector(&mut rng, m);
        let a = random_vector(&mut rng, n);
        let (lhs, rhs) = square_norm_identity(&jet, &v, &a).map_err(fail("square-norm"))?;
        let err = (lhs - rhs).abs() / rhs.abs().max(1.0);
        records.push(identity_record(
            "square-norm",
            i,
            err,
            tol,
            json!({ "m": m, "n": n, "lhs": lhs, "rhs": rhs }),
        ));
    }
    let dims = [(1, 1), (2, 1), (1, 2), (2, 2)];
    let per_dim = cfg.trials.div_ceil(2).div_ceil(dims.len()).max(1);
    let mut idx = 0;
    for &(m, n) in &dims {
        for _ in 0..per_dim {
            let jet = FibrationJet::random(&mut rng, m, n);
            let beta = random::random_pd(&mut rng, m);
            let w = wedge_formula(&jet, &beta).map_err(fail("wedge"))?;
            let bf = w.brute_force.unwrap_or(f64::NAN);
            let err = (w.formula - bf).abs() / w.formula.abs().max(1.0);
            records.push(identity_record(
                "wedge",
                idx,
                err,
                tol,
                json!({ "m": m, "n": n, "formula": w.formula, "brute_force": bf }),
            ));
            idx += 1;
        }
    }
    for i in 0..cfg.trials {
        let n = rng.gen_range(1..=3);
        let a = random::random_pd(&mut rng, n);
        let phi1 = random_vector(&mut rng, n);
        let b1 = random_vector(&mut rng, n);
        let u_z = random::random_complex(&mut rng);
        let phi11: f64 = rng.gen_range(-2.0..2.0);
        let (lhs, rhs) = bracket_identity(&a, &phi1, u_z, &b1, phi11).map_err(fail("bracket"))?;
        let err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
        records.push(identity_record(
            "bracket-rearrangement",
            i,
            err,
            tol,
            json!({ "n": n, "lhs": lhs, "rhs": rhs }),
        ));
    }
    let mut summary = BTreeMap::new();
    for check in ["schur", "square-norm", "wedge", "bracket-rearrangement"] {
        let sel: Vec<&Record> = records.iter().filter(|r| r.check == check).collect();
        let max_err = sel.iter().map(|r| r.value).fold(0.0, f64::max);
        summary.insert(
            check.to_string(),
            json!({ "max_error": max_err, "all_pass": sel.iter().all(|r| r.positive), "count": sel.len() }),
        );
    }
    Ok((records, summary))
}

pub(super) fn direct_image(cfg: &RunConfig) -> Result<Output, RunError> {
    let probe = load_field(cfg)?;
    if probe.rank != 2 {
        return Err(RunError::Schema(format!(
            "direct-image supports rank 2 only (example has rank {})",
            probe.rank
        )));
    }
    let points = base_points(cfg, probe.base_dim)?;
    let opts = TransferOptions {
        search: crate::optimize::SearchOptions {
            seed: cfg.seed,
            ..cfg.search.clone()
        },
        quadrature: cfg.quadrature.clone(),
        fd: cfg.fd.clone(),
        fiber_samples: cfg.fiber_samples,
    };
    let mut records = Vec::new();
    let mut per_k = Vec::new();
    for k in cfg.sweep() {
        let model = FibrationModel::with_twist(load_field(cfg)?, k, cfg.twist)
            .map_err(|e| RunError::computation("direct-image", e))?;
        let mut all_positive = true;
        for (i, t) in points.iter().enumerate() {
            let rep = verify_positivity_transfer(&model, t, &opts).map_err(|e| {
                RunError::computation("direct-image", format!("k = {k} at {t:?}: {e}"))
            })?;
            all_positive &= rep.conclusion.positive;
            records.push(Record {
                check: format!("direct-image-k{k}"),
                index: i,
                point: t.clone(),
                notion: Some("uniform-rc".into()),
                value: rep.conclusion.value,
                margin: rep.conclusion.margin,
                positive: rep.conclusion.positive,
                details: serde_json::to_value(&rep).expect("report serializes"),
            });
        }
        per_k.push((k, all_positive));
    }
    let violations = records
        .iter()
        .filter(|r| r.details["implication_holds"] == json!(false))
        .count();
    let established = records
        .iter()
        .filter(|r| r.details["implication_holds"].is_boolean())
        .count();
    let min_hyp = records
        .iter()
        .map(|r| {
            r.details["hypothesis"]["margin"]
                .as_f64()
                .unwrap_or(f64::NAN)
        })
        .fold(f64::INFINITY, f64::min);
    let mut summary = BTreeMap::new();
    summary.insert("conclusion".into(), min_margin(&records, |_| true));
    summary.insert("hypothesis_min_margin".into(), json!(min_hyp));
    summary.insert("implication_cases".into(), json!(established));
    summary.insert("implication_violations".into(), json!(violations));
    summary.insert(
        "smallest_k_all_positive".into(),
        json!(per_k.iter().find(|(_, ok)| *ok).map(|(k, _)| *k)),
    );
    Ok((records, summary))
}

pub(super) fn examples() -> Output {
    let records = CATALOG
        .iter()
        .enumerate()
        .map(|(i, (name, description))| Record {
            check: name.to_string(),
            index: i,
            point: vec![],
            notion: None,
            value: 0.0,
            margin: 0.0,
            positive: true,
            details: json!({ "description": description }),
        })
        .collect::<Vec<_>>();
    let mut summary = BTreeMap::new();
    summary.insert("examples".into(), json!(records.len()));
    (records, summary)
}
