//! Deterministic quasi-random point sets.
//!
//! Uses the additive recurrence with the generalized golden ratio (the
//! `R_d` sequence), offset by a seeded random shift.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` points in `[0,1)^dim`.
pub fn unit_cube(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if dim == 0 {
        return vec![Vec::new(); count];
    }
    // root of x^(d+1) = x + 1
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|i| (1.0 / phi).powi(i as i32)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (0..count)
        .map(|n| {
            (0..dim)
                .map(|i| (shift[i] + (n as f64 + 1.0) * alpha[i]).fract())
                .collect()
        })
        .collect()
}

/// `count` points in the polydisc `|w_i| <= radius`, `dim` complex coordinates.
pub fn polydisc(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<Complex64>> {
    unit_cube(2 * dim, count, seed)
        .into_iter()
        .map(|u| {
            (0..dim)
                .map(|i| Complex64::from_polar(radius * u[2 * i].sqrt(), 2.0 * PI * u[2 * i + 1]))
                .collect()
        })
        .collect()
}

/// `count` quasi-uniform points on the unit sphere of `R^dim`.
pub fn sphere(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let pairs = dim.div_ceil(2);
    unit_cube(2 * pairs, count, seed)
        .into_iter()
        .map(|u| {
            let mut g = Vec::with_capacity(2 * pairs);
            for p in 0..pairs {
                let r = (-2.0 * (1.0 - u[2 * p]).ln()).sqrt();
                let th = 2.0 * PI * u[2 * p + 1];
                g.push(r * th.cos());
                g.push(r * th.sin());
            }
            g.truncate(dim);
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                let mut e = vec![0.0; dim];
                e[0] = 1.0;
                e
            } else {
                g.into_iter().map(|x| x / norm).collect()
            }
        })
        .collect()
}
