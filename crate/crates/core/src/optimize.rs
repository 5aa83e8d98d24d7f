//! Derivative-free minimization: Nelder-Mead simplex search and a
//! grid-plus-refinement search over real unit spheres.

use serde::Serialize;

use crate::sampling;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead with standard coefficients, started from a right-angled
/// simplex of edge `step` at `x0`. Stops after `max_iter` iterations or when
/// the simplex diameter and value spread both fall below `tol`.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> Minimum {
    let n = x0.len();
    if n == 0 {
        return Minimum {
            x: vec![],
            value: f(&[]),
            iterations: 0,
            converged: true,
        };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < tol && spread.abs() <= tol.max(1e-15 * simplex[0].1.abs()) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = combine(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (target, ft) = if fr < worst.1 {
                (reflected, fr)
            } else {
                (worst.0.clone(), worst.1)
            };
            let contracted = combine(&centroid, &target, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = combine(&best, &entry.0, 0.5);
                    let v = f(&x);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}

/// Grid and refinement parameters for sphere searches.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchOptions {
    /// Quasi-random grid points on the sphere.
    pub grid: usize,
    /// Simplex iterations per refinement start.
    pub iterations: usize,
    /// Simplex shrink tolerance.
    pub tol: f64,
    /// Number of best grid points refined.
    pub starts: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid: 4096,
            iterations: 200,
            tol: 1e-10,
            starts: 4,
            seed: 0,
        }
    }
}

/// Outcome of a sphere search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchDiagnostics {
    pub grid_size: usize,
    pub refine_iterations: usize,
    pub converged: bool,
}

impl SearchDiagnostics {
    pub fn exact() -> SearchDiagnostics {
        SearchDiagnostics {
            grid_size: 0,
            refine_iterations: 0,
            converged: true,
        }
    }
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        let mut e = vec![0.0; x.len()];
        e[0] = 1.0;
        e
    } else {
        x.iter().map(|v| v / n).collect()
    }
}

/// Minimizes `f` over the unit sphere of `R^dim`: evaluates a quasi-random
/// grid, then refines the best `starts` grid points by simplex search on the
/// scale-invariant extension `x -> f(x/|x|)`. Returns a unit minimizer.
pub fn minimize_on_sphere(
    dim: usize,
    f: impl Fn(&[f64]) -> f64,
    opts: &SearchOptions,
) -> (Vec<f64>, f64, SearchDiagnostics) {
    let grid = sampling::sphere(dim, opts.grid.max(1), opts.seed);
    let mut scored: Vec<(f64, usize)> = grid.iter().enumerate().map(|(i, x)| (f(x), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best = (grid[scored[0].1].clone(), scored[0].0);
    let mut diag = SearchDiagnostics {
        grid_size: grid.len(),
        refine_iterations: 0,
        converged: true,
    };
    let g = |x: &[f64]| f(&normalized(x));
    let step = 0.5 / (grid.len() as f64).powf(1.0 / dim.max(1) as f64).max(1.0);
    for &(_, idx) in scored.iter().take(opts.starts.max(1)) {
        let m = nelder_mead(g, &grid[idx], step.max(1e-3), opts.iterations, opts.tol);
        diag.refine_iterations += m.iterations;
        diag.converged &= m.converged;
        if m.value < best.1 {
            best = (normalized(&m.x), m.value);
        }
    }
    (best.0, best.1, diag)
}
