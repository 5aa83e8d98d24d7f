use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcpos::fibration::{
    apply_spectral, clamp_conditions_check, psi_epsilon_build, split_curvature, FibrationError,
    FibrationJet, SmoothClamp,
};
use rcpos::linalg::{random, CMatrix, CVector, HermMatrix};

/// Hermitian matrix with prescribed eigenvalues in a random unitary basis.
fn with_spectrum(rng: &mut ChaCha8Rng, values: &[f64]) -> HermMatrix {
    let u = random::random_unitary(rng, values.len());
    let d = CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    HermMatrix::symmetrize(&u * d * u.adjoint())
}

/// Eigenvalues of a Hermitian matrix, ascending, straight from nalgebra.
fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Pencil eigenvalues `det(G - lambda B) = 0` by `L^{-1} G L^{-*}`.
fn pencil(g: &HermMatrix, b: &HermMatrix) -> Vec<f64> {
    let l = b.matrix().clone().cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let r = &li * g.matrix() * li.adjoint();
    eigenvalues(&((&r + r.adjoint()) * Complex64::new(0.5, 0.0)))
}

fn positives(values: &[f64], scale: f64) -> usize {
    values.iter().filter(|&&x| x > 1e-9 * scale).count()
}

#[test]
fn hessian_inertia_is_fiber_dimension_plus_horizontal_inertia() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for trial in 0..100 {
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let jet = FibrationJet::random(&mut rng, m, n);
        let hess = jet.hessian();
        let g = split_curvature(&jet).unwrap().g;
        let full = eigenvalues(hess.matrix());
        let horizontal = eigenvalues(g.matrix());
        let scale = hess.norm();
        assert_eq!(
            positives(&full, scale),
            n + positives(&horizontal, scale),
            "trial {trial}: {full:?} vs {horizontal:?}"
        );
    }
}

#[test]
fn constructed_families_attain_the_partial_sum_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for m in 1..=3 {
        for k in 1..=m {
            let mut samples = Vec::new();
            let n = 1 + m % 2;
            for s in 0..6 {
                // exactly k positive horizontal eigenvalues
                let spectrum: Vec<f64> = (0..m)
                    .map(|i| {
                        if i < k {
                            rng.gen_range(0.2..3.0)
                        } else {
                            -rng.gen_range(0.1..3.0)
                        }
                    })
                    .collect();
                let base = with_spectrum(&mut rng, &spectrum);
                let jet =
                    FibrationJet::new(base, CMatrix::zeros(m, n), random::random_pd(&mut rng, n))
                        .unwrap();
                samples.push((s / 2, jet));
            }
            let rep = clamp_conditions_check(&samples, k, None).unwrap();
            assert!(rep.condition_a && rep.condition_b, "m={m} k={k}");
            let eps = rep.clamp.eps;
            assert!((eps - 1.0 / (m - k + 1) as f64).abs() < 1e-15);
            assert!(
                rep.min_partial_sum >= eps * (1.0 - 1e-9),
                "m={m} k={k}: {} < {eps}",
                rep.min_partial_sum
            );
            assert!(rep.condition_c);
        }
    }
}

#[test]
fn all_negative_horizontal_block_is_a_hypothesis_failure() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let good = FibrationJet::random(&mut rng, 2, 1);
    let good = FibrationJet::new(
        HermMatrix::identity(2),
        good.base_fiber.scale(0.0),
        good.fiber_fiber,
    )
    .unwrap();
    let bad = FibrationJet::new(
        HermMatrix::from_real_diagonal(&[-1.0, -2.0]),
        CMatrix::zeros(2, 1),
        HermMatrix::identity(1),
    )
    .unwrap();
    let err = clamp_conditions_check(&[(0, good), (1, bad)], 1, None).unwrap_err();
    assert!(
        matches!(err, FibrationError::HypothesisFailure { sample: 1, .. }),
        "{err:?}"
    );
}

#[test]
fn spectral_clamp_maps_pencil_eigenvalues_through_the_clamp() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let m = rng.gen_range(1..=3);
        let spectrum: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let g = with_spectrum(&mut rng, &spectrum);
        let beta0 = random::random_pd(&mut rng, m);
        let gammas = pencil(&g, &beta0);
        let a_inf = gammas
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .fold(1.0, f64::min)
            .max(0.05);
        let b_sup = gammas.iter().map(|x| x.abs()).fold(a_inf, f64::max);
        let psi = SmoothClamp::new(a_inf, b_sup, 0.5).unwrap();
        let beta = apply_spectral(&g, &beta0, &psi).unwrap();
        assert!(beta.min_eigenvalue() > 0.0);
        let mut expected: Vec<f64> = gammas.iter().map(|&x| x / psi.eval(x)).collect();
        expected.sort_by(f64::total_cmp);
        let got = pencil(&g, &beta);
        for (e, g) in expected.iter().zip(&got) {
            assert!((e - g).abs() < 1e-9, "{expected:?} vs {got:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn condition_c_implies_condition_b(seed in any::<u64>(), m in 1usize..=3, n in 1usize..=2, k in 1usize..=3, count in 1usize..=5) {
        prop_assume!(k <= m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<(usize, FibrationJet)> = (0..count).map(|s| (s, FibrationJet::random(&mut rng, m, n))).collect();
        match clamp_conditions_check(&samples, k, None) {
            Ok(rep) => {
                if rep.condition_c_margin > 0.0 {
                    prop_assert!(rep.condition_b);
                }
                prop_assert_eq!(rep.condition_a, rep.condition_b);
            }
            Err(FibrationError::HypothesisFailure { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn every_lift_is_at_least_the_horizontal_curvature(seed in any::<u64>(), m in 1usize..=3, n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jet = FibrationJet::random(&mut rng, m, n);
        let g = split_curvature(&jet).unwrap().g;
        let v: CVector = random::random_matrix(&mut rng, m, 1).column(0).into_owned();
        let a: CVector = random::random_matrix(&mut rng, n, 1).column(0).into_owned();
        // the pairing is v^T G vb, i.e. the quadratic form at conj(v)
        let floor = g.quadratic_form(&v.map(|z| z.conj()));
        prop_assert!(jet.lift_value(&v, &a) >= floor - 1e-10 * jet.hessian().norm() * v.norm_squared().max(1.0));
    }

    #[test]
    fn clamp_meets_its_constraints(a in 0.01f64..5.0, extra in 0.0f64..10.0, m in 1usize..=4, x in -20.0f64..20.0) {
        let b = a + extra;
        let eps = 1.0 / m as f64;
        let psi = SmoothClamp::new(a, b, eps).unwrap();
        let y = psi.eval(x);
        prop_assert!(y > 0.0);
        if x >= a {
            prop_assert_eq!(y, x);
        } else if x <= 0.0 {
            prop_assert!((y - b / eps).abs() <= 1e-12 * (b / eps));
        } else {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn built_clamp_uses_the_sampled_extremes(seed in any::<u64>(), m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gammas: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut g: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..2.0)).collect();
                g.sort_by(f64::total_cmp);
                g
            })
            .collect();
        let psi = psi_epsilon_build(&gammas, m).unwrap();
        let a = gammas.iter().map(|g| g[0]).fold(f64::INFINITY, f64::min);
        let b = gammas.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        prop_assert!((psi.a_inf - a).abs() < 1e-15);
        prop_assert!((psi.b_sup - b).abs() < 1e-15);
        prop_assert!((psi.eps - 1.0).abs() < 1e-15);
    }
}
