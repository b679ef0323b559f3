mod common;

use common::*;
use maskscope_core::logit::{fit_logistic, fit_logit, information, score, LogitOptions};
use maskscope_core::synth::{gen_logit_cohort, CovariateSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dataset(seed: u64, n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = gen_logit_cohort(n, &[0.3, -0.02, -0.75, 0.01, 3.4], &CovariateSpec::default(), seed).unwrap();
    maskscope_core::logit::design_matrix(&rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn score_vanishes_at_the_estimate(seed in 0u64..10_000) {
        let rows = gen_logit_cohort(400, &[0.3, -0.02, -0.75, 0.01, 3.4], &CovariateSpec::default(), seed).unwrap();
        let fit = fit_logit(&rows).unwrap();
        let (x, y) = maskscope_core::logit::design_matrix(&rows);
        let g = score(&DVector::from_vec(fit.coefficients.clone()), &x, &y);
        prop_assert!(g.amax() < 1e-8, "score {g}");
        for (j, se) in fit.standard_errors.iter().enumerate() {
            prop_assert!(*se > 0.0);
            prop_assert!((fit.z[j] - fit.coefficients[j] / se).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&fit.p_values[j]));
        }
    }

    #[test]
    fn rescaling_a_column_rescales_its_coefficient(seed in 0u64..10_000, col in 1usize..5, c in 0.01f64..100.0) {
        let (x, y) = dataset(seed, 300);
        let names = ["a", "b", "c", "d", "e"];
        let base = fit_logistic(&x, &y, &names, &LogitOptions::default()).unwrap();
        let mut xs = x.clone();
        xs.column_mut(col).scale_mut(c);
        let scaled = fit_logistic(&xs, &y, &names, &LogitOptions::default()).unwrap();
        prop_assert!(rel_err(scaled.coefficients[col] * c, base.coefficients[col]) < 1e-8);
        prop_assert!(rel_err(scaled.standard_errors[col] * c, base.standard_errors[col]) < 1e-8);
        for j in 0..5 {
            prop_assert!((scaled.z[j] - base.z[j]).abs() < 1e-8);
            prop_assert!((scaled.p_values[j] - base.p_values[j]).abs() < 1e-8);
        }
        let eta_a = &x * DVector::from_vec(base.coefficients.clone());
        let eta_b = &xs * DVector::from_vec(scaled.coefficients.clone());
        for (a, b) in eta_a.iter().zip(eta_b.iter()) {
            let (pa, pb) = (1.0 / (1.0 + (-a).exp()), 1.0 / (1.0 + (-b).exp()));
            prop_assert!((pa - pb).abs() < 1e-8);
        }
    }

    #[test]
    fn information_matches_score_differences(seed in 0u64..10_000, b in prop::collection::vec(-1.0f64..1.0, 5)) {
        let (x, y) = dataset(seed, 60);
        // rescale so every column is of order one
        let mut x = x;
        x.column_mut(1).scale_mut(1.0 / 50.0);
        x.column_mut(3).scale_mut(1.0 / 150.0);
        let beta = DVector::from_vec(b);
        let info = information(&beta, &x);
        let h = 1e-6;
        for j in 0..5 {
            let mut up = beta.clone();
            up[j] += h;
            let mut down = beta.clone();
            down[j] -= h;
            let col = (score(&up, &x, &y) - score(&down, &x, &y)) / (2.0 * h);
            for i in 0..5 {
                // the information is minus the Hessian of the log-likelihood
                prop_assert!(rel_err(-info[(i, j)], col[i]) < 1e-6, "{} vs {}", -info[(i, j)], col[i]);
            }
        }
    }
}

#[test]
fn all_zero_coefficients_give_balanced_responses() {
    let rows = gen_logit_cohort(100_000, &[0.0; 5], &CovariateSpec::default(), 3).unwrap();
    let share = rows.iter().filter(|r| r.response == 1).count() as f64 / rows.len() as f64;
    // 99.9% binomial interval half-width at n = 100,000
    assert!((share - 0.5).abs() < 3.29 * (0.25f64 / 1e5).sqrt(), "{share}");
}

#[test]
fn fit_maximizes_reference_likelihood() {
    let (x, y) = dataset(11, 200);
    let fit = fit_logistic(&x, &y, &["a", "b", "c", "d", "e"], &LogitOptions::default()).unwrap();
    let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect();
    let ys: Vec<u8> = y.iter().map(|&v| v as u8).collect();
    let best = logit_loglik(&fit.coefficients, &rows, &ys);
    assert!((best - fit.log_likelihood).abs() < 1e-9 * best.abs());
    for j in 0..5 {
        for d in [-1e-3, 1e-3] {
            let mut b = fit.coefficients.clone();
            b[j] += d;
            assert!(logit_loglik(&b, &rows, &ys) < best);
        }
    }
}
