//! Bound-validity checks across scenarios: the empirical covariance never
//! undercuts the MCRB beyond Monte Carlo noise.

use misfit_core::bounds::{mcrb_from, sandwich_matrices};
use misfit_core::harness::{run_trials, EstimatorSpec, PriorSpec, Scenario};
use misfit_core::models::{pair_ar1_power, pair_gaussian_wrong_mean, Budget, EvalMethod};

#[test]
fn empirical_covariance_respects_the_bound() {
    let cases: Vec<(Scenario, f64)> = vec![
        (
            Scenario {
                pair: pair_gaussian_wrong_mean(1.0, 4.0).unwrap(),
                estimator: EstimatorSpec::MmlClosed,
                m: 10,
                trials: 40_000,
                master_seed: 81,
            },
            4.8,
        ),
        (
            Scenario {
                pair: pair_ar1_power(0.5, 4.0, 8).unwrap(),
                estimator: EstimatorSpec::MmlClosed,
                m: 24,
                trials: 40_000,
                master_seed: 82,
            },
            0.2592595418294271,
        ),
        (
            Scenario {
                pair: pair_gaussian_wrong_mean(1.0, 4.0).unwrap(),
                estimator: EstimatorSpec::MbSquared {
                    prior: PriorSpec::InvGamma {
                        shape: 3.0,
                        scale: 2.0,
                    },
                },
                m: 100,
                trials: 2_000,
                master_seed: 83,
            },
            0.48,
        ),
    ];
    for (scenario, mcrb_expected) in cases {
        let stats = run_trials(&scenario).unwrap();
        // Recompute the bound through the library for the same scenario.
        let s = sandwich_matrices(
            &scenario.pair,
            &stats.theta0,
            EvalMethod::ClosedForm,
            &Budget::default(),
        )
        .unwrap();
        let mcrb = mcrb_from(&s, scenario.m).unwrap().mcrb[(0, 0)];
        assert!((mcrb - mcrb_expected).abs() < 1e-9 * mcrb_expected.max(1.0));
        let cov = stats.emp_cov[(0, 0)];
        let se = stats.cov_se[(0, 0)];
        assert!(
            cov >= mcrb - 3.0 * se,
            "{:?}: emp_cov {cov} below mcrb {mcrb} - 3se ({se})",
            scenario.estimator
        );
    }
}

#[test]
fn mse_cov_bias_decomposition_within_noise() {
    // emp_mse - emp_cov = r r' + cross terms involving the empirical bias;
    // statistically the difference from r r' stays within a few standard
    // errors of the bias term.
    let scenario = Scenario {
        pair: pair_gaussian_wrong_mean(1.5, 4.0).unwrap(),
        estimator: EstimatorSpec::MmlClosed,
        m: 10,
        trials: 50_000,
        master_seed: 84,
    };
    let stats = run_trials(&scenario).unwrap();
    let r = stats.theta_bar.as_ref().unwrap().scalar_value() - stats.theta0.scalar_value();
    let diff = stats.emp_mse.as_ref().unwrap()[(0, 0)] - stats.emp_cov[(0, 0)];
    let dev = (diff - r * r).abs();
    assert!(
        dev <= 3.0 * 2.0 * r.abs() * stats.bias_se[0],
        "decomposition deviation {dev}"
    );
}
