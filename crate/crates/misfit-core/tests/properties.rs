//! Property tests for structural invariants.

use proptest::prelude::*;

use misfit_core::bounds::{matched_crb, mcrb_from, sandwich_matrices};
use misfit_core::estimators::cmml_scatter;
use misfit_core::models::{
    ar1_correlation, pair_ar1_power, pair_complex_t_scatter, Budget, EvalMethod, ScatterSpec,
};
use misfit_core::samples::{interleave_complex, Samples};
use num_complex::Complex64;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// AR(1) correlation: exact trace, positive definite for |rho| < 1.
    #[test]
    fn ar1_builder_trace_and_pd(n in 1usize..10, rho in -0.95f64..0.95) {
        let s = ar1_correlation(n, rho).unwrap();
        prop_assert_eq!(s.trace(), n as f64);
        prop_assert!(s.clone().cholesky().is_some());
        prop_assert!((&s - s.transpose()).norm() == 0.0);
    }

    /// MCRB >= CRB componentwise for the power example, equality iff rho=0
    /// (tr(Sigma^2) >= N under tr(Sigma) = N).
    #[test]
    fn ar1_mcrb_dominates_crb(n in 2usize..10, rho in -0.9f64..0.9, s2 in 0.3f64..5.0) {
        let pair = pair_ar1_power(rho, s2, n).unwrap();
        let theta0 = pair.reference().unwrap().theta0.clone();
        let s = sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default())
            .unwrap();
        let m = 16;
        let mcrb = mcrb_from(&s, m).unwrap().mcrb[(0, 0)];
        let crb = matched_crb(&pair, &theta0, m).unwrap()[(0, 0)];
        if rho == 0.0 {
            prop_assert!((mcrb - crb).abs() < 1e-12 * crb);
        } else {
            prop_assert!(mcrb > crb * (1.0 - 1e-12));
            // Strict inequality away from zero correlation.
            if rho.abs() > 1e-3 {
                prop_assert!(mcrb > crb);
            }
        }
    }

    /// MCRB halves exactly when the sample count doubles.
    #[test]
    fn mcrb_scales_inversely_with_m(rho in -0.8f64..0.8, s2 in 0.3f64..5.0, m in 1usize..500) {
        let pair = pair_ar1_power(rho, s2, 4).unwrap();
        let theta0 = pair.reference().unwrap().theta0.clone();
        let s = sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default())
            .unwrap();
        let a = mcrb_from(&s, m).unwrap().mcrb[(0, 0)];
        let b = mcrb_from(&s, 2 * m).unwrap().mcrb[(0, 0)];
        prop_assert_eq!(a, 2.0 * b);
    }

    /// Scatter estimate: exact trace constraint and Hermitian symmetry on
    /// arbitrary data; sigma2 scales with |c|^2 under data scaling while
    /// the scatter matrix stays put.
    #[test]
    fn cmml_invariants(
        seed in 0u64..1_000_000,
        n in 2usize..5,
        extra in 0usize..20,
        re in -3.0f64..3.0,
        im in -3.0f64..3.0,
    ) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let pair = pair_complex_t_scatter(2.0, 1.0, n, ScatterSpec::Identity).unwrap();
        let data = pair.truth().sample(seed, n + extra);
        let est = cmml_scatter(&data).unwrap();
        let tr: f64 = est.sigma_hat.diagonal().iter().map(|z| z.re).sum();
        prop_assert!((tr - n as f64).abs() < 1e-12 * n as f64);
        for i in 0..n {
            for j in 0..n {
                prop_assert!(
                    (est.sigma_hat[(i, j)] - est.sigma_hat[(j, i)].conj()).norm() < 1e-12
                );
            }
        }

        let c = Complex64::new(re, im);
        let mut scaled = Samples::zeros(2 * n, data.count());
        for m in 0..data.count() {
            let z: Vec<Complex64> = data.obs_complex(m).iter().map(|v| v * c).collect();
            interleave_complex(&z, scaled.obs_mut(m));
        }
        let est2 = cmml_scatter(&scaled).unwrap();
        prop_assert!((&est2.sigma_hat - &est.sigma_hat).norm() < 1e-10);
        let expect = est.sigma2_hat * c.norm_sqr();
        prop_assert!((est2.sigma2_hat - expect).abs() < 1e-10 * expect.abs().max(1e-12));
    }

    /// Sampling twice with one seed is identical for every model.
    #[test]
    fn samplers_reproduce_per_seed(seed in 0u64..1_000_000) {
        let pair = pair_ar1_power(0.4, 2.0, 3).unwrap();
        prop_assert_eq!(pair.truth().sample(seed, 64), pair.truth().sample(seed, 64));
        let pair = pair_complex_t_scatter(1.5, 2.0, 2, ScatterSpec::Identity).unwrap();
        prop_assert_eq!(pair.truth().sample(seed, 64), pair.truth().sample(seed, 64));
    }
}

/// LB - MCRB is the rank-one outer product of the bias, hence PSD.
#[test]
fn nested_lift_is_rank_one_psd() {
    use misfit_core::bounds::nested_lb;
    use misfit_core::models::pair_gaussian_wrong_mean;
    for mu in [0.0, 0.5, 1.0, 2.0] {
        let pair = pair_gaussian_wrong_mean(mu, 4.0).unwrap();
        let theta0 = pair.reference().unwrap().theta0.clone();
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        let rep = nested_lb(&mcrb_from(&s, 10).unwrap(), &pair.nested().unwrap()).unwrap();
        let lift = rep.lb.as_ref().unwrap() - &rep.mcrb;
        let r = rep.r.as_ref().unwrap();
        assert!((lift[(0, 0)] - r[0] * r[0]).abs() < 1e-12);
        assert!(lift[(0, 0)] >= 0.0);
        assert!(rep.mcrb[(0, 0)] >= 0.0);
    }
}
