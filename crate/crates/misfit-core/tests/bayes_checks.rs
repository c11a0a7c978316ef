//! Monte Carlo checks of the mismatched Bayes machinery: convergence to the
//! pseudo-true parameter, concentration rates, and the exact equality of
//! the squared-loss asymptotic covariance with the sandwich.

use misfit_core::bayes::{
    concentration_stat, loss_curvature, mb_asymptotic_cov, mb_estimate, posterior_compute,
    InverseGammaPrior, SquaredLoss,
};
use misfit_core::bounds::{mcrb_from, sandwich_matrices};
use misfit_core::models::{pair_ar1_power, pair_gaussian_wrong_mean, Budget, EvalMethod};
use misfit_core::seed::{derive_seed, domain};

#[test]
fn mb_estimate_approaches_pseudo_true_at_scale() {
    let pair = pair_gaussian_wrong_mean(1.0, 4.0).unwrap();
    let prior = InverseGammaPrior::new(3.0, 2.0).unwrap();
    let data = pair.truth().sample(71, 100_000);
    let grid = posterior_compute(pair.family(), &prior, &data).unwrap();
    let est = mb_estimate(&grid, &SquaredLoss).unwrap();
    assert!(
        (est.scalar_value() - 5.0).abs() < 0.05,
        "MB {}",
        est.scalar_value()
    );
}

#[test]
fn posterior_std_halves_per_sample_doubling() {
    // Laplace scaling: std ratio per doubling of M approaches 1/sqrt(2).
    let pair = pair_gaussian_wrong_mean(1.0, 4.0).unwrap();
    let prior = InverseGammaPrior::new(3.0, 2.0).unwrap();
    let mut stds = Vec::new();
    let mut m = 100usize;
    let mut i = 0u64;
    while m <= 12_800 {
        let data = pair.truth().sample(derive_seed(72, domain::BAYES, i), m);
        let grid = posterior_compute(pair.family(), &prior, &data).unwrap();
        stds.push(grid.std());
        m *= 2;
        i += 1;
    }
    let target = 0.5f64.sqrt();
    // Average ratio over the doublings; individual ratios carry data noise.
    let ratios: Vec<f64> = stds.windows(2).map(|w| w[1] / w[0]).collect();
    let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(
        (avg - target).abs() < 0.2 * target,
        "avg std ratio per doubling {avg:.3} vs {target:.3} ({ratios:?})"
    );
}

#[test]
fn posterior_mean_tracks_theta_bar_when_matched() {
    let pair = pair_gaussian_wrong_mean(0.0, 4.0).unwrap();
    let prior = InverseGammaPrior::new(3.0, 2.0).unwrap();
    let data = pair.truth().sample(73, 10_000);
    let grid = posterior_compute(pair.family(), &prior, &data).unwrap();
    // 4 standard deviations of the posterior mean at this sample size.
    assert!((grid.mean() - 4.0).abs() < 0.25, "mean {}", grid.mean());
}

#[test]
fn mismatched_posterior_lands_near_theta0_at_1e4() {
    let pair = pair_gaussian_wrong_mean(1.0, 4.0).unwrap();
    let prior = InverseGammaPrior::new(3.0, 2.0).unwrap();
    let posteriors: Vec<_> = [100usize, 1000, 10_000]
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let data = pair
                .truth()
                .sample(derive_seed(79, domain::BAYES, i as u64), m);
            (m, posterior_compute(pair.family(), &prior, &data).unwrap())
        })
        .collect();
    let theta0 = pair.reference().unwrap().theta0.clone();
    let rows = concentration_stat(&posteriors, &theta0);
    assert!(
        rows[2].dist_to_theta0 <= 0.1,
        "distance {}",
        rows[2].dist_to_theta0
    );
    assert!(rows.windows(2).all(|w| w[1].std < w[0].std));
}

#[test]
fn squared_loss_cov_equals_sandwich_exactly() {
    // Lambda from the loss-curvature route must equal the per-sample
    // sandwich computed by the bounds module on the same inputs.
    for pair in [
        pair_gaussian_wrong_mean(1.3, 2.0).unwrap(),
        pair_ar1_power(0.6, 3.0, 5).unwrap(),
    ] {
        let theta0 = pair.reference().unwrap().theta0.clone();
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        let c = mcrb_from(&s, 1).unwrap().c_per_sample;
        let curv = loss_curvature(&SquaredLoss, &theta0).unwrap();
        let lam = mb_asymptotic_cov(&curv, &s).unwrap();
        assert_eq!(lam[(0, 0)], c[(0, 0)], "{}", pair.id());
    }
}
