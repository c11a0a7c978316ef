//! Runtime acceptance checks.
//!
//! Each criterion reproduces one of the toolkit's headline claims end to
//! end (figure-level sweeps, matched collapse, solver and sandwich oracle
//! agreement, the Bayes suite, the scatter suite, asymptotic normality)
//! at pinned seeds and tolerances. The CLI `acceptance` command runs them
//! all; the integration test suite asserts them one by one.
//!
//! Expected values are produced by routes independent of the code under
//! test: hand-evaluated closed forms, direct summation, conjugate algebra,
//! and quadrature of reference densities.

use nalgebra::DVector;

use crate::bayes::{concentration_stat, posterior_compute, InverseGammaPrior};
use crate::bounds::{pseudo_true, sample_sandwich, sandwich_matrices};
use crate::error::Result;
use crate::estimators::{cmml_scatter, mml_closed};
use crate::harness::{run_trials, sweep, EstimatorSpec, PriorSpec, Scenario};
use crate::models::{
    pair_ar1_power, pair_complex_t_scatter, pair_gaussian_wrong_mean, quadratic_form_cdf, Budget,
    EvalMethod, ModelSpec, ScatterSpec,
};
use crate::numeric::quadrature::adaptive_simpson;
use crate::numeric::stats::{ks_distance, loglog_slope, standard_normal_cdf};
use crate::samples::Samples;
use crate::seed::{derive_seed, domain};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
}

impl CriterionReport {
    fn new(id: u32, name: &'static str) -> Self {
        CriterionReport {
            id,
            name,
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: String) {
        if !ok {
            self.pass = false;
        }
        self.details
            .push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, detail));
    }

    /// One pass/fail line.
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} ({}): {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn gwm_spec(mu: f64, s2: f64) -> ModelSpec {
    ModelSpec {
        id: "gaussian-wrong-mean".into(),
        mu_bar: Some(mu),
        sigma2_bar: Some(s2),
        ..Default::default()
    }
}

fn ar1_spec(rho: f64, s2: f64, n: usize) -> ModelSpec {
    ModelSpec {
        id: "ar1-power".into(),
        rho: Some(rho),
        sigma2_bar: Some(s2),
        n: Some(n),
        ..Default::default()
    }
}

/// Error covariance of the mismatched ML estimator matches the MCRB within
/// 3% across the mean-misspecification sweep, and the data-driven sample
/// MCRB calibrated at M = 1e5 lands within 5%.
pub fn criterion_1_fig1_covariance() -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(1, "wrong-mean sweep: covariance vs MCRB");
    let grid = [0.0, 0.5, 1.0, 1.5, 2.0];
    let table = sweep(
        &gwm_spec(0.0, 4.0),
        EstimatorSpec::MmlClosed,
        "mu_bar",
        &grid,
        10,
        100_000,
        0xF1601,
        EvalMethod::ClosedForm,
        &Budget::default(),
    )?;
    for row in &table.rows {
        let mu = row.sweep_value;
        // Eq. of the sweep: per-sample sandwich (2 s^4 + 4 s^2 mu^2) / M.
        let expected = (2.0 * 16.0 + 4.0 * 4.0 * mu * mu) / 10.0;
        let cov = row.emp_cov[(0, 0)];
        let rel = (cov - expected).abs() / expected;
        rep.check(
            rel < 0.03,
            format!("mu={mu}: emp_cov {cov:.4} vs mcrb {expected:.4} (rel {rel:.4})"),
        );
        let rel_bound = (row.mcrb[(0, 0)] - expected).abs() / expected;
        rep.check(
            rel_bound < 1e-10,
            format!("mu={mu}: closed mcrb column matches hand value"),
        );
    }
    // Sample MCRB from a dedicated M = 1e5 calibration run per grid point.
    for (i, &mu) in grid.iter().enumerate() {
        let pair = pair_gaussian_wrong_mean(mu, 4.0)?;
        let data = pair
            .truth()
            .sample(derive_seed(0xF1CA1, domain::CALIBRATION, i as u64), 100_000);
        let est = mml_closed(&pair, &data)?;
        let ss = sample_sandwich(&data, pair.family(), &est.theta_hat)?;
        let per_sample = 2.0 * 16.0 + 4.0 * 4.0 * mu * mu;
        let rel = (ss.c_m[(0, 0)] - per_sample).abs() / per_sample;
        rep.check(
            rel < 0.05,
            format!(
                "mu={mu}: sample C_M {:.3} vs {per_sample:.3} (rel {rel:.4})",
                ss.c_m[(0, 0)]
            ),
        );
    }
    Ok(rep)
}

/// MSE about the true variance matches the nested lower bound within 3%;
/// the bound collapses to the CRB exactly at zero mean and grows strictly.
pub fn criterion_2_fig2_mse() -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(2, "wrong-mean sweep: MSE vs nested bound");
    let grid = [0.0, 0.5, 1.0, 1.5, 2.0];
    let table = sweep(
        &gwm_spec(0.0, 4.0),
        EstimatorSpec::MmlClosed,
        "mu_bar",
        &grid,
        10,
        100_000,
        0xF1602,
        EvalMethod::ClosedForm,
        &Budget::default(),
    )?;
    let mut prev_lb = f64::NEG_INFINITY;
    for row in &table.rows {
        let mu = row.sweep_value;
        let expected = (2.0 * 16.0 + 4.0 * 4.0 * mu * mu) / 10.0 + mu.powi(4);
        let mse = row.emp_mse.as_ref().unwrap()[(0, 0)];
        let rel = (mse - expected).abs() / expected;
        rep.check(
            rel < 0.03,
            format!("mu={mu}: emp_mse {mse:.4} vs lb {expected:.4} (rel {rel:.4})"),
        );
        let lb = row.lb.as_ref().unwrap()[(0, 0)];
        rep.check(
            lb > prev_lb,
            format!("mu={mu}: lb {lb:.6} strictly above previous"),
        );
        prev_lb = lb;
        if mu == 0.0 {
            let crb = row.crb.as_ref().unwrap()[(0, 0)];
            rep.check(
                (lb - crb).abs() < 1e-12 && (crb - 3.2).abs() < 1e-12,
                format!("mu=0: lb = crb = {crb}"),
            );
        }
    }
    Ok(rep)
}

/// AR(1) power sweep: MSE matches the MCRB within 3%; the bound collapses
/// at rho = 0 and its ratio to the CRB equals tr(Sigma^2)/N.
pub fn criterion_3_fig3_ar1() -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(3, "ar1 sweep: MSE vs MCRB and CRB ratio");
    let grid = [0.0, 0.25, 0.5, 0.75];
    let table = sweep(
        &ar1_spec(0.0, 4.0, 8),
        EstimatorSpec::MmlClosed,
        "rho",
        &grid,
        24,
        100_000,
        0xF1603,
        EvalMethod::ClosedForm,
        &Budget::default(),
    )?;
    for row in &table.rows {
        let rho = row.sweep_value;
        // Direct-summation oracle for tr(Sigma^2).
        let mut tr_sq = 0.0;
        for i in 0..8i32 {
            for j in 0..8i32 {
                tr_sq += rho.powi(2 * (i - j).abs());
            }
        }
        let expected = 2.0 * 16.0 * tr_sq / (24.0 * 64.0);
        let mse = row.emp_mse.as_ref().unwrap()[(0, 0)];
        let rel = (mse - expected).abs() / expected;
        rep.check(
            rel < 0.03,
            format!("rho={rho}: emp_mse {mse:.5} vs mcrb {expected:.5} (rel {rel:.4})"),
        );

        let crb = row.crb.as_ref().unwrap()[(0, 0)];
        if rho == 0.0 {
            rep.check(
                (row.mcrb[(0, 0)] - crb).abs() < 1e-12 && (crb - 32.0 / 192.0).abs() < 1e-12,
                format!("rho=0: mcrb = crb = {crb}"),
            );
        }
        if rho == 0.5 {
            let ratio = row.mcrb[(0, 0)] / crb;
            let oracle = tr_sq / 8.0;
            rep.check(
                (ratio - oracle).abs() < 1e-6,
                format!("rho=0.5: mcrb/crb {ratio:.9} vs tr(Sigma^2)/N {oracle:.9}"),
            );
        }
    }
    Ok(rep)
}

/// Matched configurations collapse the two information matrices onto each
/// other: exactly along the closed-form route, within 3% along Monte Carlo.
pub fn criterion_4_matched_collapse() -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(4, "matched collapse B = -A");
    for (pair, name) in [
        (pair_gaussian_wrong_mean(0.0, 4.0)?, "gaussian mu=0"),
        (pair_ar1_power(0.0, 4.0, 8)?, "ar1 rho=0"),
    ] {
        let theta0 = pair.reference()?.theta0.clone();
        let closed = sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default())?;
        let defect = closed.matched_defect();
        rep.check(
            defect <= 1e-6,
            format!("{name}: closed-form defect {defect:.2e}"),
        );

        let budget = Budget {
            seed: 0xF1604,
            ..Budget::default()
        };
        let mc = sandwich_matrices(&pair, &theta0, EvalMethod::MonteCarlo, &budget)?;
        let defect = mc.matched_defect();
        rep.check(
            defect <= 0.03,
            format!("{name}: monte-carlo defect {defect:.4} at 1e6 draws"),
        );
    }
    Ok(rep)
}

/// The quadrature pseudo-true solver recovers the projection parameter to
/// 1e-4 over random hyperparameters; multi-start agreement is enforced
/// internally at 1e-6 (a disagreement would surface as an error).
pub fn criterion_5_pseudo_true() -> Result<CriterionReport> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rep = CriterionReport::new(5, "pseudo-true solver");
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1605);
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let mu: f64 = rng.random_range(-2.0..2.0);
        let s2: f64 = rng.random_range(0.4..5.0);
        let pair = pair_gaussian_wrong_mean(mu, s2)?;
        let init = pair.family().point(&[1.0]);
        let t = pseudo_true(&pair, &init, EvalMethod::Quadrature, &Budget::default())?;
        worst = worst.max((t.scalar_value() - (s2 + mu * mu)).abs());

        let rho: f64 = rng.random_range(-0.8..0.8);
        let s2: f64 = rng.random_range(0.4..5.0);
        let n: usize = rng.random_range(2..10);
        let pair = pair_ar1_power(rho, s2, n)?;
        let init = pair.family().point(&[1.0]);
        let t = pseudo_true(&pair, &init, EvalMethod::Quadrature, &Budget::default())?;
        worst = worst.max((t.scalar_value() - s2).abs());
    }
    rep.check(
        worst < 1e-4,
        format!("50 random draws, worst |error| {worst:.2e}"),
    );
    Ok(rep)
}

/// Quadrature and Monte Carlo sandwich matrices agree with the closed
/// forms: 1e-4 relative and 3 standard errors respectively.
pub fn criterion_6_sandwich_oracle() -> Result<CriterionReport> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rep = CriterionReport::new(6, "sandwich route agreement");
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1606);
    let mut cases = vec![
        pair_gaussian_wrong_mean(1.0, 4.0)?,
        pair_ar1_power(0.5, 4.0, 8)?,
    ];
    for _ in 0..10 {
        let mu: f64 = rng.random_range(-2.0..2.0);
        let s2: f64 = rng.random_range(0.4..5.0);
        cases.push(pair_gaussian_wrong_mean(mu, s2)?);
        let rho: f64 = rng.random_range(-0.8..0.8);
        let s2: f64 = rng.random_range(0.4..5.0);
        let n: usize = rng.random_range(2..10);
        cases.push(pair_ar1_power(rho, s2, n)?);
    }
    let mut worst_quad: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for (k, pair) in cases.iter().enumerate() {
        let r = pair.reference()?;
        let theta0 = r.theta0.clone();
        let quad = sandwich_matrices(pair, &theta0, EvalMethod::Quadrature, &Budget::default())?;
        worst_quad = worst_quad
            .max((quad.a[(0, 0)] - r.a[(0, 0)]).abs() / r.a[(0, 0)].abs())
            .max((quad.b[(0, 0)] - r.b[(0, 0)]).abs() / r.b[(0, 0)].abs());

        let budget = Budget {
            seed: derive_seed(0xF1606, domain::MC_CHUNK, k as u64),
            mc_draws: 200_000,
            ..Budget::default()
        };
        let mc = sandwich_matrices(pair, &theta0, EvalMethod::MonteCarlo, &budget)?;
        let za = (mc.a[(0, 0)] - r.a[(0, 0)]).abs() / mc.a_std_err.as_ref().unwrap()[(0, 0)];
        let zb = (mc.b[(0, 0)] - r.b[(0, 0)]).abs() / mc.b_std_err.as_ref().unwrap()[(0, 0)];
        worst_z = worst_z.max(za).max(zb);
    }
    rep.check(
        worst_quad < 1e-4,
        format!("quadrature worst relative error {worst_quad:.2e}"),
    );
    rep.check(
        worst_z < 3.0,
        format!("monte-carlo worst |z| {worst_z:.2} (limit 3)"),
    );
    Ok(rep)
}

/// Bayes suite: conjugate oracle agreement, asymptotic covariance of the
/// mismatched Bayes estimator, posterior concentration.
pub fn criterion_7_bayes() -> Result<CriterionReport> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rep = CriterionReport::new(7, "bayes suite");

    // (a) Quadrature posterior mean vs conjugate closed form, 50 cases.
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1607);
    let fam = crate::models::ZeroMeanGaussianFamily;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let a: f64 = rng.random_range(2.0..6.0);
        let b: f64 = rng.random_range(0.5..5.0);
        let m: usize = rng.random_range(6..60);
        let sd: f64 = rng.random_range(0.5..3.0);
        let data = Samples::from_scalars(
            &(0..m)
                .map(|_| sd * rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect::<Vec<_>>(),
        );
        let prior = InverseGammaPrior::new(a, b)?;
        let grid = posterior_compute(&fam, &prior, &data)?;
        let s: f64 = data.as_slice().iter().map(|x| x * x).sum();
        let exact = (b + s / 2.0) / (a + m as f64 / 2.0 - 1.0);
        worst = worst.max((grid.mean() - exact).abs() / exact);
    }
    rep.check(
        worst < 1e-6,
        format!("conjugate mean, worst relative error {worst:.2e}"),
    );

    // (b) Empirical covariance of sqrt(M)(MB - theta0) vs Lambda = C = 48.
    let m = 10_000usize;
    let trials = 2_000usize;
    let scenario = Scenario {
        pair: pair_gaussian_wrong_mean(1.0, 4.0)?,
        estimator: EstimatorSpec::MbSquared {
            prior: PriorSpec::InvGamma {
                shape: 3.0,
                scale: 2.0,
            },
        },
        m,
        trials,
        master_seed: 0xF1607B,
    };
    let stats = run_trials(&scenario)?;
    let scaled = m as f64 * stats.emp_cov[(0, 0)];
    let rel = (scaled - 48.0) / 48.0;
    rep.check(
        rel.abs() < 0.10,
        format!("M cov(MB) = {scaled:.2} vs Lambda 48 (rel {rel:+.4}, {trials} trials)"),
    );

    // (c) Posterior standard deviation strictly decreasing in M.
    for (pair, name) in [
        (pair_gaussian_wrong_mean(1.0, 4.0)?, "gaussian-wrong-mean"),
        (pair_ar1_power(0.5, 4.0, 8)?, "ar1-power"),
    ] {
        let prior = InverseGammaPrior::new(3.0, 2.0)?;
        let mut posteriors = Vec::new();
        for (i, m) in [100usize, 1000, 10_000].into_iter().enumerate() {
            let data = pair
                .truth()
                .sample(derive_seed(0xF1607C, domain::BAYES, i as u64), m);
            posteriors.push((m, posterior_compute(pair.family(), &prior, &data)?));
        }
        let theta0 = pair.reference()?.theta0.clone();
        let rows = concentration_stat(&posteriors, &theta0);
        let decreasing = rows.windows(2).all(|w| w[1].std < w[0].std);
        rep.check(
            decreasing,
            format!(
                "{name}: posterior std {:.4} > {:.4} > {:.4}",
                rows[0].std, rows[1].std, rows[2].std
            ),
        );
    }
    Ok(rep)
}

/// Scatter suite: trace constraint, scale invariance, consistency rates,
/// and the sampler's quadratic-form goodness of fit.
pub fn criterion_8_scatter() -> Result<CriterionReport> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rep = CriterionReport::new(8, "scatter suite");

    // (a) tr(Sigma_hat) = N to 1e-12 on random complex-t data.
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1608);
    let mut worst_tr: f64 = 0.0;
    for k in 0..20 {
        let n: usize = rng.random_range(2..6);
        let m: usize = rng.random_range(n..50);
        let lambda: f64 = rng.random_range(0.8..6.0);
        let pair = pair_complex_t_scatter(lambda, 1.0, n, ScatterSpec::Identity)?;
        let data = pair
            .truth()
            .sample(derive_seed(0xF1608, domain::TRIAL, k), m);
        let est = cmml_scatter(&data)?;
        let tr: f64 = est.sigma_hat.diagonal().iter().map(|z| z.re).sum();
        worst_tr = worst_tr.max((tr - n as f64).abs() / n as f64);
    }
    rep.check(
        worst_tr < 1e-12,
        format!("trace constraint, worst relative defect {worst_tr:.2e}"),
    );

    // (b) Scale invariance: x -> c x leaves Sigma_hat, scales sigma2 by |c|^2.
    let pair = pair_complex_t_scatter(2.0, 1.0, 4, ScatterSpec::Ar1 { rho: 0.3 })?;
    let data = pair.truth().sample(0xF1608B, 200);
    let base = cmml_scatter(&data)?;
    let c = num_complex::Complex64::new(-0.8, 1.9);
    let mut scaled_data = Samples::zeros(8, 200);
    for m in 0..200 {
        let z: Vec<num_complex::Complex64> = data.obs_complex(m).iter().map(|v| v * c).collect();
        crate::samples::interleave_complex(&z, scaled_data.obs_mut(m));
    }
    let scaled = cmml_scatter(&scaled_data)?;
    let sig_drift = (&scaled.sigma_hat - &base.sigma_hat).norm();
    let pow_drift = (scaled.sigma2_hat - base.sigma2_hat * c.norm_sqr()).abs()
        / (base.sigma2_hat * c.norm_sqr());
    rep.check(
        sig_drift < 1e-12,
        format!("scale invariance of Sigma_hat (drift {sig_drift:.2e})"),
    );
    rep.check(
        pow_drift < 1e-12,
        format!("power scales by |c|^2 (drift {pow_drift:.2e})"),
    );

    // (c) Frobenius-error decay rate over M in {1e2, 1e3, 1e4}.
    for (i, lambda) in [1.0, 2.0, 5.0].into_iter().enumerate() {
        let pair = pair_complex_t_scatter(lambda, 1.0, 4, ScatterSpec::Ar1 { rho: 0.3 })?;
        let t = crate::harness::consistency_curve(
            &pair,
            &[100, 1000, 10_000],
            300,
            derive_seed(0xF1608C, domain::CONSISTENCY, i as u64),
        )?;
        let (ms, errs) = t.median_curve();
        let slope = loglog_slope(&ms, &errs);
        rep.check(
            (slope + 0.5).abs() <= 0.15,
            format!("lambda={lambda}: Frobenius error slope {slope:.3} (target -0.5 +/- 0.15)"),
        );
    }

    // (d) Sampler goodness of fit: KS distance of the quadratic form against
    // the quadrature CDF of the radial density, 1e5 draws.
    for (i, lambda) in [1.0, 2.0, 5.0].into_iter().enumerate() {
        let ks = scatter_quadform_ks(
            lambda,
            1.0,
            4,
            ScatterSpec::Ar1 { rho: 0.5 },
            derive_seed(0xF1608D, domain::TRIAL, i as u64),
        )?;
        rep.check(
            ks <= 0.01,
            format!("lambda={lambda}: quadratic-form KS {ks:.4} at 1e5 draws"),
        );
    }
    Ok(rep)
}

/// KS distance between the sampled quadratic form `x^H Sigma^-1 x` and its
/// radial reference law.
fn scatter_quadform_ks(
    lambda: f64,
    eta: f64,
    n: usize,
    scatter: ScatterSpec,
    seed: u64,
) -> Result<f64> {
    let pair = pair_complex_t_scatter(lambda, eta, n, scatter.clone())?;
    let draws = 100_000;
    let data = pair.truth().sample(seed, draws);
    let sigma = match scatter {
        ScatterSpec::Identity => nalgebra::DMatrix::from_fn(n, n, |i, j| {
            num_complex::Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        }),
        ScatterSpec::Ar1 { rho } => {
            crate::models::ar1_correlation(n, rho)?.map(|v| num_complex::Complex64::new(v, 0.0))
        }
    };
    let chol = sigma.cholesky().expect("scatter is positive definite");
    let mut qs: Vec<f64> = (0..draws)
        .map(|m| {
            let x = DVector::from_vec(data.obs_complex(m));
            let w = chol.solve(&x);
            x.dotc(&w).re
        })
        .collect();
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Incremental CDF along the sorted sample: one adaptive panel per gap.
    let nf = n as f64;
    let r = lambda / eta;
    let ln_c = statrs::function::gamma::ln_gamma(nf + lambda)
        - statrs::function::gamma::ln_gamma(nf)
        - statrs::function::gamma::ln_gamma(lambda)
        + lambda * r.ln();
    let density = move |q: f64| {
        if q <= 0.0 {
            0.0
        } else {
            (ln_c + (nf - 1.0) * q.ln() - (nf + lambda) * (r + q).ln()).exp()
        }
    };
    let mut cdfs = Vec::with_capacity(qs.len());
    let mut acc = quadratic_form_cdf(n, lambda, eta, qs[0]);
    cdfs.push(acc);
    for w in qs.windows(2) {
        acc += adaptive_simpson(&density, w[0], w[1], 1e-12);
        cdfs.push(acc.min(1.0));
    }
    let count = qs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &f) in cdfs.iter().enumerate() {
        d = d
            .max((f - i as f64 / count).abs())
            .max((f - (i + 1) as f64 / count).abs());
    }
    Ok(d)
}

/// Standardized mismatched-ML errors pass a normality check at M = 1e3.
pub fn criterion_9_normality() -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(9, "asymptotic normality");
    for (pair, c_per_sample, name) in [
        (
            pair_gaussian_wrong_mean(1.0, 4.0)?,
            48.0,
            "gaussian-wrong-mean",
        ),
        (
            pair_ar1_power(0.5, 4.0, 8)?,
            {
                let mut tr = 0.0;
                for i in 0..8i32 {
                    for j in 0..8i32 {
                        tr += 0.5f64.powi(2 * (i - j).abs());
                    }
                }
                2.0 * 16.0 * tr / 64.0
            },
            "ar1-power",
        ),
    ] {
        let m = 1000usize;
        let scenario = Scenario {
            pair: pair.clone(),
            estimator: EstimatorSpec::MmlClosed,
            m,
            trials: 10_000,
            master_seed: 0xF1609,
        };
        let stats = run_trials(&scenario)?;
        let theta0 = stats.theta0.scalar_value();
        let scale = (c_per_sample / m as f64).sqrt();
        let mut z: Vec<f64> = stats
            .estimates
            .iter()
            .map(|e| (e[0] - theta0) / scale)
            .collect();
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = ks_distance(&z, &standard_normal_cdf);
        rep.check(
            ks <= 0.02,
            format!("{name}: KS to standard normal {ks:.4} at M=1e3"),
        );
    }
    Ok(rep)
}

/// Run criteria 1 through 9 (criterion 10, byte-identical CLI output, lives
/// with the binary).
pub fn run_all() -> Vec<CriterionReport> {
    type Criterion = fn() -> Result<CriterionReport>;
    let runs: Vec<(u32, Criterion)> = vec![
        (1, criterion_1_fig1_covariance),
        (2, criterion_2_fig2_mse),
        (3, criterion_3_fig3_ar1),
        (4, criterion_4_matched_collapse),
        (5, criterion_5_pseudo_true),
        (6, criterion_6_sandwich_oracle),
        (7, criterion_7_bayes),
        (8, criterion_8_scatter),
        (9, criterion_9_normality),
    ];
    runs.into_iter()
        .map(|(id, f)| {
            f().unwrap_or_else(|e| {
                let mut rep = CriterionReport::new(id, "errored");
                rep.check(false, format!("criterion errored: {e}"));
                rep
            })
        })
        .collect()
}
