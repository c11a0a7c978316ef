//! Seeded Monte Carlo experiment engine.
//!
//! Repeated estimation trials with counter-derived per-trial seeds, empirical
//! covariance/MSE against the pseudo-true and true parameters, bound
//! comparison, parameter sweeps and consistency curves. Results are a pure
//! function of `(scenario, master_seed)`: trial `t` always consumes the same
//! stream and aggregation runs in trial order, so the worker count never
//! changes a single output bit.

mod consistency;
mod sweep;

pub use consistency::{consistency_curve, ConsistencyRow, ConsistencyTable};
pub use sweep::{sweep, SweepRow, SweepTable};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{
    mb_estimate, posterior_compute, FlatPrior, InverseGammaPrior, Prior, SquaredLoss,
};
use crate::bounds::pseudo_true;
use crate::error::{Error, Result};
use crate::estimators::{mml_closed, mml_fit};
use crate::models::{Budget, EvalMethod, ModelPair, ParamPoint};
use crate::seed::{derive_seed, domain};

/// Prior selection for Bayes scenarios, in declarative form so it can be
/// echoed into metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSpec {
    InvGamma { shape: f64, scale: f64 },
    Flat { lo: f64, hi: f64 },
}

impl PriorSpec {
    pub fn build(&self) -> Result<Box<dyn Prior>> {
        match self {
            PriorSpec::InvGamma { shape, scale } => {
                Ok(Box::new(InverseGammaPrior::new(*shape, *scale)?))
            }
            PriorSpec::Flat { lo, hi } => Ok(Box::new(FlatPrior::new(*lo, *hi)?)),
        }
    }
}

/// Estimator driven by the harness in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EstimatorSpec {
    /// Closed-form mismatched ML (available for the scalar built-ins).
    MmlClosed,
    /// Numeric mismatched ML.
    MmlNumeric,
    /// Mismatched Bayes point estimate under squared-error loss.
    MbSquared { prior: PriorSpec },
}

/// A repeated-trial experiment description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub pair: ModelPair,
    pub estimator: EstimatorSpec,
    /// Observations per trial.
    pub m: usize,
    pub trials: usize,
    pub master_seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::InvalidInput("need at least 2 trials".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidInput(
                "need at least 1 observation per trial".into(),
            ));
        }
        Ok(())
    }
}

/// Trial-averaged second moments of an estimator around the pseudo-true
/// and true parameters.
#[derive(Debug, Clone)]
pub struct TrialStats {
    pub theta0: ParamPoint,
    pub theta_bar: Option<ParamPoint>,
    /// Average of `(est - theta0)(est - theta0)'`.
    pub emp_cov: DMatrix<f64>,
    /// Average of `(est - theta_bar)(est - theta_bar)'`, when nested.
    pub emp_mse: Option<DMatrix<f64>>,
    pub bias: DVector<f64>,
    pub bias_se: DVector<f64>,
    /// Entrywise standard error of `emp_cov`.
    pub cov_se: DMatrix<f64>,
    pub trials_done: usize,
    pub failures: usize,
    /// Per-trial estimates in trial order (failed trials omitted).
    pub estimates: Vec<DVector<f64>>,
}

/// Resolve the pseudo-true parameter: exact reference when the pair has
/// one, otherwise the quadrature solver (scalar families only).
pub fn resolve_theta0(pair: &ModelPair, budget: &Budget) -> Result<ParamPoint> {
    match pair.reference() {
        Ok(r) => Ok(r.theta0.clone()),
        Err(err) => {
            if pair.family().dim() != 1 {
                return Err(err);
            }
            let init = pair.family().point(&[1.0]);
            pseudo_true(pair, &init, EvalMethod::Quadrature, budget)
        }
    }
}

fn one_estimate(scenario: &Scenario, trial: u64) -> Result<DVector<f64>> {
    let data = scenario.pair.truth().sample(
        derive_seed(scenario.master_seed, domain::TRIAL, trial),
        scenario.m,
    );
    let values = match &scenario.estimator {
        EstimatorSpec::MmlClosed => mml_closed(&scenario.pair, &data)?
            .theta_hat
            .values()
            .clone(),
        EstimatorSpec::MmlNumeric => {
            let init = scenario.pair.family().point(&[1.0]);
            mml_fit(scenario.pair.family(), &data, &init)?
                .theta_hat
                .values()
                .clone()
        }
        EstimatorSpec::MbSquared { prior } => {
            let prior = prior.build()?;
            let grid = posterior_compute(scenario.pair.family(), prior.as_ref(), &data)?;
            mb_estimate(&grid, &SquaredLoss)?.values().clone()
        }
    };
    Ok(values)
}

/// Run all trials of a scenario and aggregate deterministically.
pub fn run_trials(scenario: &Scenario) -> Result<TrialStats> {
    scenario.validate()?;
    let theta0 = resolve_theta0(&scenario.pair, &Budget::default())?;
    let theta_bar = scenario.pair.nested().map(|n| n.theta_bar);
    let d = theta0.dim();

    let outcomes: Vec<Result<DVector<f64>>> = (0..scenario.trials as u64)
        .into_par_iter()
        .map(|t| one_estimate(scenario, t))
        .collect();

    let mut estimates = Vec::with_capacity(scenario.trials);
    let mut failures = 0usize;
    for o in outcomes {
        match o {
            Ok(v) => estimates.push(v),
            Err(_) => failures += 1,
        }
    }
    if failures * 100 > scenario.trials {
        return Err(Error::Numeric(format!(
            "{failures} of {} trials failed (more than 1%)",
            scenario.trials
        )));
    }
    if estimates.len() < 2 {
        return Err(Error::Numeric("fewer than 2 successful trials".into()));
    }

    let n = estimates.len() as f64;
    let t0 = theta0.values();
    let mut mean = DVector::zeros(d);
    let mut cov = DMatrix::zeros(d, d);
    let mut cov_sq = DMatrix::zeros(d, d);
    for e in &estimates {
        mean += e;
        let dev = e - t0;
        let outer = &dev * dev.transpose();
        cov += &outer;
        cov_sq += outer.component_mul(&outer);
    }
    mean /= n;
    cov /= n;
    let cov_se = cov_sq.zip_map(&cov, |sq, m| (((sq / n - m * m).max(0.0)) / n).sqrt());

    let mut bias_var = DVector::zeros(d);
    for e in &estimates {
        let dev = e - &mean;
        bias_var += dev.component_mul(&dev);
    }
    bias_var /= n - 1.0;
    let bias_se = bias_var.map(|v| (v / n).sqrt());

    let emp_mse = theta_bar.as_ref().map(|tb| {
        let tbv = tb.values();
        let mut mse = DMatrix::zeros(d, d);
        for e in &estimates {
            let dev = e - tbv;
            mse += &dev * dev.transpose();
        }
        mse / n
    });

    Ok(TrialStats {
        theta0: theta0.clone(),
        theta_bar,
        emp_cov: cov,
        emp_mse,
        bias: mean - t0,
        bias_se,
        cov_se,
        trials_done: estimates.len(),
        failures,
        estimates,
    })
}
