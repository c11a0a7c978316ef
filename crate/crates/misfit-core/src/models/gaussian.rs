//! Scalar variance estimation with a misspecified mean.
//!
//! Truth: `x ~ N(mu_bar, sigma2_bar)`. Assumed family: `{N(0, theta)}`,
//! `theta > 0`. Whenever `mu_bar != 0` the truth lies outside the family,
//! and the pseudo-true parameter absorbs the neglected mean:
//! `theta0 = sigma2_bar + mu_bar^2`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::samples::Samples;

use super::{
    AssumedFamily, ClosedForms, Interval, ModelPair, NestedSpec, ParamPoint, PreparedLogLik,
    QuadratureSupport, ReferenceSolution, TrueModel,
};

pub(crate) const VARIANCE_SPACE: &str = "gaussian-variance";

/// `{ N(0, theta) : theta > 0 }` on scalar observations.
#[derive(Debug, Clone, Default)]
pub struct ZeroMeanGaussianFamily;

impl ZeroMeanGaussianFamily {
    fn theta(&self, p: &ParamPoint) -> Result<f64> {
        self.check_point(p)?;
        Ok(p.scalar_value())
    }
}

impl AssumedFamily for ZeroMeanGaussianFamily {
    fn space_id(&self) -> &str {
        VARIANCE_SPACE
    }

    fn dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Vec<Interval> {
        vec![Interval::positive()]
    }

    fn log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Result<f64> {
        let t = self.theta(theta)?;
        Ok(-0.5 * (2.0 * PI * t).ln() - x[0] * x[0] / (2.0 * t))
    }

    fn grad_log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Option<DVector<f64>> {
        let t = theta.scalar_value();
        Some(DVector::from_element(
            1,
            -0.5 / t + x[0] * x[0] / (2.0 * t * t),
        ))
    }

    fn hess_log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Option<DMatrix<f64>> {
        let t = theta.scalar_value();
        Some(DMatrix::from_element(
            1,
            1,
            0.5 / (t * t) - x[0] * x[0] / (t * t * t),
        ))
    }

    fn prepared<'a>(&'a self, data: &Samples) -> Result<Box<dyn PreparedLogLik + 'a>> {
        if data.is_empty() {
            return Err(Error::InsufficientData("empty dataset".into()));
        }
        if data.dim() != 1 {
            return Err(Error::InvalidInput(
                "scalar family expects scalar observations".into(),
            ));
        }
        let sum_sq: f64 = data.as_slice().iter().map(|x| x * x).sum();
        Ok(Box::new(PreparedVariance {
            count: data.count(),
            sum_sq,
        }))
    }
}

/// Sufficient-statistic log-likelihood: only `(M, sum x^2)` matter.
struct PreparedVariance {
    count: usize,
    sum_sq: f64,
}

impl PreparedLogLik for PreparedVariance {
    fn log_lik(&self, theta: &ParamPoint) -> Result<f64> {
        let t = theta.scalar_value();
        if t <= 0.0 {
            return Err(Error::DomainViolation(format!(
                "variance {t} must be positive"
            )));
        }
        Ok(-0.5 * self.count as f64 * (2.0 * PI * t).ln() - self.sum_sq / (2.0 * t))
    }

    fn count(&self) -> usize {
        self.count
    }
}

/// Scalar Gaussian truth `N(mu, sigma2)`.
#[derive(Debug, Clone)]
pub struct ScalarGaussianTruth {
    mu: f64,
    sigma2: f64,
}

impl TrueModel for ScalarGaussianTruth {
    fn obs_dim(&self) -> usize {
        1
    }

    fn sample(&self, seed: u64, count: usize) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd = self.sigma2.sqrt();
        let data: Vec<f64> = (0..count)
            .map(|_| self.mu + sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Samples::from_vec(1, count, data)
    }

    fn true_log_pdf(&self, x: &[f64]) -> Option<f64> {
        let z = x[0] - self.mu;
        Some(-0.5 * (2.0 * PI * self.sigma2).ln() - z * z / (2.0 * self.sigma2))
    }

    fn nested_truth(&self) -> Option<NestedSpec> {
        Some(NestedSpec {
            theta_bar: ParamPoint::scalar(self.sigma2, VARIANCE_SPACE),
            gamma: vec![self.mu],
        })
    }

    fn quadrature_support(&self) -> QuadratureSupport {
        QuadratureSupport::ScalarDensity {
            center: self.mu,
            scale: self.sigma2.sqrt(),
        }
    }
}

/// Build the `gaussian-wrong-mean` pair.
pub fn pair_gaussian_wrong_mean(mu_bar: f64, sigma2_bar: f64) -> Result<ModelPair> {
    if !(sigma2_bar > 0.0) || !sigma2_bar.is_finite() {
        return Err(Error::DomainViolation(format!(
            "sigma2_bar must be positive and finite, got {sigma2_bar}"
        )));
    }
    if !mu_bar.is_finite() {
        return Err(Error::DomainViolation(format!(
            "mu_bar must be finite, got {mu_bar}"
        )));
    }

    let theta0 = sigma2_bar + mu_bar * mu_bar;
    let a = -1.0 / (2.0 * theta0 * theta0);
    let b = (2.0 * sigma2_bar * sigma2_bar + 4.0 * sigma2_bar * mu_bar * mu_bar)
        / (4.0 * theta0.powi(4));
    let reference = ReferenceSolution::new(
        ParamPoint::scalar(theta0, VARIANCE_SPACE),
        DMatrix::from_element(1, 1, a),
        DMatrix::from_element(1, 1, b),
        Some(DVector::from_element(1, -mu_bar * mu_bar)),
        Some(DMatrix::from_element(1, 1, 2.0 * sigma2_bar * sigma2_bar)),
    )?;

    let closed = ClosedForms {
        kld: Some(Arc::new(move |theta: &ParamPoint| {
            let t = theta.scalar_value();
            let ratio = sigma2_bar / t;
            Ok(mu_bar * mu_bar / (2.0 * t) + 0.5 * (ratio - 1.0 - ratio.ln()))
        })),
        crb_per_sample: Some(Arc::new(|theta_bar: &ParamPoint| {
            let v = theta_bar.scalar_value();
            Ok(DMatrix::from_element(1, 1, 2.0 * v * v))
        })),
        mml: Some(Arc::new(|data: &Samples| {
            if data.is_empty() {
                return Err(Error::InsufficientData("empty dataset".into()));
            }
            let mean_sq = data.as_slice().iter().map(|x| x * x).sum::<f64>() / data.count() as f64;
            if !(mean_sq > 0.0) {
                return Err(Error::DegenerateSample(
                    "all observations are zero; the variance estimate leaves the domain".into(),
                ));
            }
            Ok(DVector::from_element(1, mean_sq))
        })),
    };

    let mut hyper = BTreeMap::new();
    hyper.insert("mu_bar".to_string(), mu_bar);
    hyper.insert("sigma2_bar".to_string(), sigma2_bar);

    ModelPair::new(
        "gaussian-wrong-mean",
        Arc::new(ScalarGaussianTruth {
            mu: mu_bar,
            sigma2: sigma2_bar,
        }),
        Arc::new(ZeroMeanGaussianFamily),
        Some(reference),
        closed,
        hyper,
    )
}
