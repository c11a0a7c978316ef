//! Statistical power estimation on correlated Gaussian vectors.
//!
//! Truth: `x ~ N(0, sigma2_bar * Sigma)` with `[Sigma]_ij = rho^|i-j|`
//! (AR(1) correlation, `tr(Sigma) = N`). Assumed family:
//! `{N(0, theta I_N)}`, i.e. the user ignores the correlation structure.
//! The pseudo-true parameter is the true power `sigma2_bar` for every rho,
//! so the mismatched ML estimator stays consistent; only its error
//! covariance degrades, by the factor `tr(Sigma^2)/N`.

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

pub(crate) const POWER_SPACE: &str = "gaussian-power";

/// AR(1) Toeplitz correlation matrix `rho^|i-j|`. Unit diagonal, so the
/// trace is exactly `n`; positive definite for `|rho| < 1`.
pub fn ar1_correlation(n: usize, rho: f64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::DomainViolation(format!(
            "|rho| must be below 1, got {rho}"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        rho.powi((i as i32 - j as i32).abs())
    }))
}

/// `{ N(0, theta I_N) : theta > 0 }`.
#[derive(Debug, Clone)]
pub struct IsotropicGaussianFamily {
    n: usize,
}

impl IsotropicGaussianFamily {
    pub fn new(n: usize) -> Self {
        IsotropicGaussianFamily { n }
    }
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl AssumedFamily for IsotropicGaussianFamily {
    fn space_id(&self) -> &str {
        POWER_SPACE
    }

    fn dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Vec<Interval> {
        vec![Interval::positive()]
    }

    fn log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Result<f64> {
        self.check_point(theta)?;
        let t = theta.scalar_value();
        Ok(-0.5 * self.n as f64 * (2.0 * PI * t).ln() - sq_norm(x) / (2.0 * t))
    }

    fn grad_log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Option<DVector<f64>> {
        let t = theta.scalar_value();
        let q = sq_norm(x);
        Some(DVector::from_element(
            1,
            -0.5 * self.n as f64 / t + q / (2.0 * t * t),
        ))
    }

    fn hess_log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Option<DMatrix<f64>> {
        let t = theta.scalar_value();
        let q = sq_norm(x);
        Some(DMatrix::from_element(
            1,
            1,
            0.5 * self.n as f64 / (t * t) - q / (t * t * t),
        ))
    }

    fn prepared<'a>(&'a self, data: &Samples) -> Result<Box<dyn PreparedLogLik + 'a>> {
        if data.is_empty() {
            return Err(Error::InsufficientData("empty dataset".into()));
        }
        if data.dim() != self.n {
            return Err(Error::InvalidInput(format!(
                "family expects {}-dimensional observations, got {}",
                self.n,
                data.dim()
            )));
        }
        let total_sq: f64 = data.as_slice().iter().map(|x| x * x).sum();
        Ok(Box::new(PreparedPower {
            count: data.count(),
            n: self.n,
            total_sq,
        }))
    }
}

struct PreparedPower {
    count: usize,
    n: usize,
    total_sq: f64,
}

impl PreparedLogLik for PreparedPower {
    fn log_lik(&self, theta: &ParamPoint) -> Result<f64> {
        let t = theta.scalar_value();
        if t <= 0.0 {
            return Err(Error::DomainViolation(format!(
                "power {t} must be positive"
            )));
        }
        Ok(-0.5 * (self.count * self.n) as f64 * (2.0 * PI * t).ln() - self.total_sq / (2.0 * t))
    }

    fn count(&self) -> usize {
        self.count
    }
}

/// Zero-mean Gaussian vector truth with covariance `sigma2 * Sigma`.
#[derive(Debug, Clone)]
pub struct Ar1GaussianTruth {
    n: usize,
    rho: f64,
    sigma2: f64,
    /// Cholesky factor of the full covariance.
    chol: DMatrix<f64>,
    cov: DMatrix<f64>,
    precision: DMatrix<f64>,
    ln_det_cov: f64,
}

impl Ar1GaussianTruth {
    fn new(rho: f64, sigma2: f64, n: usize) -> Result<Self> {
        let corr = ar1_correlation(n, rho)?;
        let cov = sigma2 * &corr;
        let chol_f = cov.clone().cholesky().ok_or_else(|| {
            Error::Numeric("AR(1) covariance failed the Cholesky factorization".into())
        })?;
        let ln_det_cov = 2.0 * chol_f.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let precision = chol_f.inverse();
        Ok(Ar1GaussianTruth {
            n,
            rho,
            sigma2,
            chol: chol_f.unpack(),
            cov,
            precision,
            ln_det_cov,
        })
    }
}

impl TrueModel for Ar1GaussianTruth {
    fn obs_dim(&self) -> usize {
        self.n
    }

    fn sample(&self, seed: u64, count: usize) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Samples::zeros(self.n, count);
        let mut z = vec![0.0; self.n];
        for m in 0..count {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let obs = out.obs_mut(m);
            // x = L z, exploiting the lower-triangular factor.
            for i in 0..self.n {
                let mut acc = 0.0;
                for j in 0..=i {
                    acc += self.chol[(i, j)] * z[j];
                }
                obs[i] = acc;
            }
        }
        out
    }

    fn true_log_pdf(&self, x: &[f64]) -> Option<f64> {
        let v = DVector::from_column_slice(x);
        let q = v.dot(&(&self.precision * &v));
        Some(-0.5 * (self.n as f64 * (2.0 * PI).ln() + self.ln_det_cov + q))
    }

    fn nested_truth(&self) -> Option<NestedSpec> {
        Some(NestedSpec {
            theta_bar: ParamPoint::scalar(self.sigma2, POWER_SPACE),
            gamma: vec![self.rho],
        })
    }

    fn quadrature_support(&self) -> QuadratureSupport {
        QuadratureSupport::GaussianVector {
            cov: self.cov.clone(),
        }
    }
}

/// Build the `ar1-power` pair.
pub fn pair_ar1_power(rho: f64, sigma2_bar: f64, n: usize) -> Result<ModelPair> {
    if !(sigma2_bar > 0.0) || !sigma2_bar.is_finite() {
        return Err(Error::DomainViolation(format!(
            "sigma2_bar must be positive and finite, got {sigma2_bar}"
        )));
    }
    let truth = Ar1GaussianTruth::new(rho, sigma2_bar, n)?;
    let corr = ar1_correlation(n, rho)?;
    // tr(Sigma^2) = ||Sigma||_F^2 for symmetric Sigma.
    let tr_sigma_sq: f64 = corr.iter().map(|v| v * v).sum();
    let nf = n as f64;

    let a = -nf / (2.0 * sigma2_bar * sigma2_bar);
    let b = tr_sigma_sq / (2.0 * sigma2_bar * sigma2_bar);
    let reference = ReferenceSolution::new(
        ParamPoint::scalar(sigma2_bar, POWER_SPACE),
        DMatrix::from_element(1, 1, a),
        DMatrix::from_element(1, 1, b),
        Some(DVector::from_element(1, 0.0)),
        Some(DMatrix::from_element(
            1,
            1,
            2.0 * sigma2_bar * sigma2_bar / nf,
        )),
    )?;

    let ln_det_cov = truth.ln_det_cov;
    let tr_corr = corr.trace();
    let closed = ClosedForms {
        kld: Some(Arc::new(move |theta: &ParamPoint| {
            let t = theta.scalar_value();
            // KLD between N(0, sigma2 Sigma) and N(0, theta I):
            // (tr(sigma2 Sigma)/theta - N + ln det(theta I) - ln det(sigma2 Sigma)) / 2.
            Ok(0.5 * (sigma2_bar * tr_corr / t - nf + nf * t.ln() - ln_det_cov))
        })),
        crb_per_sample: Some(Arc::new(move |theta_bar: &ParamPoint| {
            let v = theta_bar.scalar_value();
            Ok(DMatrix::from_element(1, 1, 2.0 * v * v / nf))
        })),
        mml: Some(Arc::new(move |data: &Samples| {
            if data.is_empty() {
                return Err(Error::InsufficientData("empty dataset".into()));
            }
            let total: f64 = data.as_slice().iter().map(|x| x * x).sum();
            if !(total > 0.0) {
                return Err(Error::DegenerateSample(
                    "all observations are zero; the power estimate leaves the domain".into(),
                ));
            }
            Ok(DVector::from_element(1, total / (data.count() as f64 * nf)))
        })),
    };

    let mut hyper = BTreeMap::new();
    hyper.insert("rho".to_string(), rho);
    hyper.insert("sigma2_bar".to_string(), sigma2_bar);
    hyper.insert("n".to_string(), n as f64);

    ModelPair::new(
        "ar1-power",
        Arc::new(truth),
        Arc::new(IsotropicGaussianFamily::new(n)),
        Some(reference),
        closed,
        hyper,
    )
}
