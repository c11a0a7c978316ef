//! Model pairs: a true data-generating model bound to an assumed (possibly
//! misspecified) parametric family.
//!
//! The toolkit ships three built-in pairs:
//!
//! * `gaussian-wrong-mean`: scalar Gaussian data with nonzero mean, fitted
//!   by a zero-mean Gaussian variance family;
//! * `ar1-power`: zero-mean Gaussian vectors with AR(1) correlation, fitted
//!   by an isotropic Gaussian power family;
//! * `complex-t-scatter`: complex t-distributed vectors, fitted by a
//!   complex Gaussian with trace-normalized scatter.
//!
//! Each pair carries whatever closed forms exist for it (pseudo-true
//! parameter, expected-Hessian/outer-product matrices, KLD, matched CRB,
//! mismatched ML estimator), so numeric routes can always be checked against
//! an exact reference.

mod ar1;
mod complex_t;
mod gaussian;

pub use ar1::{ar1_correlation, pair_ar1_power, IsotropicGaussianFamily};
pub use complex_t::{
    pair_complex_t_scatter, quadratic_form_cdf, ComplexGaussianFamily, ComplexTTruth,
};
pub use gaussian::{pair_gaussian_wrong_mean, ZeroMeanGaussianFamily};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::diff::symmetrize;
use crate::numeric::mc;
use crate::numeric::quadform::QuadFormDist;
use crate::numeric::quadrature::ExpectationGrid;
use crate::samples::Samples;

/// Open interval constraint on one parameter component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn positive() -> Self {
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn all() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x > self.lo && x < self.hi
    }
}

/// A point of a parameter space, tagged with the identifier of the space it
/// lives in so that points from different families cannot be mixed up.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    values: DVector<f64>,
    space: Arc<str>,
}

impl ParamPoint {
    pub fn new(values: DVector<f64>, space: &str) -> Self {
        ParamPoint {
            values,
            space: Arc::from(space),
        }
    }

    pub fn from_slice(values: &[f64], space: &str) -> Self {
        Self::new(DVector::from_column_slice(values), space)
    }

    pub fn scalar(value: f64, space: &str) -> Self {
        Self::new(DVector::from_element(1, value), space)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn space_id(&self) -> &str {
        &self.space
    }

    /// The value of a one-dimensional point.
    pub fn scalar_value(&self) -> f64 {
        assert_eq!(self.values.len(), 1, "scalar_value on non-scalar point");
        self.values[0]
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]@{}", vals.join(", "), self.space)
    }
}

/// Evaluated log-likelihood surface for a fixed dataset. Families override
/// the generic implementation with sufficient statistics where they exist,
/// which turns per-evaluation cost from O(M) into O(1).
pub trait PreparedLogLik: Send + Sync {
    /// `sum_m ln f(x_m | theta)`.
    fn log_lik(&self, theta: &ParamPoint) -> Result<f64>;
    fn count(&self) -> usize;
}

/// Generic prepared log-likelihood: re-walks the data on every evaluation.
pub struct GenericPrepared<'a> {
    family: &'a dyn AssumedFamily,
    data: Samples,
}

impl<'a> GenericPrepared<'a> {
    pub fn new(family: &'a dyn AssumedFamily, data: &Samples) -> Self {
        GenericPrepared {
            family,
            data: data.clone(),
        }
    }
}

impl PreparedLogLik for GenericPrepared<'_> {
    fn log_lik(&self, theta: &ParamPoint) -> Result<f64> {
        let mut acc = 0.0;
        for m in 0..self.data.count() {
            acc += self.family.log_pdf(theta, self.data.obs(m))?;
        }
        Ok(acc)
    }

    fn count(&self) -> usize {
        self.data.count()
    }
}

/// The assumed parametric family `f(x | theta)`, `theta` in an open box of
/// R^d. Implementations must be immutable and shareable across threads.
pub trait AssumedFamily: Send + Sync {
    /// Identifier of the parameter space Theta.
    fn space_id(&self) -> &str;

    /// Parameter dimension d.
    fn dim(&self) -> usize;

    /// Observation dimension (complex models count interleaved reals).
    fn obs_dim(&self) -> usize;

    /// Per-component domain constraints of Theta.
    fn domain(&self) -> Vec<Interval>;

    /// `ln f(x | theta)`. Must reject parameters outside the domain.
    fn log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Result<f64>;

    /// Analytic gradient in theta, where available.
    fn grad_log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Option<DVector<f64>> {
        let _ = (theta, x);
        None
    }

    /// Analytic Hessian in theta, where available.
    fn hess_log_pdf(&self, theta: &ParamPoint, x: &[f64]) -> Option<DMatrix<f64>> {
        let _ = (theta, x);
        None
    }

    /// Freeze a dataset into an evaluable log-likelihood.
    fn prepared<'a>(&'a self, data: &Samples) -> Result<Box<dyn PreparedLogLik + 'a>>;

    /// Validate that a point belongs to this family's space.
    fn check_point(&self, theta: &ParamPoint) -> Result<()> {
        if theta.space_id() != self.space_id() {
            return Err(Error::InvalidInput(format!(
                "parameter from space '{}' used with family '{}'",
                theta.space_id(),
                self.space_id()
            )));
        }
        if theta.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "parameter dimension {} does not match family dimension {}",
                theta.dim(),
                self.dim()
            )));
        }
        for (i, (v, iv)) in theta.as_slice().iter().zip(self.domain()).enumerate() {
            if !iv.contains(*v) {
                return Err(Error::DomainViolation(format!(
                    "component {i} = {v} outside ({}, {})",
                    iv.lo, iv.hi
                )));
            }
        }
        Ok(())
    }

    /// Construct a point of this family's space (unchecked).
    fn point(&self, values: &[f64]) -> ParamPoint {
        ParamPoint::from_slice(values, self.space_id())
    }
}

/// Deterministic-quadrature capability of a true model.
#[derive(Debug, Clone)]
pub enum QuadratureSupport {
    /// Scalar observations with an evaluable density: any integrand.
    ScalarDensity { center: f64, scale: f64 },
    /// Zero-mean Gaussian vector observations: expectations of integrands
    /// that depend on x only through `x^T x` reduce to one-dimensional
    /// quadratic-form laws.
    GaussianVector { cov: DMatrix<f64> },
    /// No deterministic route; only sampling.
    None,
}

/// The true data-generating model `p(x)`.
pub trait TrueModel: Send + Sync {
    fn obs_dim(&self) -> usize;

    /// Draw `count` i.i.d. observations. Deterministic in `seed`.
    fn sample(&self, seed: u64, count: usize) -> Samples;

    /// `ln p(x)`, when the density is known.
    fn true_log_pdf(&self, x: &[f64]) -> Option<f64> {
        let _ = x;
        None
    }

    /// True sub-vector and nuisance components when the assumed space is
    /// nested inside the true one.
    fn nested_truth(&self) -> Option<NestedSpec> {
        None
    }

    fn quadrature_support(&self) -> QuadratureSupport {
        QuadratureSupport::None
    }
}

/// True parameter sub-vector living in the assumed space, plus the nuisance
/// components that the assumed family does not model.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedSpec {
    pub theta_bar: ParamPoint,
    pub gamma: Vec<f64>,
}

/// Exact reference quantities for a built-in pair.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub theta0: ParamPoint,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub r: Option<DVector<f64>>,
    pub crb_per_sample: Option<DMatrix<f64>>,
}

impl ReferenceSolution {
    pub fn new(
        theta0: ParamPoint,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        r: Option<DVector<f64>>,
        crb_per_sample: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let d = theta0.dim();
        if a.nrows() != d || a.ncols() != d || b.nrows() != d || b.ncols() != d {
            return Err(Error::InvalidInput(
                "reference matrices must be d x d".into(),
            ));
        }
        if (&a - a.transpose()).norm() > 1e-10 * a.norm().max(1.0) {
            return Err(Error::InvalidInput("reference A must be symmetric".into()));
        }
        if a.clone().lu().try_inverse().is_none() {
            return Err(Error::SingularHessian("reference A is singular".into()));
        }
        if (&b - b.transpose()).norm() > 1e-10 * b.norm().max(1.0) {
            return Err(Error::InvalidInput("reference B must be symmetric".into()));
        }
        let b_scale = b.norm().max(f64::MIN_POSITIVE);
        if b.clone()
            .symmetric_eigenvalues()
            .iter()
            .any(|&e| e < -1e-9 * b_scale)
        {
            return Err(Error::InvalidInput(
                "reference B must be positive semidefinite".into(),
            ));
        }
        Ok(ReferenceSolution {
            theta0,
            a,
            b,
            r,
            crb_per_sample,
        })
    }

    /// Per-sample sandwich `A^-1 B A^-1`, recomputed on demand so it can
    /// never drift from the stored A and B.
    pub fn mcrb_per_sample(&self) -> DMatrix<f64> {
        let a_inv = self
            .a
            .clone()
            .lu()
            .try_inverse()
            .expect("checked at construction");
        symmetrize(&(&a_inv * &self.b * &a_inv))
    }
}

/// Scalar closed form evaluated at a parameter point.
pub type ParamFn = Arc<dyn Fn(&ParamPoint) -> Result<f64> + Send + Sync>;
/// Matrix closed form evaluated at a parameter point.
pub type ParamMatrixFn = Arc<dyn Fn(&ParamPoint) -> Result<DMatrix<f64>> + Send + Sync>;
/// Estimator closed form evaluated on a dataset.
pub type DataVectorFn = Arc<dyn Fn(&Samples) -> Result<DVector<f64>> + Send + Sync>;

/// Closed-form hooks a built-in pair may provide.
#[derive(Clone, Default)]
pub struct ClosedForms {
    /// KLD from the truth to the family member at theta.
    pub kld: Option<ParamFn>,
    /// Matched (true-model) CRB per sample in the shared parameter.
    pub crb_per_sample: Option<ParamMatrixFn>,
    /// Closed-form mismatched ML estimator.
    pub mml: Option<DataVectorFn>,
}

impl fmt::Debug for ClosedForms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedForms")
            .field("kld", &self.kld.is_some())
            .field("crb_per_sample", &self.crb_per_sample.is_some())
            .field("mml", &self.mml.is_some())
            .finish()
    }
}

/// A true model bound to an assumed family, plus whatever exact reference
/// material exists for the combination.
#[derive(Clone)]
pub struct ModelPair {
    id: String,
    truth: Arc<dyn TrueModel>,
    family: Arc<dyn AssumedFamily>,
    reference: Option<ReferenceSolution>,
    closed: ClosedForms,
    hyper: BTreeMap<String, f64>,
}

impl fmt::Debug for ModelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelPair")
            .field("id", &self.id)
            .field("hyper", &self.hyper)
            .finish()
    }
}

impl ModelPair {
    pub fn new(
        id: &str,
        truth: Arc<dyn TrueModel>,
        family: Arc<dyn AssumedFamily>,
        reference: Option<ReferenceSolution>,
        closed: ClosedForms,
        hyper: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if truth.obs_dim() != family.obs_dim() {
            return Err(Error::InvalidInput(format!(
                "observation shapes disagree: truth {} vs family {}",
                truth.obs_dim(),
                family.obs_dim()
            )));
        }
        Ok(ModelPair {
            id: id.to_string(),
            truth,
            family,
            reference,
            closed,
            hyper,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn truth(&self) -> &dyn TrueModel {
        self.truth.as_ref()
    }

    pub fn family(&self) -> &dyn AssumedFamily {
        self.family.as_ref()
    }

    pub fn family_arc(&self) -> Arc<dyn AssumedFamily> {
        Arc::clone(&self.family)
    }

    pub fn hyper(&self) -> &BTreeMap<String, f64> {
        &self.hyper
    }

    pub fn nested(&self) -> Option<NestedSpec> {
        self.truth.nested_truth()
    }

    /// Exact reference values; a capability error when the pair has none.
    pub fn reference(&self) -> Result<&ReferenceSolution> {
        self.reference.as_ref().ok_or_else(|| {
            Error::Capability(format!(
                "no closed-form reference solution for '{}'",
                self.id
            ))
        })
    }

    pub fn closed_forms(&self) -> &ClosedForms {
        &self.closed
    }

    pub fn kld_closed(&self, theta: &ParamPoint) -> Result<f64> {
        self.family.check_point(theta)?;
        match &self.closed.kld {
            Some(f) => f(theta),
            None => Err(Error::Capability(format!(
                "no closed-form KLD for '{}'",
                self.id
            ))),
        }
    }

    pub fn crb_closed(&self, theta_bar: &ParamPoint) -> Result<DMatrix<f64>> {
        match &self.closed.crb_per_sample {
            Some(f) => f(theta_bar),
            None => Err(Error::Capability(format!(
                "no matched CRB benchmark for '{}'",
                self.id
            ))),
        }
    }

    pub fn mml_closed_values(&self, data: &Samples) -> Result<DVector<f64>> {
        match &self.closed.mml {
            Some(f) => f(data),
            None => Err(Error::Capability(format!(
                "no closed-form mismatched ML estimator for '{}'",
                self.id
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Structured-text configuration
// ---------------------------------------------------------------------------

/// Scatter-matrix specification for the complex models.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScatterSpec {
    /// Identity scatter (already trace-normalized).
    Identity,
    /// AR(1) Toeplitz correlation `rho^|i-j|`.
    Ar1 { rho: f64 },
}

/// Declarative model-pair description: an id plus named hyperparameters.
/// Unknown keys are rejected at parse time; irrelevant-but-present keys are
/// rejected at build time.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scatter: Option<ScatterSpec>,
}

impl ModelSpec {
    /// Set a named sweepable hyperparameter.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "mu_bar" => self.mu_bar = Some(value),
            "sigma2_bar" => self.sigma2_bar = Some(value),
            "rho" => self.rho = Some(value),
            "lambda" => self.lambda = Some(value),
            "eta" => self.eta = Some(value),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "'{name}' is not a sweepable hyperparameter \
                     (expected one of mu_bar, sigma2_bar, rho, lambda, eta)"
                )))
            }
        }
        Ok(())
    }
}

fn require(v: Option<f64>, key: &str, id: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidInput(format!("model '{id}' requires hyperparameter '{key}'")))
}

fn forbid(absent: &[(&str, bool)], id: &str) -> Result<()> {
    for (key, present) in absent {
        if *present {
            return Err(Error::InvalidInput(format!(
                "hyperparameter '{key}' does not apply to model '{id}'"
            )));
        }
    }
    Ok(())
}

/// Construct a built-in model pair from its declarative description.
pub fn build_pair(spec: &ModelSpec) -> Result<ModelPair> {
    match spec.id.as_str() {
        "gaussian-wrong-mean" => {
            forbid(
                &[
                    ("rho", spec.rho.is_some()),
                    ("n", spec.n.is_some()),
                    ("lambda", spec.lambda.is_some()),
                    ("eta", spec.eta.is_some()),
                    ("scatter", spec.scatter.is_some()),
                ],
                &spec.id,
            )?;
            pair_gaussian_wrong_mean(
                require(spec.mu_bar, "mu_bar", &spec.id)?,
                require(spec.sigma2_bar, "sigma2_bar", &spec.id)?,
            )
        }
        "ar1-power" => {
            forbid(
                &[
                    ("mu_bar", spec.mu_bar.is_some()),
                    ("lambda", spec.lambda.is_some()),
                    ("eta", spec.eta.is_some()),
                    ("scatter", spec.scatter.is_some()),
                ],
                &spec.id,
            )?;
            let n = spec
                .n
                .ok_or_else(|| Error::InvalidInput("model 'ar1-power' requires 'n'".into()))?;
            pair_ar1_power(
                require(spec.rho, "rho", &spec.id)?,
                require(spec.sigma2_bar, "sigma2_bar", &spec.id)?,
                n,
            )
        }
        "complex-t-scatter" => {
            forbid(
                &[
                    ("mu_bar", spec.mu_bar.is_some()),
                    ("sigma2_bar", spec.sigma2_bar.is_some()),
                    ("rho", spec.rho.is_some()),
                ],
                &spec.id,
            )?;
            let n = spec.n.ok_or_else(|| {
                Error::InvalidInput("model 'complex-t-scatter' requires 'n'".into())
            })?;
            pair_complex_t_scatter(
                require(spec.lambda, "lambda", &spec.id)?,
                require(spec.eta, "eta", &spec.id)?,
                n,
                spec.scatter.clone().unwrap_or(ScatterSpec::Identity),
            )
        }
        other => Err(Error::InvalidInput(format!(
            "unknown model id '{other}' (expected gaussian-wrong-mean, ar1-power, \
             or complex-t-scatter)"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Deterministic expectations over the true model
// ---------------------------------------------------------------------------

/// Frozen quadrature operator over the true model's observation law.
pub struct TruthQuadrature {
    inner: QuadInner,
    /// Mass captured by the truncated grid; `1 - mass` is the truncation
    /// defect reported as method error.
    mass: f64,
    support: (f64, f64),
}

enum QuadInner {
    Scalar {
        grid: ExpectationGrid,
    },
    /// Grid over `q = x^T x`; integrands are evaluated on the spherical
    /// representative `x = (sqrt(q), 0, ..., 0)`.
    Spherical {
        grid: ExpectationGrid,
        dim: usize,
        cov: DMatrix<f64>,
    },
}

impl TruthQuadrature {
    /// Build the operator, or report that this model has no deterministic
    /// route.
    pub fn build(truth: &dyn TrueModel, tol: f64) -> Result<Self> {
        match truth.quadrature_support() {
            QuadratureSupport::ScalarDensity { center, scale } => {
                let lo = center - 14.0 * scale;
                let hi = center + 14.0 * scale;
                let density = |x: f64| truth.true_log_pdf(&[x]).map(f64::exp).unwrap_or(0.0);
                let grid = ExpectationGrid::build(&density, lo, hi, tol);
                let mass = grid.mass();
                let support = grid.support();
                Ok(TruthQuadrature {
                    inner: QuadInner::Scalar { grid },
                    mass,
                    support,
                })
            }
            QuadratureSupport::GaussianVector { cov } => {
                let eig = nalgebra::SymmetricEigen::new(cov.clone());
                let lambdas: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
                let dist = QuadFormDist::new(&lambdas)?;
                let grid = dist.expectation_grid(tol);
                let mass = grid.mass();
                let support = grid.support();
                Ok(TruthQuadrature {
                    inner: QuadInner::Spherical {
                        grid,
                        dim: cov.nrows(),
                        cov,
                    },
                    mass,
                    support,
                })
            }
            QuadratureSupport::None => Err(Error::Capability(
                "true model supports no deterministic quadrature (use monte-carlo)".into(),
            )),
        }
    }

    /// Expectation of an observation integrand.
    ///
    /// In the spherical reduction this is exact only for integrands that
    /// depend on the observation through `x^T x`; that covers every assumed
    /// family paired with such a model in this crate.
    pub fn expect_obs(&self, phi: &dyn Fn(&[f64]) -> f64) -> f64 {
        match &self.inner {
            QuadInner::Scalar { grid } => grid.expect(&|x| phi(&[x])),
            QuadInner::Spherical { grid, dim, .. } => {
                let mut rep = vec![0.0; *dim];
                let mut acc = 0.0;
                for (&q, &w) in grid.nodes().iter().zip(grid.weights()) {
                    rep[0] = q.max(0.0).sqrt();
                    acc += w * phi(&rep);
                }
                acc
            }
        }
    }

    /// Expectation of the true log-density, used by the KLD entropy term.
    pub fn expect_true_logpdf(&self, truth: &dyn TrueModel) -> Result<f64> {
        match &self.inner {
            QuadInner::Scalar { grid } => {
                let ok = truth.true_log_pdf(&[grid.nodes()[0]]).is_some();
                if !ok {
                    return Err(Error::Capability("true model has no density".into()));
                }
                Ok(grid.expect(&|x| truth.true_log_pdf(&[x]).unwrap()))
            }
            QuadInner::Spherical { cov, dim, .. } => {
                // ln p(x) = -1/2 [ n ln(2 pi) + ln det(cov) + x^T cov^-1 x ];
                // the quadratic form has the chi-square_n law under the truth.
                let n = *dim;
                let chol = cov.clone().cholesky().ok_or_else(|| {
                    Error::Numeric("true covariance is not positive definite".into())
                })?;
                let ln_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                let chi = QuadFormDist::new(&vec![1.0; n])?;
                let e_q = chi.expectation_grid(1e-12).expect(&|t| t);
                Ok(-0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + e_q))
            }
        }
    }

    /// Density mass captured by the truncated grid.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Truncated integration support, recorded in output metadata.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Evaluation route for expectations, bounds and the pseudo-true parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    /// Exact expressions carried by the built-in pair.
    ClosedForm,
    /// Deterministic quadrature over the true observation law.
    Quadrature,
    /// Seeded Monte Carlo averaging.
    MonteCarlo,
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EvalMethod::ClosedForm => "closed-form",
            EvalMethod::Quadrature => "quadrature",
            EvalMethod::MonteCarlo => "monte-carlo",
        };
        f.write_str(s)
    }
}

/// Resource limits and seeds for the numeric routes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Budget {
    /// Monte Carlo draw budget for one expectation.
    pub mc_draws: usize,
    /// Quadrature panel tolerance.
    pub quad_tol: f64,
    /// Master seed for Monte Carlo routes.
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            mc_draws: 1_000_000,
            quad_tol: 1e-11,
            seed: 0x4d49_5346,
        }
    }
}

/// A numeric value together with how it was produced and how wrong it may
/// plausibly be (standard error for Monte Carlo, truncation defect for
/// quadrature, zero for closed forms).
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub value: f64,
    pub method: EvalMethod,
    pub method_error: f64,
}

/// `ln f(x | theta)` for a validated parameter point.
pub fn log_pdf_assumed(family: &dyn AssumedFamily, theta: &ParamPoint, x: &[f64]) -> Result<f64> {
    family.check_point(theta)?;
    family.log_pdf(theta, x)
}

/// Draw `count` i.i.d. observations from the true model.
pub fn sample_true(model: &dyn TrueModel, seed: u64, count: usize) -> Result<Samples> {
    if count == 0 {
        return Err(Error::InvalidInput(
            "sample count must be at least 1".into(),
        ));
    }
    Ok(model.sample(seed, count))
}

/// Kullback-Leibler divergence from the truth to the family member at
/// `theta`, by the requested route.
pub fn kld_eval(
    pair: &ModelPair,
    theta: &ParamPoint,
    method: EvalMethod,
    budget: &Budget,
) -> Result<Evaluation> {
    pair.family().check_point(theta)?;
    match method {
        EvalMethod::ClosedForm => {
            let value = pair.kld_closed(theta)?;
            Ok(Evaluation {
                value,
                method,
                method_error: 0.0,
            })
        }
        EvalMethod::Quadrature => {
            let quad = TruthQuadrature::build(pair.truth(), budget.quad_tol)?;
            let entropy = quad.expect_true_logpdf(pair.truth())?;
            let family = pair.family();
            let cross = quad.expect_obs(&|x| family.log_pdf(theta, x).unwrap_or(f64::NAN));
            let value = entropy - cross;
            if !value.is_finite() {
                return Err(Error::Numeric("KLD quadrature diverged".into()));
            }
            Ok(Evaluation {
                value,
                method,
                method_error: (1.0 - quad.mass()).abs(),
            })
        }
        EvalMethod::MonteCarlo => {
            let truth = pair.truth();
            if truth.true_log_pdf(&vec![0.0; truth.obs_dim()]).is_none() {
                return Err(Error::Capability(
                    "monte-carlo KLD needs the true log-density".into(),
                ));
            }
            let family = pair.family();
            let sampler = |seed: u64, n: usize| truth.sample(seed, n);
            let est = mc::expect_scalar(&sampler, budget.seed, budget.mc_draws, &|x| {
                truth.true_log_pdf(x).unwrap() - family.log_pdf(theta, x).unwrap_or(f64::NAN)
            });
            if !est.mean.is_finite() {
                return Err(Error::Numeric(
                    "KLD Monte Carlo expectation diverged".into(),
                ));
            }
            Ok(Evaluation {
                value: est.mean,
                method,
                method_error: est.std_err,
            })
        }
    }
}

/// The exact reference solution of a built-in pair.
pub fn reference_solution(pair: &ModelPair) -> Result<ReferenceSolution> {
    pair.reference().cloned()
}
