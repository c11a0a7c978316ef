//! Misspecified Cramér-Rao machinery.
//!
//! At the pseudo-true parameter `theta0` (the KLD projection of the truth
//! onto the assumed family) two generalizations of the Fisher information
//! coexist: `A = E_p[∇∇' ln f]` and `B = E_p[∇ ln f ∇' ln f]`. The
//! attainable covariance of any MS-unbiased estimator is the sandwich
//! `A^-1 B A^-1 / M`; under a correctly specified model `B = -A` and the
//! sandwich collapses to the classical CRB. When the assumed space is
//! nested in the true one, the bias `r = theta_bar - theta0` lifts the
//! covariance bound to an MSE bound `MCRB + r r'`.
//!
//! Every quantity can be produced along three routes (closed form,
//! deterministic quadrature, seeded Monte Carlo) plus the purely
//! data-driven sample sandwich of quasi-ML theory (White 1982), and the
//! routes are tested against each other.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    AssumedFamily, Budget, EvalMethod, ModelPair, NestedSpec, ParamPoint, TruthQuadrature,
};
use crate::numeric::diff::{central_grad, central_hessian, symmetrize};
use crate::numeric::mc;
use crate::numeric::optim::{minimize_bfgs, minimize_scalar, Coord, Reparam};
use crate::samples::Samples;

/// How a sandwich pair was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Quadrature,
    MonteCarlo,
    Sample,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Provenance::Analytic => "analytic",
            Provenance::Quadrature => "quadrature",
            Provenance::MonteCarlo => "monte-carlo",
            Provenance::Sample => "sample",
        };
        f.write_str(s)
    }
}

/// Relative singular-value threshold below which A is declared singular
/// (the A2 regularity gate).
pub const A_SINGULAR_TOL: f64 = 1e-10;

/// Condition number above which results carry an ill-conditioning warning.
pub const A_COND_WARN: f64 = 1e12;

/// Diagnostic warnings attached to bound reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundWarning {
    IllConditioned { cond: f64 },
}

/// The two expected-information matrices at a parameter point.
#[derive(Debug, Clone)]
pub struct SandwichPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub at: ParamPoint,
    pub provenance: Provenance,
    /// Standard error (Monte Carlo), truncation defect (quadrature) or zero.
    pub method_error: f64,
    /// Condition number of A.
    pub a_cond: f64,
    /// Entrywise standard errors for Monte Carlo pairs.
    pub a_std_err: Option<DMatrix<f64>>,
    pub b_std_err: Option<DMatrix<f64>>,
    /// Truncated integration support of the quadrature route.
    pub truncation: Option<(f64, f64)>,
}

impl SandwichPair {
    /// Symmetrize, validate positive semidefiniteness of B and
    /// invertibility of A, and record the conditioning of A.
    pub fn new(
        a_raw: DMatrix<f64>,
        b_raw: DMatrix<f64>,
        at: ParamPoint,
        provenance: Provenance,
        method_error: f64,
    ) -> Result<Self> {
        if a_raw.iter().chain(b_raw.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "information-matrix expectation diverged".into(),
            ));
        }
        let a = symmetrize(&a_raw);
        let b = symmetrize(&b_raw);

        let b_eigs = b.clone().symmetric_eigenvalues();
        let b_scale = b.norm().max(f64::MIN_POSITIVE);
        if b_eigs.iter().any(|&e| e < -1e-9 * b_scale) {
            return Err(Error::Numeric(format!(
                "outer-product matrix B has a negative eigenvalue ({:.3e})",
                b_eigs.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }

        let svd = a.clone().svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if !(smin > A_SINGULAR_TOL * smax) || smax == 0.0 {
            return Err(Error::SingularHessian(format!(
                "smallest singular value {smin:.3e} below {A_SINGULAR_TOL:e} * {smax:.3e}"
            )));
        }
        Ok(SandwichPair {
            a,
            b,
            at,
            provenance,
            method_error,
            a_cond: smax / smin,
            a_std_err: None,
            b_std_err: None,
            truncation: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a_inverse(&self) -> DMatrix<f64> {
        self.a
            .clone()
            .lu()
            .try_inverse()
            .expect("invertibility checked at construction")
    }

    /// Whether `B ~ -A`, the matched-model information identity.
    pub fn matched_defect(&self) -> f64 {
        (&self.b + &self.a).norm() / self.a.norm()
    }
}

/// Pseudo-true parameter, sandwich, and the derived bounds for a sample
/// size M.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub theta0: ParamPoint,
    pub sandwich: SandwichPair,
    /// Per-sample sandwich `A^-1 B A^-1`.
    pub c_per_sample: DMatrix<f64>,
    /// `c_per_sample / M`.
    pub mcrb: DMatrix<f64>,
    pub m: usize,
    /// Bias `theta_bar - theta0` for nested models.
    pub r: Option<DVector<f64>>,
    /// MSE lower bound `mcrb + r r'`.
    pub lb: Option<DMatrix<f64>>,
    /// Matched-model CRB at theta_bar, divided by M.
    pub crb: Option<DMatrix<f64>>,
    pub warnings: Vec<BoundWarning>,
}

// ---------------------------------------------------------------------------
// Pseudo-true parameter
// ---------------------------------------------------------------------------

/// Offsets (in the optimizer's internal coordinates) for the multi-start
/// uniqueness probe.
const MULTISTART_OFFSETS: [f64; 5] = [0.0, -1.0, 1.0, -0.5, 0.5];

/// Relative agreement required between multi-start solutions.
const MULTISTART_AGREE: f64 = 1e-6;

fn reparam_for(family: &dyn AssumedFamily) -> Result<Reparam> {
    let coords = family
        .domain()
        .iter()
        .map(|iv| {
            if iv.lo == 0.0 && iv.hi == f64::INFINITY {
                Ok(Coord::Positive)
            } else if iv.lo == f64::NEG_INFINITY && iv.hi == f64::INFINITY {
                Ok(Coord::Unbounded)
            } else {
                Err(Error::Capability(format!(
                    "numeric optimization supports (0, inf) and (-inf, inf) components, \
                     got ({}, {})",
                    iv.lo, iv.hi
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Reparam::new(coords))
}

/// Minimize a smooth objective over the family domain from several
/// perturbed starts; error out if the minimizers disagree (A1 probe).
fn multistart_minimize(
    family: &dyn AssumedFamily,
    init: &ParamPoint,
    objective: &dyn Fn(&ParamPoint) -> f64,
) -> Result<(ParamPoint, f64, usize)> {
    family.check_point(init)?;
    let rp = reparam_for(family)?;
    let u0 = rp.to_internal(init.as_slice())?;
    let d = u0.len();

    let eval_u = |u: &[f64]| objective(&family.point(&rp.to_param(u)));

    let mut solutions: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    for &off in &MULTISTART_OFFSETS {
        let start: Vec<f64> = u0.iter().map(|v| v + off).collect();
        if d == 1 {
            let m = minimize_scalar(&|u| eval_u(&[u]), start[0], 1e-12, 400)?;
            solutions.push((vec![m.x], m.value, m.iterations));
        } else {
            let g = |u: &[f64]| central_grad(&|v| eval_u(v), u);
            let m = minimize_bfgs(&|u| eval_u(u), &g, &start, 1e-10, 400)?;
            solutions.push((m.x.as_slice().to_vec(), m.value, m.iterations));
        }
    }

    let best = solutions
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let best_theta = rp.to_param(&solutions[best].0);
    let scale = best_theta.iter().map(|v| v.abs()).fold(1.0f64, f64::max);
    for (u, _, _) in &solutions {
        let theta = rp.to_param(u);
        let diff = theta
            .iter()
            .zip(&best_theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if diff > MULTISTART_AGREE * scale {
            return Err(Error::NonUniqueMinimizer(format!(
                "multi-start spread {diff:.3e} exceeds {MULTISTART_AGREE:e} * {scale:.3}"
            )));
        }
    }
    let iters = solutions.iter().map(|s| s.2).sum();
    Ok((family.point(&best_theta), solutions[best].1, iters))
}

/// The pseudo-true parameter: minimizer of the KLD from the truth to the
/// family, equivalently of the negative expected log-density.
pub fn pseudo_true(
    pair: &ModelPair,
    init: &ParamPoint,
    method: EvalMethod,
    budget: &Budget,
) -> Result<ParamPoint> {
    pair.family().check_point(init)?;
    match method {
        EvalMethod::ClosedForm => Ok(pair.reference()?.theta0.clone()),
        EvalMethod::Quadrature => {
            let quad = TruthQuadrature::build(pair.truth(), budget.quad_tol)?;
            let family = pair.family();
            let objective = |theta: &ParamPoint| {
                -quad.expect_obs(&|x| family.log_pdf(theta, x).unwrap_or(f64::NEG_INFINITY))
            };
            let (theta, _, _) = multistart_minimize(family, init, &objective)?;
            Ok(theta)
        }
        EvalMethod::MonteCarlo => {
            // One fixed dataset for every evaluation: the objective is a
            // deterministic, smooth surface (common random numbers).
            let data = pair.truth().sample(budget.seed, budget.mc_draws);
            let prepared = pair.family().prepared(&data)?;
            let n = data.count() as f64;
            let objective =
                |theta: &ParamPoint| -prepared.log_lik(theta).unwrap_or(f64::NEG_INFINITY) / n;
            let (theta, _, _) = multistart_minimize(pair.family(), init, &objective)?;
            Ok(theta)
        }
    }
}

// ---------------------------------------------------------------------------
// Sandwich matrices
// ---------------------------------------------------------------------------

fn grad_or_fd(family: &dyn AssumedFamily, theta: &ParamPoint, x: &[f64]) -> DVector<f64> {
    family.grad_log_pdf(theta, x).unwrap_or_else(|| {
        central_grad(
            &|t| family.log_pdf(&family.point(t), x).unwrap_or(f64::NAN),
            theta.as_slice(),
        )
    })
}

fn hess_or_fd(family: &dyn AssumedFamily, theta: &ParamPoint, x: &[f64]) -> DMatrix<f64> {
    family.hess_log_pdf(theta, x).unwrap_or_else(|| {
        central_hessian(
            &|t| family.log_pdf(&family.point(t), x).unwrap_or(f64::NAN),
            theta.as_slice(),
        )
    })
}

/// Expected Hessian A and expected outer product B at `theta0`.
pub fn sandwich_matrices(
    pair: &ModelPair,
    theta0: &ParamPoint,
    method: EvalMethod,
    budget: &Budget,
) -> Result<SandwichPair> {
    let family = pair.family();
    family.check_point(theta0)?;
    let d = family.dim();
    match method {
        EvalMethod::ClosedForm => {
            let r = pair.reference()?;
            let scale = r.theta0.values().amax().max(1.0);
            if (theta0.values() - r.theta0.values()).amax() > 1e-10 * scale {
                return Err(Error::Capability(format!(
                    "closed-form sandwich is tabulated at the pseudo-true point {}, \
                     requested {}",
                    r.theta0, theta0
                )));
            }
            SandwichPair::new(
                r.a.clone(),
                r.b.clone(),
                theta0.clone(),
                Provenance::Analytic,
                0.0,
            )
        }
        EvalMethod::Quadrature => {
            let quad = TruthQuadrature::build(pair.truth(), budget.quad_tol)?;
            let mut a = DMatrix::zeros(d, d);
            let mut b = DMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..=i {
                    let h_ij = quad.expect_obs(&|x| hess_or_fd(family, theta0, x)[(i, j)]);
                    let g_ij = quad.expect_obs(&|x| {
                        let g = grad_or_fd(family, theta0, x);
                        g[i] * g[j]
                    });
                    a[(i, j)] = h_ij;
                    a[(j, i)] = h_ij;
                    b[(i, j)] = g_ij;
                    b[(j, i)] = g_ij;
                }
            }
            let defect = (1.0 - quad.mass()).abs();
            let mut out = SandwichPair::new(a, b, theta0.clone(), Provenance::Quadrature, defect)?;
            out.truncation = Some(quad.support());
            Ok(out)
        }
        EvalMethod::MonteCarlo => {
            // One pass: per observation the stacked block [hess | grad grad'].
            let truth = pair.truth();
            let sampler = |seed: u64, n: usize| truth.sample(seed, n);
            let est = mc::expect_matrix(
                &sampler,
                budget.seed,
                budget.mc_draws,
                d,
                2 * d,
                &|x, out| {
                    let h = hess_or_fd(family, theta0, x);
                    let g = grad_or_fd(family, theta0, x);
                    for i in 0..d {
                        for j in 0..d {
                            out[(i, j)] = h[(i, j)];
                            out[(i, d + j)] = g[i] * g[j];
                        }
                    }
                },
            );
            let a = est.mean.columns(0, d).into_owned();
            let b = est.mean.columns(d, d).into_owned();
            let a_se = est.std_err.columns(0, d).into_owned();
            let b_se = est.std_err.columns(d, d).into_owned();
            let worst = a_se.amax().max(b_se.amax());
            let mut pair_out =
                SandwichPair::new(a, b, theta0.clone(), Provenance::MonteCarlo, worst)?;
            pair_out.a_std_err = Some(a_se);
            pair_out.b_std_err = Some(b_se);
            Ok(pair_out)
        }
    }
}

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

/// Assemble the per-sample sandwich and the MCRB at sample size `m`.
pub fn mcrb_from(sandwich: &SandwichPair, m: usize) -> Result<BoundReport> {
    if m == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let a_inv = sandwich.a_inverse();
    let c = symmetrize(&(&a_inv * &sandwich.b * &a_inv));
    let eigs = c.clone().symmetric_eigenvalues();
    if eigs
        .iter()
        .any(|&e| e < -1e-9 * c.norm().max(f64::MIN_POSITIVE))
    {
        return Err(Error::Numeric(
            "per-sample sandwich failed the PSD check".into(),
        ));
    }
    let mut warnings = Vec::new();
    if sandwich.a_cond > A_COND_WARN {
        warnings.push(BoundWarning::IllConditioned {
            cond: sandwich.a_cond,
        });
    }
    let mcrb = &c / m as f64;
    Ok(BoundReport {
        theta0: sandwich.at.clone(),
        sandwich: sandwich.clone(),
        c_per_sample: c,
        mcrb,
        m,
        r: None,
        lb: None,
        crb: None,
        warnings,
    })
}

/// Matched-model CRB (the benchmark the built-ins carry), at sample size
/// `m`.
pub fn matched_crb(pair: &ModelPair, theta_bar: &ParamPoint, m: usize) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    Ok(pair.crb_closed(theta_bar)? / m as f64)
}

/// Extend a bound report with the nested-model bias and MSE lower bound.
pub fn nested_lb(report: &BoundReport, nested: &NestedSpec) -> Result<BoundReport> {
    if nested.theta_bar.dim() != report.theta0.dim() {
        return Err(Error::InvalidInput(format!(
            "theta_bar dimension {} does not match theta0 dimension {}",
            nested.theta_bar.dim(),
            report.theta0.dim()
        )));
    }
    if nested.theta_bar.space_id() != report.theta0.space_id() {
        return Err(Error::InvalidInput(format!(
            "theta_bar lives in '{}', theta0 in '{}'",
            nested.theta_bar.space_id(),
            report.theta0.space_id()
        )));
    }
    let r = nested.theta_bar.values() - report.theta0.values();
    let lb = &report.mcrb + &r * r.transpose();
    let mut out = report.clone();
    out.r = Some(r);
    out.lb = Some(lb);
    Ok(out)
}

/// The sample information matrices of a dataset at a parameter point.
#[derive(Debug, Clone)]
pub struct SampleSandwich {
    /// Average Hessian of `ln f` over the data.
    pub a_m: DMatrix<f64>,
    /// Average outer product of gradients.
    pub b_m: DMatrix<f64>,
    /// `A_M^-1 B_M A_M^-1`; per-sample by construction, so `c_m / M`
    /// estimates the MCRB at sample size M.
    pub c_m: DMatrix<f64>,
}

/// Data-driven estimate of the sandwich: per-sample averages of Hessians
/// and gradient outer products, evaluated at `theta_hat` (usually the
/// mismatched ML estimate). Strongly consistent for `(A, B, C)`.
pub fn sample_sandwich(
    data: &Samples,
    family: &dyn AssumedFamily,
    theta_hat: &ParamPoint,
) -> Result<SampleSandwich> {
    if data.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    family.check_point(theta_hat)?;
    let d = family.dim();
    let mut a = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    for m in 0..data.count() {
        let x = data.obs(m);
        a += hess_or_fd(family, theta_hat, x);
        let g = grad_or_fd(family, theta_hat, x);
        b += &g * g.transpose();
    }
    let mf = data.count() as f64;
    let a_m = symmetrize(&(a / mf));
    let b_m = symmetrize(&(b / mf));

    let svd = a_m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(smin > A_SINGULAR_TOL * smax) || smax == 0.0 {
        return Err(Error::DegenerateSample(format!(
            "sample Hessian is singular (smin = {smin:.3e}, smax = {smax:.3e})"
        )));
    }
    let a_inv = a_m.clone().lu().try_inverse().unwrap();
    let c_m = symmetrize(&(&a_inv * &b_m * &a_inv));
    Ok(SampleSandwich { a_m, b_m, c_m })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn push_matrix_cells(names: &mut Vec<String>, base: &str, d: usize) {
    for i in 1..=d {
        for j in 1..=d {
            names.push(format!("{base}_{i}{j}"));
        }
    }
}

fn matrix_cells(m: Option<&DMatrix<f64>>, d: usize, out: &mut Vec<String>) {
    match m {
        Some(m) => {
            for i in 0..d {
                for j in 0..d {
                    out.push(m[(i, j)].to_string());
                }
            }
        }
        None => out.extend(std::iter::repeat_n(String::new(), d * d)),
    }
}

impl BoundReport {
    /// CSV header matching [`BoundReport::to_csv_row`]. Matrix-valued
    /// columns are flattened row-major with `_ij` suffixes.
    pub fn csv_header(d: usize) -> String {
        let mut names: Vec<String> = Vec::new();
        for i in 1..=d {
            names.push(format!("theta0_{i}"));
        }
        push_matrix_cells(&mut names, "A", d);
        push_matrix_cells(&mut names, "B", d);
        push_matrix_cells(&mut names, "mcrb", d);
        push_matrix_cells(&mut names, "lb", d);
        push_matrix_cells(&mut names, "crb", d);
        names.push("M".into());
        names.push("provenance".into());
        names.push("method_error".into());
        names.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        let d = self.theta0.dim();
        let mut cells: Vec<String> = Vec::new();
        for v in self.theta0.as_slice() {
            cells.push(v.to_string());
        }
        matrix_cells(Some(&self.sandwich.a), d, &mut cells);
        matrix_cells(Some(&self.sandwich.b), d, &mut cells);
        matrix_cells(Some(&self.mcrb), d, &mut cells);
        matrix_cells(self.lb.as_ref(), d, &mut cells);
        matrix_cells(self.crb.as_ref(), d, &mut cells);
        cells.push(self.m.to_string());
        cells.push(self.sandwich.provenance.to_string());
        cells.push(self.sandwich.method_error.to_string());
        cells.join(",")
    }

    /// Flat `key = value` block, one line per scalar.
    pub fn to_kv_block(&self) -> String {
        let d = self.theta0.dim();
        let mut lines: Vec<String> = Vec::new();
        for (i, v) in self.theta0.as_slice().iter().enumerate() {
            lines.push(format!("theta0_{} = {v}", i + 1));
        }
        fn emit(lines: &mut Vec<String>, d: usize, base: &str, m: Option<&DMatrix<f64>>) {
            if let Some(m) = m {
                for i in 0..d {
                    for j in 0..d {
                        lines.push(format!("{base}_{}{} = {}", i + 1, j + 1, m[(i, j)]));
                    }
                }
            }
        }
        emit(&mut lines, d, "A", Some(&self.sandwich.a));
        emit(&mut lines, d, "B", Some(&self.sandwich.b));
        emit(&mut lines, d, "c_per_sample", Some(&self.c_per_sample));
        emit(&mut lines, d, "mcrb", Some(&self.mcrb));
        if let Some(r) = &self.r {
            for (i, v) in r.iter().enumerate() {
                lines.push(format!("r_{} = {v}", i + 1));
            }
        }
        emit(&mut lines, d, "lb", self.lb.as_ref());
        emit(&mut lines, d, "crb", self.crb.as_ref());
        lines.push(format!("M = {}", self.m));
        lines.push(format!("provenance = {}", self.sandwich.provenance));
        lines.push(format!("method_error = {}", self.sandwich.method_error));
        lines.push(format!("a_condition = {}", self.sandwich.a_cond));
        if let Some((lo, hi)) = self.sandwich.truncation {
            lines.push(format!("quadrature_support = [{lo}, {hi}]"));
        }
        for w in &self.warnings {
            match w {
                BoundWarning::IllConditioned { cond } => {
                    lines.push(format!("warning = ill-conditioned A (cond = {cond:.3e})"));
                }
            }
        }
        lines.join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{pair_ar1_power, pair_gaussian_wrong_mean};

    fn gwm() -> ModelPair {
        pair_gaussian_wrong_mean(1.0, 4.0).unwrap()
    }

    #[test]
    fn closed_form_sandwich_reference_values() {
        let pair = gwm();
        let theta0 = pair.family().point(&[5.0]);
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        assert!((s.a[(0, 0)] + 0.02).abs() < 1e-15);
        assert!((s.b[(0, 0)] - 0.0192).abs() < 1e-15);
    }

    #[test]
    fn mcrb_reference_values() {
        let pair = gwm();
        let theta0 = pair.family().point(&[5.0]);
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        let rep = mcrb_from(&s, 10).unwrap();
        assert!((rep.mcrb[(0, 0)] - 4.8).abs() < 1e-10);

        // AR(1) at rho = 0.5, N = 8, M = 24.
        let pair = pair_ar1_power(0.5, 4.0, 8).unwrap();
        let theta0 = pair.family().point(&[4.0]);
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        assert!((s.a[(0, 0)] + 0.25).abs() < 1e-15);
        assert!((s.b[(0, 0)] - 12.4444580078125 / 32.0).abs() < 1e-12);
        let rep = mcrb_from(&s, 24).unwrap();
        assert!((rep.mcrb[(0, 0)] - 0.2592595418294271).abs() < 1e-10);
    }

    #[test]
    fn matched_collapse_gives_crb() {
        // B = -A: mcrb = -A^-1 / M.
        let fam = gwm();
        let theta = fam.family().point(&[4.0]);
        let a = DMatrix::from_element(1, 1, -1.0 / 32.0);
        let b = DMatrix::from_element(1, 1, 1.0 / 32.0);
        let s = SandwichPair::new(a, b, theta, Provenance::Analytic, 0.0).unwrap();
        let rep = mcrb_from(&s, 10).unwrap();
        assert!((rep.mcrb[(0, 0)] - 3.2).abs() < 1e-12);
    }

    #[test]
    fn mcrb_scales_exactly_with_m() {
        let pair = gwm();
        let theta0 = pair.family().point(&[5.0]);
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        let r1 = mcrb_from(&s, 7).unwrap();
        let r2 = mcrb_from(&s, 14).unwrap();
        assert_eq!(r1.mcrb[(0, 0)], 2.0 * r2.mcrb[(0, 0)]);
    }

    #[test]
    fn matched_crb_reference_values() {
        let pair = gwm();
        let theta_bar = pair.family().point(&[4.0]);
        let crb = matched_crb(&pair, &theta_bar, 10).unwrap();
        assert!((crb[(0, 0)] - 3.2).abs() < 1e-12);

        let pair = pair_ar1_power(0.5, 4.0, 8).unwrap();
        let theta_bar = pair.family().point(&[4.0]);
        let crb = matched_crb(&pair, &theta_bar, 24).unwrap();
        assert!((crb[(0, 0)] - 32.0 / 192.0).abs() < 1e-12);

        let pair = pair_ar1_power(0.3, 1.0, 1).unwrap();
        let theta_bar = pair.family().point(&[1.0]);
        let crb = matched_crb(&pair, &theta_bar, 1).unwrap();
        assert!((crb[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nested_lb_reference_values() {
        let pair = gwm();
        let theta0 = pair.family().point(&[5.0]);
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        let rep = mcrb_from(&s, 10).unwrap();
        let nested = pair.nested().unwrap();
        let rep = nested_lb(&rep, &nested).unwrap();
        assert!((rep.r.as_ref().unwrap()[0] + 1.0).abs() < 1e-12);
        assert!((rep.lb.as_ref().unwrap()[(0, 0)] - 5.8).abs() < 1e-10);

        // Zero bias: lb equals mcrb.
        let rep0 = mcrb_from(&s, 10).unwrap();
        let nested0 = NestedSpec {
            theta_bar: rep0.theta0.clone(),
            gamma: vec![],
        };
        let rep0 = nested_lb(&rep0, &nested0).unwrap();
        assert_eq!(rep0.lb.as_ref().unwrap()[(0, 0)], rep0.mcrb[(0, 0)]);

        // mu_bar = 2: mcrb = 9.6, r = -4, lb = 25.6.
        let pair = pair_gaussian_wrong_mean(2.0, 4.0).unwrap();
        let theta0 = pair.family().point(&[8.0]);
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        let rep = mcrb_from(&s, 10).unwrap();
        assert!((rep.mcrb[(0, 0)] - 9.6).abs() < 1e-10);
        let rep = nested_lb(&rep, &pair.nested().unwrap()).unwrap();
        assert!((rep.r.as_ref().unwrap()[0] + 4.0).abs() < 1e-12);
        assert!((rep.lb.as_ref().unwrap()[(0, 0)] - 25.6).abs() < 1e-9);
    }

    #[test]
    fn sample_sandwich_hand_computed() {
        // Family N(0, theta), data [1, -1], theta = 1:
        // d/dtheta ln f = -1/(2 theta) + x^2/(2 theta^2) = 0 at both points,
        // so B_M = 0; d2/dtheta2 = 1/(2 theta^2) - x^2/theta^3 = -1/2.
        let pair = gwm();
        let data = Samples::from_scalars(&[1.0, -1.0]);
        let theta = pair.family().point(&[1.0]);
        let s = sample_sandwich(&data, pair.family(), &theta).unwrap();
        assert!((s.a_m[(0, 0)] + 0.5).abs() < 1e-14);
        assert!(s.b_m[(0, 0)].abs() < 1e-14);
        assert!(s.c_m[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn report_serialization_round_trip_shape() {
        let pair = gwm();
        let theta0 = pair.family().point(&[5.0]);
        let s =
            sandwich_matrices(&pair, &theta0, EvalMethod::ClosedForm, &Budget::default()).unwrap();
        let rep = nested_lb(&mcrb_from(&s, 10).unwrap(), &pair.nested().unwrap()).unwrap();
        let header = BoundReport::csv_header(1);
        let row = rep.to_csv_row();
        assert_eq!(header.split(',').count(), row.split(',').count());
        assert!(header.starts_with("theta0_1,A_11,B_11,mcrb_11,lb_11,crb_11"));
        let kv = rep.to_kv_block();
        assert!(kv.contains("theta0_1 = 5"));
        assert!(kv.contains("mcrb_11 = 4.8"));
        assert!(kv.contains("lb_11 = 5.8"));
    }
}
