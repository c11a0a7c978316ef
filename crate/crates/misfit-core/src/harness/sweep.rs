//! Parameter sweeps: one repeated-trial run plus bound computation per grid
//! point, emitted as a plot-ready CSV table with a JSON metadata sidecar.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{matched_crb, mcrb_from, nested_lb, sample_sandwich, sandwich_matrices};
use crate::error::{Error, Result};
use crate::estimators::{mml_closed, mml_fit};
use crate::models::{build_pair, Budget, EvalMethod, ModelSpec};
use crate::seed::{derive_seed, domain};

use super::{run_trials, EstimatorSpec, Scenario, TrialStats};

/// One sweep-grid point: bounds and empirical moments side by side.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub m: usize,
    pub trials: usize,
    pub theta0: DVector<f64>,
    pub mcrb: DMatrix<f64>,
    pub lb: Option<DMatrix<f64>>,
    pub crb: Option<DMatrix<f64>>,
    /// `C_M / M` from the designated calibration trial's data, evaluated at
    /// its mismatched ML estimate.
    pub sample_mcrb: Option<DMatrix<f64>>,
    pub emp_cov: DMatrix<f64>,
    pub emp_mse: Option<DMatrix<f64>>,
    pub bias: DVector<f64>,
    pub stderr_cov: DMatrix<f64>,
    pub failures: usize,
    pub stats: TrialStats,
}

/// Table of sweep rows plus everything needed to reproduce them.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub param: String,
    pub dim: usize,
    pub rows: Vec<SweepRow>,
    pub model: ModelSpec,
    pub estimator: EstimatorSpec,
    pub bounds_method: EvalMethod,
    pub budget: Budget,
    pub master_seed: u64,
}

/// Sweep a registered hyperparameter over a grid.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    template: &ModelSpec,
    estimator: EstimatorSpec,
    param: &str,
    grid: &[f64],
    m: usize,
    trials: usize,
    master_seed: u64,
    bounds_method: EvalMethod,
    budget: &Budget,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty sweep grid".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut dim = 1;
    for (i, &value) in grid.iter().enumerate() {
        let mut spec = template.clone();
        spec.set_param(param, value)?;
        let pair = build_pair(&spec)?;
        let point_seed = derive_seed(master_seed, domain::SWEEP_POINT, i as u64);
        let scenario = Scenario {
            pair: pair.clone(),
            estimator,
            m,
            trials,
            master_seed: point_seed,
        };
        let stats = run_trials(&scenario)?;
        dim = stats.theta0.dim();

        // Bounds along the requested route.
        let mut point_budget = *budget;
        point_budget.seed = derive_seed(point_seed, domain::MC_CHUNK, u64::MAX);
        let sandwich = sandwich_matrices(&pair, &stats.theta0, bounds_method, &point_budget)?;
        let mut report = mcrb_from(&sandwich, m)?;
        if let Some(nested) = pair.nested() {
            report = nested_lb(&report, &nested)?;
        }
        let crb = pair
            .nested()
            .and_then(|nested| matched_crb(&pair, &nested.theta_bar, m).ok());

        // Sample sandwich from the designated trial's data at its own
        // mismatched ML estimate.
        let calib_data = pair
            .truth()
            .sample(derive_seed(point_seed, domain::TRIAL, 0), m);
        let calib_est = match mml_closed(&pair, &calib_data) {
            Ok(rec) => Ok(rec.theta_hat),
            Err(_) => mml_fit(pair.family(), &calib_data, &pair.family().point(&[1.0]))
                .map(|r| r.theta_hat),
        };
        let sample_mcrb = calib_est
            .and_then(|est| sample_sandwich(&calib_data, pair.family(), &est))
            .map(|s| s.c_m / m as f64)
            .ok();

        rows.push(SweepRow {
            sweep_value: value,
            m,
            trials,
            theta0: stats.theta0.values().clone(),
            mcrb: report.mcrb.clone(),
            lb: report.lb.clone(),
            crb,
            sample_mcrb,
            emp_cov: stats.emp_cov.clone(),
            emp_mse: stats.emp_mse.clone(),
            bias: stats.bias.clone(),
            stderr_cov: stats.cov_se.clone(),
            failures: stats.failures,
            stats,
        });
    }
    Ok(SweepTable {
        param: param.to_string(),
        dim,
        rows,
        model: template.clone(),
        estimator,
        bounds_method,
        budget: *budget,
        master_seed,
    })
}

fn names_for(base: &str, d: usize, out: &mut Vec<String>) {
    if d == 1 {
        out.push(base.to_string());
    } else {
        for i in 1..=d {
            for j in 1..=d {
                out.push(format!("{base}_{i}{j}"));
            }
        }
    }
}

fn vector_names(base: &str, d: usize, out: &mut Vec<String>) {
    if d == 1 {
        out.push(base.to_string());
    } else {
        for i in 1..=d {
            out.push(format!("{base}_{i}"));
        }
    }
}

fn push_matrix(cells: &mut Vec<String>, m: Option<&DMatrix<f64>>, d: usize) {
    match m {
        Some(m) => {
            for i in 0..d {
                for j in 0..d {
                    cells.push(m[(i, j)].to_string());
                }
            }
        }
        None => cells.extend(std::iter::repeat_n(String::new(), d * d)),
    }
}

impl SweepTable {
    /// Column header. Matrix-valued columns are flattened row-major with
    /// `_ij` suffixes when the parameter dimension exceeds one.
    pub fn csv_header(&self) -> String {
        let d = self.dim;
        let mut names = vec![
            "sweep_param".to_string(),
            "sweep_value".into(),
            "M".into(),
            "trials".into(),
        ];
        vector_names("theta0", d, &mut names);
        names_for("mcrb", d, &mut names);
        names_for("lb", d, &mut names);
        names_for("crb", d, &mut names);
        names_for("sample_mcrb", d, &mut names);
        names_for("emp_cov", d, &mut names);
        names_for("emp_mse", d, &mut names);
        vector_names("bias", d, &mut names);
        names_for("stderr_cov", d, &mut names);
        names.push("failures".into());
        names.join(",")
    }

    pub fn to_csv(&self) -> String {
        let d = self.dim;
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![
                self.param.clone(),
                r.sweep_value.to_string(),
                r.m.to_string(),
                r.trials.to_string(),
            ];
            for v in r.theta0.iter() {
                cells.push(v.to_string());
            }
            push_matrix(&mut cells, Some(&r.mcrb), d);
            push_matrix(&mut cells, r.lb.as_ref(), d);
            push_matrix(&mut cells, r.crb.as_ref(), d);
            push_matrix(&mut cells, r.sample_mcrb.as_ref(), d);
            push_matrix(&mut cells, Some(&r.emp_cov), d);
            push_matrix(&mut cells, r.emp_mse.as_ref(), d);
            for v in r.bias.iter() {
                cells.push(v.to_string());
            }
            push_matrix(&mut cells, Some(&r.stderr_cov), d);
            cells.push(r.failures.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Metadata sidecar: seeds, grids, method choices and tool version.
    pub fn metadata_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Meta<'a> {
            tool_version: &'a str,
            model: &'a ModelSpec,
            estimator: &'a EstimatorSpec,
            sweep_param: &'a str,
            grid: Vec<f64>,
            m: usize,
            trials: usize,
            master_seed: u64,
            bounds_method: EvalMethod,
            budget: &'a Budget,
        }
        let grid = self.rows.iter().map(|r| r.sweep_value).collect();
        let (m, trials) = self.rows.first().map(|r| (r.m, r.trials)).unwrap_or((0, 0));
        serde_json::to_value(Meta {
            tool_version: env!("CARGO_PKG_VERSION"),
            model: &self.model,
            estimator: &self.estimator,
            sweep_param: &self.param,
            grid,
            m,
            trials,
            master_seed: self.master_seed,
            bounds_method: self.bounds_method,
            budget: &self.budget,
        })
        .unwrap_or_else(|_| json!({}))
    }
}
