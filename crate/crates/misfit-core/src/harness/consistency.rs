//! Consistency curves: estimation error and sandwich-ratio columns over a
//! growing sample-size grid.

use rayon::prelude::*;

use crate::bounds::{mcrb_from, sample_sandwich, sandwich_matrices};
use crate::error::{Error, Result};
use crate::estimators::{cmml_scatter, mml_closed, mml_fit};
use crate::models::{Budget, EvalMethod, ModelPair};
use crate::numeric::stats::{mean_and_se, median};
use crate::seed::{derive_seed, domain};

use super::resolve_theta0;

/// One sample-size point of a consistency curve.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyRow {
    pub m: usize,
    /// Median over trials of the estimation error (absolute deviation from
    /// theta0 for scalar pairs, Frobenius distance to the true scatter for
    /// the complex pair).
    pub median_err: f64,
    pub mean_err: f64,
    pub mean_err_se: f64,
    /// `C_M / M` over the MCRB at this M, from the designated calibration
    /// trial; absent where no MCRB exists.
    pub sandwich_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConsistencyTable {
    pub pair_id: String,
    pub rows: Vec<ConsistencyRow>,
    pub trials: usize,
    pub master_seed: u64,
}

impl ConsistencyTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("M,median_err,mean_err,mean_err_se,sandwich_ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.m,
                r.median_err,
                r.mean_err,
                r.mean_err_se,
                r.sandwich_ratio.map(|v| v.to_string()).unwrap_or_default()
            ));
        }
        out
    }

    /// Sample sizes and median errors, for slope fits.
    pub fn median_curve(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.rows.iter().map(|r| r.m as f64).collect(),
            self.rows.iter().map(|r| r.median_err).collect(),
        )
    }
}

/// Estimation error versus sample size for a model pair.
///
/// Scalar pairs use the closed-form mismatched ML estimator (numeric when no
/// closed form exists); the complex scatter pair uses the constrained
/// estimator with Frobenius error against the true scatter matrix.
pub fn consistency_curve(
    pair: &ModelPair,
    m_grid: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<ConsistencyTable> {
    if m_grid.windows(2).any(|w| w[0] >= w[1]) || m_grid.is_empty() {
        return Err(Error::InvalidInput(
            "sample-size grid must be increasing".into(),
        ));
    }
    if trials < 2 {
        return Err(Error::InvalidInput("need at least 2 trials".into()));
    }

    let scatter_reference = scatter_reference(pair);
    let mut rows = Vec::with_capacity(m_grid.len());
    for (gi, &m) in m_grid.iter().enumerate() {
        let point_seed = derive_seed(master_seed, domain::CONSISTENCY, gi as u64);
        let errs: Vec<Result<f64>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let data = pair
                    .truth()
                    .sample(derive_seed(point_seed, domain::TRIAL, t), m);
                match &scatter_reference {
                    Some(sigma_bar) => {
                        let est = cmml_scatter(&data)?;
                        Ok(est.frobenius_error(sigma_bar))
                    }
                    None => {
                        let theta0 = resolve_theta0(pair, &Budget::default())?;
                        let est = match mml_closed(pair, &data) {
                            Ok(rec) => rec.theta_hat,
                            Err(_) => {
                                mml_fit(pair.family(), &data, &pair.family().point(&[1.0]))?
                                    .theta_hat
                            }
                        };
                        Ok((est.values() - theta0.values()).norm())
                    }
                }
            })
            .collect();
        let mut ok: Vec<f64> = Vec::with_capacity(trials);
        for e in errs {
            ok.push(e?);
        }
        let (mean_err, mean_err_se) = mean_and_se(&ok);
        let median_err = median(&mut ok);

        let sandwich_ratio = if scatter_reference.is_none() {
            sandwich_ratio(pair, m, point_seed).ok()
        } else {
            None
        };

        rows.push(ConsistencyRow {
            m,
            median_err,
            mean_err,
            mean_err_se,
            sandwich_ratio,
        });
    }
    Ok(ConsistencyTable {
        pair_id: pair.id().to_string(),
        rows,
        trials,
        master_seed,
    })
}

fn scatter_reference(pair: &ModelPair) -> Option<nalgebra::DMatrix<num_complex::Complex64>> {
    if pair.id() != "complex-t-scatter" {
        return None;
    }
    // Rebuild the scatter matrix the truth was constructed with.
    let n = pair.hyper().get("n").copied()? as usize;
    match pair.hyper().get("scatter_rho") {
        Some(&rho) => crate::models::ar1_correlation(n, rho)
            .ok()
            .map(|m| m.map(|v| num_complex::Complex64::new(v, 0.0))),
        None => Some(nalgebra::DMatrix::from_fn(n, n, |i, j| {
            num_complex::Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        })),
    }
}

/// `(C_M / M) / MCRB` from one calibration dataset at the mismatched ML
/// estimate; tends to one as M grows.
fn sandwich_ratio(pair: &ModelPair, m: usize, point_seed: u64) -> Result<f64> {
    let theta0 = resolve_theta0(pair, &Budget::default())?;
    let data = pair
        .truth()
        .sample(derive_seed(point_seed, domain::CALIBRATION, 0), m);
    let est = match mml_closed(pair, &data) {
        Ok(rec) => rec.theta_hat,
        Err(_) => mml_fit(pair.family(), &data, &pair.family().point(&[1.0]))?.theta_hat,
    };
    let ss = sample_sandwich(&data, pair.family(), &est)?;
    let sandwich = sandwich_matrices(pair, &theta0, EvalMethod::ClosedForm, &Budget::default())?;
    let mcrb = mcrb_from(&sandwich, m)?.mcrb;
    Ok((ss.c_m[(0, 0)] / m as f64) / mcrb[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        pair_ar1_power, pair_complex_t_scatter, pair_gaussian_wrong_mean, ScatterSpec,
    };
    use crate::numeric::stats::loglog_slope;

    #[test]
    fn scalar_error_shrinks_at_root_m_rate() {
        let pair = pair_gaussian_wrong_mean(1.0, 4.0).unwrap();
        let t = consistency_curve(&pair, &[100, 1000, 10_000, 100_000], 200, 5).unwrap();
        let (ms, errs) = t.median_curve();
        let slope = loglog_slope(&ms, &errs);
        assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
        // Sandwich ratio approaches 1.
        let last = t.rows.last().unwrap().sandwich_ratio.unwrap();
        assert!((last - 1.0).abs() < 0.1, "ratio {last}");
    }

    #[test]
    fn ar1_power_estimator_is_consistent() {
        let pair = pair_ar1_power(0.5, 4.0, 8).unwrap();
        let t = consistency_curve(&pair, &[100, 1000, 10_000], 200, 6).unwrap();
        let first = t.rows.first().unwrap().median_err;
        let last = t.rows.last().unwrap().median_err;
        assert!(last < first / 5.0, "first {first} last {last}");
    }

    #[test]
    fn scatter_error_shrinks_at_root_m_rate() {
        let pair = pair_complex_t_scatter(5.0, 1.0, 4, ScatterSpec::Ar1 { rho: 0.3 }).unwrap();
        let t = consistency_curve(&pair, &[100, 1000, 10_000], 150, 8).unwrap();
        let (ms, errs) = t.median_curve();
        let slope = loglog_slope(&ms, &errs);
        assert!((slope + 0.5).abs() < 0.15, "slope {slope}");
        assert!(t.rows.iter().all(|r| r.sandwich_ratio.is_none()));
    }
}
