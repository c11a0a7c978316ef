//! Constrained mismatched-ML scatter estimation.
//!
//! Fitting a complex Gaussian with trace-normalized scatter to data from any
//! elliptical law gives the joint estimator
//!
//! ```text
//! Sigma_hat  = N * (sum_m x_m x_m^H) / (sum_m x_m^H x_m)
//! sigma2_hat = (N M)^-1 sum_m x_m^H Sigma_hat^-1 x_m
//! ```
//!
//! `Sigma_hat` is trace-N by construction, scale-invariant in the data, and
//! converges to the true scatter matrix under the complex t model even
//! though the Gaussian family is misspecified.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::samples::Samples;

/// Joint scatter/power estimate.
#[derive(Debug, Clone)]
pub struct ScatterEstimate {
    /// Hermitian positive semidefinite, `tr = N`.
    pub sigma_hat: DMatrix<Complex64>,
    pub sigma2_hat: f64,
    pub m: usize,
}

/// Constrained mismatched-ML estimate from interleaved complex observations.
pub fn cmml_scatter(data: &Samples) -> Result<ScatterEstimate> {
    if data.dim() % 2 != 0 {
        return Err(Error::InvalidInput(
            "complex observations must have even interleaved length".into(),
        ));
    }
    let n = data.dim() / 2;
    let m = data.count();
    if m == 0 {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    if m < n {
        return Err(Error::InsufficientData(format!(
            "scatter estimation needs M >= N for an invertible estimate (M = {m}, N = {n})"
        )));
    }

    let mut s = DMatrix::<Complex64>::zeros(n, n);
    for idx in 0..m {
        let x = DVector::from_vec(data.obs_complex(idx));
        // s += x x^H, lower triangle then mirrored.
        for i in 0..n {
            for j in 0..=i {
                s[(i, j)] += x[i] * x[j].conj();
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            s[(i, j)] = s[(j, i)].conj();
        }
    }

    let total: f64 = s.diagonal().iter().map(|z| z.re).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSample("all observations are zero".into()));
    }
    let sigma_hat = s.map(|z| z * Complex64::new(n as f64 / total, 0.0));

    let chol = sigma_hat
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateSample("scatter estimate is singular".into()))?;
    let mut quad_sum = 0.0;
    for idx in 0..m {
        let x = DVector::from_vec(data.obs_complex(idx));
        let w = chol.solve(&x);
        quad_sum += x.dotc(&w).re;
    }
    let sigma2_hat = quad_sum / (n * m) as f64;

    Ok(ScatterEstimate {
        sigma_hat,
        sigma2_hat,
        m,
    })
}

impl ScatterEstimate {
    /// Frobenius distance to a reference scatter matrix.
    pub fn frobenius_error(&self, reference: &DMatrix<Complex64>) -> f64 {
        (&self.sigma_hat - reference).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{pair_complex_t_scatter, ScatterSpec};
    use crate::samples::interleave_complex;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn complex_obs(rows: &[Vec<Complex64>]) -> Samples {
        let n = rows[0].len();
        let mut s = Samples::zeros(2 * n, rows.len());
        for (m, r) in rows.iter().enumerate() {
            interleave_complex(r, s.obs_mut(m));
        }
        s
    }

    #[test]
    fn orthonormal_data_gives_identity() {
        let data = complex_obs(&[
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ]);
        let est = cmml_scatter(&data).unwrap();
        assert!((est.sigma_hat[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((est.sigma_hat[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!(est.sigma_hat[(0, 1)].norm() < 1e-15);
        assert!((est.sigma2_hat - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trace_is_n_and_hermitian_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.random_range(2..6);
            let m = rng.random_range(n..30);
            let rows: Vec<Vec<Complex64>> = (0..m)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            Complex64::new(
                                rng.sample(rand_distr::StandardNormal),
                                rng.sample(rand_distr::StandardNormal),
                            )
                        })
                        .collect()
                })
                .collect();
            let est = cmml_scatter(&complex_obs(&rows)).unwrap();
            let tr: f64 = est.sigma_hat.diagonal().iter().map(|z| z.re).sum();
            assert!((tr - n as f64).abs() < 1e-12 * n as f64);
            for i in 0..n {
                for j in 0..n {
                    let d = (est.sigma_hat[(i, j)] - est.sigma_hat[(j, i)].conj()).norm();
                    assert!(d < 1e-12);
                }
            }
            assert!(est.sigma2_hat > 0.0);
        }
    }

    #[test]
    fn rejects_insufficient_data() {
        let data = complex_obs(&[vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.5, 0.0),
        ]]); // M = 1 < N = 3
        assert!(matches!(
            cmml_scatter(&data),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<Complex64>> = (0..12)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        Complex64::new(
                            rng.sample(rand_distr::StandardNormal),
                            rng.sample(rand_distr::StandardNormal),
                        )
                    })
                    .collect()
            })
            .collect();
        let base = cmml_scatter(&complex_obs(&rows)).unwrap();
        let c = Complex64::new(-1.7, 2.3);
        let scaled_rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|z| z * c).collect())
            .collect();
        let scaled = cmml_scatter(&complex_obs(&scaled_rows)).unwrap();
        assert!((&scaled.sigma_hat - &base.sigma_hat).norm() < 1e-12);
        let expected = base.sigma2_hat * c.norm_sqr();
        assert!((scaled.sigma2_hat - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn consistent_for_complex_t_scatter() {
        let pair = pair_complex_t_scatter(2.0, 1.0, 4, ScatterSpec::Ar1 { rho: 0.3 }).unwrap();
        let data = pair.truth().sample(31, 10_000);
        let est = cmml_scatter(&data).unwrap();
        let truth = crate::models::ComplexTTruth::new(
            2.0,
            1.0,
            crate::models::ar1_correlation(4, 0.3)
                .unwrap()
                .map(|v| Complex64::new(v, 0.0)),
        )
        .unwrap();
        let rel = est.frobenius_error(truth.scatter()) / truth.scatter().norm();
        assert!(rel < 0.05, "relative Frobenius error {rel:.3}");
    }
}
