//! Distribution of positive-definite Gaussian quadratic forms.
//!
//! For `q = sum_i lambda_i z_i^2` with `z_i` i.i.d. standard normal and all
//! `lambda_i > 0`, the density admits Ruben's representation as a mixture of
//! gamma densities with a common scale `2*beta`, `beta <= min(lambda)`:
//! nonnegative coefficients that sum to one and a computable tail bound
//! (Ruben 1962). This gives vector-observation Gaussian models an exact
//! one-dimensional quadrature route that shares no algebra with the
//! closed-form moment identities it is tested against.

use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::quadrature::ExpectationGrid;

const TAIL_TOL: f64 = 1e-14;
const MAX_TERMS: usize = 200_000;

/// Mixture representation of the law of a positive quadratic form.
#[derive(Debug, Clone)]
pub struct QuadFormDist {
    lambdas: Vec<f64>,
    /// Common gamma scale is `2 * beta`.
    beta: f64,
    /// Mixture coefficients `c_k`; the k-th component is
    /// `Gamma(n/2 + k, 2*beta)`.
    coeffs: Vec<f64>,
    shape0: f64,
}

impl QuadFormDist {
    pub fn new(lambdas: &[f64]) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidInput("empty eigenvalue list".into()));
        }
        if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput(
                "quadratic form requires strictly positive finite eigenvalues".into(),
            ));
        }
        let min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
        // beta strictly below min(lambda) keeps every mixture ratio in [0, 1).
        let beta = 0.999 * min;
        let n = lambdas.len() as f64;

        let ratios: Vec<f64> = lambdas.iter().map(|&l| 1.0 - beta / l).collect();
        let c0: f64 = lambdas.iter().map(|&l| (beta / l).sqrt()).product();

        let mut coeffs = vec![c0];
        let mut gk: Vec<f64> = Vec::new();
        let mut ratio_pows: Vec<f64> = ratios.clone();
        let mut mass = c0;
        while 1.0 - mass > TAIL_TOL {
            let k = coeffs.len();
            if k > MAX_TERMS {
                return Err(Error::Numeric(format!(
                    "quadratic-form series did not reach tail tolerance in {MAX_TERMS} terms \
                     (eigenvalue spread too large)"
                )));
            }
            // g_k = 1/2 sum_i (1 - beta/lambda_i)^k, computed incrementally.
            let g: f64 = 0.5 * ratio_pows.iter().sum::<f64>();
            gk.push(g);
            for (p, r) in ratio_pows.iter_mut().zip(&ratios) {
                *p *= r;
            }
            let mut ck = 0.0;
            for r in 0..k {
                ck += gk[k - 1 - r] * coeffs[r];
            }
            ck /= k as f64;
            mass += ck;
            coeffs.push(ck);
        }
        Ok(QuadFormDist {
            lambdas: lambdas.to_vec(),
            beta,
            coeffs,
            shape0: 0.5 * n,
        })
    }

    pub fn mean(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.lambdas.iter().map(|&l| l * l).sum::<f64>()
    }

    /// Density at `t >= 0`.
    pub fn pdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let scale = 2.0 * self.beta;
        let a = self.shape0;
        // Gamma(a, scale) density, then advance the shape by one per term.
        let ln_p0 = (a - 1.0) * t.ln() - t / scale - ln_gamma(a) - a * scale.ln();
        let mut pk = ln_p0.exp();
        let mut acc = 0.0;
        for (k, &ck) in self.coeffs.iter().enumerate() {
            acc += ck * pk;
            pk *= t / (scale * (a + k as f64));
        }
        acc
    }

    /// Distribution function at `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let scale = 2.0 * self.beta;
        let a = self.shape0;
        let x = t / scale;
        let mut acc = 0.0;
        let mut covered = 0.0;
        for (k, &ck) in self.coeffs.iter().enumerate() {
            // Components are stochastically increasing in k; once the
            // remaining coefficient mass cannot move the value, stop.
            acc += ck * gamma_lr(a + k as f64, x);
            covered += ck;
            if 1.0 - covered < 1e-15 {
                break;
            }
        }
        acc.min(1.0)
    }

    /// Smallest `t` with `1 - F(t) < tail`, by doubling from the bulk.
    fn upper_bound(&self, tail: f64) -> f64 {
        let mut hi = self.mean() + 12.0 * self.variance().sqrt();
        while 1.0 - self.cdf(hi) > tail {
            hi *= 1.5;
        }
        hi
    }

    /// Frozen quadrature grid: `E[psi(q)] = sum_i w_i psi(t_i)`.
    ///
    /// Integration runs in `u = sqrt(t)`, which removes the endpoint
    /// singularity for one-dimensional forms and flattens the density near
    /// the origin in general.
    pub fn expectation_grid(&self, tol: f64) -> ExpectationGrid {
        let hi = self.upper_bound(1e-13);
        let u_hi = hi.sqrt();
        let density_u = move |u: f64| 2.0 * u * self.pdf(u * u);
        let grid = ExpectationGrid::build(&density_u, 0.0, u_hi, tol);
        grid.map_nodes(|u| u * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_special_case() {
        // All eigenvalues equal: q/lambda ~ chi^2_n.
        let d = QuadFormDist::new(&[2.0, 2.0, 2.0, 2.0]).unwrap();
        assert!((d.mean() - 8.0).abs() < 1e-12);
        // chi^2_4 median is 3.3567; q median = 2 * that.
        let median = 2.0 * 3.356_694_0;
        assert!((d.cdf(median) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn grid_reproduces_exact_moments() {
        let lambdas = [0.35, 1.0, 2.5, 4.0, 0.8];
        let d = QuadFormDist::new(&lambdas).unwrap();
        let grid = d.expectation_grid(1e-12);
        assert!((grid.mass() - 1.0).abs() < 1e-9);
        let m1 = grid.expect(&|t| t);
        let m2 = grid.expect(&|t| t * t);
        let exact_m1: f64 = lambdas.iter().sum();
        // E[q^2] = (sum l)^2 + 2 sum l^2
        let exact_m2 = exact_m1 * exact_m1 + 2.0 * lambdas.iter().map(|l| l * l).sum::<f64>();
        assert!((m1 - exact_m1).abs() < 1e-8 * exact_m1);
        assert!((m2 - exact_m2).abs() < 1e-8 * exact_m2);
    }

    #[test]
    fn single_eigenvalue_is_scaled_chi1() {
        let d = QuadFormDist::new(&[3.0]).unwrap();
        let grid = d.expectation_grid(1e-12);
        assert!((grid.mass() - 1.0).abs() < 1e-9);
        assert!((grid.expect(&|t| t) - 3.0).abs() < 1e-8);
        // E[q^2] = 3 lambda^2 for lambda chi^2_1.
        assert!((grid.expect(&|t| t * t) - 27.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_nonpositive_eigenvalues() {
        assert!(QuadFormDist::new(&[1.0, 0.0]).is_err());
        assert!(QuadFormDist::new(&[]).is_err());
    }
}
