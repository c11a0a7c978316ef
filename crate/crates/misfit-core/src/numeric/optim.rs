//! Minimizers used for pseudo-true parameters and mismatched ML fits.
//!
//! Positive parameter components are optimized through `u = ln(theta)`, which
//! keeps every iterate strictly interior; unconstrained components pass
//! through unchanged. One-dimensional problems use bracketing plus
//! golden-section (all built-in families are scalar); higher dimensions fall
//! back to BFGS with backtracking line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// How a parameter component maps to the optimizer's internal coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    /// Component ranges over all reals; identity map.
    Unbounded,
    /// Component ranges over (0, inf); optimized as its logarithm.
    Positive,
}

/// Componentwise reparameterization between the parameter space and the
/// optimizer's unconstrained internal coordinates.
#[derive(Debug, Clone)]
pub struct Reparam {
    coords: Vec<Coord>,
}

impl Reparam {
    pub fn new(coords: Vec<Coord>) -> Self {
        Reparam { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn to_internal(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.coords
            .iter()
            .zip(theta)
            .map(|(c, &t)| match c {
                Coord::Unbounded => Ok(t),
                Coord::Positive => {
                    if t > 0.0 {
                        Ok(t.ln())
                    } else {
                        Err(Error::DomainViolation(format!(
                            "positive component initialized at {t}"
                        )))
                    }
                }
            })
            .collect()
    }

    pub fn to_param(&self, u: &[f64]) -> Vec<f64> {
        self.coords
            .iter()
            .zip(u)
            .map(|(c, &v)| match c {
                Coord::Unbounded => v,
                Coord::Positive => v.exp(),
            })
            .collect()
    }

    /// Pull a gradient in theta back to internal coordinates.
    pub fn pullback_grad(&self, u: &[f64], grad_theta: &DVector<f64>) -> DVector<f64> {
        let mut g = grad_theta.clone();
        for (i, c) in self.coords.iter().enumerate() {
            if *c == Coord::Positive {
                g[i] *= u[i].exp();
            }
        }
        g
    }
}

/// Result of a scalar minimization.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMin {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Internal coordinates beyond this magnitude are treated as a boundary
/// escape (for a log-reparameterized component this is far outside the
/// representable range of the original parameter).
const RUNAWAY: f64 = 60.0;

/// Minimize a smooth unimodal function of one variable: downhill bracketing
/// from `x0`, then golden-section to `tol`.
pub fn minimize_scalar(
    f: &dyn Fn(f64) -> f64,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarMin> {
    let mut iterations = 0usize;

    // Bracket a minimum: expand downhill until the middle point is lowest.
    let mut step = 0.5;
    let (mut a, mut b, mut c) = (x0 - step, x0, x0 + step);
    let (mut fa, mut fb, mut fc) = (f(a), f(b), f(c));
    while !(fb <= fa && fb <= fc) {
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::NonConvergence(format!(
                "no bracket after {max_iter} expansions (last at {b:.3e})"
            )));
        }
        if fa < fc {
            // Downhill to the left.
            c = b;
            fc = fb;
            b = a;
            fb = fa;
            step *= 2.0;
            a = b - step;
            fa = f(a);
        } else {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            step *= 2.0;
            c = b + step;
            fc = f(c);
        }
        if a.abs() > RUNAWAY || c.abs() > RUNAWAY {
            return Err(Error::Boundary(format!(
                "objective decreases toward the edge of the parameter space (|u| > {RUNAWAY})"
            )));
        }
    }

    // Golden-section on [a, c].
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = c - INV_PHI * (c - a);
    let mut x2 = a + INV_PHI * (c - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (c - a).abs() > tol * (1.0 + b.abs()) {
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::NonConvergence(format!(
                "golden-section exceeded {max_iter} iterations"
            )));
        }
        if f1 < f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - INV_PHI * (c - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (c - a);
            f2 = f(x2);
        }
        b = 0.5 * (a + c);
    }
    let x = 0.5 * (a + c);
    Ok(ScalarMin {
        x,
        value: f(x),
        iterations,
    })
}

/// Result of a multivariate minimization.
#[derive(Debug, Clone)]
pub struct VecMin {
    pub x: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// BFGS with Armijo backtracking. `f` and `grad` act on the internal
/// (unconstrained) coordinates.
pub fn minimize_bfgs(
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> DVector<f64>,
    x0: &[f64],
    gtol: f64,
    max_iter: usize,
) -> Result<VecMin> {
    let d = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    let mut g = grad(x.as_slice());
    let mut h_inv = DMatrix::<f64>::identity(d, d);

    for iter in 0..max_iter {
        let gnorm = g.norm();
        if gnorm < gtol {
            return Ok(VecMin {
                x,
                value: fx,
                grad_norm: gnorm,
                iterations: iter,
            });
        }
        let mut dir = -(&h_inv * &g);
        if dir.dot(&g) >= 0.0 {
            // Reset a corrupted curvature estimate.
            h_inv = DMatrix::identity(d, d);
            dir = -g.clone();
        }
        // Armijo backtracking.
        let mut alpha = 1.0;
        let slope = g.dot(&dir);
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        for _ in 0..60 {
            x_new = &x + alpha * &dir;
            if x_new.iter().any(|v| v.abs() > RUNAWAY) {
                alpha *= 0.5;
                continue;
            }
            f_new = f(x_new.as_slice());
            if f_new <= fx + 1e-4 * alpha * slope {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Line search stalled: declare convergence if the gradient is
            // already small relative to scale, otherwise fail.
            if gnorm < 1e3 * gtol {
                return Ok(VecMin {
                    x,
                    value: fx,
                    grad_norm: gnorm,
                    iterations: iter,
                });
            }
            return Err(Error::NonConvergence(format!(
                "line search failed at iteration {iter} (|g| = {gnorm:.3e})"
            )));
        }
        let g_new = grad(x_new.as_slice());
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            // Standard BFGS inverse update.
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(d, d);
            let left = &i - rho * &s * y.transpose();
            let right = &i - rho * &y * s.transpose();
            h_inv = &left * h_inv * &right + rho * &s * s.transpose();
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    let gnorm = g.norm();
    if gnorm < 1e3 * gtol {
        return Ok(VecMin {
            x,
            value: fx,
            grad_norm: gnorm,
            iterations: max_iter,
        });
    }
    Err(Error::NonConvergence(format!(
        "BFGS exceeded {max_iter} iterations (|g| = {gnorm:.3e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_finds_quartic_minimum() {
        let f = |x: f64| (x - 1.3).powi(4) + 2.0;
        let m = minimize_scalar(&f, -3.0, 1e-12, 500).unwrap();
        assert!((m.x - 1.3).abs() < 1e-3); // quartic: flat bottom
        let g = |x: f64| (x - 1.3).powi(2);
        let m2 = minimize_scalar(&g, 8.0, 1e-12, 500).unwrap();
        assert!((m2.x - 1.3).abs() < 1e-9);
    }

    #[test]
    fn scalar_detects_runaway() {
        let f = |x: f64| -x;
        assert!(matches!(
            minimize_scalar(&f, 0.0, 1e-10, 500),
            Err(Error::Boundary(_))
        ));
    }

    #[test]
    fn bfgs_on_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let grad = |x: &[f64]| {
            DVector::from_vec(vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ])
        };
        let m = minimize_bfgs(&f, &grad, &[-1.2, 1.0], 1e-10, 500).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-6);
        assert!((m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reparam_round_trip() {
        let rp = Reparam::new(vec![Coord::Positive, Coord::Unbounded]);
        let u = rp.to_internal(&[2.0, -3.0]).unwrap();
        let theta = rp.to_param(&u);
        assert!((theta[0] - 2.0).abs() < 1e-15);
        assert!((theta[1] + 3.0).abs() < 1e-15);
        assert!(rp.to_internal(&[-1.0, 0.0]).is_err());
    }
}
