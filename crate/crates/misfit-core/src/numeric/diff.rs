//! Central finite differences for gradients and Hessians.

use nalgebra::{DMatrix, DVector};

/// Step for first derivatives: `max(1, |x|) * eps^(1/3)`.
pub fn grad_step(x: f64) -> f64 {
    x.abs().max(1.0) * f64::EPSILON.powf(1.0 / 3.0)
}

/// Step for nested second differences: `max(1, |x|) * eps^(1/4)`.
pub fn hess_step(x: f64) -> f64 {
    x.abs().max(1.0) * f64::EPSILON.powf(0.25)
}

pub fn central_grad(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> DVector<f64> {
    let d = x.len();
    let mut out = DVector::zeros(d);
    let mut buf = x.to_vec();
    for i in 0..d {
        let h = grad_step(x[i]);
        buf[i] = x[i] + h;
        let fp = f(&buf);
        buf[i] = x[i] - h;
        let fm = f(&buf);
        buf[i] = x[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
    out
}

/// Hessian by nested central differences, symmetrized.
pub fn central_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let mut buf = x.to_vec();
    let f0 = f(x);
    for i in 0..d {
        let hi = hess_step(x[i]);
        // Diagonal: standard three-point second difference.
        buf[i] = x[i] + hi;
        let fp = f(&buf);
        buf[i] = x[i] - hi;
        let fm = f(&buf);
        buf[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in (i + 1)..d {
            let hj = hess_step(x[j]);
            buf[i] = x[i] + hi;
            buf[j] = x[j] + hj;
            let fpp = f(&buf);
            buf[j] = x[j] - hj;
            let fpm = f(&buf);
            buf[i] = x[i] - hi;
            let fmm = f(&buf);
            buf[j] = x[j] + hj;
            let fmp = f(&buf);
            buf[i] = x[i];
            buf[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Replace a matrix by its symmetric part.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}
