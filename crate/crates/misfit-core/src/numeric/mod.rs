//! Numerical machinery: quadrature grids, quadratic-form laws, finite
//! differences, minimizers, and the deterministic Monte Carlo engine.

pub mod diff;
pub mod mc;
pub mod optim;
pub mod quadform;
pub mod quadrature;
pub mod stats;
