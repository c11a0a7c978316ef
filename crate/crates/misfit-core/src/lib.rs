//! Parameter estimation under model misspecification.
//!
//! When the assumed parametric family does not contain the true data
//! distribution, the classical Cramér-Rao machinery generalizes around the
//! pseudo-true parameter (the KLD projection of the truth onto the family):
//! the expected-Hessian and outer-product forms of the information matrix
//! split into two matrices A and B, the attainable covariance becomes the
//! sandwich `A^-1 B A^-1 / M` (the misspecified CRB), and mismatched
//! maximum-likelihood and Bayes estimators converge to the pseudo-true
//! point with exactly that covariance.
//!
//! This crate implements the whole chain, from model pairs through bounds,
//! estimators and mismatched Bayesian machinery, to a seeded Monte Carlo
//! harness that verifies each piece against the others and emits plot-ready
//! CSV tables.

pub mod acceptance;
pub mod bayes;
pub mod bounds;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod models;
pub mod numeric;
pub mod samples;
pub mod seed;

pub use error::{Error, ErrorClass, Result};
pub use samples::Samples;
