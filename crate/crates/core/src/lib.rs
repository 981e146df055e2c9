//! Shooting solver for sign-changing radial bound states of
//! `u'' + (N-1)/r u' + f(u) = 0`, `u(0) = alpha`, `u'(0) = 0`.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod config;
pub mod dop853;
pub mod integrator;
pub mod nonlinearity;
pub mod poly;
pub mod report;
pub mod scalar;
pub mod search;
pub mod theorems;

pub use scalar::Real;

pub type Model = nonlinearity::NonlinearityModel<f64>;
pub type Landmarks = nonlinearity::Landmarks<f64>;
pub type Trajectory = integrator::Trajectory<f64>;
pub type ProblemConfig = integrator::ProblemConfig<f64>;
pub type Shooter = integrator::Shooter<f64>;
