//! Exact 1/N² expansion of perturbed Gaussian multi-matrix models.
//!
//! The coefficients are computed symbolically ([`master`]) on top of an exact
//! ring of exponential polynomials ([`expalg`]) and the free semicircular Wick
//! calculus ([`freewick`]). Finite-N Gaussian moments ([`gausswick`]) and a
//! Langevin sampler ([`sampler`]) serve as independent checks.

pub mod exec;
pub mod expalg;
pub mod freewick;
pub mod gausswick;
pub mod master;
pub mod ncpoly;
pub mod rational;
pub mod sampler;

pub use rational::Q;
