//! Core numerics for a two-species stochastic mutualism model
//!
//! The model is a pair of coupled Itô SDEs
//!
//! ```text
//! dx = x(r1 - b1·x/(K1 + y) - eps1·x) dt + alpha1·x dW1
//! dy = y(r2 - b2·y/(K2 + x) - eps2·y) dt + alpha2·y dW2
//! ```
//!
//! where each species raises the other's effective carrying capacity. This
//! crate houses everything that is pure computation: parameters and analytic
//! quantities ([`model`]), reproducible Brownian paths ([`noise`]), the three
//! integration schemes ([`integrate`]), closed-form stochastic-logistic
//! envelopes that sandwich every trajectory pathwise ([`envelopes`]), and
//! trajectory/ensemble statistics ([`analysis`]).
//!
//! The crate is `no_std` (with `alloc`); all floating-point math goes through
//! `libm` so results are bit-identical across platforms. IO, config and the
//! CLI live in the companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod envelopes;
mod error;
pub mod integrate;
mod math;
pub mod model;
pub mod noise;

pub use error::CoreError;
pub use integrate::{SchemeId, StepError, StepOutcome, Trajectory};
pub use model::{EquilibriumSet, ModelParams, RegimeClassification, RegimeTag, State};
pub use noise::BrownianPath;
