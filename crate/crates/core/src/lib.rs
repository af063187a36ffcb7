//! Benefit take-up toolkit: UB II entitlement simulation, administrative
//! spell aggregation, sample selection, pooled and random-effects probit
//! estimation, non-take-up metrics and a synthetic data generator.

pub mod error;
pub mod estimator;
pub mod io;
pub mod metrics;
pub mod money;
pub mod pipeline;
pub mod rules;
pub mod selection;
pub mod spells;
pub mod synthgen;

pub use error::{Error, Result};
pub use money::Money;
