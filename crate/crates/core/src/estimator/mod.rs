//! Binary take-up models.
//!
//! Observations become a design matrix through a [`DesignLayout`], which
//! fixes the column set and reference categories for a [`ModelSpec`]. A
//! pooled probit is fitted first; its coefficients, rescaled, start the
//! random-effects probit, whose household intercept is integrated out by
//! Gauss-Hermite quadrature. Standard errors come from the inverse of the
//! observed information, and average marginal effects carry delta-method
//! intervals.

pub mod design;
pub mod effects;
pub mod fit;
pub mod likelihood;
pub mod normal;
pub mod optimize;
pub mod quadrature;

pub use design::{
    Block, Column, ColumnRole, Dataset, DesignLayout, HouseholdType, ModelSpec, ModelTag, PanelObservation, GAP,
    GAP_SQ,
};
pub use effects::{
    long_run_effect, marginal_effect, marginal_effects, EffectKind, EffectScale, LongRunEffect, MarginalEffect,
};
pub use fit::{
    fit, model_suite, rho_from_sigma, Coefficient, ConvergenceReport, EstimationResult, FitOptions, ModelKind,
    ParamEstimate,
};
pub use likelihood::{loglik_pooled, loglik_re, Evaluation, RandomEffectsIntegrator};
pub use optimize::BfgsOptions;
pub use quadrature::GaussHermite;
