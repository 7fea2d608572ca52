//! Field sampling, pointwise residuals of the equations of motion, and energy
//! quadrature.
//!
//! Fields implement [`WaveField`], which evaluates `R`, `S`, their analytic
//! derivatives and the potential at a point. Nothing here differentiates
//! numerically; finite differences only appear in tests as a cross-check.

mod equations;
mod fields;
mod grid;
mod quadrature;
mod residual;
mod snapshot;
pub mod variational;

use thiserror::Error;

pub use equations::{energy_density, euler_lagrange, pointwise_residuals, EnergyDensity};
pub use fields::{Jet, WaveField};
pub use grid::{Axis, Grid};
pub use quadrature::{energy_quadrature, QuadratureEnergy};
pub use residual::{pde_residuals, NormPair, ResidualReport, Sampling, TimeResidual};
pub use snapshot::{sample, FieldSnapshot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("grid does not cover ±{sigmas} widths on axis {axis} at t = {t}: need [{need_min}, {need_max}], have [{min}, {max}]")]
    GridTooSmall {
        axis: usize,
        t: f64,
        sigmas: f64,
        need_min: f64,
        need_max: f64,
        min: f64,
        max: f64,
    },
    #[error("grid has {grid} axes but the field has {field} dimensions")]
    DimensionMismatch { grid: usize, field: usize },
    #[error("solution was built for the {built} variant but residuals were requested for {requested}; pass the override flag to compare anyway")]
    VariantMismatch { built: String, requested: String },
    #[error("tensor-grid evaluation supports at most {max} dimensions, got {dims}")]
    TooManyDimensions { dims: usize, max: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Coverage required by [`sample`] and [`energy_quadrature`], in packet
/// widths on each side of the center.
pub const COVERAGE_WIDTHS: f64 = 4.0;

/// Largest dimension evaluated on full tensor grids.
pub const MAX_TENSOR_DIMS: usize = 3;
