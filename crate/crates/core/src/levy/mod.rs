//! Cylindrical symmetric Lévy noise: symbols, Pruitt functions, scaling
//! diagnostics, increment sampling and marginal densities.

pub mod density;
pub mod epsilon;
pub mod measure;
pub mod sampling;
pub mod scaling;

pub use density::{density_1d, density_product, stable_cdf, stable_pdf, Density1d};
pub use epsilon::{condition_e, epsilon0, epsilon0_terms, EpsilonInputs};
pub use measure::{Component, NoiseSpec, Regime, StableComponent, TabulatedMeasure};
pub use sampling::standard_stable;
pub use scaling::{check_wsc, default_grid, log_grid, ScalingReport};
