//! Principal densities, exact oracles for linear models, L¹ residuals and
//! the on-diagonal engine for the rotation example.

pub mod oracle;
pub mod principal;
pub mod residual;
pub mod rotation;

pub use oracle::{exact_density_linear, DensityGrid, DensityMethod, LinearOracle};
pub use principal::{
    principal_density, principal_density_check, principal_density_grid, principal_mass,
    PrincipalKernel, PrincipalMass,
};
pub use residual::{
    fit_residual_exponent, principal_gap_l1, residual_l1, Kde, Residual, ResidualFit,
    ResidualMethod,
};
pub use rotation::{
    rotation_origin_density, rotation_regime_check, OnDiagonalRegime, RegimeReport,
};
