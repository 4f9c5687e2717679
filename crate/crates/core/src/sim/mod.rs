//! Monte Carlo simulation of the original and the reduced equation.

pub mod analysis;
pub mod ensemble;

pub use analysis::{
    compare_laws, empirical_cf, ensemble_mean, estimate_semigroup, holder_check, law_equivalence,
    EmpiricalCf, HolderReport, HolderSample, LawReport, SemigroupEstimate, HOLDER_SPREAD, KS_LEVEL,
};
pub use ensemble::{
    simulate, simulate_direct, simulate_reduced, PathEnsemble, Scheme, SimConfig, OVERFLOW_NORM,
};
