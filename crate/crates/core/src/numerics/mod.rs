//! Numerical building blocks shared by the model modules.

pub mod ode;
pub mod quad;
pub mod rng;
pub mod stats;

pub use ode::{Dopri5, OdeStats, Tolerance};
pub use quad::{gauss_legendre, GaussLegendre, Integrator, QuadResult};
pub use rng::stream_rng;
pub use stats::{ks_one_sample, ks_two_sample, linear_fit, quantile, KsResult, LinearFit};
