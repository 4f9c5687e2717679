//! Characteristic flows of the drift: `χ_t` solves `ẋ = b(x)`, `κ_t = χ_{−t}`.

pub mod certify;
pub mod drift;
pub mod engine;

pub use certify::{
    certify_flow_bounds, flow_suite, growth_constant, FlowCertificate, FlowSuiteReport,
};
pub use drift::{DriftConstants, DriftField, DriftSpec};
pub use engine::{FlowEngine, FlowMethod, FlowPoint};
