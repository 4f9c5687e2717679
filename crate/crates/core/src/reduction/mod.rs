//! Reduced (drift-free) coefficients, model assembly, condition checks and
//! generator evaluation.

pub mod coefficients;
pub mod generator;
pub mod matrix;
pub mod model;

pub use coefficients::{
    a_t, certify_conditions, certify_linearization, evaluate_condition_e, v_t, ConditionE,
    LinearizationReport, ReductionReport, SamplePlan,
};
pub use generator::{
    apply_lt, apply_q, apply_q_jump, transport_identity, Bump, StaticFunction, TestFunction,
    TransportIdentity,
};
pub use matrix::{MatrixConstants, MatrixField, MatrixSpec};
pub use model::{Exponents, ModelSpec};
