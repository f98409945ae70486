//! Class calculus for compositions of Lipschitz operators, with certified
//! splitting-method plans and sample-based verification.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod class_calculus;
pub mod error;
pub mod figures;
pub mod operators;
pub mod sampling;
pub mod splitting;
pub mod verifier;

pub use class_calculus::{
    classify, compose_chain, compose_cocoercive_chain, compose_conic, compose_general,
    compose_kappa_theta, compose_scaled_averaged_cocoercive, delta_bundle, from_label,
    resolvent_class, ClassLabel, ConicComposition, DeltaBundle, Guard, InParams, ScaledConic,
};
pub use error::{Error, Interval, Result};
