//! QUBO and Ising models, linear constraints and their penalty lowering, and
//! the portfolio problem builders.

mod builders;
mod constraint;
mod dump;
mod encoding;
mod qubo;

pub use builders::{
    build_mpt_model, build_mvo_qubo, mpt_objective, mvo_default_lambda, mvo_objective, ConstrainedModel, LoweredModel,
};
pub use constraint::{penalize_equality, penalize_inequality, LinearConstraint, Relation, SlackEncoding};
pub use dump::ModelDump;
pub use encoding::{bit_weights, encode_integer, encode_integer_at, IntegerEncoding};
pub use qubo::{
    bits_to_spins, ising_energy, ising_to_qubo, qubo_energy, qubo_to_ising, spins_to_bits, IsingModel, QuboModel,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("expected {expected} variables, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("variable index {index} out of range for {n} variables")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("spin values must be -1 or +1, got {0}")]
    InvalidSpin(i8),

    #[error("constraint has no nonzero coefficient")]
    DegenerateConstraint,

    #[error("expected a {expected:?} constraint")]
    WrongRelation { expected: Relation },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("inequality right-hand side must be non-negative, got {0}")]
    NegativeRhs(f64),

    #[error("cardinality {k} exceeds universe size {n}")]
    CardinalityTooLarge { k: usize, n: usize },

    #[error("malformed model dump: {0}")]
    Dump(String),
}
