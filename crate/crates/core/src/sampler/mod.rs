//! Low-energy state search for QUBO and Ising models.
//!
//! [`simulated_anneal`] is the workhorse sampler; [`exhaustive_solve`] is the
//! exact reference used for small models and as a fallback.

mod anneal;
mod exhaustive;
mod sampleset;
mod schedule;

pub use anneal::{simulated_anneal, Annealable};
pub use exhaustive::{exhaustive_solve, exhaustive_solve_where, EXHAUSTIVE_MAX_N};
pub use sampleset::{best_feasible, SampleRecord, SampleSet};
pub use schedule::{AnnealSchedule, Interpolation, ScheduleConfig};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("invalid anneal schedule: {0}")]
    InvalidSchedule(String),

    #[error("model has {n} variables; exhaustive search is capped at {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("model has no variables")]
    EmptyModel,

    #[error("top_k must be at least 1")]
    ZeroTopK,

    #[error("malformed sample set: {0}")]
    Format(String),
}
