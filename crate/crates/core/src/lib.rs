//! Portfolio construction with QUBO/Ising asset selection.
//!
//! The crate covers the full path from raw closes to a traded portfolio:
//!
//! * [`marketdata`]: price CSV ingestion, returns, mean/covariance estimation.
//! * [`model`]: QUBO and Ising models, penalty lowering of linear constraints,
//!   integer encodings, and the mean-variance selection and integer-share builders.
//! * [`sampler`]: seeded simulated annealing and an exhaustive reference solver.
//! * [`allocator`]: long-only maximum-Sharpe weights via an active-set QP,
//!   cardinality derivation and portfolio metrics.
//! * [`pipeline`]: hybrid (anneal-select, convex-allocate) and fully annealed
//!   integer-share strategies producing whole-share holdings.
//! * [`rebalance`]: periodic health checks with sector-constrained repurchase
//!   and a benchmark-relative backtest.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common `f64` instantiation.

pub mod allocator;
pub mod linalg;
pub mod marketdata;
pub mod model;
pub mod pipeline;
pub mod rebalance;
pub mod sampler;
pub mod scalar;
pub mod synthetic;

pub use scalar::Scalar;

pub type PriceMatrix = marketdata::PriceMatrix<f64>;
pub type ReturnsMatrix = marketdata::ReturnsMatrix<f64>;
pub type AssetStats = marketdata::AssetStats<f64>;
pub type QuboModel = model::QuboModel<f64>;
pub type IsingModel = model::IsingModel<f64>;
pub type LinearConstraint = model::LinearConstraint<f64>;
pub type ConstrainedModel = model::ConstrainedModel<f64>;
pub type SampleSet = sampler::SampleSet<f64>;
pub type AnnealSchedule = sampler::AnnealSchedule<f64>;
pub type AllocatorConfig = allocator::AllocatorConfig<f64>;
pub type WeightVector = allocator::WeightVector<f64>;
pub type PortfolioMetrics = allocator::PortfolioMetrics<f64>;
pub type PipelineConfig = pipeline::PipelineConfig<f64>;
pub type Holdings = pipeline::Holdings<f64>;
pub type BacktestReport = rebalance::BacktestReport<f64>;

pub type QuboModelF32 = model::QuboModel<f32>;
pub type IsingModelF32 = model::IsingModel<f32>;
pub type AssetStatsF32 = marketdata::AssetStats<f32>;
