//! Continuous long-only allocation.
//!
//! The maximum-Sharpe portfolio is found through its convex form
//! `min yᵀΣy  s.t. (μ − r)ᵀy = 1, y ≥ 0`, solved exactly by an active-set
//! iteration and normalized to weights `w = y / Σy`.

mod qp;

pub use qp::KktReport;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::quad_form;
use crate::marketdata::AssetStats;
use crate::scalar::Scalar;
use qp::{QpFailure, SimplexQp};

#[derive(Debug, Error, PartialEq)]
pub enum AllocatorError {
    #[error("no asset has expected return above the risk-free rate")]
    NoExcessReturn,

    #[error("active-set iteration did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("KKT residual {residual} exceeds tolerance {tolerance}")]
    KktViolation { residual: f64, tolerance: f64 },

    #[error("covariance singular on the support even after ridge")]
    Singular,

    #[error("cardinality derived as zero: no weight above {threshold}")]
    DegenerateCardinality { threshold: f64 },

    #[error("empty asset subset")]
    EmptySubset,

    #[error("asset index {0} out of range")]
    IndexOutOfRange(usize),

    #[error("unknown ticker {0}")]
    UnknownTicker(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid allocator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CardinalityMode {
    /// Count of `y*` entries above the zero-weight threshold.
    #[default]
    Support,
    /// `round(Σ y*)` clamped to `[1, n]`.
    RoundedSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    #[default]
    MaxSharpe,
    /// Long-only `min q wᵀΣw − μᵀw` on the simplex.
    MeanVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct AllocatorConfig<S> {
    /// Same units as the expected returns (annualized when stats are).
    pub risk_free_rate: S,
    pub risk_aversion_q: S,
    pub kkt_tolerance: S,
    /// `None` means `3n + 10`.
    pub max_iterations: Option<usize>,
    pub zero_weight_threshold: S,
    pub cardinality_mode: CardinalityMode,
    pub weighting: WeightingMode,
}

impl<S: Scalar> Default for AllocatorConfig<S> {
    fn default() -> Self {
        Self {
            risk_free_rate: S::zero(),
            risk_aversion_q: S::one(),
            kkt_tolerance: S::lit(1e-8),
            max_iterations: None,
            zero_weight_threshold: S::lit(1e-6),
            cardinality_mode: CardinalityMode::Support,
            weighting: WeightingMode::MaxSharpe,
        }
    }
}

impl<S: Scalar> AllocatorConfig<S> {
    pub fn validate(&self) -> Result<(), AllocatorError> {
        if !(self.kkt_tolerance > S::zero() && self.zero_weight_threshold > S::zero()) {
            return Err(AllocatorError::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.risk_aversion_q > S::zero()) {
            return Err(AllocatorError::InvalidConfig("risk_aversion_q must be positive".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(AllocatorError::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(3 * n + 10)
    }
}

/// Nonnegative weights summing to one, aligned to `tickers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct WeightVector<S> {
    tickers: Vec<String>,
    weights: Vec<S>,
}

impl<S: Scalar> WeightVector<S> {
    pub fn new(tickers: Vec<String>, weights: Vec<S>) -> Result<Self, AllocatorError> {
        if tickers.len() != weights.len() {
            return Err(AllocatorError::InvalidWeights("ticker/weight length mismatch".into()));
        }
        if weights.is_empty() {
            return Err(AllocatorError::InvalidWeights("no weights".into()));
        }
        if weights.iter().any(|w| !(*w >= S::zero())) {
            return Err(AllocatorError::InvalidWeights("negative or NaN weight".into()));
        }
        let total: S = weights.iter().copied().sum();
        if (total - S::one()).abs() > S::lit(1e-9).max(S::epsilon() * S::lit(64.0)) {
            return Err(AllocatorError::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { tickers, weights })
    }

    /// Scales nonnegative values to sum to one.
    pub fn normalized(tickers: Vec<String>, raw: Vec<S>) -> Result<Self, AllocatorError> {
        let total: S = raw.iter().copied().sum();
        if !(total > S::zero()) || raw.iter().any(|w| !(*w >= S::zero())) {
            return Err(AllocatorError::InvalidWeights("cannot normalize".into()));
        }
        Self::new(tickers, raw.into_iter().map(|w| w / total).collect())
    }

    pub fn equal(tickers: Vec<String>) -> Result<Self, AllocatorError> {
        let n = tickers.len();
        Self::normalized(tickers, vec![S::one(); n])
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn get(&self, ticker: &str) -> Option<S> {
        self.tickers.iter().position(|t| t == ticker).map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, S)> {
        self.tickers.iter().map(String::as_str).zip(self.weights.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharpeSolution<S> {
    pub weights: WeightVector<S>,
    /// Optimal point of the convex program, aligned to `weights.tickers()`.
    pub y_star: Vec<S>,
    pub kkt: KktReport<S>,
    /// Multipliers of `y ≥ 0`; zero on the support.
    pub bound_multipliers: Vec<S>,
    pub iterations: usize,
    /// Ridge added to the covariance diagonal when the support system was singular.
    pub ridge: Option<S>,
}

fn check_subset<S: Scalar>(stats: &AssetStats<S>, subset: &[usize]) -> Result<(), AllocatorError> {
    if subset.is_empty() {
        return Err(AllocatorError::EmptySubset);
    }
    match subset.iter().find(|&&i| i >= stats.n()) {
        Some(&i) => Err(AllocatorError::IndexOutOfRange(i)),
        None => Ok(()),
    }
}

/// Runs the QP, retrying once with a ridge `1e-10 · tr(Σ)/n` on the
/// covariance part of `h` (scaled by `h_scale`) if a support system is singular.
fn solve_with_ridge<S: Scalar>(
    sigma: &Array2<S>,
    h_scale: S,
    g: &[S],
    a: &[S],
    cfg: &AllocatorConfig<S>,
) -> Result<(qp::QpSolution<S>, Option<S>), AllocatorError> {
    let n = g.len();
    let run = |h: &Array2<S>| SimplexQp { h, g, a, b: S::one() }.solve(cfg.iteration_cap(n), cfg.kkt_tolerance);
    let h = sigma.mapv(|v| v * h_scale);
    let map_err = |f: QpFailure| match f {
        QpFailure::Infeasible => AllocatorError::NoExcessReturn,
        QpFailure::Singular => AllocatorError::Singular,
        QpFailure::IterationLimit { iterations } => AllocatorError::NotConverged { iterations },
    };
    match run(&h) {
        Ok(sol) => Ok((sol, None)),
        Err(QpFailure::Singular) => {
            let trace: S = (0..n).map(|i| sigma[[i, i]]).sum();
            let ridge = S::lit(1e-10) * (trace / S::from_usize_lossy(n)).max(S::one().min(S::lit(1e-2)));
            let mut hr = h.clone();
            for i in 0..n {
                hr[[i, i]] = hr[[i, i]] + ridge * h_scale;
            }
            run(&hr).map(|sol| (sol, Some(ridge))).map_err(map_err)
        }
        Err(e) => Err(map_err(e)),
    }
}

fn finish<S: Scalar>(
    stats: &AssetStats<S>,
    subset: &[usize],
    sol: qp::QpSolution<S>,
    ridge: Option<S>,
    cfg: &AllocatorConfig<S>,
) -> Result<SharpeSolution<S>, AllocatorError> {
    let residual = sol.kkt.max_residual();
    if !(residual <= cfg.kkt_tolerance) {
        return Err(AllocatorError::KktViolation { residual: residual.as_f64(), tolerance: cfg.kkt_tolerance.as_f64() });
    }
    let tickers = subset.iter().map(|&i| stats.tickers[i].clone()).collect();
    let weights = WeightVector::normalized(tickers, sol.y.clone())?;
    Ok(SharpeSolution {
        weights,
        y_star: sol.y,
        kkt: sol.kkt,
        bound_multipliers: sol.multipliers,
        iterations: sol.iterations,
        ridge,
    })
}

/// Long-only maximum-Sharpe weights over `subset` (indices into `stats`).
pub fn max_sharpe_weights<S: Scalar>(
    stats: &AssetStats<S>,
    subset: &[usize],
    cfg: &AllocatorConfig<S>,
) -> Result<SharpeSolution<S>, AllocatorError> {
    cfg.validate()?;
    check_subset(stats, subset)?;
    let sub = stats.subset(subset);
    let excess: Vec<S> = sub.mu.iter().map(|m| *m - cfg.risk_free_rate).collect();
    if !excess.iter().any(|e| *e > S::zero()) {
        return Err(AllocatorError::NoExcessReturn);
    }
    let zeros = vec![S::zero(); subset.len()];
    let (sol, ridge) = solve_with_ridge(&sub.sigma, S::lit(2.0), &zeros, &excess, cfg)?;
    finish(stats, subset, sol, ridge, cfg)
}

/// Long-only mean-variance weights `argmin q wᵀΣw − μᵀw` with `Σw = 1`.
pub fn mean_variance_weights<S: Scalar>(
    stats: &AssetStats<S>,
    subset: &[usize],
    cfg: &AllocatorConfig<S>,
) -> Result<SharpeSolution<S>, AllocatorError> {
    cfg.validate()?;
    check_subset(stats, subset)?;
    let sub = stats.subset(subset);
    let g: Vec<S> = sub.mu.iter().map(|m| -*m).collect();
    let ones = vec![S::one(); subset.len()];
    let (sol, ridge) = solve_with_ridge(&sub.sigma, S::lit(2.0) * cfg.risk_aversion_q, &g, &ones, cfg)?;
    finish(stats, subset, sol, ridge, cfg)
}

/// Number of assets implied by a converged `y*`.
pub fn derive_cardinality<S: Scalar>(y_star: &[S], cfg: &AllocatorConfig<S>) -> Result<usize, AllocatorError> {
    let threshold = cfg.zero_weight_threshold;
    let support = y_star.iter().filter(|y| **y > threshold).count();
    if support == 0 {
        return Err(AllocatorError::DegenerateCardinality { threshold: threshold.as_f64() });
    }
    match cfg.cardinality_mode {
        CardinalityMode::Support => Ok(support),
        CardinalityMode::RoundedSum => {
            let total: S = y_star.iter().copied().sum();
            let k = total.round().to_usize().unwrap_or(usize::MAX);
            Ok(k.clamp(1, y_star.len()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct PortfolioMetrics<S> {
    pub expected_return: S,
    /// `sqrt(wᵀΣw)`
    pub risk: S,
    /// `±inf` when `risk == 0` with a nonzero excess return, `0` when both vanish.
    pub sharpe: S,
    pub diversification_ratio: S,
    pub degenerate_risk: bool,
}

/// Return, volatility, Sharpe ratio and diversification ratio
/// `Σ w_i σ_i / sqrt(wᵀΣw)` of a weight vector.
pub fn compute_metrics<S: Scalar>(
    weights: &WeightVector<S>,
    stats: &AssetStats<S>,
    cfg: &AllocatorConfig<S>,
) -> Result<PortfolioMetrics<S>, AllocatorError> {
    let mut w = vec![S::zero(); stats.n()];
    for (t, v) in weights.iter() {
        let i = stats.index_of(t).ok_or_else(|| AllocatorError::UnknownTicker(t.to_string()))?;
        w[i] = w[i] + v;
    }
    let expected_return: S = stats.mu.iter().zip(&w).map(|(m, v)| *m * *v).sum();
    let risk = quad_form(&stats.sigma, &w).max(S::zero()).sqrt();
    let weighted_vol: S = (0..stats.n()).map(|i| w[i] * stats.volatility(i)).sum();
    let excess = expected_return - cfg.risk_free_rate;

    if risk > S::zero() {
        Ok(PortfolioMetrics {
            expected_return,
            risk,
            sharpe: excess / risk,
            diversification_ratio: weighted_vol / risk,
            degenerate_risk: false,
        })
    } else {
        let sharpe = if excess > S::zero() {
            S::infinity()
        } else if excess < S::zero() {
            S::neg_infinity()
        } else {
            S::zero()
        };
        Ok(PortfolioMetrics { expected_return, risk, sharpe, diversification_ratio: S::one(), degenerate_risk: true })
    }
}

/// Machine-readable metrics block. Returns, risk and weights in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub return_pct: f64,
    pub risk_pct: f64,
    /// `f64::MAX` stands in for an infinite ratio; see `sharpe_infinite`.
    pub sharpe: f64,
    pub diversification_ratio: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sharpe_infinite: bool,
    pub weights: BTreeMap<String, f64>,
}

impl MetricsReport {
    pub fn new<S: Scalar>(metrics: &PortfolioMetrics<S>, weights: &WeightVector<S>) -> Self {
        let sharpe = metrics.sharpe.as_f64();
        let mut w = BTreeMap::new();
        for (t, v) in weights.iter() {
            *w.entry(t.to_string()).or_insert(0.0) += v.as_f64() * 100.0;
        }
        Self {
            return_pct: metrics.expected_return.as_f64() * 100.0,
            risk_pct: metrics.risk.as_f64() * 100.0,
            sharpe: if sharpe.is_infinite() { sharpe.signum() * f64::MAX } else { sharpe },
            diversification_ratio: metrics.diversification_ratio.as_f64(),
            sharpe_infinite: sharpe.is_infinite(),
            weights: w,
        }
    }
}
