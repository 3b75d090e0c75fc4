//! End-to-end strategies producing whole-share holdings under a budget.
//!
//! * Hybrid: anneal the cardinality-constrained mean-variance QUBO to pick
//!   `k` assets, allocate among them with the convex max-Sharpe solver, then
//!   round to shares.
//! * Fully annealed: pick the universe the same way, then anneal the
//!   integer-share model directly so the sampler decides share counts.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::allocator::{
    compute_metrics, derive_cardinality, max_sharpe_weights, mean_variance_weights, AllocatorConfig, AllocatorError,
    CardinalityMode, MetricsReport, PortfolioMetrics, WeightVector, WeightingMode,
};
use crate::marketdata::{compute_returns, estimate_stats, AssetStats, MarketDataError, Period, PriceMatrix, ReturnMethod};
use crate::model::{build_mpt_model, build_mvo_qubo, mpt_objective, mvo_default_lambda, LinearConstraint, ModelError};
use crate::sampler::{best_feasible, exhaustive_solve_where, simulated_anneal, SamplerError, ScheduleConfig, EXHAUSTIVE_MAX_N};
use crate::scalar::{total_cmp, Scalar};

/// Largest number of share-encoding binaries the integer path accepts.
pub const MAX_SHARE_BITS: usize = 64;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    MarketData(#[from] MarketDataError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Sampler(#[from] SamplerError),

    #[error(transparent)]
    Allocator(#[from] AllocatorError),

    #[error("no feasible selection of {k} assets found")]
    NoFeasibleSelection { k: usize },

    #[error("no sampled share allocation satisfies the budget")]
    NoFeasibleShares,

    #[error("budget too small: {budget} buys no share of the selected assets")]
    BudgetTooSmall { budget: f64 },

    #[error("{bits} share bits exceed the cap of {cap}; reduce the universe or the cardinality")]
    TooManyBits { bits: usize, cap: usize },

    #[error("cardinality {k} exceeds universe size {n}")]
    CardinalityTooLarge { k: usize, n: usize },

    #[error("no price for {0}")]
    MissingPrice(String),

    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
}

/// A setting that is either derived automatically or given explicitly.
/// Serialized as the string `"auto"` or the bare value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AutoOr<T> {
    #[default]
    Auto,
    Value(T),
}

impl<T: Copy> AutoOr<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            AutoOr::Auto => None,
            AutoOr::Value(v) => Some(*v),
        }
    }
}

impl<T: Serialize> Serialize for AutoOr<T> {
    fn serialize<Z: Serializer>(&self, s: Z) -> Result<Z::Ok, Z::Error> {
        match self {
            AutoOr::Auto => s.serialize_str("auto"),
            AutoOr::Value(v) => v.serialize(s),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for AutoOr<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Value(T),
            Keyword(String),
        }
        match Raw::deserialize(d)? {
            Raw::Value(v) => Ok(AutoOr::Value(v)),
            Raw::Keyword(k) if k == "auto" => Ok(AutoOr::Auto),
            Raw::Keyword(k) => Err(serde::de::Error::custom(format!("expected \"auto\" or a number, got \"{k}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Hybrid,
    FullyQuantum,
}

/// How expected returns and covariance are estimated from closes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct EstimationConfig<S> {
    pub returns: ReturnMethod,
    pub period: Period,
    /// `None` uses 252 for daily and 12 for monthly returns.
    pub annualization: Option<S>,
    /// Most recent return rows used; `None` uses all history up to the as-of date.
    pub lookback: Option<usize>,
}

impl<S: Scalar> Default for EstimationConfig<S> {
    fn default() -> Self {
        Self { returns: ReturnMethod::Simple, period: Period::Daily, annualization: None, lookback: None }
    }
}

/// Annualized statistics from closes on rows `0..=as_of_idx` only.
pub fn estimate_at<S: Scalar>(
    prices: &PriceMatrix<S>,
    as_of_idx: usize,
    est: &EstimationConfig<S>,
) -> Result<AssetStats<S>, PipelineError> {
    let mut history = prices.truncate_through(as_of_idx);
    if est.period == Period::Monthly {
        history = history.month_ends();
    }
    let mut returns = compute_returns(&history, est.returns)?;
    if let Some(len) = est.lookback {
        let as_of = *history.dates().last().ok_or(MarketDataError::Empty)?;
        returns = returns.window(as_of, len, history.tickers())?;
    }
    let factor = est.annualization.unwrap_or_else(|| S::lit(est.period.default_annualization()));
    Ok(estimate_stats(&returns, est.period, factor)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct PipelineConfig<S> {
    pub strategy: Strategy,
    pub budget: S,
    pub cardinality: AutoOr<usize>,
    /// Risk appetite. In the integer path it is applied per unit of budget,
    /// so the trade-off does not change with the budget's scale.
    pub q: S,
    pub lambda: AutoOr<S>,
    /// Slack resolution (currency) for the budget inequality; auto is one
    /// currency unit, or the cheapest price when that is lower.
    pub slack_granularity: AutoOr<S>,
    pub sampler: ScheduleConfig,
    pub seed: u64,
    pub allocator: AllocatorConfig<S>,
    pub estimation: EstimationConfig<S>,
}

impl<S: Scalar> Default for PipelineConfig<S> {
    fn default() -> Self {
        Self {
            strategy: Strategy::Hybrid,
            budget: S::lit(1_000_000.0),
            cardinality: AutoOr::Auto,
            q: S::one(),
            lambda: AutoOr::Auto,
            slack_granularity: AutoOr::Auto,
            sampler: ScheduleConfig::default(),
            seed: 0,
            allocator: AllocatorConfig::default(),
            estimation: EstimationConfig::default(),
        }
    }
}

impl<S: Scalar> PipelineConfig<S> {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.to_string()));
        if !(self.budget > S::zero() && self.budget.is_finite()) {
            return bad("budget must be positive");
        }
        if !(self.q > S::zero() && self.q.is_finite()) {
            return bad("q must be positive");
        }
        if self.cardinality == AutoOr::Value(0) {
            return bad("cardinality must be positive");
        }
        if let AutoOr::Value(l) = self.lambda {
            if !(l > S::zero() && l.is_finite()) {
                return bad("lambda must be positive");
            }
        }
        if let AutoOr::Value(g) = self.slack_granularity {
            if !(g > S::zero() && g.is_finite()) {
                return bad("slack_granularity must be positive");
            }
        }
        if self.estimation.lookback.is_some_and(|l| l < 2) {
            return bad("estimation lookback must be at least 2");
        }
        self.allocator.validate()?;
        Ok(())
    }
}

/// Whole-share positions plus residual cash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Holdings<S> {
    pub shares: BTreeMap<String, u64>,
    pub cash: S,
    pub as_of: NaiveDate,
}

impl<S: Scalar> Holdings<S> {
    pub fn cash_only(cash: S, as_of: NaiveDate) -> Self {
        Self { shares: BTreeMap::new(), cash, as_of }
    }

    /// Tickers with at least one share.
    pub fn held(&self) -> impl Iterator<Item = &str> {
        self.shares.iter().filter(|(_, &n)| n > 0).map(|(t, _)| t.as_str())
    }

    pub fn is_all_cash(&self) -> bool {
        self.held().next().is_none()
    }

    pub fn value(&self, prices: &BTreeMap<String, S>) -> Result<S, PipelineError> {
        portfolio_value(self, prices)
    }
}

/// `Σ shares_i · p_i + cash`.
pub fn portfolio_value<S: Scalar>(h: &Holdings<S>, prices: &BTreeMap<String, S>) -> Result<S, PipelineError> {
    let mut total = h.cash;
    for (t, &n) in &h.shares {
        if n == 0 {
            continue;
        }
        let p = prices.get(t).ok_or_else(|| PipelineError::MissingPrice(t.clone()))?;
        total = total + *p * share_count(n);
    }
    Ok(total)
}

fn share_count<S: Scalar>(n: u64) -> S {
    S::from_u64(n).expect("share count representable")
}

fn price_of<S: Scalar>(prices: &BTreeMap<String, S>, ticker: &str) -> Result<S, PipelineError> {
    let p = *prices.get(ticker).ok_or_else(|| PipelineError::MissingPrice(ticker.to_string()))?;
    if p > S::zero() && p.is_finite() {
        Ok(p)
    } else {
        Err(PipelineError::InvalidConfig(format!("price of {ticker} must be positive")))
    }
}

/// Converts weights to whole shares: floor of each target value, then one
/// extra share per asset in order of largest fractional remainder (ticker
/// order on ties) while cash allows.
pub fn to_shares<S: Scalar>(
    weights: &WeightVector<S>,
    prices: &BTreeMap<String, S>,
    budget: S,
    as_of: NaiveDate,
) -> Result<Holdings<S>, PipelineError> {
    let budget = budget.max(S::zero());
    let mut shares = BTreeMap::new();
    let mut remainders = Vec::new();
    let mut cash = budget;
    for (t, w) in weights.iter() {
        let p = price_of(prices, t)?;
        let units = w * budget / p;
        let whole = units.floor();
        let n = whole.to_u64().unwrap_or(0);
        cash = cash - p * share_count(n);
        shares.insert(t.to_string(), n);
        let frac = units - whole;
        if frac > S::zero() {
            remainders.push((t.to_string(), frac, p));
        }
    }
    // weights iterate in input order; sort by remainder desc, then ticker
    remainders.sort_by(|a, b| total_cmp(&b.1, &a.1).then_with(|| a.0.cmp(&b.0)));
    for (t, _, p) in remainders {
        if p <= cash {
            cash = cash - p;
            *shares.get_mut(&t).expect("inserted above") += 1;
        }
    }
    Ok(Holdings { shares, cash: cash.max(S::zero()), as_of })
}

/// Weights of the invested part of `h` (cash excluded). `None` when all cash.
pub fn realized_weights<S: Scalar>(
    h: &Holdings<S>,
    prices: &BTreeMap<String, S>,
) -> Result<Option<WeightVector<S>>, PipelineError> {
    let mut tickers = Vec::new();
    let mut values = Vec::new();
    for t in h.held() {
        tickers.push(t.to_string());
        values.push(price_of(prices, t)? * share_count(h.shares[t]));
    }
    if tickers.is_empty() {
        return Ok(None);
    }
    Ok(Some(WeightVector::normalized(tickers, values)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRoute {
    /// `k = n`, nothing to choose.
    Forced,
    Annealed,
    /// Annealed again with the penalty doubled.
    AnnealedRetry,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<S> {
    /// Indices into the stats the selection was made from, ascending.
    pub indices: Vec<usize>,
    pub tickers: Vec<String>,
    /// Mean-variance objective of the selection (zero penalty).
    pub energy: S,
    pub lambda: S,
    pub route: SelectionRoute,
}

/// Picks `k` assets by minimizing `q xᵀΣx − μᵀx + λ(1ᵀx − k)²`.
///
/// Anneals first; with no feasible sample, anneals once more with `2λ`, then
/// falls back to exhaustive search when `n` allows.
pub fn select_assets<S: Scalar>(
    stats: &AssetStats<S>,
    k: usize,
    q: S,
    lambda: Option<S>,
    schedule: &ScheduleConfig,
    seed: u64,
) -> Result<Selection<S>, PipelineError> {
    let n = stats.n();
    if k == 0 {
        return Err(PipelineError::InvalidConfig("cardinality must be positive".into()));
    }
    if k > n {
        return Err(PipelineError::CardinalityTooLarge { k, n });
    }
    let lambda = lambda.unwrap_or_else(|| mvo_default_lambda(stats, q));
    let finish = |state: &[bool], energy: S, lambda: S, route| {
        let indices: Vec<usize> = (0..n).filter(|&i| state[i]).collect();
        Selection { tickers: indices.iter().map(|&i| stats.tickers[i].clone()).collect(), indices, energy, lambda, route }
    };
    if k == n {
        let qubo = build_mvo_qubo(stats, q, k, Some(lambda))?;
        let all = vec![true; n];
        return Ok(finish(&all, qubo.energy(&all)?, lambda, SelectionRoute::Forced));
    }

    let constraint = LinearConstraint::cardinality(n, k)?;
    let tolerance = S::lit(0.5);
    for (lam, route) in [(lambda, SelectionRoute::Annealed), (lambda * S::lit(2.0), SelectionRoute::AnnealedRetry)] {
        let qubo = build_mvo_qubo(stats, q, k, Some(lam))?;
        let sched = schedule.resolve(qubo.max_abs_coefficient(), n)?;
        let samples = simulated_anneal(&qubo, &sched, seed)?;
        if let Some(best) = best_feasible(&samples, std::slice::from_ref(&constraint), tolerance) {
            return Ok(finish(&best.state, best.energy, lam, route));
        }
    }
    if n <= EXHAUSTIVE_MAX_N {
        let qubo = build_mvo_qubo(stats, q, k, Some(lambda))?;
        let set = exhaustive_solve_where(&qubo, Some(1), |x| x.iter().filter(|&&b| b).count() == k)?;
        if let Some(best) = set.best() {
            return Ok(finish(&best.state, best.energy, lambda, SelectionRoute::Exhaustive));
        }
    }
    Err(PipelineError::NoFeasibleSelection { k })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegerSolution<S> {
    pub holdings: Holdings<S>,
    /// `(q/B) yᵀΣy − μᵀy` of the chosen shares, `y` in currency.
    pub objective: S,
    pub lambda: S,
    pub slack_granularity: S,
    pub share_bits: usize,
    pub total_bits: usize,
}

/// Anneals the integer-share model over every asset in `stats`.
///
/// `prices` aligns with `stats.tickers`. Among sampled states that respect the
/// budget, the one with the lowest unpenalized objective is kept.
pub fn optimize_integer_shares<S: Scalar>(
    stats: &AssetStats<S>,
    prices: &[S],
    as_of: NaiveDate,
    cfg: &PipelineConfig<S>,
) -> Result<IntegerSolution<S>, PipelineError> {
    cfg.validate()?;
    let budget = cfg.budget;
    let q = cfg.q / budget;
    let model = build_mpt_model(stats, prices, budget, q)?;
    let share_bits = model.n_bits();
    if share_bits > MAX_SHARE_BITS {
        return Err(PipelineError::TooManyBits { bits: share_bits, cap: MAX_SHARE_BITS });
    }
    if share_bits == 0 {
        return Err(PipelineError::BudgetTooSmall { budget: budget.as_f64() });
    }

    let cheapest = prices.iter().copied().fold(S::infinity(), S::min);
    let lambda = cfg.lambda.value().unwrap_or_else(|| model.default_penalty());
    let granularity = cfg.slack_granularity.value().unwrap_or_else(|| S::one().min(cheapest));
    let lowered = model.lower(lambda, granularity)?;
    let sched = cfg.sampler.resolve(lowered.qubo.max_abs_coefficient(), lowered.qubo.n())?;
    let samples = simulated_anneal(&lowered.qubo, &sched, cfg.seed)?;

    let slack_tol = budget * S::lit(1e-12);
    let mut best: Option<(Vec<u64>, S)> = None;
    for rec in samples.records() {
        let shares = model.decode(&rec.state);
        let spend: S = shares.iter().zip(prices).map(|(&x, p)| *p * share_count(x)).sum();
        if spend > budget + slack_tol {
            continue;
        }
        let obj = mpt_objective(stats, prices, &shares, q);
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((shares, obj));
        }
    }
    let (shares, objective) = best.ok_or(PipelineError::NoFeasibleShares)?;

    let spend: S = shares.iter().zip(prices).map(|(&x, p)| *p * share_count(x)).sum();
    let holdings = Holdings {
        shares: stats.tickers.iter().cloned().zip(shares).collect(),
        cash: (budget - spend).max(S::zero()),
        as_of,
    };
    Ok(IntegerSolution {
        holdings,
        objective,
        lambda,
        slack_granularity: granularity,
        share_bits,
        total_bits: lowered.qubo.n(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult<S> {
    pub strategy: Strategy,
    pub selection: Selection<S>,
    pub cardinality: usize,
    pub cardinality_mode: CardinalityMode,
    /// Continuous weights before rounding (hybrid only).
    pub target: Option<(WeightVector<S>, PortfolioMetrics<S>)>,
    /// Weights actually held after rounding; `None` when everything stayed cash.
    pub realized: Option<(WeightVector<S>, PortfolioMetrics<S>)>,
    pub holdings: Holdings<S>,
    pub budget: S,
    pub seed: u64,
}

/// JSON view of a [`PipelineResult`]; weights as fractions, metrics in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResultJson {
    pub strategy: Strategy,
    pub selected: Vec<String>,
    pub weights_target: Option<BTreeMap<String, f64>>,
    pub weights_realized: Option<BTreeMap<String, f64>>,
    pub shares: BTreeMap<String, u64>,
    pub cash: f64,
    pub metrics: Option<MetricsReport>,
    pub target_metrics: Option<MetricsReport>,
    pub seed: u64,
    pub cardinality_mode: CardinalityMode,
    pub cardinality: usize,
    pub selection_route: SelectionRoute,
    pub as_of: NaiveDate,
    pub budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<MetricsReport>,
}

fn weight_map<S: Scalar>(w: &WeightVector<S>) -> BTreeMap<String, f64> {
    w.iter().map(|(t, v)| (t.to_string(), v.as_f64())).collect()
}

impl<S: Scalar> PipelineResult<S> {
    pub fn to_json_view(&self) -> PipelineResultJson {
        PipelineResultJson {
            strategy: self.strategy,
            selected: self.selection.tickers.clone(),
            weights_target: self.target.as_ref().map(|(w, _)| weight_map(w)),
            weights_realized: self.realized.as_ref().map(|(w, _)| weight_map(w)),
            shares: self.holdings.shares.clone(),
            cash: self.holdings.cash.as_f64(),
            metrics: self.realized.as_ref().map(|(w, m)| MetricsReport::new(m, w)),
            target_metrics: self.target.as_ref().map(|(w, m)| MetricsReport::new(m, w)),
            seed: self.seed,
            cardinality_mode: self.cardinality_mode,
            cardinality: self.cardinality,
            selection_route: self.selection.route,
            as_of: self.holdings.as_of,
            budget: self.budget.as_f64(),
            benchmark: None,
        }
    }
}

/// Cardinality from config, or from the support of the full-universe
/// max-Sharpe solution when set to auto.
pub fn resolve_cardinality<S: Scalar>(stats: &AssetStats<S>, cfg: &PipelineConfig<S>) -> Result<usize, PipelineError> {
    match cfg.cardinality {
        AutoOr::Value(k) if k > stats.n() => Err(PipelineError::CardinalityTooLarge { k, n: stats.n() }),
        AutoOr::Value(k) => Ok(k),
        AutoOr::Auto => {
            let all: Vec<usize> = (0..stats.n()).collect();
            let sol = max_sharpe_weights(stats, &all, &cfg.allocator)?;
            Ok(derive_cardinality(&sol.y_star, &cfg.allocator)?)
        }
    }
}

/// Runs the configured strategy on `stats` with closes `prices` (keyed by
/// ticker) at `as_of`. `k` overrides the configured cardinality.
pub fn optimize_universe<S: Scalar>(
    stats: &AssetStats<S>,
    prices: &BTreeMap<String, S>,
    as_of: NaiveDate,
    cfg: &PipelineConfig<S>,
    k: Option<usize>,
) -> Result<PipelineResult<S>, PipelineError> {
    cfg.validate()?;
    let k = match k {
        Some(k) if k > stats.n() => return Err(PipelineError::CardinalityTooLarge { k, n: stats.n() }),
        Some(k) => k,
        None => resolve_cardinality(stats, cfg)?,
    };
    let selection = select_assets(stats, k, cfg.q, cfg.lambda.value(), &cfg.sampler, cfg.seed)?;
    let sub = stats.subset(&selection.indices);

    let (target, holdings) = match cfg.strategy {
        Strategy::Hybrid => {
            let all: Vec<usize> = (0..sub.n()).collect();
            let sol = match cfg.allocator.weighting {
                WeightingMode::MaxSharpe => max_sharpe_weights(&sub, &all, &cfg.allocator)?,
                WeightingMode::MeanVariance => mean_variance_weights(&sub, &all, &cfg.allocator)?,
            };
            let metrics = compute_metrics(&sol.weights, stats, &cfg.allocator)?;
            let holdings = to_shares(&sol.weights, prices, cfg.budget, as_of)?;
            if holdings.is_all_cash() {
                return Err(PipelineError::BudgetTooSmall { budget: cfg.budget.as_f64() });
            }
            (Some((sol.weights, metrics)), holdings)
        }
        Strategy::FullyQuantum => {
            let sub_prices = sub.tickers.iter().map(|t| price_of(prices, t)).collect::<Result<Vec<_>, _>>()?;
            (None, optimize_integer_shares(&sub, &sub_prices, as_of, cfg)?.holdings)
        }
    };

    let realized = match realized_weights(&holdings, prices)? {
        Some(w) => {
            let m = compute_metrics(&w, stats, &cfg.allocator)?;
            Some((w, m))
        }
        None => None,
    };
    Ok(PipelineResult {
        strategy: cfg.strategy,
        selection,
        cardinality: k,
        cardinality_mode: cfg.allocator.cardinality_mode,
        target,
        realized,
        holdings,
        budget: cfg.budget,
        seed: cfg.seed,
    })
}

/// Estimates statistics from the full price history and runs the configured
/// strategy at the last date.
pub fn run_pipeline<S: Scalar>(prices: &PriceMatrix<S>, cfg: &PipelineConfig<S>) -> Result<PipelineResult<S>, PipelineError> {
    let last = prices.n_dates().checked_sub(1).ok_or(MarketDataError::Empty)?;
    let stats = estimate_at(prices, last, &cfg.estimation)?;
    optimize_universe(&stats, &prices.prices_at(last), prices.dates()[last], cfg, None)
}

/// [`run_pipeline`] with the strategy forced to hybrid.
pub fn hybrid_optimize<S: Scalar>(prices: &PriceMatrix<S>, cfg: &PipelineConfig<S>) -> Result<PipelineResult<S>, PipelineError> {
    run_pipeline(prices, &PipelineConfig { strategy: Strategy::Hybrid, ..cfg.clone() })
}

/// [`run_pipeline`] with the strategy forced to fully annealed.
pub fn fully_quantum_optimize<S: Scalar>(
    prices: &PriceMatrix<S>,
    cfg: &PipelineConfig<S>,
) -> Result<PipelineResult<S>, PipelineError> {
    run_pipeline(prices, &PipelineConfig { strategy: Strategy::FullyQuantum, ..cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, 2).unwrap()
    }

    fn prices(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(t, p)| (t.to_string(), *p)).collect()
    }

    fn stats(mu: Vec<f64>, sigma: Array2<f64>) -> AssetStats<f64> {
        let tickers = (0..mu.len()).map(|i| format!("A{i}")).collect();
        AssetStats::from_moments(tickers, mu.into(), sigma)
    }

    #[test]
    fn to_shares_examples() {
        let w = WeightVector::equal(vec!["A".into()]).unwrap();
        let h = to_shares(&w, &prices(&[("A", 30.0)]), 100.0, day()).unwrap();
        assert_eq!(h.shares["A"], 3);
        assert_eq!(h.cash, 10.0);

        let w = WeightVector::equal(vec!["A".into(), "B".into()]).unwrap();
        let h = to_shares(&w, &prices(&[("A", 30.0), ("B", 30.0)]), 100.0, day()).unwrap();
        assert_eq!((h.shares["A"], h.shares["B"]), (2, 1));
        assert_eq!(h.cash, 10.0);

        let h = to_shares(&w, &prices(&[("A", 30.0), ("B", 30.0)]), 0.0, day()).unwrap();
        assert!(h.shares.values().all(|&n| n == 0));
        assert_eq!(h.cash, 0.0);

        let w = WeightVector::new(vec!["A".into(), "B".into()], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let h = to_shares(&w, &prices(&[("A", 10.0), ("B", 10.0)]), 3000.0, day()).unwrap();
        assert_eq!((h.shares["A"], h.shares["B"]), (200, 100));
        assert!(h.cash.abs() < 1e-9);
    }

    #[test]
    fn portfolio_value_examples() {
        let mut h = Holdings::cash_only(0.0, day());
        h.shares.insert("A".into(), 10);
        assert_eq!(portfolio_value(&h, &prices(&[("A", 150.0)])).unwrap(), 1500.0);
        assert_eq!(portfolio_value(&Holdings::cash_only(7.0, day()), &BTreeMap::new()).unwrap(), 7.0);
        let mut h = Holdings::cash_only(5.0, day());
        h.shares.insert("A".into(), 2);
        h.shares.insert("B".into(), 3);
        assert_eq!(portfolio_value(&h, &prices(&[("A", 10.0), ("B", 20.0)])).unwrap(), 85.0);
        assert!(matches!(portfolio_value(&h, &prices(&[("A", 10.0)])), Err(PipelineError::MissingPrice(_))));
    }

    #[test]
    fn selection_by_return_when_riskless() {
        let s = stats(vec![0.1, 0.2, 0.3], Array2::zeros((3, 3)));
        let sel = select_assets(&s, 2, 1.0, None, &ScheduleConfig::default(), 3).unwrap();
        assert_eq!(sel.tickers, vec!["A1", "A2"]);
        let all = select_assets(&s, 3, 1.0, None, &ScheduleConfig::default(), 3).unwrap();
        assert_eq!(all.route, SelectionRoute::Forced);
        assert!(select_assets(&s, 4, 1.0, None, &ScheduleConfig::default(), 3).is_err());
    }

    fn int_cfg(budget: f64, q: f64) -> PipelineConfig<f64> {
        PipelineConfig { strategy: Strategy::FullyQuantum, budget, q, seed: 5, ..PipelineConfig::default() }
    }

    #[test]
    fn integer_single_asset() {
        let s = stats(vec![0.2], array![[0.0]]);
        let sol = optimize_integer_shares(&s, &[50.0], day(), &int_cfg(100.0, 1.0)).unwrap();
        assert_eq!(sol.holdings.shares["A0"], 2);
        assert_eq!(sol.holdings.cash, 0.0);
    }

    #[test]
    fn integer_two_assets() {
        let s = stats(vec![0.3, 0.1], Array2::zeros((2, 2)));
        let sol = optimize_integer_shares(&s, &[30.0, 40.0], day(), &int_cfg(100.0, 1.0)).unwrap();
        assert_eq!(sol.holdings.shares["A0"], 3);
        assert_eq!(sol.holdings.shares["A1"], 0);
        assert_eq!(sol.holdings.cash, 10.0);
    }

    #[test]
    fn integer_risk_dominates() {
        let s = stats(vec![0.1, 0.1], array![[0.04, 0.0], [0.0, 0.09]]);
        let sol = optimize_integer_shares(&s, &[30.0, 40.0], day(), &int_cfg(100.0, 1e6)).unwrap();
        assert!(sol.holdings.is_all_cash());
        assert_eq!(sol.holdings.cash, 100.0);
    }

    #[test]
    fn integer_rejects_wide_universe() {
        let n = 12;
        let s = stats(vec![0.1; n], Array2::eye(n) * 0.04);
        let err = optimize_integer_shares(&s, &vec![1.0; n], day(), &int_cfg(1000.0, 1.0)).unwrap_err();
        assert!(matches!(err, PipelineError::TooManyBits { .. }));
    }

    #[test]
    fn budget_too_small() {
        let s = stats(vec![0.1, 0.2], array![[0.04, 0.0], [0.0, 0.09]]);
        let cfg = PipelineConfig { budget: 5.0, cardinality: AutoOr::Value(1), seed: 1, ..PipelineConfig::default() };
        let err = optimize_universe(&s, &prices(&[("A0", 10.0), ("A1", 20.0)]), day(), &cfg, None).unwrap_err();
        assert!(matches!(err, PipelineError::BudgetTooSmall { .. }));
    }

    #[test]
    fn auto_or_serde() {
        let a: AutoOr<usize> = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(a, AutoOr::Auto);
        let v: AutoOr<usize> = serde_json::from_str("4").unwrap();
        assert_eq!(v, AutoOr::Value(4));
        assert!(serde_json::from_str::<AutoOr<usize>>("\"many\"").is_err());
        assert_eq!(serde_json::to_string(&AutoOr::<f64>::Auto).unwrap(), "\"auto\"");
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<PipelineConfig<f64>>(r#"{"budget": 10, "bogus": 1}"#).is_err());
        let c: PipelineConfig<f64> = serde_json::from_str(r#"{"budget": 10, "cardinality": 3, "lambda": "auto"}"#).unwrap();
        assert_eq!(c.cardinality, AutoOr::Value(3));
    }
}
