//! Periodic rebalancing backtest.
//!
//! At every period boundary the held assets are screened; flagged ones are
//! sold at the close and the proceeds, together with idle cash, are
//! reinvested through the configured pipeline in companies from the sold
//! assets' sectors. A benchmark allocation is bought once and held.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{AllocatorError, WeightVector};
use crate::marketdata::{compute_returns, AssetStats, MarketDataError, PriceMatrix, ReturnMethod, ReturnsMatrix, SectorMap};
use crate::pipeline::{
    estimate_at, optimize_universe, portfolio_value, to_shares, Holdings, PipelineConfig, PipelineError,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RebalanceError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),

    #[error(transparent)]
    MarketData(#[from] MarketDataError),

    #[error("invalid rebalance policy: {0}")]
    InvalidPolicy(String),

    #[error("flagged ticker {0} is not held")]
    NotHeld(String),

    #[error("backtest start {start} leaves no trading date in range")]
    EmptyRange { start: NaiveDate },

    #[error("invalid benchmark: {0}")]
    Benchmark(String),
}

impl From<AllocatorError> for RebalanceError {
    fn from(e: AllocatorError) -> Self {
        RebalanceError::Pipeline(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct RebalancePolicy<S> {
    pub period_months: u32,
    /// Trailing mean daily return at or below this flags an asset.
    pub risk_return_threshold: S,
    /// Trailing volatility at or above this quantile of the held assets'
    /// volatilities flags an asset. `1.0` turns the volatility test off.
    pub risk_vol_quantile: S,
    pub lookback_days: usize,
    /// Widen to all sectors when a sold sector offers fewer candidates.
    pub min_candidates_per_sector: usize,
}

impl<S: Scalar> Default for RebalancePolicy<S> {
    fn default() -> Self {
        Self {
            period_months: 3,
            risk_return_threshold: S::zero(),
            risk_vol_quantile: S::lit(0.8),
            lookback_days: 63,
            min_candidates_per_sector: 1,
        }
    }
}

impl<S: Scalar> RebalancePolicy<S> {
    pub fn validate(&self) -> Result<(), RebalanceError> {
        if self.period_months == 0 {
            return Err(RebalanceError::InvalidPolicy("period_months must be positive".into()));
        }
        if self.lookback_days < 2 {
            return Err(RebalanceError::InvalidPolicy("lookback_days must be at least 2".into()));
        }
        if !(self.risk_vol_quantile > S::zero() && self.risk_vol_quantile <= S::one()) {
            return Err(RebalanceError::InvalidPolicy("risk_vol_quantile must lie in (0, 1]".into()));
        }
        if !self.risk_return_threshold.is_finite() {
            return Err(RebalanceError::InvalidPolicy("risk_return_threshold must be finite".into()));
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of a non-empty sample.
fn quantile<S: Scalar>(values: &[S], p: S) -> S {
    let mut v = values.to_vec();
    v.sort_by(crate::scalar::total_cmp);
    let pos = p * S::from_usize_lossy(v.len() - 1);
    let lo = pos.floor().to_usize().unwrap_or(0).min(v.len() - 1);
    let hi = (lo + 1).min(v.len() - 1);
    let frac = pos - pos.floor();
    v[lo] + (v[hi] - v[lo]) * frac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AssetHealth<S> {
    pub ticker: String,
    pub mean_return: S,
    pub volatility: S,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct HealthReport<S> {
    pub as_of: NaiveDate,
    pub assets: Vec<AssetHealth<S>>,
    pub flagged: BTreeSet<String>,
    pub value: S,
    pub profit: S,
}

fn trailing_health<S: Scalar>(
    returns: &ReturnsMatrix<S>,
    holdings: &Holdings<S>,
    policy: &RebalancePolicy<S>,
    as_of: NaiveDate,
) -> Result<Vec<AssetHealth<S>>, RebalanceError> {
    policy.validate()?;
    let held: Vec<String> = holdings.held().map(str::to_string).collect();
    if held.is_empty() {
        return Ok(Vec::new());
    }
    let window = returns.window(as_of, policy.lookback_days, &held)?;
    let t = S::from_usize_lossy(window.n_rows());
    let mut assets: Vec<AssetHealth<S>> = held
        .iter()
        .enumerate()
        .map(|(c, ticker)| {
            let col = window.values().column(c);
            let mean = col.iter().copied().sum::<S>() / t;
            let var = col.iter().map(|r| (*r - mean) * (*r - mean)).sum::<S>() / (t - S::one());
            AssetHealth { ticker: ticker.clone(), mean_return: mean, volatility: var.max(S::zero()).sqrt(), flagged: false }
        })
        .collect();

    let vols: Vec<S> = assets.iter().map(|a| a.volatility).collect();
    let vol_rule = policy.risk_vol_quantile < S::one();
    let cut = quantile(&vols, policy.risk_vol_quantile);
    let floor = vols.iter().copied().fold(S::infinity(), S::min);
    for a in &mut assets {
        // equal volatilities have no upper tail, so the minimum is never flagged
        let risky_vol = vol_rule && a.volatility >= cut && a.volatility > floor;
        a.flagged = a.mean_return <= policy.risk_return_threshold || risky_vol;
    }
    Ok(assets)
}

/// Held tickers with weak trailing mean return or high trailing volatility.
pub fn identify_risky<S: Scalar>(
    returns: &ReturnsMatrix<S>,
    holdings: &Holdings<S>,
    policy: &RebalancePolicy<S>,
    as_of: NaiveDate,
) -> Result<BTreeSet<String>, RebalanceError> {
    Ok(trailing_health(returns, holdings, policy, as_of)?
        .into_iter()
        .filter(|a| a.flagged)
        .map(|a| a.ticker)
        .collect())
}

/// Per-asset statistics, flagged set, value and profit against `initial_value`.
pub fn health_check<S: Scalar>(
    holdings: &Holdings<S>,
    prices: &PriceMatrix<S>,
    returns: &ReturnsMatrix<S>,
    policy: &RebalancePolicy<S>,
    as_of: NaiveDate,
    initial_value: S,
) -> Result<HealthReport<S>, RebalanceError> {
    let idx = prices.date_index(as_of).ok_or_else(|| MarketDataError::InsufficientData { required: 1, actual: 0 })?;
    let assets = trailing_health(returns, holdings, policy, as_of)?;
    let value = portfolio_value(holdings, &prices.prices_at(idx))?;
    Ok(HealthReport {
        as_of,
        flagged: assets.iter().filter(|a| a.flagged).map(|a| a.ticker.clone()).collect(),
        assets,
        value,
        profit: value - initial_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Trade<S> {
    pub shares: u64,
    pub amount: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RebalanceEvent<S> {
    pub date: NaiveDate,
    pub sold: BTreeMap<String, Trade<S>>,
    pub bought: BTreeMap<String, Trade<S>>,
    pub pre_cash: S,
    pub post_cash: S,
    /// Sale proceeds plus the cash held before the event.
    pub new_budget: S,
    pub universe_used: Vec<String>,
    /// The candidate set had to be widened beyond the sold sectors.
    pub widened: bool,
    /// Why nothing was bought, when proceeds stayed in cash.
    pub degenerate: Option<String>,
    pub value_before: S,
    pub value_after: S,
}

impl<S: Scalar> RebalanceEvent<S> {
    fn no_op(date: NaiveDate, cash: S, value: S) -> Self {
        Self {
            date,
            sold: BTreeMap::new(),
            bought: BTreeMap::new(),
            pre_cash: cash,
            post_cash: cash,
            new_budget: cash,
            universe_used: Vec::new(),
            widened: false,
            degenerate: None,
            value_before: value,
            value_after: value,
        }
    }
}

fn share_amount<S: Scalar>(n: u64, price: S) -> S {
    price * S::from_u64(n).expect("share count representable")
}

/// Candidates in the sold assets' sectors, widened to every sector when too
/// few remain. Sold and still-held tickers are always excluded.
fn candidate_universe(
    universe: &[String],
    sectors: &SectorMap,
    sold: &BTreeSet<String>,
    held: &BTreeSet<String>,
    n: usize,
    min_per_sector: usize,
) -> (Vec<String>, bool) {
    let eligible = |t: &String| !sold.contains(t) && !held.contains(t);
    let sold_sectors: BTreeSet<&str> = sold.iter().filter_map(|t| sectors.sector(t)).collect();
    let in_sector: Vec<String> = universe
        .iter()
        .filter(|t| eligible(t) && sectors.sector(t).is_some_and(|s| sold_sectors.contains(s)))
        .cloned()
        .collect();
    let thin_sector = sold_sectors.iter().any(|s| {
        in_sector.iter().filter(|t| sectors.sector(t) == Some(*s)).count() < min_per_sector
    });
    if in_sector.len() >= n && !thin_sector {
        return (in_sector, false);
    }
    (universe.iter().filter(|t| eligible(t)).cloned().collect(), true)
}

/// Outcomes of a repurchase attempt that leave the proceeds in cash instead
/// of aborting the backtest.
fn degenerate_reason(e: &PipelineError) -> Option<String> {
    match e {
        PipelineError::BudgetTooSmall { .. }
        | PipelineError::NoFeasibleSelection { .. }
        | PipelineError::NoFeasibleShares
        | PipelineError::TooManyBits { .. }
        | PipelineError::Allocator(AllocatorError::NoExcessReturn)
        | PipelineError::Allocator(AllocatorError::DegenerateCardinality { .. }) => Some(e.to_string()),
        _ => None,
    }
}

/// Sells every flagged position and reinvests the pooled cash in
/// `|flagged|` new names chosen by the configured pipeline.
///
/// `universe` lists the tradable tickers; `stats_for` estimates statistics
/// for a candidate list using only data up to the event date.
#[allow(clippy::too_many_arguments)]
pub fn rebalance_step<S, F>(
    holdings: &Holdings<S>,
    flagged: &BTreeSet<String>,
    prices: &BTreeMap<String, S>,
    universe: &[String],
    sectors: &SectorMap,
    stats_for: F,
    cfg: &PipelineConfig<S>,
    policy: &RebalancePolicy<S>,
    as_of: NaiveDate,
) -> Result<(Holdings<S>, RebalanceEvent<S>), RebalanceError>
where
    S: Scalar,
    F: Fn(&[String]) -> Result<AssetStats<S>, PipelineError>,
{
    let value_before = portfolio_value(holdings, prices)?;
    if let Some(t) = flagged.iter().find(|t| holdings.shares.get(*t).copied().unwrap_or(0) == 0) {
        return Err(RebalanceError::NotHeld(t.clone()));
    }
    if flagged.is_empty() {
        let mut h = holdings.clone();
        h.as_of = as_of;
        return Ok((h, RebalanceEvent::no_op(as_of, holdings.cash, value_before)));
    }

    let mut next = holdings.clone();
    next.as_of = as_of;
    let mut sold = BTreeMap::new();
    let mut proceeds = S::zero();
    for t in flagged {
        let n = next.shares.remove(t).unwrap_or(0);
        let p = *prices.get(t).ok_or_else(|| PipelineError::MissingPrice(t.clone()))?;
        let amount = share_amount(n, p);
        proceeds = proceeds + amount;
        sold.insert(t.clone(), Trade { shares: n, amount });
    }
    let new_budget = holdings.cash + proceeds;
    let held: BTreeSet<String> = next.held().map(str::to_string).collect();
    let k = flagged.len();
    let (candidates, widened) = candidate_universe(universe, sectors, flagged, &held, k, policy.min_candidates_per_sector);

    let mut event = RebalanceEvent {
        date: as_of,
        sold,
        bought: BTreeMap::new(),
        pre_cash: holdings.cash,
        post_cash: new_budget,
        new_budget,
        universe_used: candidates.clone(),
        widened,
        degenerate: None,
        value_before,
        value_after: value_before,
    };
    next.cash = new_budget;

    if candidates.len() < k {
        event.degenerate = Some(format!("{} candidates for {k} replacements", candidates.len()));
        event.value_after = portfolio_value(&next, prices)?;
        return Ok((next, event));
    }

    let run_cfg = PipelineConfig { budget: new_budget, ..cfg.clone() };
    let outcome = if new_budget > S::zero() {
        stats_for(&candidates).and_then(|stats| optimize_universe(&stats, prices, as_of, &run_cfg, Some(k)))
    } else {
        Err(PipelineError::BudgetTooSmall { budget: 0.0 })
    };
    match outcome {
        Ok(result) => {
            let mut cost = S::zero();
            for (t, &n) in result.holdings.shares.iter().filter(|(_, &n)| n > 0) {
                let amount = share_amount(n, prices[t]);
                cost = cost + amount;
                *next.shares.entry(t.clone()).or_insert(0) += n;
                event.bought.insert(t.clone(), Trade { shares: n, amount });
            }
            next.cash = (new_budget - cost).max(S::zero());
        }
        Err(e) => match degenerate_reason(&e) {
            Some(reason) => event.degenerate = Some(reason),
            None => return Err(e.into()),
        },
    }
    event.post_cash = next.cash;
    event.value_after = portfolio_value(&next, prices)?;
    Ok((next, event))
}

/// Reference portfolio bought at the start and never traded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "S: Scalar")]
pub enum Benchmark<S> {
    Weights(WeightVector<S>),
    Ticker(String),
    EqualWeight,
}

impl<S: Scalar> Benchmark<S> {
    fn weights(&self, universe: &[String]) -> Result<WeightVector<S>, RebalanceError> {
        let w = match self {
            Benchmark::Weights(w) => w.clone(),
            Benchmark::Ticker(t) => WeightVector::equal(vec![t.clone()])?,
            Benchmark::EqualWeight => WeightVector::equal(universe.to_vec())?,
        };
        if let Some(t) = w.tickers().iter().find(|t| !universe.contains(t)) {
            return Err(RebalanceError::Benchmark(format!("{t} has no prices")));
        }
        Ok(w)
    }
}

/// Everything needed to reproduce a backtest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ConfigEcho<S> {
    pub pipeline: PipelineConfig<S>,
    pub policy: RebalancePolicy<S>,
    pub seed: u64,
    pub initial_budget: S,
    pub start: NaiveDate,
    pub benchmark: Benchmark<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct FinalValues<S> {
    pub algo: S,
    pub bench: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BacktestReport<S> {
    pub dates: Vec<NaiveDate>,
    #[serde(rename = "algo")]
    pub algo_values: Vec<S>,
    #[serde(rename = "bench")]
    pub bench_values: Vec<S>,
    pub initial_holdings: Holdings<S>,
    pub benchmark_holdings: Holdings<S>,
    pub events: Vec<RebalanceEvent<S>>,
    #[serde(rename = "final")]
    pub final_values: FinalValues<S>,
    pub config: ConfigEcho<S>,
}

impl<S: Scalar> BacktestReport<S> {
    pub fn final_algo(&self) -> S {
        self.final_values.algo
    }

    pub fn final_bench(&self) -> S {
        self.final_values.bench
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `date,algo_value,bench_value` rows.
    pub fn write_plot_csv<W: std::io::Write>(&self, writer: W) -> Result<(), MarketDataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "algo_value", "bench_value"])?;
        for ((d, a), b) in self.dates.iter().zip(&self.algo_values).zip(&self.bench_values) {
            w.write_record([d.to_string(), format!("{:.2}", a.as_f64()), format!("{:.2}", b.as_f64())])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Boundary dates `start + k · period` for `k ≥ 1`, rolled forward to the
/// next trading date, that fall inside the data.
pub fn rebalance_indices<S: Scalar>(prices: &PriceMatrix<S>, start: NaiveDate, period_months: u32) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for k in 1.. {
        let Some(boundary) = start.checked_add_months(Months::new(period_months * k)) else { break };
        match prices.first_index_on_or_after(boundary) {
            Some(idx) => {
                if out.last() != Some(&idx) {
                    out.push(idx);
                }
            }
            None => break,
        }
    }
    out
}

/// First date with a full risk-screening window behind it.
pub fn default_start<S: Scalar>(prices: &PriceMatrix<S>, policy: &RebalancePolicy<S>) -> Option<NaiveDate> {
    prices.dates().get(policy.lookback_days).copied()
}

/// Buys the initial pipeline portfolio at `start` (default: after a
/// `lookback_days` warm-up), marks it to market daily, and rebalances at every
/// period boundary. Statistics at any date use only closes up to that date.
pub fn run_backtest<S: Scalar>(
    prices: &PriceMatrix<S>,
    sectors: &SectorMap,
    initial_budget: S,
    cfg: &PipelineConfig<S>,
    policy: &RebalancePolicy<S>,
    benchmark: &Benchmark<S>,
    start: Option<NaiveDate>,
) -> Result<BacktestReport<S>, RebalanceError> {
    policy.validate()?;
    let cfg = PipelineConfig { budget: initial_budget, ..cfg.clone() };
    cfg.validate()?;
    sectors.check_covers(prices.tickers())?;

    let start = match start {
        Some(s) => s,
        None => default_start(prices, policy)
            .ok_or(MarketDataError::InsufficientData { required: policy.lookback_days + 1, actual: prices.n_dates() })?,
    };
    let start_idx = prices.first_index_on_or_after(start).ok_or(RebalanceError::EmptyRange { start })?;
    let start = prices.dates()[start_idx];
    let universe = prices.tickers().to_vec();
    let returns = compute_returns(prices, ReturnMethod::Simple)?;

    let stats = estimate_at(prices, start_idx, &cfg.estimation)?;
    let opening_prices = prices.prices_at(start_idx);
    let initial = optimize_universe(&stats, &opening_prices, start, &cfg, None)?;
    let mut holdings = initial.holdings.clone();

    let bench_weights = benchmark.weights(&universe)?;
    let bench = to_shares(&bench_weights, &opening_prices, initial_budget, start)?;

    let boundaries: BTreeSet<usize> = rebalance_indices(prices, start, policy.period_months).into_iter().collect();
    let mut dates = Vec::new();
    let mut algo_values = Vec::new();
    let mut bench_values = Vec::new();
    let mut events = Vec::new();

    for idx in start_idx..prices.n_dates() {
        let date = prices.dates()[idx];
        let closes = prices.prices_at(idx);
        if boundaries.contains(&idx) {
            let flagged = identify_risky(&returns, &holdings, policy, date)?;
            let event_cfg = PipelineConfig { seed: cfg.seed.wrapping_add(events.len() as u64 + 1), ..cfg.clone() };
            let stats_for = |tickers: &[String]| estimate_at(&prices.select(tickers)?, idx, &cfg.estimation);
            let (next, event) =
                rebalance_step(&holdings, &flagged, &closes, &universe, sectors, stats_for, &event_cfg, policy, date)?;
            holdings = next;
            events.push(event);
        }
        dates.push(date);
        algo_values.push(portfolio_value(&holdings, &closes)?);
        bench_values.push(portfolio_value(&bench, &closes)?);
    }

    let final_values = FinalValues {
        algo: *algo_values.last().expect("start lies in range"),
        bench: *bench_values.last().expect("start lies in range"),
    };
    Ok(BacktestReport {
        dates,
        algo_values,
        bench_values,
        initial_holdings: initial.holdings,
        benchmark_holdings: bench,
        events,
        final_values,
        config: ConfigEcho {
            seed: cfg.seed,
            pipeline: cfg,
            policy: *policy,
            initial_budget,
            start,
            benchmark: benchmark.clone(),
        },
    })
}
