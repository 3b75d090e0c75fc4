//! Seeded correlated geometric random walks for fixtures and tests.
//!
//! Daily log return of asset `i`:
//! `(μ_i − σ_i²/2)/252 + β_i σ_m z_t / √252 + s_i ε_it / √252`
//! with one market draw `z_t` per day and `s_i² = max(σ_i² − β_i² σ_m², 0)`.
//! Closes are rounded to cents.

use chrono::{Datelike, NaiveDate, Weekday};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::marketdata::{PriceMatrix, SectorMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSpec {
    pub ticker: String,
    pub sector: String,
    pub start_price: f64,
    /// Annual drift.
    pub drift: f64,
    /// Annual volatility.
    pub volatility: f64,
    /// Loading on the common market factor.
    pub beta: f64,
}

/// One-off multiplicative jump applied to a ticker's close on `date`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shock {
    pub ticker: String,
    pub date: NaiveDate,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub seed: u64,
    pub market_volatility: f64,
    pub assets: Vec<AssetSpec>,
    #[serde(default)]
    pub shocks: Vec<Shock>,
}

/// Weekdays in `start ..= end`.
pub fn trading_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn generate(cfg: &SyntheticConfig) -> (PriceMatrix<f64>, SectorMap) {
    let dates = trading_days(cfg.start, cfg.end);
    let mut order: Vec<usize> = (0..cfg.assets.len()).collect();
    order.sort_by(|&a, &b| cfg.assets[a].ticker.cmp(&cfg.assets[b].ticker));
    let assets: Vec<&AssetSpec> = order.iter().map(|&i| &cfg.assets[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dt: f64 = 1.0 / 252.0;
    let sq = dt.sqrt();
    let mut level: Vec<f64> = assets.iter().map(|a| a.start_price.ln()).collect();
    let mut values = Array2::zeros((dates.len(), assets.len()));
    for (r, date) in dates.iter().enumerate() {
        let z: f64 = StandardNormal.sample(&mut rng);
        for (c, a) in assets.iter().enumerate() {
            let e: f64 = StandardNormal.sample(&mut rng);
            if r > 0 {
                let idio = (a.volatility.powi(2) - (a.beta * cfg.market_volatility).powi(2)).max(0.0).sqrt();
                level[c] += (a.drift - 0.5 * a.volatility.powi(2)) * dt + a.beta * cfg.market_volatility * sq * z + idio * sq * e;
            }
            for s in cfg.shocks.iter().filter(|s| s.ticker == a.ticker && s.date == *date) {
                level[c] += s.factor.ln();
            }
            values[[r, c]] = cents(level[c].exp()).max(0.01);
        }
    }
    let tickers = assets.iter().map(|a| a.ticker.clone()).collect();
    let sectors = SectorMap::new(assets.iter().map(|a| (a.ticker.clone(), a.sector.clone())).collect());
    (PriceMatrix::new(dates, tickers, values), sectors)
}

/// Ten assets in six sectors, one quarter of warm-up history followed by
/// thirteen months from 2023-01-02.
pub fn bundled_config() -> SyntheticConfig {
    let spec = |ticker: &str, sector: &str, start_price, drift, volatility, beta| AssetSpec {
        ticker: ticker.into(),
        sector: sector.into(),
        start_price,
        drift,
        volatility,
        beta,
    };
    SyntheticConfig {
        start: NaiveDate::from_ymd_opt(2022, 9, 26).expect("valid date"),
        end: NaiveDate::from_ymd_opt(2024, 1, 31).expect("valid date"),
        seed: 20230102,
        market_volatility: 0.12,
        assets: vec![
            spec("TECA", "Information Technology", 3300.0, 0.18, 0.20, 0.9),
            spec("TECB", "Information Technology", 1500.0, 0.10, 0.24, 1.0),
            spec("BNKA", "Financials", 1600.0, -0.08, 0.22, 1.1),
            spec("BNKB", "Financials", 900.0, 0.22, 0.24, 1.1),
            spec("BNKC", "Financials", 550.0, 0.35, 0.28, 1.2),
            spec("STPA", "Consumer Staples", 2500.0, -0.04, 0.17, 0.5),
            spec("STPB", "Consumer Staples", 400.0, 0.20, 0.18, 0.6),
            spec("INDA", "Industrials", 2200.0, 0.45, 0.24, 1.0),
            spec("ENRA", "Energy", 2400.0, 0.30, 0.22, 0.9),
            spec("COMA", "Communication Services", 800.0, 0.38, 0.21, 0.8),
        ],
        shocks: Vec::new(),
    }
}

/// Reference allocation for the bundled universe, in percent.
pub fn bundled_benchmark_weights() -> Vec<(&'static str, f64)> {
    vec![
        ("TECA", 20.25),
        ("TECB", 8.41),
        ("BNKA", 9.36),
        ("BNKB", 5.52),
        ("BNKC", 3.42),
        ("STPA", 14.91),
        ("STPB", 2.53),
        ("INDA", 15.88),
        ("ENRA", 14.49),
        ("COMA", 5.23),
    ]
}
