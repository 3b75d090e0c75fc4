//! Price ingestion, return computation and moment estimation.
//!
//! Prices come in as long-format CSV (`date,ticker,close`) and are aligned on
//! the intersection of dates that every ticker trades. All statistics used by
//! the optimizers are derived from a [`ReturnsMatrix`] via [`estimate_stats`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::scalar::Scalar;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("line {line}: non-positive close {close} for {ticker}")]
    NonPositivePrice { line: u64, ticker: String, close: String },

    #[error("line {line}: duplicate row for ({date}, {ticker})")]
    Duplicate { line: u64, date: NaiveDate, ticker: String },

    #[error("no date is shared by all {0} tickers")]
    EmptyIntersection(usize),

    #[error("price source contains no rows")]
    Empty,

    #[error("insufficient data: need at least {required} rows, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("unknown ticker {0}")]
    UnknownTicker(String),

    #[error("ticker {0} has no sector")]
    MissingSector(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A single close observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePoint<S> {
    pub date: NaiveDate,
    pub ticker: String,
    pub close: S,
}

/// Dense date-aligned close prices. Rows are dates, columns are tickers.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceMatrix<S> {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    values: Array2<S>,
}

impl<S: Scalar> PriceMatrix<S> {
    /// Builds a matrix from already-aligned data.
    ///
    /// Panics if dates are not strictly increasing, the shape disagrees, or a
    /// close is not strictly positive.
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, values: Array2<S>) -> Self {
        assert_eq!(values.dim(), (dates.len(), tickers.len()), "price matrix shape");
        assert!(dates.windows(2).all(|w| w[0] < w[1]), "dates must be strictly increasing");
        assert!(values.iter().all(|v| *v > S::zero()), "closes must be positive");
        Self { dates, tickers, values }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Index of the first date on or after `date`.
    pub fn first_index_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let idx = self.dates.partition_point(|d| *d < date);
        (idx < self.dates.len()).then_some(idx)
    }

    /// Closes on row `idx`, in ticker order.
    pub fn row(&self, idx: usize) -> Vec<S> {
        self.values.row(idx).to_vec()
    }

    /// Closes on row `idx` keyed by ticker.
    pub fn prices_at(&self, idx: usize) -> BTreeMap<String, S> {
        self.tickers
            .iter()
            .cloned()
            .zip(self.values.row(idx).iter().copied())
            .collect()
    }

    /// Rows `0..=idx`.
    pub fn truncate_through(&self, idx: usize) -> Self {
        let end = (idx + 1).min(self.dates.len());
        Self {
            dates: self.dates[..end].to_vec(),
            tickers: self.tickers.clone(),
            values: self.values.slice(ndarray::s![..end, ..]).to_owned(),
        }
    }

    /// Column subset in the order given.
    pub fn select(&self, tickers: &[String]) -> Result<Self, MarketDataError> {
        let cols = tickers
            .iter()
            .map(|t| self.ticker_index(t).ok_or_else(|| MarketDataError::UnknownTicker(t.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            dates: self.dates.clone(),
            tickers: tickers.to_vec(),
            values: self.values.select(Axis(1), &cols),
        })
    }

    /// Keeps the last trading date of each calendar month.
    pub fn month_ends(&self) -> Self {
        let rows: Vec<usize> = (0..self.dates.len())
            .filter(|&i| {
                i + 1 == self.dates.len() || {
                    let (a, b) = (self.dates[i], self.dates[i + 1]);
                    (a.year(), a.month()) != (b.year(), b.month())
                }
            })
            .collect();
        Self {
            dates: rows.iter().map(|&i| self.dates[i]).collect(),
            tickers: self.tickers.clone(),
            values: self.values.select(Axis(0), &rows),
        }
    }

    /// Writes the matrix back out in long `date,ticker,close` format.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MarketDataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "ticker", "close"])?;
        for (r, date) in self.dates.iter().enumerate() {
            let d = date.format(DATE_FORMAT).to_string();
            for (c, t) in self.tickers.iter().enumerate() {
                w.write_record([d.as_str(), t.as_str(), &self.values[[r, c]].to_string()])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Reads long-format price CSV and aligns it on the dates all tickers share.
///
/// Tickers come back sorted lexicographically and dates ascending regardless
/// of file order. Line numbers in errors are 1-based and count the header.
pub fn load_prices<S: Scalar, R: Read>(source: R) -> Result<PriceMatrix<S>, MarketDataError> {
    let points = parse_price_points::<S, R>(source)?;
    align(points)
}

/// Parses and validates rows without aligning them.
pub fn parse_price_points<S: Scalar, R: Read>(source: R) -> Result<Vec<PricePoint<S>>, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(MarketDataError::Empty),
    };
    let header_fields: Vec<&str> = header.iter().collect();
    if header_fields != ["date", "ticker", "close"] {
        return Err(MarketDataError::Malformed {
            line: 1,
            message: format!("expected header `date,ticker,close`, found `{}`", header_fields.join(",")),
        });
    }

    let mut seen = BTreeSet::new();
    let mut points = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 3 {
            return Err(MarketDataError::Malformed {
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&rec[0], DATE_FORMAT).map_err(|e| MarketDataError::Malformed {
            line,
            message: format!("bad date `{}`: {e}", &rec[0]),
        })?;
        let ticker = rec[1].to_string();
        if ticker.is_empty() {
            return Err(MarketDataError::Malformed { line, message: "empty ticker".into() });
        }
        let close = <S as num_traits::Num>::from_str_radix(&rec[2], 10)
            .ok()
            .filter(|v: &S| v.is_finite())
            .ok_or_else(|| MarketDataError::Malformed {
                line,
                message: format!("bad close `{}`", &rec[2]),
            })?;
        if close <= S::zero() {
            return Err(MarketDataError::NonPositivePrice { line, ticker, close: rec[2].to_string() });
        }
        if !seen.insert((date, ticker.clone())) {
            return Err(MarketDataError::Duplicate { line, date, ticker });
        }
        points.push(PricePoint { date, ticker, close });
    }
    if points.is_empty() {
        return Err(MarketDataError::Empty);
    }
    Ok(points)
}

fn align<S: Scalar>(points: Vec<PricePoint<S>>) -> Result<PriceMatrix<S>, MarketDataError> {
    let tickers: Vec<String> = points
        .iter()
        .map(|p| p.ticker.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let col: HashMap<&str, usize> = tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let mut by_date: BTreeMap<NaiveDate, Vec<Option<S>>> = BTreeMap::new();
    for p in &points {
        by_date.entry(p.date).or_insert_with(|| vec![None; tickers.len()])[col[p.ticker.as_str()]] = Some(p.close);
    }
    let complete: Vec<(NaiveDate, Vec<S>)> = by_date
        .into_iter()
        .filter_map(|(d, row)| row.into_iter().collect::<Option<Vec<S>>>().map(|r| (d, r)))
        .collect();
    if complete.is_empty() {
        return Err(MarketDataError::EmptyIntersection(tickers.len()));
    }

    let dates = complete.iter().map(|(d, _)| *d).collect();
    let flat: Vec<S> = complete.into_iter().flat_map(|(_, r)| r).collect();
    let values = Array2::from_shape_vec((flat.len() / tickers.len(), tickers.len()), flat)
        .expect("rows have one entry per ticker");
    Ok(PriceMatrix { dates, tickers, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnMethod {
    #[default]
    Simple,
    Log,
}

/// Per-period returns; row `t` is the return from `dates[t-1]` to `dates[t]`
/// of the source prices and is stamped with the later date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsMatrix<S> {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    values: Array2<S>,
    method: ReturnMethod,
}

impl<S: Scalar> ReturnsMatrix<S> {
    pub fn from_parts(dates: Vec<NaiveDate>, tickers: Vec<String>, values: Array2<S>, method: ReturnMethod) -> Self {
        assert_eq!(values.dim(), (dates.len(), tickers.len()), "returns matrix shape");
        Self { dates, tickers, values, method }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn method(&self) -> ReturnMethod {
        self.method
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    /// Number of rows stamped on or before `as_of`.
    pub fn rows_through(&self, as_of: NaiveDate) -> usize {
        self.dates.partition_point(|d| *d <= as_of)
    }

    /// The last `len` rows stamped on or before `as_of`, restricted to `tickers`.
    pub fn window(&self, as_of: NaiveDate, len: usize, tickers: &[String]) -> Result<Self, MarketDataError> {
        let end = self.rows_through(as_of);
        if end < len {
            return Err(MarketDataError::InsufficientData { required: len, actual: end });
        }
        let cols = tickers
            .iter()
            .map(|t| {
                self.tickers
                    .iter()
                    .position(|x| x == t)
                    .ok_or_else(|| MarketDataError::UnknownTicker(t.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows = self.values.slice(ndarray::s![end - len..end, ..]);
        Ok(Self {
            dates: self.dates[end - len..end].to_vec(),
            tickers: tickers.to_vec(),
            values: rows.select(Axis(1), &cols),
            method: self.method,
        })
    }
}

pub fn compute_returns<S: Scalar>(prices: &PriceMatrix<S>, method: ReturnMethod) -> Result<ReturnsMatrix<S>, MarketDataError> {
    let t = prices.n_dates();
    if t < 2 {
        return Err(MarketDataError::InsufficientData { required: 2, actual: t });
    }
    let p = &prices.values;
    let values = Array2::from_shape_fn((t - 1, prices.n_assets()), |(r, c)| {
        let ratio = p[[r + 1, c]] / p[[r, c]];
        match method {
            ReturnMethod::Simple => ratio - S::one(),
            ReturnMethod::Log => ratio.ln(),
        }
    });
    Ok(ReturnsMatrix {
        dates: prices.dates[1..].to_vec(),
        tickers: prices.tickers.clone(),
        values,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    #[default]
    Daily,
    Monthly,
}

impl Period {
    /// 252 trading days or 12 months per year.
    pub fn default_annualization(self) -> f64 {
        match self {
            Period::Daily => 252.0,
            Period::Monthly => 12.0,
        }
    }
}

/// Expected returns and covariance of per-period returns, both scaled by the
/// annualization factor.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetStats<S> {
    pub tickers: Vec<String>,
    pub mu: Array1<S>,
    pub sigma: Array2<S>,
    pub period: Period,
    pub annualization_factor: S,
}

impl<S: Scalar> AssetStats<S> {
    /// Builds stats directly from moments, symmetrizing `sigma`.
    pub fn from_moments(tickers: Vec<String>, mu: Array1<S>, sigma: Array2<S>) -> Self {
        assert_eq!(tickers.len(), mu.len(), "one mu per ticker");
        assert_eq!(sigma.dim(), (mu.len(), mu.len()), "sigma dimension");
        let sigma = symmetrize(&sigma);
        Self { tickers, mu, sigma, period: Period::Daily, annualization_factor: S::one() }
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn volatility(&self, i: usize) -> S {
        self.sigma[[i, i]].max(S::zero()).sqrt()
    }

    /// Restriction to the given asset indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            tickers: indices.iter().map(|&i| self.tickers[i].clone()).collect(),
            mu: self.mu.select(Axis(0), indices),
            sigma: self.sigma.select(Axis(0), indices).select(Axis(1), indices),
            period: self.period,
            annualization_factor: self.annualization_factor,
        }
    }

    pub fn index_of(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    /// True when the smallest eigenvalue is at least `-tol * max eigenvalue`.
    pub fn is_psd(&self, tol: S) -> bool {
        if self.n() == 0 {
            return true;
        }
        let eig = linalg::symmetric_eigenvalues(&self.sigma);
        let max = eig.last().copied().unwrap_or(S::zero()).abs();
        eig[0] >= -tol * max
    }
}

fn symmetrize<S: Scalar>(m: &Array2<S>) -> Array2<S> {
    let half = S::lit(0.5);
    Array2::from_shape_fn(m.dim(), |(i, j)| if i == j { m[[i, i]] } else { (m[[i, j]] + m[[j, i]]) * half })
}

/// Column means and sample covariance (divisor `T - 1`), scaled by `annualization_factor`.
pub fn estimate_stats<S: Scalar>(
    returns: &ReturnsMatrix<S>,
    period: Period,
    annualization_factor: S,
) -> Result<AssetStats<S>, MarketDataError> {
    let (t, n) = returns.values.dim();
    if t < 2 {
        return Err(MarketDataError::InsufficientData { required: 2, actual: t });
    }
    let tt = S::from_usize_lossy(t);
    let means: Vec<S> = (0..n)
        .map(|c| returns.values.column(c).iter().copied().sum::<S>() / tt)
        .collect();

    let denom = S::from_usize_lossy(t - 1);
    let mut cov = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let s: S = (0..t)
                .map(|r| (returns.values[[r, i]] - means[i]) * (returns.values[[r, j]] - means[j]))
                .sum();
            let v = s / denom * annualization_factor;
            cov[[i, j]] = v;
            cov[[j, i]] = v;
        }
    }

    Ok(AssetStats {
        tickers: returns.tickers.clone(),
        mu: means.into_iter().map(|m| m * annualization_factor).collect(),
        sigma: symmetrize(&cov),
        period,
        annualization_factor,
    })
}

/// Ticker to sector name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorMap {
    entries: BTreeMap<String, String>,
}

impl SectorMap {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        Self { entries }
    }

    pub fn sector(&self, ticker: &str) -> Option<&str> {
        self.entries.get(ticker).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Tickers in `sector`, sorted.
    pub fn members<'a>(&'a self, sector: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(_, s)| s.as_str() == sector).map(|(t, _)| t.as_str())
    }

    /// Errors with the first ticker lacking a sector.
    pub fn check_covers(&self, tickers: &[String]) -> Result<(), MarketDataError> {
        match tickers.iter().find(|t| !self.entries.contains_key(*t)) {
            Some(t) => Err(MarketDataError::MissingSector(t.clone())),
            None => Ok(()),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MarketDataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["ticker", "sector"])?;
        for (t, s) in &self.entries {
            w.write_record([t, s])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Reads `ticker,sector` CSV.
pub fn load_sectors<R: Read>(source: R) -> Result<SectorMap, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = rdr.records();
    let header = records.next().ok_or(MarketDataError::Empty)??;
    if header.iter().collect::<Vec<_>>() != ["ticker", "sector"] {
        return Err(MarketDataError::Malformed { line: 1, message: "expected header `ticker,sector`".into() });
    }
    let mut entries = BTreeMap::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(MarketDataError::Malformed { line, message: "expected `ticker,sector`".into() });
        }
        if entries.insert(rec[0].to_string(), rec[1].to_string()).is_some() {
            return Err(MarketDataError::Malformed { line, message: format!("ticker {} listed twice", &rec[0]) });
        }
    }
    Ok(SectorMap { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    #[test]
    fn intersection_alignment() {
        let csv = "date,ticker,close\n\
                   2024-01-02,A,10\n2024-01-02,B,20\n\
                   2024-01-03,A,11\n2024-01-03,B,21\n\
                   2024-01-04,A,12\n\
                   2024-01-05,A,13\n2024-01-05,B,23\n";
        let m: PriceMatrix<f64> = load_prices(csv.as_bytes()).unwrap();
        assert_eq!(m.values().dim(), (3, 2));
        assert_eq!(m.dates(), &[d("2024-01-02"), d("2024-01-03"), d("2024-01-05")]);
        assert_eq!(m.tickers(), &["A".to_string(), "B".to_string()]);
        assert_eq!(m.values()[[2, 1]], 23.0);
    }

    #[test]
    fn negative_close_names_line() {
        let csv = "date,ticker,close\n2024-01-02,A,10\n2024-01-03,A,-5\n";
        let err = load_prices::<f64, _>(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, MarketDataError::NonPositivePrice { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn unordered_dates_are_sorted() {
        let csv = "date,ticker,close\r\n2024-01-05,A,3\r\n2024-01-02,A,1\r\n2024-01-03,A,2\r\n";
        let m: PriceMatrix<f64> = load_prices(csv.as_bytes()).unwrap();
        assert_eq!(m.row(0), vec![1.0]);
        assert_eq!(m.row(2), vec![3.0]);
    }

    #[test]
    fn rejects_duplicates_and_malformed() {
        let dup = "date,ticker,close\n2024-01-02,A,1\n2024-01-02,A,2\n";
        assert!(matches!(
            load_prices::<f64, _>(dup.as_bytes()).unwrap_err(),
            MarketDataError::Duplicate { line: 3, .. }
        ));
        let bad = "date,ticker,close\n2024-01-02,A\n";
        assert!(matches!(
            load_prices::<f64, _>(bad.as_bytes()).unwrap_err(),
            MarketDataError::Malformed { line: 2, .. }
        ));
        let bad_date = "date,ticker,close\n02/01/2024,A,1\n";
        assert!(matches!(
            load_prices::<f64, _>(bad_date.as_bytes()).unwrap_err(),
            MarketDataError::Malformed { line: 2, .. }
        ));
        let header = "day,ticker,close\n2024-01-02,A,1\n";
        assert!(matches!(
            load_prices::<f64, _>(header.as_bytes()).unwrap_err(),
            MarketDataError::Malformed { line: 1, .. }
        ));
    }

    #[test]
    fn disjoint_dates_error() {
        let csv = "date,ticker,close\n2024-01-02,A,1\n2024-01-03,B,2\n";
        assert!(matches!(
            load_prices::<f64, _>(csv.as_bytes()).unwrap_err(),
            MarketDataError::EmptyIntersection(2)
        ));
    }

    fn single(vals: &[f64]) -> PriceMatrix<f64> {
        let dates = (0..vals.len()).map(|i| d("2024-01-01") + chrono::Days::new(i as u64)).collect();
        PriceMatrix::new(dates, vec!["A".into()], Array2::from_shape_vec((vals.len(), 1), vals.to_vec()).unwrap())
    }

    #[test]
    fn simple_and_log_returns() {
        let r = compute_returns(&single(&[100.0, 110.0]), ReturnMethod::Simple).unwrap();
        assert!((r.values()[[0, 0]] - 0.10).abs() < 1e-15);

        let r = compute_returns(&single(&[5.0, 5.0, 5.0]), ReturnMethod::Simple).unwrap();
        assert!(r.values().iter().all(|v| *v == 0.0));

        let r = compute_returns(&single(&[100.0, 110.0, 99.0]), ReturnMethod::Log).unwrap();
        assert_eq!(r.values()[[0, 0]], (1.1f64).ln());
        assert_eq!(r.values()[[1, 0]], (0.9f64).ln());
        assert_eq!(r.n_rows(), 2);

        assert!(compute_returns(&single(&[1.0]), ReturnMethod::Simple).is_err());
    }

    fn returns(cols: &[&[f64]]) -> ReturnsMatrix<f64> {
        let t = cols[0].len();
        let dates = (0..t).map(|i| d("2024-01-01") + chrono::Days::new(i as u64)).collect();
        let tickers = (0..cols.len()).map(|i| format!("T{i}")).collect();
        let values = Array2::from_shape_fn((t, cols.len()), |(r, c)| cols[c][r]);
        ReturnsMatrix::from_parts(dates, tickers, values, ReturnMethod::Simple)
    }

    #[test]
    fn stats_constant_series() {
        let s = estimate_stats(&returns(&[&[0.1, 0.1]]), Period::Daily, 1.0).unwrap();
        assert!((s.mu[0] - 0.1).abs() < 1e-15);
        assert_eq!(s.sigma[[0, 0]], 0.0);
    }

    #[test]
    fn stats_anticorrelated_pair() {
        let s = estimate_stats(&returns(&[&[0.1, -0.1], &[-0.1, 0.1]]), Period::Daily, 1.0).unwrap();
        assert!((s.sigma[[0, 1]] + 0.02).abs() < 1e-15);
        assert!((s.sigma[[0, 0]] - 0.02).abs() < 1e-15);
        assert!((s.sigma[[1, 1]] - 0.02).abs() < 1e-15);
        assert_eq!(s.sigma, s.sigma.t());
    }

    #[test]
    fn stats_need_two_rows() {
        assert!(estimate_stats(&returns(&[&[0.1]]), Period::Daily, 1.0).is_err());
    }

    #[test]
    fn month_end_sampling() {
        let dates = vec![d("2024-01-30"), d("2024-01-31"), d("2024-02-01"), d("2024-02-29"), d("2024-03-01")];
        let m = PriceMatrix::new(dates, vec!["A".into()], Array2::from_shape_vec((5, 1), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap());
        let me = m.month_ends();
        assert_eq!(me.dates(), &[d("2024-01-31"), d("2024-02-29"), d("2024-03-01")]);
        assert_eq!(me.row(1), vec![4.0]);
    }

    #[test]
    fn window_selects_trailing_rows() {
        let r = returns(&[&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]]);
        let w = r.window(d("2024-01-03"), 2, &["T1".to_string()]).unwrap();
        assert_eq!(w.values().column(0).to_vec(), vec![6.0, 7.0]);
        assert!(r.window(d("2024-01-02"), 3, &["T0".to_string()]).is_err());
    }

    #[test]
    fn sectors_roundtrip() {
        let csv = "ticker,sector\nA,Tech\nB,Energy\nC,Tech\n";
        let s = load_sectors(csv.as_bytes()).unwrap();
        assert_eq!(s.members("Tech").collect::<Vec<_>>(), vec!["A", "C"]);
        assert!(s.check_covers(&["A".into(), "Z".into()]).is_err());
        let dup = "ticker,sector\nA,Tech\nA,Energy\n";
        assert!(load_sectors(dup.as_bytes()).is_err());
    }
}
