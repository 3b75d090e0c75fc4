//! Text rendering of result and backtest JSON.

use std::collections::BTreeSet;

use annealfolio::allocator::MetricsReport;
use annealfolio::BacktestReport;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

/// The part of an `optimize` result (or a hand-written fixture) the weights
/// table needs.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct WeightsInput {
    pub metrics: MetricsReport,
    #[serde(default)]
    pub benchmark: Option<MetricsReport>,
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_sharpe(m: &MetricsReport) -> String {
    if m.sharpe_infinite {
        if m.sharpe > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        fmt2(m.sharpe)
    }
}

fn layout(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let rule: String = widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("+");
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!(" {s:<w$} ", w = widths[c]) } else { format!(" {s:>w$} ", w = widths[c]) })
            .collect();
        out.push_str(cells.join("|").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&rule);
            out.push('\n');
        }
    }
    out
}

/// Per-asset weights in percent followed by Returns, Risk, Sharpe Ratio and
/// Diversification Ratio rows, all to two decimals.
pub fn render_weights_table(input: &WeightsInput) -> Result<String, CliError> {
    if input.metrics.weights.is_empty() {
        return Err(CliError::Input("result carries no algorithm weights".into()));
    }
    let bench = input.benchmark.as_ref();
    let names: BTreeSet<&String> =
        input.metrics.weights.keys().chain(bench.into_iter().flat_map(|b| b.weights.keys())).collect();

    let mut header = vec!["Name of the stock".to_string(), "Weights by algorithm".to_string()];
    if bench.is_some() {
        header.push("Weights in benchmark".to_string());
    }
    let mut rows = vec![header];
    for name in names {
        let mut row = vec![name.clone(), fmt2(input.metrics.weights.get(name).copied().unwrap_or(0.0))];
        if let Some(b) = bench {
            row.push(fmt2(b.weights.get(name).copied().unwrap_or(0.0)));
        }
        rows.push(row);
    }
    type Metric = fn(&MetricsReport) -> String;
    let metric_rows: [(&str, Metric); 4] = [
        ("Returns", |m| fmt2(m.return_pct)),
        ("Risk", |m| fmt2(m.risk_pct)),
        ("Sharpe Ratio", fmt_sharpe),
        ("Diversification Ratio", |m| fmt2(m.diversification_ratio)),
    ];
    for (label, f) in metric_rows {
        let mut row = vec![label.to_string(), f(&input.metrics)];
        if let Some(b) = bench {
            row.push(f(b));
        }
        rows.push(row);
    }
    Ok(layout(&rows))
}

/// Start and end values of both series, total return and event count.
pub fn render_backtest_summary(report: &BacktestReport) -> Result<String, CliError> {
    let (Some(a0), Some(b0)) = (report.algo_values.first(), report.bench_values.first()) else {
        return Err(CliError::Input("backtest report has no dates".into()));
    };
    let (a1, b1) = (report.final_values.algo, report.final_values.bench);
    let pct = |end: f64, start: f64| fmt2((end / start - 1.0) * 100.0);
    let rows = vec![
        vec!["".to_string(), "Algorithm".to_string(), "Benchmark".to_string()],
        vec!["Start".to_string(), report.dates[0].to_string(), report.dates[0].to_string()],
        vec!["End".to_string(), report.dates[report.dates.len() - 1].to_string(), report.dates[report.dates.len() - 1].to_string()],
        vec!["Initial value".to_string(), fmt2(*a0), fmt2(*b0)],
        vec!["Final value".to_string(), fmt2(a1), fmt2(b1)],
        vec!["Return (%)".to_string(), pct(a1, *a0), pct(b1, *b0)],
        vec!["Rebalance events".to_string(), report.events.len().to_string(), "0".to_string()],
    ];
    Ok(layout(&rows))
}

/// Renders whichever kind of document `text` holds.
pub fn render_json(text: &str) -> Result<String, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed JSON: {e}")))?;
    if value.get("metrics").is_some() {
        let input: WeightsInput =
            serde_json::from_value(value).map_err(|e| CliError::Input(format!("malformed result: {e}")))?;
        render_weights_table(&input)
    } else if value.get("final").is_some() && value.get("algo").is_some() {
        let report: BacktestReport =
            serde_json::from_value(value).map_err(|e| CliError::Input(format!("malformed backtest report: {e}")))?;
        render_backtest_summary(&report)
    } else {
        Err(CliError::Input("expected an optimize result or a backtest report".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_columns() {
        let text = r#"{
            "metrics": {"return_pct": 12.0, "risk_pct": 8.0, "sharpe": 1.5, "diversification_ratio": 1.2,
                        "weights": {"A": 60.0, "B": 40.0}},
            "benchmark": {"return_pct": 10.0, "risk_pct": 9.0, "sharpe": 1.111, "diversification_ratio": 1.1,
                          "weights": {"A": 50.0, "C": 50.0}}
        }"#;
        let table = render_json(text).unwrap();
        assert!(table.contains("Weights in benchmark"));
        let c_row = table.lines().find(|l| l.trim_start().starts_with("C ")).unwrap();
        assert!(c_row.contains("0.00") && c_row.contains("50.00"));
        assert!(table.lines().any(|l| l.contains("Sharpe Ratio") && l.contains("1.50") && l.contains("1.11")));
    }

    #[test]
    fn empty_weights_rejected() {
        let text = r#"{"metrics": {"return_pct": 1, "risk_pct": 1, "sharpe": 1, "diversification_ratio": 1, "weights": {}}}"#;
        assert!(matches!(render_json(text), Err(CliError::Input(_))));
        assert!(matches!(render_json("{not json"), Err(CliError::Input(_))));
        assert!(matches!(render_json("{}"), Err(CliError::Input(_))));
    }
}
