//! Command implementations.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use annealfolio::allocator::{compute_metrics, MetricsReport};
use annealfolio::marketdata::{load_prices, load_sectors, SectorMap};
use annealfolio::pipeline::{estimate_at, run_pipeline, PipelineError};
use annealfolio::rebalance::{run_backtest, Benchmark, RebalanceError};
use annealfolio::synthetic::{bundled_benchmark_weights, bundled_config, generate};
use annealfolio::{PriceMatrix, WeightVector};

use crate::config::{load, resolve_benchmark, RunConfig};
use crate::report::{render_json, render_weights_table, WeightsInput};
use crate::{CliError, RunArgs};

fn open(what: &str, path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open {what} file {}: {e}", path.display())))
}

fn read_prices(cfg: &RunConfig) -> Result<PriceMatrix, CliError> {
    load_prices(open("price", &cfg.prices)?).map_err(|e| CliError::Input(format!("{}: {e}", cfg.prices.display())))
}

fn read_sectors(path: &Path) -> Result<SectorMap, CliError> {
    load_sectors(open("sector", path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn pipeline_error(e: PipelineError) -> CliError {
    match e {
        PipelineError::InvalidConfig(m) => CliError::Config(m),
        PipelineError::CardinalityTooLarge { .. } => CliError::Config(e.to_string()),
        other => runtime(other),
    }
}

fn benchmark_weights(bench: &Benchmark<f64>, prices: &PriceMatrix) -> Result<WeightVector, CliError> {
    let w = match bench {
        Benchmark::Weights(w) => w.clone(),
        Benchmark::Ticker(t) => WeightVector::equal(vec![t.clone()]).map_err(runtime)?,
        Benchmark::EqualWeight => WeightVector::equal(prices.tickers().to_vec()).map_err(runtime)?,
    };
    if let Some(t) = w.tickers().iter().find(|t| prices.ticker_index(t).is_none()) {
        return Err(CliError::Input(format!("benchmark ticker {t} has no prices")));
    }
    Ok(w)
}

/// Runs the configured strategy at the last date and writes `result.json`
/// and `weights.txt` to the output directory.
pub fn cmd_optimize(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let prices = read_prices(&cfg)?;
    let bench = resolve_benchmark(&cfg.benchmark)?;
    let bench_w = benchmark_weights(&bench, &prices)?;

    let result = run_pipeline(&prices, &cfg.pipeline).map_err(pipeline_error)?;
    let last = prices.n_dates() - 1;
    let stats = estimate_at(&prices, last, &cfg.pipeline.estimation).map_err(pipeline_error)?;
    let bench_metrics = compute_metrics(&bench_w, &stats, &cfg.pipeline.allocator).map_err(runtime)?;

    let mut view = result.to_json_view();
    view.benchmark = Some(MetricsReport::new(&bench_metrics, &bench_w));
    let json = serde_json::to_string_pretty(&view).map_err(runtime)?;

    let out = cfg.out_dir();
    write(&out.join("result.json"), &json)?;
    match &view.metrics {
        Some(metrics) => {
            let table = render_weights_table(&WeightsInput { metrics: metrics.clone(), benchmark: view.benchmark.clone() })?;
            write(&out.join("weights.txt"), &table)?;
            print!("{table}");
        }
        None => println!("no shares bought; {:.2} held in cash", view.cash),
    }
    println!("shares: {}", serde_json::to_string(&view.shares).map_err(runtime)?);
    println!("cash: {:.2}", view.cash);
    eprintln!("wrote {}", out.join("result.json").display());
    Ok(())
}

/// Runs the rebalancing backtest and writes `backtest.json` and `plot.csv`.
pub fn cmd_backtest(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(args)?;
    let prices = read_prices(&cfg)?;
    let sectors_path = cfg
        .sectors
        .as_ref()
        .ok_or_else(|| CliError::Config("backtest needs a sector file: pass --sectors or set \"sectors\"".into()))?;
    let sectors = read_sectors(sectors_path)?;
    let bench = resolve_benchmark(&cfg.benchmark)?;
    benchmark_weights(&bench, &prices)?;

    let report = run_backtest(&prices, &sectors, cfg.pipeline.budget, &cfg.pipeline, &cfg.policy, &bench, cfg.start)
        .map_err(|e| match e {
            RebalanceError::Pipeline(p) => pipeline_error(p),
            RebalanceError::InvalidPolicy(m) => CliError::Config(m),
            RebalanceError::MarketData(m) => CliError::Input(m.to_string()),
            other => runtime(other),
        })?;
    if report.events.is_empty() {
        eprintln!(
            "warning: no rebalance boundary falls inside the data ({}-month period from {})",
            cfg.policy.period_months, report.config.start
        );
    }

    let out = cfg.out_dir();
    write(&out.join("backtest.json"), &report.to_json())?;
    let mut csv = Vec::new();
    report.write_plot_csv(&mut csv).map_err(runtime)?;
    write(&out.join("plot.csv"), &String::from_utf8(csv).map_err(runtime)?)?;

    println!("rebalance events: {}", report.events.len());
    println!("final algorithm value: {:.2}", report.final_algo());
    println!("final benchmark value: {:.2}", report.final_bench());
    eprintln!("wrote {}", out.join("backtest.json").display());
    Ok(())
}

pub fn cmd_report(path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    print!("{}", render_json(&text)?);
    Ok(())
}

/// Writes `prices.csv`, `sectors.csv` and `benchmark.csv` for the bundled universe.
pub fn cmd_gen_data(out_dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut spec = bundled_config();
    if let Some(s) = seed {
        spec.seed = s;
    }
    let (prices, sectors) = generate(&spec);
    let mut buf = Vec::new();
    prices.write_csv(&mut buf).map_err(runtime)?;
    write(&out_dir.join("prices.csv"), &String::from_utf8(buf).map_err(runtime)?)?;
    let mut buf = Vec::new();
    sectors.write_csv(&mut buf).map_err(runtime)?;
    write(&out_dir.join("sectors.csv"), &String::from_utf8(buf).map_err(runtime)?)?;
    let mut bench = String::from("ticker,weight\n");
    for (t, w) in bundled_benchmark_weights() {
        bench.push_str(&format!("{t},{w:.2}\n"));
    }
    write(&out_dir.join("benchmark.csv"), &bench)?;
    eprintln!("wrote {} dates x {} tickers to {}", prices.n_dates(), prices.n_assets(), out_dir.display());
    Ok(())
}
