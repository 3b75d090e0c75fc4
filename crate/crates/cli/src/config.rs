//! On-disk run configuration: one JSON document plus flag overrides.

use std::path::{Path, PathBuf};

use annealfolio::rebalance::{Benchmark, RebalancePolicy};
use annealfolio::{PipelineConfig, WeightVector};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{CliError, RunArgs};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkSpec {
    #[default]
    EqualWeight,
    /// `ticker,weight` CSV; weights are normalized to sum to one.
    WeightsFile(PathBuf),
    Ticker(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub prices: PathBuf,
    #[serde(default)]
    pub sectors: Option<PathBuf>,
    #[serde(default)]
    pub benchmark: BenchmarkSpec,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Copied into the pipeline config; required.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub start: Option<NaiveDate>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub policy: RebalancePolicy<f64>,
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seed.expect("seed checked at load")
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Rewrites a relative path string at `key` to be relative to `base`.
fn rebase(obj: &mut Map<String, Value>, key: &str, base: &Path) {
    if let Some(Value::String(p)) = obj.get(key) {
        let path = Path::new(p);
        if path.is_relative() {
            obj.insert(key.to_string(), Value::String(base.join(path).to_string_lossy().into_owned()));
        }
    }
}

/// Sets `dotted.key` in a JSON object, creating intermediate objects.
pub fn set_path(root: &mut Value, dotted: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let parts: Vec<&str> = dotted.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("cannot set `{dotted}`: `{part}` is inside a non-object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Flag text as JSON when it parses, otherwise as a string.
fn loose_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

fn path_value(p: &Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

fn overrides(args: &RunArgs) -> Result<Vec<(String, Value)>, CliError> {
    let mut out = Vec::new();
    let mut put = |k: &str, v: Value| out.push((k.to_string(), v));
    if let Some(p) = &args.prices {
        put("prices", path_value(p));
    }
    if let Some(p) = &args.sectors {
        put("sectors", path_value(p));
    }
    if let Some(p) = &args.benchmark {
        put("benchmark", serde_json::json!({ "weights_file": path_value(p) }));
    }
    if let Some(t) = &args.benchmark_ticker {
        put("benchmark", serde_json::json!({ "ticker": t }));
    }
    if let Some(b) = args.budget {
        put("pipeline.budget", b.into());
    }
    if let Some(s) = &args.strategy {
        put("pipeline.strategy", Value::String(s.clone()));
    }
    if let Some(s) = args.seed {
        put("seed", s.into());
    }
    if let Some(p) = &args.out_dir {
        put("out_dir", path_value(p));
    }
    if let Some(c) = &args.cardinality {
        put("pipeline.cardinality", loose_value(c));
    }
    if let Some(q) = args.q {
        put("pipeline.q", q.into());
    }
    if let Some(l) = &args.lambda {
        put("pipeline.lambda", loose_value(l));
    }
    if let Some(m) = args.period_months {
        put("policy.period_months", m.into());
    }
    if let Some(s) = &args.start {
        put("start", Value::String(s.clone()));
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        put(k.trim(), loose_value(v.trim()));
    }
    Ok(out)
}

fn require_file(what: &str, p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Input(format!("{what} file not found: {}", p.display())))
    }
}

/// Reads the config file (if any), applies flag overrides and validates.
///
/// Relative paths inside the config file resolve against the file's
/// directory; paths given as flags resolve against the working directory.
pub fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut root = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
            let mut v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new("."));
            let obj = v
                .as_object_mut()
                .ok_or_else(|| CliError::Config(format!("{}: expected a JSON object", path.display())))?;
            for key in ["prices", "sectors", "out_dir"] {
                rebase(obj, key, base);
            }
            if let Some(Value::Object(b)) = obj.get_mut("benchmark") {
                rebase(b, "weights_file", base);
            }
            v
        }
        None => Value::Object(Map::new()),
    };
    for (k, v) in overrides(args)? {
        set_path(&mut root, &k, v)?;
    }
    if root.get("prices").is_none() {
        return Err(CliError::Config("no price file: pass --prices or set \"prices\" in the config".into()));
    }

    let mut cfg: RunConfig = serde_json::from_value(root).map_err(|e| CliError::Config(e.to_string()))?;
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Config("a seed is required: pass --seed or set \"seed\" in the config".into()))?;
    cfg.pipeline.seed = seed;
    cfg.pipeline.validate().map_err(|e| CliError::Config(e.to_string()))?;
    cfg.policy.validate().map_err(|e| CliError::Config(e.to_string()))?;

    require_file("price", &cfg.prices)?;
    if let Some(s) = &cfg.sectors {
        require_file("sector", s)?;
    }
    if let BenchmarkSpec::WeightsFile(p) = &cfg.benchmark {
        require_file("benchmark", p)?;
    }
    Ok(cfg)
}

/// Reads `ticker,weight` rows into normalized weights.
pub fn load_benchmark_weights(path: &Path) -> Result<WeightVector, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read benchmark {}: {e}", path.display())))?;
    let mut tickers = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("ticker,weight")) {
            continue;
        }
        let bad = || CliError::Input(format!("{}:{}: expected `ticker,weight`", path.display(), i + 1));
        let (t, w) = line.split_once(',').ok_or_else(bad)?;
        let w: f64 = w.trim().parse().map_err(|_| bad())?;
        tickers.push(t.trim().to_string());
        weights.push(w);
    }
    WeightVector::normalized(tickers, weights)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn resolve_benchmark(spec: &BenchmarkSpec) -> Result<Benchmark<f64>, CliError> {
    Ok(match spec {
        BenchmarkSpec::EqualWeight => Benchmark::EqualWeight,
        BenchmarkSpec::Ticker(t) => Benchmark::Ticker(t.clone()),
        BenchmarkSpec::WeightsFile(p) => Benchmark::Weights(load_benchmark_weights(p)?),
    })
}
