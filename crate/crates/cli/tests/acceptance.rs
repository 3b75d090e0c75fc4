//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.
//!
//! Expected values come from oracles written here: brute-force enumeration,
//! dense simplex scans and closed-form two-asset solutions.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use annealfolio::allocator::{compute_metrics, max_sharpe_weights, AllocatorConfig, WeightVector};
use annealfolio::marketdata::AssetStats;
use annealfolio::model::{build_mvo_qubo, ising_to_qubo, mpt_objective, qubo_to_ising, QuboModel};
use annealfolio::pipeline::{estimate_at, optimize_integer_shares, run_pipeline, PipelineConfig, Strategy};
use annealfolio::rebalance::run_backtest;
use annealfolio::sampler::{exhaustive_solve, simulated_anneal, ScheduleConfig};
use annealfolio::marketdata::{load_prices, load_sectors};
use annealfolio_cli::config::{load, resolve_benchmark};
use annealfolio_cli::report::render_json;
use annealfolio_cli::RunArgs;
use chrono::NaiveDate;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Energy straight from the coefficient lists, without the model type.
fn raw_qubo_energy(linear: &[f64], quad: &[(usize, usize, f64)], offset: f64, x: &[bool]) -> f64 {
    let lin: f64 = linear.iter().zip(x).filter(|(_, &b)| b).map(|(a, _)| a).sum();
    let q: f64 = quad.iter().filter(|(i, j, _)| x[*i] && x[*j]).map(|(_, _, v)| v).sum();
    offset + lin + q
}

fn random_qubo(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<(usize, usize, f64)>, f64) {
    let linear = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let mut quad = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            quad.push((i, j, rng.random_range(lo..hi)));
        }
    }
    (linear, quad, rng.random_range(lo..hi))
}

/// Σ = AᵀA / n with A_ij ~ U(-s, s), plus a small ridge.
fn random_cov(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array2<f64> {
    let a = Array2::from_shape_fn((n, n), |_| rng.random_range(-scale..scale));
    let mut s = a.t().dot(&a) / n as f64;
    for i in 0..n {
        s[[i, i]] += scale * scale * 0.05;
    }
    s
}

fn stats(mu: Vec<f64>, sigma: Array2<f64>) -> AssetStats<f64> {
    let tickers = (0..mu.len()).map(|i| format!("A{i}")).collect();
    AssetStats::from_moments(tickers, Array1::from(mu), sigma)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst_energy: f64 = 0.0;
    let mut worst_coef: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let (linear, quad, offset) = random_qubo(&mut rng, n, -2.0, 2.0);
        let m = QuboModel::from_terms(linear.clone(), quad.iter().copied(), offset).unwrap();
        let ising = qubo_to_ising(&m);
        for mask in 0..1u64 << n {
            let x = bits(mask, n);
            let s: Vec<f64> = x.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
            let e_ising = ising.offset()
                + ising.h().iter().zip(&s).map(|(h, s)| h * s).sum::<f64>()
                + ising.coupling().iter().map(|(&(i, j), v)| v * s[i] * s[j]).sum::<f64>();
            worst_energy = worst_energy.max((raw_qubo_energy(&linear, &quad, offset, &x) - e_ising).abs());
        }
        let back = ising_to_qubo(&ising);
        worst_coef = worst_coef.max((back.offset() - offset).abs());
        for i in 0..n {
            worst_coef = worst_coef.max((back.linear()[i] - linear[i]).abs());
        }
        for &(i, j, v) in &quad {
            worst_coef = worst_coef.max((back.coupling(i, j) - v).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst_energy <= 1e-9 && worst_coef <= 1e-12 && elapsed < Duration::from_secs(10),
        format!("max energy gap {worst_energy:.2e}, max coefficient drift {worst_coef:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let (mut exact, mut within) = (0, 0);
    let mut worst_gap: f64 = 0.0;
    let mut oracle_checked = 0;
    for inst in 0..100u64 {
        let (linear, quad, _) = random_qubo(&mut rng, 16, -1.0, 1.0);
        let m = QuboModel::from_terms(linear.clone(), quad.iter().copied(), 0.0).unwrap();
        let opt = exhaustive_solve(&m, Some(1)).unwrap().best().unwrap().energy;
        if inst < 3 {
            // independent brute force on a few instances
            let brute = (0..1u64 << 16)
                .map(|mask| raw_qubo_energy(&linear, &quad, 0.0, &bits(mask, 16)))
                .fold(f64::INFINITY, f64::min);
            assert!((brute - opt).abs() < 1e-9, "exhaustive solver disagrees with brute force");
            oracle_checked += 1;
        }
        let schedule = ScheduleConfig::default().resolve(m.max_abs_coefficient(), m.n()).unwrap();
        let best = simulated_anneal(&m, &schedule, 1000 + inst).unwrap().best().unwrap().energy;
        let gap = (best - opt) / opt.abs().max(1e-12);
        worst_gap = worst_gap.max(gap);
        if (best - opt).abs() <= 1e-9 {
            exact += 1;
        }
        if gap <= 0.02 {
            within += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        exact >= 95 && within == 100 && elapsed < Duration::from_secs(60),
        format!(
            "{exact}/100 optimal, {within}/100 within 2% (worst {:.3}%), oracle cross-checked on {oracle_checked}, {elapsed:.2?}",
            worst_gap * 100.0
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let mut ok = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        let k = rng.random_range(1..=n);
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.4)).collect();
        let s = stats(mu, random_cov(&mut rng, n, 0.3));
        let q = rng.random_range(0.1..5.0);
        let m = build_mvo_qubo(&s, q, k, None).unwrap();
        let energies: Vec<f64> = (0..1u64 << n).map(|mask| m.energy(&bits(mask, n)).unwrap()).collect();
        let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let all_feasible = energies
            .iter()
            .enumerate()
            .filter(|(_, e)| **e <= min + 1e-12)
            .all(|(mask, _)| (mask as u64).count_ones() as usize == k);
        if all_feasible {
            ok += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(ok == 100 && elapsed < Duration::from_secs(30), format!("{ok}/100 minimizers meet the cardinality, {elapsed:.2?}"))
}

fn sharpe_of(w: &[f64], mu: &[f64], sigma: &Array2<f64>) -> f64 {
    let n = w.len();
    let ret: f64 = w.iter().zip(mu).map(|(a, b)| a * b).sum();
    let mut var = 0.0;
    for i in 0..n {
        for j in 0..n {
            var += w[i] * sigma[[i, j]] * w[j];
        }
    }
    ret / var.sqrt()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = AllocatorConfig::default();
    let mut worst_kkt: f64 = 0.0;
    let mut worst_shortfall = f64::NEG_INFINITY;
    for _ in 0..50 {
        let n = rng.random_range(2..=4);
        let mut mu: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.3)).collect();
        if mu.iter().all(|m| *m <= 0.0) {
            mu[0] = 0.1;
        }
        let sigma = random_cov(&mut rng, n, 0.3);
        let s = stats(mu.clone(), sigma.clone());
        let all: Vec<usize> = (0..n).collect();
        let sol = max_sharpe_weights(&s, &all, &cfg).unwrap();
        worst_kkt = worst_kkt.max(sol.kkt.max_residual());
        let got = sharpe_of(sol.weights.weights(), &mu, &sigma);

        // uniform points on the simplex via sorted uniforms, plus the vertices
        let mut best = f64::NEG_INFINITY;
        for v in 0..n {
            let mut w = vec![0.0; n];
            w[v] = 1.0;
            best = best.max(sharpe_of(&w, &mu, &sigma));
        }
        let mut cuts = vec![0.0; n + 1];
        for _ in 0..1_000_000 {
            cuts[0] = 0.0;
            cuts[n] = 1.0;
            for c in cuts.iter_mut().take(n).skip(1) {
                *c = rng.random::<f64>();
            }
            cuts[1..n].sort_by(|a, b| a.partial_cmp(b).unwrap());
            let w: Vec<f64> = (0..n).map(|i| cuts[i + 1] - cuts[i]).collect();
            best = best.max(sharpe_of(&w, &mu, &sigma));
        }
        worst_shortfall = worst_shortfall.max(best - got);
    }

    // closed form: Σ = diag(0.01, 0.04), μ = (0.1, 0.2) gives y = (5, 2.5)
    let s = stats(vec![0.1, 0.2], Array2::from_diag(&Array1::from(vec![0.01, 0.04])));
    let sol = max_sharpe_weights(&s, &[0, 1], &cfg).unwrap();
    let m = compute_metrics(&sol.weights, &s, &cfg).unwrap();
    let w = sol.weights.weights();
    let analytic = (m.sharpe - 2f64.sqrt()).abs() <= 1e-6 && (w[0] - 2.0 / 3.0).abs() <= 1e-8 && (w[1] - 1.0 / 3.0).abs() <= 1e-8;

    outcome(
        worst_kkt <= 1e-8 && worst_shortfall <= 1e-6 && analytic,
        format!(
            "max KKT residual {worst_kkt:.2e}, max scan excess {worst_shortfall:.2e}, two-asset Sharpe {:.9} w = ({:.9}, {:.9})",
            m.sharpe, w[0], w[1]
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = AllocatorConfig::default();
    let one = stats(vec![0.12], Array2::from_elem((1, 1), 0.09));
    let m1 = compute_metrics(&WeightVector::equal(vec!["A0".into()]).unwrap(), &one, &cfg).unwrap();
    let two = stats(vec![0.1, 0.05], Array2::from_diag(&Array1::from(vec![0.04, 0.04])));
    let w2 = WeightVector::equal(vec!["A0".into(), "A1".into()]).unwrap();
    let m2 = compute_metrics(&w2, &two, &cfg).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let s = stats((0..n).map(|_| rng.random_range(-0.2..0.4)).collect(), random_cov(&mut rng, n, 0.3));
        let w = WeightVector::normalized(s.tickers.clone(), (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let m = compute_metrics(&w, &s, &cfg).unwrap();
        if m.risk > 0.0 {
            worst = worst.max((m.sharpe - m.expected_return / m.risk).abs());
        }
    }
    let pass = m1.diversification_ratio == 1.0 && (m2.diversification_ratio - 2f64.sqrt()).abs() <= 1e-9 && worst <= 1e-12;
    outcome(
        pass,
        format!(
            "single-asset DR {}, two-asset DR {:.12}, max |sharpe - return/risk| {worst:.2e}",
            m1.diversification_ratio, m2.diversification_ratio
        ),
    )
}

/// Minimum of the integer-share objective over the whole budget-feasible grid.
fn brute_force_shares(s: &AssetStats<f64>, prices: &[f64], budget: f64, q: f64) -> f64 {
    let upper: Vec<u64> = prices.iter().map(|p| (budget / p).floor() as u64).collect();
    let mut x = vec![0u64; prices.len()];
    let mut best = f64::INFINITY;
    loop {
        let spend: f64 = x.iter().zip(prices).map(|(&n, p)| n as f64 * p).sum();
        if spend <= budget {
            best = best.min(mpt_objective(s, prices, &x, q));
        }
        let mut i = 0;
        loop {
            if i == x.len() {
                return best;
            }
            if x[i] < upper[i] {
                x[i] += 1;
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let start = Instant::now();
    let day = NaiveDate::from_ymd_opt(2024, 1, 2).unwrap();
    let (mut matched, mut violations, mut max_bits) = (0, 0, 0);
    let mut misses = Vec::new();
    for inst in 0..25u64 {
        let n = rng.random_range(2..=4);
        let prices: Vec<f64> = (0..n).map(|_| (rng.random_range(10.0..80.0f64) * 100.0).round() / 100.0).collect();
        let budget = rng.random_range(100.0..400.0f64).round();
        let s = stats((0..n).map(|_| rng.random_range(0.02..0.3)).collect(), random_cov(&mut rng, n, 0.4));
        let q = rng.random_range(1.0..10.0);
        let cfg = PipelineConfig { strategy: Strategy::FullyQuantum, budget, q, seed: 600 + inst, ..PipelineConfig::default() };
        let sol = match optimize_integer_shares(&s, &prices, day, &cfg) {
            Ok(sol) => sol,
            Err(e) => {
                misses.push(format!("#{inst}: {e}"));
                continue;
            }
        };
        max_bits = max_bits.max(sol.share_bits);
        let shares: Vec<u64> = s.tickers.iter().map(|t| sol.holdings.shares[t]).collect();
        let spend: f64 = shares.iter().zip(&prices).map(|(&x, p)| x as f64 * p).sum();
        if spend > budget + 1e-9 {
            violations += 1;
        }
        let oracle = brute_force_shares(&s, &prices, budget, q / budget);
        if (sol.objective - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()) {
            matched += 1;
        } else {
            misses.push(format!("#{inst}: {:.6} vs {:.6}", sol.objective, oracle));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        matched >= 23 && violations == 0 && max_bits <= 64 && elapsed < Duration::from_secs(60),
        format!(
            "{matched}/25 match brute force, {violations} budget violations, max {max_bits} share bits, {elapsed:.2?}{}",
            if misses.is_empty() { String::new() } else { format!("; misses: {}", misses.join(", ")) }
        ),
    )
}

fn bundled_args() -> RunArgs {
    RunArgs { config: Some(data_dir().join("config.json")), ..RunArgs::default() }
}

fn criterion_7() -> Outcome {
    let cfg = load(&bundled_args()).unwrap();
    let prices = load_prices::<f64, _>(std::fs::File::open(&cfg.prices).unwrap()).unwrap();
    let sectors = load_sectors(std::fs::File::open(cfg.sectors.as_ref().unwrap()).unwrap()).unwrap();
    let bench = resolve_benchmark(&cfg.benchmark).unwrap();
    let run = || run_backtest(&prices, &sectors, cfg.pipeline.budget, &cfg.pipeline, &cfg.policy, &bench, cfg.start).unwrap();
    let a = run();
    let b = run();
    let identical = a.to_json() == b.to_json();

    let mut worst: f64 = 0.0;
    for e in &a.events {
        let proceeds: f64 = e.sold.values().map(|t| t.amount).sum();
        let cost: f64 = e.bought.values().map(|t| t.amount).sum();
        worst = worst.max((proceeds + e.pre_cash - cost - e.post_cash).abs());
        worst = worst.max((e.value_before - e.value_after).abs());
    }
    outcome(
        a.events.len() == 4 && worst <= 0.005 && identical,
        format!(
            "{} events over {} trading days, max cash imbalance {worst:.2e}, byte-identical reruns: {identical}",
            a.events.len(),
            a.dates.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = load(&bundled_args()).unwrap();
    let prices = load_prices::<f64, _>(std::fs::File::open(&cfg.prices).unwrap()).unwrap();
    let pipeline = PipelineConfig { strategy: Strategy::Hybrid, ..cfg.pipeline.clone() };
    let result = run_pipeline(&prices, &pipeline).unwrap();
    let stats = estimate_at(&prices, prices.n_dates() - 1, &pipeline.estimation).unwrap();
    let ew = WeightVector::equal(prices.tickers().to_vec()).unwrap();
    let ew_sharpe = compute_metrics(&ew, &stats, &pipeline.allocator).unwrap().sharpe;
    let (_, realized) = result.realized.as_ref().unwrap();
    outcome(
        realized.sharpe >= ew_sharpe,
        format!("hybrid Sharpe {:.4} (realized shares) vs equal-weight {:.4}", realized.sharpe, ew_sharpe),
    )
}

fn criterion_9() -> Outcome {
    let text = std::fs::read_to_string(data_dir().join("fixtures/reference_portfolio.json")).unwrap();
    let table = render_json(&text).unwrap();
    let metric_labels = ["Returns", "Risk", "Sharpe Ratio", "Diversification Ratio"];
    let mut sum = 0.0;
    let mut metric_rows = 0;
    for line in table.lines().skip(2) {
        let cells: Vec<&str> = line.split('|').map(str::trim).collect();
        if metric_labels.contains(&cells[0]) {
            metric_rows += 1;
        } else {
            sum += cells[1].parse::<f64>().unwrap();
        }
    }
    let sharpe_row = table.lines().find(|l| l.trim_start().starts_with("Sharpe Ratio")).unwrap_or("");
    let pass = (sum - 99.99).abs() < 1e-9 && metric_rows == 4 && sharpe_row.contains("2.55") && sharpe_row.contains("1.65");
    outcome(pass, format!("algorithm weight column sums to {sum:.2}, {metric_rows} metric rows"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("QUBO/Ising equivalence", criterion_1),
        ("annealer matches exhaustive optimum", criterion_2),
        ("cardinality penalty feasibility", criterion_3),
        ("max-Sharpe solver correctness", criterion_4),
        ("metric identities", criterion_5),
        ("integer-share path vs brute force", criterion_6),
        ("backtest structure", criterion_7),
        ("hybrid Sharpe vs equal weight", criterion_8),
        ("reference table rendering", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked".into()));
        if !result.pass {
            failed += 1;
        }
        println!("criterion {} [{}] {}: {}", i + 1, if result.pass { "PASS" } else { "FAIL" }, name, result.detail);
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
