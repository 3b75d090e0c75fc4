use std::collections::BTreeMap;

use annealfolio::allocator::WeightVector;
use annealfolio::model::{
    bits_to_spins, encode_integer, penalize_equality, qubo_to_ising, LinearConstraint, QuboModel,
};
use annealfolio::pipeline::{estimate_at, portfolio_value, to_shares, EstimationConfig};
use annealfolio::sampler::{simulated_anneal, ScheduleConfig};
use annealfolio::synthetic::{bundled_config, generate};
use approx::assert_abs_diff_eq;
use chrono::NaiveDate;
use proptest::prelude::*;

fn qubo_strategy(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<(usize, usize, f64)>, f64)> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(-2.0..2.0f64, pairs),
            -2.0..2.0f64,
        )
            .prop_map(move |(linear, q, offset)| {
                let mut quad = Vec::with_capacity(pairs);
                let mut it = q.into_iter();
                for i in 0..n {
                    for j in (i + 1)..n {
                        quad.push((i, j, it.next().unwrap()));
                    }
                }
                (linear, quad, offset)
            })
    })
}

fn bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ising_energy_matches_qubo((linear, quad, offset) in qubo_strategy(8)) {
        let n = linear.len();
        let m = QuboModel::from_terms(linear, quad, offset).unwrap();
        let ising = qubo_to_ising(&m);
        for mask in 0..1u64 << n {
            let x = bits(mask, n);
            assert_abs_diff_eq!(m.energy(&x).unwrap(), ising.energy(&bits_to_spins(&x)).unwrap(), epsilon = 1e-9);
        }
        let back = ising.to_qubo();
        assert_abs_diff_eq!(back.offset(), m.offset(), epsilon = 1e-12);
    }

    #[test]
    fn equality_penalty_is_zero_exactly_on_feasible(
        coeffs in prop::collection::vec(1..4i32, 1..=8),
        rhs in 0..10i32,
        lambda in 0.1..10.0f64,
    ) {
        let n = coeffs.len();
        let c = LinearConstraint::equality(coeffs.iter().map(|&v| v as f64).collect(), rhs as f64).unwrap();
        let base = QuboModel::<f64>::new(n);
        let penalized = penalize_equality(&base, &c, lambda).unwrap();
        for mask in 0..1u64 << n {
            let x = bits(mask, n);
            let lhs: i32 = coeffs.iter().zip(&x).filter(|(_, b)| **b).map(|(v, _)| v).sum();
            let e = penalized.energy(&x).unwrap();
            if lhs == rhs {
                assert_abs_diff_eq!(e, 0.0, epsilon = 1e-9);
            } else {
                prop_assert!(e >= lambda - 1e-9);
            }
        }
    }

    #[test]
    fn sampler_is_deterministic_per_seed((linear, quad, offset) in qubo_strategy(10), seed in any::<u64>()) {
        let m = QuboModel::from_terms(linear, quad, offset).unwrap();
        let cfg = ScheduleConfig { sweeps: 50, restarts: 4, ..ScheduleConfig::default() };
        let sched = cfg.resolve(m.max_abs_coefficient(), m.n()).unwrap();
        let a = simulated_anneal(&m, &sched, seed).unwrap();
        let b = simulated_anneal(&m, &sched, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn to_shares_stays_within_budget(
        raw in prop::collection::vec(0.0..1.0f64, 1..=6),
        prices in prop::collection::vec(1.0..500.0f64, 6),
        budget in 0.0..100_000.0f64,
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-6);
        let tickers: Vec<String> = (0..raw.len()).map(|i| format!("T{i}")).collect();
        let w = WeightVector::normalized(tickers.clone(), raw).unwrap();
        let px: BTreeMap<String, f64> = tickers.iter().cloned().zip(prices.iter().copied()).collect();
        let h = to_shares(&w, &px, budget, day()).unwrap();
        let spend: f64 = h.shares.iter().map(|(t, n)| px[t] * *n as f64).sum();
        prop_assert!(spend <= budget + 1e-6);
        prop_assert!(h.cash >= 0.0);
        assert_abs_diff_eq!(portfolio_value(&h, &px).unwrap(), budget, epsilon = 1e-6);
        for (t, wt) in w.iter() {
            let floor = (wt * budget / px[t]).floor() as u64;
            let n = h.shares[t];
            prop_assert!(n == floor || n == floor + 1);
        }
    }
}

#[test]
fn encoding_covers_every_value_exactly() {
    for upper in 0..=64u64 {
        let enc = encode_integer(upper);
        let mut seen = vec![false; upper as usize + 1];
        for mask in 0..1u64 << enc.n_bits() {
            let v = enc.decode(&bits(mask, enc.n_bits()));
            assert!(v <= upper, "upper {upper} decoded {v}");
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|s| *s), "upper {upper} misses a value");
    }
}

#[test]
fn estimates_ignore_later_prices() {
    let (prices, _) = generate(&bundled_config());
    let idx = 150;
    let est = EstimationConfig::default();
    let before = estimate_at(&prices, idx, &est).unwrap();

    let mut cfg = bundled_config();
    cfg.shocks.push(annealfolio::synthetic::Shock {
        ticker: "INDA".into(),
        date: prices.dates()[idx + 1],
        factor: 3.0,
    });
    let (shocked, _) = generate(&cfg);
    assert_ne!(shocked, prices);
    assert_eq!(estimate_at(&shocked, idx, &est).unwrap(), before);
    assert_ne!(estimate_at(&shocked, idx + 1, &est).unwrap(), estimate_at(&prices, idx + 1, &est).unwrap());
}
