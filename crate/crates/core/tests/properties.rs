use std::sync::{Arc, OnceLock};

use fracmarket::arbitrage::{
    census_exhaustive, exact_one_step_critical, lower_bound_lowbd, verify_arbitrage_exhaustive, Dyadic,
};
use fracmarket::kernels::{build_coeff_table, coeff_j, CoeffTable, DirectKernel, HurstParams};
use fracmarket::market::{excess_y, MarketModel, PathWord};
use fracmarket::stats::{wilson_interval, Z_99};
use fracmarket::strategies::{
    check_self_financing, evaluate_value_process, one_step_strategy, scaled_strategy, sottinen_strategy, OneStepSpec,
};
use proptest::prelude::*;

fn table() -> Arc<CoeffTable> {
    static T: OnceLock<Arc<CoeffTable>> = OnceLock::new();
    T.get_or_init(|| Arc::new(build_coeff_table(HurstParams::new(0.75, 1.0).unwrap(), 64, 1e-11).unwrap())).clone()
}

fn signs(len: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_word_round_trips(x in (0usize..64).prop_flat_map(signs)) {
        let w = PathWord::new(x.clone()).unwrap();
        prop_assert_eq!(PathWord::from_index(w.index().unwrap(), x.len()), w.clone());
        let parsed: PathWord = w.to_string().parse().unwrap();
        prop_assert_eq!(&parsed, &w);
        prop_assert_eq!(w.negated().negated(), w);
    }

    #[test]
    fn excess_is_odd(x in (1usize..64).prop_flat_map(signs)) {
        let t = table();
        let n = x.len() + 1;
        let w = PathWord::new(x).unwrap();
        let a = excess_y(t.as_ref(), n, w.signs()).unwrap();
        let b = excess_y(t.as_ref(), n, w.negated().signs()).unwrap();
        prop_assert!((a + b).abs() <= 1e-14 * (1.0 + a.abs()));
    }

    #[test]
    fn moves_straddle_zero_and_prices_stay_positive(x in signs(64)) {
        let m = MarketModel::new(table(), 64, 1.0).unwrap();
        let prices = m.price_along_path(&x).unwrap();
        prop_assert!(prices.iter().all(|&s| s > 0.0));
        for k in 0..64 {
            let nm = m.node_moves(&x[..k]).unwrap();
            prop_assert!(nm.down < nm.up);
        }
    }

    #[test]
    fn dyadic_matches_float_sum(counts in prop::collection::vec(0u64..1000, 1..40)) {
        let d = Dyadic::from_level_counts(&counts);
        let want: f64 = counts.iter().enumerate().map(|(l, &c)| c as f64 * 2f64.powi(-(l as i32))).sum();
        prop_assert!((d.to_f64() - want).abs() <= 1e-12 * want.max(1.0));
        prop_assert_eq!(d.is_zero(), counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn wilson_interval_brackets_estimate(trials in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let s = ((trials as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(s, trials, Z_99).unwrap();
        let p = s as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }

    #[test]
    fn coefficients_scale_with_sigma(n in 2u64..200, frac in 0.0f64..1.0, sigma in 0.1f64..5.0, h in 0.55f64..0.95) {
        let i = 1 + ((n - 1) as f64 * frac) as u64;
        let i = i.min(n - 1);
        let one = coeff_j(n, i, &HurstParams::new(h, 1.0).unwrap(), 1e-11).unwrap();
        let scaled = coeff_j(n, i, &HurstParams::new(h, sigma).unwrap(), 1e-11).unwrap();
        prop_assert!((scaled - sigma * one).abs() <= 1e-13 * scaled.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn census_is_mirror_symmetric(h in 0.52f64..0.98, n in 1usize..14) {
        let k = DirectKernel::new(HurstParams::new(h, 1.0).unwrap(), 1e-11).unwrap();
        let c = census_exhaustive(&k, n).unwrap();
        prop_assert_eq!(c.count_u, c.count_d);
    }

    #[test]
    fn lowbd_equals_one_step_critical(h in 0.52f64..0.98, n in 2usize..40) {
        let k = Arc::new(build_coeff_table(HurstParams::new(h, 1.0).unwrap(), n, 1e-11).unwrap());
        let m = MarketModel::new(k, n, 1.0).unwrap();
        let (a, b) = (lower_bound_lowbd(&m).unwrap(), exact_one_step_critical(&m).unwrap());
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn one_step_strategies_are_self_financing(
        n in 1usize..8,
        seed in any::<u64>(),
        lambda in 0.0f64..0.2,
        x in signs(10),
    ) {
        let m = MarketModel::new(table(), 10, 1.0).unwrap();
        let size = 1usize << n;
        let short: Vec<bool> = (0..size).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let qty: Vec<f64> = (0..size).map(|i| ((seed.rotate_left(i as u32) % 5) as f64) / 4.0).collect();
        let spec = OneStepSpec::new(n, short, qty).unwrap();
        let st = one_step_strategy(&m, lambda, &spec).unwrap();
        prop_assert!(check_self_financing(&m, &st, &x, lambda).unwrap().pass);
        let v = evaluate_value_process(&m, &st, &x, lambda).unwrap();
        prop_assert_eq!(v.values[0], 0.0);
    }

    #[test]
    fn scaling_a_strategy_scales_its_values(n0 in 2usize..12, q in 0.01f64..100.0, lambda in 0.0f64..0.3) {
        let m = MarketModel::new(table(), 12, 1.0).unwrap();
        let st = sottinen_strategy(&m, lambda, n0).unwrap();
        let a = verify_arbitrage_exhaustive(&m, &st, lambda).unwrap();
        let b = verify_arbitrage_exhaustive(&m, &scaled_strategy(&st, q).unwrap(), lambda).unwrap();
        prop_assert!((b.min_terminal_value - q * a.min_terminal_value).abs() <= 1e-12 * q.max(1.0));
        prop_assert!((b.max_terminal_value - q * a.max_terminal_value).abs() <= 1e-12 * q.max(1.0));
        prop_assert!(check_self_financing(&m, &st, PathWord::all_down(12).signs(), lambda).unwrap().pass);
    }
}
