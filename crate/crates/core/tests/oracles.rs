//! Library values against the independent Gauss-Kronrod oracle in `support`.
//! The `FROZEN_*` numbers were produced by that oracle at relative tolerance 1e-12.

#![allow(clippy::excessive_precision)]

mod support;

use std::sync::Arc;

use fracmarket::kernels::{
    build_coeff_table, cell_integral, coeff_g, coeff_j, incomplete_beta_i, incomplete_beta_total, normalizing_constant,
    phi_integral, validate_coeff_bounds, CoeffTable, Coefficients, HurstParams,
};
use fracmarket::market::{MarketModel, PathWord};

const FROZEN_C_H: f64 = 1.069_644_635_031_990_4;
const FROZEN_J: [(u64, u64, f64); 5] = [
    (2, 1, 4.376_183_766_769_868_9e-1),
    (10, 3, 8.702_857_897_843_341_3e-2),
    (100, 50, 1.693_453_807_324_293_5e-2),
    (500, 1, 1.596_357_883_865_304_5e-2),
    (500, 499, 3.239_463_569_351_260_2e-1),
];
const FROZEN_G: [(u64, f64); 5] = [
    (1, 9.504_611_797_751_894e-1),
    (2, 8.725_108_385_929_876e-1),
    (10, 8.582_320_152_896_272e-1),
    (100, 8.559_547_180_650_379e-1),
    (10_000, 8.557_180_851_439_951e-1),
];
const FROZEN_PHI_25_5: f64 = 4.809_832_120_229_973_8e-1;

fn p(h: f64) -> HurstParams {
    HurstParams::new(h, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn normalizing_constant_reference() {
    assert!(rel(normalizing_constant(0.75).unwrap(), FROZEN_C_H) < 1e-13);
    assert!((FROZEN_C_H - 1.0697).abs() < 1e-4);
    for h in [0.55, 0.6, 0.75, 0.9, 0.95] {
        assert!(rel(normalizing_constant(h).unwrap(), support::c_h(h)) < 1e-13, "H = {h}");
    }
}

#[test]
fn beta_total_reflection_formula() {
    for h in [0.55, 0.7, 0.75, 0.9, 0.99] {
        let a = h - 0.5;
        let closed = a * std::f64::consts::PI / (a * std::f64::consts::PI).sin();
        assert!(rel(incomplete_beta_total(&p(h)), closed) < 1e-13, "H = {h}");
    }
}

#[test]
fn incomplete_beta_matches_quadrature() {
    for h in [0.55, 0.75, 0.9] {
        for z in [1e-6, 0.01, 0.125, 0.5, 0.51, 0.9, 0.999, 1.0] {
            let want = support::incomplete_beta(z, h, 1e-13);
            assert!(rel(incomplete_beta_i(z, &p(h)).unwrap(), want) < 1e-11, "H = {h}, z = {z}");
        }
    }
}

#[test]
fn frozen_values_reproduce() {
    // Cheap spot checks that the frozen table is what the oracle gives.
    assert!(rel(support::j(2, 1, 0.75, 1.0, 1e-12), FROZEN_J[0].2) < 1e-12);
    assert!(rel(support::g(10, 0.75, 1.0, 1e-12), FROZEN_G[2].1) < 1e-12);
    assert!(rel(support::phi(25, 5, 0.75, 1e-13), FROZEN_PHI_25_5) < 1e-12);
}

#[test]
fn j_cells_match_oracle() {
    let pp = p(0.75);
    let table = build_coeff_table(pp, 500, 1e-11).unwrap();
    for (n, i, want) in FROZEN_J {
        assert!(rel(coeff_j(n, i, &pp, 1e-11).unwrap(), want) < 1e-8, "j_{n}({i})");
        assert!(rel(table.j(n as usize, i as usize).unwrap(), want) < 1e-8, "table j_{n}({i})");
    }
}

#[test]
fn g_matches_oracle_and_limit() {
    let pp = p(0.75);
    for (n, want) in FROZEN_G {
        assert!(rel(coeff_g(n, &pp, 1e-11).unwrap(), want) < 1e-8, "g_{n}");
    }
    let g_limit = pp.constants().g_limit;
    assert!((g_limit - 0.8557).abs() < 1e-4);
    assert!((coeff_g(10_000, &pp, 1e-11).unwrap() - g_limit).abs() < 1e-3);
}

#[test]
fn phi_integral_matches_direct_quadrature() {
    let pp = p(0.75);
    assert!(rel(phi_integral(25, 5, &pp).unwrap(), FROZEN_PHI_25_5) < 1e-8);
    for (h, m, k) in [(0.55, 40, 3), (0.9, 7, 1), (0.75, 1, 1), (0.75, 300, 200)] {
        let want = support::phi(m, k, h, 1e-12);
        assert!(rel(phi_integral(m, k, &p(h)).unwrap(), want) < 1e-8, "H = {h}, ({m}, {k})");
    }
}

#[test]
fn cell_integral_matches_quadrature() {
    for h in [0.55, 0.75, 0.9] {
        let a = h - 0.5;
        for (n, i) in [(2u64, 1u64), (9, 4), (60, 59), (200, 1)] {
            let nf = n as f64;
            let want = support::integrate(
                |x| x.powf(-a) * ((nf - x).powf(a) - (nf - 1.0 - x).max(0.0).powf(a)),
                (i - 1) as f64,
                i as f64,
                1e-13,
            );
            assert!(rel(cell_integral(n, i, &p(h)).unwrap(), want) < 1e-10, "H = {h}, ({n}, {i})");
        }
    }
}

#[test]
fn other_hurst_cells_match_oracle() {
    for h in [0.55, 0.9] {
        let pp = p(h);
        for (n, i) in [(3u64, 2u64), (40, 1), (40, 39)] {
            let want = support::j(n, i, h, 1.0, 1e-11);
            assert!(rel(coeff_j(n, i, &pp, 1e-11).unwrap(), want) < 1e-8, "H = {h}, j_{n}({i})");
        }
        let want = support::g(25, h, 1.0, 1e-11);
        assert!(rel(coeff_g(25, &pp, 1e-11).unwrap(), want) < 1e-8, "H = {h}, g_25");
    }
}

#[test]
fn table_invariants_at_200() {
    let t: CoeffTable = build_coeff_table(p(0.75), 200, 1e-11).unwrap();
    let r = validate_coeff_bounds(&t).unwrap();
    assert!(r.pass, "{:?}", r.summary());
}

#[test]
fn leaf_prices_match_recomputation() {
    let n = 8usize;
    let (h, s0) = (0.75, 1.0);
    let table = Arc::new(build_coeff_table(p(h), n, 1e-11).unwrap());
    let market = MarketModel::new(table, n, s0).unwrap();
    let j: Vec<Vec<f64>> = (1..=n as u64).map(|k| (1..k).map(|i| support::j(k, i, h, 1.0, 1e-11)).collect()).collect();
    let g: Vec<f64> = (1..=n as u64).map(|k| support::g(k, h, 1.0, 1e-11)).collect();
    let scale = (n as f64).powf(h);
    for leaf in 0..(1u64 << n) {
        let path = PathWord::from_index(leaf, n);
        let x = path.signs();
        let mut s = s0;
        let mut want = vec![s];
        for k in 0..n {
            let y: f64 = (0..k).map(|i| j[k][i] * x[i] as f64).sum();
            s *= 1.0 + (y + g[k] * x[k] as f64) / scale;
            want.push(s);
        }
        let got = market.price_along_path(x).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!(rel(*a, *b) < 1e-10, "leaf {leaf}");
        }
    }
}
