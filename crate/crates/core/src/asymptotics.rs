//! Asymptotic arbitrage along a family of markets `N -> infinity`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::arbitrage::{
    census_exhaustive, exact_one_step_critical, verify_with, CensusResult, Dyadic, PathClass, VerifyOptions,
};
use crate::error::{Error, Result};
use crate::kernels::{column_total, Coefficients, HurstParams};
use crate::market::MarketModel;
use crate::stats::loglog_slope;
use crate::strategies::{scaled_strategy, sottinen_strategy};

/// Tolerance for the equality cases `V_N = C_N` and `V_i = -c_N`, relative to
/// the gross position `q_N S`, since both sides cancel terms of that size.
pub const REL_TIE: f64 = 1e-12;

/// Cost schedule `λ_N = N^{-p}` and position size `q_N = N^{q_exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AA1Schedule {
    pub hurst: f64,
    pub p: f64,
    pub q_exponent: f64,
    pub n_grid: Vec<usize>,
}

impl AA1Schedule {
    pub fn lambda(&self, n: usize) -> f64 {
        (n as f64).powf(-self.p)
    }

    pub fn q(&self, n: usize) -> f64 {
        (n as f64).powf(self.q_exponent)
    }

    /// Replaces the position exponent; it must lie strictly between `H` and `p`.
    pub fn with_q_exponent(mut self, q_exponent: f64) -> Result<Self> {
        if !(q_exponent > self.hurst && q_exponent < self.p) {
            return Err(Error::InvalidParameter(format!(
                "q exponent must lie in ({}, {}), got {q_exponent}",
                self.hurst, self.p
            )));
        }
        self.q_exponent = q_exponent;
        Ok(self)
    }
}

pub fn aa1_schedule(hurst: f64, p: f64, n_grid: Vec<usize>) -> Result<AA1Schedule> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(Error::InvalidParameter(format!("H must lie in (1/2, 1), got {hurst}")));
    }
    if !(p > hurst && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("cost exponent p must exceed H = {hurst}, got {p}")));
    }
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::InvalidParameter("N grid must be non-empty and positive".into()));
    }
    Ok(AA1Schedule { hurst, p, q_exponent: (hurst + p) / 2.0, n_grid })
}

#[derive(Debug, Clone, Serialize)]
pub struct AA1Row {
    pub n: usize,
    pub lambda_n: f64,
    pub q_n: f64,
    /// Risk bound `λ_N q_N S_{n_H-1}`.
    pub c_n: f64,
    /// Guaranteed gain `q_N (θ'/N^H - λ_N) S_{n_H-1}` on the profit event.
    pub big_c_n: f64,
    /// `P(V_N >= C_N)`.
    pub profit_probability: Dyadic,
    /// `V_i >= -c_N` at every step of every path.
    pub admissible: bool,
    pub min_running_value: f64,
    /// The running minimum equals `-c_N`.
    pub bound_attained: bool,
    pub is_arbitrage: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AA1Report {
    pub schedule: AA1Schedule,
    pub n_h: usize,
    pub rows: Vec<AA1Row>,
    pub c_n_slope: Option<f64>,
    /// Only fitted when every `C_N` is positive.
    pub big_c_n_slope: Option<f64>,
}

impl AA1Report {
    pub fn expected_c_n_slope(&self) -> f64 {
        -(self.schedule.p - self.schedule.hurst) / 2.0
    }

    pub fn expected_big_c_n_slope(&self) -> f64 {
        (self.schedule.p - self.schedule.hurst) / 2.0
    }
}

/// `P(V_N >= threshold - tol)` over the classes of a certificate.
pub fn tail_probability(classes: &[PathClass], n_steps: usize, threshold: f64, tol: f64) -> Dyadic {
    let mut counts = vec![0u64; n_steps + 1];
    for c in classes {
        if c.terminal >= threshold - tol {
            counts[c.level] += 1;
        }
    }
    Dyadic::from_level_counts(&counts)
}

fn aa1_row(coeffs: Arc<dyn Coefficients>, schedule: &AA1Schedule, n_h: usize, s0: f64, n: usize) -> Result<AA1Row> {
    let market = MarketModel::new(coeffs, n, s0)?;
    let lambda_n = schedule.lambda(n);
    let q_n = schedule.q(n);
    let s = market.price_at(crate::market::PathWord::all_down(n_h - 1).signs())?;
    let theta = crate::arbitrage::theta(market.coeffs(), n_h)?;
    let c_n = lambda_n * q_n * s;
    let big_c_n = q_n * (theta / market.scale() - lambda_n) * s;
    let strategy = scaled_strategy(&sottinen_strategy(&market, lambda_n, n_h)?, q_n)?;
    let tol = REL_TIE * q_n * s;
    let cert = verify_with(&market, &strategy, lambda_n, VerifyOptions { keep_classes: true, ..Default::default() })?;
    Ok(AA1Row {
        n,
        lambda_n,
        q_n,
        c_n,
        big_c_n,
        profit_probability: tail_probability(&cert.classes, n, big_c_n, tol),
        admissible: cert.min_running_value >= -c_n - tol,
        min_running_value: cert.min_running_value,
        bound_attained: (cert.min_running_value + c_n).abs() <= tol,
        is_arbitrage: cert.is_arbitrage,
    })
}

/// Builds `q_N` times the one-step strategy shorting at level `n_h` for every grid `N`
/// and evaluates it exactly.
pub fn aa1_verify(coeffs: Arc<dyn Coefficients>, schedule: &AA1Schedule, n_h: usize, s0: f64) -> Result<AA1Report> {
    if n_h == 0 {
        return Err(Error::InvalidParameter("n_H must be >= 1".into()));
    }
    if (coeffs.params().hurst() - schedule.hurst).abs() > 0.0 {
        return Err(Error::InvalidParameter("schedule and coefficients disagree on H".into()));
    }
    if let Some(&n) = schedule.n_grid.iter().find(|&&n| n < n_h) {
        return Err(Error::InvalidParameter(format!("grid value N = {n} is below n_H = {n_h}")));
    }
    let rows = schedule
        .n_grid
        .par_iter()
        .map(|&n| aa1_row(Arc::clone(&coeffs), schedule, n_h, s0, n))
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let fit = |ys: Vec<f64>| if ns.len() >= 2 { loglog_slope(&ns, &ys).ok() } else { None };
    let c_n_slope = fit(rows.iter().map(|r| r.c_n).collect());
    let big_c_n_slope = fit(rows.iter().map(|r| r.big_c_n).collect());
    Ok(AA1Report { schedule: schedule.clone(), n_h, rows, c_n_slope, big_c_n_slope })
}

/// Cost level `c_X / sqrt(N)` above which no one-step strategy gains, with the exact one-step value.
#[derive(Debug, Clone, Serialize)]
pub struct NoArbitrageThreshold {
    pub n: usize,
    pub threshold: f64,
    pub exact_one_step: f64,
    /// `max_n (sum_{i<n} j_n(i) + g_n) / N^H`.
    pub max_move: f64,
    pub consistent: bool,
}

pub fn no_arbitrage_threshold(market: &MarketModel) -> Result<NoArbitrageThreshold> {
    let n = market.n_steps();
    let threshold = market.params().constants().c_x / (n as f64).sqrt();
    let exact_one_step = exact_one_step_critical(market)?;
    let mut max_move = 0.0f64;
    for k in 1..=n {
        max_move = max_move.max((market.coeffs().row_sum(k, 1, k - 1)? + market.coeffs().g(k)?) / market.scale());
    }
    Ok(NoArbitrageThreshold {
        n,
        threshold,
        exact_one_step,
        max_move,
        consistent: exact_one_step <= max_move && max_move <= threshold,
    })
}

/// Frictionless bound `1/2 + |A_{n+1}| / 2^{n+1}` on `P(V_N >= α)` for strategies trading at level `n`.
#[derive(Debug, Clone, Serialize)]
pub struct AA2Bound {
    pub n: usize,
    pub bound: f64,
    pub census: CensusResult,
}

pub fn aa2_upper_bound(coeffs: &dyn Coefficients, n: usize) -> Result<AA2Bound> {
    let census = census_exhaustive(coeffs, n + 1)?;
    Ok(AA2Bound { n, bound: 0.5 + census.ratio / 2.0, census })
}

/// `Var(X_1 + ... + X_N) / N^{2H}`, which tends to `sigma^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariancePoint {
    pub n: usize,
    pub variance: f64,
    pub normalized: f64,
    pub deviation: f64,
}

/// Exact variance from column totals `g_i + sum_{n>i} j_n(i)`.
pub fn variance_scaling(params: &HurstParams, n: usize, quad_tol: f64) -> Result<VariancePoint> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let variance: f64 = (1..=n as u64)
        .into_par_iter()
        .map(|i| column_total(i, n as u64, params, quad_tol).map(|c| c * c))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum();
    let normalized = variance / (n as f64).powf(2.0 * params.hurst());
    let s2 = params.sigma() * params.sigma();
    Ok(VariancePoint { n, variance, normalized, deviation: (normalized - s2).abs() })
}

/// The same variance summed cell by cell from any coefficient source.
pub fn variance_from_cells(coeffs: &dyn Coefficients, n: usize) -> Result<f64> {
    let mut cols = vec![0.0; n];
    for k in 1..=n {
        cols[k - 1] += coeffs.g(k)?;
        for (i, j) in coeffs.row(k)?.into_iter().enumerate() {
            cols[i] += j;
        }
    }
    Ok(cols.iter().map(|c| c * c).sum())
}
