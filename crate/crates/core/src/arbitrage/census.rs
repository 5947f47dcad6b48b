//! Census of arbitrage points: nodes at level `n` where `|Y_n| >= g_n`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Coefficients, HurstParams};
use crate::rng;
use crate::stats::{wilson_interval, Z_99};

/// Largest number of free signs enumerated exhaustively.
pub const MAX_EXHAUSTIVE_SIGNS: usize = 26;
pub const MIN_MC_SAMPLES: u64 = 1000;

const BLOCK_BITS: usize = 16;
const MC_CHUNK: u64 = 1 << 12;
// Incremental sums closer than this to a threshold are recomputed in canonical order.
const TIE_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusMethod {
    Exhaustive,
    MonteCarlo,
}

impl std::fmt::Display for CensusMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CensusMethod::Exhaustive => "exhaustive",
            CensusMethod::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusResult {
    pub n: usize,
    pub method: CensusMethod,
    /// Paths with `Y_n <= -g_n`.
    pub count_u: u64,
    /// Paths with `Y_n >= g_n`.
    pub count_d: u64,
    pub ratio: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

/// `sum_{i<n} j_n(i) x_i` in ascending order, so that negating `x` negates the sum exactly.
fn canonical_excess(row: &[f64], x: &[i8]) -> f64 {
    row.iter().zip(x).fold(0.0, |acc, (j, &s)| if s > 0 { acc + j } else { acc - j })
}

/// Classifies one node; `(is_u, is_d)`.
fn classify(y: f64, g: f64, row: &[f64], x: &[i8]) -> (bool, bool) {
    let y = if (y + g).abs() <= TIE_BAND || (y - g).abs() <= TIE_BAND { canonical_excess(row, x) } else { y };
    (y <= -g, y >= g)
}

fn level_data(coeffs: &dyn Coefficients, n: usize) -> Result<(Vec<f64>, f64)> {
    if n == 0 {
        return Err(Error::Index("census level must be >= 1".into()));
    }
    Ok((coeffs.row(n)?, coeffs.g(n)?))
}

/// Exact counts over all `2^{n-1}` nodes at level `n`.
pub fn census_exhaustive(coeffs: &dyn Coefficients, n: usize) -> Result<CensusResult> {
    let free = n.saturating_sub(1);
    if free > MAX_EXHAUSTIVE_SIGNS {
        return Err(Error::SupportTooLarge { free, limit: MAX_EXHAUSTIVE_SIGNS });
    }
    let (row, g) = level_data(coeffs, n)?;
    let low = free.min(BLOCK_BITS);
    let blocks = 1u64 << (free - low);
    let (count_u, count_d) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut x: Vec<i8> =
                (0..free).map(|k| if k >= low && (b >> (k - low)) & 1 == 1 { 1 } else { -1 }).collect();
            let mut y = canonical_excess(&row, &x);
            let (mut cu, mut cd) = (0u64, 0u64);
            let mut tally = |y: f64, x: &[i8]| {
                let (u, d) = classify(y, g, &row, x);
                cu += u as u64;
                cd += d as u64;
            };
            tally(y, &x);
            for t in 1u64..1 << low {
                let k = t.trailing_zeros() as usize;
                x[k] = -x[k];
                y += 2.0 * x[k] as f64 * row[k];
                tally(y, &x);
            }
            (cu, cd)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(CensusResult {
        n,
        method: CensusMethod::Exhaustive,
        count_u,
        count_d,
        ratio: (count_u + count_d) as f64 / (1u64 << free) as f64,
        ci_low: None,
        ci_high: None,
        samples: None,
        seed: None,
    })
}

/// Monte Carlo estimate of `P(|Y_n| >= g_n)` with a 99% Wilson interval.
pub fn census_monte_carlo(coeffs: &dyn Coefficients, n: usize, samples: u64, seed: u64) -> Result<CensusResult> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_MC_SAMPLES} samples, got {samples}")));
    }
    let (row, g) = level_data(coeffs, n)?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let (count_u, count_d) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, c);
            let take = MC_CHUNK.min(samples - c * MC_CHUNK);
            let (mut cu, mut cd) = (0u64, 0u64);
            for _ in 0..take {
                let x = rng::signs(&mut r, row.len());
                let y = canonical_excess(&row, &x);
                cu += (y <= -g) as u64;
                cd += (y >= g) as u64;
            }
            (cu, cd)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let hits = count_u + count_d;
    let (lo, hi) = wilson_interval(hits, samples, Z_99)?;
    Ok(CensusResult {
        n,
        method: CensusMethod::MonteCarlo,
        count_u,
        count_d,
        ratio: hits as f64 / samples as f64,
        ci_low: Some(lo),
        ci_high: Some(hi),
        samples: Some(samples),
        seed: Some(seed),
    })
}

/// Census ratio ceiling `(H + 1/2)^2 / c_H^2 - 1`; meaningful when below one.
pub fn chebyshev_ratio_bound(params: &HurstParams) -> f64 {
    let r = (params.hurst() + 0.5) / params.c_h();
    r * r - 1.0
}

/// `Var(Y_n) = sum_{i<n} j_n(i)^2`.
pub fn excess_variance(coeffs: &dyn Coefficients, n: usize) -> Result<f64> {
    Ok(coeffs.row(n)?.iter().map(|j| j * j).sum())
}

/// Largest census ratio over probed levels; a lower estimate of the supremum over all levels.
#[derive(Debug, Clone, Serialize)]
pub struct NuEstimate {
    pub estimate: f64,
    pub is_lower_estimate: bool,
    pub levels: Vec<CensusResult>,
}

/// Exhaustive census up to `exhaustive_limit` free signs, Monte Carlo upper bounds above.
pub fn nu_h_estimate(
    coeffs: &dyn Coefficients,
    n_list: &[usize],
    mc_samples: u64,
    seed: u64,
    exhaustive_limit: usize,
) -> Result<NuEstimate> {
    let limit = exhaustive_limit.min(MAX_EXHAUSTIVE_SIGNS);
    let mut levels = Vec::with_capacity(n_list.len());
    let mut estimate = 0.0f64;
    for &n in n_list {
        let r = if n.saturating_sub(1) <= limit {
            census_exhaustive(coeffs, n)?
        } else {
            census_monte_carlo(coeffs, n, mc_samples, seed)?
        };
        estimate = estimate.max(r.ci_high.unwrap_or(r.ratio));
        levels.push(r);
    }
    Ok(NuEstimate { estimate: estimate.min(1.0), is_lower_estimate: true, levels })
}
