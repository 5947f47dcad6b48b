use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Coefficients;
use crate::market::{MarketModel, PathWord};

/// `theta'_n = sum_{i<n} j_n(i) - g_n`, the all-down drift before scaling by `N^H`.
pub fn theta(coeffs: &dyn Coefficients, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Index("level must be >= 1".into()));
    }
    Ok(coeffs.row_sum(n, 1, n - 1)? - coeffs.g(n)?)
}

/// `λ(Φ^N(n0)) = -u_{n0}(all-down)`; non-positive when the node is not an arbitrage point.
pub fn lambda_phi(market: &MarketModel, n0: usize) -> Result<f64> {
    if n0 == 0 || n0 > market.n_steps() {
        return Err(Error::Index(format!("n0 = {n0} outside 1..={}", market.n_steps())));
    }
    Ok(theta(market.coeffs(), n0)? / market.scale())
}

/// Result of the sign scan of `theta'_n` up to a horizon.
#[derive(Debug, Clone, Serialize)]
pub struct NhReport {
    pub horizon: usize,
    /// Smallest `n*` with `theta'_n > 0` on all of `[n*, horizon]`.
    pub n_h: Option<usize>,
    /// `min_{n_H <= n <= horizon} sum_{i<n} j_n(i) / n^a`.
    pub c_tilde: Option<f64>,
    pub theta: Vec<f64>,
}

pub fn find_n_h(coeffs: &dyn Coefficients, horizon: usize) -> Result<NhReport> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    if let Some(depth) = coeffs.depth() {
        if horizon > depth {
            return Err(Error::HorizonExceedsDepth { n_steps: horizon, depth });
        }
    }
    let theta = (1..=horizon).map(|n| theta(coeffs, n)).collect::<Result<Vec<_>>>()?;
    let mut n_h = None;
    for n in (1..=horizon).rev() {
        if theta[n - 1] > 0.0 {
            n_h = Some(n);
        } else {
            break;
        }
    }
    let a = coeffs.params().alpha();
    let c_tilde = match n_h {
        Some(start) => Some(
            (start..=horizon)
                .map(|n| Ok((theta[n - 1] + coeffs.g(n)?) / (n as f64).powf(a)))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min),
        ),
        None => None,
    };
    Ok(NhReport { horizon, n_h, c_tilde, theta })
}

/// `1 - min_n min_x ((1 + u_n(x)) ∧ 1/(1 + d_n(x)) ∧ 1)` from the extreme nodes.
pub fn lower_bound_lowbd(market: &MarketModel) -> Result<f64> {
    let mut best = 1.0f64;
    for n in 1..=market.n_steps() {
        let low = market.node_moves(PathWord::all_down(n - 1).signs())?;
        let high = market.node_moves(PathWord::all_up(n - 1).signs())?;
        best = best.min(1.0 + low.up).min(1.0 / (1.0 + high.down));
    }
    Ok(1.0 - best)
}

/// Critical cost of one-step strategies: `max_{2<=n<=N} max(theta'_n / N^H, 0)`.
pub fn exact_one_step_critical(market: &MarketModel) -> Result<f64> {
    let mut best = 0.0f64;
    for n in 2..=market.n_steps() {
        best = best.max(theta(market.coeffs(), n)? / market.scale());
    }
    Ok(best)
}
