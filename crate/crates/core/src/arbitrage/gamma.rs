use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{gap_function_g, Coefficients, HurstParams};
use crate::market::MarketModel;
use crate::strategies::Horizon;

/// Constants of the worst-case drift lemma for a fraction `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaConstants {
    pub gamma: f64,
    pub p_gamma: f64,
    pub c_gamma: f64,
    pub c_hat_gamma: f64,
    /// Smallest `n` with `⌊γN⌋/N > γ/2` for every `N >= n`.
    pub n_gamma: u64,
    /// `max(n_gamma, ⌊(Ĉ/C)^{1/a}⌋ + 1)`, saturating at `u64::MAX`.
    pub n0_gamma: u64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

fn floor_fraction(gamma: f64, n: u64) -> u64 {
    (gamma * n as f64).floor() as u64
}

pub fn gamma_constants(params: &HurstParams, gamma: f64) -> Result<GammaConstants> {
    check_gamma(gamma)?;
    let a = params.alpha();
    let c_star = params.constants().c_star;
    let half = gamma / 2.0;
    let gap = gap_function_g(half, params)?;
    let p_gamma = (1.0 - gamma).min((half.powf(2.0 * a) * gap / 2.0).powf(1.0 / a));
    let c_gamma = c_star * half.powf(a) * gap / 2.0;
    let c_hat_gamma = c_star * half.powf(-a) / (a + 1.0);

    // Beyond 2/γ the condition holds for every N; scan below it.
    let top = (2.0 / gamma).ceil() as u64 + 1;
    let mut n_gamma = 2;
    for n in (2..=top).rev() {
        if (floor_fraction(gamma, n) as f64) / (n as f64) <= half {
            n_gamma = n + 1;
            break;
        }
    }
    let ratio_n = (c_hat_gamma / c_gamma).powf(1.0 / a).floor();
    let n0_gamma = n_gamma.max((ratio_n as u64).saturating_add(1));
    Ok(GammaConstants { gamma, p_gamma, c_gamma, c_hat_gamma, n_gamma, n0_gamma })
}

/// Worst-case drift `A_γ^N(k)` after the all-down prefix of length `⌊γN⌋`.
pub fn a_gamma(coeffs: &dyn Coefficients, gamma: f64, n_steps: usize, k: usize) -> Result<f64> {
    check_gamma(gamma)?;
    let k0 = floor_fraction(gamma, n_steps as u64) as usize;
    if k0 == 0 || k == 0 {
        return Err(Error::Index(format!("A_gamma needs ⌊γN⌋ >= 1 and k >= 1 (⌊γN⌋ = {k0}, k = {k})")));
    }
    let n = k0 + k;
    if let Some(depth) = coeffs.depth() {
        if n > depth {
            return Err(Error::HorizonExceedsDepth { n_steps: n, depth });
        }
    }
    Ok(-coeffs.row_sum(n, 1, k0)? + coeffs.row_sum(n, k0 + 1, n - 1)? + coeffs.g(n)?)
}

/// Shorting level and holding horizon of the γ-strategy in one market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiPlan {
    pub k0: usize,
    pub horizon: usize,
    pub policy: Horizon,
}

pub fn psi_plan(market: &MarketModel, gamma: f64, policy: Horizon) -> Result<PsiPlan> {
    check_gamma(gamma)?;
    let n = market.n_steps();
    let k0 = floor_fraction(gamma, n as u64) as usize;
    if k0 == 0 {
        return Err(Error::DegenerateHorizon(format!("⌊γN⌋ = 0 for gamma = {gamma}, N = {n}")));
    }
    let horizon = match policy {
        Horizon::Lemma => {
            let c = gamma_constants(market.params(), gamma)?;
            ((c.p_gamma * n as f64).floor() as usize).min(n - k0)
        }
        Horizon::Maximal => {
            let mut p = 0;
            while k0 + p < n && a_gamma(market.coeffs(), gamma, n, p + 1)? <= 0.0 {
                p += 1;
            }
            p
        }
        Horizon::Fixed(p) => p,
    };
    if k0 + horizon > n {
        return Err(Error::DegenerateHorizon(format!("liquidation at {} exceeds N = {n}", k0 + horizon)));
    }
    Ok(PsiPlan { k0, horizon, policy })
}

/// `λ(Ψ^N) = 1 - prod_k (1 + A_γ^N(k)/N^H)` with the drift sign check.
#[derive(Debug, Clone, Serialize)]
pub struct PsiThreshold {
    pub k0: usize,
    pub horizon: usize,
    pub lambda: f64,
    /// `A_γ^N(k) <= 0` for every `k` up to the horizon.
    pub condition_holds: bool,
    pub violated_at: Option<usize>,
    pub a_values: Vec<f64>,
}

pub fn lambda_psi(market: &MarketModel, gamma: f64, policy: Horizon) -> Result<PsiThreshold> {
    let plan = psi_plan(market, gamma, policy)?;
    let a_values =
        (1..=plan.horizon).map(|k| a_gamma(market.coeffs(), gamma, market.n_steps(), k)).collect::<Result<Vec<_>>>()?;
    let log_growth: f64 = a_values.iter().map(|a| (a / market.scale()).ln_1p()).sum();
    let violated_at = a_values.iter().position(|&a| a > 0.0).map(|i| i + 1);
    Ok(PsiThreshold {
        k0: plan.k0,
        horizon: plan.horizon,
        lambda: -log_growth.exp_m1(),
        condition_holds: violated_at.is_none(),
        violated_at,
        a_values,
    })
}

/// Arbitrage boundary of the γ-strategy found by enumerating every continuation.
#[derive(Debug, Clone, Serialize)]
pub struct PsiBoundary {
    pub k0: usize,
    pub horizon: usize,
    pub closed_form: f64,
    /// `1 - max over continuations of S_{k0+p}/S_{k0}`.
    pub enumerated: f64,
    pub worst_index: u64,
    pub worst_is_all_up: bool,
}

pub fn psi_boundary_enumeration(market: &MarketModel, gamma: f64, policy: Horizon) -> Result<PsiBoundary> {
    let t = lambda_psi(market, gamma, policy)?;
    if t.horizon == 0 {
        return Err(Error::DegenerateHorizon("nothing to enumerate at horizon 0".into()));
    }
    let growth = market.all_down_growth(t.k0, t.horizon)?;
    let (worst, max) =
        growth
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let all_up = (1usize << t.horizon) - 1;
    Ok(PsiBoundary {
        k0: t.k0,
        horizon: t.horizon,
        closed_form: t.lambda,
        enumerated: 1.0 - max,
        worst_index: worst as u64,
        worst_is_all_up: worst == all_up,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_coeff_table, DirectKernel};
    use crate::market::PathWord;
    use std::sync::Arc;

    fn p75() -> HurstParams {
        HurstParams::new(0.75, 1.0).unwrap()
    }

    #[test]
    fn constants_reference_values() {
        let c = gamma_constants(&p75(), 0.25).unwrap();
        assert!(c.p_gamma > 0.0 && c.p_gamma <= 0.75);
        assert!((c.p_gamma / 2.789e-8 - 1.0).abs() < 1e-3, "{}", c.p_gamma);
        assert!((c.c_gamma - 0.02325).abs() < 1e-4);
        assert!((c.c_hat_gamma - 1.43914).abs() < 1e-4);
        assert_eq!(c.n0_gamma, 14_685_463);
        assert_eq!(c.n_gamma, 4);
    }

    #[test]
    fn constants_scale_with_sigma() {
        let a = gamma_constants(&p75(), 0.4).unwrap();
        let b = gamma_constants(&HurstParams::new(0.75, 3.0).unwrap(), 0.4).unwrap();
        assert!((b.c_gamma - 3.0 * a.c_gamma).abs() < 1e-14);
        assert!((b.c_hat_gamma - 3.0 * a.c_hat_gamma).abs() < 1e-13);
        assert_eq!(a.p_gamma, b.p_gamma);
    }

    #[test]
    fn a_gamma_matches_market_excess() {
        let t = Arc::new(build_coeff_table(p75(), 40, 1e-11).unwrap());
        let m = MarketModel::new(t.clone(), 40, 1.0).unwrap();
        let k0 = 10;
        for k in 1..=8 {
            let a = a_gamma(t.as_ref(), 0.25, 40, k).unwrap();
            let prefix = PathWord::all_down(k0).extended(&vec![1; k - 1]);
            let mv = m.node_moves(prefix.signs()).unwrap();
            assert!((a - mv.up * m.scale()).abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_matches_closed_form_small() {
        let t = Arc::new(build_coeff_table(p75(), 64, 1e-11).unwrap());
        let m = MarketModel::new(t, 64, 1.0).unwrap();
        let b = psi_boundary_enumeration(&m, 0.25, Horizon::Fixed(6)).unwrap();
        assert!((b.closed_form - b.enumerated).abs() < 1e-12);
        assert!(b.worst_is_all_up);
    }

    #[test]
    fn direct_and_table_agree() {
        let t = Arc::new(build_coeff_table(p75(), 48, 1e-11).unwrap());
        let d = DirectKernel::new(p75(), 1e-11).unwrap();
        for k in [1usize, 3, 9] {
            let a = a_gamma(t.as_ref(), 0.5, 48, k).unwrap();
            let b = a_gamma(&d, 0.5, 48, k).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }
}
