//! Model parameters, the normalizing constant and the coefficients of the
//! disturbed random walk.

pub mod coeffs;
pub mod quad;
pub mod special;
mod table;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub use coeffs::{coeff_g, coeff_j, column_total, row_sum_integral};
pub use special::{cell_integral, gap_function_g, incomplete_beta_i, incomplete_beta_total, phi_integral};
pub use table::{
    build_coeff_table, validate_coeff_bounds, BoundReport, BoundSummary, CoeffTable, Coefficients, DirectKernel,
};

/// Hurst parameter and volatility of the model, `H` in `(1/2, 1)`, `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstParams {
    hurst: f64,
    sigma: f64,
    c_h: f64,
}

impl HurstParams {
    pub fn new(hurst: f64, sigma: f64) -> Result<Self> {
        if !(hurst > 0.5 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!("H must lie in (1/2, 1), got {hurst}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(HurstParams { hurst, sigma, c_h: normalizing_constant(hurst)? })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `alpha = H - 1/2`.
    pub fn alpha(&self) -> f64 {
        self.hurst - 0.5
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    pub fn constants(&self) -> DerivedConstants {
        let c_star = self.sigma * self.c_h;
        let g_limit = c_star / (self.hurst + 0.5);
        DerivedConstants { c_h: self.c_h, c_star, g_limit, c_x: c_star / (1.5 - self.hurst) + g_limit }
    }
}

/// Constants derived from `(H, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub c_h: f64,
    /// `sigma c_H`
    pub c_star: f64,
    /// `lim g_n = sigma c_H / (H + 1/2)`
    pub g_limit: f64,
    /// Bound of `|X_n| / n^alpha`.
    pub c_x: f64,
}

/// `c_H = sqrt(2H Gamma(3/2 - H) / (Gamma(H + 1/2) Gamma(2 - 2H)))`.
pub fn normalizing_constant(hurst: f64) -> Result<f64> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(Error::Domain(format!("c_H needs H in (1/2, 1), got {hurst}")));
    }
    let num = 2.0 * hurst * gamma(1.5 - hurst);
    let den = gamma(hurst + 0.5) * gamma(2.0 - 2.0 * hurst);
    Ok((num / den).sqrt())
}
