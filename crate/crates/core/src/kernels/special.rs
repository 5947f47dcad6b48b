//! Incomplete beta integrals behind the closed-form coefficient bounds.

use crate::error::{Error, Result};
use crate::kernels::HurstParams;

/// Lower incomplete beta `B(z; a, b)` by its power series, for `z <= 1/2`.
fn beta_series(z: f64, a: f64, b: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let mut coef = 1.0;
    let mut zk = 1.0;
    let mut sum = 1.0 / a;
    for k in 1..400 {
        coef *= (k as f64 - b) / k as f64;
        zk *= z;
        let term = coef * zk / (a + k as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    z.powf(a) * sum
}

/// Complete value `I(1) = B(1-a, 1+a) = a pi / sin(a pi)`.
pub fn incomplete_beta_total(params: &HurstParams) -> f64 {
    let a = params.alpha();
    let x = a * std::f64::consts::PI;
    x / x.sin()
}

/// `I(z) = int_0^z v^{-a} (1-v)^{a} dv` for `z` in `[0, 1]`.
pub fn incomplete_beta_i(z: f64, params: &HurstParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("I(z) needs z in [0, 1], got {z}")));
    }
    let a = params.alpha();
    if z <= 0.5 {
        Ok(beta_series(z, 1.0 - a, 1.0 + a))
    } else {
        // 1 - z is exact on [1/2, 1].
        Ok(incomplete_beta_total(params) - beta_series(1.0 - z, 1.0 + a, 1.0 - a))
    }
}

/// `G(z) = I(z) - (1-z)^a z^{1-a}`.
pub fn gap_function_g(z: f64, params: &HurstParams) -> Result<f64> {
    let a = params.alpha();
    Ok(incomplete_beta_i(z, params)? - (1.0 - z).powf(a) * z.powf(1.0 - a))
}

/// Closed form of `int_0^m x^{-a} ((m+k-x)^a - (m+k-1-x)^a) dx`.
pub fn phi_integral(m: u64, k: u64, params: &HurstParams) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("phi_integral needs k >= 1".into()));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let n = (m + k) as f64;
    let n1 = (m + k - 1) as f64;
    let mf = m as f64;
    Ok(n * incomplete_beta_i(mf / n, params)? - n1 * incomplete_beta_i(mf / n1, params)?)
}

/// `I_n(i) = phi(i, n-i) - phi(i-1, n-i+1)`, the integral of the kernel over one cell.
pub fn cell_integral(n: u64, i: u64, params: &HurstParams) -> Result<f64> {
    if n < 2 || i == 0 || i >= n {
        return Err(Error::Index(format!("cell ({n}, {i}) needs 1 <= i < n")));
    }
    Ok(phi_integral(i, n - i, params)? - phi_integral(i - 1, n - i + 1, params)?)
}
