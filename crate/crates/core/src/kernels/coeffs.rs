//! Nested quadrature of the coefficients `j_n(i)`, `g_n` and of sums over
//! rows and columns of the coefficient triangle.
//!
//! All integrals share the form `sigma c_H int x^{-a} K(x) dx` where the
//! inner kernel `K` is evaluated in one of two forms:
//! near the diagonal the inner variable is substituted by `t = (u - x)^a`,
//! which removes the `(u - x)^{a-1}` singularity; away from it the plain
//! form on the unit interval is smooth and free of cancellation.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::kernels::quad::{QuadFailure, TanhSinh};
use crate::kernels::HurstParams;

/// Inner tolerance relative to the outer one.
const INNER_FACTOR: f64 = 0.1;

fn fail(context: String, f: QuadFailure) -> Error {
    let reason = match f {
        QuadFailure::NoConvergence { value, error } => {
            format!("no convergence (estimate {value:e}, error {error:e})")
        }
        QuadFailure::NonFinite { at } => format!("non-finite integrand at {at:e}"),
    };
    Error::Quadrature { context, reason }
}

/// Records the first inner failure so the outer rule can report it.
struct InnerGuard(Cell<Option<QuadFailure>>);

impl InnerGuard {
    fn new() -> Self {
        InnerGuard(Cell::new(None))
    }

    fn take(&self, r: std::result::Result<f64, QuadFailure>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                if self.0.get().is_none() {
                    self.0.set(Some(e));
                }
                f64::NAN
            }
        }
    }

    fn finish(&self, outer: std::result::Result<f64, QuadFailure>, context: impl Fn() -> String) -> Result<f64> {
        if let Some(e) = self.0.get() {
            return Err(fail(format!("{} (inner)", context()), e));
        }
        outer.map_err(|e| fail(context(), e))
    }
}

/// `a * int_{n-1}^{n} u^a (u - x)^{a-1} du` at `x = n - 1 - c`, `c >= 0`.
fn kernel_row(a: f64, n: f64, x: f64, c: f64, tol: f64) -> std::result::Result<f64, QuadFailure> {
    let ts = TanhSinh::global();
    if c < 1.0 {
        let inv = 1.0 / a;
        let lo = c.powf(a);
        let hi = (1.0 + c).powf(a);
        ts.integrate(|t, _, _| (t.powf(inv) + x).powf(a), lo, hi, tol).map(|e| e.value)
    } else {
        let base = n - 1.0;
        ts.integrate(|v, _, _| (v + base).powf(a) * (v + c).powf(a - 1.0), 0.0, 1.0, tol).map(|e| a * e.value)
    }
}

/// `a * int_x^{x + e} u^a (u - x)^{a-1} du = int_0^{e^a} (t^{1/a} + x)^a dt`.
fn kernel_upto(a: f64, x: f64, e: f64, tol: f64) -> std::result::Result<f64, QuadFailure> {
    if e == 0.0 {
        return Ok(0.0);
    }
    let inv = 1.0 / a;
    TanhSinh::global().integrate(|t, _, _| (t.powf(inv) + x).powf(a), 0.0, e.powf(a), tol).map(|r| r.value)
}

/// Integral of `x^{-a} K_n(x)` over `[lo, hi]` with integer endpoints and `hi <= n - 1`.
fn row_piece(
    p: &HurstParams,
    n: u64,
    lo: u64,
    hi: u64,
    tol: f64,
    guard: &InnerGuard,
) -> std::result::Result<f64, QuadFailure> {
    let a = p.alpha();
    let nf = n as f64;
    let gap = (n - 1 - hi) as f64;
    let lof = lo as f64;
    TanhSinh::global()
        .integrate(
            |x, da, db| {
                let xv = if lo == 0 { da } else { lof + da };
                let c = gap + db;
                xv.powf(-a) * guard.take(kernel_row(a, nf, x, c, tol * INNER_FACTOR))
            },
            lof,
            hi as f64,
            tol,
        )
        .map(|e| e.value)
}

/// `j_n(i)` by nested quadrature, `1 <= i < n`.
pub fn coeff_j(n: u64, i: u64, p: &HurstParams, tol: f64) -> Result<f64> {
    if n < 2 || i == 0 || i >= n {
        return Err(Error::Index(format!("j({n}, {i}) needs 1 <= i < n")));
    }
    let guard = InnerGuard::new();
    let v = row_piece(p, n, i - 1, i, tol, &guard);
    Ok(p.sigma() * p.c_h() * guard.finish(v, || format!("j({n},{i})"))?)
}

/// `g_n` by nested quadrature, `n >= 1`.
pub fn coeff_g(n: u64, p: &HurstParams, tol: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Index("g(n) needs n >= 1".into()));
    }
    let a = p.alpha();
    let lof = (n - 1) as f64;
    let guard = InnerGuard::new();
    let v = TanhSinh::global()
        .integrate(
            |_, da, db| {
                let xv = if n == 1 { da } else { lof + da };
                xv.powf(-a) * guard.take(kernel_upto(a, xv, db, tol * INNER_FACTOR))
            },
            lof,
            n as f64,
            tol,
        )
        .map(|e| e.value);
    Ok(p.sigma() * p.c_h() * guard.finish(v, || format!("g({n})"))?)
}

/// Split points of `[lo, hi]` refined geometrically towards both ends.
fn geometric_pieces(lo: u64, hi: u64) -> Vec<u64> {
    let mut pts = vec![lo, hi];
    let mut step = 1u64;
    while step < hi - lo {
        pts.push(lo + step);
        pts.push(hi - step);
        step *= 2;
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// `sum_{i=lo}^{hi} j_n(i)` as one integral over `[lo - 1, hi]`.
pub fn row_sum_integral(n: u64, lo: u64, hi: u64, p: &HurstParams, tol: f64) -> Result<f64> {
    if lo > hi {
        return Ok(0.0);
    }
    if lo == 0 || hi >= n {
        return Err(Error::Index(format!("row sum ({n}, {lo}..={hi}) needs 1 <= lo and hi < n")));
    }
    let pts = geometric_pieces(lo - 1, hi);
    let guard = InnerGuard::new();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let v = row_piece(p, n, w[0], w[1], tol, &guard);
        total += guard.finish(v, || format!("row sum ({n}, {}..{})", w[0], w[1]))?;
    }
    Ok(p.sigma() * p.c_h() * total)
}

/// Column total `g_i + sum_{n=i+1}^{big_n} j_n(i)`, `1 <= i <= big_n`.
pub fn column_total(i: u64, big_n: u64, p: &HurstParams, tol: f64) -> Result<f64> {
    if i == 0 || i > big_n {
        return Err(Error::Index(format!("column {i} needs 1 <= i <= {big_n}")));
    }
    let a = p.alpha();
    let lof = (i - 1) as f64;
    let reach = (big_n - i) as f64;
    let guard = InnerGuard::new();
    let v = TanhSinh::global()
        .integrate(
            |_, da, db| {
                let xv = if i == 1 { da } else { lof + da };
                xv.powf(-a) * guard.take(kernel_upto(a, xv, reach + db, tol * INNER_FACTOR))
            },
            lof,
            i as f64,
            tol,
        )
        .map(|e| e.value);
    Ok(p.sigma() * p.c_h() * guard.finish(v, || format!("column {i} to {big_n}"))?)
}
