use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::coeffs::{coeff_g, coeff_j, row_sum_integral};
use crate::kernels::special::cell_integral;
use crate::kernels::HurstParams;

/// Source of the coefficients `j_n(i)` and `g_n`.
pub trait Coefficients: Send + Sync + Debug {
    fn params(&self) -> &HurstParams;

    /// Deepest level available, `None` when coefficients are computed on demand.
    fn depth(&self) -> Option<usize>;

    fn j(&self, n: usize, i: usize) -> Result<f64>;

    fn g(&self, n: usize) -> Result<f64>;

    /// `sum_{i=lo}^{hi} j_n(i)`; zero when `lo > hi`.
    fn row_sum(&self, n: usize, lo: usize, hi: usize) -> Result<f64>;

    /// `j_n(1), ..., j_n(n-1)`.
    fn row(&self, n: usize) -> Result<Vec<f64>> {
        (1..n).map(|i| self.j(n, i)).collect()
    }

    /// `sum_{i <= xs.len()} j_n(i) x_i` for `xs.len() < n`, summed over runs of equal signs.
    fn partial_excess(&self, n: usize, xs: &[i8]) -> Result<f64> {
        if xs.len() >= n.max(1) {
            return Err(Error::Index(format!("{} signs do not fit below level {n}", xs.len())));
        }
        let mut total = 0.0;
        let mut start = 0;
        while start < xs.len() {
            let s = xs[start];
            let mut end = start;
            while end + 1 < xs.len() && xs[end + 1] == s {
                end += 1;
            }
            total += s as f64 * self.row_sum(n, start + 1, end + 1)?;
            start = end + 1;
        }
        Ok(total)
    }

    /// `Y_n(x) = sum_{i<n} j_n(i) x_i` from the first `n - 1` signs of `prefix`.
    fn excess(&self, n: usize, prefix: &[i8]) -> Result<f64> {
        check_prefix(n, prefix)?;
        self.partial_excess(n, &prefix[..n - 1])
    }
}

fn check_prefix(n: usize, prefix: &[i8]) -> Result<()> {
    if n == 0 {
        return Err(Error::Index("level n must be >= 1".into()));
    }
    if prefix.len() < n - 1 {
        return Err(Error::PathLength { needed: n - 1, got: prefix.len() });
    }
    Ok(())
}

fn check_quad_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::InvalidParameter(format!("quad_tol must lie in (0, 1e-3], got {tol}")));
    }
    Ok(())
}

/// Dense triangle of `j_n(i)` for `2 <= n <= n_max` with `g_1..g_{n_max}`.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    params: HurstParams,
    n_max: usize,
    quad_tol: f64,
    cells: Vec<f64>,
    g: Vec<f64>,
}

fn row_offset(n: usize) -> usize {
    (n - 1) * (n - 2) / 2
}

/// Computes every cell and every `g_n` up to level `n_max` in parallel.
pub fn build_coeff_table(params: HurstParams, n_max: usize, quad_tol: f64) -> Result<CoeffTable> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    check_quad_tol(quad_tol)?;
    // Longest rows first for load balance.
    let rows: Vec<Vec<f64>> = (2..=n_max)
        .rev()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| (1..n).map(|i| coeff_j(n as u64, i as u64, &params, quad_tol)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(row_offset(n_max + 1));
    for row in rows.into_iter().rev() {
        cells.extend(row);
    }
    let g = (1..=n_max).into_par_iter().map(|n| coeff_g(n as u64, &params, quad_tol)).collect::<Result<Vec<_>>>()?;
    Ok(CoeffTable { params, n_max, quad_tol, cells, g })
}

impl CoeffTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// Row `n` as a slice indexed by `i - 1`.
    pub fn row_slice(&self, n: usize) -> Result<&[f64]> {
        if n < 2 || n > self.n_max {
            return Err(Error::Index(format!("row {n} outside 2..={}", self.n_max)));
        }
        let off = row_offset(n);
        Ok(&self.cells[off..off + n - 1])
    }

    pub fn g_values(&self) -> &[f64] {
        &self.g
    }

    /// All cells in row-major order `(n, i)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (2..=self.n_max).flat_map(move |n| {
            let off = row_offset(n);
            (1..n).map(move |i| (n, i, self.cells[off + i - 1]))
        })
    }
}

impl Coefficients for CoeffTable {
    fn params(&self) -> &HurstParams {
        &self.params
    }

    fn depth(&self) -> Option<usize> {
        Some(self.n_max)
    }

    fn j(&self, n: usize, i: usize) -> Result<f64> {
        if i == 0 || i >= n {
            return Err(Error::Index(format!("j({n}, {i}) needs 1 <= i < n")));
        }
        Ok(self.row_slice(n)?[i - 1])
    }

    fn g(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.n_max {
            return Err(Error::Index(format!("g({n}) outside 1..={}", self.n_max)));
        }
        Ok(self.g[n - 1])
    }

    fn row_sum(&self, n: usize, lo: usize, hi: usize) -> Result<f64> {
        if lo > hi {
            return Ok(0.0);
        }
        if lo == 0 || hi >= n {
            return Err(Error::Index(format!("row sum ({n}, {lo}..={hi}) needs 1 <= lo and hi < n")));
        }
        Ok(self.row_slice(n)?[lo - 1..hi].iter().sum())
    }

    fn row(&self, n: usize) -> Result<Vec<f64>> {
        if n == 1 {
            return Ok(Vec::new());
        }
        Ok(self.row_slice(n)?.to_vec())
    }

    fn partial_excess(&self, n: usize, xs: &[i8]) -> Result<f64> {
        if xs.len() >= n.max(1) {
            return Err(Error::Index(format!("{} signs do not fit below level {n}", xs.len())));
        }
        if xs.is_empty() {
            return Ok(0.0);
        }
        let row = self.row_slice(n)?;
        Ok(row.iter().zip(xs).map(|(j, &x)| j * x as f64).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Cell(usize, usize),
    G(usize),
    Sum(usize, usize, usize),
}

/// Coefficients computed on demand by quadrature, without a depth limit.
///
/// Long row sums are single integrals, so levels far beyond any dense
/// table are reachable as long as only a few sums per level are needed.
#[derive(Debug)]
pub struct DirectKernel {
    params: HurstParams,
    quad_tol: f64,
    cache: Mutex<HashMap<Key, f64>>,
}

impl DirectKernel {
    pub fn new(params: HurstParams, quad_tol: f64) -> Result<Self> {
        check_quad_tol(quad_tol)?;
        Ok(DirectKernel { params, quad_tol, cache: Mutex::new(HashMap::new()) })
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    fn cached(&self, key: Key, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
        if let Some(&v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = compute()?;
        self.cache.lock().expect("cache poisoned").insert(key, v);
        Ok(v)
    }
}

impl Coefficients for DirectKernel {
    fn params(&self) -> &HurstParams {
        &self.params
    }

    fn depth(&self) -> Option<usize> {
        None
    }

    fn j(&self, n: usize, i: usize) -> Result<f64> {
        self.cached(Key::Cell(n, i), || coeff_j(n as u64, i as u64, &self.params, self.quad_tol))
    }

    fn g(&self, n: usize) -> Result<f64> {
        self.cached(Key::G(n), || coeff_g(n as u64, &self.params, self.quad_tol))
    }

    fn row_sum(&self, n: usize, lo: usize, hi: usize) -> Result<f64> {
        if lo > hi {
            return Ok(0.0);
        }
        if lo == 0 || hi >= n {
            return Err(Error::Index(format!("row sum ({n}, {lo}..={hi}) needs 1 <= lo and hi < n")));
        }
        if hi - lo < 4 {
            return (lo..=hi).map(|i| self.j(n, i)).sum();
        }
        self.cached(Key::Sum(n, lo, hi), || {
            row_sum_integral(n as u64, lo as u64, hi as u64, &self.params, self.quad_tol)
        })
    }
}

/// Per-cell margins of the coefficient bounds; a margin is negative where a bound fails.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub quad_tol: f64,
    /// `j_n(i) - c_star (n-1)^a I_n(i)`, row-major cell order.
    pub j_lower: Vec<f64>,
    /// `c_star n^a I_n(i) - j_n(i)`, row-major cell order.
    pub j_upper: Vec<f64>,
    /// `g_n - g_limit`, indexed by `n - 1`.
    pub g_lower: Vec<f64>,
    /// `g_limit (1 + 1/(n-1))^a - g_n` for `n >= 2`, indexed by `n - 2`.
    pub g_upper: Vec<f64>,
    /// `c_X n^a - (sum_i j_n(i) + g_n)`, the bound on `|X_n|`, indexed by `n - 1`.
    pub move_bound: Vec<f64>,
    /// `sigma^2 (1 - c_H^2 / (H + 1/2)^2) - sum_i j_n(i)^2`, indexed by `n - 1`.
    pub variance: Vec<f64>,
    pub pass: bool,
}

/// Smallest margin of each family.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundSummary {
    pub j_lower: f64,
    pub j_upper: f64,
    pub g_lower: f64,
    pub g_upper: f64,
    pub move_bound: f64,
    pub variance: f64,
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

impl BoundReport {
    pub fn summary(&self) -> BoundSummary {
        BoundSummary {
            j_lower: min_of(&self.j_lower),
            j_upper: min_of(&self.j_upper),
            g_lower: min_of(&self.g_lower),
            g_upper: min_of(&self.g_upper),
            move_bound: min_of(&self.move_bound),
            variance: min_of(&self.variance),
        }
    }
}

/// Checks every cell of `table` against the closed-form bounds.
pub fn validate_coeff_bounds(table: &CoeffTable) -> Result<BoundReport> {
    let p = table.params;
    let k = p.constants();
    let a = p.alpha();
    let margins: Vec<(f64, f64)> = (2..=table.n_max)
        .into_par_iter()
        .map(|n| -> Result<Vec<(f64, f64)>> {
            let row = table.row_slice(n)?;
            let lo_scale = k.c_star * ((n - 1) as f64).powf(a);
            let hi_scale = k.c_star * (n as f64).powf(a);
            (1..n)
                .map(|i| {
                    let cell = cell_integral(n as u64, i as u64, &p)?;
                    let j = row[i - 1];
                    Ok((j - lo_scale * cell, hi_scale * cell - j))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let (j_lower, j_upper): (Vec<f64>, Vec<f64>) = margins.into_iter().unzip();

    let g_lower: Vec<f64> = table.g.iter().map(|g| g - k.g_limit).collect();
    let g_upper: Vec<f64> =
        (2..=table.n_max).map(|n| k.g_limit * (1.0 + 1.0 / (n - 1) as f64).powf(a) - table.g[n - 1]).collect();
    let var_cap = p.sigma() * p.sigma() * (1.0 - (p.c_h() / (p.hurst() + 0.5)).powi(2));
    let mut move_bound = Vec::with_capacity(table.n_max);
    let mut variance = Vec::with_capacity(table.n_max);
    for n in 1..=table.n_max {
        let row = if n == 1 { &[][..] } else { table.row_slice(n)? };
        let r: f64 = row.iter().sum();
        let sq: f64 = row.iter().map(|j| j * j).sum();
        move_bound.push(k.c_x * (n as f64).powf(a) - (r + table.g[n - 1]));
        variance.push(var_cap - sq);
    }

    let tol = table.quad_tol;
    let pass =
        [&j_lower, &j_upper, &g_lower, &g_upper, &move_bound, &variance].iter().all(|v| v.iter().all(|&m| m >= -tol));
    Ok(BoundReport { quad_tol: tol, j_lower, j_upper, g_lower, g_upper, move_bound, variance, pass })
}
