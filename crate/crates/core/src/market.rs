//! The N-step fractional binary market with zero drift.

use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernels::{Coefficients, HurstParams};
use crate::rng;

/// Largest number of free signs enumerated below one node.
pub const MAX_FREE_SIGNS: usize = 24;

/// A word over `{-1, +1}`, index 1 first; written over `{d, u}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathWord(Vec<i8>);

impl PathWord {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!("path entries must be +1 or -1, got {bad}")));
        }
        Ok(PathWord(signs))
    }

    pub fn empty() -> Self {
        PathWord(Vec::new())
    }

    pub fn all_down(len: usize) -> Self {
        PathWord(vec![-1; len])
    }

    pub fn all_up(len: usize) -> Self {
        PathWord(vec![1; len])
    }

    /// Word whose `k`-th sign is `+1` iff bit `k - 1` of `index` is set.
    pub fn from_index(index: u64, len: usize) -> Self {
        PathWord((0..len).map(|k| if k < 64 && (index >> k) & 1 == 1 { 1 } else { -1 }).collect())
    }

    /// Inverse of [`PathWord::from_index`] for words of length at most 64.
    pub fn index(&self) -> Option<u64> {
        (self.0.len() <= 64).then(|| self.0.iter().enumerate().filter(|(_, &s)| s == 1).map(|(k, _)| 1u64 << k).sum())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn child(&self, s: i8) -> PathWord {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(s);
        PathWord(v)
    }

    pub fn extended(&self, tail: &[i8]) -> PathWord {
        let mut v = self.0.clone();
        v.extend_from_slice(tail);
        PathWord(v)
    }

    pub fn prefix(&self, len: usize) -> PathWord {
        PathWord(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn negated(&self) -> PathWord {
        PathWord(self.0.iter().map(|s| -s).collect())
    }
}

impl Borrow<[i8]> for PathWord {
    fn borrow(&self) -> &[i8] {
        &self.0
    }
}

impl fmt::Display for PathWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s == 1 { "u" } else { "d" })?;
        }
        Ok(())
    }
}

impl FromStr for PathWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'u' => Ok(1),
                'd' => Ok(-1),
                other => Err(Error::InvalidParameter(format!("path letter must be u or d, got {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PathWord)
    }
}

impl Serialize for PathWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PathWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `Y_n(x)` for a prefix of length exactly `n - 1`.
pub fn excess_y(coeffs: &dyn Coefficients, n: usize, prefix: &[i8]) -> Result<f64> {
    if n == 0 || prefix.len() != n - 1 {
        return Err(Error::PathLength { needed: n.saturating_sub(1), got: prefix.len() });
    }
    coeffs.excess(n, prefix)
}

/// Relative up and down moves at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeMoves {
    pub n: usize,
    pub up: f64,
    pub down: f64,
}

impl NodeMoves {
    /// Frictionless arbitrage point: `u <= 0` or `d >= 0`.
    pub fn is_arbitrage_point(&self) -> bool {
        self.up <= 0.0 || self.down >= 0.0
    }
}

/// Coefficients, horizon `N` and initial price.
#[derive(Clone)]
pub struct MarketModel {
    coeffs: Arc<dyn Coefficients>,
    n_steps: usize,
    s0: f64,
    scale: f64,
}

impl fmt::Debug for MarketModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarketModel")
            .field("params", self.coeffs.params())
            .field("n_steps", &self.n_steps)
            .field("s0", &self.s0)
            .finish()
    }
}

impl MarketModel {
    pub fn new(coeffs: Arc<dyn Coefficients>, n_steps: usize, s0: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidParameter("N must be >= 1".into()));
        }
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidParameter(format!("s0 must be positive, got {s0}")));
        }
        if let Some(depth) = coeffs.depth() {
            if n_steps > depth {
                return Err(Error::HorizonExceedsDepth { n_steps, depth });
            }
        }
        let params = *coeffs.params();
        let scale = (n_steps as f64).powf(params.hurst());
        let market = MarketModel { coeffs, n_steps, s0, scale };
        // |X_n| <= c_X n^a makes every factor positive once c_X < sqrt(N);
        // otherwise check the extreme nodes directly.
        if params.constants().c_x >= (n_steps as f64).sqrt() {
            for n in 1..=n_steps {
                let worst = market.coeffs.row_sum(n, 1, n - 1)? + market.coeffs.g(n)?;
                if worst >= scale {
                    return Err(Error::NonPositivePrice { step: n, factor: 1.0 - worst / scale });
                }
            }
        }
        Ok(market)
    }

    pub fn coeffs(&self) -> &dyn Coefficients {
        self.coeffs.as_ref()
    }

    pub fn coeffs_arc(&self) -> Arc<dyn Coefficients> {
        Arc::clone(&self.coeffs)
    }

    pub fn params(&self) -> &HurstParams {
        self.coeffs.params()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// `N^H`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_steps {
            return Err(Error::Index(format!("level {n} outside 1..={}", self.n_steps)));
        }
        Ok(())
    }

    /// Moves at level `n = prefix.len() + 1`.
    pub fn node_moves(&self, prefix: &[i8]) -> Result<NodeMoves> {
        let n = prefix.len() + 1;
        self.check_level(n)?;
        let y = self.coeffs.excess(n, prefix)?;
        let g = self.coeffs.g(n)?;
        Ok(NodeMoves { n, up: (y + g) / self.scale, down: (y - g) / self.scale })
    }

    /// `1 + (y + g_n s) / N^H`, rejected when not positive.
    pub fn step_factor(&self, n: usize, y: f64, s: i8) -> Result<f64> {
        let f = 1.0 + (y + self.coeffs.g(n)? * s as f64) / self.scale;
        if f <= 0.0 {
            return Err(Error::NonPositivePrice { step: n, factor: f });
        }
        Ok(f)
    }

    /// `S_0, ..., S_len` along `path`.
    pub fn price_along_path(&self, path: &[i8]) -> Result<Vec<f64>> {
        if path.len() > self.n_steps {
            return Err(Error::InvalidParameter(format!("path of length {} exceeds N = {}", path.len(), self.n_steps)));
        }
        let mut prices = Vec::with_capacity(path.len() + 1);
        let mut s = self.s0;
        prices.push(s);
        for n in 1..=path.len() {
            let y = self.coeffs.excess(n, path)?;
            s *= self.step_factor(n, y, path[n - 1])?;
            prices.push(s);
        }
        Ok(prices)
    }

    /// Price at the node reached by `prefix`.
    pub fn price_at(&self, prefix: &[i8]) -> Result<f64> {
        Ok(*self.price_along_path(prefix)?.last().expect("non-empty"))
    }

    /// `count` uniform paths of length `N`; sample `k` uses stream `(seed, k)`.
    pub fn sample_paths(&self, count: usize, seed: u64) -> Vec<PathWord> {
        (0..count as u64)
            .into_par_iter()
            .map(|k| PathWord(rng::signs(&mut rng::stream(seed, k), self.n_steps)))
            .collect()
    }

    /// Price ratios `S_{k0+depth} / S_{k0}` for every continuation of `prefix`
    /// (`k0 = prefix.len()`), ordered by [`PathWord::from_index`].
    pub fn continuation_growth(&self, prefix: &[i8], depth: usize) -> Result<Vec<f64>> {
        let k0 = prefix.len();
        self.check_continuation(k0, depth)?;
        let base = (1..=depth).map(|l| self.coeffs.partial_excess(k0 + l, prefix)).collect::<Result<Vec<_>>>()?;
        self.growth_from(k0, &base)
    }

    /// [`MarketModel::continuation_growth`] below the all-down node of level `k0`,
    /// without materializing the prefix.
    pub fn all_down_growth(&self, k0: usize, depth: usize) -> Result<Vec<f64>> {
        self.check_continuation(k0, depth)?;
        let base = (1..=depth).map(|l| self.coeffs.row_sum(k0 + l, 1, k0).map(|r| -r)).collect::<Result<Vec<_>>>()?;
        self.growth_from(k0, &base)
    }

    fn check_continuation(&self, k0: usize, depth: usize) -> Result<()> {
        if k0 + depth > self.n_steps {
            return Err(Error::Index(format!("continuation to {} exceeds N = {}", k0 + depth, self.n_steps)));
        }
        if depth > MAX_FREE_SIGNS {
            return Err(Error::SupportTooLarge { free: depth, limit: MAX_FREE_SIGNS });
        }
        Ok(())
    }

    fn growth_from(&self, k0: usize, base: &[f64]) -> Result<Vec<f64>> {
        let depth = base.len();
        let cells = (1..=depth)
            .map(|l| (1..l).map(|m| self.coeffs.j(k0 + l, k0 + m)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![0.0; 1usize << depth];
        let mut signs = vec![0i8; depth];
        self.grow(k0, 0, 0, 1.0, base, &cells, &mut signs, &mut out)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &self,
        k0: usize,
        l: usize,
        index: usize,
        growth: f64,
        base: &[f64],
        cells: &[Vec<f64>],
        signs: &mut [i8],
        out: &mut [f64],
    ) -> Result<()> {
        if l == base.len() {
            out[index] = growth;
            return Ok(());
        }
        let y = base[l] + cells[l].iter().zip(signs.iter()).map(|(j, &x)| j * x as f64).sum::<f64>();
        for s in [-1i8, 1] {
            signs[l] = s;
            let f = self.step_factor(k0 + l + 1, y, s)?;
            let idx = if s == 1 { index | (1 << l) } else { index };
            self.grow(k0, l + 1, idx, growth * f, base, cells, signs, out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::build_coeff_table;

    fn market(n: usize) -> MarketModel {
        let p = HurstParams::new(0.75, 1.0).unwrap();
        MarketModel::new(Arc::new(build_coeff_table(p, n, 1e-11).unwrap()), n, 1.0).unwrap()
    }

    #[test]
    fn path_word_round_trips() {
        let w: PathWord = "uddu".parse().unwrap();
        assert_eq!(w.signs(), &[1, -1, -1, 1]);
        assert_eq!(w.to_string(), "uddu");
        assert_eq!(PathWord::from_index(w.index().unwrap(), 4), w);
        assert!("uxd".parse::<PathWord>().is_err());
        assert!(PathWord::new(vec![1, 0]).is_err());
        assert_eq!(serde_json::to_string(&w).unwrap(), "\"uddu\"");
        assert_eq!(w.negated().to_string(), "duud");
    }

    #[test]
    fn root_moves_straddle_zero() {
        let m = market(8);
        let mv = m.node_moves(&[]).unwrap();
        assert!(mv.up > 0.0 && mv.down < 0.0);
        assert!(!mv.is_arbitrage_point());
        assert!(((mv.up - mv.down) - 2.0 * m.coeffs().g(1).unwrap() / m.scale()).abs() < 1e-15);
    }

    #[test]
    fn excess_length_checked() {
        let m = market(8);
        assert_eq!(excess_y(m.coeffs(), 1, &[]).unwrap(), 0.0);
        assert!(excess_y(m.coeffs(), 4, &[1, 1]).is_err());
        assert!(m.node_moves(&[1; 8]).is_err());
    }

    #[test]
    fn prices_and_growth_agree() {
        let m = market(10);
        let prefix = [-1i8, -1, 1, -1];
        let base = m.price_at(&prefix).unwrap();
        let growth = m.continuation_growth(&prefix, 5).unwrap();
        for (idx, g) in growth.iter().enumerate() {
            let tail = PathWord::from_index(idx as u64, 5);
            let full = PathWord::new(prefix.to_vec()).unwrap().extended(tail.signs());
            let s = m.price_at(full.signs()).unwrap();
            assert!((s - base * g).abs() < 1e-14, "{idx}");
        }
    }

    #[test]
    fn rejects_deep_market_and_bad_s0() {
        let p = HurstParams::new(0.75, 1.0).unwrap();
        let t = Arc::new(build_coeff_table(p, 6, 1e-10).unwrap());
        assert!(matches!(MarketModel::new(t.clone(), 7, 1.0), Err(Error::HorizonExceedsDepth { .. })));
        assert!(MarketModel::new(t, 6, 0.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = market(12);
        let a = m.sample_paths(50, 11);
        let b = m.sample_paths(50, 11);
        assert_eq!(a, b);
        assert!(a.iter().all(|w| w.len() == 12));
    }
}
