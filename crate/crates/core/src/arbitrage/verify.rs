//! Exhaustive evaluation of a strategy over every relevant sign completion.
//!
//! The tree is walked only along the prefixes that carry recorded holdings;
//! below any other node the holdings are frozen, so a flat position is one
//! equivalence class of paths and only a non-zero stock position forces
//! enumeration of the remaining signs.

use std::collections::HashSet;

use num_bigint::BigUint;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::market::{MarketModel, PathWord, MAX_FREE_SIGNS};
use crate::strategies::{self_financing_slack, Holdings, Strategy, SELF_FINANCING_TOL};

/// Tie tolerance separating profits and losses from zero, relative to the
/// largest gross position value `|bond| + |stock| S` met along the path.
pub const TIE_TOL: f64 = 1e-12;

/// Exact probability `num / 2^exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    num: BigUint,
    exp: u32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { num: BigUint::ZERO, exp: 0 }
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Dyadic { num: BigUint::from(1u8), exp: k }
    }

    /// `sum_l counts[l] 2^-l`.
    pub fn from_level_counts(counts: &[u64]) -> Self {
        let exp = counts.len().saturating_sub(1) as u32;
        let mut num = BigUint::ZERO;
        for (l, &c) in counts.iter().enumerate() {
            if c > 0 {
                num += BigUint::from(c) << (exp as usize - l);
            }
        }
        Dyadic { num, exp }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.num == BigUint::ZERO {
            return Dyadic::zero();
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp as u64);
        self.num >>= tz as usize;
        self.exp -= tz as u32;
        self
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn denominator(&self) -> BigUint {
        BigUint::from(1u8) << self.exp as usize
    }

    pub fn log2_denominator(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == BigUint::ZERO
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.num.bits();
        if bits > 60 {
            let shift = bits - 60;
            let top = (&self.num >> shift as usize).to_u64_digits().first().copied().unwrap_or(0) as f64;
            top * 2f64.powi(shift as i32 - self.exp as i32)
        } else {
            let n = self.num.to_u64_digits().first().copied().unwrap_or(0) as f64;
            n * 2f64.powi(-(self.exp as i32))
        }
    }
}

impl std::fmt::Display for Dyadic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Relative tie tolerance, see [`TIE_TOL`].
    pub tie_tol: f64,
    /// Keep every path class in the certificate.
    pub keep_classes: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tie_tol: TIE_TOL, keep_classes: false }
    }
}

/// Paths sharing one prefix of length `level` and one terminal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathClass {
    pub level: usize,
    pub terminal: f64,
    /// Smallest liquidation value along the path, steps `0..=N`.
    pub running_min: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArbitrageCertificate {
    pub lambda: f64,
    pub min_terminal_value: f64,
    pub max_terminal_value: f64,
    /// `P(V_N > tol)` with the per-path tolerance of [`TIE_TOL`].
    pub profit_probability: Dyadic,
    /// `P(V_N < -tol)`.
    pub loss_probability: Dyadic,
    pub witness_path: PathWord,
    pub min_running_value: f64,
    pub min_slack: f64,
    pub self_financing_pass: bool,
    pub is_arbitrage: bool,
    pub class_count: u64,
    #[serde(skip)]
    pub classes: Vec<PathClass>,
}

fn gross_value(h: Holdings, price: f64) -> f64 {
    h.bond.abs() + h.stock.abs() * price
}

struct Walk<'a> {
    market: &'a MarketModel,
    strategy: &'a Strategy,
    lambda: f64,
    opts: VerifyOptions,
    trie: HashSet<Vec<i8>>,
    path: Vec<i8>,
    profit: Vec<u64>,
    loss: Vec<u64>,
    min_v: (f64, Vec<i8>),
    max_v: (f64, Vec<i8>),
    min_running: f64,
    min_slack: f64,
    count: u64,
    classes: Vec<PathClass>,
}

impl Walk<'_> {
    fn leaf(&mut self, level: usize, terminal: f64, running_min: f64, gross: f64) {
        let n = self.market.n_steps();
        let tol = self.opts.tie_tol * gross;
        self.count += 1;
        if terminal > tol {
            self.profit[level] += 1;
        } else if terminal < -tol {
            self.loss[level] += 1;
        }
        self.min_running = self.min_running.min(running_min);
        let fill = |p: &[i8]| {
            let mut v = p.to_vec();
            v.resize(n, 1);
            v
        };
        if terminal < self.min_v.0 {
            self.min_v = (terminal, fill(&self.path));
        }
        if terminal > self.max_v.0 {
            self.max_v = (terminal, fill(&self.path));
        }
        if self.opts.keep_classes {
            self.classes.push(PathClass { level, terminal, running_min });
        }
    }

    /// Node at the end of `self.path`, reached with `prev` held from the parent.
    fn visit(&mut self, price: f64, prev: Holdings, running_min: f64, gross: f64) -> Result<()> {
        let n = self.path.len();
        let h = self.strategy.recorded(&self.path).unwrap_or(prev);
        self.min_slack = self.min_slack.min(self_financing_slack(prev, h, price, self.lambda));
        let v = h.liquidation_value(price, self.lambda);
        let running = running_min.min(v);
        let gross = gross.max(gross_value(prev, price)).max(gross_value(h, price));
        if n == self.market.n_steps() {
            self.leaf(n, v, running, gross);
            return Ok(());
        }
        let traded_below = [-1i8, 1].map(|s| {
            self.path.push(s);
            let hit = self.trie.contains(&self.path);
            self.path.pop();
            hit
        });
        if h.stock == 0.0 && traded_below == [false, false] {
            self.leaf(n, v, running, gross);
            return Ok(());
        }
        let y = self.market.coeffs().excess(n + 1, &self.path)?;
        for (s, traded) in [-1i8, 1].into_iter().zip(traded_below) {
            let next = price * self.market.step_factor(n + 1, y, s)?;
            self.path.push(s);
            if traded {
                self.visit(next, h, running, gross)?;
            } else {
                self.frozen(next, h, running, gross)?;
            }
            self.path.pop();
        }
        Ok(())
    }

    /// Subtree without trades below the end of `self.path`.
    fn frozen(&mut self, price: f64, h: Holdings, running_min: f64, gross: f64) -> Result<()> {
        let n = self.path.len();
        let v = h.liquidation_value(price, self.lambda);
        let running = running_min.min(v);
        let gross = gross.max(gross_value(h, price));
        if h.stock == 0.0 || n == self.market.n_steps() {
            self.leaf(n, v, running, gross);
            return Ok(());
        }
        let free = self.market.n_steps() - n;
        if free > MAX_FREE_SIGNS {
            return Err(Error::SupportTooLarge { free, limit: MAX_FREE_SIGNS });
        }
        let y = self.market.coeffs().excess(n + 1, &self.path)?;
        for s in [-1i8, 1] {
            let next = price * self.market.step_factor(n + 1, y, s)?;
            self.path.push(s);
            self.frozen(next, h, running, gross)?;
            self.path.pop();
        }
        Ok(())
    }
}

/// Exact minimum terminal value, profit probability and self-financing audit
/// of `strategy` over all paths.
pub fn verify_arbitrage_exhaustive(
    market: &MarketModel,
    strategy: &Strategy,
    lambda: f64,
) -> Result<ArbitrageCertificate> {
    verify_with(market, strategy, lambda, VerifyOptions::default())
}

pub fn verify_with(
    market: &MarketModel,
    strategy: &Strategy,
    lambda: f64,
    opts: VerifyOptions,
) -> Result<ArbitrageCertificate> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if strategy.horizon() > market.n_steps() {
        return Err(Error::InvalidParameter("strategy horizon exceeds the market".into()));
    }
    let n = market.n_steps();
    let mut trie = HashSet::new();
    for (prefix, _) in strategy.entries() {
        for l in 0..=prefix.len() {
            trie.insert(prefix.signs()[..l].to_vec());
        }
    }
    let mut walk = Walk {
        market,
        strategy,
        lambda,
        opts,
        trie,
        path: Vec::with_capacity(n),
        profit: vec![0; n + 1],
        loss: vec![0; n + 1],
        min_v: (f64::INFINITY, Vec::new()),
        max_v: (f64::NEG_INFINITY, Vec::new()),
        min_running: f64::INFINITY,
        min_slack: f64::INFINITY,
        count: 0,
        classes: Vec::new(),
    };
    if walk.trie.is_empty() {
        walk.frozen(market.s0(), Holdings::ZERO, f64::INFINITY, 0.0)?;
        walk.min_slack = 0.0;
    } else {
        walk.visit(market.s0(), Holdings::ZERO, f64::INFINITY, 0.0)?;
    }
    let profit_probability = Dyadic::from_level_counts(&walk.profit);
    let loss_probability = Dyadic::from_level_counts(&walk.loss);
    let min_terminal_value = walk.min_v.0;
    let self_financing_pass = walk.min_slack >= -SELF_FINANCING_TOL;
    let is_arbitrage = loss_probability.is_zero() && !profit_probability.is_zero() && self_financing_pass;
    let witness = if is_arbitrage { walk.max_v.1 } else { walk.min_v.1 };
    Ok(ArbitrageCertificate {
        lambda,
        min_terminal_value,
        max_terminal_value: walk.max_v.0,
        profit_probability,
        loss_probability,
        witness_path: PathWord::new(witness)?,
        min_running_value: walk.min_running,
        min_slack: walk.min_slack,
        self_financing_pass,
        is_arbitrage,
        class_count: walk.count,
        classes: walk.classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_coeff_table, HurstParams};
    use crate::strategies::{evaluate_value_process, sottinen_strategy};
    use std::sync::Arc;

    fn market(n: usize) -> MarketModel {
        let p = HurstParams::new(0.75, 1.0).unwrap();
        MarketModel::new(Arc::new(build_coeff_table(p, n, 1e-11).unwrap()), n, 1.0).unwrap()
    }

    #[test]
    fn dyadic_arithmetic() {
        let d = Dyadic::from_level_counts(&[0, 1, 0, 2]);
        // 1/2 + 2/8 = 3/4
        assert_eq!(d.to_string(), "3/2^2");
        assert_eq!(d.to_f64(), 0.75);
        assert!(Dyadic::from_level_counts(&[0, 0]).is_zero());
        assert_eq!(Dyadic::pow2_neg(5).to_f64(), 1.0 / 32.0);
        assert_eq!(Dyadic::from_level_counts(&[1]).to_string(), "1/2^0");
    }

    #[test]
    fn zero_strategy_certificate() {
        let m = market(8);
        let c = verify_arbitrage_exhaustive(&m, &Strategy::zero(8), 0.1).unwrap();
        assert_eq!(c.min_terminal_value, 0.0);
        assert!(c.profit_probability.is_zero());
        assert!(!c.is_arbitrage);
        assert_eq!(c.class_count, 1);
    }

    #[test]
    fn verdict_ignores_position_scale() {
        let m = market(12);
        let st = sottinen_strategy(&m, 0.01, 8).unwrap();
        let a = verify_arbitrage_exhaustive(&m, &st, 0.01).unwrap();
        let b = verify_arbitrage_exhaustive(&m, &st.scaled(1e-20), 0.01).unwrap();
        assert!(a.is_arbitrage && b.is_arbitrage);
        assert_eq!(a.profit_probability, b.profit_probability);
        assert_eq!(a.witness_path, b.witness_path);
    }

    #[test]
    fn matches_leaf_enumeration() {
        let m = market(9);
        let st = sottinen_strategy(&m, 0.0, 6).unwrap();
        let c = verify_with(&m, &st, 0.0, VerifyOptions { keep_classes: true, ..Default::default() }).unwrap();
        let mut min = f64::INFINITY;
        let mut profit = 0u64;
        for idx in 0..1u64 << 9 {
            let p = PathWord::from_index(idx, 9);
            let v = evaluate_value_process(&m, &st, p.signs(), 0.0).unwrap();
            min = min.min(v.values[9]);
            if v.values[9] > TIE_TOL {
                profit += 1;
            }
        }
        assert_eq!(c.min_terminal_value, min);
        assert_eq!(c.profit_probability.to_f64(), profit as f64 / 512.0);
        assert!(c.is_arbitrage);
        // both children of the shorting node profit
        assert_eq!(c.profit_probability, Dyadic::pow2_neg(5));
        let total: f64 = c.classes.iter().map(|k| 0.5f64.powi(k.level as i32)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stock_left_open_is_enumerated() {
        let m = market(6);
        let mut st = Strategy::zero(6);
        st.set("dd".parse().unwrap(), Holdings::new(0.0, 1.0)).unwrap();
        let c = verify_arbitrage_exhaustive(&m, &st, 0.0).unwrap();
        // buying without paying violates the budget; the walk still covers every leaf
        assert!(!c.self_financing_pass);
        assert_eq!(c.class_count, 16 + 2);
    }
}
