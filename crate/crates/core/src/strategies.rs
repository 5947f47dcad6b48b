//! λ-self-financing strategies, their liquidation values and the named
//! constructions.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::arbitrage::psi_plan;
use crate::error::{Error, Result};
use crate::market::{MarketModel, PathWord};

/// Tolerance of the self-financing audit.
pub const SELF_FINANCING_TOL: f64 = 1e-12;

/// Largest liquidation horizon for which the continuation nodes are stored explicitly.
pub const MAX_STORED_HORIZON: usize = 20;

/// Bond and stock units held after trading at one node.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Holdings {
    pub bond: f64,
    pub stock: f64,
}

impl Holdings {
    pub const ZERO: Holdings = Holdings { bond: 0.0, stock: 0.0 };

    pub fn new(bond: f64, stock: f64) -> Self {
        Holdings { bond, stock }
    }

    /// Long stock sold at the bid `(1-λ)S`, short stock bought back at the ask `S`.
    pub fn liquidation_value(&self, price: f64, lambda: f64) -> f64 {
        let long = self.stock.max(0.0);
        let short = (-self.stock).max(0.0);
        self.bond + (1.0 - lambda) * long * price - short * price
    }

    fn scaled(&self, q: f64) -> Holdings {
        Holdings { bond: q * self.bond, stock: q * self.stock }
    }
}

/// Holdings recorded only at prefixes where they change; every other node
/// inherits the holdings of its parent, starting from zero before step 0.
#[derive(Debug, Clone, Default)]
pub struct Strategy {
    horizon: usize,
    levels: BTreeMap<usize, HashMap<PathWord, Holdings>>,
}

impl Strategy {
    pub fn zero(horizon: usize) -> Self {
        Strategy { horizon, levels: BTreeMap::new() }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Records the holdings held after trading at `prefix`.
    pub fn set(&mut self, prefix: PathWord, holdings: Holdings) -> Result<()> {
        if prefix.len() > self.horizon {
            return Err(Error::Index(format!("prefix of length {} beyond horizon {}", prefix.len(), self.horizon)));
        }
        if !(holdings.bond.is_finite() && holdings.stock.is_finite()) {
            return Err(Error::InvalidParameter("holdings must be finite".into()));
        }
        self.levels.entry(prefix.len()).or_default().insert(prefix, holdings);
        Ok(())
    }

    /// Holdings recorded exactly at `prefix`, if any.
    pub fn recorded(&self, prefix: &[i8]) -> Option<Holdings> {
        self.levels.get(&prefix.len()).and_then(|m| m.get(prefix)).copied()
    }

    pub fn recorded_levels(&self) -> impl Iterator<Item = usize> + '_ {
        self.levels.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.levels.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Recorded entries ordered by level, then by prefix.
    pub fn entries(&self) -> Vec<(&PathWord, Holdings)> {
        let mut out = Vec::with_capacity(self.len());
        for m in self.levels.values() {
            let mut level: Vec<_> = m.iter().map(|(k, v)| (k, *v)).collect();
            level.sort_by(|a, b| a.0.signs().cmp(b.0.signs()));
            out.extend(level);
        }
        out
    }

    /// Holdings after trading at step `n` along `path`.
    pub fn holdings_at(&self, path: &[i8], n: usize) -> Holdings {
        for (&level, m) in self.levels.range(..=n.min(path.len())).rev() {
            if let Some(h) = m.get(&path[..level]) {
                return *h;
            }
        }
        Holdings::ZERO
    }

    /// Holdings after trading at steps `0..=path.len()`.
    pub fn holdings_along(&self, path: &[i8]) -> Vec<Holdings> {
        let mut out = Vec::with_capacity(path.len() + 1);
        let mut current = Holdings::ZERO;
        for n in 0..=path.len() {
            if let Some(h) = self.recorded(&path[..n]) {
                current = h;
            }
            out.push(current);
        }
        out
    }

    pub fn scaled(&self, q: f64) -> Strategy {
        let levels =
            self.levels.iter().map(|(&l, m)| (l, m.iter().map(|(k, h)| (k.clone(), h.scaled(q))).collect())).collect();
        Strategy { horizon: self.horizon, levels }
    }
}

/// `V_0^λ, ..., V_N^λ` along one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueSeries {
    pub lambda: f64,
    pub values: Vec<f64>,
}

/// Per-step slack of the self-financing inequality; fails below `-1e-12`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfFinancingAudit {
    pub slack: Vec<f64>,
    pub pass: bool,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

fn check_full_path(market: &MarketModel, path: &[i8]) -> Result<()> {
    if path.len() != market.n_steps() {
        return Err(Error::PathLength { needed: market.n_steps(), got: path.len() });
    }
    Ok(())
}

/// Liquidation values along a full path.
pub fn evaluate_value_process(
    market: &MarketModel,
    strategy: &Strategy,
    path: &[i8],
    lambda: f64,
) -> Result<ValueSeries> {
    check_lambda(lambda)?;
    check_full_path(market, path)?;
    let prices = market.price_along_path(path)?;
    let values =
        strategy.holdings_along(path).iter().zip(&prices).map(|(h, &s)| h.liquidation_value(s, lambda)).collect();
    Ok(ValueSeries { lambda, values })
}

/// Slack of `dφ⁰ <= -(dφ¹)⁺ S + (1-λ)(dφ¹)⁻ S` at one step.
pub fn self_financing_slack(prev: Holdings, next: Holdings, price: f64, lambda: f64) -> f64 {
    let ds = next.stock - prev.stock;
    let rhs = -ds.max(0.0) * price + (1.0 - lambda) * (-ds).max(0.0) * price;
    rhs - (next.bond - prev.bond)
}

pub fn check_self_financing(
    market: &MarketModel,
    strategy: &Strategy,
    path: &[i8],
    lambda: f64,
) -> Result<SelfFinancingAudit> {
    check_lambda(lambda)?;
    check_full_path(market, path)?;
    let prices = market.price_along_path(path)?;
    let mut prev = Holdings::ZERO;
    let mut slack = Vec::with_capacity(prices.len());
    for (h, &s) in strategy.holdings_along(path).iter().zip(&prices) {
        slack.push(self_financing_slack(prev, *h, s, lambda));
        prev = *h;
    }
    let pass = slack.iter().all(|&x| x >= -SELF_FINANCING_TOL);
    Ok(SelfFinancingAudit { slack, pass })
}

/// Short one unit at the all-down node of level `n0 - 1` and close at `n0`.
pub fn sottinen_strategy(market: &MarketModel, lambda: f64, n0: usize) -> Result<Strategy> {
    check_lambda(lambda)?;
    if n0 == 0 || n0 > market.n_steps() {
        return Err(Error::Index(format!("n0 = {n0} outside 1..={}", market.n_steps())));
    }
    let prefix = PathWord::all_down(n0 - 1);
    let s = market.price_at(prefix.signs())?;
    let growth = market.continuation_growth(prefix.signs(), 1)?;
    let proceeds = (1.0 - lambda) * s;
    let mut st = Strategy::zero(market.n_steps());
    for (idx, g) in growth.iter().enumerate() {
        let child = prefix.child(if idx == 1 { 1 } else { -1 });
        st.set(child, Holdings::new(proceeds - s * g, 0.0))?;
    }
    st.set(prefix, Holdings::new(proceeds, -1.0))?;
    Ok(st)
}

/// How long the short position of the γ-strategy is held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Horizon {
    /// `⌊P_γ N⌋` with the constant of the drift lemma.
    Lemma,
    /// The longest horizon over which the worst-case drift stays non-positive.
    Maximal,
    Fixed(usize),
}

impl std::str::FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma" => Ok(Horizon::Lemma),
            "maximal" => Ok(Horizon::Maximal),
            other => other.parse().map(Horizon::Fixed).map_err(|_| {
                Error::InvalidParameter(format!("horizon must be lemma, maximal or an integer, got {other}"))
            }),
        }
    }
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Horizon::Lemma => f.write_str("lemma"),
            Horizon::Maximal => f.write_str("maximal"),
            Horizon::Fixed(p) => write!(f, "{p}"),
        }
    }
}

/// Short one unit at the all-down node of level `⌊γN⌋`, hold for the
/// chosen horizon on every continuation, then close.
pub fn gamma_strategy(market: &MarketModel, lambda: f64, gamma: f64, horizon: Horizon) -> Result<Strategy> {
    check_lambda(lambda)?;
    let plan = psi_plan(market, gamma, horizon)?;
    if plan.horizon == 0 {
        return Err(Error::DegenerateHorizon(format!(
            "holding horizon is 0 at N = {} (gamma = {gamma}, {horizon})",
            market.n_steps()
        )));
    }
    if plan.horizon > MAX_STORED_HORIZON {
        return Err(Error::SupportTooLarge { free: plan.horizon, limit: MAX_STORED_HORIZON });
    }
    let prefix = PathWord::all_down(plan.k0);
    let s = market.price_at(prefix.signs())?;
    let proceeds = (1.0 - lambda) * s;
    let growth = market.continuation_growth(prefix.signs(), plan.horizon)?;
    let mut st = Strategy::zero(market.n_steps());
    for (idx, g) in growth.iter().enumerate() {
        let tail = PathWord::from_index(idx as u64, plan.horizon);
        st.set(prefix.extended(tail.signs()), Holdings::new(proceeds - s * g, 0.0))?;
    }
    st.set(prefix, Holdings::new(proceeds, -1.0))?;
    Ok(st)
}

/// All holdings multiplied by `q > 0`.
pub fn scaled_strategy(strategy: &Strategy, q: f64) -> Result<Strategy> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {q}")));
    }
    Ok(strategy.scaled(q))
}

/// A trade of size `quantity[x]` at every node `x` of level `n`: short on
/// the short set, long elsewhere, closed one step later. Nodes are indexed
/// as in [`PathWord::from_index`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneStepSpec {
    n: usize,
    short: Vec<bool>,
    quantity: Vec<f64>,
}

impl OneStepSpec {
    pub fn new(n: usize, short: Vec<bool>, quantity: Vec<f64>) -> Result<Self> {
        if n > crate::market::MAX_FREE_SIGNS {
            return Err(Error::SupportTooLarge { free: n, limit: crate::market::MAX_FREE_SIGNS });
        }
        let size = 1usize << n;
        if short.len() != size || quantity.len() != size {
            return Err(Error::InvalidParameter(format!(
                "level {n} has {size} nodes, got {} flags and {} quantities",
                short.len(),
                quantity.len()
            )));
        }
        if let Some(q) = quantity.iter().find(|q| !(**q >= 0.0 && q.is_finite())) {
            return Err(Error::InvalidParameter(format!("quantities must be finite and >= 0, got {q}")));
        }
        Ok(OneStepSpec { n, short, quantity })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_short(&self, index: usize) -> bool {
        self.short[index]
    }

    pub fn quantity(&self, index: usize) -> f64 {
        self.quantity[index]
    }
}

pub fn one_step_strategy(market: &MarketModel, lambda: f64, spec: &OneStepSpec) -> Result<Strategy> {
    check_lambda(lambda)?;
    let n = spec.n;
    if n == 0 || n >= market.n_steps() {
        return Err(Error::InvalidParameter(format!("trade level {n} outside 1..{}", market.n_steps())));
    }
    let s0 = market.s0();
    let level = market.continuation_growth(&[], n)?;
    let next = market.continuation_growth(&[], n + 1)?;
    let mut st = Strategy::zero(market.n_steps());
    for (idx, &q) in spec.quantity.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let node = PathWord::from_index(idx as u64, n);
        let s = s0 * level[idx];
        for (bit, sign) in [(0usize, -1i8), (1, 1)] {
            let s1 = s0 * next[idx | (bit << n)];
            let bond = if spec.short[idx] { q * ((1.0 - lambda) * s - s1) } else { q * ((1.0 - lambda) * s1 - s) };
            st.set(node.child(sign), Holdings::new(bond, 0.0))?;
        }
        let h = if spec.short[idx] { Holdings::new(q * (1.0 - lambda) * s, -q) } else { Holdings::new(-q * s, q) };
        st.set(node, h)?;
    }
    Ok(st)
}
