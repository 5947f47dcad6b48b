//! CSV and JSON export. Floats are written with 17 significant digits so
//! every value reads back bit for bit.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::arbitrage::CensusResult;
use crate::asymptotics::{AA1Report, VariancePoint};
use crate::error::Result;
use crate::kernels::CoeffTable;
use crate::strategies::{Strategy, ValueSeries};

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coeff_cells<W: Write>(t: &CoeffTable, out: W) -> Result<()> {
    table(out, &["n", "i", "j"], t.cells().map(|(n, i, j)| vec![n.to_string(), i.to_string(), fmt_f64(j)]))
}

pub fn write_coeff_g<W: Write>(t: &CoeffTable, out: W) -> Result<()> {
    table(out, &["n", "g"], t.g_values().iter().enumerate().map(|(k, g)| vec![(k + 1).to_string(), fmt_f64(*g)]))
}

pub fn coeff_metadata(t: &CoeffTable) -> Value {
    use crate::kernels::Coefficients;
    let p = t.params();
    let c = p.constants();
    json!({
        "H": p.hurst(),
        "sigma": p.sigma(),
        "n_max": t.n_max(),
        "quad_tol": t.quad_tol(),
        "c_H": c.c_h,
        "c_star": c.c_star,
        "g_limit": c.g_limit,
        "c_X": c.c_x,
    })
}

pub fn write_prices<W: Write>(prices: &[f64], out: W) -> Result<()> {
    table(out, &["step", "price"], prices.iter().enumerate().map(|(k, p)| vec![k.to_string(), fmt_f64(*p)]))
}

pub fn write_values<W: Write>(series: &ValueSeries, out: W) -> Result<()> {
    table(out, &["step", "value"], series.values.iter().enumerate().map(|(k, v)| vec![k.to_string(), fmt_f64(*v)]))
}

pub fn write_strategy<W: Write>(strategy: &Strategy, out: W) -> Result<()> {
    table(
        out,
        &["prefix", "bond", "stock"],
        strategy.entries().into_iter().map(|(p, h)| vec![p.to_string(), fmt_f64(h.bond), fmt_f64(h.stock)]),
    )
}

pub fn write_census<W: Write>(results: &[CensusResult], out: W) -> Result<()> {
    table(
        out,
        &["n", "method", "count_u", "count_d", "ratio", "ci_low", "ci_high", "samples", "seed"],
        results.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.method.to_string(),
                r.count_u.to_string(),
                r.count_d.to_string(),
                fmt_f64(r.ratio),
                opt_f64(r.ci_low),
                opt_f64(r.ci_high),
                opt(r.samples),
                opt(r.seed),
            ]
        }),
    )
}

/// One line of the critical-cost table.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRow {
    pub n: usize,
    /// `λ(Φ^N(N))`.
    pub lambda_phi_nn: f64,
    pub lambda_psi: Option<f64>,
    pub lowbd: f64,
    pub exact_one_step: f64,
    pub n_h: Option<usize>,
}

pub fn write_thresholds<W: Write>(rows: &[ThresholdRow], out: W) -> Result<()> {
    table(
        out,
        &["N", "lambda_phi_NN", "lambda_psi", "lowbd", "exact_one_step", "nH"],
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.lambda_phi_nn),
                opt_f64(r.lambda_psi),
                fmt_f64(r.lowbd),
                fmt_f64(r.exact_one_step),
                opt(r.n_h),
            ]
        }),
    )
}

pub fn write_aa1<W: Write>(report: &AA1Report, out: W) -> Result<()> {
    table(
        out,
        &["N", "lambda_N", "q_N", "c_N", "C_N", "profit_prob_num", "profit_prob_den", "admissible"],
        report.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.lambda_n),
                fmt_f64(r.q_n),
                fmt_f64(r.c_n),
                fmt_f64(r.big_c_n),
                r.profit_probability.numerator().to_string(),
                r.profit_probability.denominator().to_string(),
                r.admissible.to_string(),
            ]
        }),
    )
}

pub fn write_variance<W: Write>(points: &[VariancePoint], out: W) -> Result<()> {
    table(
        out,
        &["N", "variance", "normalized", "deviation"],
        points.iter().map(|p| vec![p.n.to_string(), fmt_f64(p.variance), fmt_f64(p.normalized), fmt_f64(p.deviation)]),
    )
}
