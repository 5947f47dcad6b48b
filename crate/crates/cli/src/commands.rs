use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use fracmarket::arbitrage::{
    chebyshev_ratio_bound, exact_one_step_critical, find_n_h, gamma_constants, lambda_phi, lambda_psi,
    lower_bound_lowbd, nu_h_estimate, verify_arbitrage_exhaustive, CensusMethod, Dyadic,
};
use fracmarket::asymptotics::{aa1_schedule, aa1_verify, variance_scaling};
use fracmarket::io;
use fracmarket::kernels::{build_coeff_table, validate_coeff_bounds, Coefficients, DirectKernel, HurstParams};
use fracmarket::market::MarketModel;
use fracmarket::strategies::{evaluate_value_process, gamma_strategy, sottinen_strategy, Horizon};
use fracmarket::{Error, Result};
use rayon::prelude::*;
use serde_json::json;

use crate::{Command, Common, Outcome, StrategyKind};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn params(c: &Common) -> Result<HurstParams> {
    HurstParams::new(c.hurst, c.sigma)
}

fn direct(c: &Common) -> Result<Arc<DirectKernel>> {
    Ok(Arc::new(DirectKernel::new(params(c)?, c.quad_tol)?))
}

fn grid(c: &Common, default: &str) -> Vec<usize> {
    c.n_grid.clone().unwrap_or_else(|| default.parse().expect("valid default grid")).0
}

pub fn run(cmd: &Command, c: &Common) -> Result<Outcome> {
    match cmd {
        Command::Coeffs => coeffs(c),
        Command::Critical { horizon } => critical(c, *horizon),
        Command::Census { exhaustive_max } => census(c, *exhaustive_max),
        Command::Aa1 { p } => aa1(c, *p),
        Command::Verify { strategy, n0, horizon } => verify(c, *strategy, *n0, *horizon),
        Command::Variance => variance(c),
    }
}

fn coeffs(c: &Common) -> Result<Outcome> {
    let table = build_coeff_table(params(c)?, c.n_max, c.quad_tol)?;
    io::write_coeff_cells(&table, create(&c.out, "coeffs_j.csv")?)?;
    io::write_coeff_g(&table, create(&c.out, "coeffs_g.csv")?)?;
    std::fs::write(c.out.join("coeffs_meta.json"), serde_json::to_string_pretty(&io::coeff_metadata(&table))? + "\n")?;
    let report = validate_coeff_bounds(&table)?;
    let summary = report.summary();
    Ok(Outcome {
        violation: !report.pass,
        results: json!({ "bounds": summary, "bounds_pass": report.pass, "quad_tol": report.quad_tol }),
    })
}

fn critical(c: &Common, horizon: Horizon) -> Result<Outcome> {
    let kernel = direct(c)?;
    let ns = grid(c, "dyadic:64:1024");
    let rows = ns
        .par_iter()
        .map(|&n| -> Result<_> {
            let m = MarketModel::new(kernel.clone(), n, c.s0)?;
            let psi = match lambda_psi(&m, c.gamma, horizon) {
                Ok(t) => Some(t),
                Err(Error::DegenerateHorizon(_)) => None,
                Err(e) => return Err(e),
            };
            let row = io::ThresholdRow {
                n,
                lambda_phi_nn: lambda_phi(&m, n)?,
                lambda_psi: psi.as_ref().map(|t| t.lambda),
                lowbd: lower_bound_lowbd(&m)?,
                exact_one_step: exact_one_step_critical(&m)?,
                n_h: find_n_h(kernel.as_ref(), n)?.n_h,
            };
            let detail = json!({
                "N": n,
                "psi_horizon": psi.as_ref().map(|t| t.horizon),
                "psi_k0": psi.as_ref().map(|t| t.k0),
                "psi_condition_holds": psi.as_ref().map(|t| t.condition_holds),
                "lambda_phi_NN_sqrtN": row.lambda_phi_nn * (n as f64).sqrt(),
            });
            Ok((row, detail))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, details): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    io::write_thresholds(&rows, create(&c.out, "thresholds.csv")?)?;
    let psi: Vec<f64> = rows.iter().filter_map(|r| r.lambda_psi).collect();
    let monotone = psi.len() == rows.len() && psi.windows(2).all(|w| w[0] < w[1]);
    Ok(Outcome {
        violation: false,
        results: json!({
            "horizon": horizon.to_string(),
            "gamma_constants": gamma_constants(&params(c)?, c.gamma)?,
            "lambda_psi_increasing": monotone,
            "rows": rows,
            "details": details,
        }),
    })
}

fn census(c: &Common, exhaustive_max: usize) -> Result<Outcome> {
    let kernel = direct(c)?;
    let levels = grid(c, "1:20:1");
    let est = nu_h_estimate(kernel.as_ref(), &levels, c.mc_samples, c.seed, exhaustive_max)?;
    io::write_census(&est.levels, create(&c.out, "census.csv")?)?;
    let bound = chebyshev_ratio_bound(kernel.params());
    let asymmetric: Vec<usize> = est
        .levels
        .iter()
        .filter(|r| r.method == CensusMethod::Exhaustive && r.count_u != r.count_d)
        .map(|r| r.n)
        .collect();
    let above_bound: Vec<usize> = if bound < 1.0 {
        est.levels.iter().filter(|r| r.method == CensusMethod::Exhaustive && r.ratio > bound).map(|r| r.n).collect()
    } else {
        Vec::new()
    };
    Ok(Outcome {
        violation: !asymmetric.is_empty() || !above_bound.is_empty(),
        results: json!({
            "nu_H_lower_estimate": est.estimate,
            "chebyshev_bound": bound,
            "asymmetric_levels": asymmetric,
            "levels_above_bound": above_bound,
        }),
    })
}

fn aa1(c: &Common, p: f64) -> Result<Outcome> {
    let kernel = direct(c)?;
    let nh = find_n_h(kernel.as_ref(), c.n_max)?;
    let n_h = nh.n_h.ok_or_else(|| Error::Domain(format!("no n_H found up to horizon {}", c.n_max)))?;
    let schedule = aa1_schedule(c.hurst, p, grid(c, "dyadic:64:16384"))?;
    let report = aa1_verify(kernel, &schedule, n_h, c.s0)?;
    io::write_aa1(&report, create(&c.out, "aa1.csv")?)?;
    let expected = Dyadic::pow2_neg(n_h as u32 - 1);
    let within = |got: Option<f64>, want: f64| got.is_some_and(|g| (g - want).abs() <= 0.2 * want.abs());
    let checks = json!({
        "profit_probability_exact": report.rows.iter().all(|r| r.profit_probability == expected),
        "admissible": report.rows.iter().all(|r| r.admissible),
        "bound_attained": report.rows.iter().all(|r| r.bound_attained),
        "c_N_decreasing": report.rows.windows(2).all(|w| w[1].c_n < w[0].c_n),
        "C_N_increasing": report.rows.windows(2).all(|w| w[1].big_c_n > w[0].big_c_n),
        "c_N_slope_within_20pct": within(report.c_n_slope, report.expected_c_n_slope()),
        "C_N_slope_within_20pct": within(report.big_c_n_slope, report.expected_big_c_n_slope()),
    });
    let violation = checks.as_object().expect("object").values().any(|v| v == false);
    Ok(Outcome {
        violation,
        results: json!({
            "n_H": n_h,
            "n_H_horizon": nh.horizon,
            "expected_profit_probability": expected,
            "c_N_slope": report.c_n_slope,
            "C_N_slope": report.big_c_n_slope,
            "expected_c_N_slope": report.expected_c_n_slope(),
            "expected_C_N_slope": report.expected_big_c_n_slope(),
            "checks": checks,
            "rows": report.rows,
        }),
    })
}

fn verify(c: &Common, kind: StrategyKind, n0: Option<usize>, horizon: Horizon) -> Result<Outcome> {
    let lambda = c.lambda.ok_or_else(|| Error::InvalidParameter("verify needs --lambda".into()))?;
    let kernel = direct(c)?;
    let n = c.n.unwrap_or(64);
    let m = MarketModel::new(kernel.clone(), n, c.s0)?;
    let (strategy, closed_form) = match kind {
        StrategyKind::AllDown => {
            let n0 = match n0 {
                Some(v) => v,
                None => find_n_h(kernel.as_ref(), n)?
                    .n_h
                    .ok_or_else(|| Error::Domain(format!("no n_H up to N = {n}; pass --n0")))?,
            };
            (sottinen_strategy(&m, lambda, n0)?, json!({ "n0": n0, "lambda_phi": lambda_phi(&m, n0)? }))
        }
        StrategyKind::Gamma => {
            let t = lambda_psi(&m, c.gamma, horizon)?;
            (
                gamma_strategy(&m, lambda, c.gamma, horizon)?,
                json!({ "k0": t.k0, "horizon": t.horizon, "lambda_psi": t.lambda, "condition_holds": t.condition_holds }),
            )
        }
    };
    let cert = verify_arbitrage_exhaustive(&m, &strategy, lambda)?;
    io::write_strategy(&strategy, create(&c.out, "strategy.csv")?)?;
    let prices = m.price_along_path(cert.witness_path.signs())?;
    io::write_prices(&prices, create(&c.out, "witness_prices.csv")?)?;
    let values = evaluate_value_process(&m, &strategy, cert.witness_path.signs(), lambda)?;
    io::write_values(&values, create(&c.out, "witness_values.csv")?)?;
    Ok(Outcome {
        violation: !cert.is_arbitrage,
        results: json!({
            "strategy": kind.to_string(),
            "N": n,
            "closed_form": closed_form,
            "certificate": cert,
        }),
    })
}

fn variance(c: &Common) -> Result<Outcome> {
    let p = params(c)?;
    let points =
        grid(c, "dyadic:512:8192").iter().map(|&n| variance_scaling(&p, n, c.quad_tol)).collect::<Result<Vec<_>>>()?;
    io::write_variance(&points, create(&c.out, "variance.csv")?)?;
    let non_increasing = points.windows(2).filter(|w| w[1].deviation <= w[0].deviation).count();
    Ok(Outcome {
        violation: false,
        results: json!({
            "points": points,
            "non_increasing_steps": non_increasing,
            "steps": points.len().saturating_sub(1),
        }),
    })
}
