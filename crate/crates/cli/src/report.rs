//! Report rendering.
//!
//! Machine-readable files carry SI values printed in the shortest form that
//! parses back to the identical `f64`; text tables use report units.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use robcal_core::estimator::{EstimationResult, Method};
use robcal_core::kinematics::{DhField, ParamId};
use robcal_core::regressor::StackedSystem;
use robcal_core::simulator::{CompareReport, MethodStats, REPORT_UNITS_PER_COMPLIANCE};
use robcal_core::{Error, Result};

use crate::output::{write_all, OutputFile};

/// Report scale and unit label for a parameter, and its SI unit.
fn units(name: &str) -> (f64, &'static str, &'static str) {
    match name.parse::<ParamId>() {
        Ok(ParamId::Joint {
            field: DhField::Alpha | DhField::Theta,
            ..
        })
        | Ok(ParamId::BaseRotation(_)) => (1e3, "mrad", "rad"),
        Ok(_) => (1e3, "mm", "m"),
        Err(_) => (REPORT_UNITS_PER_COMPLIANCE, "1e-6 rad/(N m)", "rad/(N m)"),
    }
}

fn column(m: Method) -> &'static str {
    match m {
        Method::Ols => "ols",
        Method::Wls => "wls",
        Method::Irls => "irls",
    }
}

/// Pads every column of `rows` to a common width.
fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// CI_OLS / CI_other for every non-OLS result, when an OLS result is present.
fn ratio_pairs<'a>(results: &[&'a EstimationResult]) -> Vec<(&'a EstimationResult, &'a EstimationResult)> {
    let Some(ols) = results.iter().find(|r| r.method == Method::Ols) else {
        return Vec::new();
    };
    results
        .iter()
        .filter(|r| r.method != Method::Ols)
        .map(|r| (*ols, *r))
        .collect()
}

/// Parameter table (estimate ± 3σ per method) as `params.txt` and
/// `params.csv`. When an OLS result is given together with a weighted one,
/// both files gain a CI-ratio section.
pub fn render_report(results: &[&EstimationResult]) -> Result<Vec<OutputFile>> {
    let first = results
        .first()
        .ok_or_else(|| Error::InvalidArgument("no results to report".into()))?;
    let names = &first.param_names;
    if results.iter().any(|r| &r.param_names != names) {
        return Err(Error::Dimension("results cover different parameters".into()));
    }
    let ratios = ratio_pairs(results);

    let mut header = vec!["parameter".to_string(), "unit".to_string()];
    header.extend(results.iter().map(|r| r.method.label().to_string()));
    let mut rows = vec![header];
    let mut csv = String::from("parameter,unit");
    for r in results {
        let m = column(r.method);
        write!(csv, ",{m}_value,{m}_ci3").unwrap();
    }
    for (_, r) in &ratios {
        write!(csv, ",ci_ratio_{}", column(r.method)).unwrap();
    }
    csv.push('\n');

    for (i, name) in names.iter().enumerate() {
        let (scale, label, si) = units(name);
        let mut row = vec![name.clone(), label.to_string()];
        write!(csv, "{name},{si}").unwrap();
        for r in results {
            row.push(format!("{:.4} ± {:.4}", r.x_hat[i] * scale, r.ci3[i] * scale));
            write!(csv, ",{:e},{:e}", r.x_hat[i], r.ci3[i]).unwrap();
        }
        for (ols, r) in &ratios {
            write!(csv, ",{:e}", ols.ci3[i] / r.ci3[i]).unwrap();
        }
        csv.push('\n');
        rows.push(row);
    }

    let mut txt = String::from("Identified parameters (estimate ± 3σ)\n\n");
    txt.push_str(&table(&rows));
    if !ratios.is_empty() {
        txt.push_str("\nConfidence-interval ratio CI_OLS / CI_method\n\n");
        let mut header = vec!["parameter".to_string()];
        header.extend(ratios.iter().map(|(_, r)| r.method.label().to_string()));
        let mut rows = vec![header];
        for (i, name) in names.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(ratios.iter().map(|(o, r)| format!("{:.2}", o.ci3[i] / r.ci3[i])));
            rows.push(row);
        }
        txt.push_str(&table(&rows));
    }
    for r in results {
        if r.method == Method::Irls {
            writeln!(
                txt,
                "\nIRLS: {} passes, {}{}",
                r.iterations.len(),
                if r.converged { "converged" } else { "not converged" },
                if r.rank_loss { " (stopped on rank loss)" } else { "" }
            )
            .unwrap();
        }
    }
    Ok(vec![OutputFile::new("params.txt", txt), OutputFile::new("params.csv", csv)])
}

/// Writes the parameter report into `dir`.
pub fn emit_report(results: &[&EstimationResult], dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(write_all(dir, &render_report(results)?)?)
}

/// Per-pass trace of a reweighting run: one row per pass with each
/// parameter's value and ±3σ half-width.
pub fn render_trace(result: &EstimationResult) -> OutputFile {
    let mut csv = String::from("iteration,max_rel_change");
    for n in &result.param_names {
        write!(csv, ",{n},{n}_ci3").unwrap();
    }
    csv.push('\n');
    for (k, it) in result.iterations.iter().enumerate() {
        write!(csv, "{},{:e}", k + 1, it.max_rel_change).unwrap();
        for (x, c) in it.x_hat.iter().zip(it.ci3.iter()) {
            write!(csv, ",{x:e},{c:e}").unwrap();
        }
        csv.push('\n');
    }
    OutputFile::new("trace.csv", csv)
}

/// Per-row residuals of `result` with the dispersions and weights used.
pub fn render_residuals(sys: &StackedSystem, result: &EstimationResult) -> OutputFile {
    let mut csv = String::from("config,marker,repetition,axis,residual_um,sigma_um,weight\n");
    for (i, tag) in sys.row_tags.iter().enumerate() {
        let w = result.weights.as_ref().map_or(1.0, |w| w[i]);
        writeln!(
            csv,
            "{},{},{},{},{:?},{:?},{:?}",
            tag.config,
            tag.marker + 1,
            tag.repetition,
            tag.axis.name(),
            result.residuals[i] * 1e6,
            sys.sigma[i] * 1e6,
            w
        )
        .unwrap();
    }
    OutputFile::new("residuals.csv", csv)
}

/// Monte Carlo summary (`compare.txt`, `compare.csv`) and the trial-averaged
/// IRLS trace (`compare_trace.csv`).
pub fn render_compare(report: &CompareReport) -> Vec<OutputFile> {
    let methods: [(&str, &MethodStats); 4] = [
        ("ols", &report.ols),
        ("wls", &report.wls),
        ("wls_optimal", &report.wls_optimal),
        ("irls", &report.irls),
    ];
    let mut csv = String::from("parameter,truth");
    for (m, _) in &methods {
        write!(csv, ",{m}_mean,{m}_std,{m}_mean_ci3").unwrap();
    }
    csv.push_str(",ci_ratio_wls,ci_ratio_irls,nested_wls,nested_irls\n");
    let mut rows = vec![vec![
        "parameter".to_string(),
        "truth".into(),
        "OLS std".into(),
        "WLS std".into(),
        "IRLS std".into(),
        "CI ratio WLS".into(),
        "CI ratio IRLS".into(),
        "nested WLS".into(),
        "nested IRLS".into(),
    ]];
    for (i, name) in report.param_names.iter().enumerate() {
        let (scale, _, _) = units(name);
        write!(csv, "{name},{:e}", report.truth[i]).unwrap();
        for (_, s) in &methods {
            write!(csv, ",{:e},{:e},{:e}", s.mean[i], s.empirical_std[i], s.mean_ci3[i]).unwrap();
        }
        writeln!(
            csv,
            ",{:e},{:e},{:e},{:e}",
            report.ci_ratio_wls[i],
            report.ci_ratio_irls[i],
            report.nested_fraction_wls[i],
            report.nested_fraction_irls[i]
        )
        .unwrap();
        rows.push(vec![
            name.clone(),
            format!("{:.4}", report.truth[i] * scale),
            format!("{:.4}", report.ols.empirical_std[i] * scale),
            format!("{:.4}", report.wls.empirical_std[i] * scale),
            format!("{:.4}", report.irls.empirical_std[i] * scale),
            format!("{:.2}", report.ci_ratio_wls[i]),
            format!("{:.2}", report.ci_ratio_irls[i]),
            format!("{:.3}", report.nested_fraction_wls[i]),
            format!("{:.3}", report.nested_fraction_irls[i]),
        ]);
    }

    let mut txt = format!(
        "Monte Carlo comparison: {} trials, {} failed\n\n",
        report.trials,
        report.failures.len()
    );
    txt.push_str(&table(&rows));
    txt.push_str("\nEmpirical / analytic covariance trace\n\n");
    let mut trace_rows = vec![vec!["method".to_string(), "ratio".into()]];
    for (m, s) in &methods {
        trace_rows.push(vec![
            m.to_string(),
            format!("{:.3}", s.empirical_cov_trace() / s.mean_analytic_cov_trace),
        ]);
    }
    txt.push_str(&table(&trace_rows));

    let mut trace = String::from("iteration");
    for n in &report.param_names {
        write!(trace, ",{n},{n}_ci3").unwrap();
    }
    trace.push('\n');
    for (k, (x, ci)) in report.irls_mean_trace.iter().enumerate() {
        write!(trace, "{}", k + 1).unwrap();
        for (v, c) in x.iter().zip(ci.iter()) {
            write!(trace, ",{v:e},{c:e}").unwrap();
        }
        trace.push('\n');
    }
    vec![
        OutputFile::new("compare.txt", txt),
        OutputFile::new("compare.csv", csv),
        OutputFile::new("compare_trace.csv", trace),
    ]
}
