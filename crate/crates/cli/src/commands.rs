//! The five subcommands. Each takes a validated config, prints a human
//! summary to stdout, and optionally writes JSON/CSV artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result, bail};
use serde::{Deserialize, Serialize};
use serde_json::{Value, json};

use wishart_gff::Error;
use wishart_gff::analytic::{
    QuadratureConfig, covariance_modes, covariance_quadrature, narayana_even, narayana_odd,
    omega_forward, omega_inverse, t1_limit, t2_limit,
};
use wishart_gff::oracle::{MomentTable, exact_trace_covariance, exact_trace_moment};
use wishart_gff::rng_ensemble::{ArrayHandle, SubmatrixSpec};
use wishart_gff::spectra::{CovarianceReport, StatisticDef, estimate_moments};

use crate::config::{ExperimentConfig, FamilyShape};
use crate::predict::statistic_pair_covariance;

const SCHEMA_VERSION: &str = "1";

fn output_dir(cfg: &ExperimentConfig) -> Option<PathBuf> {
    cfg.output.as_ref().map(|o| PathBuf::from(&o.dir))
}

fn write_artifact(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output dir {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// `report.json` -> `report_L200.json` when the schedule has several scales.
fn scaled_name(base: &str, scale: usize, many: bool) -> String {
    if !many {
        return base.to_string();
    }
    match base.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}_L{scale}.{ext}"),
        None => format!("{base}_L{scale}"),
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("output serialization cannot fail");
    out.push('\n');
    out
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateOutput<'a> {
    schema_version: &'a str,
    config: &'a ExperimentConfig,
    report: &'a CovarianceReport,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<u8> {
    let stats = cfg.statistic_defs()?;
    let handle = ArrayHandle::new(cfg.run.seed, cfg.run.distribution);
    let scales = cfg.run.scale.scales();
    let many = scales.len() > 1;
    for &scale in &scales {
        let family = cfg.family_at(scale)?;
        let report = estimate_moments(
            &handle,
            &family,
            &stats,
            cfg.run.replicates,
            cfg.run.batches,
        )?;
        print_report(&report);
        if let Some(dir) = output_dir(cfg) {
            let out = cfg.output.as_ref().expect("dir implies section");
            let json_name = out.json.as_deref().unwrap_or("report.json");
            let csv_name = out.csv.as_deref().unwrap_or("report.csv");
            let wrapper = SimulateOutput {
                schema_version: SCHEMA_VERSION,
                config: cfg,
                report: &report,
            };
            write_artifact(
                &dir,
                &scaled_name(json_name, scale, many),
                &to_pretty_json(&wrapper),
            )?;
            write_artifact(
                &dir,
                &scaled_name(csv_name, scale, many),
                &report.covariance_csv(),
            )?;
        }
    }
    Ok(0)
}

fn print_report(report: &CovarianceReport) {
    println!(
        "simulate: seed {}, {}, L = {}, {} replicates in {} batches",
        report.seed,
        report.distribution,
        report.scale,
        report.moments.replicates,
        report.moments.batches
    );
    let m = &report.moments;
    for (i, label) in report.labels.iter().enumerate() {
        println!(
            "  {label:<12} mean {: >14.6e} (se {:.2e})  k3 {: >10.3e}  k4 {: >10.3e}",
            m.mean[i], m.se_mean[i], m.k3[i], m.k4[i]
        );
    }
    for i in 0..report.labels.len() {
        for j in i..report.labels.len() {
            println!(
                "  cov({}, {}) = {: >14.6e} (se {:.2e})",
                report.labels[i], report.labels[j], m.cov[i][j], m.se_cov[i][j]
            );
        }
    }
}

// ------------------------------------------------------------------ verify

#[derive(Serialize, Deserialize, Clone)]
pub struct VerificationRow {
    pub scale: usize,
    pub statistic_i: String,
    pub statistic_j: String,
    pub mc_cov: f64,
    pub mc_se: f64,
    pub analytic_cov: f64,
    pub oracle_cov: Option<f64>,
    pub z: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    schema_version: &'a str,
    seed: u64,
    threshold: f64,
    config: &'a ExperimentConfig,
    rows: &'a [VerificationRow],
}

fn z_score(mc: f64, se: f64, target: f64) -> f64 {
    if se > 0.0 {
        (mc - target) / se
    } else if (mc - target).abs() <= 1e-12 * (1.0 + target.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Exact covariance of two configured statistics by bilinear expansion over
/// parts and monomial degrees; None when the enumeration refuses the size.
fn exact_statistic_covariance(
    si: &StatisticDef,
    sj: &StatisticDef,
    windows: &[(f64, SubmatrixSpec)],
    scale: usize,
    table: &MomentTable,
) -> Result<Option<f64>> {
    let window = |level: f64| -> Result<&SubmatrixSpec> {
        windows
            .iter()
            .find(|(l, _)| *l == level)
            .map(|(_, w)| w)
            .ok_or_else(|| anyhow::anyhow!("no window at level {level}"))
    };
    let mut acc = 0.0;
    for &(la, wa) in &si.parts {
        for &(lb, wb) in &sj.parts {
            let win_a = window(la)?;
            let win_b = window(lb)?;
            for (d, &cd) in si.poly.iter().enumerate().skip(1) {
                if cd == 0.0 {
                    continue;
                }
                for (e, &ce) in sj.poly.iter().enumerate().skip(1) {
                    if ce == 0.0 {
                        continue;
                    }
                    match exact_trace_covariance(d, e, win_a, win_b, scale, table) {
                        Ok(v) => acc += wa * wb * cd * ce * v,
                        Err(Error::EnumerationBudget { .. }) => return Ok(None),
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
    }
    Ok(Some(acc))
}

pub fn verify(cfg: &ExperimentConfig, nudge: f64) -> Result<u8> {
    let stats = cfg.statistic_defs()?;
    let shape = cfg.shape()?;
    let weights = cfg.weights();
    let threshold = cfg.verify.as_ref().map(|v| v.threshold()).unwrap_or(4.0);
    let use_oracle = cfg
        .verify
        .as_ref()
        .and_then(|v| v.use_oracle)
        .unwrap_or(false);
    let handle = ArrayHandle::new(cfg.run.seed, cfg.run.distribution);
    let scales = cfg.run.scale.scales();
    let many = scales.len() > 1;
    let table = MomentTable::new(cfg.run.distribution, 32);

    let mut rows: Vec<VerificationRow> = Vec::new();
    for &scale in &scales {
        let family = cfg.family_at(scale)?;
        let report = estimate_moments(
            &handle,
            &family,
            &stats,
            cfg.run.replicates,
            cfg.run.batches,
        )?;
        let windows = family.resolve()?;
        for i in 0..stats.len() {
            for j in i..stats.len() {
                let mc_cov = report.moments.cov[i][j];
                let mc_se = report.moments.se_cov[i][j];
                let analytic_cov =
                    statistic_pair_covariance(&shape, &weights, &stats[i], &stats[j])? + nudge;
                let oracle_cov = if use_oracle {
                    exact_statistic_covariance(&stats[i], &stats[j], &windows, scale, &table)?
                } else {
                    None
                };
                let z = z_score(mc_cov, mc_se, analytic_cov);
                let suffix = |label: &str| {
                    if many {
                        format!("{label}@L{scale}")
                    } else {
                        label.to_string()
                    }
                };
                rows.push(VerificationRow {
                    scale,
                    statistic_i: suffix(&stats[i].label),
                    statistic_j: suffix(&stats[j].label),
                    mc_cov,
                    mc_se,
                    analytic_cov,
                    oracle_cov,
                    z,
                    pass: z.abs() <= threshold,
                });
            }
        }
    }

    print_verify_table(&rows, threshold);
    if let Some(dir) = output_dir(cfg) {
        let out = VerifyOutput {
            schema_version: SCHEMA_VERSION,
            seed: cfg.run.seed,
            threshold,
            config: cfg,
            rows: &rows,
        };
        write_artifact(&dir, "verify.json", &to_pretty_json(&out))?;
        write_artifact(&dir, "verify.csv", &verify_csv(&rows))?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        println!(
            "verify: {failed} of {} rows failed (|z| > {threshold})",
            rows.len()
        );
        Ok(1)
    } else {
        println!("verify: all {} rows pass (|z| <= {threshold})", rows.len());
        Ok(0)
    }
}

fn format_z(z: f64) -> String {
    if z.is_finite() {
        format!("{z:.6}")
    } else {
        "inf".to_string()
    }
}

pub fn verify_csv(rows: &[VerificationRow]) -> String {
    let mut out =
        String::from("statistic_i,statistic_j,mc_cov,mc_se,analytic_cov,oracle_cov,z,pass\n");
    for r in rows {
        let oracle = r
            .oracle_cov
            .map(|v| format!("{v:.12e}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{:.12e},{:.12e},{:.12e},{},{},{}\n",
            r.statistic_i,
            r.statistic_j,
            r.mc_cov,
            r.mc_se,
            r.analytic_cov,
            oracle,
            format_z(r.z),
            r.pass
        ));
    }
    out
}

fn print_verify_table(rows: &[VerificationRow], threshold: f64) {
    if threshold.is_finite() {
        println!("pass iff |z| <= {threshold}");
    }
    println!(
        "{:<20} {:<20} {:>14} {:>10} {:>14} {:>14} {:>9}  pass",
        "statistic_i", "statistic_j", "mc_cov", "mc_se", "analytic", "oracle", "z"
    );
    for r in rows {
        let oracle = r
            .oracle_cov
            .map(|v| format!("{v:>14.6e}"))
            .unwrap_or_else(|| format!("{:>14}", "-"));
        println!(
            "{:<20} {:<20} {:>14.6e} {:>10.2e} {:>14.6e} {} {:>9.3}  {}",
            r.statistic_i,
            r.statistic_j,
            r.mc_cov,
            r.mc_se,
            r.analytic_cov,
            oracle,
            r.z,
            if r.pass { "yes" } else { "NO" }
        );
    }
}

// ---------------------------------------------------------------- analytic

#[derive(Serialize)]
struct AnalyticRecord {
    formula: String,
    inputs: Value,
    value: f64,
    method: String,
}

#[derive(Serialize)]
struct AnalyticOutput<'a> {
    schema_version: &'a str,
    config: &'a ExperimentConfig,
    records: &'a [AnalyticRecord],
}

/// Geometry of the cross-level pair a config describes: the configured pair,
/// or the outermost two corners of a nested family.
fn cross_geometry(shape: &FamilyShape) -> Result<wishart_gff::analytic::OverlapGeometry> {
    Ok(match shape {
        FamilyShape::Pair(geom) => *geom,
        FamilyShape::Corners { mu, nu, levels } => {
            let first = *levels.first().expect("validated nonempty");
            let last = *levels.last().expect("validated nonempty");
            wishart_gff::analytic::OverlapGeometry::nested_corners(first, last, *mu, *nu)?
        }
    })
}

pub fn analytic(cfg: &ExperimentConfig) -> Result<u8> {
    let shape = cfg.shape()?;
    let weights = cfg.weights();
    let geom = cross_geometry(&shape)?;
    let section = cfg.analytic.clone().unwrap_or_default();
    let degrees = section.degrees.unwrap_or_else(|| vec![1, 2, 3]);
    if degrees.is_empty() || degrees.contains(&0) {
        bail!("analytic degrees must be positive");
    }
    let mut records: Vec<AnalyticRecord> = Vec::new();

    let geom_inputs = json!({
        "mu1": geom.mu1, "nu1": geom.nu1,
        "mu2": geom.mu2, "nu2": geom.nu2,
        "mu12": geom.mu12, "nu12": geom.nu12,
        "distribution": cfg.run.distribution.name(),
    });
    let quad = QuadratureConfig::default();
    for &k in &degrees {
        for &l in &degrees {
            if l < k {
                continue;
            }
            let mut inputs = geom_inputs.clone();
            inputs["k"] = json!(k);
            inputs["l"] = json!(l);
            let modes = covariance_modes(k, l, &geom, &weights)?;
            records.push(AnalyticRecord {
                formula: "trace_power_covariance".into(),
                inputs: inputs.clone(),
                value: modes,
                method: "mode_sum".into(),
            });
            let split =
                t1_limit(k, l, &geom, weights.weight(1) + 1.0)? + t2_limit(k, l, &geom, &weights)?;
            records.push(AnalyticRecord {
                formula: "trace_power_covariance".into(),
                inputs: inputs.clone(),
                value: split,
                method: "tree_cycle_split".into(),
            });
            let contour = covariance_quadrature(k, l, &geom, &weights, &quad)?;
            records.push(AnalyticRecord {
                formula: "trace_power_covariance".into(),
                inputs,
                value: contour,
                method: "contour_quadrature".into(),
            });
        }
    }

    let max_k = section.narayana_max_k.unwrap_or(8);
    let gamma = geom.gamma1();
    for k in 1..=max_k {
        records.push(AnalyticRecord {
            formula: "tree_polynomial_odd".into(),
            inputs: json!({"k": k, "gamma": gamma}),
            value: narayana_odd(k, gamma)?,
            method: "closed_form".into(),
        });
        records.push(AnalyticRecord {
            formula: "tree_polynomial_even".into(),
            inputs: json!({"k": k, "gamma": gamma}),
            value: narayana_even(k, gamma)?,
            method: "closed_form".into(),
        });
    }

    if section.omega_roundtrip.unwrap_or(true) {
        let (mu, nu) = (geom.mu1, geom.nu1);
        let mut max_err = 0.0f64;
        for ir in 1..=15 {
            let r = 0.1 + 1.9 * (ir - 1) as f64 / 14.0;
            for ip in 1..=16 {
                let phi = std::f64::consts::PI * ip as f64 / 17.0;
                let z = num_complex::Complex64::from_polar(r, phi);
                let (x, y) = omega_inverse(z, mu, nu)?;
                if y <= 0.0 {
                    continue;
                }
                let back = omega_forward(x, y, mu, nu)?;
                max_err = max_err.max((back - z).norm());
            }
        }
        records.push(AnalyticRecord {
            formula: "chart_round_trip_max_error".into(),
            inputs: json!({"mu": mu, "nu": nu}),
            value: max_err,
            method: "grid_scan".into(),
        });
    }

    for r in &records {
        println!(
            "{:<28} {} = {:.12e} [{}]",
            r.formula, r.inputs, r.value, r.method
        );
    }
    if let Some(dir) = output_dir(cfg) {
        let out = AnalyticOutput {
            schema_version: SCHEMA_VERSION,
            config: cfg,
            records: &records,
        };
        write_artifact(&dir, "analytic.json", &to_pretty_json(&out))?;
    }
    Ok(0)
}

// ------------------------------------------------------------------ oracle

#[derive(Serialize)]
struct OracleRecord {
    formula: String,
    inputs: Value,
    value: f64,
}

#[derive(Serialize)]
struct OracleOutput<'a> {
    schema_version: &'a str,
    config: &'a ExperimentConfig,
    records: &'a [OracleRecord],
}

pub fn oracle(cfg: &ExperimentConfig) -> Result<u8> {
    let Some(section) = &cfg.oracle else {
        bail!("config has no [oracle] section");
    };
    if section.powers.is_empty() || section.powers.contains(&0) {
        bail!("oracle powers must be positive");
    }
    let max_power = *section.powers.iter().max().expect("nonempty");
    let table = MomentTable::new(cfg.run.distribution, 4 * max_power + 4);
    let mut records: Vec<OracleRecord> = Vec::new();

    for &scale in &cfg.run.scale.scales() {
        let windows = cfg.family_at(scale)?.resolve()?;
        for (level, window) in &windows {
            for &k in &section.powers {
                let value = exact_trace_moment(k, window, scale, &table).with_context(|| {
                    format!("exact moment k = {k} at level {level}, scale {scale}")
                })?;
                records.push(OracleRecord {
                    formula: "exact_trace_moment".into(),
                    inputs: json!({
                        "scale": scale, "level": level, "k": k,
                        "rows": window.rows, "cols": window.cols,
                    }),
                    value,
                });
            }
        }
        for (a, (level_a, win_a)) in windows.iter().enumerate() {
            for (level_b, win_b) in windows.iter().skip(a) {
                for &k in &section.powers {
                    for &l in &section.powers {
                        if win_a == win_b && l < k {
                            continue;
                        }
                        let value = exact_trace_covariance(k, l, win_a, win_b, scale, &table)
                            .with_context(|| {
                                format!(
                                    "exact covariance (k, l) = ({k}, {l}) between levels \
                                     {level_a} and {level_b}, scale {scale}"
                                )
                            })?;
                        records.push(OracleRecord {
                            formula: "exact_trace_covariance".into(),
                            inputs: json!({
                                "scale": scale,
                                "level_i": level_a, "level_j": level_b,
                                "k": k, "l": l,
                            }),
                            value,
                        });
                    }
                }
            }
        }
    }

    for r in &records {
        println!("{:<24} {} = {:.12e}", r.formula, r.inputs, r.value);
    }
    if let Some(dir) = output_dir(cfg) {
        let out = OracleOutput {
            schema_version: SCHEMA_VERSION,
            config: cfg,
            records: &records,
        };
        write_artifact(&dir, "oracle.json", &to_pretty_json(&out))?;
    }
    Ok(0)
}

// ------------------------------------------------------------------ report

pub fn report(path: &Path) -> Result<u8> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read report {}", path.display()))?;
    let value: Value = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse JSON in {}", path.display()))?;

    if let Some(rows) = value.get("rows").and_then(|r| r.as_array()) {
        let parsed: Vec<VerificationRow> =
            serde_json::from_value(Value::Array(rows.clone())).context("malformed verify rows")?;
        let threshold = value
            .get("threshold")
            .and_then(|t| t.as_f64())
            .unwrap_or(f64::NAN);
        print_verify_table(&parsed, threshold);
        let failed = parsed.iter().filter(|r| !r.pass).count();
        println!(
            "verify report: {} rows, {} failed, threshold {}",
            parsed.len(),
            failed,
            threshold
        );
        return Ok(if failed > 0 { 1 } else { 0 });
    }

    if let Some(report) = value.get("report") {
        let parsed: CovarianceReport =
            serde_json::from_value(report.clone()).context("malformed moment report")?;
        print_report(&parsed);
        return Ok(0);
    }

    if let Some(records) = value.get("records").and_then(|r| r.as_array()) {
        for r in records {
            let formula = r.get("formula").and_then(|f| f.as_str()).unwrap_or("?");
            let inputs = r.get("inputs").cloned().unwrap_or(Value::Null);
            let val = r.get("value").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            match r.get("method").and_then(|m| m.as_str()) {
                Some(method) => println!("{formula:<28} {inputs} = {val:.12e} [{method}]"),
                None => println!("{formula:<24} {inputs} = {val:.12e}"),
            }
        }
        return Ok(0);
    }

    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(0)
}
