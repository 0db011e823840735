//! Turns a records file into the analysis outputs: per-dataset sensitivity
//! fits, ground-truth-loss ratios, relative performance against chance and
//! majority baselines, pooled fits, and a cross-dataset correlation between
//! sensitivity and the loss ratio. Fits run over mean curves (accuracy
//! averaged across seeds per alpha level); seed spread lives in the
//! summary table.
//!
//! Everything here is a pure function of the records, so a report is
//! reproducible from `records.jsonl` alone. Missing inputs (no zero-shot
//! runs, a single alpha level) degrade to gap notes, not errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{
    compute_gler, fit_sensitivity, pearson, relative_performance, slope_standard_error,
    CorrelationResult, FitResult, GlerResult,
};
use crate::prompting::TemplateTier;
use crate::runner::{aggregate, write_summary_csv, Condition, RunRecord};
use crate::scoring::Method;
use crate::stats::mean;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub groups: Vec<GroupReport>,
}

/// One (method, template tier, calibration, k) slice of the records.
#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub method: Method,
    pub template_tier: TemplateTier,
    pub calibrate: bool,
    pub k: usize,
    pub datasets: Vec<DatasetReport>,
    /// Fits over all datasets' points pooled, one per alpha-bearing family.
    pub pooled: Vec<FamilyFit>,
    /// Pearson between per-dataset sensitivity slopes and loss ratios.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity_gler_correlation: Option<CorrelationResult>,
    pub gaps: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetReport {
    pub dataset: String,
    pub n_classes: usize,
    /// One sensitivity fit per alpha-bearing condition family present.
    pub fits: Vec<FamilyFit>,
    /// Mean accuracy with all-gold demos (alpha = 100).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_gt: Option<f64>,
    /// Mean accuracy under i.i.d. random labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_rl: Option<f64>,
    /// Mean zero-shot accuracy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_zero: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gler: Option<GlerResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative: Option<RelativePerformance>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyFit {
    pub condition: String,
    pub fit: FitResult,
    /// Standard error of the slope; absent with under 3 points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_se: Option<f64>,
}

/// Gold-demo accuracy minus each baseline.
#[derive(Debug, Clone, Serialize)]
pub struct RelativePerformance {
    pub vs_uniform: f64,
    pub vs_majority: f64,
}

type GroupKey = (Method, TemplateTier, bool, usize);

fn fit_family(
    condition: &str,
    points: &[(f64, f64)],
    dataset: Option<&str>,
    gaps: &mut Vec<String>,
) -> Option<FamilyFit> {
    match fit_sensitivity(points) {
        Ok(fit) => {
            let slope_se = slope_standard_error(points, &fit);
            Some(FamilyFit {
                condition: condition.to_string(),
                fit,
                slope_se,
            })
        }
        Err(Error::DegenerateDesign) => {
            let scope = dataset.map_or("pooled".to_string(), |d| format!("dataset {d}"));
            gaps.push(format!(
                "{scope}: condition {condition} has fewer than 2 distinct alpha levels; \
                 sensitivity fit skipped"
            ));
            None
        }
        Err(_) => unreachable!("sensitivity fit only fails on degenerate designs"),
    }
}

/// Builds the report structure from records without touching the
/// filesystem.
pub fn build_report(records: &[RunRecord]) -> Report {
    let mut by_group: BTreeMap<GroupKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_group
            .entry((r.method, r.template_tier, r.calibrate, r.k))
            .or_default()
            .push(r);
    }

    let mut groups = Vec::new();
    for ((method, tier, calibrate, k), rows) in by_group {
        let mut gaps = Vec::new();
        let mut by_dataset: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
        for r in &rows {
            by_dataset.entry(r.dataset.as_str()).or_default().push(r);
        }

        let mut datasets = Vec::new();
        let mut pooled_points: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        let mut correlation_pairs: Vec<(f64, f64)> = Vec::new();
        for (name, rows) in by_dataset {
            let n_classes = rows[0].n_classes;
            // Sensitivity is fit against the mean curve: accuracies are
            // averaged over seeds per alpha level first, one point per
            // level. Per-seed scatter is corruption-draw noise, which the
            // summary table reports as spread instead.
            let mut family_accs: BTreeMap<(String, u8), Vec<f64>> = BTreeMap::new();
            for r in &rows {
                if let (true, Some(alpha)) = (r.condition.uses_alpha_grid(), r.alpha) {
                    family_accs
                        .entry((r.condition.label(), alpha))
                        .or_default()
                        .push(r.accuracy);
                }
            }
            let mut family_points: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for ((label, alpha), accs) in family_accs {
                let point = (f64::from(alpha) / 100.0, mean(&accs));
                family_points.entry(label.clone()).or_default().push(point);
                pooled_points.entry(label).or_default().push(point);
            }
            let mut fits = Vec::new();
            for (condition, points) in &family_points {
                if let Some(f) = fit_family(condition, points, Some(name), &mut gaps) {
                    fits.push(f);
                }
            }

            let mean_of = |want: Condition, alpha: Option<u8>| -> Option<f64> {
                let ys: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.condition == want && r.alpha == alpha)
                    .map(|r| r.accuracy)
                    .collect();
                (!ys.is_empty()).then(|| mean(&ys))
            };
            let y_gt = mean_of(Condition::AlphaCorrect, Some(100));
            let y_rl = mean_of(Condition::RandomLabel, None);
            let y_zero = mean_of(Condition::NoDemo, None);

            let gler = match (y_gt, y_rl, y_zero) {
                (Some(gt), Some(rl), Some(zero)) => Some(compute_gler(gt, rl, zero)),
                _ => {
                    let mut missing = Vec::new();
                    if y_gt.is_none() {
                        missing.push("alpha_correct at alpha=100");
                    }
                    if y_rl.is_none() {
                        missing.push("random_label");
                    }
                    if y_zero.is_none() {
                        missing.push("no_demo");
                    }
                    gaps.push(format!(
                        "dataset {name}: missing {} runs; loss ratio skipped",
                        missing.join(", ")
                    ));
                    None
                }
            };

            let relative = y_gt.map(|gt| {
                let majority: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.condition == Condition::AlphaCorrect && r.alpha == Some(100))
                    .map(|r| r.majority_class_rate)
                    .collect();
                RelativePerformance {
                    vs_uniform: relative_performance(gt, 1.0 / n_classes as f64),
                    vs_majority: relative_performance(gt, mean(&majority)),
                }
            });

            let sensitivity = fits
                .iter()
                .find(|f| f.condition == "alpha_correct")
                .map(|f| f.fit.beta1);
            if let (Some(slope), Some(GlerResult { value: Some(v), .. })) = (sensitivity, &gler) {
                correlation_pairs.push((slope, *v));
            }

            datasets.push(DatasetReport {
                dataset: name.to_string(),
                n_classes,
                fits,
                y_gt,
                y_rl,
                y_zero,
                gler,
                relative,
            });
        }

        let mut pooled = Vec::new();
        for (condition, points) in &pooled_points {
            if let Some(f) = fit_family(condition, points, None, &mut gaps) {
                pooled.push(f);
            }
        }

        let sensitivity_gler_correlation = if correlation_pairs.len() < 3 {
            gaps.push(format!(
                "sensitivity/loss-ratio correlation skipped: only {} dataset(s) with both",
                correlation_pairs.len()
            ));
            None
        } else {
            let (xs, ys): (Vec<f64>, Vec<f64>) = correlation_pairs.into_iter().unzip();
            match pearson(&xs, &ys) {
                Ok(c) => Some(c),
                Err(e) => {
                    gaps.push(format!("sensitivity/loss-ratio correlation skipped: {e}"));
                    None
                }
            }
        };

        groups.push(GroupReport {
            method,
            template_tier: tier,
            calibrate,
            k,
            datasets,
            pooled,
            sensitivity_gler_correlation,
            gaps,
        });
    }
    Report { groups }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn scatter_csv(report: &Report) -> String {
    let mut out = String::from(
        "method,template_tier,calibrate,k,dataset,sensitivity,gler,y_gt,y_zero,y_rl\n",
    );
    for g in &report.groups {
        for d in &g.datasets {
            let sensitivity = d
                .fits
                .iter()
                .find(|f| f.condition == "alpha_correct")
                .map(|f| f.fit.beta1);
            let gler = d.gler.as_ref().and_then(|g| g.value);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                g.method,
                g.template_tier,
                g.calibrate,
                g.k,
                super::csv_field(&d.dataset),
                opt(sensitivity),
                opt(gler),
                opt(d.y_gt),
                opt(d.y_zero),
                opt(d.y_rl),
            ));
        }
    }
    out
}

/// Writes `report.json`, `summary.csv`, and `scatter.csv` into `out_dir`
/// and returns the report structure.
pub fn emit_report(records: &[RunRecord], out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let report = build_report(records);

    let json_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Protocol(format!("report encode: {e}")))?;
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;

    write_summary_csv(&out_dir.join("summary.csv"), &aggregate(records))?;

    let scatter_path = out_dir.join("scatter.csv");
    fs::write(&scatter_path, scatter_csv(&report)).map_err(|e| Error::io(&scatter_path, e))?;

    Ok(report)
}
