//! End-to-end harness use as a library: generate a synthetic dataset, run
//! a sweep over corruption conditions and seeds against the in-process
//! backend, then report sensitivity and the ground-truth-loss ratio.
//!
//!     cargo run -p demosense --example synthetic_sweep

use demosense::runner::report::emit_report;
use demosense::runner::synthetic::{write_dataset, SyntheticSpec};
use demosense::runner::{
    aggregate, load_records, BackendChoice, Condition, ExperimentConfig, Runner,
};
use demosense::prompting::TemplateTier;
use demosense::scoring::Method;

fn main() -> demosense::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let dataset_config = write_dataset(&SyntheticSpec::default(), &dir.path().join("data"))?;

    let config = ExperimentConfig {
        datasets: vec![dataset_config],
        backend: BackendChoice::Mock,
        methods: vec![Method::Direct],
        conditions: vec![
            Condition::AlphaCorrect,
            Condition::RandomLabel,
            Condition::ShuffledLabel,
            Condition::NoDemo,
        ],
        alpha_grid: vec![0, 25, 50, 75, 100],
        seeds: (0..8).collect(),
        k: 16,
        template_tier: TemplateTier::Minimal,
        calibrate: false,
        eval_cap: None,
        concurrency: 4,
        out_dir: dir.path().join("runs"),
        token_pool: None,
    };
    let out_dir = config.out_dir.clone();
    let runner = Runner::new(config)?;

    let outcome = runner.sweep(&out_dir)?;
    println!(
        "sweep finished: {} records ({} failures)",
        outcome.new_records.len(),
        outcome.failures.len()
    );

    // Rerunning the same sweep is a no-op: every coordinate is already on
    // disk, keyed by its run id.
    let resumed = runner.sweep(&out_dir)?;
    assert_eq!(resumed.new_records.len(), 0);
    println!("resume skipped all {} persisted coordinates", resumed.skipped);

    let records = load_records(&outcome.records_path)?;
    println!("\nmean accuracy by condition:");
    for row in aggregate(&records) {
        let alpha = row.alpha.map_or("  -".to_string(), |a| format!("{a:3}"));
        println!(
            "  {:<16} alpha={alpha}  {:.4} +/- {:.4}",
            row.condition.label(),
            row.accuracy_mean,
            row.accuracy_std
        );
    }

    let report = emit_report(&records, &out_dir)?;
    let ds = &report.groups[0].datasets[0];
    let fit = &ds.fits[0];
    println!("\nsensitivity: accuracy = {:.4} + {:.4} * gold_fraction  (R^2 {:.3})",
        fit.fit.beta0, fit.fit.beta1, fit.fit.r_squared);
    if let Some(gler) = &ds.gler {
        println!(
            "loss ratio: raw {:.4}, clipped {:?}, degenerate: {}",
            gler.raw, gler.value, gler.degenerate
        );
    }
    println!("report written to {}", out_dir.join("report.json").display());
    Ok(())
}
