//! Runs a small contextual-substitution sweep on a generated imbalanced
//! corpus and prints the median table.
//!
//! cargo run -p claimrank-core --example synthetic_sweep -- [out_dir]

use claimrank_core::corpus::write_dataset;
use claimrank_core::experiment::{render_report, run_experiment, ExperimentConfig, ReportFormat};
use claimrank_core::synthetic::{generate, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/synthetic_sweep".into());
    let out = std::path::PathBuf::from(out);
    std::fs::create_dir_all(&out)?;
    let data = out.join("synthetic.tsv");
    write_dataset(&generate(&SyntheticSpec::default()), &data)?;

    let mut cfg = ExperimentConfig::new(&data, out.join("sweep"));
    cfg.p_values = vec![None, Some(0.1), Some(0.5)];
    let started = std::time::Instant::now();
    let report = run_experiment(&cfg, 4)?;
    print!("{}", render_report(&report, ReportFormat::Markdown));
    eprintln!("{:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
