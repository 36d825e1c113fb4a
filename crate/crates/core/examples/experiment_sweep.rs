//! Run a small sweep from a TOML config, write results, summary and plots.
//!
//! cargo run --release --example experiment_sweep [config.toml] [out_dir]

use std::path::PathBuf;

use varmiss::experiment::{emit_plots, run_experiment, summarize, ExperimentConfig};

const DEFAULT: &str = include_str!("sweep.toml");

fn main() -> varmiss::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::parse(DEFAULT)?,
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("varmiss_sweep"));
    let res = run_experiment(&cfg, &out)?;
    for s in summarize(&res.rows) {
        println!(
            "n {:>5} delta {:.2}: median error {:.4}, median precision {:?}, median recall {:?}",
            s.n, s.delta, s.median_err_f.unwrap_or(f64::NAN), s.median_precision, s.median_recall
        );
    }
    let plots = emit_plots(&res.results, &out)?;
    for a in &plots.slopes {
        println!("delta {:.2}: log-log slope of error vs n {:.3}", a.delta, a.slope);
    }
    println!("wrote {}", out.display());
    Ok(())
}
