//! The file-based pipeline without the binary: simulate a dataset, run the
//! streaming command, and score the emitted results — the same three steps
//! as `incad simulate`, `incad stream`, `incad eval`.
//!
//! ```bash
//! cargo run --release --example cli_pipeline
//! ```

use incad::config::Config;
use incad::data::read_results;
use incad::harness;

fn main() -> incad::Result<()> {
    let dir = std::env::temp_dir().join("incad-example-pipeline");
    std::fs::create_dir_all(&dir).ok();

    let mut cfg = Config::default();
    cfg.stream.batch_fraction = 0.75;

    let dataset = harness::run_simulate(&cfg, &dir)?;
    let metrics = harness::run_stream(&cfg, &dataset, &dir)?.expect("labeled dataset");
    println!(
        "stream run: f {:.3} (precision {:.3}, recall {:.3}) in {:.2}s",
        metrics.f_measure, metrics.precision, metrics.recall, metrics.runtime_seconds
    );

    let records = read_results(dir.join("results.jsonl"))?;
    let flagged = records.iter().filter(|r| r.anomaly_flag).count();
    println!("{} records written, {} flagged anomalous", records.len(), flagged);

    let eval = harness::run_eval(&dataset, &dir.join("results.jsonl"), &dir.join("eval"), &cfg)?;
    println!("re-scored from files: f {:.3}", eval.f_measure);
    println!("outputs under {}", dir.display());
    Ok(())
}
