//! Sensitivity of streaming quality to the batch-initialization fraction:
//! run the full pipeline once per fraction and tabulate the metrics.
//!
//! ```bash
//! cargo run --release --example sensitivity_sweep
//! ```

use incad::config::Config;
use incad::harness;

fn main() -> incad::Result<()> {
    let dir = std::env::temp_dir().join("incad-example-sensitivity");
    std::fs::create_dir_all(&dir).ok();

    let cfg = Config::default();
    let csv = harness::run_simulate(&cfg, &dir)?;
    let fractions = [0.1, 0.25, 0.5, 0.75, 0.9];
    let table = harness::run_sensitivity(&cfg, &csv, &dir, &fractions)?;

    println!("\nfraction  precision  recall  f-measure  runtime");
    for m in &table {
        println!(
            "{:>8.2}  {:>9.3}  {:>6.3}  {:>9.3}  {:>6.2}s",
            m.batch_fraction, m.precision, m.recall, m.f_measure, m.runtime_seconds
        );
    }
    println!("\nfull table written to {}", dir.join("sensitivity.csv").display());
    Ok(())
}
