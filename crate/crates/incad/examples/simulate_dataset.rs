//! Generate the labeled 2-D benchmark dataset and write it as CSV.
//!
//! ```bash
//! cargo run --example simulate_dataset
//! ```

use incad::data::{generate_synthetic, write_dataset_csv, SyntheticConfig};
use incad::RandomSource;

fn main() -> incad::Result<()> {
    let cfg = SyntheticConfig::default();
    let mut rng = RandomSource::from_seed(42);
    let ds = generate_synthetic(&cfg, &mut rng)?;

    let anomalies = ds.labels.as_ref().unwrap().iter().filter(|l| **l).count();
    println!(
        "{} points: {} clusters of sizes {:?} plus {} anomalies around {:?}",
        ds.len(),
        cfg.cluster_means.len(),
        cfg.cluster_sizes,
        anomalies,
        cfg.anomaly_mean
    );

    let out = std::env::temp_dir().join("incad-example-dataset.csv");
    write_dataset_csv(&ds, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
