//! Checkpoint and resume a streaming run: the snapshot carries the model,
//! the buffered observations, and the materialized configuration, so a
//! restored stream continues exactly where the original left off.
//!
//! ```bash
//! cargo run --example checkpointing
//! ```

use incad::config::Config;
use incad::data::{generate_synthetic, SyntheticConfig};
use incad::mvn::sample_covariance;
use incad::snapshot::{load_stream, save_stream};
use incad::stream::{batch_init, stream_update};
use incad::RandomSource;

fn main() -> incad::Result<()> {
    let mut rng = RandomSource::from_seed(42);
    let ds = generate_synthetic(&SyntheticConfig::default(), &mut rng)?;

    let cfg = Config::default();
    let mcfg = cfg.materialize(ds.dim(), &sample_covariance(&ds.points))?;
    let mut sampler_rng = RandomSource::from_seed(cfg.seed);
    let mut stream = batch_init(&ds.points[..323], &mcfg, &mut sampler_rng)?;

    // Stream half the remaining points, then checkpoint.
    for i in 323..360 {
        stream_update(&mut stream, ds.points[i].clone(), &mut sampler_rng)?;
    }
    let path = std::env::temp_dir().join("incad-example-checkpoint.json");
    save_stream(&stream, &cfg.hash(), &path)?;
    println!(
        "checkpointed after {} updates ({} points, {} clusters) to {}",
        stream.update_count,
        stream.model.num_points(),
        stream.model.num_clusters(),
        path.display()
    );

    // Resume from disk and continue; the restored run stays in lockstep
    // with the original given the same downstream draws.
    let mut restored = load_stream(&path)?;
    let next = &ds.points[360];
    println!(
        "restored model scores the next arrival at log density {:.3}",
        restored.model.mixture_log_density(next)?
    );
    let mut rng_a = sampler_rng.clone();
    let mut rng_b = sampler_rng;
    for i in 360..400 {
        stream_update(&mut stream, ds.points[i].clone(), &mut rng_a)?;
        stream_update(&mut restored, ds.points[i].clone(), &mut rng_b)?;
    }
    let same_flags = stream.model.flags() == restored.model.flags();
    let same_assignments = (0..400).all(|i| stream.model.assignment(i) == restored.model.assignment(i));
    println!(
        "continued original and restored runs for 40 more updates: flags match = {same_flags}, assignments match = {same_assignments}"
    );
    Ok(())
}
