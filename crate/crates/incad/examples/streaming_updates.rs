//! The streaming extension in action: initialize on the established part
//! of the data, then stream an emerging cluster and watch its members'
//! classification evolve from anomalous to normal.
//!
//! ```bash
//! cargo run --release --example streaming_updates
//! ```

use incad::config::Config;
use incad::data::{generate_synthetic, SyntheticConfig};
use incad::mvn::sample_covariance;
use incad::stream::{batch_init, finalize_small_clusters, stream_update};
use incad::RandomSource;

fn main() -> incad::Result<()> {
    let mut rng = RandomSource::from_seed(42);
    let ds = generate_synthetic(&SyntheticConfig::default(), &mut rng)?.z_scored()?;

    // The first 300 points are the three established clusters; the next 23
    // are scattered anomalies; the final 77 form a cluster the batch model
    // has never seen.
    let cfg = Config::default();
    let mcfg = cfg.materialize(ds.dim(), &sample_covariance(&ds.points))?;
    let mut sampler_rng = RandomSource::from_seed(cfg.seed);
    let mut stream = batch_init(&ds.points[..323], &mcfg, &mut sampler_rng)?;
    println!(
        "batch init on 323 points: {} clusters",
        stream.model.num_clusters()
    );

    println!("\narrival  flagged-in-new-cluster  K");
    for t in 0..77 {
        stream_update(&mut stream, ds.points[323 + t].clone(), &mut sampler_rng)?;
        if t < 10 || (t + 1) % 11 == 0 {
            let arrived = t + 1;
            let flagged = (323..323 + arrived).filter(|&i| stream.model.flag(i)).count();
            let bar: String = std::iter::repeat_n('#', flagged).collect();
            println!(
                "{:>7}  {:>3}/{:<3} {:<20}  {}",
                arrived,
                flagged,
                arrived,
                bar,
                stream.model.num_clusters()
            );
        }
    }

    finalize_small_clusters(&mut stream);
    let final_flagged = (323..400).filter(|&i| stream.model.flag(i)).count();
    let anomalies_flagged = (300..323).filter(|&i| stream.model.flag(i)).count();
    println!(
        "\nafter all 77 arrivals: {final_flagged}/77 of the new cluster flagged, \
         {anomalies_flagged}/23 of the scattered anomalies flagged"
    );
    println!(
        "the emerging behavior was anomalous while rare and became normal once established"
    );
    Ok(())
}
