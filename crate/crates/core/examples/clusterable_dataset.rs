// Generate a noisy clusterable dataset, inspect it, and round-trip it through JSONL.

use std::error::Error;

use aird::dataset::{
    corrupt_labels, dataset_stats, generate_clusterable, load_dataset, save_dataset, ClusterSpec, Corruption,
};
use aird::numerics::Rng;

pub fn run() -> Result<(), Box<dyn Error>> {
    let spec = ClusterSpec { clusters: 4, n: 200, d: 20, epsilon: 0.05, min_center_gap: 1.0 };
    let mut rng = Rng::new(7);
    let clean = generate_clusterable(&spec, &mut rng)?;
    let ds = corrupt_labels(&clean, &Corruption::Uniform(0.3), &mut rng)?;

    let stats = dataset_stats(&ds);
    println!("cluster sizes      {:?}", stats.cluster_sizes);
    println!("achieved rho       {:?}", stats.achieved_rho);
    println!("max radius         {:.4}", stats.max_within_cluster_radius);
    println!("min center gap     {:.4}", stats.min_center_gap);
    println!("c_low              {:.4}", stats.c_low);

    let path = std::env::temp_dir().join(format!("aird-example-{}.jsonl", std::process::id()));
    save_dataset(&ds, &path)?;
    let back = load_dataset(&path)?;
    std::fs::remove_file(&path)?;
    println!("round trip equal   {}", back == ds);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
