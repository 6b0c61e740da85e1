// How much of a label vector lives in the top NTK eigenspace as label noise grows.

use std::error::Error;

use aird::dataset::{generate_clusterable, ClusterSpec};
use aird::network::{init_network, Activation};
use aird::ntk::{noise_ratio_sweep, RatioNorm, SpectrumAnalysis, SpectrumSource, NOISE_LEVELS};
use aird::numerics::Rng;

pub fn run() -> Result<(), Box<dyn Error>> {
    let spec = ClusterSpec { clusters: 4, n: 120, d: 20, epsilon: 0.05, min_center_gap: 1.0 };
    let mut rng = Rng::new(2);
    let ds = generate_clusterable(&spec, &mut rng)?;
    let net = init_network(1024, ds.d(), Activation::tanh(), &mut rng)?;

    let analysis = SpectrumAnalysis::new(SpectrumSource::GramAt { step: 0 }, &net.gram(&ds.x)?, 5)?;
    let ratios = noise_ratio_sweep(&analysis, &ds.y_true, &ds.cluster_id, &NOISE_LEVELS, RatioNorm::L2, &mut rng)?;
    println!("top eigenvalues {:?}", &analysis.spectrum.eigenvalues[..5]);
    println!("noise  top-5 ratio");
    for r in ratios {
        println!("{:>5.1}  {:.4}", r.level, r.ratio);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
