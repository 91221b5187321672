//! Minimal end-to-end run on a synthetic instance (the README example).

use minirel::driver::{minirel_run, DriverOptions, Strategy};
use minirel::model::{compute_beta, Alpha, BetaPolicy, ClusteringProblem, FairnessSpec, Mode};
use minirel::synth::{skewed_blobs, BlobConfig};
use rand::SeedableRng;

fn main() -> Result<(), minirel::Error> {
    let config = BlobConfig { blobs: 3, per_blob: 40, ..Default::default() };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let (dataset, groups) = skewed_blobs(&config, &mut rng)?;
    let n = dataset.n();
    let problem = ClusteringProblem::new(dataset, groups, 3, Mode::KMeans)?;

    let alpha = Alpha::Uniform(0.51);
    let beta = compute_beta(&BetaPolicy::StatisticalParity, &alpha, 3, &problem.groups);
    let spec = FairnessSpec::new(alpha, beta, 1, n)?;

    let (solution, trace) =
        minirel_run(&problem, &spec, Strategy::FullIp, &mut rng, DriverOptions::default())?;
    println!("cost {} after {} iterations", solution.cost, trace.iterations.len());
    Ok(())
}
