//! Difference between two groups' regression functions with a joint band.

use std::collections::BTreeMap;

use lspart::lincom::{lincom_estimate, LincomSpec};
use lspart::pipeline::{FitOptions, GridSpec};
use lspart::Sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lspart::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut labels = Vec::new();
    for i in 0..1600 {
        let x: f64 = rng.random();
        let treated = i % 2 == 0;
        let shift = if treated { 0.5 * x * x } else { 0.0 };
        rows.push(vec![x]);
        y.push((3.0 * x).sin() + shift + 0.3 * (rng.random::<f64>() - 0.5));
        labels.push(if treated { "treated" } else { "control" }.to_string());
    }
    let sample = Sample::new(y, rows)?;
    let weights = BTreeMap::from([("treated".to_string(), 1.0), ("control".to_string(), -1.0)]);
    let spec = LincomSpec::from_labels(&sample, &labels, &weights)?;
    let grid = spec.grid(&GridSpec::Quantile(9))?;
    let options = FitOptions { band: true, ..FitOptions::default() };
    let out = lincom_estimate(&spec, &grid, &options)?;

    for g in &out.groups {
        println!("{} (weight {:+}): n={} kappa={:?}", g.label, g.weight, g.n, g.kappa);
    }
    for row in &out.rows {
        let x = row.point[0];
        let band = row.band.expect("band requested");
        println!(
            "{x:.3} diff {:>7.4} (truth {:.4}) ci [{:.4}, {:.4}] band [{:.4}, {:.4}]",
            row.estimate,
            0.5 * x * x,
            row.ci.lo,
            row.ci.hi,
            band.lo,
            band.hi
        );
    }
    Ok(())
}
