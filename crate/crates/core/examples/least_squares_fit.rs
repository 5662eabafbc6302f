//! Fits a cubic spline regression on a fixed partition and predicts levels
//! and derivatives.

use lspart::{build_design, fit_ls, make_partition, predict, BasisSpec, BasisFamily, Sample, Spacing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lspart::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 800;
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x.iter().map(|&v| (6.0 * v).sin() + 0.2 * (rng.random::<f64>() - 0.5)).collect();
    let sample = Sample::univariate(x, y)?;

    let partition = make_partition(&sample, &[6], Spacing::Quantile)?;
    let spec = BasisSpec::level(BasisFamily::BSpline, 4, 1)?;
    let design = build_design(&sample, &spec, &partition)?;
    println!("n={} K={} rank={}", design.n(), design.k(), design.effective_rank());

    let fit = fit_ls(design, sample.y())?;
    let rss: f64 = fit.residuals().iter().map(|e| e * e).sum();
    println!("residual sd {:.4}", (rss / n as f64).sqrt());

    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "x", "fit", "truth", "slope", "truth");
    for k in 1..10 {
        let t = k as f64 / 10.0;
        let level = predict(&fit, &[t], &[0])?;
        let slope = predict(&fit, &[t], &[1])?;
        println!("{t:>6.2} {level:>10.4} {:>10.4} {slope:>10.4} {:>10.4}", (6.0 * t).sin(), 6.0 * (6.0 * t).cos());
    }
    Ok(())
}
