//! Small Monte Carlo study of interval and band coverage.
//!
//! `cargo run --release --example coverage_study -- 200` sets the number of
//! replications (default 100).

use lspart::inference::Correction;
use lspart::pipeline::FitOptions;
use lspart::testkit::{run_coverage, CoverageConfig, DgpSpec};

fn main() -> lspart::Result<()> {
    let reps = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let cfg = CoverageConfig::new(DgpSpec::builtin("sinbump")?, 1000, reps, 2026, FitOptions::default());
    let report = run_coverage(&cfg)?;
    let mid = report.median_index;
    println!(
        "{} n={} reps={}/{} mean kappa {:.2}, nominal {:.0}%",
        report.dgp,
        report.n,
        report.completed,
        report.reps,
        report.mean_kappa,
        100.0 * (1.0 - report.alpha)
    );
    println!("x = {:.2}", report.grid[mid][0]);
    for c in Correction::ALL {
        if let Some(row) = report.row(c) {
            println!(
                "{c} ({:?}): pointwise {:.3} width {:.4}, band {:.3} width {:.4}",
                row.hc, row.pointwise[mid], row.mean_ci_width[mid], row.band, row.mean_band_width
            );
        }
    }
    Ok(())
}
