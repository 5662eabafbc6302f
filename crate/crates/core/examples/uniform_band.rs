//! Uniform confidence band over a grid, compared with the pointwise intervals.

use lspart::pipeline::{build_grid, estimate, FitOptions, GridSpec};
use lspart::testkit::DgpSpec;

fn main() -> lspart::Result<()> {
    let dgp = DgpSpec::builtin("sinbump")?;
    let sample = dgp.draw(2000, 5, 0);
    let options = FitOptions { band: true, num_sim: 5000, seed: 99, ..FitOptions::default() };
    let grid = build_grid(&sample, &GridSpec::Uniform(25))?;
    let est = estimate(&sample, &options, &grid)?;
    let band = est.band.as_ref().expect("band requested");
    println!("critical value {:.4} from {} draws (seed {})", band.critical_value, band.num_sim, band.seed);

    let mut covered = 0;
    for row in &est.rows {
        let b = row.band.expect("finite band");
        let truth = dgp.mu(&row.point);
        covered += usize::from(b.contains(truth));
        println!(
            "{:.3} {:>8.4} ci width {:.4} band width {:.4} truth {:>7.4}",
            row.point[0],
            row.estimate,
            row.ci.width(),
            b.width(),
            truth
        );
    }
    println!("band covers the truth at {covered}/{} points", est.rows.len());
    Ok(())
}
