//! Point estimates with all four bias corrections and robust standard errors.

use lspart::inference::{Correction, HcKind};
use lspart::pipeline::{estimate, FitOptions, KappaChoice};
use lspart::testkit::DgpSpec;

fn main() -> lspart::Result<()> {
    let dgp = DgpSpec::builtin("sinbump")?;
    let sample = dgp.draw(1000, 3, 0);
    let options = FitOptions { kappa: KappaChoice::Dpi, hc: Some(HcKind::Hc3), ..FitOptions::default() };
    let grid: Vec<Vec<f64>> = [0.2, 0.5, 0.8].iter().map(|&v| vec![v]).collect();
    let est = estimate(&sample, &options, &grid)?;
    println!("kappa {:?}, K main {}, K aux {:?}", est.kappa, est.k_main, est.k_aux);

    for row in &est.rows {
        println!("x = {:.2}, truth {:.4}", row.point[0], dgp.mu(&row.point));
        for s in &row.all {
            let marker = if s.correction == Correction::PlugIn { "*" } else { " " };
            println!(
                " {marker}{}: {:>8.4} se {:.4} ci [{:.4}, {:.4}]",
                s.correction, s.estimate, s.se, s.ci.lo, s.ci.hi
            );
        }
    }
    Ok(())
}
