//! Rule-of-thumb and direct plug-in choices of the number of subintervals
//! across sample sizes.

use lspart::testkit::DgpSpec;
use lspart::tuning::{select_dpi, select_rot};
use lspart::{BasisFamily, BasisSpec, Spacing};

fn main() -> lspart::Result<()> {
    let dgp = DgpSpec::builtin("sinbump")?;
    let spec = BasisSpec::level(BasisFamily::BSpline, 2, 1)?;
    println!("{:>7} {:>5} {:>5} {:>12} {:>12}", "n", "rot", "dpi", "bias", "variance");
    for power in 10..=15 {
        let n = 1usize << power;
        let sample = dgp.draw(n, 11, 0);
        let rot = select_rot(&sample, &spec, Spacing::Evenly)?;
        let dpi = select_dpi(&sample, &spec, Spacing::Evenly)?;
        println!(
            "{n:>7} {:>5} {:>5} {:>12.4e} {:>12.4e}",
            rot.kappa_rot,
            dpi.kappa(),
            dpi.bias_constant,
            dpi.variance_constant
        );
        for w in dpi.warnings.iter().chain(&rot.warnings) {
            println!("        warning: {w}");
        }
    }
    Ok(())
}
