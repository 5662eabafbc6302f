//! Builds partitions and evaluates both basis families with derivatives.

use lspart::{basis_dim, eval_bspline, eval_piecewise, make_partition, BasisFamily, Sample, Spacing};

fn main() -> lspart::Result<()> {
    let x: Vec<f64> = (0..200).map(|i| (i as f64 / 199.0).powi(2)).collect();
    let y = x.iter().map(|v| v.sin()).collect();
    let sample = Sample::univariate(x, y)?;

    for spacing in [Spacing::Evenly, Spacing::Quantile] {
        let p = make_partition(&sample, &[4], spacing)?;
        println!("{spacing:?} knots: {:?}", p.knots(0));
    }

    let p = make_partition(&sample, &[4], Spacing::Evenly)?;
    let point = [0.3];
    for order in 1..=4 {
        let values = eval_bspline(&p, order, &[0], &point)?;
        let sum: f64 = values.iter().sum();
        print!("bspline m={order}: K={} sum={sum:.15}", basis_dim(BasisFamily::BSpline, order, &p));
        if order > 1 {
            let slopes = eval_bspline(&p, order, &[1], &point)?;
            print!(" derivative row sum={:.3e}", slopes.iter().sum::<f64>());
        }
        println!();
    }

    let pp = eval_piecewise(&p, 3, &[0], &point)?;
    println!("piecewise m=3: K={} row={pp:.4?}", pp.len());

    let p2 = lspart::Partition::from_knots(vec![vec![0.0, 0.5, 1.0], vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]], Spacing::Evenly)?;
    let cell = lspart::locate_cell(&p2, &[0.7, 0.5])?;
    let mixed = eval_bspline(&p2, 3, &[1, 1], &[0.7, 0.5])?;
    println!("2-d tensor: cell {cell:?}, K={}, nonzero d2/dx0dx1 entries {}", mixed.len(), mixed.iter().filter(|v| **v != 0.0).count());
    Ok(())
}
