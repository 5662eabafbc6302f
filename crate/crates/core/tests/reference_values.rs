use lspart::estimator::fit_sample;
use lspart::inference::{estimate_leading_bias, HcKind};
use lspart::lincom::{lincom_estimate, Group, LincomSpec};
use lspart::pipeline::{FitOptions, GridSpec, KappaChoice};
use lspart::testkit::DgpSpec;
use lspart::tuning::{select_dpi, select_rot};
use lspart::{build_design, eval_bspline, make_partition, predict, BasisFamily, BasisSpec, Partition, Sample, Spacing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn uniform_sample(n: usize, seed: u64, f: impl Fn(f64) -> f64, sd: f64) -> Sample {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let x: Vec<f64> = (0..n).map(|_| r.random()).collect();
    let y = x.iter().map(|&v| f(v) + noise.sample(&mut r)).collect();
    Sample::univariate(x, y).unwrap()
}

fn unit_partition(kappa: usize) -> Partition {
    Partition::from_knots(vec![(0..=kappa).map(|j| j as f64 / kappa as f64).collect()], Spacing::Evenly).unwrap()
}

#[test]
fn gram_matches_direct_loop() {
    let s = uniform_sample(50, 1, |x| x, 0.1);
    let p = make_partition(&s, &[3], Spacing::Evenly).unwrap();
    let d = build_design(&s, &BasisSpec::level(BasisFamily::BSpline, 2, 1).unwrap(), &p).unwrap();
    let k = d.k();
    let mut g = vec![vec![0.0; k]; k];
    for x in s.points() {
        let b = eval_bspline(&p, 2, &[0], x).unwrap();
        for i in 0..k {
            for j in 0..k {
                g[i][j] += b[i] * b[j] / 50.0;
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            assert!((d.gram()[(i, j)] - g[i][j]).abs() <= 1e-12);
        }
    }
}

#[test]
fn prediction_matches_coefficient_sum() {
    let s = uniform_sample(300, 2, |x| (4.0 * x).cos(), 0.2);
    let p = make_partition(&s, &[5], Spacing::Quantile).unwrap();
    let fit = fit_sample(&s, &BasisSpec::level(BasisFamily::BSpline, 4, 1).unwrap(), &p).unwrap();
    for t in [0.11, 0.37, 0.5, 0.83] {
        for q in 0..4 {
            let b = eval_bspline(&p, 4, &[q], &[t]).unwrap();
            let mut sum = 0.0;
            for (bk, beta) in b.iter().zip(fit.beta().iter()) {
                sum += bk * beta;
            }
            let got = predict(&fit, &[t], &[q]).unwrap();
            assert!((got - sum).abs() <= 1e-12 * (1.0 + sum.abs()), "q={q}: {got} vs {sum}");
        }
    }
}

#[test]
fn quadratic_bias_matches_interpolation_error() {
    let kappa = 20;
    // second derivatives of the auxiliary fit amplify noise by about kappa², so keep it small
    let s = uniform_sample(100_000, 3, |x| x * x, 0.001);
    let p = unit_partition(kappa);
    let main = fit_sample(&s, &BasisSpec::level(BasisFamily::BSpline, 2, 1).unwrap(), &p).unwrap();
    let aux = fit_sample(&s, &BasisSpec::level(BasisFamily::BSpline, 3, 1).unwrap(), &p).unwrap();
    // leading L2 approximation error of a linear spline for x² at a cell midpoint: h²/12
    let h = 1.0 / kappa as f64;
    let expected = h * h / 12.0;
    for cell in [3, 9, 16] {
        let mid = (cell as f64 + 0.5) * h;
        let b = estimate_leading_bias(&main, &aux, &[mid], &[0]).unwrap();
        assert!((b - expected).abs() <= 0.2 * expected, "cell {cell}: {b} vs {expected}");
    }
}

#[test]
fn selectors_agree_under_homoskedasticity() {
    let spec = BasisSpec::level(BasisFamily::BSpline, 2, 1).unwrap();
    for seed in 0..5 {
        let s = uniform_sample(5000, 100 + seed, |x| (2.0 * std::f64::consts::PI * x).sin() + x, 0.5);
        let rot = select_rot(&s, &spec, Spacing::Evenly).unwrap().kappa_rot as f64;
        let dpi = select_dpi(&s, &spec, Spacing::Evenly).unwrap().kappa() as f64;
        assert!(rot / dpi <= 2.0 && dpi / rot <= 2.0, "seed {seed}: rot {rot}, dpi {dpi}");
    }
}

#[test]
fn selected_kappa_tracks_the_rate_fit() {
    let dgp = DgpSpec::builtin("sinbump").unwrap();
    let spec = BasisSpec::level(BasisFamily::BSpline, 2, 1).unwrap();
    let ns: Vec<usize> = (10..=15).map(|p| 1usize << p).collect();
    let ks: Vec<f64> = ns.iter().map(|&n| select_rot(&dgp.draw(n, 4, 0), &spec, Spacing::Evenly).unwrap().kappa_rot as f64).collect();
    // least squares line through (log n, log kappa)
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let b = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    for (x, k) in lx.iter().zip(&ks) {
        let fitted = (my + b * (x - mx)).exp();
        assert!((k - fitted).abs() <= 1.0, "kappa {k} vs rate fit {fitted:.2}");
    }
}

#[test]
fn sum_of_two_constant_groups() {
    let a = uniform_sample(300, 5, |_| 1.5, 0.4);
    let b = uniform_sample(200, 6, |_| -0.25, 0.8);
    let spec = LincomSpec::new(vec![
        Group { label: "a".into(), sample: a.clone(), weight: 1.0 },
        Group { label: "b".into(), sample: b.clone(), weight: 1.0 },
    ])
    .unwrap();
    let options = FitOptions {
        order: 1,
        kappa: KappaChoice::Fixed(vec![1]),
        correction: lspart::inference::Correction::Uncorrected,
        hc: Some(HcKind::Hc0),
        ..FitOptions::default()
    };
    let grid = spec.grid(&GridSpec::Quantile(5)).unwrap();
    let out = lincom_estimate(&spec, &grid, &options).unwrap();
    let mean_and_se = |s: &Sample| {
        let n = s.n() as f64;
        let m = s.y().iter().sum::<f64>() / n;
        (m, s.y().iter().map(|y| (y - m).powi(2)).sum::<f64>().sqrt() / n)
    };
    let (ma, sa) = mean_and_se(&a);
    let (mb, sb) = mean_and_se(&b);
    for row in &out.rows {
        assert!((row.estimate - (ma + mb)).abs() <= 1e-10);
        assert!((row.se - (sa * sa + sb * sb).sqrt()).abs() <= 1e-10);
    }
}

#[test]
fn corrections_reproduce_auxiliary_degree_polynomials() {
    use lspart::inference::{influence_row, Correction};
    let cubic = |x: f64| 0.3 - x + 2.0 * x * x - 1.5 * x * x * x;
    let slope = |x: f64| -1.0 + 4.0 * x - 4.5 * x * x;
    let s = uniform_sample(400, 9, cubic, 0.0);
    // with unequal widths the spline kernel is not C^(m-2) across knots, so splines use equal cells
    for (family, spacing) in [(BasisFamily::BSpline, Spacing::Evenly), (BasisFamily::PiecewisePoly, Spacing::Quantile)] {
        let p = make_partition(&s, &[4], spacing).unwrap();
        let main = fit_sample(&s, &BasisSpec::level(family, 3, 1).unwrap(), &p).unwrap();
        let aux = fit_sample(&s, &BasisSpec::level(family, 4, 1).unwrap(), &p).unwrap();
        for t in [0.2, 0.45, 0.7] {
            for (q, truth) in [(0, cubic(t)), (1, slope(t))] {
                for j in [Correction::HigherOrder, Correction::LeastSquares] {
                    let row = influence_row(&main, Some(&aux), &[t], &[q], j).unwrap();
                    let got = row.apply(s.y());
                    assert!((got - truth).abs() <= 1e-8, "{family:?} {j} q={q} x={t}: {got} vs {truth}");
                }
            }
        }
    }
}
