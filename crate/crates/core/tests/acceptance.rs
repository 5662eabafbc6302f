//! Acceptance criteria. Runs as a plain binary (no libtest harness) so that
//! every criterion prints exactly one PASS/FAIL line; exits non-zero if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use lspart::estimator::{fit_sample, response_scale};
use lspart::inference::{uniform_band, BandOptions, Correction, Corrector, HcKind};
use lspart::pipeline::{fit_pair, FitOptions, KappaChoice};
use lspart::testkit::{fd_partial_steps, oracle_ols, run_coverage, BruteForce, CoverageConfig, DgpSpec, OlsOracle};
use lspart::tuning::{select_dpi, select_rot};
use lspart::{eval_bspline, make_partition, BasisFamily, BasisSpec, Partition, Sample, Spacing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL_UNITY: f64 = 1e-12;
const TOL_EXACT: f64 = 1e-8;
const TOL_NORMAL_EQ: f64 = 1e-8;
const TOL_FD: f64 = 1e-6;
const TOL_ORACLE: f64 = 1e-10;
const TOL_OLS: f64 = 1e-8;
const RATE: f64 = 0.2;
const RATE_SLACK: f64 = 0.05;
const Z_975: f64 = 1.959964;
const BAND_SLACK: f64 = 0.05;
const POINTWISE_RANGE: (f64, f64) = (0.92, 0.975);
const BAND_RANGE: (f64, f64) = (0.91, 0.98);

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn even_partition(d: usize, kappa: usize) -> Partition {
    let knots: Vec<f64> = (0..=kappa).map(|j| j as f64 / kappa as f64).collect();
    Partition::from_knots(vec![knots; d], Spacing::Evenly).unwrap()
}

fn random_sample(r: &mut ChaCha8Rng, n: usize, d: usize, f: impl Fn(&[f64]) -> f64, noise: f64) -> Sample {
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let p: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
        y.push(f(&p) + noise * (r.random::<f64>() - 0.5));
        rows.push(p);
    }
    Sample::new(y, rows).unwrap()
}

fn families() -> [BasisFamily; 2] {
    [BasisFamily::BSpline, BasisFamily::PiecewisePoly]
}

/// 1. B-spline rows sum to one.
fn partition_of_unity() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for d in [1, 2] {
        for m in 1..=4 {
            for kappa in [1, 2, 5, 13] {
                let p = even_partition(d, kappa);
                for _ in 0..1000 {
                    let x: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
                    let row = eval_bspline(&p, m, &vec![0; d], &x).map_err(|e| e.to_string())?;
                    worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
                }
            }
        }
    }
    if worst <= TOL_UNITY {
        Ok(format!("max |sum - 1| = {worst:.2e}"))
    } else {
        Err(format!("max |sum - 1| = {worst:.2e} > {TOL_UNITY:e}"))
    }
}

fn random_polynomial(r: &mut ChaCha8Rng, d: usize, degree: usize) -> impl Fn(&[f64]) -> f64 {
    // sum over exponent tuples with total degree <= degree
    let mut terms = Vec::new();
    let mut stack = vec![Vec::new()];
    while let Some(e) = stack.pop() {
        if e.len() == d {
            terms.push((e, r.random_range(-3.0..3.0)));
            continue;
        }
        let used: usize = e.iter().sum();
        for a in 0..=(degree - used) {
            let mut next = e.clone();
            next.push(a);
            stack.push(next);
        }
    }
    move |x: &[f64]| terms.iter().map(|(e, c)| c * e.iter().zip(x).map(|(&a, v)| v.powi(a as i32)).product::<f64>()).sum()
}

/// 2. Data from a degree-(m-1) polynomial are fitted exactly.
fn polynomial_exactness() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for family in families() {
        for m in 1..=4 {
            for d in [1, 2] {
                let f = random_polynomial(&mut r, d, m - 1);
                let s = random_sample(&mut r, 400, d, &f, 0.0);
                let kappa = if d == 1 { 5 } else { 3 };
                let p = make_partition(&s, &vec![kappa; d], Spacing::Evenly).map_err(|e| e.to_string())?;
                let fit = fit_sample(&s, &BasisSpec::level(family, m, d).unwrap(), &p).map_err(|e| e.to_string())?;
                let scale = response_scale(s.y());
                let max_res = fit.residuals().iter().fold(0.0f64, |a, v| a.max(v.abs()));
                worst = worst.max(max_res / scale);
            }
        }
    }
    if worst <= TOL_EXACT {
        Ok(format!("max residual / scale(y) = {worst:.2e}"))
    } else {
        Err(format!("max residual / scale(y) = {worst:.2e} > {TOL_EXACT:e}"))
    }
}

/// 3. Residuals are orthogonal to the basis.
fn normal_equations() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for inst in 0..50 {
        let family = families()[inst % 2];
        let d = 1 + inst % 3 / 2;
        let m = 1 + r.random_range(0..4);
        let kappa = 1 + r.random_range(0..if d == 1 { 8 } else { 3 });
        let n = r.random_range(150..500);
        let scale_y = 10f64.powi(r.random_range(-2..4));
        let s = random_sample(&mut r, n, d, |x| scale_y * (5.0 * x[0]).sin(), scale_y);
        let spacing = if inst % 4 == 3 { Spacing::Quantile } else { Spacing::Evenly };
        let p = make_partition(&s, &vec![kappa; d], spacing).map_err(|e| e.to_string())?;
        let fit = fit_sample(&s, &BasisSpec::level(family, m, d).unwrap(), &p).map_err(|e| e.to_string())?;
        let b = fit.design().basis();
        let eps = nalgebra::DVector::from_column_slice(fit.residuals());
        let score = b.tr_mul(&eps);
        worst = worst.max(score.amax() / response_scale(s.y()));
    }
    if worst <= TOL_NORMAL_EQ {
        Ok(format!("max |B'e| / scale(y) = {worst:.2e} over 50 instances"))
    } else {
        Err(format!("max |B'e| / scale(y) = {worst:.2e} > {TOL_NORMAL_EQ:e}"))
    }
}

/// 4. Analytic derivatives agree with central differences.
fn derivative_consistency() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for family in families() {
        for m in 1..=4 {
            for d in [1, 2] {
                let kappa = if d == 1 { 4 } else { 3 };
                let p = even_partition(d, kappa);
                let mut points = 0;
                // 13 points for each of the 16 (family, m, d) combinations
                while points < 13 {
                    let x: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
                    // keep the stencils (half-width at most 1.5e-2) inside one cell
                    let clear = x.iter().all(|v| {
                        let t = v * kappa as f64;
                        (t - t.round()).abs() / kappa as f64 > 0.02
                    });
                    if !clear {
                        continue;
                    }
                    points += 1;
                    let q_total = r.random_range(0..m);
                    let mut q = vec![0; d];
                    for _ in 0..q_total {
                        q[r.random_range(0..d)] += 1;
                    }
                    let analytic = lspart::basis::eval_basis(&BasisSpec::new(family, m, q.clone()).unwrap(), &p, &x)
                        .map_err(|e| e.to_string())?;
                    let scale = analytic.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                    // pieces are at most cubic in each coordinate: second and third differences are exact,
                    // so only first differences need a small step
                    let steps: Vec<f64> = q.iter().map(|&ql| [0.0, 1e-5, 1e-3, 1e-2][ql]).collect();
                    for (k, a) in analytic.iter().enumerate() {
                        let f = |z: &[f64]| lspart::basis::eval_basis(&BasisSpec::level(family, m, d).unwrap(), &p, z).unwrap()[k];
                        let fd = fd_partial_steps(&f, &x, &q, &steps);
                        worst = worst.max((fd - a).abs() / scale);
                    }
                    checked += 1;
                }
            }
        }
    }
    if worst <= TOL_FD {
        Ok(format!("max relative gap = {worst:.2e} at {checked} points"))
    } else {
        Err(format!("max relative gap = {worst:.2e} > {TOL_FD:e}"))
    }
}

/// 5. All corrections agree with the dense brute-force oracle.
fn oracle_equivalence() -> Outcome {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 20 {
        let family = families()[done % 2];
        let d = if done % 5 == 4 { 2 } else { 1 };
        let m = 1 + r.random_range(0..3);
        let kappa = if d == 1 { 1 + r.random_range(0..5) } else { 1 + r.random_range(0..2) };
        let n = r.random_range(60..=200);
        let s = random_sample(&mut r, n, d, |x| (4.0 * x[0]).cos() + x.iter().sum::<f64>().powi(2), 0.5);
        let opts = FitOptions { family, order: m, kappa: KappaChoice::Fixed(vec![kappa]), ..Default::default() };
        let p = make_partition(&s, &vec![kappa; d], Spacing::Evenly).map_err(|e| e.to_string())?;
        let (main, aux) = fit_pair(&s, &opts, &p).map_err(|e| e.to_string())?;
        let aux = aux.expect("aux order is m + 1");
        if aux.k() > 40 || aux.k() >= n {
            continue;
        }
        let corrector = Corrector::new(&main, Some(&aux)).map_err(|e| e.to_string())?;
        let oracle = BruteForce { sample: &s, partition: &p, spline: family == BasisFamily::BSpline, order: m, order_bc: m + 1 };
        for _ in 0..3 {
            let x: Vec<f64> = (0..d).map(|_| 0.02 + 0.96 * r.random::<f64>()).collect();
            let q_total = r.random_range(0..m);
            let mut q = vec![0; d];
            for _ in 0..q_total {
                q[r.random_range(0..d)] += 1;
            }
            for c in Correction::ALL {
                let ours = corrector.row(&x, &q, c).map_err(|e| e.to_string())?.apply(s.y());
                let theirs = oracle.estimate(&x, &q, c.id()).map_err(|e| e.to_string())?;
                let gap = (ours - theirs).abs();
                if !gap.is_finite() {
                    return Err(format!("non-finite comparison for {c} at {x:?}: ours {ours}, oracle {theirs}"));
                }
                worst = worst.max(gap);
            }
        }
        done += 1;
    }
    if worst <= TOL_ORACLE {
        Ok(format!("max |ours - oracle| = {worst:.2e} over 20 instances x 3 points x 4 corrections"))
    } else {
        Err(format!("max |ours - oracle| = {worst:.2e} > {TOL_ORACLE:e}"))
    }
}

/// 6. With one cell the estimator is polynomial OLS.
fn kappa_one_reduction() -> Outcome {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for family in families() {
        for m in 1..=4 {
            let s = random_sample(&mut r, 300, 1, |x| (3.0 * x[0]).exp(), 2.0);
            let p = make_partition(&s, &[1], Spacing::Evenly).map_err(|e| e.to_string())?;
            let fit = fit_sample(&s, &BasisSpec::level(family, m, 1).unwrap(), &p).map_err(|e| e.to_string())?;
            let x = s.column(0);
            let coef = oracle_ols(&x, s.y(), m - 1).map_err(|e| e.to_string())?;
            let rows: Vec<Vec<f64>> = x.iter().map(|v| (0..m).map(|k| v.powi(k as i32)).collect()).collect();
            let ols = OlsOracle::fit(&rows, s.y()).map_err(|e| e.to_string())?;
            let corrector = Corrector::new(&fit, None).map_err(|e| e.to_string())?;
            let (lo, hi) = s.range(0);
            for k in 0..=10 {
                let t = if k == 10 { hi } else { lo + (hi - lo) * k as f64 / 10.0 };
                let c: Vec<f64> = (0..m).map(|j| t.powi(j as i32)).collect();
                let row = corrector.row(&[t], &[0], Correction::Uncorrected).map_err(|e| e.to_string())?;
                let est = row.apply(s.y());
                let se = lspart::inference::point_se(&row, &fit, HcKind::Hc0);
                let want: f64 = c.iter().zip(&coef).map(|(a, b)| a * b).sum();
                worst = worst.max((est - want).abs()).max((se - ols.se(&c)).abs());
            }
        }
    }
    if worst <= TOL_OLS {
        Ok(format!("max gap in estimate/se = {worst:.2e}"))
    } else {
        Err(format!("max gap in estimate/se = {worst:.2e} > {TOL_OLS:e}"))
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// 7. Selected kappa grows like n^(1/5).
fn selector_rate() -> Outcome {
    let dgp = DgpSpec::builtin("sinbump").unwrap();
    let spec = BasisSpec::new(BasisFamily::BSpline, 2, vec![0]).unwrap();
    let seeds = 5;
    let mut log_n = Vec::new();
    let mut log_rot = Vec::new();
    let mut log_dpi = Vec::new();
    for p in 10..=16 {
        let n = 1usize << p;
        let (mut rot, mut dpi) = (0.0, 0.0);
        for seed in 0..seeds {
            let s = dgp.draw(n, 700 + seed, 0);
            rot += select_rot(&s, &spec, Spacing::Evenly).map_err(|e| e.to_string())?.kappa() as f64;
            dpi += select_dpi(&s, &spec, Spacing::Evenly).map_err(|e| e.to_string())?.kappa() as f64;
        }
        log_n.push((n as f64).ln());
        log_rot.push((rot / seeds as f64).ln());
        log_dpi.push((dpi / seeds as f64).ln());
    }
    let (sr, sd) = (slope(&log_n, &log_rot), slope(&log_n, &log_dpi));
    let msg = format!("slopes ROT {sr:.4}, DPI {sd:.4} (target {RATE} +/- {RATE_SLACK})");
    if (sr - RATE).abs() <= RATE_SLACK && (sd - RATE).abs() <= RATE_SLACK {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// 8. A one-point band uses the normal quantile.
fn single_point_band() -> Outcome {
    let dgp = DgpSpec::builtin("sinbump").unwrap();
    let s = dgp.draw(500, 8, 0);
    let p = make_partition(&s, &[6], Spacing::Evenly).map_err(|e| e.to_string())?;
    let fit = fit_sample(&s, &BasisSpec::level(BasisFamily::BSpline, 2, 1).unwrap(), &p).map_err(|e| e.to_string())?;
    let row = Corrector::new(&fit, None).unwrap().row(&[0.5], &[0], Correction::Uncorrected).map_err(|e| e.to_string())?;
    let opts = BandOptions { alpha: 0.05, num_sim: 5000, seed: 2024, hc: HcKind::Hc0 };
    let band = uniform_band(&[row], &fit, &opts).map_err(|e| e.to_string())?;
    let gap = (band.critical_value - Z_975).abs();
    let msg = format!("critical value {:.4} (|gap| {gap:.4}, slack {BAND_SLACK})", band.critical_value);
    if gap <= BAND_SLACK {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// 9. Coverage of robust bias-corrected intervals and bands.
fn coverage() -> Outcome {
    let cfg = CoverageConfig::new(DgpSpec::builtin("sinbump").unwrap(), 1000, 1000, 20261017, FitOptions::default());
    let report = run_coverage(&cfg).map_err(|e| e.to_string())?;
    let k = report.median_index;
    let bc3 = report.row(Correction::PlugIn).ok_or("bc3 missing")?;
    let bc0 = report.row(Correction::Uncorrected).ok_or("bc0 missing")?;
    let (pw, band, pw0) = (bc3.pointwise[k], bc3.band, bc0.pointwise[k]);
    let msg = format!(
        "x={:.2}: bc3 pointwise {pw:.3} in [{}, {}], bc3 band {band:.3} in [{}, {}], bc0 pointwise {pw0:.3} < bc3 (reps {}, mean kappa {:.2})",
        report.grid[k][0], POINTWISE_RANGE.0, POINTWISE_RANGE.1, BAND_RANGE.0, BAND_RANGE.1, report.completed, report.mean_kappa
    );
    let ok = (POINTWISE_RANGE.0..=POINTWISE_RANGE.1).contains(&pw)
        && (BAND_RANGE.0..=BAND_RANGE.1).contains(&band)
        && pw0 < pw
        && report.completed == 1000
        && bc3.hc == HcKind::Hc3;
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn write_fixture(dir: &Path) -> std::io::Result<()> {
    let dgp = DgpSpec::builtin("sinbump").unwrap();
    let s = dgp.draw(400, 10, 0);
    let mut csv = String::from("y,x,g\n");
    for i in 0..s.n() {
        csv.push_str(&format!("{},{},{}\n", s.y()[i], s.point(i)[0], if i % 2 == 0 { "a" } else { "b" }));
    }
    std::fs::write(dir.join("data.csv"), csv)
}

/// 10. Every command is byte-for-byte reproducible.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_fixture(dir.path()).map_err(|e| e.to_string())?;
    let data = dir.path().join("data.csv");
    let data = data.to_str().unwrap();
    let commands: Vec<(&str, Vec<&str>, bool)> = vec![
        ("fit", vec!["fit", "--input", data, "--y", "y", "--x", "x", "--band", "--nsim", "500"], true),
        ("select", vec!["select", "--input", data, "--y", "y", "--x", "x"], false),
        (
            "lincom",
            vec!["lincom", "--input", data, "--y", "y", "--x", "x", "--group-col", "g", "--weights", "a=1,b=-1", "--band", "--nsim", "500"],
            true,
        ),
        ("simulate", vec!["simulate", "--dgp", "sinbump", "--n", "300", "--reps", "20", "--nsim", "200"], false),
    ];
    let mut checked = Vec::new();
    for (name, args, has_csv) in commands {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let json = dir.path().join(format!("{name}{run}.json"));
            let csv = dir.path().join(format!("{name}{run}.csv"));
            let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
            full.extend(["--out-json".to_string(), json.to_str().unwrap().to_string()]);
            if has_csv {
                full.extend(["--out-csv".to_string(), csv.to_str().unwrap().to_string()]);
            }
            let status = Command::new(env!("CARGO_BIN_EXE_lspart")).args(&full).output().map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{name} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            let mut bytes = std::fs::read(&json).map_err(|e| e.to_string())?;
            if has_csv {
                bytes.extend(std::fs::read(&csv).map_err(|e| e.to_string())?);
            }
            outputs.push(bytes);
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{name}: outputs differ between runs"));
        }
        checked.push(name);
    }
    Ok(format!("identical outputs for {}", checked.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 partition of unity", partition_of_unity),
        ("2 polynomial exactness", polynomial_exactness),
        ("3 normal equations", normal_equations),
        ("4 derivative consistency", derivative_consistency),
        ("5 oracle equivalence", oracle_equivalence),
        ("6 kappa=1 reduction", kappa_one_reduction),
        ("7 selector rate", selector_rate),
        ("8 single-point band", single_point_band),
        ("9 coverage", coverage),
        ("10 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
