//! IMSE-optimal choice of the number of subintervals `kappa`.
//!
//! With `d` covariates, order `m` and derivative `q`, the integrated mean
//! squared error (weighted by the design density) expands as
//!
//! ```text
//! IMSE(κ) ≈ V κ^(d + 2|q|) / n + B κ^(-2(m - |q|))
//! ```
//!
//! whose minimizer is
//! `κ* = (2(m-|q|) B / ((d+2|q|) V))^(1/(2m+d)) n^(1/(2m+d))`.
//! The rule-of-thumb selector estimates `B` and `V` from a global polynomial
//! pilot; the direct plug-in selector re-estimates them from partitioning
//! fits on the rule-of-thumb mesh. The same `κ` is used in every dimension.

use nalgebra::{DMatrix, DVector};

use crate::basis::kernel::{bias_constant as kernel_bias, variance_constant as kernel_variance};
use crate::basis::{univariate_dim, BasisFamily, BasisSpec};
use crate::error::{Error, Result};
use crate::estimator::{build_design, fit_ls};
use crate::grid::{make_partition, Sample, Spacing};
use crate::inference::leading_bias_functional;

/// Leading IMSE constants (`B`: squared bias, `V`: variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImseConstants {
    pub bias: f64,
    pub variance: f64,
}

/// Outcome of a selector.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub kappa_rot: usize,
    pub kappa_dpi: Option<usize>,
    /// Bias constant behind the reported (final) `kappa`.
    pub bias_constant: f64,
    /// Variance constant behind the reported (final) `kappa`.
    pub variance_constant: f64,
    pub rot: ImseConstants,
    pub dpi: Option<ImseConstants>,
    /// `1 / (2m + d)`.
    pub rate_exponent: f64,
    /// Largest admissible `kappa` (basis dimension at most `n/2`).
    pub kappa_cap: usize,
    pub warnings: Vec<String>,
}

impl TuningReport {
    /// DPI choice when available, otherwise the ROT one.
    pub fn kappa(&self) -> usize {
        self.kappa_dpi.unwrap_or(self.kappa_rot)
    }
}

/// Unrounded IMSE-optimal `kappa`.
pub fn imse_optimal_kappa(c: ImseConstants, order: usize, d: usize, total_deriv: usize, n: usize) -> f64 {
    let m = order as f64;
    let q = total_deriv as f64;
    let d = d as f64;
    let rate = 1.0 / (2.0 * m + d);
    let ratio = 2.0 * (m - q) * c.bias / ((d + 2.0 * q) * c.variance);
    ratio.powf(rate) * (n as f64).powf(rate)
}

/// Largest isotropic `kappa` whose basis dimension does not exceed `n/2`.
pub fn kappa_cap(family: BasisFamily, order: usize, d: usize, n: usize) -> usize {
    let limit = (n / 2).max(1);
    let fits = |k: usize| {
        let per = univariate_dim(family, order, k) as f64;
        per.powi(d as i32) <= limit as f64
    };
    let mut k = 1;
    while fits(k + 1) {
        k += 1;
    }
    k
}

/// Integer `kappa` from constants: ceiling of the optimum, floored at 1 and
/// capped at `cap`. Zero bias gives 1; zero variance with positive bias gives
/// the cap.
pub fn kappa_from_constants(c: ImseConstants, order: usize, d: usize, total_deriv: usize, n: usize, cap: usize) -> usize {
    if !(c.bias > 0.0) {
        return 1;
    }
    if !(c.variance > 0.0) {
        return cap.max(1);
    }
    let raw = imse_optimal_kappa(c, order, d, total_deriv, n);
    if !raw.is_finite() {
        return cap.max(1);
    }
    (raw.ceil() as usize).clamp(1, cap.max(1))
}

/// Covariates mapped to mid-ranks in `(0, 1)` (ties share their average rank).
pub(crate) fn rank_transform(sample: &Sample) -> Result<Sample> {
    let n = sample.n();
    let d = sample.d();
    let mut x = vec![0.0; n * d];
    for l in 0..d {
        let col = sample.column(l);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && col[order[j + 1]] == col[order[i]] {
                j += 1;
            }
            let rank = (i + j) as f64 / 2.0 + 0.5;
            for &o in &order[i..=j] {
                x[o * d + l] = rank / n as f64;
            }
            i = j + 1;
        }
    }
    sample.with_x(x)
}

fn working_sample(sample: &Sample, spacing: Spacing) -> Result<Sample> {
    match spacing {
        Spacing::Evenly => Ok(sample.clone()),
        Spacing::Quantile => rank_transform(sample),
    }
}

/// Exponents of all monomials of total degree `≤ degree` in `d` variables.
fn monomial_exponents(d: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(d, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, degree, &mut Vec::new(), &mut out);
    out
}

fn falling(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    ((n + 1 - k)..=n).map(|v| v as f64).product()
}

/// Dimensions `l` whose pure `m`-th derivative contributes to the bias of `∂^q`.
fn bias_dimensions(deriv: &[usize]) -> impl Iterator<Item = usize> + '_ {
    let d = deriv.len();
    (0..d).filter(move |&l| (0..d).all(|k| k == l || deriv[k] == 0))
}

struct Pilot {
    constants: ImseConstants,
}

/// Global polynomial pilot of total degree `m + 2`.
fn rot_pilot(sample: &Sample, spec: &BasisSpec) -> Option<Pilot> {
    let n = sample.n();
    let d = sample.d();
    let m = spec.order;
    let exps = monomial_exponents(d, m + 2);
    let p = exps.len();
    if n <= p {
        return None;
    }
    let ranges: Vec<(f64, f64)> = (0..d).map(|l| sample.range(l)).collect();
    let z = |x: &[f64], l: usize| (x[l] - ranges[l].0) / (ranges[l].1 - ranges[l].0);
    let mut design = DMatrix::<f64>::zeros(n, p);
    for (i, x) in sample.points().enumerate() {
        for (j, e) in exps.iter().enumerate() {
            design[(i, j)] = e.iter().enumerate().map(|(l, &a)| z(x, l).powi(a as i32)).product();
        }
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= 1e-10 * smax {
        return None;
    }
    let y = DVector::from_column_slice(sample.y());
    let coef = svd.solve(&y, 1e-12 * smax).ok()?;
    let resid = &y - &design * &coef;
    let sigma2 = resid.norm_squared() / (n - p) as f64;

    let m_fact = falling(m, m);
    let mut bias = 0.0;
    for l in bias_dimensions(&spec.deriv) {
        let q = spec.deriv[l];
        let r = ranges[l].1 - ranges[l].0;
        let mut mean_sq = 0.0;
        for x in sample.points() {
            let mut deriv = 0.0;
            for (j, e) in exps.iter().enumerate() {
                if e[l] < m {
                    continue;
                }
                let mut term = coef[j] * falling(e[l], m) / r.powi(m as i32);
                for (k, &a) in e.iter().enumerate() {
                    let power = if k == l { a - m } else { a };
                    term *= z(x, k).powi(power as i32);
                }
                deriv += term;
            }
            mean_sq += (deriv / m_fact).powi(2);
        }
        mean_sq /= n as f64;
        bias += kernel_bias(spec.family, m, q) * r.powi(2 * (m - q) as i32) * mean_sq;
    }
    let mut variance = sigma2;
    for (l, &q) in spec.deriv.iter().enumerate() {
        let r = ranges[l].1 - ranges[l].0;
        variance *= kernel_variance(spec.family, m, q) / r.powi(2 * q as i32);
    }
    Some(Pilot { constants: ImseConstants { bias, variance } })
}

fn negligible_bias(bias: f64, y: &[f64]) -> bool {
    let scale = y.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    bias <= (1e-7 * scale).powi(2)
}

/// Rule-of-thumb selector.
///
/// Fits a global polynomial of total degree `m + 2`, plugs its `m`-th
/// derivatives into the bias constant and its homoskedastic residual variance
/// into the variance constant. Quantile spacing is handled on the rank scale
/// of the covariates.
pub fn select_rot(sample: &Sample, spec: &BasisSpec, spacing: Spacing) -> Result<TuningReport> {
    check_spec(sample, spec)?;
    let work = working_sample(sample, spacing)?;
    let n = work.n();
    let d = work.d();
    let m = spec.order;
    let rate = 1.0 / (2 * m + d) as f64;
    let cap = kappa_cap(spec.family, m, d, n);
    let mut warnings = Vec::new();
    let (kappa, constants) = match rot_pilot(&work, spec) {
        Some(pilot) => {
            let mut c = pilot.constants;
            if negligible_bias(c.bias, work.y()) {
                c.bias = 0.0;
            }
            (kappa_from_constants(c, m, d, spec.total_deriv(), n, cap), c)
        }
        None => {
            let msg = "rule-of-thumb pilot is degenerate; using kappa = ceil(n^(1/(2m+d)))".to_string();
            log::warn!("{msg}");
            warnings.push(msg);
            let k = ((n as f64).powf(rate).ceil() as usize).clamp(1, cap);
            (k, ImseConstants { bias: f64::NAN, variance: f64::NAN })
        }
    };
    Ok(TuningReport {
        kappa_rot: kappa,
        kappa_dpi: None,
        bias_constant: constants.bias,
        variance_constant: constants.variance,
        rot: constants,
        dpi: None,
        rate_exponent: rate,
        kappa_cap: cap,
        warnings,
    })
}

/// Direct plug-in selector.
///
/// Starting from the ROT mesh, the `m`-th derivatives come from an order
/// `m + 1` partitioning fit, the bias constant from the estimated leading
/// bias net of its projection onto the order-`m` basis, and the variance
/// constant from the heteroskedastic sandwich with the pilot's residuals.
pub fn select_dpi(sample: &Sample, spec: &BasisSpec, spacing: Spacing) -> Result<TuningReport> {
    let mut report = select_rot(sample, spec, spacing)?;
    let work = working_sample(sample, spacing)?;
    match dpi_constants(&work, spec, report.kappa_rot) {
        Ok(mut c) => {
            if negligible_bias(c.bias, work.y()) {
                c.bias = 0.0;
            }
            let k = kappa_from_constants(c, spec.order, work.d(), spec.total_deriv(), work.n(), report.kappa_cap);
            report.kappa_dpi = Some(k);
            report.dpi = Some(c);
            report.bias_constant = c.bias;
            report.variance_constant = c.variance;
        }
        Err(e) => {
            let msg = format!("direct plug-in pilot failed ({e}); falling back to the rule-of-thumb kappa");
            log::warn!("{msg}");
            report.warnings.push(msg);
            report.kappa_dpi = Some(report.kappa_rot);
        }
    }
    Ok(report)
}

fn dpi_constants(work: &Sample, spec: &BasisSpec, kappa0: usize) -> Result<ImseConstants> {
    let n = work.n();
    let d = work.d();
    let m = spec.order;
    let q = &spec.deriv;
    let partition = make_partition(work, &vec![kappa0; d], Spacing::Evenly)?;
    let main = build_design(work, &BasisSpec::level(spec.family, m, d)?, &partition)?;
    let aux_design = build_design(work, &BasisSpec::level(spec.family, m + 1, d)?, &partition)?;
    let aux = fit_ls(aux_design, work.y())?;
    let level = vec![0; d];

    // leading bias at the sample points, level and derivative
    let mut bias_level = DVector::<f64>::zeros(n);
    let mut bias_deriv = DVector::<f64>::zeros(n);
    for (i, x) in work.points().enumerate() {
        let g0 = leading_bias_functional(aux.design(), spec.family, m, x, &level)?;
        bias_level[i] = g0.dot(aux.beta());
        bias_deriv[i] = if q == &level {
            bias_level[i]
        } else {
            leading_bias_functional(aux.design(), spec.family, m, x, q)?.dot(aux.beta())
        };
    }
    let proj = main.solve(&(main.basis().tr_mul(&bias_level) / n as f64));

    // rows of ∂^q b(x_i)'
    let deriv_rows = if q == &level {
        main.basis().clone()
    } else {
        let mut rows = DMatrix::<f64>::zeros(n, main.k());
        for (i, x) in work.points().enumerate() {
            rows.row_mut(i).copy_from(&main.row_at(x, q)?.transpose());
        }
        rows
    };
    let net_bias = &bias_deriv - &deriv_rows * &proj;
    let integrated_bias = net_bias.norm_squared() / n as f64;

    // (1/n) tr(Q⁻¹ Σ Q⁻¹ Q_q) with Σ = E_n[b b' ε²] from the pilot residuals
    let mut scaled = main.basis().clone();
    for (i, e) in aux.residuals().iter().enumerate() {
        scaled.row_mut(i).scale_mut(e.abs());
    }
    let meat = scaled.tr_mul(&scaled) / n as f64;
    let gram_q = deriv_rows.tr_mul(&deriv_rows) / n as f64;
    let qinv = main.gram_pinv();
    let trace = (qinv * meat * qinv * gram_q).trace();

    let qt = spec.total_deriv() as i32;
    let k0 = kappa0 as f64;
    Ok(ImseConstants {
        bias: integrated_bias * k0.powi(2 * (m as i32 - qt)),
        variance: trace / k0.powi(d as i32 + 2 * qt),
    })
}

fn check_spec(sample: &Sample, spec: &BasisSpec) -> Result<()> {
    if spec.dim() != sample.d() {
        return Err(Error::DimensionMismatch(format!(
            "derivative multi-index has {} entries for d={}",
            spec.dim(),
            sample.d()
        )));
    }
    Ok(())
}
