//! Bias-corrected estimation, robust standard errors, pointwise intervals
//! and uniform confidence bands.
//!
//! Every estimator handled here is linear in the responses:
//! `μ̂_j(x) = (1/n) Σ_i a_i(x) y_i`. The vector `a(x)` ([`InfluenceRow`])
//! drives both the sandwich variance and the multiplier simulation of the
//! band's critical value.
//!
//! Corrections:
//! - `j = 0`: no correction, order-`m` fit.
//! - `j = 1`: higher-order basis, the auxiliary order-`m_bc` fit alone.
//! - `j = 2`: least squares correction; subtracts the estimated leading bias
//!   net of its projection onto the main basis.
//! - `j = 3`: plug-in correction; subtracts the estimated leading bias.

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::basis::{eval_sparse, kernel::error_kernel};
use crate::error::{Error, Result};
use crate::estimator::{Design, Fit};

/// Bias-correction strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Correction {
    Uncorrected,
    HigherOrder,
    LeastSquares,
    PlugIn,
}

impl Correction {
    pub const ALL: [Correction; 4] =
        [Correction::Uncorrected, Correction::HigherOrder, Correction::LeastSquares, Correction::PlugIn];

    pub fn id(self) -> u8 {
        match self {
            Correction::Uncorrected => 0,
            Correction::HigherOrder => 1,
            Correction::LeastSquares => 2,
            Correction::PlugIn => 3,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("bias correction must be 0..=3, got {id}")))
    }

    pub fn needs_aux(self) -> bool {
        self != Correction::Uncorrected
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bc{}", self.id())
    }
}

/// Heteroskedasticity-consistent residual weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HcKind {
    Hc0,
    Hc1,
    Hc2,
    #[default]
    Hc3,
}

impl HcKind {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(HcKind::Hc0),
            1 => Ok(HcKind::Hc1),
            2 => Ok(HcKind::Hc2),
            3 => Ok(HcKind::Hc3),
            _ => Err(Error::InvalidArgument(format!("hc kind must be 0..=3, got {id}"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            HcKind::Hc0 => 0,
            HcKind::Hc1 => 1,
            HcKind::Hc2 => 2,
            HcKind::Hc3 => 3,
        }
    }

    /// Default weighting when none is requested: hc0 for the uncorrected
    /// estimator, hc3 for the bias-corrected ones.
    pub fn default_for(correction: Correction) -> Self {
        if correction == Correction::Uncorrected {
            HcKind::Hc0
        } else {
            HcKind::Hc3
        }
    }
}

/// Largest weight handed out when a leverage reaches one.
pub const DEFAULT_WEIGHT_CAP: f64 = 1e6;

/// Weights multiplying `ε̂_i²` in the meat of the sandwich; capped at
/// [`DEFAULT_WEIGHT_CAP`].
pub fn hc_weights(fit: &Fit, kind: HcKind) -> Vec<f64> {
    hc_weights_capped(fit, kind, DEFAULT_WEIGHT_CAP).0
}

/// Weights and the number of observations whose weight hit `cap`.
pub fn hc_weights_capped(fit: &Fit, kind: HcKind, cap: f64) -> (Vec<f64>, usize) {
    let n = fit.n() as f64;
    let k = fit.k() as f64;
    let mut capped = 0;
    let weights = fit
        .leverage()
        .iter()
        .map(|&h| {
            let w = match kind {
                HcKind::Hc0 => 1.0,
                HcKind::Hc1 => {
                    if n > k {
                        n / (n - k)
                    } else {
                        f64::INFINITY
                    }
                }
                HcKind::Hc2 => 1.0 / (1.0 - h),
                HcKind::Hc3 => 1.0 / ((1.0 - h) * (1.0 - h)),
            };
            if !(w <= cap) {
                capped += 1;
                cap
            } else {
                w
            }
        })
        .collect();
    if capped > 0 {
        log::warn!("{capped} heteroskedasticity weights capped at {cap}");
    }
    (weights, capped)
}

fn falling(n: usize, k: usize) -> f64 {
    ((n + 1 - k)..=n).map(|v| v as f64).product()
}

/// Vector `g` such that the estimated leading bias of the order-`main_order`
/// estimator of `∂^q μ(x)` equals `g'β̃`, where `β̃` are the coefficients of a
/// fit on `aux` (same partition, higher order).
pub(crate) fn leading_bias_functional(
    aux: &Design,
    main_family: crate::basis::BasisFamily,
    main_order: usize,
    point: &[f64],
    deriv: &[usize],
) -> Result<DVector<f64>> {
    let partition = aux.partition();
    let d = partition.dim();
    let cell = partition.locate(point)?;
    let kernel = error_kernel(main_family, main_order);
    let m = main_order;
    let mut g = DVector::<f64>::zeros(aux.k());
    for l in 0..d {
        // the kernel only varies along dimension l, so other directions must be underived
        if (0..d).any(|k| k != l && deriv[k] > 0) {
            continue;
        }
        let q = deriv[l];
        let lo = partition.knots(l)[cell[l]];
        let h = partition.width(l, cell[l]);
        let t = (point[l] - lo) / h;
        let e = kernel.nth_derivative(q).eval(t);
        let coef = -h.powi((m - q) as i32) * e / falling(m, m);
        if coef == 0.0 {
            continue;
        }
        let mut pure = vec![0; d];
        pure[l] = m;
        let row = eval_sparse(aux.spec().family, partition, aux.spec().order, &pure, point)?;
        for (&i, &v) in row.idx.iter().zip(&row.val) {
            g[i] += coef * v;
        }
    }
    Ok(g)
}

fn check_pair(main: &Fit, aux: &Fit) -> Result<()> {
    if main.partition() != aux.partition() {
        return Err(Error::PartitionMismatch);
    }
    if aux.spec().order <= main.spec().order {
        return Err(Error::InvalidArgument(format!(
            "auxiliary order {} must exceed the main order {}",
            aux.spec().order,
            main.spec().order
        )));
    }
    if main.n() != aux.n() {
        return Err(Error::DimensionMismatch("main and auxiliary fits use different samples".into()));
    }
    Ok(())
}

fn check_deriv(main: &Fit, deriv: &[usize]) -> Result<()> {
    let total: usize = deriv.iter().sum();
    if deriv.len() != main.partition().dim() {
        return Err(Error::DimensionMismatch(format!(
            "derivative multi-index of length {} for d={}",
            deriv.len(),
            main.partition().dim()
        )));
    }
    if total >= main.spec().order {
        return Err(Error::DerivativeOrder { deriv: total, order: main.spec().order });
    }
    Ok(())
}

/// Estimated leading smoothing bias `B̂_{m,q}(x)` of the order-`m` estimator,
/// with the `m`-th derivatives taken from `aux`.
pub fn estimate_leading_bias(main: &Fit, aux: &Fit, point: &[f64], deriv: &[usize]) -> Result<f64> {
    check_pair(main, aux)?;
    check_deriv(main, deriv)?;
    let g = leading_bias_functional(aux.design(), main.spec().family, main.spec().order, point, deriv)?;
    Ok(g.dot(aux.beta()))
}

/// Linear representation `μ̂_j(x) = (1/n) Σ a_i y_i` of an estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceRow {
    pub a: Vec<f64>,
    pub correction: Correction,
    pub point: Vec<f64>,
    pub deriv: Vec<usize>,
}

impl InfluenceRow {
    /// `(1/n) Σ a_i y_i`.
    pub fn apply(&self, y: &[f64]) -> f64 {
        let s: f64 = self.a.iter().zip(y).map(|(a, y)| a * y).sum();
        s / self.a.len() as f64
    }
}

/// Builds influence rows for a main fit and an optional auxiliary fit.
///
/// Precomputes the projection of the estimated approximation errors onto the
/// main basis, shared by all least squares corrected rows.
#[derive(Debug)]
pub struct Corrector<'a> {
    main: &'a Fit,
    aux: Option<&'a Fit>,
    // (1/n) Σ_k b(x_k) g_0(x_k)'
    ls_cross: Option<DMatrix<f64>>,
}

impl<'a> Corrector<'a> {
    pub fn new(main: &'a Fit, aux: Option<&'a Fit>) -> Result<Self> {
        let ls_cross = match aux {
            Some(aux) => {
                check_pair(main, aux)?;
                Some(ls_cross_moment(main, aux)?)
            }
            None => None,
        };
        Ok(Self { main, aux, ls_cross })
    }

    pub fn main(&self) -> &Fit {
        self.main
    }

    pub fn aux(&self) -> Option<&Fit> {
        self.aux
    }

    pub fn available(&self) -> Vec<Correction> {
        if self.aux.is_some() {
            Correction::ALL.to_vec()
        } else {
            vec![Correction::Uncorrected]
        }
    }

    /// Influence row of correction `j` at `point`.
    pub fn row(&self, point: &[f64], deriv: &[usize], correction: Correction) -> Result<InfluenceRow> {
        let c = self.coefficients(point, deriv, correction)?;
        let mut a = self.main.design().basis() * &c.main;
        if let Some(aux_part) = &c.aux {
            a += self.aux.expect("aux coefficients imply an aux fit").design().basis() * aux_part;
        }
        Ok(InfluenceRow {
            a: a.iter().copied().collect(),
            correction,
            point: point.to_vec(),
            deriv: deriv.to_vec(),
        })
    }

    /// Coefficients `(u, v)` with `a = B u + B̃ v`, `B`/`B̃` the main and
    /// auxiliary bases at the sample points.
    pub fn coefficients(&self, point: &[f64], deriv: &[usize], correction: Correction) -> Result<RowCoefficients> {
        check_deriv(self.main, deriv)?;
        let main = self.main.design();
        let zeros = || DVector::<f64>::zeros(main.k());
        Ok(match correction {
            Correction::Uncorrected => RowCoefficients { main: main.solve(&main.row_at(point, deriv)?), aux: None },
            Correction::HigherOrder => {
                let aux = self.aux.ok_or(Error::MissingAuxFit(1))?.design();
                RowCoefficients { main: zeros(), aux: Some(aux.solve(&aux.row_at(point, deriv)?)) }
            }
            Correction::LeastSquares | Correction::PlugIn => {
                let aux = self.aux.ok_or(Error::MissingAuxFit(correction.id()))?.design();
                let u0 = main.solve(&main.row_at(point, deriv)?);
                let mut g = leading_bias_functional(aux, main.spec().family, main.spec().order, point, deriv)?;
                if correction == Correction::LeastSquares {
                    let cross = self.ls_cross.as_ref().expect("cross moment exists with aux");
                    g -= cross.tr_mul(&u0);
                }
                RowCoefficients { main: u0, aux: Some(-aux.solve(&g)) }
            }
        })
    }
}

/// Coefficient form of an influence row: `a = B main + B̃ aux`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowCoefficients {
    pub main: DVector<f64>,
    pub aux: Option<DVector<f64>>,
}

fn ls_cross_moment(main: &Fit, aux: &Fit) -> Result<DMatrix<f64>> {
    let n = main.n();
    let aux_design = aux.design();
    let level = vec![0; main.partition().dim()];
    let mut g0 = DMatrix::<f64>::zeros(n, aux_design.k());
    for (i, point) in aux.points().enumerate() {
        let g = leading_bias_functional(aux_design, main.spec().family, main.spec().order, point, &level)?;
        g0.row_mut(i).copy_from(&g.transpose());
    }
    Ok(main.design().basis().tr_mul(&g0) / n as f64)
}

/// Influence row of correction `j` (convenience wrapper around [`Corrector`]).
pub fn influence_row(
    main: &Fit,
    aux: Option<&Fit>,
    point: &[f64],
    deriv: &[usize],
    correction: Correction,
) -> Result<InfluenceRow> {
    if correction.needs_aux() && aux.is_none() {
        return Err(Error::MissingAuxFit(correction.id()));
    }
    Corrector::new(main, aux)?.row(point, deriv, correction)
}

/// Per-observation standardized contributions `a_i sqrt(w_i) ε̂_i / n`.
pub fn score_terms(row: &InfluenceRow, main: &Fit, weights: &[f64]) -> Vec<f64> {
    let n = main.n() as f64;
    row.a
        .iter()
        .zip(weights)
        .zip(main.residuals())
        .map(|((a, w), e)| a * w.sqrt() * e / n)
        .collect()
}

/// Sandwich standard error `sqrt((1/n²) Σ a_i² w_i ε̂_i²)` with main-fit residuals.
pub fn point_se(row: &InfluenceRow, main: &Fit, kind: HcKind) -> f64 {
    se_from_weights(row, main, &hc_weights(main, kind))
}

pub(crate) fn se_from_weights(row: &InfluenceRow, main: &Fit, weights: &[f64]) -> f64 {
    let n = main.n() as f64;
    let s: f64 = row
        .a
        .iter()
        .zip(weights)
        .zip(main.residuals())
        .map(|((a, w), e)| a * a * w * e * e)
        .sum();
    s.sqrt() / n
}

/// Closed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn around(center: f64, half_width: f64) -> Self {
        Self { lo: center - half_width, hi: center + half_width }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Estimate, standard error and interval of one correction.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedEstimate {
    pub correction: Correction,
    pub estimate: f64,
    pub se: f64,
    pub ci: Interval,
}

/// Pointwise inference at one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointInference {
    pub point: Vec<f64>,
    pub alpha: f64,
    pub entries: Vec<CorrectedEstimate>,
}

impl PointInference {
    pub fn get(&self, correction: Correction) -> Option<&CorrectedEstimate> {
        self.entries.iter().find(|e| e.correction == correction)
    }
}

/// Intervals `estimate ± z_{1-α/2} se` for each `(correction, estimate, se)`.
pub fn pointwise_ci(point: &[f64], inputs: &[(Correction, f64, f64)], alpha: f64) -> Result<PointInference> {
    check_alpha(alpha)?;
    let z = normal_quantile(1.0 - alpha / 2.0);
    let entries = inputs
        .iter()
        .map(|&(correction, estimate, se)| CorrectedEstimate {
            correction,
            estimate,
            se,
            ci: Interval::around(estimate, z * se),
        })
        .collect();
    Ok(PointInference { point: point.to_vec(), alpha, entries })
}

/// Options of the multiplier simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandOptions {
    pub alpha: f64,
    pub num_sim: usize,
    pub seed: u64,
    pub hc: HcKind,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self { alpha: 0.05, num_sim: 2000, seed: 42, hc: HcKind::Hc3 }
    }
}

/// Uniform confidence band over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandResult {
    pub grid: Vec<Vec<f64>>,
    pub estimates: Vec<f64>,
    pub ses: Vec<f64>,
    pub critical_value: f64,
    pub band: Vec<Interval>,
    pub alpha: f64,
    pub num_sim: usize,
    pub seed: u64,
    /// Grid indices left out of the supremum because their standard error is zero.
    pub excluded: Vec<usize>,
    pub warnings: Vec<String>,
}

const SIM_BLOCK: usize = 256;

/// Multiplier draws for replicate `rep`: an independent ChaCha stream keyed
/// by `(seed, rep)`.
pub(crate) fn fill_multipliers(seed: u64, rep: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    for v in out.iter_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
}

/// Simulates `max_{g ∈ block} |Σ_i c_{g,i} ω_i|` for each row block of
/// `coeffs` (grid points × observations), sharing the multipliers `ω`
/// across blocks. Returns one draw vector per block, in replicate order.
pub fn simulate_suprema(coeffs: &DMatrix<f64>, blocks: &[Range<usize>], num_sim: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = coeffs.ncols();
    let mut draws = vec![Vec::with_capacity(num_sim); blocks.len()];
    let mut start = 0;
    while start < num_sim {
        let width = SIM_BLOCK.min(num_sim - start);
        let mut omega = DMatrix::<f64>::zeros(n, width);
        omega
            .as_mut_slice()
            .par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(col, chunk)| fill_multipliers(seed, start + col, chunk));
        let projected = coeffs * &omega;
        for (b, range) in blocks.iter().enumerate() {
            for s in 0..width {
                let z = range.clone().fold(0.0f64, |acc, g| acc.max(projected[(g, s)].abs()));
                draws[b].push(z);
            }
        }
        start += width;
    }
    draws
}

/// Empirical `level` quantile (inverse-CDF definition) of `draws`.
pub fn empirical_quantile(draws: &[f64], level: f64) -> f64 {
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let s = sorted.len();
    if s == 0 {
        return f64::NAN;
    }
    let rank = (level * s as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(s) - 1]
}

/// Uniform band for the estimators described by `rows`.
///
/// The critical value is the `1 - α` quantile over `num_sim` replicates of
/// `max_x |Σ_i a_i(x) sqrt(w_i) ε̂_i ω_i| / (n se(x))` with standard normal
/// multipliers `ω`. Grid points with zero standard error are dropped from
/// the supremum.
pub fn uniform_band(rows: &[InfluenceRow], main: &Fit, opts: &BandOptions) -> Result<BandResult> {
    check_alpha(opts.alpha)?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument("uniform band needs a non-empty grid".into()));
    }
    if opts.num_sim < 100 {
        return Err(Error::InvalidArgument(format!("num_sim must be at least 100, got {}", opts.num_sim)));
    }
    let weights = hc_weights(main, opts.hc);
    let estimates: Vec<f64> = rows.iter().map(|r| r.apply(main.y())).collect();
    let ses: Vec<f64> = rows.iter().map(|r| se_from_weights(r, main, &weights)).collect();
    let terms: Vec<Vec<f64>> = rows.iter().map(|r| score_terms(r, main, &weights)).collect();
    let band_core = band_from_terms(&terms, &ses, opts)?;
    let band = estimates
        .iter()
        .zip(&ses)
        .map(|(&e, &s)| Interval::around(e, band_core.critical_value * s))
        .collect();
    Ok(BandResult {
        grid: rows.iter().map(|r| r.point.clone()).collect(),
        estimates,
        ses,
        critical_value: band_core.critical_value,
        band,
        alpha: opts.alpha,
        num_sim: opts.num_sim,
        seed: opts.seed,
        excluded: band_core.excluded,
        warnings: band_core.warnings,
    })
}

pub(crate) struct BandCore {
    pub critical_value: f64,
    pub excluded: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Critical value from per-point score terms and standard errors.
pub(crate) fn band_from_terms(terms: &[Vec<f64>], ses: &[f64], opts: &BandOptions) -> Result<BandCore> {
    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for (g, &se) in ses.iter().enumerate() {
        if se > 0.0 && se.is_finite() {
            kept.push(g);
        } else {
            excluded.push(g);
        }
    }
    let mut warnings = Vec::new();
    if !excluded.is_empty() {
        let msg = format!("{} grid point(s) with zero standard error excluded from the band supremum", excluded.len());
        log::warn!("{msg}");
        warnings.push(msg);
    }
    if kept.is_empty() {
        return Ok(BandCore { critical_value: 0.0, excluded, warnings });
    }
    let n = terms[kept[0]].len();
    let mut coeffs = DMatrix::<f64>::zeros(kept.len(), n);
    for (r, &g) in kept.iter().enumerate() {
        for (i, &t) in terms[g].iter().enumerate() {
            coeffs[(r, i)] = t / ses[g];
        }
    }
    let draws = simulate_suprema(&coeffs, &[0..kept.len()], opts.num_sim, opts.seed);
    let critical_value = empirical_quantile(&draws[0], 1.0 - opts.alpha);
    Ok(BandCore { critical_value, excluded, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, BasisSpec};
    use crate::estimator::fit_sample;
    use crate::grid::{make_partition, Partition, Sample, Spacing};

    fn grid_sample(n: usize, f: impl Fn(f64) -> f64) -> Sample {
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.754_877_666) % 1.0).collect();
        let y = x.iter().enumerate().map(|(i, &v)| f(v) + 0.1 * ((i * 7919) % 13) as f64 / 13.0).collect();
        Sample::univariate(x, y).unwrap()
    }

    #[test]
    fn hc_closed_forms() {
        let s = grid_sample(100, |x| x);
        let p = make_partition(&s, &[9], Spacing::Evenly).unwrap();
        let fit = fit_sample(&s, &BasisSpec::level(BasisFamily::PiecewisePoly, 1, 1).unwrap(), &p).unwrap();
        assert!(hc_weights(&fit, HcKind::Hc0).iter().all(|&w| w == 1.0));
        let fit10 = {
            let p = make_partition(&s, &[10], Spacing::Evenly).unwrap();
            fit_sample(&s, &BasisSpec::level(BasisFamily::PiecewisePoly, 1, 1).unwrap(), &p).unwrap()
        };
        assert!(hc_weights(&fit10, HcKind::Hc1).iter().all(|&w| (w - 100.0 / 90.0).abs() < 1e-15));
    }

    #[test]
    fn hc2_balanced_cells() {
        // 4 cells with exactly 5 observations each
        let x: Vec<f64> = (0..20).map(|i| (i / 5) as f64 * 0.25 + 0.01 + 0.04 * (i % 5) as f64).collect();
        let s = Sample::univariate(x, (0..20).map(|i| i as f64).collect()).unwrap();
        let p = Partition::from_knots(vec![vec![0.0, 0.25, 0.5, 0.75, 1.0]], Spacing::Evenly).unwrap();
        let fit = fit_sample(&s, &BasisSpec::level(BasisFamily::PiecewisePoly, 1, 1).unwrap(), &p).unwrap();
        for w in hc_weights(&fit, HcKind::Hc2) {
            assert!((w - 5.0 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_cap_applies_at_unit_leverage() {
        // one isolated observation in its own cell has leverage one
        let x = vec![0.1, 0.2, 0.3, 0.35, 0.9];
        let s = Sample::univariate(x, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let p = Partition::from_knots(vec![vec![0.1, 0.5, 0.9]], Spacing::Evenly).unwrap();
        let fit = fit_sample(&s, &BasisSpec::level(BasisFamily::PiecewisePoly, 1, 1).unwrap(), &p).unwrap();
        let (w, capped) = hc_weights_capped(&fit, HcKind::Hc3, DEFAULT_WEIGHT_CAP);
        assert_eq!(capped, 1);
        assert_eq!(w[4], DEFAULT_WEIGHT_CAP);
    }

    #[test]
    fn uncorrected_row_reproduces_prediction() {
        let s = grid_sample(120, |x| (3.0 * x).sin());
        let p = make_partition(&s, &[4], Spacing::Evenly).unwrap();
        let fit = fit_sample(&s, &BasisSpec::level(BasisFamily::BSpline, 3, 1).unwrap(), &p).unwrap();
        let (_, hi) = s.range(0);
        for x in [0.0, 0.33, 0.5, hi] {
            for q in 0..3 {
                let row = influence_row(&fit, None, &[x], &[q], Correction::Uncorrected).unwrap();
                let want = fit.predict(&[x], &[q]).unwrap();
                assert!((row.apply(s.y()) - want).abs() < 1e-12 * want.abs().max(1.0));
            }
        }
        assert!(matches!(
            influence_row(&fit, None, &[0.5], &[0], Correction::PlugIn),
            Err(Error::MissingAuxFit(3))
        ));
    }

    #[test]
    fn leading_bias_vanishes_for_low_degree_and_flips_sign() {
        let s = grid_sample(200, |x| 1.0 + 2.0 * x);
        let p = make_partition(&s, &[5], Spacing::Evenly).unwrap();
        let main = fit_sample(&s, &BasisSpec::level(BasisFamily::BSpline, 2, 1).unwrap(), &p).unwrap();
        let clean = s.with_y(s.points().map(|x| 1.0 + 2.0 * x[0]).collect()).unwrap();
        let aux = fit_sample(&clean, &BasisSpec::level(BasisFamily::BSpline, 3, 1).unwrap(), &p).unwrap();
        assert!(estimate_leading_bias(&main, &aux, &[0.41], &[0]).unwrap().abs() < 1e-9);

        let curved = s.with_y(s.points().map(|x| (4.0 * x[0]).cos()).collect()).unwrap();
        let flipped = s.with_y(s.points().map(|x| -(4.0 * x[0]).cos()).collect()).unwrap();
        let spec3 = BasisSpec::level(BasisFamily::BSpline, 3, 1).unwrap();
        let a = fit_sample(&curved, &spec3, &p).unwrap();
        let b = fit_sample(&flipped, &spec3, &p).unwrap();
        let ba = estimate_leading_bias(&main, &a, &[0.41], &[0]).unwrap();
        let bb = estimate_leading_bias(&main, &b, &[0.41], &[0]).unwrap();
        assert!(ba != 0.0 && (ba + bb).abs() < 1e-12 * ba.abs().max(1.0));

        // aux must be of higher order, on the same partition
        assert!(estimate_leading_bias(&main, &main, &[0.41], &[0]).is_err());
        let other = make_partition(&s, &[4], Spacing::Evenly).unwrap();
        let aux_other = fit_sample(&curved, &spec3, &other).unwrap();
        assert!(matches!(estimate_leading_bias(&main, &aux_other, &[0.4], &[0]), Err(Error::PartitionMismatch)));
        assert!(matches!(estimate_leading_bias(&main, &a, &[0.4], &[2]), Err(Error::DerivativeOrder { .. })));
    }

    #[test]
    fn se_zero_residuals_and_homogeneity() {
        let s = grid_sample(80, |x| x * x);
        let p = make_partition(&s, &[3], Spacing::Evenly).unwrap();
        let spec = BasisSpec::level(BasisFamily::BSpline, 2, 1).unwrap();
        let exact = s.with_y(s.points().map(|x| 2.0 - x[0]).collect()).unwrap();
        let fit = fit_sample(&exact, &spec, &p).unwrap();
        let row = influence_row(&fit, None, &[0.3], &[0], Correction::Uncorrected).unwrap();
        assert!(point_se(&row, &fit, HcKind::Hc3) < 1e-12);

        let fit = fit_sample(&s, &spec, &p).unwrap();
        let scaled = s.with_y(s.y().iter().map(|v| -3.0 * v).collect()).unwrap();
        let fit3 = fit_sample(&scaled, &spec, &p).unwrap();
        let row = influence_row(&fit, None, &[0.3], &[0], Correction::Uncorrected).unwrap();
        let se1 = point_se(&row, &fit, HcKind::Hc0);
        let se3 = point_se(&row, &fit3, HcKind::Hc0);
        assert!((se3 - 3.0 * se1).abs() < 1e-12 * se3);
    }

    #[test]
    fn pointwise_intervals() {
        let pi = pointwise_ci(&[0.5], &[(Correction::Uncorrected, 1.0, 0.5), (Correction::PlugIn, 2.0, 0.0)], 0.05).unwrap();
        let e = pi.get(Correction::Uncorrected).unwrap();
        assert!((e.ci.width() / 2.0 - 1.959_964 * 0.5).abs() < 1e-6);
        let z = pi.get(Correction::PlugIn).unwrap();
        assert_eq!((z.ci.lo, z.ci.hi), (2.0, 2.0));
        let wide = pointwise_ci(&[0.5], &[(Correction::Uncorrected, 1.0, 0.5)], 0.01).unwrap();
        let w = wide.entries[0].ci;
        assert!(w.lo <= e.ci.lo && e.ci.hi <= w.hi);
        assert!(matches!(pointwise_ci(&[0.5], &[], 1.0), Err(Error::InvalidAlpha(_))));
        assert!(matches!(pointwise_ci(&[0.5], &[], 0.0), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn quantile_definition() {
        let draws: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(empirical_quantile(&draws, 0.95), 95.0);
        assert_eq!(empirical_quantile(&draws, 0.001), 1.0);
        assert_eq!(empirical_quantile(&draws, 1.0), 100.0);
    }

    #[test]
    fn multipliers_are_keyed_by_replicate() {
        let mut a = vec![0.0; 5];
        let mut b = vec![0.0; 5];
        fill_multipliers(7, 3, &mut a);
        fill_multipliers(7, 3, &mut b);
        assert_eq!(a, b);
        fill_multipliers(7, 4, &mut b);
        assert_ne!(a, b);
    }
}
