//! End-to-end estimation: tuning, main and bias-correction fits, pointwise
//! inference and an optional uniform band on an evaluation grid.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{BasisFamily, BasisSpec};
use crate::error::{Error, Result};
use crate::estimator::{build_design, fit_ls, Fit};
use crate::grid::{make_partition, quantile_sorted, Partition, Sample, Spacing};
use crate::inference::{
    band_from_terms, hc_weights, normal_quantile, score_terms, se_from_weights, BandOptions, Correction, Corrector,
    HcKind, InfluenceRow, Interval,
};
use crate::tuning::{select_dpi, select_rot, TuningReport};

/// How the number of subintervals is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum KappaChoice {
    /// One entry per dimension, or a single entry used for all of them.
    Fixed(Vec<usize>),
    Rot,
    #[default]
    Dpi,
}

/// Evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `N` sample quantiles per covariate (tensor product when `d = 2`).
    Quantile(usize),
    /// `N` evenly spaced points over each covariate's range.
    Uniform(usize),
    Points(Vec<Vec<f64>>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Quantile(50)
    }
}

/// Estimation and inference settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub family: BasisFamily,
    pub order: usize,
    /// Order of the bias-correction fit; `order + 1` when absent.
    pub order_bc: Option<usize>,
    /// Derivative multi-index; the level when absent.
    pub deriv: Option<Vec<usize>>,
    pub spacing: Spacing,
    pub kappa: KappaChoice,
    pub correction: Correction,
    /// Residual weighting; hc0 for `bc0` and hc3 otherwise when absent.
    pub hc: Option<HcKind>,
    pub alpha: f64,
    pub band: bool,
    pub num_sim: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            family: BasisFamily::BSpline,
            order: 2,
            order_bc: None,
            deriv: None,
            spacing: Spacing::Evenly,
            kappa: KappaChoice::Dpi,
            correction: Correction::PlugIn,
            hc: None,
            alpha: 0.05,
            band: false,
            num_sim: 2000,
            seed: 42,
        }
    }
}

impl FitOptions {
    pub fn order_bc(&self) -> usize {
        self.order_bc.unwrap_or(self.order + 1)
    }

    pub fn deriv_for(&self, d: usize) -> Vec<usize> {
        self.deriv.clone().unwrap_or_else(|| vec![0; d])
    }

    pub fn hc_for(&self, correction: Correction) -> HcKind {
        self.hc.unwrap_or_else(|| HcKind::default_for(correction))
    }

    pub fn band_options(&self) -> BandOptions {
        BandOptions {
            alpha: self.alpha,
            num_sim: self.num_sim,
            seed: self.seed,
            hc: self.hc_for(self.correction),
        }
    }

    pub fn basis_spec(&self, d: usize) -> Result<BasisSpec> {
        BasisSpec::new(self.family, self.order, self.deriv_for(d))
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        self.basis_spec(d)?;
        if self.correction.needs_aux() && self.order_bc() <= self.order {
            return Err(Error::InvalidArgument(format!(
                "bias-correction order {} must exceed the order {}",
                self.order_bc(),
                self.order
            )));
        }
        if self.band && self.num_sim < 100 {
            return Err(Error::InvalidArgument(format!("num_sim must be at least 100, got {}", self.num_sim)));
        }
        Ok(())
    }
}

/// Pointwise results of every available correction at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub correction: Correction,
    pub hc: HcKind,
    pub estimate: f64,
    pub se: f64,
    pub ci: Interval,
}

/// One evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: Vec<f64>,
    /// Selected correction.
    pub estimate: f64,
    pub se: f64,
    pub ci: Interval,
    pub band: Option<Interval>,
    /// All corrections that could be computed, in `bc0..bc3` order.
    pub all: Vec<PointSummary>,
}

/// Critical value and bookkeeping of a uniform band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSummary {
    pub critical_value: f64,
    pub num_sim: usize,
    pub seed: u64,
    pub excluded: Vec<usize>,
}

/// Output of [`estimate`].
#[derive(Debug, Clone)]
pub struct Estimation {
    pub n: usize,
    pub d: usize,
    pub kappa: Vec<usize>,
    pub tuning: Option<TuningReport>,
    pub options: FitOptions,
    pub deriv: Vec<usize>,
    pub hc: HcKind,
    pub k_main: usize,
    pub k_aux: Option<usize>,
    pub main: Fit,
    pub aux: Option<Fit>,
    pub rows: Vec<GridRow>,
    pub band: Option<BandSummary>,
    pub warnings: Vec<String>,
}

/// Grid points for `spec`; quantile and uniform grids are limited to `d ≤ 2`.
pub fn build_grid(sample: &Sample, spec: &GridSpec) -> Result<Vec<Vec<f64>>> {
    let d = sample.d();
    let axes: Vec<Vec<f64>> = match spec {
        GridSpec::Points(points) => {
            if points.is_empty() {
                return Err(Error::InvalidArgument("evaluation grid is empty".into()));
            }
            if let Some(p) = points.iter().find(|p| p.len() != d) {
                return Err(Error::DimensionMismatch(format!("grid point of dimension {} for d={d}", p.len())));
            }
            return Ok(points.clone());
        }
        GridSpec::Quantile(count) | GridSpec::Uniform(count) => {
            if d > 2 {
                return Err(Error::InvalidArgument(format!("built-in grids cover d <= 2; supply grid points for d={d}")));
            }
            if *count == 0 {
                return Err(Error::InvalidArgument("grid size must be positive".into()));
            }
            (0..d)
                .map(|l| {
                    let mut col = sample.column(l);
                    col.sort_by(f64::total_cmp);
                    let probs = (0..*count).map(|k| if *count == 1 { 0.5 } else { k as f64 / (*count - 1) as f64 });
                    match spec {
                        GridSpec::Quantile(_) => probs.map(|p| quantile_sorted(&col, p)).collect(),
                        _ => {
                            let (lo, hi) = (col[0], col[col.len() - 1]);
                            probs.map(|p| if p == 1.0 { hi } else { lo + p * (hi - lo) }).collect()
                        }
                    }
                })
                .collect()
        }
    };
    Ok(tensor_points(&axes))
}

fn tensor_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// Number of subintervals per dimension for `options.kappa`.
pub fn choose_kappa(sample: &Sample, options: &FitOptions) -> Result<(Vec<usize>, Option<TuningReport>)> {
    let d = sample.d();
    let spec = options.basis_spec(d)?;
    match &options.kappa {
        KappaChoice::Fixed(k) => {
            let kappa = match k.len() {
                1 => vec![k[0]; d],
                len if len == d => k.clone(),
                len => return Err(Error::DimensionMismatch(format!("{len} kappa values for d={d}"))),
            };
            Ok((kappa, None))
        }
        KappaChoice::Rot => {
            let r = select_rot(sample, &spec, options.spacing)?;
            Ok((vec![r.kappa(); d], Some(r)))
        }
        KappaChoice::Dpi => {
            let r = select_dpi(sample, &spec, options.spacing)?;
            Ok((vec![r.kappa(); d], Some(r)))
        }
    }
}

/// Main and (when a correction needs it) auxiliary fits on a common partition.
pub fn fit_pair(sample: &Sample, options: &FitOptions, partition: &Partition) -> Result<(Fit, Option<Fit>)> {
    let d = sample.d();
    let main_design = build_design(sample, &BasisSpec::level(options.family, options.order, d)?, partition)?;
    let main = fit_ls(main_design, sample.y())?;
    let aux = if options.order_bc() > options.order {
        let aux_design = build_design(sample, &BasisSpec::level(options.family, options.order_bc(), d)?, partition)?;
        Some(fit_ls(aux_design, sample.y())?)
    } else {
        None
    };
    Ok((main, aux))
}

/// Influence rows of `correction` at all grid points, as columns of `B U + B̃ V`.
pub(crate) fn influence_rows(
    corrector: &Corrector<'_>,
    grid: &[Vec<f64>],
    deriv: &[usize],
    correction: Correction,
) -> Result<Vec<InfluenceRow>> {
    let main = corrector.main().design();
    let coefs = grid
        .par_iter()
        .map(|p| corrector.coefficients(p, deriv, correction))
        .collect::<Result<Vec<_>>>()?;
    let g = grid.len();
    let mut u = DMatrix::<f64>::zeros(main.k(), g);
    for (j, c) in coefs.iter().enumerate() {
        u.set_column(j, &c.main);
    }
    let mut a = main.basis() * u;
    if let Some(aux) = corrector.aux().filter(|_| coefs.iter().any(|c| c.aux.is_some())) {
        let mut v = DMatrix::<f64>::zeros(aux.k(), g);
        for (j, c) in coefs.iter().enumerate() {
            if let Some(cv) = &c.aux {
                v.set_column(j, cv);
            }
        }
        a += aux.design().basis() * v;
    }
    Ok(grid
        .iter()
        .enumerate()
        .map(|(j, p)| InfluenceRow {
            a: a.column(j).iter().copied().collect(),
            correction,
            point: p.clone(),
            deriv: deriv.to_vec(),
        })
        .collect())
}

/// Estimates, standard errors and score terms of one correction on a grid.
pub(crate) struct CorrectionOnGrid {
    pub estimates: Vec<f64>,
    pub ses: Vec<f64>,
    pub terms: Vec<Vec<f64>>,
}

pub(crate) fn evaluate_correction(
    corrector: &Corrector<'_>,
    grid: &[Vec<f64>],
    deriv: &[usize],
    correction: Correction,
    hc: HcKind,
    with_terms: bool,
) -> Result<CorrectionOnGrid> {
    let main = corrector.main();
    let rows = influence_rows(corrector, grid, deriv, correction)?;
    let weights = hc_weights(main, hc);
    let estimates = rows.iter().map(|r| r.apply(main.y())).collect();
    let ses = rows.iter().map(|r| se_from_weights(r, main, &weights)).collect();
    let terms = if with_terms { rows.iter().map(|r| score_terms(r, main, &weights)).collect() } else { Vec::new() };
    Ok(CorrectionOnGrid { estimates, ses, terms })
}

/// Output of the fitting stage shared by [`estimate`] and group contrasts.
pub(crate) struct Prepared {
    pub kappa: Vec<usize>,
    pub tuning: Option<TuningReport>,
    pub main: Fit,
    pub aux: Option<Fit>,
    pub warnings: Vec<String>,
}

pub(crate) fn prepare(sample: &Sample, options: &FitOptions, kappa: Option<Vec<usize>>) -> Result<Prepared> {
    let d = sample.d();
    options.validate(d)?;
    let (kappa, tuning) = match kappa {
        Some(k) => (k, None),
        None => choose_kappa(sample, options)?,
    };
    let partition = make_partition(sample, &kappa, options.spacing)?;
    let (main, aux) = fit_pair(sample, options, &partition)?;
    let mut warnings: Vec<String> = tuning.as_ref().map(|t| t.warnings.clone()).unwrap_or_default();
    warnings.extend(main.design().warnings().iter().cloned());
    if let Some(a) = &aux {
        warnings.extend(a.design().warnings().iter().cloned());
    }
    Ok(Prepared { kappa, tuning, main, aux, warnings })
}

/// Fits the estimator and reports inference on `grid`.
pub fn estimate(sample: &Sample, options: &FitOptions, grid: &[Vec<f64>]) -> Result<Estimation> {
    let prepared = prepare(sample, options, None)?;
    finish(sample, options, grid, prepared)
}

/// As [`estimate`] with a given `kappa` per dimension.
pub fn estimate_with_kappa(sample: &Sample, options: &FitOptions, grid: &[Vec<f64>], kappa: Vec<usize>) -> Result<Estimation> {
    let prepared = prepare(sample, options, Some(kappa))?;
    finish(sample, options, grid, prepared)
}

fn finish(sample: &Sample, options: &FitOptions, grid: &[Vec<f64>], prepared: Prepared) -> Result<Estimation> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("evaluation grid is empty".into()));
    }
    let d = sample.d();
    let deriv = options.deriv_for(d);
    let Prepared { kappa, tuning, main, aux, mut warnings } = prepared;
    for p in grid {
        if p.len() != d {
            return Err(Error::DimensionMismatch(format!("grid point of dimension {} for d={d}", p.len())));
        }
        main.partition().locate(p)?;
    }
    let corrector = Corrector::new(&main, aux.as_ref())?;
    let z = normal_quantile(1.0 - options.alpha / 2.0);
    let selected = options.correction;
    let hc = options.hc_for(selected);

    let mut per_correction = Vec::new();
    let mut selected_terms = Vec::new();
    for correction in corrector.available() {
        let chc = options.hc_for(correction);
        let want_terms = options.band && correction == selected;
        let mut res = evaluate_correction(&corrector, grid, &deriv, correction, chc, want_terms)?;
        if want_terms {
            selected_terms = std::mem::take(&mut res.terms);
        }
        per_correction.push((correction, chc, res));
    }
    let sel = per_correction
        .iter()
        .find(|(c, _, _)| *c == selected)
        .map(|(_, _, r)| r)
        .ok_or(Error::MissingAuxFit(selected.id()))?;

    let band = if options.band {
        let core = band_from_terms(&selected_terms, &sel.ses, &options.band_options())?;
        warnings.extend(core.warnings);
        Some(BandSummary {
            critical_value: core.critical_value,
            num_sim: options.num_sim,
            seed: options.seed,
            excluded: core.excluded,
        })
    } else {
        None
    };

    let rows = grid
        .iter()
        .enumerate()
        .map(|(g, p)| {
            let all: Vec<PointSummary> = per_correction
                .iter()
                .map(|(c, chc, r)| PointSummary {
                    correction: *c,
                    hc: *chc,
                    estimate: r.estimates[g],
                    se: r.ses[g],
                    ci: Interval::around(r.estimates[g], z * r.ses[g]),
                })
                .collect();
            let (estimate, se) = (sel.estimates[g], sel.ses[g]);
            GridRow {
                point: p.clone(),
                estimate,
                se,
                ci: Interval::around(estimate, z * se),
                band: band.as_ref().map(|b| Interval::around(estimate, b.critical_value * se)),
                all,
            }
        })
        .collect();

    Ok(Estimation {
        n: sample.n(),
        d,
        kappa,
        tuning,
        options: options.clone(),
        deriv,
        hc,
        k_main: main.k(),
        k_aux: aux.as_ref().map(|a| a.k()),
        main,
        aux,
        rows,
        band,
        warnings,
    })
}
