//! Monte Carlo coverage study of pointwise intervals and uniform bands.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dgp::DgpSpec;
use super::oracle::fd_partial;
use crate::error::{Error, Result};
use crate::inference::{empirical_quantile, normal_quantile, simulate_suprema, Correction, Corrector, HcKind};
use crate::pipeline::{evaluate_correction, prepare, FitOptions};

/// Settings of a coverage study.
#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub dgp: DgpSpec,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Estimation settings; `correction` is ignored since every available
    /// correction is evaluated on the same draws.
    pub options: FitOptions,
    pub grid: Vec<Vec<f64>>,
}

impl CoverageConfig {
    pub fn new(dgp: DgpSpec, n: usize, reps: usize, seed: u64, options: FitOptions) -> Self {
        let grid = default_grid(dgp.d);
        Self { dgp, n, reps, seed, options, grid }
    }
}

/// `linspace(0.05, 0.95, 19)` for one covariate, a `9 × 9` tensor grid on
/// `[0.1, 0.9]²` for two.
pub fn default_grid(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => (0..19).map(|k| vec![0.05 + 0.05 * k as f64]).collect(),
        _ => {
            let axis: Vec<f64> = (0..9).map(|k| 0.1 + 0.1 * k as f64).collect();
            let mut out = vec![Vec::new()];
            for _ in 0..d {
                out = out
                    .iter()
                    .flat_map(|p: &Vec<f64>| {
                        axis.iter().map(move |&v| {
                            let mut q = p.clone();
                            q.push(v);
                            q
                        })
                    })
                    .collect();
            }
            out
        }
    }
}

/// Coverage of one correction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub correction: Correction,
    pub hc: HcKind,
    /// Share of replications whose interval covers the truth, per grid point.
    pub pointwise: Vec<f64>,
    /// Share of replications whose band covers the truth at every grid point.
    pub band: f64,
    pub mean_ci_width: Vec<f64>,
    pub mean_band_width: f64,
}

/// Result of [`run_coverage`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub dgp: String,
    pub n: usize,
    pub reps: usize,
    /// Replications that produced a fit (failures are skipped).
    pub completed: usize,
    pub seed: u64,
    pub alpha: f64,
    pub grid: Vec<Vec<f64>>,
    /// Index of the grid point closest to the middle of the grid.
    pub median_index: usize,
    pub mean_kappa: f64,
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn row(&self, correction: Correction) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.correction == correction)
    }
}

struct RepOutcome {
    kappa: f64,
    // per correction: (covered per point, band covered, ci widths, band width)
    per: Vec<(Correction, Vec<bool>, bool, Vec<f64>, f64)>,
}

fn replicate_seed(seed: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1u64 << 63) | rep as u64);
    rng.next_u64()
}

fn truth(cfg: &CoverageConfig, deriv: &[usize]) -> Vec<f64> {
    let mean = cfg.dgp.mean;
    let f = move |p: &[f64]| mean(p);
    let order: usize = deriv.iter().sum();
    let step = [0.0, 1e-5, 1e-4, 1e-3][order.min(3)];
    cfg.grid.iter().map(|p| fd_partial(&f, p, deriv, step)).collect()
}

fn one_rep(cfg: &CoverageConfig, rep: usize, truth: &[f64]) -> Result<RepOutcome> {
    let sample = cfg.dgp.draw(cfg.n, cfg.seed, rep as u64);
    let d = sample.d();
    let opts = &cfg.options;
    let deriv = opts.deriv_for(d);
    let prepared = prepare(&sample, opts, None)?;
    let corrector = Corrector::new(&prepared.main, prepared.aux.as_ref())?;
    let z = normal_quantile(1.0 - opts.alpha / 2.0);
    let g = cfg.grid.len();

    let corrections = corrector.available();
    let mut evaluated = Vec::new();
    for &c in &corrections {
        evaluated.push(evaluate_correction(&corrector, &cfg.grid, &deriv, c, opts.hc_for(c), true)?);
    }
    let mut coeffs = DMatrix::<f64>::zeros(g * corrections.len(), sample.n());
    let mut blocks: Vec<Range<usize>> = Vec::new();
    for (b, res) in evaluated.iter().enumerate() {
        for k in 0..g {
            if res.ses[k] > 0.0 {
                for (i, t) in res.terms[k].iter().enumerate() {
                    coeffs[(b * g + k, i)] = t / res.ses[k];
                }
            }
        }
        blocks.push(b * g..(b + 1) * g);
    }
    let draws = simulate_suprema(&coeffs, &blocks, opts.num_sim, replicate_seed(cfg.seed, rep));

    let per = corrections
        .iter()
        .zip(&evaluated)
        .zip(&draws)
        .map(|((&c, res), sims)| {
            let cv = empirical_quantile(sims, 1.0 - opts.alpha);
            let covered: Vec<bool> = (0..g).map(|k| (res.estimates[k] - truth[k]).abs() <= z * res.ses[k]).collect();
            let band = (0..g).all(|k| (res.estimates[k] - truth[k]).abs() <= cv * res.ses[k]);
            let widths = res.ses.iter().map(|s| 2.0 * z * s).collect();
            let band_width = res.ses.iter().map(|s| 2.0 * cv * s).sum::<f64>() / g as f64;
            (c, covered, band, widths, band_width)
        })
        .collect();
    Ok(RepOutcome { kappa: prepared.kappa[0] as f64, per })
}

/// Runs the study; replications are independent and run in parallel, and
/// the report depends only on the configuration.
pub fn run_coverage(cfg: &CoverageConfig) -> Result<CoverageReport> {
    if cfg.reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    if cfg.grid.is_empty() {
        return Err(Error::InvalidArgument("coverage grid is empty".into()));
    }
    if cfg.options.num_sim < 100 {
        return Err(Error::InvalidArgument(format!("num_sim must be at least 100, got {}", cfg.options.num_sim)));
    }
    let deriv = cfg.options.deriv_for(cfg.dgp.d);
    let truth = truth(cfg, &deriv);
    let outcomes: Vec<Option<RepOutcome>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| match one_rep(cfg, rep, &truth) {
            Ok(o) => Some(o),
            Err(e) => {
                log::warn!("replication {rep} skipped: {e}");
                None
            }
        })
        .collect();
    let done: Vec<&RepOutcome> = outcomes.iter().flatten().collect();
    if done.is_empty() {
        return Err(Error::Numerical("no replication produced a fit".into()));
    }
    let g = cfg.grid.len();
    let count = done.len() as f64;
    let corrections: Vec<Correction> = done[0].per.iter().map(|p| p.0).collect();
    let rows = corrections
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let mut pointwise = vec![0.0; g];
            let mut widths = vec![0.0; g];
            let mut band = 0.0;
            let mut band_width = 0.0;
            for o in &done {
                let (_, covered, b, w, bw) = &o.per[j];
                for k in 0..g {
                    pointwise[k] += covered[k] as u8 as f64;
                    widths[k] += w[k];
                }
                band += *b as u8 as f64;
                band_width += bw;
            }
            CoverageRow {
                correction: c,
                hc: cfg.options.hc_for(c),
                pointwise: pointwise.iter().map(|v| v / count).collect(),
                band: band / count,
                mean_ci_width: widths.iter().map(|v| v / count).collect(),
                mean_band_width: band_width / count,
            }
        })
        .collect();
    Ok(CoverageReport {
        dgp: cfg.dgp.id.to_string(),
        n: cfg.n,
        reps: cfg.reps,
        completed: done.len(),
        seed: cfg.seed,
        alpha: cfg.options.alpha,
        grid: cfg.grid.clone(),
        median_index: g / 2,
        mean_kappa: done.iter().map(|o| o.kappa).sum::<f64>() / count,
        rows,
    })
}
