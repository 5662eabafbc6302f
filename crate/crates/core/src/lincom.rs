//! Linear combinations `θ(x) = Σ_g w_g μ_g(x)` of regression functions
//! estimated on independent groups.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{quantile_sorted, Sample};
use crate::inference::{band_from_terms, normal_quantile, Corrector, Interval};
use crate::pipeline::{evaluate_correction, prepare, BandSummary, FitOptions, GridSpec};
use crate::tuning::TuningReport;

/// One group: a label, its sample and its weight.
#[derive(Debug, Clone)]
pub struct Group {
    pub label: String,
    pub sample: Sample,
    pub weight: f64,
}

/// Groups and shared settings of a linear combination.
#[derive(Debug, Clone)]
pub struct LincomSpec {
    pub groups: Vec<Group>,
    /// Use one `kappa` (the largest per-group choice) for every group.
    pub shared_kappa: bool,
}

impl LincomSpec {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        let spec = Self { groups, shared_kappa: false };
        spec.validate()?;
        Ok(spec)
    }

    /// Splits a labelled sample into groups; labels absent from `weights` are dropped.
    pub fn from_labels(sample: &Sample, labels: &[String], weights: &BTreeMap<String, f64>) -> Result<Self> {
        if labels.len() != sample.n() {
            return Err(Error::DimensionMismatch(format!("{} labels for {} rows", labels.len(), sample.n())));
        }
        let mut groups = Vec::new();
        for (label, &weight) in weights {
            let rows: Vec<usize> = (0..sample.n()).filter(|&i| &labels[i] == label).collect();
            if rows.is_empty() {
                return Err(Error::InvalidArgument(format!("group '{label}' has no observations")));
            }
            let y = rows.iter().map(|&i| sample.y()[i]).collect();
            let x = rows.iter().flat_map(|&i| sample.point(i).to_vec()).collect();
            groups.push(Group { label: label.clone(), sample: Sample::from_flat(y, x, sample.d())?, weight });
        }
        Self::new(groups)
    }

    fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidArgument("a linear combination needs at least one group".into()));
        }
        if self.groups.iter().all(|g| g.weight == 0.0) || self.groups.iter().any(|g| !g.weight.is_finite()) {
            return Err(Error::InvalidArgument("group weights must be finite and not all zero".into()));
        }
        let d = self.groups[0].sample.d();
        if self.groups.iter().any(|g| g.sample.d() != d) {
            return Err(Error::DimensionMismatch("groups have different numbers of covariates".into()));
        }
        let mut labels: Vec<&str> = self.groups.iter().map(|g| g.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("group labels must be unique".into()));
        }
        Ok(())
    }

    fn sorted(&self) -> Vec<&Group> {
        let mut g: Vec<&Group> = self.groups.iter().collect();
        g.sort_by(|a, b| a.label.cmp(&b.label));
        g
    }

    /// Box on which every group's covariates are observed.
    pub fn common_support(&self) -> Vec<(f64, f64)> {
        let d = self.groups[0].sample.d();
        (0..d)
            .map(|l| {
                self.groups.iter().map(|g| g.sample.range(l)).fold((f64::NEG_INFINITY, f64::INFINITY), |acc, r| {
                    (acc.0.max(r.0), acc.1.min(r.1))
                })
            })
            .collect()
    }

    /// Evaluation grid inside the common support; quantile grids use the
    /// pooled covariates that fall inside it.
    pub fn grid(&self, spec: &GridSpec) -> Result<Vec<Vec<f64>>> {
        let support = self.common_support();
        if support.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument("groups have no common covariate support".into()));
        }
        let d = support.len();
        match spec {
            GridSpec::Points(points) => Ok(points.clone()),
            GridSpec::Quantile(count) | GridSpec::Uniform(count) => {
                if d > 2 {
                    return Err(Error::InvalidArgument(format!("built-in grids cover d <= 2; supply grid points for d={d}")));
                }
                let count = *count;
                if count == 0 {
                    return Err(Error::InvalidArgument("grid size must be positive".into()));
                }
                let probs: Vec<f64> =
                    (0..count).map(|k| if count == 1 { 0.5 } else { k as f64 / (count - 1) as f64 }).collect();
                let axes: Vec<Vec<f64>> = (0..d)
                    .map(|l| {
                        let (lo, hi) = support[l];
                        match spec {
                            GridSpec::Quantile(_) => {
                                let mut pooled: Vec<f64> = self
                                    .groups
                                    .iter()
                                    .flat_map(|g| g.sample.column(l))
                                    .filter(|v| *v >= lo && *v <= hi)
                                    .collect();
                                pooled.sort_by(f64::total_cmp);
                                probs.iter().map(|&p| quantile_sorted(&pooled, p)).collect()
                            }
                            _ => probs.iter().map(|&p| if p == 1.0 { hi } else { lo + p * (hi - lo) }).collect(),
                        }
                    })
                    .collect();
                Ok(axes.iter().fold(vec![Vec::new()], |acc, axis| {
                    acc.iter()
                        .flat_map(|prefix: &Vec<f64>| {
                            axis.iter().map(move |&v| {
                                let mut p = prefix.clone();
                                p.push(v);
                                p
                            })
                        })
                        .collect()
                }))
            }
        }
    }
}

/// Per-group diagnostics.
#[derive(Debug, Clone)]
pub struct GroupSummary {
    pub label: String,
    pub weight: f64,
    pub n: usize,
    pub kappa: Vec<usize>,
    pub k_main: usize,
    pub tuning: Option<TuningReport>,
    pub estimates: Vec<f64>,
    pub ses: Vec<f64>,
}

/// Combined estimate at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct LincomRow {
    pub point: Vec<f64>,
    pub estimate: f64,
    pub se: f64,
    pub ci: Interval,
    pub band: Option<Interval>,
}

/// Output of [`lincom_estimate`].
#[derive(Debug, Clone)]
pub struct LincomResult {
    pub groups: Vec<GroupSummary>,
    pub rows: Vec<LincomRow>,
    pub band: Option<BandSummary>,
    pub options: FitOptions,
    pub warnings: Vec<String>,
}

/// `sqrt(Σ v_g²)` computed so that a single term returns `|v|` exactly.
fn norm(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * values.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// Estimates `θ(x)` with the selected correction of `options`.
///
/// Groups are independent: standard errors combine in quadrature and the
/// band uses independent multipliers for the stacked observations of all
/// groups, taken in label order.
pub fn lincom_estimate(spec: &LincomSpec, grid: &[Vec<f64>], options: &FitOptions) -> Result<LincomResult> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("evaluation grid is empty".into()));
    }
    let groups = spec.sorted();
    let d = groups[0].sample.d();
    let deriv = options.deriv_for(d);
    let correction = options.correction;
    let hc = options.hc_for(correction);

    let mut prepared = groups.par_iter().map(|g| prepare(&g.sample, options, None)).collect::<Result<Vec<_>>>()?;
    if spec.shared_kappa {
        let shared = prepared.iter().map(|p| p.kappa[0]).max().expect("at least one group");
        let tunings: Vec<_> = prepared.iter().map(|p| p.tuning.clone()).collect();
        prepared = groups
            .par_iter()
            .map(|g| prepare(&g.sample, options, Some(vec![shared; d])))
            .collect::<Result<Vec<_>>>()?;
        for (p, t) in prepared.iter_mut().zip(tunings) {
            p.tuning = t;
        }
    }

    let mut warnings = Vec::new();
    let mut summaries = Vec::new();
    let mut evaluated = Vec::new();
    for (g, p) in groups.iter().zip(&prepared) {
        for point in grid {
            if point.len() != d {
                return Err(Error::DimensionMismatch(format!("grid point of dimension {} for d={d}", point.len())));
            }
            p.main.partition().locate(point).map_err(|e| match e {
                Error::OutOfSupport { dim, value, lo, hi } => Error::InvalidArgument(format!(
                    "grid point coordinate {value} (dimension {dim}) is outside the support [{lo}, {hi}] of group '{}'",
                    g.label
                )),
                other => other,
            })?;
        }
        let corrector = Corrector::new(&p.main, p.aux.as_ref())?;
        let res = evaluate_correction(&corrector, grid, &deriv, correction, hc, options.band)?;
        warnings.extend(p.warnings.iter().map(|w| format!("group '{}': {w}", g.label)));
        summaries.push(GroupSummary {
            label: g.label.clone(),
            weight: g.weight,
            n: g.sample.n(),
            kappa: p.kappa.clone(),
            k_main: p.main.k(),
            tuning: p.tuning.clone(),
            estimates: res.estimates.clone(),
            ses: res.ses.clone(),
        });
        evaluated.push(res);
    }

    let z = normal_quantile(1.0 - options.alpha / 2.0);
    let mut estimates = Vec::with_capacity(grid.len());
    let mut ses = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let mut est = 0.0;
        let mut parts = Vec::with_capacity(groups.len());
        for (g, r) in groups.iter().zip(&evaluated) {
            est += g.weight * r.estimates[k];
            parts.push(g.weight * r.ses[k]);
        }
        estimates.push(est);
        ses.push(norm(&parts));
    }

    let band = if options.band {
        let terms: Vec<Vec<f64>> = (0..grid.len())
            .map(|k| {
                groups
                    .iter()
                    .zip(&evaluated)
                    .flat_map(|(g, r)| r.terms[k].iter().map(move |t| g.weight * t))
                    .collect()
            })
            .collect();
        let core = band_from_terms(&terms, &ses, &options.band_options())?;
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
        .map(|(k, p)| LincomRow {
            point: p.clone(),
            estimate: estimates[k],
            se: ses[k],
            ci: Interval::around(estimates[k], z * ses[k]),
            band: band.as_ref().map(|b| Interval::around(estimates[k], b.critical_value * ses[k])),
        })
        .collect();
    Ok(LincomResult { groups: summaries, rows, band, options: options.clone(), warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::KappaChoice;

    fn noisy(n: usize, shift: f64, salt: usize) -> Sample {
        let x: Vec<f64> = (0..n).map(|i| ((i * 7 + salt) % n) as f64 / (n - 1) as f64).collect();
        let y = x.iter().enumerate().map(|(i, v)| v * v + shift + 0.3 * (((i * 31 + salt) % 17) as f64 / 17.0 - 0.5)).collect();
        Sample::univariate(x, y).unwrap()
    }

    #[test]
    fn self_difference_is_zero() {
        let s = noisy(200, 0.0, 0);
        let spec = LincomSpec::new(vec![
            Group { label: "a".into(), sample: s.clone(), weight: 1.0 },
            Group { label: "b".into(), sample: s, weight: -1.0 },
        ])
        .unwrap();
        let opts = FitOptions { kappa: KappaChoice::Fixed(vec![4]), band: true, num_sim: 300, ..Default::default() };
        let grid = spec.grid(&GridSpec::Quantile(7)).unwrap();
        let r = lincom_estimate(&spec, &grid, &opts).unwrap();
        for row in &r.rows {
            assert!(row.estimate.abs() < 1e-10);
            let band = row.band.unwrap();
            assert!((band.lo + band.hi).abs() < 1e-10);
        }
    }

    #[test]
    fn label_order_does_not_matter() {
        let a = noisy(150, 0.0, 1);
        let b = noisy(180, 1.0, 2);
        let g1 = vec![
            Group { label: "a".into(), sample: a.clone(), weight: 2.0 },
            Group { label: "b".into(), sample: b.clone(), weight: -1.0 },
        ];
        let g2 = vec![g1[1].clone(), g1[0].clone()];
        let opts = FitOptions { band: true, num_sim: 200, ..Default::default() };
        let s1 = LincomSpec::new(g1).unwrap();
        let s2 = LincomSpec::new(g2).unwrap();
        let grid = s1.grid(&GridSpec::Quantile(5)).unwrap();
        assert_eq!(grid, s2.grid(&GridSpec::Quantile(5)).unwrap());
        let r1 = lincom_estimate(&s1, &grid, &opts).unwrap();
        let r2 = lincom_estimate(&s2, &grid, &opts).unwrap();
        assert_eq!(r1.rows, r2.rows);
    }

    #[test]
    fn rejects_bad_specs() {
        let s = noisy(50, 0.0, 0);
        assert!(LincomSpec::new(vec![Group { label: "a".into(), sample: s.clone(), weight: 0.0 }]).is_err());
        assert!(LincomSpec::new(vec![
            Group { label: "a".into(), sample: s.clone(), weight: 1.0 },
            Group { label: "a".into(), sample: s, weight: 1.0 },
        ])
        .is_err());
        assert_eq!(norm(&[-3.0]), 3.0);
    }
}
