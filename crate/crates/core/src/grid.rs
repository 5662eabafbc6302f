//! Samples and tensor-product partitions of the covariate support.
//!
//! A [`Partition`] holds one strictly increasing knot vector per covariate.
//! Cells are half-open `[t_j, t_{j+1})` except the last one in each
//! dimension, which is closed so that the right boundary of the support is
//! covered.

use crate::error::{Error, Result};

/// Responses and covariates of a regression problem.
///
/// Covariates are stored row-major, `d` values per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    y: Vec<f64>,
    x: Vec<f64>,
    d: usize,
}

impl Sample {
    /// Builds a sample from responses and covariate rows.
    pub fn new(y: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptySample);
        }
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} responses but {} covariate rows",
                y.len(),
                rows.len()
            )));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::DimensionMismatch("covariate dimension must be at least 1".into()));
        }
        let mut x = Vec::with_capacity(d * rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} covariates, expected {d}",
                    row.len()
                )));
            }
            x.extend_from_slice(row);
        }
        Self::from_flat(y, x, d)
    }

    /// Builds a univariate sample.
    pub fn univariate(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} responses but {} covariate values",
                y.len(),
                x.len()
            )));
        }
        Self::from_flat(y, x, 1)
    }

    /// Builds a sample from row-major covariates with `d` columns.
    pub fn from_flat(y: Vec<f64>, x: Vec<f64>, d: usize) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptySample);
        }
        if d == 0 || x.len() != y.len() * d {
            return Err(Error::DimensionMismatch(format!(
                "expected {} covariate values for n={} and d={d}, got {}",
                y.len() * d,
                y.len(),
                x.len()
            )));
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "response", row });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "covariate", row: pos / d });
        }
        Ok(Self { y, x, d })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Covariate row of observation `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }

    /// All values of covariate `dim`.
    pub fn column(&self, dim: usize) -> Vec<f64> {
        self.points().map(|p| p[dim]).collect()
    }

    /// Same covariates with a different response vector.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Self::from_flat(y, self.x.clone(), self.d)
    }

    /// Same responses with replaced covariates (row-major, same `d`).
    pub fn with_x(&self, x: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.y.clone(), x, self.d)
    }

    /// Minimum and maximum of covariate `dim`.
    pub fn range(&self, dim: usize) -> (f64, f64) {
        self.points().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p[dim]), hi.max(p[dim]))
        })
    }
}

/// Knot placement rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    /// Equal-width cells over `[min, max]`.
    #[default]
    Evenly,
    /// Interior knots at empirical quantiles `j / kappa`.
    Quantile,
}

/// Per-dimension knot sequences defining a tensor-product mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    knots: Vec<Vec<f64>>,
    spacing: Spacing,
}

impl Partition {
    /// Builds a partition from explicit knot vectors (boundaries included).
    pub fn from_knots(knots: Vec<Vec<f64>>, spacing: Spacing) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::DimensionMismatch("partition needs at least one dimension".into()));
        }
        for (dim, t) in knots.iter().enumerate() {
            if t.len() < 2 {
                return Err(Error::InvalidKappa { dim, kappa: 0 });
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite knot in dimension {dim}")));
            }
            if t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "knots in dimension {dim} are not strictly increasing"
                )));
            }
        }
        Ok(Self { knots, spacing })
    }

    pub fn dim(&self) -> usize {
        self.knots.len()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn knots(&self, dim: usize) -> &[f64] {
        &self.knots[dim]
    }

    /// Number of subintervals in dimension `dim`.
    pub fn kappa(&self, dim: usize) -> usize {
        self.knots[dim].len() - 1
    }

    pub fn kappas(&self) -> Vec<usize> {
        (0..self.dim()).map(|l| self.kappa(l)).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.kappas().iter().product()
    }

    pub fn support(&self, dim: usize) -> (f64, f64) {
        let t = &self.knots[dim];
        (t[0], t[t.len() - 1])
    }

    /// Width of cell `cell` in dimension `dim`.
    pub fn width(&self, dim: usize, cell: usize) -> f64 {
        self.knots[dim][cell + 1] - self.knots[dim][cell]
    }

    /// Interval index of `value` along dimension `dim`.
    pub fn locate_dim(&self, dim: usize, value: f64) -> Result<usize> {
        let t = &self.knots[dim];
        let (lo, hi) = (t[0], t[t.len() - 1]);
        // NaN fails both comparisons and is rejected here too
        if !(value >= lo && value <= hi) {
            return Err(Error::OutOfSupport { dim, value, lo, hi });
        }
        let below = t.partition_point(|&k| k <= value);
        Ok((below - 1).min(t.len() - 2))
    }

    /// Per-dimension cell index of `point`.
    pub fn locate(&self, point: &[f64]) -> Result<Vec<usize>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, partition has {}",
                point.len(),
                self.dim()
            )));
        }
        point
            .iter()
            .enumerate()
            .map(|(dim, &v)| self.locate_dim(dim, v))
            .collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.locate(point).is_ok()
    }
}

/// Locates `point` in `partition`; see [`Partition::locate`].
pub fn locate_cell(partition: &Partition, point: &[f64]) -> Result<Vec<usize>> {
    partition.locate(point)
}

/// Empirical quantile with linear interpolation between order statistics
/// (`sorted` must be ascending and non-empty).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Builds a tensor-product partition covering the sample's covariates.
///
/// With quantile spacing, knots that coincide (mass points) are collapsed and
/// the effective `kappa` of that dimension shrinks; a warning is logged.
pub fn make_partition(sample: &Sample, kappa: &[usize], spacing: Spacing) -> Result<Partition> {
    let d = sample.d();
    if kappa.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "kappa has {} entries for {d} covariates",
            kappa.len()
        )));
    }
    let mut knots = Vec::with_capacity(d);
    for (dim, &k) in kappa.iter().enumerate() {
        if k < 1 {
            return Err(Error::InvalidKappa { dim, kappa: k });
        }
        let (lo, hi) = sample.range(dim);
        if lo >= hi {
            return Err(Error::DegenerateSupport { dim });
        }
        let t = match spacing {
            Spacing::Evenly => {
                let step = (hi - lo) / k as f64;
                let mut t: Vec<f64> = (0..k).map(|j| lo + j as f64 * step).collect();
                t.push(hi);
                t
            }
            Spacing::Quantile => {
                if sample.n() < k + 1 {
                    return Err(Error::TooFewForQuantiles { kappa: k, n: sample.n() });
                }
                let mut sorted = sample.column(dim);
                sorted.sort_by(|a, b| a.total_cmp(b));
                let mut t = Vec::with_capacity(k + 1);
                t.push(lo);
                for j in 1..k {
                    let q = quantile_sorted(&sorted, j as f64 / k as f64);
                    if q > *t.last().unwrap() && q < hi {
                        t.push(q);
                    }
                }
                t.push(hi);
                if t.len() < k + 1 {
                    log::warn!(
                        "dimension {dim}: duplicate quantile knots collapsed, kappa reduced from {k} to {}",
                        t.len() - 1
                    );
                }
                t
            }
        };
        knots.push(t);
    }
    Partition::from_knots(knots, spacing)
}
