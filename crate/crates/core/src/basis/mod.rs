//! Basis functions of the partitioning estimator.
//!
//! Two families are provided: clamped B-splines of order `m` (maximal
//! smoothness, `m - 2` continuous derivatives at interior knots) and
//! discontinuous piecewise polynomials of order `m` written in normalized
//! cell-local coordinates. Multivariate bases are tensor products of the
//! univariate ones, flattened row-major (the last dimension varies fastest).

pub mod kernel;

use crate::error::{Error, Result};
use crate::grid::Partition;

/// Basis family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[non_exhaustive]
pub enum BasisFamily {
    /// Clamped B-splines with simple interior knots.
    #[default]
    BSpline,
    /// Per-cell polynomials with no continuity constraints.
    PiecewisePoly,
}

impl BasisFamily {
    pub fn name(self) -> &'static str {
        match self {
            BasisFamily::BSpline => "bs",
            BasisFamily::PiecewisePoly => "pp",
        }
    }
}

/// Basis family, order `m` and derivative multi-index `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub order: usize,
    pub deriv: Vec<usize>,
}

impl BasisSpec {
    pub fn new(family: BasisFamily, order: usize, deriv: Vec<usize>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidBasis("order must be at least 1".into()));
        }
        if deriv.is_empty() {
            return Err(Error::InvalidBasis("derivative multi-index is empty".into()));
        }
        let total: usize = deriv.iter().sum();
        if total >= order {
            return Err(Error::DerivativeOrder { deriv: total, order });
        }
        Ok(Self { family, order, deriv })
    }

    /// Level estimation (`q = 0`) in `d` dimensions.
    pub fn level(family: BasisFamily, order: usize, d: usize) -> Result<Self> {
        Self::new(family, order, vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.deriv.len()
    }

    pub fn total_deriv(&self) -> usize {
        self.deriv.iter().sum()
    }

    /// Number of continuous derivatives at interior knots (`-1`: none).
    pub fn smoothness(&self) -> i64 {
        match self.family {
            BasisFamily::BSpline => self.order as i64 - 2,
            BasisFamily::PiecewisePoly => -1,
        }
    }

    /// Same family and derivative with another order.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        Self::new(self.family, order, self.deriv.clone())
    }

    pub fn basis_dim(&self, partition: &Partition) -> usize {
        basis_dim(self.family, self.order, partition)
    }
}

/// Number of univariate basis functions along one dimension.
pub fn univariate_dim(family: BasisFamily, order: usize, kappa: usize) -> usize {
    match family {
        BasisFamily::BSpline => kappa + order - 1,
        BasisFamily::PiecewisePoly => kappa * order,
    }
}

/// Dimension `K` of the tensor-product basis.
pub fn basis_dim(family: BasisFamily, order: usize, partition: &Partition) -> usize {
    (0..partition.dim())
        .map(|l| univariate_dim(family, order, partition.kappa(l)))
        .product()
}

/// Nonzero entries of one basis row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseRow {
    pub fn to_dense(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; k];
        for (&i, &v) in self.idx.iter().zip(&self.val) {
            out[i] += v;
        }
        out
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&i, &v)| v * dense[i]).sum()
    }
}

/// Clamped knot vector: boundary knots repeated `order` times.
fn clamped(knots: &[f64], order: usize) -> Vec<f64> {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    let mut t = Vec::with_capacity(knots.len() + 2 * (order - 1));
    t.extend(std::iter::repeat_n(first, order - 1));
    t.extend_from_slice(knots);
    t.extend(std::iter::repeat_n(last, order - 1));
    t
}

/// Values of the `order` B-splines of order `order` that are nonzero on the
/// span `[t[span], t[span+1])`, for basis indices `span+1-order..=span`
/// (Cox–de Boor, triangular form).
fn bspline_span_values(t: &[f64], order: usize, span: usize, x: f64) -> Vec<f64> {
    let degree = order - 1;
    let mut n = vec![0.0; order];
    let mut left = vec![0.0; order];
    let mut right = vec![0.0; order];
    n[0] = 1.0;
    for j in 1..=degree {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let tmp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        n[j] = saved;
    }
    n
}

/// `r`-th derivatives of the order-`order` B-splines nonzero on `span`.
///
/// Values of order `order - r` are lifted back to order `order` through the
/// difference recursion `N'_{i,k} = (k-1) [N_{i,k-1}/(t_{i+k-1}-t_i) - N_{i+1,k-1}/(t_{i+k}-t_{i+1})]`.
fn bspline_span_derivs(t: &[f64], order: usize, span: usize, x: f64, r: usize) -> Vec<f64> {
    if r >= order {
        return vec![0.0; order];
    }
    let mut d = bspline_span_values(t, order - r, span, x);
    for k in (order - r + 1)..=order {
        // d holds indices span+2-k ..= span (length k-1); build span+1-k ..= span
        let first = span + 1 - k;
        let mut next = vec![0.0; k];
        for (pos, out) in next.iter_mut().enumerate() {
            let i = first + pos;
            let a = if pos >= 1 { d[pos - 1] } else { 0.0 };
            let b = if pos < k - 1 { d[pos] } else { 0.0 };
            let den_a = t[i + k - 1] - t[i];
            let den_b = t[i + k] - t[i + 1];
            let term_a = if den_a > 0.0 { a / den_a } else { 0.0 };
            let term_b = if den_b > 0.0 { b / den_b } else { 0.0 };
            *out = (k - 1) as f64 * (term_a - term_b);
        }
        d = next;
    }
    d
}

/// Univariate pieces along one dimension: first global index and values.
struct Piece {
    offset: usize,
    values: Vec<f64>,
}

fn univariate_piece(
    family: BasisFamily,
    partition: &Partition,
    dim: usize,
    order: usize,
    deriv: usize,
    x: f64,
) -> Result<Piece> {
    let cell = partition.locate_dim(dim, x)?;
    let knots = partition.knots(dim);
    match family {
        BasisFamily::BSpline => {
            let t = clamped(knots, order);
            let span = cell + order - 1;
            let values = if deriv == 0 {
                bspline_span_values(&t, order, span, x)
            } else {
                bspline_span_derivs(&t, order, span, x, deriv)
            };
            Ok(Piece { offset: cell, values })
        }
        BasisFamily::PiecewisePoly => {
            let h = knots[cell + 1] - knots[cell];
            let u = (x - knots[cell]) / h;
            let scale = h.powi(-(deriv as i32));
            let values = (0..order)
                .map(|a| {
                    if a < deriv {
                        0.0
                    } else {
                        let falling: f64 = ((a - deriv + 1)..=a).map(|v| v as f64).product();
                        falling * u.powi((a - deriv) as i32) * scale
                    }
                })
                .collect();
            Ok(Piece { offset: cell * order, values })
        }
    }
}

/// Sparse tensor-product row `∂^q b(x)` for a basis of order `order`.
///
/// Unlike the public evaluators this accepts derivative orders at or above
/// `order` (the result is then identically zero), which the bias estimators
/// rely on.
pub fn eval_sparse(
    family: BasisFamily,
    partition: &Partition,
    order: usize,
    deriv: &[usize],
    point: &[f64],
) -> Result<SparseRow> {
    let d = partition.dim();
    if point.len() != d || deriv.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "point/derivative of length {}/{} for a {d}-dimensional partition",
            point.len(),
            deriv.len()
        )));
    }
    let mut pieces = Vec::with_capacity(d);
    for l in 0..d {
        pieces.push(univariate_piece(family, partition, l, order, deriv[l], point[l])?);
    }
    let dims: Vec<usize> = (0..d)
        .map(|l| univariate_dim(family, order, partition.kappa(l)))
        .collect();
    let mut row = SparseRow { idx: vec![0], val: vec![1.0] };
    for (l, piece) in pieces.iter().enumerate() {
        let mut next = SparseRow {
            idx: Vec::with_capacity(row.idx.len() * piece.values.len()),
            val: Vec::with_capacity(row.idx.len() * piece.values.len()),
        };
        for (&i, &v) in row.idx.iter().zip(&row.val) {
            for (j, &w) in piece.values.iter().enumerate() {
                next.idx.push(i * dims[l] + piece.offset + j);
                next.val.push(v * w);
            }
        }
        row = next;
    }
    Ok(row)
}

fn check_deriv(order: usize, deriv: &[usize]) -> Result<()> {
    let total: usize = deriv.iter().sum();
    if order == 0 {
        return Err(Error::InvalidBasis("order must be at least 1".into()));
    }
    if total >= order {
        return Err(Error::DerivativeOrder { deriv: total, order });
    }
    Ok(())
}

/// Dense row `∂^q b(x)'` of the clamped B-spline basis.
pub fn eval_bspline(partition: &Partition, order: usize, deriv: &[usize], point: &[f64]) -> Result<Vec<f64>> {
    check_deriv(order, deriv)?;
    let row = eval_sparse(BasisFamily::BSpline, partition, order, deriv, point)?;
    Ok(row.to_dense(basis_dim(BasisFamily::BSpline, order, partition)))
}

/// Dense row `∂^q b(x)'` of the piecewise-polynomial basis.
pub fn eval_piecewise(partition: &Partition, order: usize, deriv: &[usize], point: &[f64]) -> Result<Vec<f64>> {
    check_deriv(order, deriv)?;
    let row = eval_sparse(BasisFamily::PiecewisePoly, partition, order, deriv, point)?;
    Ok(row.to_dense(basis_dim(BasisFamily::PiecewisePoly, order, partition)))
}

/// Dense row for any family.
pub fn eval_basis(spec: &BasisSpec, partition: &Partition, point: &[f64]) -> Result<Vec<f64>> {
    match spec.family {
        BasisFamily::BSpline => eval_bspline(partition, spec.order, &spec.deriv, point),
        BasisFamily::PiecewisePoly => eval_piecewise(partition, spec.order, &spec.deriv, point),
    }
}
