//! Design matrices, least squares fits and point prediction.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{eval_sparse, BasisSpec};
use crate::error::{Error, Result};
use crate::grid::{Partition, Sample};
use crate::linalg::SymPinv;

/// Basis evaluated at the sample points together with its Gram matrix.
#[derive(Debug, Clone)]
pub struct Design {
    basis: DMatrix<f64>,
    x: Vec<f64>,
    gram: DMatrix<f64>,
    solver: SymPinv,
    spec: BasisSpec,
    partition: Partition,
    warnings: Vec<String>,
}

impl Design {
    /// `n × K` matrix whose row `i` is `b(x_i)'`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `B'B / n`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Moore–Penrose inverse of the Gram matrix.
    pub fn gram_pinv(&self) -> &DMatrix<f64> {
        self.solver.matrix()
    }

    /// `Q̂⁺ v`, refined once against the basis itself rather than the formed Gram.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let u = self.solver.apply(v);
        let fitted = &self.basis * &u;
        let residual = v - self.basis.tr_mul(&fitted) / self.n() as f64;
        u + self.solver.apply(&residual)
    }

    pub fn effective_rank(&self) -> usize {
        self.solver.rank()
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.effective_rank() < self.k()
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    /// Covariate rows the design was evaluated at.
    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.partition.dim())
    }

    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Basis row `∂^q b(x)'` of this design's family and order.
    pub fn row_at(&self, point: &[f64], deriv: &[usize]) -> Result<DVector<f64>> {
        let total: usize = deriv.iter().sum();
        if total >= self.spec.order {
            return Err(Error::DerivativeOrder { deriv: total, order: self.spec.order });
        }
        self.row_any_order(point, deriv)
    }

    /// Like [`Design::row_at`] but derivatives of order `≥ m` are allowed (zero rows).
    pub(crate) fn row_any_order(&self, point: &[f64], deriv: &[usize]) -> Result<DVector<f64>> {
        let row = eval_sparse(self.spec.family, &self.partition, self.spec.order, deriv, point)?;
        Ok(DVector::from_vec(row.to_dense(self.k())))
    }
}

/// Evaluates the level basis at every sample point and factorizes the Gram.
///
/// Fails when `K > n`; a rank-deficient Gram is accepted and solved through
/// its pseudo-inverse (minimum-norm coefficients) with a warning.
pub fn build_design(sample: &Sample, spec: &BasisSpec, partition: &Partition) -> Result<Design> {
    if spec.dim() != sample.d() || partition.dim() != sample.d() {
        return Err(Error::DimensionMismatch(format!(
            "sample has d={}, basis spec d={}, partition d={}",
            sample.d(),
            spec.dim(),
            partition.dim()
        )));
    }
    let n = sample.n();
    let k = spec.basis_dim(partition);
    if k > n {
        return Err(Error::Underdetermined { k, n });
    }
    let level = vec![0; sample.d()];
    let mut basis = DMatrix::<f64>::zeros(n, k);
    let mut x = Vec::with_capacity(n * sample.d());
    for (i, point) in sample.points().enumerate() {
        x.extend_from_slice(point);
        let row = eval_sparse(spec.family, partition, spec.order, &level, point)?;
        for (&j, &v) in row.idx.iter().zip(&row.val) {
            basis[(i, j)] = v;
        }
    }
    let gram = basis.tr_mul(&basis) / n as f64;
    let solver = SymPinv::new(&gram);
    let mut warnings = Vec::new();
    if solver.rank() < k {
        let msg = format!(
            "Gram matrix is rank deficient (rank {} of {k}); using the minimum-norm solution",
            solver.rank()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let spec = BasisSpec::level(spec.family, spec.order, sample.d())?;
    Ok(Design { basis, x, gram, solver, spec, partition: partition.clone(), warnings })
}

/// Least squares fit on a fixed design.
#[derive(Debug, Clone)]
pub struct Fit {
    design: Arc<Design>,
    y: Vec<f64>,
    beta: DVector<f64>,
    fitted: Vec<f64>,
    residuals: Vec<f64>,
    leverage: Vec<f64>,
}

impl Fit {
    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn design_arc(&self) -> &Arc<Design> {
        &self.design
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Diagonal of the hat matrix.
    pub fn leverage(&self) -> &[f64] {
        &self.leverage
    }

    pub fn spec(&self) -> &BasisSpec {
        self.design.spec()
    }

    pub fn partition(&self) -> &Partition {
        self.design.partition()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.design.points()
    }

    pub fn k(&self) -> usize {
        self.design.k()
    }

    /// `∂^q b(x)'β̂`.
    pub fn predict(&self, point: &[f64], deriv: &[usize]) -> Result<f64> {
        let row = eval_sparse(self.spec().family, self.partition(), self.spec().order, deriv, point)?;
        let total: usize = deriv.iter().sum();
        if total >= self.spec().order {
            return Err(Error::DerivativeOrder { deriv: total, order: self.spec().order });
        }
        Ok(row.dot(self.beta.as_slice()))
    }
}

/// Solves the least squares problem `min Σ (y_i - b(x_i)'β)^2`.
pub fn fit_ls(design: impl Into<Arc<Design>>, y: &[f64]) -> Result<Fit> {
    let design = design.into();
    let n = design.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{} responses for a design with {n} rows", y.len())));
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "response", row });
    }
    let basis = design.basis();
    let yv = DVector::from_column_slice(y);
    let rhs = basis.tr_mul(&yv) / n as f64;
    let beta = design.solve(&rhs);
    let fitted_v = basis * &beta;
    let fitted: Vec<f64> = fitted_v.iter().copied().collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let weighted = basis * design.gram_pinv();
    let leverage = (0..n)
        .map(|i| {
            let h = weighted.row(i).dot(&basis.row(i)) / n as f64;
            h.clamp(0.0, 1.0)
        })
        .collect();
    Ok(Fit { design, y: y.to_vec(), beta, fitted, residuals, leverage })
}

/// Builds the design and fits in one step.
pub fn fit_sample(sample: &Sample, spec: &BasisSpec, partition: &Partition) -> Result<Fit> {
    let design = build_design(sample, spec, partition)?;
    fit_ls(design, sample.y())
}

/// `∂^q b(x)'β̂` for a fitted model.
pub fn predict(fit: &Fit, point: &[f64], deriv: &[usize]) -> Result<f64> {
    fit.predict(point, deriv)
}

/// `max |y|`, floored at 1 so that near-zero responses use an absolute scale.
pub fn response_scale(y: &[f64]) -> f64 {
    y.iter().fold(1.0f64, |a, &b| a.max(b.abs()))
}
