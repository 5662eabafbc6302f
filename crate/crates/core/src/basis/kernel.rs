//! Leading approximation-error kernels and IMSE constants of each family.
//!
//! On a cell of width `h` with local coordinate `t ∈ [0, 1)`, the least
//! squares approximation error of a smooth `μ` by an order-`m` basis is, to
//! leading order, `μ^(m)(x) h^m E_m(t) / m!`. For maximally smooth splines
//! `E_m` is the Bernoulli polynomial of degree `m`; for piecewise
//! polynomials it is the monic shifted Legendre polynomial of degree `m`.

use super::{basis_dim, eval_sparse, BasisFamily};
use crate::grid::{Partition, Spacing};
use nalgebra::DMatrix;

/// Polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    pub fn nth_derivative(&self, r: usize) -> Poly {
        (0..r).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Integral over `[0, 1]`.
    pub fn integrate_unit(&self) -> f64 {
        self.0.iter().enumerate().map(|(k, c)| c / (k + 1) as f64).sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`.
fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    for k in 1..=n {
        let s: f64 = (0..k).map(|j| binomial(k + 1, j) * b[j]).sum();
        b[k] = -s / (k + 1) as f64;
    }
    b
}

/// Bernoulli polynomial `B_m(t) = Σ_k C(m,k) B_k t^(m-k)`.
pub fn bernoulli_poly(m: usize) -> Poly {
    let b = bernoulli_numbers(m);
    let mut coef = vec![0.0; m + 1];
    for (k, bk) in b.iter().enumerate() {
        coef[m - k] = binomial(m, k) * bk;
    }
    Poly(coef)
}

/// Monic shifted Legendre polynomial of degree `m` on `[0, 1]`.
pub fn legendre_monic(m: usize) -> Poly {
    // t^m (t-1)^m = Σ_j C(m,j) (-1)^(m-j) t^(m+j); differentiate m times, scale by m!/(2m)!
    let mut coef = vec![0.0; m + 1];
    for j in 0..=m {
        let sign = if (m - j) % 2 == 0 { 1.0 } else { -1.0 };
        let power = m + j;
        let falling: f64 = ((power - m + 1)..=power).map(|v| v as f64).product();
        coef[j] = binomial(m, j) * sign * falling;
    }
    let lead = coef[m];
    Poly(coef.into_iter().map(|c| c / lead).collect())
}

/// Error kernel `E_m` of a family.
pub fn error_kernel(family: BasisFamily, order: usize) -> Poly {
    match family {
        BasisFamily::BSpline => bernoulli_poly(order),
        BasisFamily::PiecewisePoly => legendre_monic(order),
    }
}

/// `∫_0^1 (E_m^(q)(t))^2 dt`.
pub fn bias_constant(family: BasisFamily, order: usize, deriv: usize) -> f64 {
    let e = error_kernel(family, order).nth_derivative(deriv);
    e.mul(&e).integrate_unit()
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(points: usize) -> Vec<(f64, f64)> {
    let n = points;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}

/// Per-cell integral of `Σ_k (∂^q φ_k)^2` for a basis orthonormalized on
/// unit-width cells, i.e. the leading variance constant of the family.
///
/// For piecewise polynomials this is computed on a single cell; for splines
/// it is the interior (boundary-free) limit, extrapolated from two long
/// uniform meshes.
pub fn variance_constant(family: BasisFamily, order: usize, deriv: usize) -> f64 {
    if deriv >= order {
        return 0.0;
    }
    match family {
        BasisFamily::PiecewisePoly => per_cell_trace(family, order, deriv, 1),
        BasisFamily::BSpline => {
            if deriv == 0 {
                return 1.0;
            }
            let coarse = per_cell_trace(family, order, deriv, 64);
            let fine = per_cell_trace(family, order, deriv, 128);
            2.0 * fine - coarse
        }
    }
}

/// `tr(G^{-1} G_q) / L` on the mesh `0, 1, ..., L`.
fn per_cell_trace(family: BasisFamily, order: usize, deriv: usize, cells: usize) -> f64 {
    let knots: Vec<f64> = (0..=cells).map(|j| j as f64).collect();
    let partition = Partition::from_knots(vec![knots], Spacing::Evenly).expect("valid mesh");
    let k = basis_dim(family, order, &partition);
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut gram_q = DMatrix::<f64>::zeros(k, k);
    let nodes = gauss_legendre_unit(order + 1);
    for cell in 0..cells {
        for &(t, w) in &nodes {
            let x = [cell as f64 + t];
            let r0 = eval_sparse(family, &partition, order, &[0], &x).expect("in support");
            let rq = eval_sparse(family, &partition, order, &[deriv], &x).expect("in support");
            for (&i, &vi) in r0.idx.iter().zip(&r0.val) {
                for (&j, &vj) in r0.idx.iter().zip(&r0.val) {
                    gram[(i, j)] += w * vi * vj;
                }
            }
            for (&i, &vi) in rq.idx.iter().zip(&rq.val) {
                for (&j, &vj) in rq.idx.iter().zip(&rq.val) {
                    gram_q[(i, j)] += w * vi * vj;
                }
            }
        }
    }
    let chol = gram.cholesky().expect("spline gram is positive definite");
    let solved = chol.solve(&gram_q);
    solved.trace() / cells as f64
}
