//! Slow reference implementations.
//!
//! Everything here works on plain `Vec`s: Gaussian elimination, Householder
//! least squares, truncated power and local monomial bases, and hard-coded
//! error kernels.

use crate::error::{Error, Result};
use crate::grid::{Partition, Sample};

/// Solves `A z = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[piv][col].abs() <= 1e-13 * scale {
            return Err(Error::Numerical("singular system in oracle solve".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut z = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * z[k]).sum();
        z[row] = (b[row] - s) / a[row][row];
    }
    Ok(z)
}

/// Polynomial least squares through the normal equations; returns
/// coefficients in ascending powers.
pub fn oracle_ols(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    let p = degree + 1;
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (&xi, &yi) in x.iter().zip(y) {
        let pows: Vec<f64> = (0..p).map(|k| xi.powi(k as i32)).collect();
        for a in 0..p {
            xty[a] += pows[a] * yi;
            for b in 0..p {
                xtx[a][b] += pows[a] * pows[b];
            }
        }
    }
    gauss_solve(xtx, xty)
}

/// Least squares fit of `y` on the columns of `rows` (one row per observation)
/// with its HC0 sandwich; `se(c) = sqrt(c' V c)` for a contrast `c`.
#[derive(Debug, Clone)]
pub struct OlsOracle {
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(X'X)^{-1} (Σ x_i x_i' e_i^2) (X'X)^{-1}`.
    pub hc0: Vec<Vec<f64>>,
}

impl OlsOracle {
    pub fn fit(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let p = rows[0].len();
        let mut xtx = vec![vec![0.0; p]; p];
        let mut xty = vec![0.0; p];
        for (r, &yi) in rows.iter().zip(y) {
            for a in 0..p {
                xty[a] += r[a] * yi;
                for b in 0..p {
                    xtx[a][b] += r[a] * r[b];
                }
            }
        }
        let coef = gauss_solve(xtx.clone(), xty)?;
        let residuals: Vec<f64> = rows
            .iter()
            .zip(y)
            .map(|(r, &yi)| yi - r.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let mut inv = vec![vec![0.0; p]; p];
        for k in 0..p {
            let mut e = vec![0.0; p];
            e[k] = 1.0;
            let col = gauss_solve(xtx.clone(), e)?;
            for a in 0..p {
                inv[a][k] = col[a];
            }
        }
        let mut meat = vec![vec![0.0; p]; p];
        for (r, e) in rows.iter().zip(&residuals) {
            for a in 0..p {
                for b in 0..p {
                    meat[a][b] += r[a] * r[b] * e * e;
                }
            }
        }
        let prod = |l: &Vec<Vec<f64>>, r: &Vec<Vec<f64>>| {
            let mut out = vec![vec![0.0; p]; p];
            for a in 0..p {
                for b in 0..p {
                    out[a][b] = (0..p).map(|k| l[a][k] * r[k][b]).sum();
                }
            }
            out
        };
        let hc0 = prod(&prod(&inv, &meat), &inv);
        Ok(Self { coef, residuals, hc0 })
    }

    pub fn predict(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.coef).map(|(a, b)| a * b).sum()
    }

    pub fn se(&self, c: &[f64]) -> f64 {
        let mut v = 0.0;
        for (a, ca) in c.iter().enumerate() {
            for (b, cb) in c.iter().enumerate() {
                v += ca * self.hc0[a][b] * cb;
            }
        }
        v.max(0.0).sqrt()
    }
}

/// Central finite difference of order `order` with step `step`.
pub fn fd_derivative(f: impl Fn(f64) -> f64, x: f64, order: usize, step: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=order {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * f(x + (order as f64 / 2.0 - k as f64) * step);
        binom = binom * (order - k) as f64 / (k + 1) as f64;
    }
    acc / step.powi(order as i32)
}

/// Mixed partial derivative `∂^q f(x)` by nested central differences.
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, point: &[f64], deriv: &[usize], step: f64) -> f64 {
    fd_partial_steps(f, point, deriv, &vec![step; point.len()])
}

/// As [`fd_partial`] with a separate step per coordinate.
pub fn fd_partial_steps(f: &dyn Fn(&[f64]) -> f64, point: &[f64], deriv: &[usize], steps: &[f64]) -> f64 {
    match deriv.iter().position(|&q| q > 0) {
        None => f(point),
        Some(l) => {
            let mut rest = deriv.to_vec();
            let order = rest[l];
            rest[l] = 0;
            fd_derivative(
                |t| {
                    let mut p = point.to_vec();
                    p[l] = t;
                    fd_partial_steps(f, &p, &rest, steps)
                },
                point[l],
                order,
                steps[l],
            )
        }
    }
}

/// Empirical quantile by sorting: the smallest draw whose empirical CDF
/// reaches `level`.
pub fn sorted_quantile(draws: &[f64], level: f64) -> f64 {
    let mut v = draws.to_vec();
    v.sort_by(f64::total_cmp);
    let target = level * v.len() as f64;
    let mut k = 0;
    while k < v.len() && ((k + 1) as f64) < target - 1e-9 {
        k += 1;
    }
    v[k.min(v.len() - 1)]
}

/// Solves `min ‖X b - Y‖` column by column via Householder QR, where `x` is
/// `n × p` as rows; returns `p × (columns of Y)` as rows.
fn qr_least_squares(x: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let p = x[0].len();
    if n < p {
        return Err(Error::Numerical("oracle least squares is underdetermined".into()));
    }
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    let mut rhs: Vec<Vec<f64>> = ys.to_vec();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..p {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return Err(Error::Numerical("rank-deficient oracle design".into()));
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        };
        for col in a.iter_mut().skip(j) {
            reflect(&mut col[j..]);
        }
        for col in rhs.iter_mut() {
            reflect(&mut col[j..]);
        }
    }
    let mut out = vec![vec![0.0; rhs.len()]; p];
    for (c, col) in rhs.iter().enumerate() {
        for row in (0..p).rev() {
            let s: f64 = (row + 1..p).map(|k| a[k][row] * out[k][c]).sum();
            out[row][c] = (col[row] - s) / a[row][row];
        }
    }
    Ok(out)
}

fn falling(p: usize, r: usize) -> f64 {
    if r > p {
        return 0.0;
    }
    ((p + 1 - r)..=p).map(|v| v as f64).product()
}

fn cell_of(knots: &[f64], v: f64) -> usize {
    let mut c = 0;
    while c + 2 < knots.len() && v >= knots[c + 1] {
        c += 1;
    }
    c
}

/// `r`-th derivative of every univariate basis function at `v`.
///
/// Splines use the truncated power basis scaled to the unit interval;
/// piecewise polynomials use monomials in the cell-local coordinate.
fn univariate(spline: bool, knots: &[f64], order: usize, r: usize, v: f64) -> Vec<f64> {
    let kappa = knots.len() - 1;
    let lo = knots[0];
    let span = knots[kappa] - lo;
    let mut out = Vec::new();
    if spline {
        let z = (v - lo) / span;
        for p in 0..order {
            let val = if r > p { 0.0 } else { falling(p, r) * z.powi((p - r) as i32) };
            out.push(val / span.powi(r as i32));
        }
        let deg = order - 1;
        for &t in &knots[1..kappa] {
            let w = (v - t) / span;
            let val = if w < 0.0 || r > deg {
                0.0
            } else if r == deg {
                falling(deg, r)
            } else {
                falling(deg, r) * w.powi((deg - r) as i32)
            };
            out.push(val / span.powi(r as i32));
        }
    } else {
        let c = cell_of(knots, v);
        let h = knots[c + 1] - knots[c];
        let z = (v - knots[c]) / h;
        for cell in 0..kappa {
            for p in 0..order {
                let val = if cell != c || r > p {
                    0.0
                } else if r == p {
                    falling(p, r)
                } else {
                    falling(p, r) * z.powi((p - r) as i32)
                };
                out.push(val / h.powi(r as i32));
            }
        }
    }
    out
}

fn tensor(parts: &[Vec<f64>]) -> Vec<f64> {
    parts.iter().fold(vec![1.0], |acc, part| {
        let mut next = Vec::with_capacity(acc.len() * part.len());
        for a in &acc {
            for b in part {
                next.push(a * b);
            }
        }
        next
    })
}

/// Coefficients of the error kernels (ascending powers) for orders 1..=4.
fn kernel_coefficients(spline: bool, order: usize) -> Result<Vec<f64>> {
    let c = match (spline, order) {
        (_, 1) => vec![-0.5, 1.0],
        (_, 2) => vec![1.0 / 6.0, -1.0, 1.0],
        (true, 3) => vec![0.0, 0.5, -1.5, 1.0],
        (true, 4) => vec![-1.0 / 30.0, 0.0, 1.0, -2.0, 1.0],
        (false, 3) => vec![-0.05, 0.6, -1.5, 1.0],
        (false, 4) => vec![1.0 / 70.0, -2.0 / 7.0, 9.0 / 7.0, -2.0, 1.0],
        _ => return Err(Error::SizeLimit(format!("oracle kernels cover orders 1..=4, got {order}"))),
    };
    Ok(c)
}

fn kernel_eval(coef: &[f64], r: usize, t: f64) -> f64 {
    coef.iter().enumerate().map(|(p, c)| c * falling(p, r) * if p >= r { t.powi((p - r) as i32) } else { 0.0 }).sum()
}

/// Dense brute-force evaluation of the estimator family at one point.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce<'a> {
    pub sample: &'a Sample,
    pub partition: &'a Partition,
    pub spline: bool,
    pub order: usize,
    pub order_bc: usize,
}

impl<'a> BruteForce<'a> {
    fn knots(&self) -> Vec<Vec<f64>> {
        (0..self.partition.dim()).map(|l| self.partition.knots(l).to_vec()).collect()
    }

    fn row(&self, order: usize, deriv: &[usize], point: &[f64]) -> Vec<f64> {
        let knots = self.knots();
        let parts: Vec<Vec<f64>> = (0..point.len())
            .map(|l| univariate(self.spline, &knots[l], order, deriv[l], point[l]))
            .collect();
        tensor(&parts)
    }

    fn coefficients(&self, order: usize, ys: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let level = vec![0; self.sample.d()];
        let rows: Vec<Vec<f64>> = self.sample.points().map(|p| self.row(order, &level, p)).collect();
        qr_least_squares(&rows, ys)
    }

    fn dot(row: &[f64], coef: &[Vec<f64>], col: usize) -> f64 {
        row.iter().zip(coef).map(|(r, c)| r * c[col]).sum()
    }

    fn leading_bias(&self, aux_coef: &[Vec<f64>], point: &[f64], deriv: &[usize]) -> Result<f64> {
        let m = self.order;
        let d = point.len();
        let kernel = kernel_coefficients(self.spline, m)?;
        let knots = self.knots();
        let mut total = 0.0;
        for l in 0..d {
            if (0..d).any(|k| k != l && deriv[k] > 0) {
                continue;
            }
            let mut pure = vec![0; d];
            pure[l] = m;
            let dm = Self::dot(&self.row(self.order_bc, &pure, point), aux_coef, 0);
            let c = cell_of(&knots[l], point[l]);
            let h = knots[l][c + 1] - knots[l][c];
            let t = (point[l] - knots[l][c]) / h;
            let q = deriv[l];
            total -= dm / falling(m, m) * h.powi((m - q) as i32) * kernel_eval(&kernel, q, t);
        }
        Ok(total)
    }

    /// `μ̂_j(x)` for `j ∈ {0, 1, 2, 3}`.
    pub fn estimate(&self, point: &[f64], deriv: &[usize], correction: u8) -> Result<f64> {
        let n = self.sample.n();
        if n > 500 {
            return Err(Error::SizeLimit(format!("brute-force oracle needs n <= 500, got {n}")));
        }
        let k_aux = self.row(self.order_bc, &vec![0; point.len()], point).len();
        if k_aux > 60 {
            return Err(Error::SizeLimit(format!("brute-force oracle needs K <= 60, got {k_aux}")));
        }
        let y = vec![self.sample.y().to_vec()];
        let main = self.coefficients(self.order, &y)?;
        let mu0 = Self::dot(&self.row(self.order, deriv, point), &main, 0);
        if correction == 0 {
            return Ok(mu0);
        }
        let aux = self.coefficients(self.order_bc, &y)?;
        match correction {
            1 => Ok(Self::dot(&self.row(self.order_bc, deriv, point), &aux, 0)),
            3 => Ok(mu0 - self.leading_bias(&aux, point, deriv)?),
            2 => {
                let level = vec![0; point.len()];
                let b0: Vec<f64> = self
                    .sample
                    .points()
                    .map(|p| self.leading_bias(&aux, p, &level))
                    .collect::<Result<_>>()?;
                let proj = self.coefficients(self.order, &[b0])?;
                let fitted_bias = Self::dot(&self.row(self.order, deriv, point), &proj, 0);
                Ok(mu0 - self.leading_bias(&aux, point, deriv)? + fitted_bias)
            }
            _ => Err(Error::InvalidArgument(format!("unknown correction {correction}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_line_and_constant() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = oracle_ols(&x, &y, 1).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12);
        let c = oracle_ols(&x, &[3.5; 20], 2).unwrap();
        assert!((c[0] - 3.5).abs() < 1e-12 && c[1].abs() < 1e-10 && c[2].abs() < 1e-10);
    }

    #[test]
    fn finite_differences() {
        assert!((fd_derivative(|x| x * x, 3.0, 1, 1e-5) - 6.0).abs() < 1e-6);
        for r in 1..4 {
            assert!(fd_derivative(|_| 4.2, 0.3, r, 1e-2).abs() < 1e-8);
        }
        let f = |p: &[f64]| p[0] * p[0] * p[1];
        assert!((fd_partial(&f, &[1.0, 2.0], &[1, 1], 1e-4) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn quantile_by_sorting() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(sorted_quantile(&v, 0.95), 10.0);
        assert_eq!(sorted_quantile(&v, 0.5), 5.0);
    }

    #[test]
    fn hc0_of_the_mean() {
        let y = [1.0, 2.0, 4.0, 7.0];
        let rows = vec![vec![1.0]; 4];
        let o = OlsOracle::fit(&rows, &y).unwrap();
        let var: f64 = y.iter().map(|v| (v - 3.5f64).powi(2)).sum::<f64>() / 16.0;
        assert!((o.se(&[1.0]) - var.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn kernel_tables_have_the_right_shape() {
        // Legendre kernels are orthogonal to constants, Bernoulli ones integrate to zero
        for spline in [true, false] {
            for m in 1..=4 {
                let c = kernel_coefficients(spline, m).unwrap();
                let integral: f64 = c.iter().enumerate().map(|(p, v)| v / (p + 1) as f64).sum();
                assert!(integral.abs() < 1e-15);
            }
        }
    }
}
