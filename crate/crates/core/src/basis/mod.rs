//! Orthonormal polynomial bases on cells and faces, quadrature and `L²`
//! projections.
//!
//! A cell basis of degree `k` is obtained from the scaled, centred monomials
//! `((x − x_K)/h_K)^α`, ordered by total degree, through a Cholesky
//! factorization of their Gram matrix. The resulting basis is hierarchical:
//! its first `dim P_j` functions are an orthonormal basis of `P_j(K)` for
//! every `j ≤ k`.

mod function;
mod quadrature;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::mesh::{Face, PolyMesh};
use crate::scalar::{Point, Real};

pub use function::{Poly2, SmoothFunction};
pub use quadrature::{gauss_legendre, FaceRule, QuadRule, MAX_QUADRATURE_DEGREE};

/// `dim P_k` in two variables.
#[inline]
pub const fn dim_p(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponents `(a, b)` of `x^a y^b` ordered by total degree, then by `b`.
pub fn monomial_exponents(k: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::with_capacity(dim_p(k));
    for d in 0..=k {
        for j in 0..=d {
            e.push((d - j, j));
        }
    }
    e
}

/// `a! / (a − r)!`, zero when `r > a`.
#[inline]
fn falling<T: Real>(a: usize, r: usize) -> T {
    if r > a {
        return T::zero();
    }
    let mut f = 1usize;
    for i in 0..r {
        f *= a - i;
    }
    T::from_usize_lossy(f)
}

#[inline]
fn powu<T: Real>(x: T, n: usize) -> T {
    let mut r = T::one();
    for _ in 0..n {
        r *= x;
    }
    r
}

/// `L²(K)`-orthonormal basis of `P_k(K)`.
#[derive(Debug, Clone)]
pub struct CellBasis<T> {
    degree: usize,
    center: Point<T>,
    scale: T,
    exponents: Vec<(usize, usize)>,
    /// `φ_i = Σ_j coef[i, j] m_j`, lower triangular.
    coef: Mat<T>,
}

impl<T: Real> CellBasis<T> {
    /// Orthonormal basis of degree `k` on cell `cell` of `mesh`.
    pub fn new(mesh: &PolyMesh<T>, cell: usize, k: usize) -> Result<Self> {
        let c = mesh.cell(cell);
        let rule = QuadRule::cell(mesh, cell, 2 * k)?;
        Self::with_rule(c.centroid, c.diameter, k, &rule)
    }

    /// Orthonormalizes with respect to the discrete inner product of `rule`
    /// (which must be exact to degree `2k` on the cell).
    pub fn with_rule(center: Point<T>, scale: T, k: usize, rule: &QuadRule<T>) -> Result<Self> {
        let exponents = monomial_exponents(k);
        let n = exponents.len();
        let mut basis = Self {
            degree: k,
            center,
            scale,
            exponents,
            coef: Mat::identity(n),
        };
        for pass in 0..3 {
            let gram = basis.gram(rule);
            let mut residual = gram.clone();
            residual.add_assign_scaled(&Mat::identity(n), -T::one());
            if pass > 0 && residual.max_abs() <= T::epsilon() * T::lit(1e3) {
                break;
            }
            let chol = Cholesky::new(&gram).ok_or_else(|| {
                Error::Conditioning(format!(
                    "Gram matrix of P_{k} monomials is not positive definite"
                ))
            })?;
            basis.coef = chol.inverse_factor().matmul(&basis.coef);
        }
        let mut residual = basis.gram(rule);
        residual.add_assign_scaled(&Mat::identity(n), -T::one());
        if residual.max_abs() > T::epsilon().sqrt() {
            return Err(Error::Conditioning(format!(
                "basis Gram residual {:e} after re-orthonormalization",
                residual.max_abs()
            )));
        }
        Ok(basis)
    }

    /// Gram matrix of the current basis under `rule`.
    pub fn gram(&self, rule: &QuadRule<T>) -> Mat<T> {
        let n = self.dim();
        let mut g = Mat::zeros(n, n);
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            let v = self.values(p);
            for i in 0..n {
                let wi = w * v[i];
                for j in 0..=i {
                    g[(i, j)] += wi * v[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        g
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn center(&self) -> Point<T> {
        self.center
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// Coefficients of the basis in the scaled monomials.
    pub fn coefficients(&self) -> &Mat<T> {
        &self.coef
    }

    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.exponents
    }

    /// `∂x^ax ∂y^ay` of every scaled monomial at `x`.
    pub fn monomial_partials(&self, x: Point<T>, ax: usize, ay: usize) -> Vec<T> {
        let xi = (x[0] - self.center[0]) / self.scale;
        let eta = (x[1] - self.center[1]) / self.scale;
        let hfac = powu(T::one() / self.scale, ax + ay);
        self.exponents
            .iter()
            .map(|&(a, b)| {
                if a < ax || b < ay {
                    T::zero()
                } else {
                    falling::<T>(a, ax)
                        * falling::<T>(b, ay)
                        * powu(xi, a - ax)
                        * powu(eta, b - ay)
                        * hfac
                }
            })
            .collect()
    }

    /// `∂x^ax ∂y^ay φ_i(x)` for every basis function (any order).
    pub fn partials(&self, x: Point<T>, ax: usize, ay: usize) -> Vec<T> {
        let m = self.monomial_partials(x, ax, ay);
        let n = self.dim();
        (0..n)
            .map(|i| {
                let row = self.coef.row(i);
                let mut s = T::zero();
                for j in 0..=i {
                    s += row[j] * m[j];
                }
                s
            })
            .collect()
    }

    /// All partial derivatives of order `r ≤ 3`: row `i` holds
    /// `∂x^{r−c} ∂y^c φ_i` in column `c`.
    pub fn eval(&self, x: Point<T>, r: usize) -> Result<Mat<T>> {
        if r > 3 {
            return Err(Error::UnsupportedOrder(r));
        }
        let mut out = Mat::zeros(self.dim(), r + 1);
        for c in 0..=r {
            for (i, v) in self.partials(x, r - c, c).into_iter().enumerate() {
                out[(i, c)] = v;
            }
        }
        Ok(out)
    }

    /// [`eval`](Self::eval) over a set of points.
    pub fn eval_points(&self, points: &[Point<T>], r: usize) -> Result<Vec<Mat<T>>> {
        points.iter().map(|&p| self.eval(p, r)).collect()
    }

    pub fn values(&self, x: Point<T>) -> Vec<T> {
        self.partials(x, 0, 0)
    }

    pub fn gradients(&self, x: Point<T>) -> Vec<Point<T>> {
        let gx = self.partials(x, 1, 0);
        let gy = self.partials(x, 0, 1);
        gx.into_iter().zip(gy).map(|(a, b)| [a, b]).collect()
    }

    /// Hessians as `[∂xx, ∂xy, ∂yy]`.
    pub fn hessians(&self, x: Point<T>) -> Vec<[T; 3]> {
        let xx = self.partials(x, 2, 0);
        let xy = self.partials(x, 1, 1);
        let yy = self.partials(x, 0, 2);
        (0..self.dim()).map(|i| [xx[i], xy[i], yy[i]]).collect()
    }

    pub fn laplacians(&self, x: Point<T>) -> Vec<T> {
        let xx = self.partials(x, 2, 0);
        let yy = self.partials(x, 0, 2);
        xx.into_iter().zip(yy).map(|(a, b)| a + b).collect()
    }

    /// `∇Δφ_i`.
    pub fn grad_laplacians(&self, x: Point<T>) -> Vec<Point<T>> {
        let xxx = self.partials(x, 3, 0);
        let xyy = self.partials(x, 1, 2);
        let xxy = self.partials(x, 2, 1);
        let yyy = self.partials(x, 0, 3);
        (0..self.dim())
            .map(|i| [xxx[i] + xyy[i], xxy[i] + yyy[i]])
            .collect()
    }

    /// `Δ²φ_i`.
    pub fn bilaplacians(&self, x: Point<T>) -> Vec<T> {
        let a = self.partials(x, 4, 0);
        let b = self.partials(x, 2, 2);
        let c = self.partials(x, 0, 4);
        (0..self.dim())
            .map(|i| a[i] + T::lit(2.0) * b[i] + c[i])
            .collect()
    }

    /// Value of `Σ c_i φ_i` (possibly truncated `c`) and its derivative
    /// `∂x^ax ∂y^ay`.
    pub fn eval_combination(&self, coeffs: &[T], x: Point<T>, ax: usize, ay: usize) -> T {
        let p = self.partials(x, ax, ay);
        coeffs.iter().zip(&p).map(|(&c, &v)| c * v).sum()
    }

    /// `L²` projection coefficients of `f` onto the first `n` basis
    /// functions (`n = dim P_j` projects onto `P_j`).
    pub fn project(&self, rule: &QuadRule<T>, n: usize, f: impl Fn(Point<T>) -> T) -> Vec<T> {
        let mut c = vec![T::zero(); n];
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            let fw = f(p) * w;
            for (ci, v) in c.iter_mut().zip(self.values(p)) {
                *ci += fw * v;
            }
        }
        c
    }
}

/// `L²(S)`-orthonormal Legendre basis of `P_m(S)` in the arc-length
/// coordinate `s ∈ [−h_S/2, h_S/2]` measured from the face midpoint along
/// its tangent.
#[derive(Debug, Clone)]
pub struct FaceBasis<T> {
    degree: usize,
    length: T,
}

impl<T: Real> FaceBasis<T> {
    pub fn new(face: &Face<T>, m: usize) -> Self {
        Self {
            degree: m,
            length: face.length,
        }
    }

    pub fn with_length(length: T, m: usize) -> Self {
        Self { degree: m, length }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    /// `(φ_j(s), φ_j'(s))` for `j = 0..=m`.
    pub fn eval(&self, s: T) -> (Vec<T>, Vec<T>) {
        let two = T::lit(2.0);
        let z = two * s / self.length;
        let n = self.dim();
        let mut p = vec![T::zero(); n];
        let mut dp = vec![T::zero(); n];
        p[0] = T::one();
        if n > 1 {
            p[1] = z;
            dp[1] = T::one();
        }
        for j in 2..n {
            let jf = T::from_usize_lossy(j);
            p[j] = ((two * jf - T::one()) * z * p[j - 1] - (jf - T::one()) * p[j - 2]) / jf;
            dp[j] = dp[j - 2] + (two * jf - T::one()) * p[j - 1];
        }
        let dz = two / self.length;
        for j in 0..n {
            let norm = (T::from_usize_lossy(2 * j + 1) / self.length).sqrt();
            p[j] *= norm;
            dp[j] *= norm * dz;
        }
        (p, dp)
    }

    pub fn values(&self, s: T) -> Vec<T> {
        self.eval(s).0
    }

    pub fn project(&self, rule: &FaceRule<T>, f: impl Fn(Point<T>) -> T) -> Vec<T> {
        let mut c = vec![T::zero(); self.dim()];
        for ((&s, &p), &w) in rule.offsets.iter().zip(&rule.points).zip(&rule.weights) {
            let fw = f(p) * w;
            for (ci, v) in c.iter_mut().zip(self.values(s)) {
                *ci += fw * v;
            }
        }
        c
    }

    pub fn eval_combination(&self, coeffs: &[T], s: T) -> T {
        coeffs.iter().zip(self.values(s)).map(|(&c, v)| c * v).sum()
    }
}

/// Convenience: builds the basis of every cell of a mesh.
pub fn cell_bases<T: Real>(mesh: &PolyMesh<T>, k: usize) -> Result<Vec<CellBasis<T>>> {
    (0..mesh.n_cells())
        .map(|c| CellBasis::new(mesh, c, k))
        .collect()
}

#[cfg(test)]
mod tests;
