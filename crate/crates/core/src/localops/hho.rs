//! Hybrid high-order deflection reconstruction.

use super::{Discretization, Method};
use crate::basis::dim_p;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{dot, Real};

impl<T: Real> Discretization<'_, T> {
    /// Right-hand side map of the reconstruction: row `i` is the linear
    /// functional
    /// `(v_K, Δ²φ_i)_K − Σ_S σ_K ∫_S (v_S ∂_νΔφ_i − γ_S ∂_ννφ_i − ∂_t v_S ∂_νtφ_i)`
    /// on local vectors.
    pub fn hho_reconstruction_rhs(&self, c: usize) -> Result<Mat<T>> {
        self.require(Method::Hho, "the HHO reconstruction")?;
        let mesh = self.mesh();
        let cell = mesh.cell(c);
        let data = self.cell_data(c);
        let nc = self.n_cell();
        let mut r = Mat::zeros(nc, self.local_dim(c));
        for (&p, &w) in data.rule.points.iter().zip(&data.rule.weights) {
            let phi = data.basis.values(p);
            let bil = data.basis.bilaplacians(p);
            for i in 0..nc {
                let wb = w * bil[i];
                for j in 0..nc {
                    r[(i, j)] += wb * phi[j];
                }
            }
        }
        let two = T::lit(2.0);
        for (li, &s) in cell.faces.iter().enumerate() {
            let face = mesh.face(s);
            let fd = self.face_data(s);
            let nb = fd
                .normal_basis
                .as_ref()
                .expect("HHO faces carry normal data");
            let sg = cell.sign(li);
            let (vo, no) = (self.value_offset(li), self.normal_offset(li));
            let (nu, t) = (face.normal, face.tangent);
            for ((&off, &p), &w) in fd
                .rule
                .offsets
                .iter()
                .zip(&fd.rule.points)
                .zip(&fd.rule.weights)
            {
                let (vals, dvals) = fd.value_basis.eval(off);
                let nors = nb.values(off);
                let gl = data.basis.grad_laplacians(p);
                let hs = data.basis.hessians(p);
                for i in 0..nc {
                    let [xx, xy, yy] = hs[i];
                    let d_nu_lap = dot(gl[i], nu);
                    let d_nunu = xx * nu[0] * nu[0] + two * xy * nu[0] * nu[1] + yy * nu[1] * nu[1];
                    let d_nut =
                        xx * nu[0] * t[0] + xy * (nu[0] * t[1] + nu[1] * t[0]) + yy * nu[1] * t[1];
                    let ws = sg * w;
                    for j in 0..vals.len() {
                        r[(i, vo + j)] += ws * (dvals[j] * d_nut - vals[j] * d_nu_lap);
                    }
                    for (j, &g) in nors.iter().enumerate() {
                        r[(i, no + j)] += ws * g * d_nunu;
                    }
                }
            }
        }
        Ok(r)
    }

    /// Matrix of `v_loc ↦ R_h v_h|_K ∈ P_k(K)` (orthonormal coefficients),
    /// with the affine part pinned by `Π_K^1 R_h v_h = Π_K^1 v_K`.
    pub fn hho_reconstruction_matrix(&self, c: usize) -> Result<Mat<T>> {
        let rhs = self.hho_reconstruction_rhs(c)?;
        let p1 = dim_p(1);
        let mut moments = Mat::zeros(p1, rhs.cols());
        for m in 0..p1 {
            moments[(m, m)] = T::one();
        }
        self.constrained_hessian_solve(c, &rhs, &moments)
    }

    pub fn hho_reconstruction(&self, c: usize, local: &[T]) -> Result<Vec<T>> {
        let r = self.hho_reconstruction_matrix(c)?;
        if local.len() != r.cols() {
            return Err(Error::InvalidArgument(format!(
                "local vector has length {}, expected {}",
                local.len(),
                r.cols()
            )));
        }
        Ok(r.mul_vec(local))
    }
}
