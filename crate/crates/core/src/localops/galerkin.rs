//! Galerkin (elliptic) projection and the method interpolants built on it.

use rayon::prelude::*;

use super::{Discretization, HybridField, Method};
use crate::basis::{dim_p, SmoothFunction};
use crate::error::Result;
use crate::linalg::Mat;
use crate::scalar::{dot, Real};

impl<T: Real> Discretization<'_, T> {
    /// `G_h v|_K`: `(D²(v − G_h v), D²φ)_K = 0` for all `φ ∈ P_k(K)` and
    /// `(v − G_h v, p)_K = 0` for all `p ∈ P_1(K)`.
    pub fn galerkin_projection<F: SmoothFunction<T> + ?Sized>(
        &self,
        c: usize,
        v: &F,
    ) -> Result<Vec<T>> {
        let data = self.cell_data(c);
        let n = self.n_cell();
        let p1 = dim_p(1);
        let two = T::lit(2.0);
        let mut rhs = Mat::zeros(n, 1);
        let mut moments = Mat::zeros(p1, 1);
        for (&p, &w) in data.fine_rule.points.iter().zip(&data.fine_rule.weights) {
            let [vxx, vxy, vyy] = v.hessian(p);
            let hs = data.basis.hessians(p);
            for i in 0..n {
                rhs[(i, 0)] += w * (vxx * hs[i][0] + two * vxy * hs[i][1] + vyy * hs[i][2]);
            }
            let val = v.value(p);
            let phi = data.basis.values(p);
            for m in 0..p1 {
                moments[(m, 0)] += w * val * phi[m];
            }
        }
        let g = self.constrained_hessian_solve(c, &rhs, &moments)?;
        Ok((0..n).map(|i| g[(i, 0)]).collect())
    }

    /// `L²(K)` projection of `v` onto `P_k(K)`.
    pub fn cell_projection<F: SmoothFunction<T> + ?Sized>(&self, c: usize, v: &F) -> Vec<T> {
        let data = self.cell_data(c);
        data.basis
            .project(&data.fine_rule, self.n_cell(), |p| v.value(p))
    }

    /// WG: `(G_h v, Π_Σ^k v, Π_Σ^{k−1} ∇v·ν_Σ)`; DG: `G_h v`;
    /// HHO: `(G_h v, Π_Σ^k v, Π_Σ^{k−2} ∇v·ν_Σ)`. Boundary faces get no
    /// data.
    pub fn interpolate<F: SmoothFunction<T> + ?Sized>(&self, v: &F) -> Result<HybridField<T>> {
        let mesh = self.mesh();
        let mut field = HybridField::zeros(self);
        field.cells = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| self.galerkin_projection(c, v))
            .collect::<Result<_>>()?;
        if self.method() != Method::Sip && self.method() != Method::Nip {
            for (s, face) in mesh.faces().iter().enumerate() {
                if face.is_boundary() {
                    continue;
                }
                let fd = self.face_data(s);
                field.face_values[s] = fd.value_basis.project(&fd.fine_rule, |p| v.value(p));
                let nb = fd
                    .normal_basis
                    .as_ref()
                    .expect("hybrid faces carry normal data");
                field.face_normals[s] =
                    nb.project(&fd.fine_rule, |p| dot(v.gradient(p), face.normal));
            }
        }
        Ok(field)
    }
}
