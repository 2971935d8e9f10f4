//! Weak Galerkin discrete Laplacian and the hybrid (WG/HHO) stabilization.

use super::{Discretization, HybridField, Method};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{dot, Real};

impl<T: Real> Discretization<'_, T> {
    /// Matrix of `v_loc ↦ Δ_h v_h|_K` in the orthonormal `P_{k−2}(K)`
    /// basis:
    /// `(Δ_h v, ψ)_K = (v_K, Δψ)_K + Σ_S σ_K ∫_S (γ_S ψ − v_S ∇ψ·ν_S)`.
    pub fn wg_laplacian_matrix(&self, c: usize) -> Result<Mat<T>> {
        self.require(Method::Wg, "the WG discrete Laplacian")?;
        let mesh = self.mesh();
        let cell = mesh.cell(c);
        let data = self.cell_data(c);
        let (nl, nc) = (self.n_lap(), self.n_cell());
        let mut b = Mat::zeros(nl, self.local_dim(c));
        for (&p, &w) in data.rule.points.iter().zip(&data.rule.weights) {
            let phi = data.basis.values(p);
            let lap = data.basis.laplacians(p);
            for i in 0..nl {
                let wl = w * lap[i];
                for j in 0..nc {
                    b[(i, j)] += wl * phi[j];
                }
            }
        }
        for (li, &s) in cell.faces.iter().enumerate() {
            let face = mesh.face(s);
            let fd = self.face_data(s);
            let sg = cell.sign(li);
            let nb = fd
                .normal_basis
                .as_ref()
                .expect("WG faces carry normal data");
            let (vo, no) = (self.value_offset(li), self.normal_offset(li));
            for ((&off, &p), &w) in fd
                .rule
                .offsets
                .iter()
                .zip(&fd.rule.points)
                .zip(&fd.rule.weights)
            {
                let psi = data.basis.values(p);
                let grad = data.basis.gradients(p);
                let vals = fd.value_basis.values(off);
                let nors = nb.values(off);
                for i in 0..nl {
                    let dn = dot(grad[i], face.normal);
                    for (j, &v) in vals.iter().enumerate() {
                        b[(i, vo + j)] -= sg * w * v * dn;
                    }
                    for (j, &g) in nors.iter().enumerate() {
                        b[(i, no + j)] += sg * w * g * psi[i];
                    }
                }
            }
        }
        Ok(b)
    }

    /// `Δ_h v_h|_K` coefficients in the orthonormal `P_{k−2}(K)` basis.
    pub fn wg_discrete_laplacian(&self, c: usize, local: &[T]) -> Result<Vec<T>> {
        let b = self.wg_laplacian_matrix(c)?;
        if local.len() != b.cols() {
            return Err(Error::InvalidArgument(format!(
                "local vector has length {}, expected {}",
                local.len(),
                b.cols()
            )));
        }
        Ok(b.mul_vec(local))
    }

    /// Cell-wise stabilization matrix of the hybrid methods,
    /// `Σ_{S ⊂ ∂K} h_S⁻³ (v_K − v_S, ·)_S + h_S⁻¹ (P(∇v_K·ν_S − γ_S), P(·))_S`,
    /// with `P` the identity for WG and `Π_S^{k−2}` for HHO.
    pub fn hybrid_stabilization_matrix(&self, c: usize) -> Result<Mat<T>> {
        self.require_hybrid("the hybrid stabilization")?;
        let mesh = self.mesh();
        let cell = mesh.cell(c);
        let data = self.cell_data(c);
        let nc = self.n_cell();
        let n = self.local_dim(c);
        let mut s_mat = Mat::zeros(n, n);
        let mut a = vec![T::zero(); n];
        for (li, &s) in cell.faces.iter().enumerate() {
            let face = mesh.face(s);
            let fd = self.face_data(s);
            let nb = fd
                .normal_basis
                .as_ref()
                .expect("hybrid faces carry normal data");
            let (vo, no) = (self.value_offset(li), self.normal_offset(li));
            let (nv, nn) = (self.n_face_value(), self.n_face_normal());
            let h = face.length;
            let w3 = T::one() / (h * h * h);
            let w1 = T::one() / h;
            // value residual, and for WG the unprojected normal residual
            for ((&off, &p), &w) in fd
                .rule
                .offsets
                .iter()
                .zip(&fd.rule.points)
                .zip(&fd.rule.weights)
            {
                let phi = data.basis.values(p);
                let grad = data.basis.gradients(p);
                let vals = fd.value_basis.values(off);
                a.iter_mut().for_each(|x| *x = T::zero());
                a[..nc].copy_from_slice(&phi);
                for j in 0..nv {
                    a[vo + j] = -vals[j];
                }
                rank_one_update(&mut s_mat, &a, w * w3);
                if self.method() == Method::Wg {
                    let nors = nb.values(off);
                    a.iter_mut().for_each(|x| *x = T::zero());
                    for j in 0..nc {
                        a[j] = dot(grad[j], face.normal);
                    }
                    for j in 0..nn {
                        a[no + j] = -nors[j];
                    }
                    rank_one_update(&mut s_mat, &a, w * w1);
                }
            }
            if self.method() == Method::Hho {
                // moments of the normal residual against the P_{k-2}(S) basis
                for l in 0..nn {
                    a.iter_mut().for_each(|x| *x = T::zero());
                    for ((&off, &p), &w) in fd
                        .rule
                        .offsets
                        .iter()
                        .zip(&fd.rule.points)
                        .zip(&fd.rule.weights)
                    {
                        let mu = nb.values(off)[l];
                        let grad = data.basis.gradients(p);
                        for j in 0..nc {
                            a[j] += w * mu * dot(grad[j], face.normal);
                        }
                    }
                    a[no + l] = -T::one();
                    rank_one_update(&mut s_mat, &a, w1);
                }
            }
        }
        Ok(s_mat)
    }

    /// `s_K(u, v)` for two local vectors of a hybrid method.
    pub fn local_stabilization(&self, c: usize, u: &[T], v: &[T]) -> Result<T> {
        let s = self.hybrid_stabilization_matrix(c)?;
        if u.len() != s.cols() || v.len() != s.cols() {
            return Err(Error::InvalidArgument(
                "local data does not match the cell layout".into(),
            ));
        }
        Ok(s.bilinear(v, u))
    }

    /// `Δ_h v_h` on every cell (WG or DG).
    pub fn discrete_laplacian(&self, field: &HybridField<T>) -> Result<Vec<Vec<T>>> {
        field.check(self)?;
        (0..self.mesh().n_cells())
            .map(|c| match self.method() {
                Method::Wg => self.wg_discrete_laplacian(c, &field.local(self, c)),
                Method::Sip | Method::Nip => self.dg_discrete_laplacian(c, field),
                Method::Hho => Err(Error::InvalidArgument(
                    "HHO has no discrete Laplacian; use the reconstruction".into(),
                )),
            })
            .collect()
    }
}

pub(crate) fn rank_one_update<T: Real>(m: &mut Mat<T>, a: &[T], w: T) {
    for (i, &ai) in a.iter().enumerate() {
        if ai == T::zero() {
            continue;
        }
        let wa = w * ai;
        for (x, &aj) in m.row_mut(i).iter_mut().zip(a) {
            *x += wa * aj;
        }
    }
}
