//! Interior-penalty DG: discrete Laplacian, face forms and stabilization.
//!
//! Jumps and averages use the fixed face orientation,
//! `[v] = v|_{K+} − v|_{K−}`, `{v} = (v|_{K+} + v|_{K−})/2`; on boundary
//! faces both reduce to the one-sided trace.

use super::{Discretization, HybridField};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{dot, Real};

/// `Δ_h v_h|_K` as a linear map of the coefficients of `K` and its
/// neighbours: column block `b` belongs to `cells[b]` (`cells[0] == K`).
#[derive(Debug, Clone)]
pub struct DgLaplacian<T> {
    pub cells: Vec<usize>,
    pub matrix: Mat<T>,
}

impl<T: Real> DgLaplacian<T> {
    pub fn apply(&self, field: &HybridField<T>) -> Vec<T> {
        let mut x = Vec::with_capacity(self.matrix.cols());
        for &c in &self.cells {
            x.extend_from_slice(&field.cells[c]);
        }
        self.matrix.mul_vec(&x)
    }
}

/// Jump/average coefficients of every basis function of the cells adjacent
/// to a face, at one quadrature point. Index `j < n` refers to the plus
/// cell, `n + j` to the minus cell.
#[derive(Debug, Clone)]
pub struct FaceTraces<T> {
    pub jump: Vec<T>,
    pub jump_dn: Vec<T>,
    pub avg: Vec<T>,
    pub avg_dn: Vec<T>,
    pub avg_lap: Vec<T>,
    pub avg_dn_lap: Vec<T>,
}

impl<T: Real> Discretization<'_, T> {
    pub(crate) fn require_dg(&self, what: &str) -> Result<()> {
        if self.method().is_dg() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{what} needs SIP or NIP, got {}",
                self.method()
            )))
        }
    }

    /// Cells adjacent to face `s`: `[plus]` or `[plus, minus]`.
    pub fn face_cells(&self, s: usize) -> Vec<usize> {
        let f = self.mesh().face(s);
        match f.minus {
            Some(m) => vec![f.plus, m],
            None => vec![f.plus],
        }
    }

    pub fn face_traces(&self, s: usize, q: usize) -> FaceTraces<T> {
        let face = self.mesh().face(s);
        let p = self.face_data(s).rule.points[q];
        let n = self.n_cell();
        let cells = self.face_cells(s);
        let m = n * cells.len();
        let mut t = FaceTraces {
            jump: vec![T::zero(); m],
            jump_dn: vec![T::zero(); m],
            avg: vec![T::zero(); m],
            avg_dn: vec![T::zero(); m],
            avg_lap: vec![T::zero(); m],
            avg_dn_lap: vec![T::zero(); m],
        };
        let avg_w = if cells.len() == 2 {
            T::lit(0.5)
        } else {
            T::one()
        };
        for (b, &c) in cells.iter().enumerate() {
            let basis = self.basis(c);
            let sign = if b == 0 { T::one() } else { -T::one() };
            let vals = basis.values(p);
            let grads = basis.gradients(p);
            let laps = basis.laplacians(p);
            let gl = basis.grad_laplacians(p);
            for j in 0..n {
                let dn = dot(grads[j], face.normal);
                let dnl = dot(gl[j], face.normal);
                let idx = b * n + j;
                t.jump[idx] = sign * vals[j];
                t.jump_dn[idx] = sign * dn;
                t.avg[idx] = avg_w * vals[j];
                t.avg_dn[idx] = avg_w * dn;
                t.avg_lap[idx] = avg_w * laps[j];
                t.avg_dn_lap[idx] = avg_w * dnl;
            }
        }
        t
    }

    /// `Δ_h v_h|_K` from its defining identity
    /// `(Δ_h v, ψ)_K = (v_K, Δψ)_K + Σ_{S interior} σ_K ∫_S ({∇v}·ν_S ψ − {v} ∇ψ·ν_S)`.
    pub fn dg_laplacian_operator(&self, c: usize) -> Result<DgLaplacian<T>> {
        self.require_dg("the DG discrete Laplacian")?;
        let mesh = self.mesh();
        let cell = mesh.cell(c);
        let data = self.cell_data(c);
        let (nl, n) = (self.n_lap(), self.n_cell());
        let mut cells = vec![c];
        for &s in &cell.faces {
            let f = mesh.face(s);
            if let Some(m) = f.minus {
                cells.push(if f.plus == c { m } else { f.plus });
            }
        }
        let mut mat = Mat::zeros(nl, n * cells.len());
        for (&p, &w) in data.rule.points.iter().zip(&data.rule.weights) {
            let phi = data.basis.values(p);
            let lap = data.basis.laplacians(p);
            for i in 0..nl {
                for j in 0..n {
                    mat[(i, j)] += w * lap[i] * phi[j];
                }
            }
        }
        let mut block = 0;
        for (li, &s) in cell.faces.iter().enumerate() {
            let face = mesh.face(s);
            if face.is_boundary() {
                continue;
            }
            block += 1;
            let sg = cell.sign(li);
            let nbr = cells[block];
            let nb_basis = self.basis(nbr);
            let half = T::lit(0.5);
            let fd = self.face_data(s);
            for (&p, &w) in fd.rule.points.iter().zip(&fd.rule.weights) {
                let psi = data.basis.values(p);
                let gpsi = data.basis.gradients(p);
                let nb_v = nb_basis.values(p);
                let nb_g = nb_basis.gradients(p);
                for i in 0..nl {
                    let dpsi = dot(gpsi[i], face.normal);
                    for j in 0..n {
                        let own = half * (dot(gpsi[j], face.normal) * psi[i] - psi[j] * dpsi);
                        let other = half * (dot(nb_g[j], face.normal) * psi[i] - nb_v[j] * dpsi);
                        mat[(i, j)] += sg * w * own;
                        mat[(i, block * n + j)] += sg * w * other;
                    }
                }
            }
        }
        Ok(DgLaplacian { cells, matrix: mat })
    }

    pub fn dg_discrete_laplacian(&self, c: usize, field: &HybridField<T>) -> Result<Vec<T>> {
        Ok(self.dg_laplacian_operator(c)?.apply(field))
    }

    /// `Δ_h v_h|_K` from the integrated-by-parts identity
    /// `(Δ_h v, ψ)_K = (Δv_K, ψ)_K − Σ_{S ⊂ ∂K} w_S ∫_S ([∇v]·ν_S ψ − [v] ∇ψ·ν_S)`
    /// with `w_S = 1/2` on interior and `1` on boundary faces.
    pub fn dg_discrete_laplacian_ibp(&self, c: usize, field: &HybridField<T>) -> Result<Vec<T>> {
        self.require_dg("the DG discrete Laplacian")?;
        field.check(self)?;
        let mesh = self.mesh();
        let cell = mesh.cell(c);
        let data = self.cell_data(c);
        let nl = self.n_lap();
        let mut out = vec![T::zero(); nl];
        let vk = &field.cells[c];
        for (&p, &w) in data.rule.points.iter().zip(&data.rule.weights) {
            let lap_v =
                data.basis.eval_combination(vk, p, 2, 0) + data.basis.eval_combination(vk, p, 0, 2);
            let psi = data.basis.values(p);
            for i in 0..nl {
                out[i] += w * lap_v * psi[i];
            }
        }
        for &s in &cell.faces {
            let face = mesh.face(s);
            let fd = self.face_data(s);
            let avg_w = if face.is_boundary() {
                T::one()
            } else {
                T::lit(0.5)
            };
            for (&p, &w) in fd.rule.points.iter().zip(&fd.rule.weights) {
                let (jump, jump_dn) = self.field_jumps(s, field, p);
                let psi = data.basis.values(p);
                let gpsi = data.basis.gradients(p);
                for i in 0..nl {
                    let term = jump_dn * avg_w * psi[i] - jump * avg_w * dot(gpsi[i], face.normal);
                    out[i] -= w * term;
                }
            }
        }
        Ok(out)
    }

    /// `([v]_S, [∇v]_S·ν_S)` of a DG field at a point of face `s`.
    pub fn field_jumps(
        &self,
        s: usize,
        field: &HybridField<T>,
        p: crate::scalar::Point<T>,
    ) -> (T, T) {
        let face = self.mesh().face(s);
        let mut jump = T::zero();
        let mut jump_dn = T::zero();
        for (b, &c) in self.face_cells(s).iter().enumerate() {
            let sign = if b == 0 { T::one() } else { -T::one() };
            let basis = self.basis(c);
            let v = &field.cells[c];
            jump += sign * basis.eval_combination(v, p, 0, 0);
            let g = [
                basis.eval_combination(v, p, 1, 0),
                basis.eval_combination(v, p, 0, 1),
            ];
            jump_dn += sign * dot(g, face.normal);
        }
        (jump, jump_dn)
    }

    /// Volume block `(Δφ_j, Δφ_i)_K`.
    pub fn laplacian_stiffness(&self, c: usize) -> Mat<T> {
        let data = self.cell_data(c);
        let n = self.n_cell();
        let mut m = Mat::zeros(n, n);
        for (&p, &w) in data.rule.points.iter().zip(&data.rule.weights) {
            let lap = data.basis.laplacians(p);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += w * lap[i] * lap[j];
                }
            }
        }
        m
    }

    /// Face stabilization block `∫_S h_S⁻³ [φ_j][φ_i] + h_S⁻¹ [∂_νφ_j][∂_νφ_i]`
    /// over the cells of [`face_cells`](Self::face_cells).
    pub fn dg_stabilization_matrix(&self, s: usize) -> Result<Mat<T>> {
        self.require_dg("the DG stabilization")?;
        let h = self.mesh().face(s).length;
        let (w3, w1) = (T::one() / (h * h * h), T::one() / h);
        let m = self.n_cell() * self.face_cells(s).len();
        let mut out = Mat::zeros(m, m);
        let weights = &self.face_data(s).rule.weights;
        for (q, &w) in weights.iter().enumerate() {
            let t = self.face_traces(s, q);
            for i in 0..m {
                for j in 0..m {
                    out[(i, j)] +=
                        w * (w3 * t.jump[i] * t.jump[j] + w1 * t.jump_dn[i] * t.jump_dn[j]);
                }
            }
        }
        Ok(out)
    }

    /// Face block of `a_h` (consistency, symmetry/antisymmetry and penalty
    /// terms); entry `(i, j)` is the contribution to `a_h(φ_j, φ_i)`.
    pub fn dg_face_matrix(&self, s: usize, sigma: T) -> Result<Mat<T>> {
        self.require_dg("the DG face form")?;
        let theta = T::lit(self.method().theta() as f64);
        let m = self.n_cell() * self.face_cells(s).len();
        let mut out = self.dg_stabilization_matrix(s)?;
        out.scale(sigma);
        let weights = &self.face_data(s).rule.weights;
        for (q, &w) in weights.iter().enumerate() {
            let t = self.face_traces(s, q);
            for i in 0..m {
                for j in 0..m {
                    let v = theta * t.jump[j] * t.avg_dn_lap[i] + t.jump[i] * t.avg_dn_lap[j]
                        - theta * t.avg_lap[i] * t.jump_dn[j]
                        - t.avg_lap[j] * t.jump_dn[i];
                    out[(i, j)] += w * v;
                }
            }
        }
        Ok(out)
    }

    /// `∫_S h_S⁻³ [u][v] + h_S⁻¹ [∂_ν u][∂_ν v]` for DG fields.
    pub fn dg_face_stabilization(
        &self,
        s: usize,
        u: &HybridField<T>,
        v: &HybridField<T>,
    ) -> Result<T> {
        let m = self.dg_stabilization_matrix(s)?;
        let cells = self.face_cells(s);
        let gather = |f: &HybridField<T>| -> Vec<T> {
            cells
                .iter()
                .flat_map(|&c| f.cells[c].iter().copied())
                .collect()
        };
        Ok(m.bilinear(&gather(v), &gather(u)))
    }
}
