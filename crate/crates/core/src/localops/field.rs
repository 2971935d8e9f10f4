use rand::Rng;

use super::{Discretization, Method};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Discrete function `v_h = (v_M, v_Σ, γ_Σ)` in orthonormal-basis
/// coefficients. Boundary faces (and every face, for DG) store empty
/// blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridField<T> {
    pub method: Method,
    pub degree: usize,
    pub cells: Vec<Vec<T>>,
    pub face_values: Vec<Vec<T>>,
    pub face_normals: Vec<Vec<T>>,
}

impl<T: Real> HybridField<T> {
    pub fn zeros(disc: &Discretization<'_, T>) -> Self {
        let mesh = disc.mesh();
        let face_block = |n: usize| -> Vec<Vec<T>> {
            mesh.faces()
                .iter()
                .map(|f| {
                    if f.is_boundary() {
                        Vec::new()
                    } else {
                        vec![T::zero(); n]
                    }
                })
                .collect()
        };
        Self {
            method: disc.method(),
            degree: disc.degree(),
            cells: vec![vec![T::zero(); disc.n_cell()]; mesh.n_cells()],
            face_values: face_block(disc.n_face_value()),
            face_normals: face_block(disc.n_face_normal()),
        }
    }

    /// Field with independent uniform coefficients in `[-1, 1]`.
    pub fn random<R: Rng>(disc: &Discretization<'_, T>, rng: &mut R) -> Self {
        let mut f = Self::zeros(disc);
        f.map_mut(|_| T::lit(rng.gen_range(-1.0..1.0)));
        f
    }

    fn map_mut(&mut self, mut g: impl FnMut(T) -> T) {
        for block in self
            .cells
            .iter_mut()
            .chain(&mut self.face_values)
            .chain(&mut self.face_normals)
        {
            for v in block {
                *v = g(*v);
            }
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut f = self.clone();
        f.map_mut(|v| alpha * v);
        f
    }

    /// Checks the block structure against a discretization.
    pub fn check(&self, disc: &Discretization<'_, T>) -> Result<()> {
        let mesh = disc.mesh();
        let bad = |what: &str| {
            Err(Error::InvalidArgument(format!(
                "field does not match the discretization: {what}"
            )))
        };
        if self.method != disc.method() || self.degree != disc.degree() {
            return bad("method or degree");
        }
        if self.cells.len() != mesh.n_cells() || self.cells.iter().any(|c| c.len() != disc.n_cell())
        {
            return bad("cell blocks");
        }
        if self.face_values.len() != mesh.n_faces() || self.face_normals.len() != mesh.n_faces() {
            return bad("face count");
        }
        for (s, f) in mesh.faces().iter().enumerate() {
            let (nv, nn) = if f.is_boundary() {
                (0, 0)
            } else {
                (disc.n_face_value(), disc.n_face_normal())
            };
            if self.face_values[s].len() != nv || self.face_normals[s].len() != nn {
                return bad("face blocks");
            }
        }
        Ok(())
    }

    /// Local vector of cell `c` (hybrid layout, zeros on boundary faces).
    pub fn local(&self, disc: &Discretization<'_, T>, c: usize) -> Vec<T> {
        let mut v = vec![T::zero(); disc.local_dim(c)];
        v[..disc.n_cell()].copy_from_slice(&self.cells[c]);
        for (i, &s) in disc.mesh().cell(c).faces.iter().enumerate() {
            if !self.face_values[s].is_empty() {
                let o = disc.value_offset(i);
                v[o..o + disc.n_face_value()].copy_from_slice(&self.face_values[s]);
            }
            if !self.face_normals[s].is_empty() {
                let o = disc.normal_offset(i);
                v[o..o + disc.n_face_normal()].copy_from_slice(&self.face_normals[s]);
            }
        }
        v
    }
}
