//! Cell-local operators of the four discretizations.
//!
//! Every globally defined operator (the WG and DG discrete Laplacians, the
//! HHO reconstruction) is tested against broken polynomials, so it
//! decouples cell by cell. On cell `K` the jump of a test function supported
//! in `K` across face `S` is `σ_K φ|_K` with `σ_K = ν_K · ν_S ∈ {±1}`; face
//! data on boundary faces is zero, which encodes the clamped boundary
//! conditions.
//!
//! Hybrid local vectors (WG/HHO) are laid out as the cell block followed,
//! for each face of the cell in loop order, by the face-value block and the
//! normal-derivative block. Boundary faces keep their slots, filled with
//! zeros.

mod dg;
mod field;
mod galerkin;
mod hho;
mod wg;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{dim_p, CellBasis, FaceBasis, FaceRule, QuadRule};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::mesh::PolyMesh;
use crate::scalar::Real;

pub use dg::DgLaplacian;
pub use field::HybridField;

/// The discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Weak Galerkin: `P_k(M) × P_k(Σ(Ω)) × P_{k−1}(Σ(Ω))`.
    Wg,
    /// Symmetric interior penalty DG (`θ = 1`).
    Sip,
    /// Nonsymmetric interior penalty DG (`θ = −1`).
    Nip,
    /// Hybrid high-order: `P_k(M) × P_k(Σ(Ω)) × P_{k−2}(Σ(Ω))`.
    Hho,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Wg, Method::Sip, Method::Nip, Method::Hho];

    pub fn is_hybrid(self) -> bool {
        matches!(self, Method::Wg | Method::Hho)
    }

    pub fn is_dg(self) -> bool {
        matches!(self, Method::Sip | Method::Nip)
    }

    pub fn is_symmetric(self) -> bool {
        self != Method::Nip
    }

    /// `θ` of the interior-penalty form (zero for hybrid methods).
    pub fn theta(self) -> i8 {
        match self {
            Method::Sip => 1,
            Method::Nip => -1,
            _ => 0,
        }
    }

    /// Degree of the face normal-derivative unknowns, if any.
    pub fn normal_degree(self, k: usize) -> Option<usize> {
        match self {
            Method::Wg => Some(k - 1),
            Method::Hho => Some(k - 2),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Wg => "wg",
            Method::Sip => "sip",
            Method::Nip => "nip",
            Method::Hho => "hho",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wg" => Ok(Method::Wg),
            "sip" => Ok(Method::Sip),
            "nip" => Ok(Method::Nip),
            "hho" => Ok(Method::Hho),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Per-cell basis and quadrature.
#[derive(Debug, Clone)]
pub struct CellData<T> {
    pub basis: CellBasis<T>,
    /// Exact for every bilinear-form integrand (degree `2k + 2`).
    pub rule: QuadRule<T>,
    /// Higher-degree rule for non-polynomial integrands.
    pub fine_rule: QuadRule<T>,
}

/// Per-face bases and quadrature.
#[derive(Debug, Clone)]
pub struct FaceData<T> {
    pub value_basis: FaceBasis<T>,
    pub normal_basis: Option<FaceBasis<T>>,
    pub rule: FaceRule<T>,
    pub fine_rule: FaceRule<T>,
}

/// Mesh, method, degree and the precomputed bases/rules every local
/// operator needs.
#[derive(Debug, Clone)]
pub struct Discretization<'a, T> {
    mesh: &'a PolyMesh<T>,
    method: Method,
    k: usize,
    cells: Vec<CellData<T>>,
    faces: Vec<FaceData<T>>,
}

pub(crate) fn fine_degree(k: usize) -> usize {
    (2 * k + 8).max(16)
}

impl<'a, T: Real> Discretization<'a, T> {
    pub fn new(mesh: &'a PolyMesh<T>, method: Method, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidDegree {
                degree: k,
                reason: "all methods require k >= 2",
            });
        }
        let cells = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| -> Result<CellData<T>> {
                let rule = QuadRule::cell(mesh, c, 2 * k + 2)?;
                let cell = mesh.cell(c);
                let basis = CellBasis::with_rule(cell.centroid, cell.diameter, k, &rule)?;
                Ok(CellData {
                    basis,
                    rule,
                    fine_rule: QuadRule::cell(mesh, c, fine_degree(k))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let faces = mesh
            .faces()
            .iter()
            .map(|f| -> Result<FaceData<T>> {
                Ok(FaceData {
                    value_basis: FaceBasis::new(f, k),
                    normal_basis: method.normal_degree(k).map(|m| FaceBasis::new(f, m)),
                    rule: FaceRule::new(f, 2 * k + 2)?,
                    fine_rule: FaceRule::new(f, fine_degree(k))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mesh,
            method,
            k,
            cells,
            faces,
        })
    }

    pub fn mesh(&self) -> &'a PolyMesh<T> {
        self.mesh
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn cell_data(&self, c: usize) -> &CellData<T> {
        &self.cells[c]
    }

    pub fn face_data(&self, s: usize) -> &FaceData<T> {
        &self.faces[s]
    }

    pub fn basis(&self, c: usize) -> &CellBasis<T> {
        &self.cells[c].basis
    }

    /// `dim P_k(K)`.
    pub fn n_cell(&self) -> usize {
        dim_p(self.k)
    }

    /// `dim P_{k−2}(K)`, the range of the discrete Laplacian.
    pub fn n_lap(&self) -> usize {
        dim_p(self.k - 2)
    }

    /// `dim P_k(S)`.
    pub fn n_face_value(&self) -> usize {
        if self.method.is_hybrid() {
            self.k + 1
        } else {
            0
        }
    }

    /// Dimension of the face normal-derivative space.
    pub fn n_face_normal(&self) -> usize {
        self.method.normal_degree(self.k).map_or(0, |m| m + 1)
    }

    pub fn n_face(&self) -> usize {
        self.n_face_value() + self.n_face_normal()
    }

    /// Length of the local vector of cell `c`.
    pub fn local_dim(&self, c: usize) -> usize {
        self.n_cell() + self.mesh.cell(c).n_faces() * self.n_face()
    }

    /// Offset of the face-value block of local face `i`.
    #[inline]
    pub fn value_offset(&self, i: usize) -> usize {
        self.n_cell() + i * self.n_face()
    }

    /// Offset of the normal-derivative block of local face `i`.
    #[inline]
    pub fn normal_offset(&self, i: usize) -> usize {
        self.value_offset(i) + self.n_face_value()
    }

    pub(crate) fn require_hybrid(&self, what: &str) -> Result<()> {
        if self.method.is_hybrid() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{what} needs a hybrid method, got {}",
                self.method
            )))
        }
    }

    pub(crate) fn require(&self, method: Method, what: &str) -> Result<()> {
        if self.method == method {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{what} is defined for {method}, got {}",
                self.method
            )))
        }
    }

    /// Piecewise Hessian stiffness `(D²φ_j, D²φ_i)_K` (symmetric, zero on
    /// the affine modes).
    pub fn hessian_stiffness(&self, c: usize) -> Mat<T> {
        let data = &self.cells[c];
        let n = self.n_cell();
        let two = T::lit(2.0);
        let mut h = Mat::zeros(n, n);
        for (&p, &w) in data.rule.points.iter().zip(&data.rule.weights) {
            let hs = data.basis.hessians(p);
            for i in 0..n {
                for j in 0..=i {
                    h[(i, j)] +=
                        w * (hs[i][0] * hs[j][0] + two * hs[i][1] * hs[j][1] + hs[i][2] * hs[j][2]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
        }
        h
    }

    /// Solves `H x = rhs` subject to `Π^1 x = moments` through the bordered
    /// system `[[H, Cᵀ], [C, 0]]`, where `C` extracts the `L²` moments
    /// against the affine basis functions. Columns of `rhs` and `moments`
    /// are solved simultaneously.
    pub(crate) fn constrained_hessian_solve(
        &self,
        c: usize,
        rhs: &Mat<T>,
        moments: &Mat<T>,
    ) -> Result<Mat<T>> {
        let n = self.n_cell();
        let p1 = dim_p(1);
        let h = self.hessian_stiffness(c);
        let mut bordered = Mat::zeros(n + p1, n + p1);
        for i in 0..n {
            for j in 0..n {
                bordered[(i, j)] = h[(i, j)];
            }
        }
        let scale = h.max_abs().max(T::one());
        for m in 0..p1 {
            // orthonormal hierarchical basis: the moment of φ_j against φ_m is δ_jm
            bordered[(n + m, m)] = scale;
            bordered[(m, n + m)] = scale;
        }
        let lu = Lu::new(&bordered).ok_or_else(|| {
            Error::Conditioning(format!("bordered Hessian system of cell {c} is singular"))
        })?;
        let cols = rhs.cols();
        let mut b = Mat::zeros(n + p1, cols);
        for j in 0..cols {
            for i in 0..n {
                b[(i, j)] = rhs[(i, j)];
            }
            for m in 0..p1 {
                b[(n + m, j)] = scale * moments[(m, j)];
            }
        }
        Ok(lu.solve_mat(&b).block(0..n, 0..cols))
    }
}

#[cfg(test)]
mod tests;
