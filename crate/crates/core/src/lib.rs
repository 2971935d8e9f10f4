//! Nonconforming discretizations of the clamped biharmonic problem
//! `Δ²u = f`, `u = ∂u/∂ν = 0` on `∂Ω`, on general polygonal meshes:
//! weak Galerkin (WG), symmetric/nonsymmetric interior-penalty DG (SIP/NIP)
//! and hybrid high-order (HHO), together with a convergence-study harness.
//!
//! All numerical code is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix `f64`, which is what the
//! study harness and CLI use.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod linalg;
pub mod localops;
pub mod mesh;
pub mod reference;
pub mod scalar;
pub mod solver;
pub mod sparse;
pub mod study;

pub use error::{Error, MeshDefect, Result};
pub use scalar::{Point, Real};

pub type Mesh = mesh::PolyMesh<f64>;
pub type CellBasis = basis::CellBasis<f64>;
pub type FaceBasis = basis::FaceBasis<f64>;
pub type Discretization<'a> = localops::Discretization<'a, f64>;
pub type HybridField = localops::HybridField<f64>;
pub type AssembledSystem = assembly::AssembledSystem<f64>;
pub type SparseMatrix = sparse::CsrMatrix<f64>;
