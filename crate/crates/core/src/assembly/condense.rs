//! Static condensation of the cell unknowns of the hybrid methods.

use rayon::prelude::*;

use super::{hybrid_local_matrix, AssembledSystem};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::localops::Discretization;
use crate::scalar::Real;
use crate::solver::{solve_blocked, SolveMethod, SolveReport, SolverOptions};
use crate::sparse::{CsrMatrix, TripletBuilder};

struct CellElimination<T> {
    chol: Cholesky<T>,
    /// `A_TF` (cell rows, face columns).
    coupling: Mat<T>,
    /// Face unknowns of the cell, shifted to the condensed numbering.
    face_dofs: Vec<Option<usize>>,
}

/// Face-only system obtained by eliminating every cell block.
pub struct CondensedSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    cells: Vec<CellElimination<T>>,
    n_cell_dofs: usize,
}

impl<T: Real> CondensedSystem<T> {
    pub fn new(disc: &Discretization<'_, T>, system: &AssembledSystem<T>) -> Result<Self> {
        disc.require_hybrid("static condensation")?;
        let dofmap = &system.dofmap;
        let nc = disc.n_cell();
        let offset = dofmap.n_cell_dofs();
        let n = dofmap.dim() - offset;
        let mesh = disc.mesh();
        let parts = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| -> Result<(CellElimination<T>, Mat<T>, Vec<T>)> {
                let a = hybrid_local_matrix(disc, c)?;
                let m = a.rows();
                let att = a.block(0..nc, 0..nc);
                let atf = a.block(0..nc, nc..m);
                let aft = a.block(nc..m, 0..nc);
                let chol = Cholesky::new(&att).ok_or_else(|| {
                    Error::Conditioning(format!("cell block of cell {c} is not positive definite"))
                })?;
                let x = chol.solve_mat(&atf);
                let mut schur = a.block(nc..m, nc..m);
                schur.add_assign_scaled(&aft.matmul(&x), -T::one());
                let y = chol.solve(&system.rhs[dofmap.cell_range(c)]);
                let g: Vec<T> = aft.mul_vec(&y).into_iter().map(|v| -v).collect();
                let face_dofs = dofmap.local_dofs(disc, c)[nc..]
                    .iter()
                    .map(|d| d.map(|i| i - offset))
                    .collect();
                Ok((
                    CellElimination {
                        chol,
                        coupling: atf,
                        face_dofs,
                    },
                    schur,
                    g,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut builder = TripletBuilder::new(n, n);
        let mut rhs: Vec<T> = system.rhs[offset..].to_vec();
        let mut cells = Vec::with_capacity(parts.len());
        for (elim, schur, g) in parts {
            builder.add_block(&elim.face_dofs, &elim.face_dofs, &schur);
            for (d, v) in elim.face_dofs.iter().zip(g) {
                if let Some(i) = *d {
                    rhs[i] += v;
                }
            }
            cells.push(elim);
        }
        Ok(Self {
            matrix: builder.build(),
            rhs,
            cells,
            n_cell_dofs: offset,
        })
    }

    /// Global solution vector from the face unknowns.
    pub fn recover(&self, system: &AssembledSystem<T>, faces: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.n_cell_dofs];
        x.extend_from_slice(faces);
        for (c, e) in self.cells.iter().enumerate() {
            let range = system.dofmap.cell_range(c);
            let local: Vec<T> = e
                .face_dofs
                .iter()
                .map(|d| d.map_or(T::zero(), |i| faces[i]))
                .collect();
            let coupled = e.coupling.mul_vec(&local);
            let b: Vec<T> = system.rhs[range.clone()]
                .iter()
                .zip(coupled)
                .map(|(b, a)| *b - a)
                .collect();
            x[range].copy_from_slice(&e.chol.solve(&b));
        }
        x
    }
}

/// Solves a WG/HHO system through its condensed face system.
pub fn solve_condensed<T: Real>(
    disc: &Discretization<'_, T>,
    system: &AssembledSystem<T>,
    opts: &SolverOptions,
) -> Result<(Vec<T>, SolveReport)> {
    let condensed = CondensedSystem::new(disc, system)?;
    let (faces, report) = if condensed.rhs.is_empty() {
        (
            Vec::new(),
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                method: SolveMethod::Trivial,
                wall_time_s: 0.0,
            },
        )
    } else {
        let offset = system.dofmap.n_cell_dofs();
        let blocks: Vec<_> = system
            .dofmap
            .blocks()
            .into_iter()
            .filter(|r| r.start >= offset)
            .map(|r| r.start - offset..r.end - offset)
            .collect();
        solve_blocked(&condensed.matrix, &condensed.rhs, true, opts, &blocks)?
    };
    Ok((condensed.recover(system, &faces), report))
}
