//! Global numbering, assembly of `a_h` and `F_h`, global bilinear-form
//! evaluations and static condensation.

mod condense;

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SmoothFunction;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::localops::{Discretization, HybridField, Method};
use crate::scalar::{dot, Point, Real};
use crate::sparse::{CsrMatrix, TripletBuilder};

pub use condense::{solve_condensed, CondensedSystem};

/// Global numbering: all cell blocks first, then for every interior face
/// its value block followed by its normal-derivative block. Boundary
/// faces carry no unknowns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofMap {
    method: Method,
    degree: usize,
    n_cell: usize,
    n_face_value: usize,
    n_face_normal: usize,
    n_cells: usize,
    face_offsets: Vec<Option<usize>>,
    dim: usize,
}

impl DofMap {
    pub fn new<T: Real>(disc: &Discretization<'_, T>) -> Self {
        let mesh = disc.mesh();
        let n_cell = disc.n_cell();
        let n_face = disc.n_face();
        let mut next = n_cell * mesh.n_cells();
        let face_offsets = mesh
            .faces()
            .iter()
            .map(|f| {
                if f.is_boundary() || n_face == 0 {
                    None
                } else {
                    next += n_face;
                    Some(next - n_face)
                }
            })
            .collect();
        Self {
            method: disc.method(),
            degree: disc.degree(),
            n_cell,
            n_face_value: disc.n_face_value(),
            n_face_normal: disc.n_face_normal(),
            n_cells: mesh.n_cells(),
            face_offsets,
            dim: next,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of cell unknowns (they occupy `0..n_cell_dofs()`).
    pub fn n_cell_dofs(&self) -> usize {
        self.n_cell * self.n_cells
    }

    pub fn cell_range(&self, c: usize) -> Range<usize> {
        c * self.n_cell..(c + 1) * self.n_cell
    }

    pub fn face_value_range(&self, s: usize) -> Option<Range<usize>> {
        self.face_offsets[s].map(|o| o..o + self.n_face_value)
    }

    pub fn face_normal_range(&self, s: usize) -> Option<Range<usize>> {
        self.face_offsets[s]
            .map(|o| o + self.n_face_value..o + self.n_face_value + self.n_face_normal)
    }

    /// Cell blocks followed by the (value, normal) block of each interior
    /// face; the block-Jacobi preconditioner works on these.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        let nf = self.n_face_value + self.n_face_normal;
        (0..self.n_cells)
            .map(|c| self.cell_range(c))
            .chain(self.face_offsets.iter().flatten().map(|&o| o..o + nf))
            .collect()
    }

    /// Global indices of a hybrid local vector (see
    /// [`HybridField::local`]); `None` for boundary-face slots.
    pub fn local_dofs<T: Real>(
        &self,
        disc: &Discretization<'_, T>,
        c: usize,
    ) -> Vec<Option<usize>> {
        let mut out: Vec<Option<usize>> = self.cell_range(c).map(Some).collect();
        for &s in &disc.mesh().cell(c).faces {
            let nf = self.n_face_value + self.n_face_normal;
            match self.face_offsets[s] {
                Some(o) => out.extend((o..o + nf).map(Some)),
                None => out.extend(std::iter::repeat(None).take(nf)),
            }
        }
        out
    }

    /// Global indices of the cell blocks of `cells`, concatenated.
    pub fn cells_dofs(&self, cells: &[usize]) -> Vec<Option<usize>> {
        cells
            .iter()
            .flat_map(|&c| self.cell_range(c).map(Some))
            .collect()
    }

    pub fn to_vector<T: Real>(&self, field: &HybridField<T>) -> Result<Vec<T>> {
        if field.method != self.method
            || field.degree != self.degree
            || field.cells.len() != self.n_cells
        {
            return Err(Error::InvalidArgument(
                "field does not match the numbering".into(),
            ));
        }
        let mut x = vec![T::zero(); self.dim];
        for (c, v) in field.cells.iter().enumerate() {
            x[self.cell_range(c)].copy_from_slice(v);
        }
        for s in 0..self.face_offsets.len() {
            if let (Some(vr), Some(nr)) = (self.face_value_range(s), self.face_normal_range(s)) {
                x[vr].copy_from_slice(&field.face_values[s]);
                x[nr].copy_from_slice(&field.face_normals[s]);
            }
        }
        Ok(x)
    }

    pub fn to_field<T: Real>(
        &self,
        disc: &Discretization<'_, T>,
        x: &[T],
    ) -> Result<HybridField<T>> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "vector has length {}, expected {}",
                x.len(),
                self.dim
            )));
        }
        let mut field = HybridField::zeros(disc);
        for (c, v) in field.cells.iter_mut().enumerate() {
            v.copy_from_slice(&x[self.cell_range(c)]);
        }
        for s in 0..self.face_offsets.len() {
            if let (Some(vr), Some(nr)) = (self.face_value_range(s), self.face_normal_range(s)) {
                field.face_values[s].copy_from_slice(&x[vr]);
                field.face_normals[s].copy_from_slice(&x[nr]);
            }
        }
        Ok(field)
    }
}

/// Default SIP/NIP penalty: 20 for `k = 2`, 40 for `k = 3`, `5 k²`
/// beyond.
pub fn default_sigma(k: usize) -> f64 {
    match k {
        0..=2 => 20.0,
        3 => 40.0,
        _ => 5.0 * (k * k) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub method: Method,
    pub degree: usize,
    /// Penalty of the DG methods (unused by WG/HHO).
    pub sigma: f64,
    pub theta: i8,
}

#[derive(Debug, Clone)]
pub struct AssembledSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    pub dofmap: DofMap,
    pub config: SystemConfig,
}

impl<T: Real> AssembledSystem<T> {
    pub fn is_symmetric(&self) -> bool {
        self.config.method.is_symmetric()
    }

    /// `vᵀ A u = a_h(u, v)` for global vectors.
    pub fn form(&self, u: &[T], v: &[T]) -> T {
        self.matrix.bilinear(v, u)
    }

    /// Attempts a dense Cholesky factorization of the symmetric part
    /// (systems up to `max_dim` unknowns); larger systems are not probed.
    pub fn probe_coercivity(&self, max_dim: usize) -> Result<bool> {
        let n = self.dofmap.dim();
        if n > max_dim || n == 0 {
            return Ok(false);
        }
        let a = self.matrix.to_dense();
        let half = T::lit(0.5);
        let sym = Mat::from_fn(n, n, |i, j| half * (a[(i, j)] + a[(j, i)]));
        match Cholesky::new(&sym) {
            Some(_) => Ok(true),
            None => Err(Error::Conditioning(format!(
                "{} system with sigma = {} is not coercive; increase sigma",
                self.config.method, self.config.sigma
            ))),
        }
    }

    pub fn write_matrix_market<W: Write>(&self, w: W) -> std::io::Result<()> {
        self.matrix.write_matrix_market(w)
    }
}

/// Local matrix of a hybrid method on cell `c` in the local layout:
/// `BᵀB + S` (WG) or `RᵀHR + S` (HHO).
pub fn hybrid_local_matrix<T: Real>(disc: &Discretization<'_, T>, c: usize) -> Result<Mat<T>> {
    let mut a = match disc.method() {
        Method::Wg => {
            let b = disc.wg_laplacian_matrix(c)?;
            b.tr_matmul(&b)
        }
        Method::Hho => {
            let r = disc.hho_reconstruction_matrix(c)?;
            let hr = disc.hessian_stiffness(c).matmul(&r);
            r.tr_matmul(&hr)
        }
        m => {
            return Err(Error::InvalidArgument(format!(
                "{m} is not a hybrid method"
            )))
        }
    };
    a.add_assign_scaled(&disc.hybrid_stabilization_matrix(c)?, T::one());
    symmetrize(&mut a);
    Ok(a)
}

/// Replaces `a` by `(a + aᵀ)/2`, which makes the assembled matrix of a
/// symmetric method bitwise symmetric.
fn symmetrize<T: Real>(a: &mut Mat<T>) {
    let half = T::lit(0.5);
    for i in 0..a.rows() {
        for j in 0..i {
            let v = half * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

fn resolve_sigma(method: Method, k: usize, sigma: Option<f64>) -> Result<f64> {
    match sigma {
        Some(s) if !(s > 0.0 && s.is_finite()) => Err(Error::InvalidParameter(format!(
            "penalty sigma must be positive, got {s}"
        ))),
        Some(s) => Ok(s),
        None if method.is_dg() => Ok(default_sigma(k)),
        None => Ok(0.0),
    }
}

/// Assembles `a_h` (the load vector is left zero; see [`assemble_rhs`]).
/// `sigma` overrides the DG penalty and must be positive.
pub fn assemble<T: Real>(
    disc: &Discretization<'_, T>,
    sigma: Option<f64>,
) -> Result<AssembledSystem<T>> {
    let method = disc.method();
    let sigma = resolve_sigma(method, disc.degree(), sigma)?;
    let dofmap = DofMap::new(disc);
    let mesh = disc.mesh();
    let n = dofmap.dim();
    let mut builder = TripletBuilder::new(n, n);
    if method.is_hybrid() {
        let locals = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| hybrid_local_matrix(disc, c))
            .collect::<Result<Vec<_>>>()?;
        for (c, a) in locals.iter().enumerate() {
            let dofs = dofmap.local_dofs(disc, c);
            builder.add_block(&dofs, &dofs, a);
        }
    } else {
        let cells: Vec<Mat<T>> = (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let mut a = disc.laplacian_stiffness(c);
                symmetrize(&mut a);
                a
            })
            .collect();
        for (c, a) in cells.iter().enumerate() {
            let dofs = dofmap.cells_dofs(&[c]);
            builder.add_block(&dofs, &dofs, a);
        }
        let s = T::lit(sigma);
        let faces = (0..mesh.n_faces())
            .into_par_iter()
            .map(|f| {
                let mut a = disc.dg_face_matrix(f, s)?;
                if method.is_symmetric() {
                    symmetrize(&mut a);
                }
                Ok(a)
            })
            .collect::<Result<Vec<_>>>()?;
        for (f, a) in faces.iter().enumerate() {
            let dofs = dofmap.cells_dofs(&disc.face_cells(f));
            builder.add_block(&dofs, &dofs, a);
        }
    }
    Ok(AssembledSystem {
        matrix: builder.build(),
        rhs: vec![T::zero(); n],
        dofmap,
        config: SystemConfig {
            method,
            degree: disc.degree(),
            sigma,
            theta: method.theta(),
        },
    })
}

/// `F(v_h) = (f, v_M)`: cell moments of `f` (sampled at the quadrature
/// points), zero on face unknowns.
pub fn assemble_rhs<T: Real>(
    disc: &Discretization<'_, T>,
    dofmap: &DofMap,
    f: impl Fn(Point<T>) -> T + Sync,
) -> Vec<T> {
    let mesh = disc.mesh();
    let blocks: Vec<Vec<T>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let data = disc.cell_data(c);
            data.basis.project(&data.rule, disc.n_cell(), &f)
        })
        .collect();
    let mut b = vec![T::zero(); dofmap.dim()];
    for (c, v) in blocks.iter().enumerate() {
        b[dofmap.cell_range(c)].copy_from_slice(v);
    }
    b
}

/// `s_h(u, v)`: cell-wise for WG/HHO, face-wise (each face once) for DG.
pub fn stabilization<T: Real>(
    disc: &Discretization<'_, T>,
    u: &HybridField<T>,
    v: &HybridField<T>,
) -> Result<T> {
    u.check(disc)?;
    v.check(disc)?;
    let mesh = disc.mesh();
    if disc.method().is_hybrid() {
        (0..mesh.n_cells())
            .map(|c| disc.local_stabilization(c, &u.local(disc, c), &v.local(disc, c)))
            .sum()
    } else {
        (0..mesh.n_faces())
            .map(|s| disc.dg_face_stabilization(s, u, v))
            .sum()
    }
}

/// `|u_h|_s = s_h(u_h, u_h)^{1/2}`.
pub fn stab_seminorm<T: Real>(disc: &Discretization<'_, T>, u: &HybridField<T>) -> Result<T> {
    Ok(stabilization(disc, u, u)?.max(T::zero()).sqrt())
}

/// `Δ_h v_h` (WG or DG) with the result padded to `P_k` coefficients.
fn padded_laplacian<T: Real>(
    disc: &Discretization<'_, T>,
    v: &HybridField<T>,
) -> Result<Vec<Vec<T>>> {
    let mut lap = disc.discrete_laplacian(v)?;
    for l in &mut lap {
        l.resize(disc.n_cell(), T::zero());
    }
    Ok(lap)
}

/// `(Δ_h u, Δ_h v)` (WG or DG).
pub fn laplacian_product<T: Real>(
    disc: &Discretization<'_, T>,
    u: &HybridField<T>,
    v: &HybridField<T>,
) -> Result<T> {
    let (lu, lv) = (disc.discrete_laplacian(u)?, disc.discrete_laplacian(v)?);
    Ok(lu
        .iter()
        .zip(&lv)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x * *y).sum::<T>())
        .sum())
}

/// The DG consistency form
/// `b_h(u, v) = Σ_S ∫_S (θ[u]{∂_νΔ_pw v} − [u]{∂_νΔ_h v} − θ{Δ_pw v}[∂_ν u] + {Δ_h v}[∂_ν u])`,
/// which satisfies `a_h = (Δ_h·, Δ_h·) + b_h + σ s_h`.
pub fn eval_bh<T: Real>(
    disc: &Discretization<'_, T>,
    u: &HybridField<T>,
    v: &HybridField<T>,
) -> Result<T> {
    disc.require_dg("b_h")?;
    u.check(disc)?;
    v.check(disc)?;
    let lap_h = padded_laplacian(disc, v)?;
    let theta = T::lit(disc.method().theta() as f64);
    let mesh = disc.mesh();
    let mut total = T::zero();
    for (s, face) in mesh.faces().iter().enumerate() {
        let cells = disc.face_cells(s);
        let wavg = if cells.len() == 2 {
            T::lit(0.5)
        } else {
            T::one()
        };
        let fd = disc.face_data(s);
        for (&p, &w) in fd.rule.points.iter().zip(&fd.rule.weights) {
            let (ju, jdu) = disc.field_jumps(s, u, p);
            let (mut a_dlap, mut a_lap, mut a_dlaph, mut a_laph) =
                (T::zero(), T::zero(), T::zero(), T::zero());
            for &c in &cells {
                let b = disc.basis(c);
                let vc = &v.cells[c];
                let dlap = [
                    b.eval_combination(vc, p, 3, 0) + b.eval_combination(vc, p, 1, 2),
                    b.eval_combination(vc, p, 2, 1) + b.eval_combination(vc, p, 0, 3),
                ];
                a_dlap += wavg * dot(dlap, face.normal);
                a_lap += wavg * (b.eval_combination(vc, p, 2, 0) + b.eval_combination(vc, p, 0, 2));
                let lh = &lap_h[c];
                let g = [
                    b.eval_combination(lh, p, 1, 0),
                    b.eval_combination(lh, p, 0, 1),
                ];
                a_dlaph += wavg * dot(g, face.normal);
                a_laph += wavg * b.eval_combination(lh, p, 0, 0);
            }
            total += w * (theta * ju * a_dlap - ju * a_dlaph - theta * a_lap * jdu + a_laph * jdu);
        }
    }
    Ok(total)
}

/// Cell-wise `‖D²_pw(v − w_h)‖` against a piecewise polynomial given by
/// `P_k` coefficients.
pub fn hessian_error<T: Real, F: SmoothFunction<T> + ?Sized>(
    disc: &Discretization<'_, T>,
    v: &F,
    cells: &[Vec<T>],
) -> T {
    let mesh = disc.mesh();
    let two = T::lit(2.0);
    (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let data = disc.cell_data(c);
            let b = &data.basis;
            let mut e = T::zero();
            for (&p, &w) in data.fine_rule.points.iter().zip(&data.fine_rule.weights) {
                let h = v.hessian(p);
                let d = [
                    h[0] - b.eval_combination(&cells[c], p, 2, 0),
                    h[1] - b.eval_combination(&cells[c], p, 1, 1),
                    h[2] - b.eval_combination(&cells[c], p, 0, 2),
                ];
                e += w * (d[0] * d[0] + two * d[1] * d[1] + d[2] * d[2]);
            }
            e
        })
        .sum::<T>()
        .sqrt()
}
