//! Slow reference evaluations of the bilinear forms.
//!
//! Everything here works with scaled monomials on each cell, Gauss rules
//! built independently of the discretization's face rules, and dense
//! solves of the defining identities. The results are meant for
//! cross-checking the assembled matrices on small meshes.

use crate::basis::{gauss_legendre, monomial_exponents, QuadRule};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::localops::{Discretization, HybridField, Method};
use crate::mesh::Face;
use crate::scalar::Point;

/// `∂^a_x ∂^b_y` of `((x − c)/h)^p ((y − c)/h)^q`.
pub fn monomial(e: (usize, usize), d: (usize, usize), x: Point<f64>, c: Point<f64>, h: f64) -> f64 {
    let f = |p: usize, r: usize, t: f64| -> f64 {
        if r > p {
            return 0.0;
        }
        let coef: f64 = (0..r).map(|i| (p - i) as f64).product();
        coef * t.powi((p - r) as i32) / h.powi(r as i32)
    };
    f(e.0, d.0, (x[0] - c[0]) / h) * f(e.1, d.1, (x[1] - c[1]) / h)
}

/// Gauss points `(arc-length offset, point, weight)` on a face.
pub fn face_points(face: &Face<f64>, n: usize) -> Vec<(f64, Point<f64>, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter()
        .zip(&w)
        .map(|(&t, &w)| {
            let s = 0.5 * t * face.length;
            (s, face.point_at(s), 0.5 * w * face.length)
        })
        .collect()
}

/// A polynomial on one cell in scaled monomial coordinates.
#[derive(Debug, Clone)]
pub struct CellPoly {
    pub exponents: Vec<(usize, usize)>,
    pub coeffs: Vec<f64>,
    pub center: Point<f64>,
    pub scale: f64,
}

impl CellPoly {
    pub fn partial(&self, x: Point<f64>, dx: usize, dy: usize) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coeffs)
            .map(|(&e, &c)| c * monomial(e, (dx, dy), x, self.center, self.scale))
            .sum()
    }
}

struct Rules {
    cell: Vec<QuadRule<f64>>,
    face_n: usize,
}

fn rules(disc: &Discretization<'_, f64>) -> Result<Rules> {
    let k = disc.degree();
    let mesh = disc.mesh();
    let cell = (0..mesh.n_cells())
        .map(|c| QuadRule::cell(mesh, c, 2 * k + 4))
        .collect::<Result<_>>()?;
    Ok(Rules {
        cell,
        face_n: k + 3,
    })
}

fn cell_value(
    disc: &Discretization<'_, f64>,
    f: &HybridField<f64>,
    c: usize,
    x: Point<f64>,
    d: (usize, usize),
) -> f64 {
    disc.basis(c).eval_combination(&f.cells[c], x, d.0, d.1)
}

/// Face value and normal-derivative data `(v_S, ∂_t v_S, γ_S)` at offset `s`
/// (zero on boundary faces).
fn face_value(
    disc: &Discretization<'_, f64>,
    f: &HybridField<f64>,
    face: usize,
    s: f64,
) -> (f64, f64, f64) {
    if f.face_values[face].is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let fd = disc.face_data(face);
    let (vals, ders) = fd.value_basis.eval(s);
    let v = vals
        .iter()
        .zip(&f.face_values[face])
        .map(|(a, b)| a * b)
        .sum();
    let dv = ders
        .iter()
        .zip(&f.face_values[face])
        .map(|(a, b)| a * b)
        .sum();
    let g = fd
        .normal_basis
        .as_ref()
        .map_or(0.0, |nb| nb.eval_combination(&f.face_normals[face], s));
    (v, dv, g)
}

fn solve_dense(a: Mat<f64>, b: &[f64], what: &str) -> Result<Vec<f64>> {
    Lu::new(&a)
        .map(|lu| lu.solve(b))
        .ok_or_else(|| Error::Conditioning(format!("reference {what} system is singular")))
}

/// WG discrete Laplacian of `f` on cell `c`, from the defining identity in
/// the monomial basis of `P_{k−2}(K)`.
pub fn wg_laplacian(
    disc: &Discretization<'_, f64>,
    f: &HybridField<f64>,
    c: usize,
) -> Result<CellPoly> {
    let r = rules(disc)?;
    wg_laplacian_with(disc, &r, f, c)
}

fn wg_laplacian_with(
    disc: &Discretization<'_, f64>,
    r: &Rules,
    f: &HybridField<f64>,
    c: usize,
) -> Result<CellPoly> {
    let mesh = disc.mesh();
    let cell = mesh.cell(c);
    let (ctr, h) = (cell.centroid, cell.diameter);
    let exps = monomial_exponents(disc.degree() - 2);
    let n = exps.len();
    let mut mass = Mat::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for (&x, &w) in r.cell[c].points.iter().zip(&r.cell[c].weights) {
        let v = cell_value(disc, f, c, x, (0, 0));
        for (i, &ei) in exps.iter().enumerate() {
            let lap = monomial(ei, (2, 0), x, ctr, h) + monomial(ei, (0, 2), x, ctr, h);
            rhs[i] += w * v * lap;
            for (j, &ej) in exps.iter().enumerate() {
                mass[(i, j)] +=
                    w * monomial(ei, (0, 0), x, ctr, h) * monomial(ej, (0, 0), x, ctr, h);
            }
        }
    }
    for (li, &s) in cell.faces.iter().enumerate() {
        let face = mesh.face(s);
        if face.is_boundary() {
            continue;
        }
        let sg = cell.sign(li);
        for (off, x, w) in face_points(face, r.face_n) {
            let (vs, _, gs) = face_value(disc, f, s, off);
            for (i, &ei) in exps.iter().enumerate() {
                let psi = monomial(ei, (0, 0), x, ctr, h);
                let dn = monomial(ei, (1, 0), x, ctr, h) * face.normal[0]
                    + monomial(ei, (0, 1), x, ctr, h) * face.normal[1];
                rhs[i] += sg * w * (gs * psi - vs * dn);
            }
        }
    }
    let coeffs = solve_dense(mass, &rhs, "WG Laplacian")?;
    Ok(CellPoly {
        exponents: exps,
        coeffs,
        center: ctr,
        scale: h,
    })
}

/// HHO reconstruction of `f` on cell `c`: the bordered Hessian system with
/// `P_1` moment constraints, in the monomial basis of `P_k(K)`.
pub fn hho_reconstruction(
    disc: &Discretization<'_, f64>,
    f: &HybridField<f64>,
    c: usize,
) -> Result<CellPoly> {
    let r = rules(disc)?;
    hho_reconstruction_with(disc, &r, f, c)
}

fn hho_reconstruction_with(
    disc: &Discretization<'_, f64>,
    r: &Rules,
    f: &HybridField<f64>,
    c: usize,
) -> Result<CellPoly> {
    let mesh = disc.mesh();
    let cell = mesh.cell(c);
    let (ctr, h) = (cell.centroid, cell.diameter);
    let exps = monomial_exponents(disc.degree());
    let n = exps.len();
    let mut sys = Mat::zeros(n + 3, n + 3);
    let mut b = vec![0.0; n + 3];
    for (&x, &w) in r.cell[c].points.iter().zip(&r.cell[c].weights) {
        let v = cell_value(disc, f, c, x, (0, 0));
        for (i, &ei) in exps.iter().enumerate() {
            let d = |a, b| monomial(ei, (a, b), x, ctr, h);
            b[i] += w * v * (d(4, 0) + 2.0 * d(2, 2) + d(0, 4));
            for (j, &ej) in exps.iter().enumerate() {
                let e = |a, b| monomial(ej, (a, b), x, ctr, h);
                sys[(i, j)] +=
                    w * (d(2, 0) * e(2, 0) + 2.0 * d(1, 1) * e(1, 1) + d(0, 2) * e(0, 2));
            }
            if i < 3 {
                for (j, &ej) in exps.iter().enumerate() {
                    sys[(n + i, j)] += w * d(0, 0) * monomial(ej, (0, 0), x, ctr, h);
                }
                b[n + i] += w * v * d(0, 0);
            }
        }
    }
    for i in 0..3 {
        for j in 0..n {
            sys[(j, n + i)] = sys[(n + i, j)];
        }
    }
    for (li, &s) in cell.faces.iter().enumerate() {
        let face = mesh.face(s);
        if face.is_boundary() {
            continue;
        }
        let sg = cell.sign(li);
        let (nu, t) = (face.normal, face.tangent);
        for (off, x, w) in face_points(face, r.face_n) {
            let (vs, dvs, gs) = face_value(disc, f, s, off);
            for (i, &ei) in exps.iter().enumerate() {
                let d = |a, b| monomial(ei, (a, b), x, ctr, h);
                let grad_lap = [d(3, 0) + d(1, 2), d(2, 1) + d(0, 3)];
                let hess = [[d(2, 0), d(1, 1)], [d(1, 1), d(0, 2)]];
                let quad = |a: Point<f64>, c: Point<f64>| -> f64 {
                    (0..2)
                        .map(|p| (0..2).map(|q| a[p] * hess[p][q] * c[q]).sum::<f64>())
                        .sum()
                };
                let dnl = grad_lap[0] * nu[0] + grad_lap[1] * nu[1];
                b[i] -= sg * w * (vs * dnl - gs * quad(nu, nu) - dvs * quad(nu, t));
            }
        }
    }
    let sol = solve_dense(sys, &b, "HHO reconstruction")?;
    Ok(CellPoly {
        exponents: exps,
        coeffs: sol[..n].to_vec(),
        center: ctr,
        scale: h,
    })
}

/// Projection of samples onto `P_m` of a face, via a monomial Gram solve in
/// the arc-length coordinate; returns the projected values at the points.
fn project_face_samples(
    pts: &[(f64, Point<f64>, f64)],
    samples: &[f64],
    m: usize,
    length: f64,
) -> Result<Vec<f64>> {
    let n = m + 1;
    let mono = |s: f64, j: usize| (s / length).powi(j as i32);
    let mut g = Mat::zeros(n, n);
    let mut b = vec![0.0; n];
    for (&(s, _, w), &v) in pts.iter().zip(samples) {
        for i in 0..n {
            b[i] += w * v * mono(s, i);
            for j in 0..n {
                g[(i, j)] += w * mono(s, i) * mono(s, j);
            }
        }
    }
    let c = solve_dense(g, &b, "face projection")?;
    Ok(pts
        .iter()
        .map(|&(s, _, _)| (0..n).map(|j| c[j] * mono(s, j)).sum())
        .collect())
}

/// Hybrid stabilization `s_h(u, v)` by face quadrature of the residuals.
fn hybrid_stabilization(
    disc: &Discretization<'_, f64>,
    r: &Rules,
    u: &HybridField<f64>,
    v: &HybridField<f64>,
) -> Result<f64> {
    let mesh = disc.mesh();
    let k = disc.degree();
    let mut total = 0.0;
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        for &s in &cell.faces {
            let face = mesh.face(s);
            let h = face.length;
            let pts = face_points(face, r.face_n + 2);
            let residuals = |f: &HybridField<f64>| -> (Vec<f64>, Vec<f64>) {
                pts.iter()
                    .map(|&(off, x, _)| {
                        let (vs, _, gs) = face_value(disc, f, s, off);
                        let g = [
                            cell_value(disc, f, c, x, (1, 0)),
                            cell_value(disc, f, c, x, (0, 1)),
                        ];
                        (
                            cell_value(disc, f, c, x, (0, 0)) - vs,
                            g[0] * face.normal[0] + g[1] * face.normal[1] - gs,
                        )
                    })
                    .unzip()
            };
            let (u0, mut u1) = residuals(u);
            let (v0, mut v1) = residuals(v);
            if disc.method() == Method::Hho {
                u1 = project_face_samples(&pts, &u1, k - 2, h)?;
                v1 = project_face_samples(&pts, &v1, k - 2, h)?;
            }
            for (q, &(_, _, w)) in pts.iter().enumerate() {
                total += w * (u0[q] * v0[q] / (h * h * h) + u1[q] * v1[q] / h);
            }
        }
    }
    Ok(total)
}

/// Direct evaluation of the interior-penalty form with pointwise traces.
fn dg_form(
    disc: &Discretization<'_, f64>,
    r: &Rules,
    sigma: f64,
    u: &HybridField<f64>,
    v: &HybridField<f64>,
) -> f64 {
    let mesh = disc.mesh();
    let theta = disc.method().theta() as f64;
    let mut total = 0.0;
    for c in 0..mesh.n_cells() {
        for (&x, &w) in r.cell[c].points.iter().zip(&r.cell[c].weights) {
            let lap = |f: &HybridField<f64>| {
                cell_value(disc, f, c, x, (2, 0)) + cell_value(disc, f, c, x, (0, 2))
            };
            total += w * lap(u) * lap(v);
        }
    }
    for face in mesh.faces() {
        let nu = face.normal;
        let sides: Vec<(usize, f64)> = match face.minus {
            Some(m) => vec![(face.plus, 1.0), (m, -1.0)],
            None => vec![(face.plus, 1.0)],
        };
        let avg = 1.0 / sides.len() as f64;
        let h = face.length;
        for (_, x, w) in face_points(face, r.face_n) {
            // [value], [∂_ν], {Δ}, {∂_νΔ}
            let traces = |f: &HybridField<f64>| -> [f64; 4] {
                let mut t = [0.0; 4];
                for &(c, sg) in &sides {
                    let d = |a, b| cell_value(disc, f, c, x, (a, b));
                    t[0] += sg * d(0, 0);
                    t[1] += sg * (d(1, 0) * nu[0] + d(0, 1) * nu[1]);
                    t[2] += avg * (d(2, 0) + d(0, 2));
                    t[3] += avg * ((d(3, 0) + d(1, 2)) * nu[0] + (d(2, 1) + d(0, 3)) * nu[1]);
                }
                t
            };
            let (tu, tv) = (traces(u), traces(v));
            total += w
                * (theta * tu[0] * tv[3] + tv[0] * tu[3] - theta * tv[2] * tu[1] - tu[2] * tv[1]
                    + sigma * (tu[0] * tv[0] / (h * h * h) + tu[1] * tv[1] / h));
        }
    }
    total
}

/// `a_h(u, v)` evaluated without the assembled matrix: WG as
/// `(Δ_h u, Δ_h v) + s_h`, HHO as `(D²R u, D²R v) + s_h`, DG through the
/// θ-form with penalty `sigma`.
pub fn bilinear_form(
    disc: &Discretization<'_, f64>,
    sigma: f64,
    u: &HybridField<f64>,
    v: &HybridField<f64>,
) -> Result<f64> {
    u.check(disc)?;
    v.check(disc)?;
    let r = rules(disc)?;
    let mesh = disc.mesh();
    match disc.method() {
        Method::Wg => {
            let mut total = hybrid_stabilization(disc, &r, u, v)?;
            for c in 0..mesh.n_cells() {
                let (lu, lv) = (
                    wg_laplacian_with(disc, &r, u, c)?,
                    wg_laplacian_with(disc, &r, v, c)?,
                );
                for (&x, &w) in r.cell[c].points.iter().zip(&r.cell[c].weights) {
                    total += w * lu.partial(x, 0, 0) * lv.partial(x, 0, 0);
                }
            }
            Ok(total)
        }
        Method::Hho => {
            let mut total = hybrid_stabilization(disc, &r, u, v)?;
            for c in 0..mesh.n_cells() {
                let (ru, rv) = (
                    hho_reconstruction_with(disc, &r, u, c)?,
                    hho_reconstruction_with(disc, &r, v, c)?,
                );
                for (&x, &w) in r.cell[c].points.iter().zip(&r.cell[c].weights) {
                    total += w
                        * (ru.partial(x, 2, 0) * rv.partial(x, 2, 0)
                            + 2.0 * ru.partial(x, 1, 1) * rv.partial(x, 1, 1)
                            + ru.partial(x, 0, 2) * rv.partial(x, 0, 2));
                }
            }
            Ok(total)
        }
        Method::Sip | Method::Nip => Ok(dg_form(disc, &r, sigma, u, v)),
    }
}
