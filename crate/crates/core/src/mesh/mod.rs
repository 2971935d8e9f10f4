//! Two-dimensional polygonal meshes with oriented faces.
//!
//! Cells are counter-clockwise vertex loops. Every edge of the partition
//! becomes one [`Face`] whose normal is fixed once: it is the outward normal
//! of the owning cell `plus`; for interior faces the neighbouring cell
//! `minus` sees the opposite normal. Boundary faces carry the outward normal
//! of the domain.

mod generate;
mod io;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, MeshDefect, Result};
use crate::scalar::{cross, dot, norm, sub, Point, Real};

pub use generate::{generate_mesh, MeshKind};
pub use io::{export_mesh, import_mesh};

/// A polygonal cell together with its cached geometry.
#[derive(Debug, Clone)]
pub struct Cell<T> {
    /// Counter-clockwise vertex loop.
    pub vertices: Vec<usize>,
    /// `faces[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub faces: Vec<usize>,
    /// `true` where this cell is the owner (`plus` side) of `faces[i]`.
    pub owns: Vec<bool>,
    pub area: T,
    pub centroid: Point<T>,
    pub diameter: T,
}

impl<T: Real> Cell<T> {
    /// Localization sign `ν_K · ν_S` of the `i`-th face of the cell.
    #[inline]
    pub fn sign(&self, local_face: usize) -> T {
        if self.owns[local_face] {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
}

/// A straight mesh edge with a fixed unit normal.
#[derive(Debug, Clone)]
pub struct Face<T> {
    /// Endpoints, ordered counter-clockwise with respect to `plus`.
    pub vertices: [usize; 2],
    pub normal: Point<T>,
    /// The normal rotated by +90°, i.e. the direction from the first to
    /// the second endpoint.
    pub tangent: Point<T>,
    pub length: T,
    pub midpoint: Point<T>,
    pub plus: usize,
    /// `None` on the boundary.
    pub minus: Option<usize>,
}

impl<T: Real> Face<T> {
    #[inline]
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    /// Point at arc-length offset `s` from the midpoint.
    #[inline]
    pub fn point_at(&self, s: T) -> Point<T> {
        [
            self.midpoint[0] + s * self.tangent[0],
            self.midpoint[1] + s * self.tangent[1],
        ]
    }
}

/// Empirical shape-regularity statistics of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Smallest `ρ_K / h_K` with `ρ_K` the distance from the centroid to the
    /// nearest edge line.
    pub min_aspect_ratio: f64,
    pub max_aspect_ratio: f64,
    /// Smallest `h_S / h_K` over all cell/face incidences.
    pub min_face_ratio: f64,
    /// Smallest `4√3·area / Σ edge²` over the fan subtriangles (1 for an
    /// equilateral triangle).
    pub min_subtriangle_shape: f64,
}

/// A polygonal partition of a planar domain.
#[derive(Debug, Clone)]
pub struct PolyMesh<T> {
    vertices: Vec<Point<T>>,
    cells: Vec<Cell<T>>,
    faces: Vec<Face<T>>,
    h_max: T,
}

/// Derived oriented face list of a raw cell partition.
#[derive(Debug, Clone)]
pub struct FaceTable<T> {
    pub faces: Vec<Face<T>>,
    /// Per cell, the face index of each loop edge.
    pub cell_faces: Vec<Vec<usize>>,
    /// Per cell, whether the cell owns each loop edge.
    pub cell_owns: Vec<Vec<bool>>,
}

/// Identifies the edges of a polygonal partition, assigns each one an
/// owning cell (the first cell that visits it) and a fixed normal.
pub fn derive_faces<T: Real>(vertices: &[Point<T>], cells: &[Vec<usize>]) -> Result<FaceTable<T>> {
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces: Vec<Face<T>> = Vec::new();
    let mut cell_faces = Vec::with_capacity(cells.len());
    let mut cell_owns = Vec::with_capacity(cells.len());
    for (k, loop_) in cells.iter().enumerate() {
        let m = loop_.len();
        let mut fs = Vec::with_capacity(m);
        let mut owns = Vec::with_capacity(m);
        for i in 0..m {
            let (a, b) = (loop_[i], loop_[(i + 1) % m]);
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                None => {
                    let (pa, pb) = (vertices[a], vertices[b]);
                    let d = sub(pb, pa);
                    let length = norm(d);
                    if !(length > T::zero()) {
                        return Err(MeshDefect::ZeroLengthFace { face: faces.len() }.into());
                    }
                    let tangent = [d[0] / length, d[1] / length];
                    let half = T::lit(0.5);
                    faces.push(Face {
                        vertices: [a, b],
                        normal: [tangent[1], -tangent[0]],
                        tangent,
                        length,
                        midpoint: [half * (pa[0] + pb[0]), half * (pa[1] + pb[1])],
                        plus: k,
                        minus: None,
                    });
                    lookup.insert(key, faces.len() - 1);
                    fs.push(faces.len() - 1);
                    owns.push(true);
                }
                Some(&f) => {
                    let face = &mut faces[f];
                    if face.minus.is_some() {
                        return Err(MeshDefect::OvershareFace { a: key.0, b: key.1 }.into());
                    }
                    if face.vertices != [b, a] {
                        return Err(MeshDefect::DuplicateFace { a, b }.into());
                    }
                    if face.plus == k {
                        return Err(MeshDefect::RepeatedVertex { cell: k, vertex: a }.into());
                    }
                    face.minus = Some(k);
                    fs.push(f);
                    owns.push(false);
                }
            }
        }
        cell_faces.push(fs);
        cell_owns.push(owns);
    }
    check_hanging_nodes(vertices, &faces)?;
    Ok(FaceTable {
        faces,
        cell_faces,
        cell_owns,
    })
}

/// Unmatched edges that overlap collinearly indicate a hanging node.
fn check_hanging_nodes<T: Real>(vertices: &[Point<T>], faces: &[Face<T>]) -> Result<()> {
    let boundary: Vec<&Face<T>> = faces.iter().filter(|f| f.is_boundary()).collect();
    for (i, f) in boundary.iter().enumerate() {
        let p = vertices[f.vertices[0]];
        for g in &boundary[i + 1..] {
            if cross(f.tangent, g.tangent).abs() > T::lit(1e-9) {
                continue;
            }
            let q0 = vertices[g.vertices[0]];
            let q1 = vertices[g.vertices[1]];
            let off = cross(f.tangent, sub(q0, p)).abs();
            if off > T::lit(1e-9) * f.length {
                continue;
            }
            let s0 = dot(f.tangent, sub(q0, p));
            let s1 = dot(f.tangent, sub(q1, p));
            let (lo, hi) = (s0.min(s1), s0.max(s1));
            let overlap = hi.min(f.length) - lo.max(T::zero());
            if overlap > T::lit(1e-9) * f.length {
                return Err(Error::MeshConformity(format!(
                    "edges ({}, {}) and ({}, {}) overlap without matching",
                    f.vertices[0], f.vertices[1], g.vertices[0], g.vertices[1]
                )));
            }
        }
    }
    Ok(())
}

fn signed_area<T: Real>(pts: &[Point<T>]) -> T {
    let m = pts.len();
    let mut a = T::zero();
    for i in 0..m {
        a += cross(pts[i], pts[(i + 1) % m]);
    }
    a * T::lit(0.5)
}

fn polygon_centroid<T: Real>(pts: &[Point<T>], area: T) -> Point<T> {
    // shift to the first vertex for accuracy
    let o = pts[0];
    let m = pts.len();
    let (mut cx, mut cy) = (T::zero(), T::zero());
    for i in 0..m {
        let p = sub(pts[i], o);
        let q = sub(pts[(i + 1) % m], o);
        let c = cross(p, q);
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    let s = T::one() / (T::lit(6.0) * area);
    [o[0] + cx * s, o[1] + cy * s]
}

fn segments_intersect<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    let z = T::zero();
    if ((o1 > z && o2 < z) || (o1 < z && o2 > z)) && ((o3 > z && o4 < z) || (o3 < z && o4 > z)) {
        return true;
    }
    let on = |p: Point<T>, q: Point<T>, r: Point<T>, o: T| {
        o == z
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

impl<T: Real> PolyMesh<T> {
    /// Builds and validates a mesh from vertex coordinates and
    /// counter-clockwise cell loops.
    pub fn from_raw(vertices: Vec<Point<T>>, cells: Vec<Vec<usize>>) -> Result<Self> {
        for (k, c) in cells.iter().enumerate() {
            if c.len() < 3 {
                return Err(MeshDefect::TooFewVertices { cell: k }.into());
            }
            for (i, &v) in c.iter().enumerate() {
                if v >= vertices.len() {
                    return Err(Error::InvalidArgument(format!(
                        "cell {k} references vertex {v} but only {} exist",
                        vertices.len()
                    )));
                }
                if c[i + 1..].contains(&v) {
                    return Err(MeshDefect::RepeatedVertex { cell: k, vertex: v }.into());
                }
            }
        }
        let mut used = vec![false; vertices.len()];
        for c in &cells {
            for &v in c {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshDefect::DanglingVertex { vertex: v }.into());
        }
        let mut geo = Vec::with_capacity(cells.len());
        for (k, c) in cells.iter().enumerate() {
            let pts: Vec<Point<T>> = c.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&pts);
            let scale = pts
                .iter()
                .fold(T::zero(), |m, p| m.max(norm(sub(*p, pts[0]))));
            if area.abs() <= T::epsilon() * T::lit(16.0) * scale * scale {
                return Err(MeshDefect::DegenerateCell { cell: k }.into());
            }
            if area < T::zero() {
                return Err(MeshDefect::InvertedCell {
                    cell: k,
                    area: area.to_f64_lossy(),
                }
                .into());
            }
            let centroid = polygon_centroid(&pts, area);
            let mut diameter = T::zero();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    diameter = diameter.max(norm(sub(pts[i], pts[j])));
                }
            }
            geo.push((area, centroid, diameter));
        }
        let table = derive_faces(&vertices, &cells)?;
        let h_max = geo.iter().fold(T::zero(), |m, g| m.max(g.2));
        let cells = cells
            .into_iter()
            .zip(geo)
            .zip(table.cell_faces.into_iter().zip(table.cell_owns))
            .map(
                |((vertices, (area, centroid, diameter)), (faces, owns))| Cell {
                    vertices,
                    faces,
                    owns,
                    area,
                    centroid,
                    diameter,
                },
            )
            .collect();
        let mesh = Self {
            vertices,
            cells,
            faces: table.faces,
            h_max,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face<T>] {
        &self.faces
    }

    pub fn cell(&self, k: usize) -> &Cell<T> {
        &self.cells[k]
    }

    pub fn face(&self, s: usize) -> &Face<T> {
        &self.faces[s]
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| !f.is_boundary()).count()
    }

    pub fn h_max(&self) -> T {
        self.h_max
    }

    /// Cell vertex loop as coordinates.
    pub fn cell_points(&self, k: usize) -> Vec<Point<T>> {
        self.cells[k]
            .vertices
            .iter()
            .map(|&v| self.vertices[v])
            .collect()
    }

    /// `true` when no face of cell `k` lies on the boundary.
    pub fn is_interior_cell(&self, k: usize) -> bool {
        self.cells[k]
            .faces
            .iter()
            .all(|&s| !self.faces[s].is_boundary())
    }

    /// Centroid-fan subtriangulation of cell `k`.
    pub fn subtriangulate(&self, k: usize) -> Result<Vec<[Point<T>; 3]>> {
        subtriangulate(&self.cell_points(k), self.cells[k].centroid).map_err(|i| {
            MeshDefect::DegenerateSubtriangle {
                cell: k,
                triangle: i,
            }
            .into()
        })
    }

    /// Re-checks every geometric invariant and reports shape statistics.
    pub fn validate(&self) -> Result<RegularityReport> {
        let eps = T::epsilon() * T::lit(64.0);
        let mut cell_area = T::zero();
        let mut report = RegularityReport {
            min_aspect_ratio: f64::INFINITY,
            max_aspect_ratio: 0.0,
            min_face_ratio: f64::INFINITY,
            min_subtriangle_shape: f64::INFINITY,
        };
        for (k, cell) in self.cells.iter().enumerate() {
            let pts = self.cell_points(k);
            let m = pts.len();
            let area = signed_area(&pts);
            if area < T::zero() {
                return Err(MeshDefect::InvertedCell {
                    cell: k,
                    area: area.to_f64_lossy(),
                }
                .into());
            }
            if area <= eps * cell.diameter * cell.diameter {
                return Err(MeshDefect::DegenerateCell { cell: k }.into());
            }
            for i in 0..m {
                for j in i + 2..m {
                    if i == 0 && j == m - 1 {
                        continue;
                    }
                    if segments_intersect(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m]) {
                        return Err(MeshDefect::SelfIntersecting { cell: k }.into());
                    }
                }
            }
            let mut closure = [T::zero(); 2];
            let mut rho = T::infinity();
            for (i, &s) in cell.faces.iter().enumerate() {
                let f = &self.faces[s];
                let sg = cell.sign(i);
                closure[0] += sg * f.length * f.normal[0];
                closure[1] += sg * f.length * f.normal[1];
                rho = rho.min(
                    (sg * dot(f.normal, sub(self.vertices[f.vertices[0]], cell.centroid))).abs(),
                );
                report.min_face_ratio = report
                    .min_face_ratio
                    .min((f.length / cell.diameter).to_f64_lossy());
            }
            let residual = norm(closure);
            if residual > eps * cell.diameter {
                return Err(MeshDefect::OpenCell {
                    cell: k,
                    residual: residual.to_f64_lossy(),
                }
                .into());
            }
            let aspect = (rho / cell.diameter).to_f64_lossy();
            report.min_aspect_ratio = report.min_aspect_ratio.min(aspect);
            report.max_aspect_ratio = report.max_aspect_ratio.max(aspect);
            let tris = self.subtriangulate(k)?;
            for t in &tris {
                report.min_subtriangle_shape = report
                    .min_subtriangle_shape
                    .min(triangle_shape(t).to_f64_lossy());
            }
            cell_area += cell.area;
        }
        let mut enclosed = T::zero();
        for (s, f) in self.faces.iter().enumerate() {
            if (norm(f.normal) - T::one()).abs() > eps {
                return Err(Error::MeshValidation(MeshDefect::ZeroLengthFace {
                    face: s,
                }));
            }
            if f.is_boundary() {
                enclosed += f.midpoint[0] * f.normal[0] * f.length;
            }
        }
        if (cell_area - enclosed).abs()
            > eps * T::from_usize_lossy(self.cells.len()) * enclosed.abs()
        {
            return Err(MeshDefect::CoverageMismatch {
                cells: cell_area.to_f64_lossy(),
                boundary: enclosed.to_f64_lossy(),
            }
            .into());
        }
        Ok(report)
    }
}

fn triangle_shape<T: Real>(t: &[Point<T>; 3]) -> T {
    let a = cross(sub(t[1], t[0]), sub(t[2], t[0])) * T::lit(0.5);
    let e = [sub(t[1], t[0]), sub(t[2], t[1]), sub(t[0], t[2])];
    let sq: T = e.iter().map(|v| dot(*v, *v)).sum();
    T::lit(4.0 * 3f64.sqrt()) * a / sq
}

/// Centroid-fan subtriangulation of a polygon. On failure returns the index
/// of the first triangle with non-positive area.
pub fn subtriangulate<T: Real>(
    pts: &[Point<T>],
    center: Point<T>,
) -> std::result::Result<Vec<[Point<T>; 3]>, usize> {
    let m = pts.len();
    let scale = pts
        .iter()
        .fold(T::zero(), |acc, p| acc.max(norm(sub(*p, center))));
    let floor = T::epsilon() * T::lit(16.0) * scale * scale;
    let mut tris = Vec::with_capacity(m);
    for i in 0..m {
        let t = [center, pts[i], pts[(i + 1) % m]];
        let a = cross(sub(t[1], t[0]), sub(t[2], t[0])) * T::lit(0.5);
        if !(a > floor) {
            return Err(i);
        }
        tris.push(t);
    }
    Ok(tris)
}
