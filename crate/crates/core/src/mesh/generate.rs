use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PolyMesh;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Built-in mesh families on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshKind {
    Cartesian,
    PerturbedQuad,
    Hexagonal,
}

impl MeshKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeshKind::Cartesian => "cartesian",
            MeshKind::PerturbedQuad => "perturbed-quad",
            MeshKind::Hexagonal => "hexagonal",
        }
    }
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeshKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cartesian" => Ok(MeshKind::Cartesian),
            "perturbed-quad" | "perturbed" => Ok(MeshKind::PerturbedQuad),
            "hexagonal" | "hex" => Ok(MeshKind::Hexagonal),
            other => Err(Error::InvalidParameter(format!(
                "unknown mesh kind `{other}`"
            ))),
        }
    }
}

/// Generates a mesh of the unit square. `n` is the number of cells per
/// coordinate direction (for hexagonal meshes: per row).
pub fn generate_mesh<T: Real>(kind: MeshKind, n: usize, seed: u64) -> Result<PolyMesh<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "subdivision count n must be at least 1".into(),
        ));
    }
    let (vertices, cells) = match kind {
        MeshKind::Cartesian => quad_grid(n, None),
        MeshKind::PerturbedQuad => quad_grid(n, Some(seed)),
        MeshKind::Hexagonal => hexagonal(n),
    };
    let vertices = vertices
        .into_iter()
        .map(|[x, y]| [T::lit(x), T::lit(y)])
        .collect();
    PolyMesh::from_raw(vertices, cells)
}

fn quad_grid(n: usize, perturb: Option<u64>) -> (Vec<[f64; 2]>, Vec<Vec<usize>>) {
    let h = 1.0 / n as f64;
    let mut rng = perturb.map(ChaCha8Rng::seed_from_u64);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let mut p = [i as f64 * h, j as f64 * h];
            if let Some(rng) = rng.as_mut() {
                if i > 0 && i < n && j > 0 && j < n {
                    let r = 0.2 * h * rng.gen::<f64>();
                    let phi = std::f64::consts::TAU * rng.gen::<f64>();
                    p[0] += r * phi.cos();
                    p[1] += r * phi.sin();
                }
            }
            vertices.push(p);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (vertices, cells)
}

/// Voronoi cells of a centred rectangular lattice whose rows sit on
/// `y = 0` and `y = 1`, clipped to the unit square. The lattice is chosen
/// so that every clipping line passes through generators or coincides with
/// cell sides, which avoids sliver edges.
fn hexagonal(n: usize) -> (Vec<[f64; 2]>, Vec<Vec<usize>>) {
    let dx = 1.0 / n as f64;
    let m = ((n as f64) * 2.0 / 3f64.sqrt()).round().max(1.0) as usize;
    let dy = 1.0 / m as f64;
    let mut sites = Vec::new();
    for j in 0..=m {
        let y = j as f64 * dy;
        if j % 2 == 0 {
            for i in 0..=n {
                sites.push([i as f64 * dx, y]);
            }
        } else {
            for i in 0..n {
                sites.push([(i as f64 + 0.5) * dx, y]);
            }
        }
    }
    let reach = 2.5 * dx.max(dy);
    let mut welder = Welder::new(1e-9);
    let mut cells = Vec::with_capacity(sites.len());
    for (a, &p) in sites.iter().enumerate() {
        let mut poly = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        for (b, &q) in sites.iter().enumerate() {
            if a == b || (q[0] - p[0]).abs() > reach || (q[1] - p[1]).abs() > reach {
                continue;
            }
            poly = clip_bisector(&poly, p, q);
        }
        let mut loop_: Vec<usize> = Vec::with_capacity(poly.len());
        for v in poly {
            let id = welder.insert(v);
            if loop_.last() != Some(&id) {
                loop_.push(id);
            }
        }
        if loop_.len() > 1 && loop_.first() == loop_.last() {
            loop_.pop();
        }
        cells.push(loop_);
    }
    (welder.points, cells)
}

/// Keeps the part of `poly` closer to `p` than to `q`.
fn clip_bisector(poly: &[[f64; 2]], p: [f64; 2], q: [f64; 2]) -> Vec<[f64; 2]> {
    let d = [q[0] - p[0], q[1] - p[1]];
    let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let scale = d[0].hypot(d[1]);
    let side = |x: [f64; 2]| ((x[0] - mid[0]) * d[0] + (x[1] - mid[1]) * d[1]) / scale;
    let tol = 1e-12;
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for i in 0..m {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let (sa, sb) = (side(a), side(b));
        if sa <= tol {
            out.push(a);
        }
        if (sa < -tol && sb > tol) || (sa > tol && sb < -tol) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Merges coordinates that agree within a tolerance.
struct Welder {
    tol: f64,
    points: Vec<[f64; 2]>,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl Welder {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            points: Vec::new(),
            grid: HashMap::new(),
        }
    }

    fn key(&self, p: [f64; 2]) -> (i64, i64) {
        (
            (p[0] / (4.0 * self.tol)).floor() as i64,
            (p[1] / (4.0 * self.tol)).floor() as i64,
        )
    }

    fn insert(&mut self, p: [f64; 2]) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let q = self.points[id];
                        if (q[0] - p[0]).abs() <= self.tol && (q[1] - p[1]).abs() <= self.tol {
                            return id;
                        }
                    }
                }
            }
        }
        // snap to the square's sides
        let snap = |x: f64| {
            if x.abs() < self.tol {
                0.0
            } else if (x - 1.0).abs() < self.tol {
                1.0
            } else {
                x
            }
        };
        self.points.push([snap(p[0]), snap(p[1])]);
        self.grid
            .entry((kx, ky))
            .or_default()
            .push(self.points.len() - 1);
        self.points.len() - 1
    }
}
