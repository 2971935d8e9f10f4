//! Gauss rules on segments and collapsed-Gauss rules on triangles; cell
//! rules are composite over the centroid fan.

use crate::error::{Error, Result};
use crate::mesh::{Face, PolyMesh};
use crate::scalar::{cross, sub, Point, Real};

/// Highest polynomial degree any rule is built for.
pub const MAX_QUADRATURE_DEGREE: usize = 60;

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
pub(crate) fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn points_for(degree: usize) -> usize {
    degree / 2 + 1
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_QUADRATURE_DEGREE {
        Err(Error::UnsupportedDegree {
            requested: degree,
            max: MAX_QUADRATURE_DEGREE,
        })
    } else {
        Ok(())
    }
}

/// Points and positive weights exact for polynomials up to `degree`.
#[derive(Debug, Clone)]
pub struct QuadRule<T> {
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub degree: usize,
}

/// A rule on a mesh face; `offsets` are the arc-length coordinates of the
/// points measured from the face midpoint along its tangent.
#[derive(Debug, Clone)]
pub struct FaceRule<T> {
    pub offsets: Vec<T>,
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub degree: usize,
}

impl<T: Real> QuadRule<T> {
    /// Gauss rule on `[0, 1]` embedded as points `(s, 0)`.
    pub fn unit_interval(degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let (x, w) = gauss_legendre(points_for(degree));
        Ok(Self {
            points: x
                .iter()
                .map(|&s| [T::lit(0.5 * (s + 1.0)), T::zero()])
                .collect(),
            weights: w.iter().map(|&v| T::lit(0.5 * v)).collect(),
            degree,
        })
    }

    /// Collapsed (Duffy) tensor Gauss rule on a triangle.
    pub fn triangle(tri: &[Point<T>; 3], degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let n = points_for(degree + 1);
        let (x, w) = gauss_legendre(n);
        let e1 = sub(tri[1], tri[0]);
        let e2 = sub(tri[2], tri[0]);
        let jac = cross(e1, e2).abs();
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&xa, &wa) in x.iter().zip(&w) {
            let u = 0.5 * (xa + 1.0);
            for (&xb, &wb) in x.iter().zip(&w) {
                let v = 0.5 * (xb + 1.0) * (1.0 - u);
                let weight = 0.25 * wa * wb * (1.0 - u);
                let (u_t, v_t) = (T::lit(u), T::lit(v));
                points.push([
                    tri[0][0] + u_t * e1[0] + v_t * e2[0],
                    tri[0][1] + u_t * e1[1] + v_t * e2[1],
                ]);
                weights.push(T::lit(weight) * jac);
            }
        }
        Ok(Self {
            points,
            weights,
            degree,
        })
    }

    /// Composite rule over the fan subtriangulation of cell `k`.
    pub fn cell(mesh: &PolyMesh<T>, k: usize, degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for tri in mesh.subtriangulate(k)? {
            let r = Self::triangle(&tri, degree)?;
            points.extend(r.points);
            weights.extend(r.weights);
        }
        Ok(Self {
            points,
            weights,
            degree,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point<T>) -> T) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

impl<T: Real> FaceRule<T> {
    pub fn new(face: &Face<T>, degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let (x, w) = gauss_legendre(points_for(degree));
        let half = face.length * T::lit(0.5);
        let offsets: Vec<T> = x.iter().map(|&s| half * T::lit(s)).collect();
        Ok(Self {
            points: offsets.iter().map(|&s| face.point_at(s)).collect(),
            weights: w.iter().map(|&v| half * T::lit(v)).collect(),
            offsets,
            degree,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point<T>) -> T) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshKind};

    #[test]
    fn two_point_gauss_integrates_cubic_exactly() {
        let r = QuadRule::<f64>::unit_interval(3).unwrap();
        assert_eq!(r.len(), 2);
        let v = r.integrate(|p| p[0].powi(3));
        assert!((v - 0.25).abs() < 1e-16);
    }

    #[test]
    fn gauss_weights_positive_and_exact() {
        for n in 1..25 {
            let (x, w) = gauss_legendre(n);
            assert!(w.iter().all(|&v| v > 0.0));
            for d in 0..2 * n {
                let exact = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d as f64 + 1.0)
                };
                let q: f64 = x.iter().zip(&w).map(|(&s, &v)| v * s.powi(d as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn triangle_rule_exact_on_monomials() {
        // ∫_T x^a y^b over the unit right triangle = a! b! / (a+b+2)!
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        for deg in 0..=16 {
            let r = QuadRule::<f64>::triangle(&tri, deg).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for a in 0..=deg {
                let b = deg - a;
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q = r.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                assert!((q - exact).abs() < 1e-14 * exact.max(1e-3), "a={a} b={b}");
            }
        }
    }

    #[test]
    fn unit_square_integrals() {
        let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 1, 0).unwrap();
        let one = QuadRule::cell(&mesh, 0, 0).unwrap().integrate(|_| 1.0);
        assert!((one - 1.0).abs() < 1e-15);
        let r = QuadRule::cell(&mesh, 0, 4).unwrap();
        let v = r.integrate(|p| p[0] * p[0] * p[1] * p[1]);
        assert!((v - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn unsupported_degree() {
        assert!(matches!(
            QuadRule::<f64>::unit_interval(MAX_QUADRATURE_DEGREE + 1),
            Err(Error::UnsupportedDegree { .. })
        ));
    }
}
