use super::*;
use crate::basis::{gauss_legendre, monomial_exponents, Poly2, SmoothFunction};
use crate::mesh::{generate_mesh, MeshKind};
use crate::scalar::{dot, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `sin(a x + b y + c)`.
struct Wave {
    a: f64,
    b: f64,
    c: f64,
}

impl SmoothFunction<f64> for Wave {
    fn value(&self, x: Point<f64>) -> f64 {
        (self.a * x[0] + self.b * x[1] + self.c).sin()
    }
    fn gradient(&self, x: Point<f64>) -> Point<f64> {
        let d = (self.a * x[0] + self.b * x[1] + self.c).cos();
        [self.a * d, self.b * d]
    }
    fn hessian(&self, x: Point<f64>) -> [f64; 3] {
        let s = -(self.a * x[0] + self.b * x[1] + self.c).sin();
        [
            self.a * self.a * s,
            self.a * self.b * s,
            self.b * self.b * s,
        ]
    }
}

struct SineSquared;

impl SmoothFunction<f64> for SineSquared {
    fn value(&self, x: Point<f64>) -> f64 {
        let pi = std::f64::consts::PI;
        ((pi * x[0]).sin() * (pi * x[1]).sin()).powi(2)
    }
    fn gradient(&self, x: Point<f64>) -> Point<f64> {
        let pi = std::f64::consts::PI;
        let (sx, sy) = ((pi * x[0]).sin().powi(2), (pi * x[1]).sin().powi(2));
        [
            pi * (2.0 * pi * x[0]).sin() * sy,
            pi * (2.0 * pi * x[1]).sin() * sx,
        ]
    }
    fn hessian(&self, x: Point<f64>) -> [f64; 3] {
        let pi = std::f64::consts::PI;
        let (sx, sy) = ((pi * x[0]).sin().powi(2), (pi * x[1]).sin().powi(2));
        let (dx, dy) = (pi * (2.0 * pi * x[0]).sin(), pi * (2.0 * pi * x[1]).sin());
        let (ddx, ddy) = (
            2.0 * pi * pi * (2.0 * pi * x[0]).cos(),
            2.0 * pi * pi * (2.0 * pi * x[1]).cos(),
        );
        [ddx * sy, dx * dy, sx * ddy]
    }
}

fn random_poly(k: usize, rng: &mut ChaCha8Rng) -> Poly2<f64> {
    Poly2::new(
        monomial_exponents(k)
            .into_iter()
            .map(|e| (e, rng.gen_range(-1.0..1.0)))
            .collect(),
    )
}

fn two_rectangles() -> PolyMesh<f64> {
    let v = vec![
        [0.0, 0.0],
        [0.5, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [0.5, 1.0],
        [1.0, 1.0],
    ];
    PolyMesh::from_raw(v, vec![vec![0, 1, 4, 3], vec![1, 2, 5, 4]]).unwrap()
}

fn pentagon_and_triangle() -> PolyMesh<f64> {
    let v = vec![
        [0.0, 0.0],
        [1.0, 0.0],
        [1.0, 0.6],
        [0.5, 1.0],
        [0.0, 1.0],
        [1.0, 1.0],
    ];
    PolyMesh::from_raw(v, vec![vec![0, 1, 2, 3, 4], vec![2, 5, 3]]).unwrap()
}

fn interior_cells(mesh: &PolyMesh<f64>) -> Vec<usize> {
    (0..mesh.n_cells())
        .filter(|&c| mesh.is_interior_cell(c))
        .collect()
}

/// Gauss points `(offset, point, weight)` on a face, independent of the
/// library face rules.
fn face_points(face: &crate::mesh::Face<f64>, n: usize) -> Vec<(f64, Point<f64>, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter()
        .zip(&w)
        .map(|(&t, &w)| {
            let s = 0.5 * t * face.length;
            (s, face.point_at(s), 0.5 * w * face.length)
        })
        .collect()
}

/// `∂^a_x ∂^b_y` of `((x − c)/h)^p ((y − c)/h)^q`.
fn mono(e: (usize, usize), d: (usize, usize), x: Point<f64>, c: Point<f64>, h: f64) -> f64 {
    let f = |p: usize, r: usize, t: f64| -> f64 {
        if r > p {
            return 0.0;
        }
        let coef: f64 = (0..r).map(|i| (p - i) as f64).product();
        coef * t.powi((p - r) as i32) / h.powi(r as i32)
    };
    f(e.0, d.0, (x[0] - c[0]) / h) * f(e.1, d.1, (x[1] - c[1]) / h)
}

fn padded(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(n, 0.0);
    out
}

#[test]
fn degree_below_two_is_rejected() {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 2, 0).unwrap();
    for m in Method::ALL {
        assert!(matches!(
            Discretization::new(&mesh, m, 1),
            Err(Error::InvalidDegree { .. })
        ));
    }
}

#[test]
fn method_parsing_round_trips() {
    for m in Method::ALL {
        assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
    }
    assert!("cg".parse::<Method>().is_err());
}

#[test]
fn wg_laplacian_of_quadratic_is_four() {
    let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, 4, 0).unwrap();
    let p = Poly2::new(vec![((2, 0), 1.0), ((0, 2), 1.0)]);
    for k in [2, 3] {
        let disc = Discretization::new(&mesh, Method::Wg, k).unwrap();
        let field = disc.interpolate(&p).unwrap();
        let lap = disc.discrete_laplacian(&field).unwrap();
        for c in interior_cells(&mesh) {
            let basis = disc.basis(c);
            let x = mesh.cell(c).centroid;
            let v = basis.eval_combination(&padded(&lap[c], disc.n_cell()), x, 0, 0);
            assert!((v - 4.0).abs() < 1e-9, "k={k} cell {c}: {v}");
        }
    }
}

#[test]
fn zero_data_gives_zero() {
    let mesh = generate_mesh::<f64>(MeshKind::PerturbedQuad, 3, 5).unwrap();
    for m in Method::ALL {
        let disc = Discretization::new(&mesh, m, 2).unwrap();
        let field = disc.interpolate(&Poly2::<f64>::zero()).unwrap();
        assert_eq!(field, HybridField::zeros(&disc));
        for c in 0..mesh.n_cells() {
            let local = field.local(&disc, c);
            match m {
                Method::Wg => assert!(disc
                    .wg_discrete_laplacian(c, &local)
                    .unwrap()
                    .iter()
                    .all(|&x| x == 0.0)),
                Method::Hho => assert!(disc
                    .hho_reconstruction(c, &local)
                    .unwrap()
                    .iter()
                    .all(|&x| x == 0.0)),
                _ => assert!(disc
                    .dg_discrete_laplacian(c, &field)
                    .unwrap()
                    .iter()
                    .all(|&x| x == 0.0)),
            }
        }
    }
}

#[test]
fn polynomial_consistency_wg_and_hho() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in [MeshKind::Hexagonal, MeshKind::PerturbedQuad] {
        let mesh = generate_mesh::<f64>(kind, 4, 3).unwrap();
        for k in [2, 3] {
            let p = random_poly(k, &mut rng);
            let wg = Discretization::new(&mesh, Method::Wg, k).unwrap();
            let hho = Discretization::new(&mesh, Method::Hho, k).unwrap();
            let fw = wg.interpolate(&p).unwrap();
            let fh = hho.interpolate(&p).unwrap();
            for c in interior_cells(&mesh) {
                let basis = wg.basis(c);
                // Δp in P_{k-2}: its coefficients are the leading L² moments
                let exact = basis.project(&wg.cell_data(c).rule, wg.n_lap(), |x| p.laplacian(x));
                let lap = wg.wg_discrete_laplacian(c, &fw.local(&wg, c)).unwrap();
                let scale = exact.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (a, b) in lap.iter().zip(&exact) {
                    assert!((a - b).abs() < 1e-9 * scale, "WG k={k}: {a} vs {b}");
                }
                let r = hho.hho_reconstruction(c, &fh.local(&hho, c)).unwrap();
                let coeffs = hho.cell_projection(c, &p);
                let scale = coeffs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (a, b) in r.iter().zip(&coeffs) {
                    assert!((a - b).abs() < 1e-9 * scale, "HHO k={k}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn dg_laplacian_of_global_polynomial() {
    let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, 4, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in [Method::Sip, Method::Nip] {
        for k in [2, 3] {
            let disc = Discretization::new(&mesh, m, k).unwrap();
            let p = random_poly(k, &mut rng);
            let field = disc.interpolate(&p).unwrap();
            for c in interior_cells(&mesh) {
                let lap = disc.dg_discrete_laplacian(c, &field).unwrap();
                let exact = disc
                    .basis(c)
                    .project(&disc.cell_data(c).rule, disc.n_lap(), |x| p.laplacian(x));
                for (a, b) in lap.iter().zip(&exact) {
                    assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn dg_laplacian_formulas_agree() {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 2, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in [2, 3, 4] {
        let disc = Discretization::new(&mesh, Method::Sip, k).unwrap();
        let field = HybridField::random(&disc, &mut rng);
        for c in 0..mesh.n_cells() {
            let a = disc.dg_discrete_laplacian(c, &field).unwrap();
            let b = disc.dg_discrete_laplacian_ibp(c, &field).unwrap();
            let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-11 * scale, "k={k} cell {c}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn wg_laplacian_matches_global_dense_oracle() {
    let mesh = two_rectangles();
    let k = 3;
    let disc = Discretization::new(&mesh, Method::Wg, k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let field = HybridField::random(&disc, &mut rng);
    let lap = disc.discrete_laplacian(&field).unwrap();

    // test space: global monomials of degree ≤ k − 2 on each cell
    let exps = monomial_exponents(k - 2);
    let nl = exps.len();
    let n = nl * mesh.n_cells();
    let mut mass = Mat::zeros(n, n);
    let mut rhs = vec![0.0; n];
    let origin = [0.0, 0.0];
    for c in 0..mesh.n_cells() {
        let rule = QuadRule::cell(&mesh, c, 12).unwrap();
        let basis = disc.basis(c);
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            let v = basis.eval_combination(&field.cells[c], x, 0, 0);
            for (i, &ei) in exps.iter().enumerate() {
                let lap_i = mono(ei, (2, 0), x, origin, 1.0) + mono(ei, (0, 2), x, origin, 1.0);
                rhs[c * nl + i] += w * v * lap_i;
                for (j, &ej) in exps.iter().enumerate() {
                    mass[(c * nl + i, c * nl + j)] +=
                        w * mono(ei, (0, 0), x, origin, 1.0) * mono(ej, (0, 0), x, origin, 1.0);
                }
            }
        }
    }
    for (s, face) in mesh.faces().iter().enumerate() {
        let Some(minus) = face.minus else { continue };
        let fd = disc.face_data(s);
        let nb = fd.normal_basis.as_ref().unwrap();
        for (off, x, w) in face_points(face, 8) {
            let vs = fd.value_basis.eval_combination(&field.face_values[s], off);
            let gs = nb.eval_combination(&field.face_normals[s], off);
            for (c, sign) in [(face.plus, 1.0), (minus, -1.0)] {
                for (i, &ei) in exps.iter().enumerate() {
                    let psi = mono(ei, (0, 0), x, origin, 1.0);
                    let dn = mono(ei, (1, 0), x, origin, 1.0) * face.normal[0]
                        + mono(ei, (0, 1), x, origin, 1.0) * face.normal[1];
                    rhs[c * nl + i] += sign * w * (gs * psi - vs * dn);
                }
            }
        }
    }
    let coef = crate::linalg::Lu::new(&mass).unwrap().solve(&rhs);
    for c in 0..mesh.n_cells() {
        for &x in &mesh.cell_points(c) {
            let y = [
                0.9 * x[0] + 0.1 * mesh.cell(c).centroid[0],
                0.9 * x[1] + 0.1 * mesh.cell(c).centroid[1],
            ];
            let oracle: f64 = exps
                .iter()
                .enumerate()
                .map(|(i, &e)| coef[c * nl + i] * mono(e, (0, 0), y, origin, 1.0))
                .sum();
            let ours = disc
                .basis(c)
                .eval_combination(&padded(&lap[c], disc.n_cell()), y, 0, 0);
            assert!(
                (ours - oracle).abs() < 1e-10 * (1.0 + oracle.abs()),
                "{ours} vs {oracle}"
            );
        }
    }
}

#[test]
fn hho_reconstruction_matches_constrained_oracle() {
    let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, 4, 0).unwrap();
    let c = (0..mesh.n_cells())
        .find(|&c| mesh.is_interior_cell(c) && mesh.cell(c).n_faces() == 6)
        .unwrap();
    let k = 3;
    let disc = Discretization::new(&mesh, Method::Hho, k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let field = HybridField::random(&disc, &mut rng);
    let r = disc.hho_reconstruction(c, &field.local(&disc, c)).unwrap();

    let cell = mesh.cell(c);
    let (ctr, h) = (cell.centroid, cell.diameter);
    let exps = monomial_exponents(k);
    let n = exps.len();
    let basis = disc.basis(c);
    let rule = QuadRule::cell(&mesh, c, 14).unwrap();
    let mut sys = Mat::zeros(n + 3, n + 3);
    let mut b = vec![0.0; n + 3];
    for (&x, &w) in rule.points.iter().zip(&rule.weights) {
        let v = basis.eval_combination(&field.cells[c], x, 0, 0);
        for (i, &ei) in exps.iter().enumerate() {
            let d = |a, b| mono(ei, (a, b), x, ctr, h);
            b[i] += w * v * (d(4, 0) + 2.0 * d(2, 2) + d(0, 4));
            for (j, &ej) in exps.iter().enumerate() {
                let e = |a, b| mono(ej, (a, b), x, ctr, h);
                sys[(i, j)] +=
                    w * (d(2, 0) * e(2, 0) + 2.0 * d(1, 1) * e(1, 1) + d(0, 2) * e(0, 2));
            }
            if i < 3 {
                for (j, &ej) in exps.iter().enumerate() {
                    sys[(n + i, j)] +=
                        w * mono(ei, (0, 0), x, ctr, h) * mono(ej, (0, 0), x, ctr, h);
                }
                b[n + i] += w * v * mono(ei, (0, 0), x, ctr, h);
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
        let sg = cell.sign(li);
        let fd = disc.face_data(s);
        let nb = fd.normal_basis.as_ref().unwrap();
        let (nu, t) = (face.normal, face.tangent);
        for (off, x, w) in face_points(face, 8) {
            let (vals, ders) = fd.value_basis.eval(off);
            let vs: f64 = vals
                .iter()
                .zip(&field.face_values[s])
                .map(|(a, b)| a * b)
                .sum();
            let dvs: f64 = ders
                .iter()
                .zip(&field.face_values[s])
                .map(|(a, b)| a * b)
                .sum();
            let gs = nb.eval_combination(&field.face_normals[s], off);
            for (i, &ei) in exps.iter().enumerate() {
                let d = |a, b| mono(ei, (a, b), x, ctr, h);
                let grad_lap = [d(3, 0) + d(1, 2), d(2, 1) + d(0, 3)];
                let hess = [[d(2, 0), d(1, 1)], [d(1, 1), d(0, 2)]];
                let quad = |a: Point<f64>, bb: Point<f64>| -> f64 {
                    (0..2)
                        .map(|p| (0..2).map(|q| a[p] * hess[p][q] * bb[q]).sum::<f64>())
                        .sum()
                };
                b[i] -= sg * w * (vs * dot(grad_lap, nu) - gs * quad(nu, nu) - dvs * quad(nu, t));
            }
        }
    }
    let sol = crate::linalg::Lu::new(&sys).unwrap().solve(&b);
    for x in mesh.cell_points(c).iter().chain(std::iter::once(&ctr)) {
        let oracle: f64 = exps
            .iter()
            .enumerate()
            .map(|(i, &e)| sol[i] * mono(e, (0, 0), *x, ctr, h))
            .sum();
        let ours = basis.eval_combination(&r, *x, 0, 0);
        assert!(
            (ours - oracle).abs() < 1e-9 * (1.0 + oracle.abs()),
            "{ours} vs {oracle}"
        );
    }
}

fn hessian_error(
    disc: &Discretization<'_, f64>,
    c: usize,
    v: &dyn SmoothFunction<f64>,
    approx: impl Fn(Point<f64>) -> [f64; 3],
) -> f64 {
    let data = disc.cell_data(c);
    data.fine_rule
        .points
        .iter()
        .zip(&data.fine_rule.weights)
        .map(|(&x, &w)| {
            let (a, b) = (v.hessian(x), approx(x));
            let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
            w * (d[0] * d[0] + 2.0 * d[1] * d[1] + d[2] * d[2])
        })
        .sum::<f64>()
        .sqrt()
}

fn coeff_hessian<'d>(
    disc: &'d Discretization<'_, f64>,
    c: usize,
    coeffs: &[f64],
) -> impl Fn(Point<f64>) -> [f64; 3] + 'd {
    let basis = disc.basis(c);
    let coeffs = coeffs.to_vec();
    move |x| {
        [
            basis.eval_combination(&coeffs, x, 2, 0),
            basis.eval_combination(&coeffs, x, 1, 1),
            basis.eval_combination(&coeffs, x, 0, 2),
        ]
    }
}

#[test]
fn galerkin_projection_reproduces_polynomials() {
    let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, 3, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in [2, 3] {
        let disc = Discretization::new(&mesh, Method::Sip, k).unwrap();
        let p = random_poly(k, &mut rng);
        let affine = random_poly(1, &mut rng);
        for c in 0..mesh.n_cells() {
            for q in [&p, &affine] {
                let g = disc.galerkin_projection(c, q).unwrap();
                let exact = disc.cell_projection(c, q);
                for (a, b) in g.iter().zip(&exact) {
                    assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
                }
            }
        }
    }
}

#[test]
fn galerkin_beats_l2_projection_on_unit_square() {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 1, 0).unwrap();
    let disc = Discretization::new(&mesh, Method::Sip, 2).unwrap();
    let pi = std::f64::consts::PI;
    let v = Wave {
        a: pi,
        b: 0.0,
        c: 0.0,
    };
    // sin(πx)sin(πy) = (cos(π(x−y)) − cos(π(x+y)))/2 is not a Wave; use the product directly
    struct Product;
    impl SmoothFunction<f64> for Product {
        fn value(&self, x: Point<f64>) -> f64 {
            let pi = std::f64::consts::PI;
            (pi * x[0]).sin() * (pi * x[1]).sin()
        }
        fn gradient(&self, x: Point<f64>) -> Point<f64> {
            let pi = std::f64::consts::PI;
            [
                pi * (pi * x[0]).cos() * (pi * x[1]).sin(),
                pi * (pi * x[0]).sin() * (pi * x[1]).cos(),
            ]
        }
        fn hessian(&self, x: Point<f64>) -> [f64; 3] {
            let pi = std::f64::consts::PI;
            let u = (pi * x[0]).sin() * (pi * x[1]).sin();
            [
                -pi * pi * u,
                pi * pi * (pi * x[0]).cos() * (pi * x[1]).cos(),
                -pi * pi * u,
            ]
        }
    }
    for f in [&Product as &dyn SmoothFunction<f64>, &v] {
        let g = disc.galerkin_projection(0, f).unwrap();
        let p = disc.cell_projection(0, f);
        let eg = hessian_error(&disc, 0, f, coeff_hessian(&disc, 0, &g));
        let ep = hessian_error(&disc, 0, f, coeff_hessian(&disc, 0, &p));
        assert!(eg <= ep * (1.0 + 1e-12), "{eg} > {ep}");
        // moments of degree ≤ 1 are preserved
        for m in 0..3 {
            assert!((g[m] - p[m]).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn galerkin_projection_is_hessian_optimal(a in -6.0f64..6.0, b in -6.0f64..6.0, c in -3.0f64..3.0, n in 1usize..4) {
        let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, n, 0).unwrap();
        let v = Wave { a, b, c };
        for k in [2, 3] {
            let disc = Discretization::new(&mesh, Method::Sip, k).unwrap();
            for cell in 0..mesh.n_cells() {
                let g = disc.galerkin_projection(cell, &v).unwrap();
                let eg = hessian_error(&disc, cell, &v, coeff_hessian(&disc, cell, &g));
                let p = disc.cell_projection(cell, &v);
                let ep = hessian_error(&disc, cell, &v, coeff_hessian(&disc, cell, &p));
                let hc = v.hessian(mesh.cell(cell).centroid);
                let et = hessian_error(&disc, cell, &v, |_| hc);
                let tol = 1e-10 * (1.0 + ep);
                prop_assert!(eg <= ep + tol, "projection: {} > {}", eg, ep);
                prop_assert!(eg <= et + tol, "taylor: {} > {}", eg, et);
            }
        }
    }
}

#[test]
fn interpolated_face_data_matches_face_quadrature() {
    let mesh = generate_mesh::<f64>(MeshKind::PerturbedQuad, 3, 1).unwrap();
    for m in [Method::Wg, Method::Hho] {
        let k = 3;
        let disc = Discretization::new(&mesh, m, k).unwrap();
        let field = disc.interpolate(&SineSquared).unwrap();
        for (s, face) in mesh.faces().iter().enumerate() {
            if face.is_boundary() {
                assert!(field.face_values[s].is_empty() && field.face_normals[s].is_empty());
                continue;
            }
            let fd = disc.face_data(s);
            let nb = fd.normal_basis.as_ref().unwrap();
            let mut vals = vec![0.0; fd.value_basis.dim()];
            let mut nors = vec![0.0; nb.dim()];
            for (off, x, w) in face_points(face, 20) {
                let (mu, nu) = (fd.value_basis.values(off), nb.values(off));
                let (v, dn) = (
                    SineSquared.value(x),
                    dot(SineSquared.gradient(x), face.normal),
                );
                vals.iter_mut().zip(&mu).for_each(|(a, b)| *a += w * v * b);
                nors.iter_mut().zip(&nu).for_each(|(a, b)| *a += w * dn * b);
            }
            for (a, b) in field.face_values[s]
                .iter()
                .zip(&vals)
                .chain(field.face_normals[s].iter().zip(&nors))
            {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn stabilization_vanishes_on_interpolated_polynomials() {
    let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, 4, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in [Method::Wg, Method::Hho] {
        for k in [2, 3] {
            let disc = Discretization::new(&mesh, m, k).unwrap();
            let p = random_poly(k, &mut rng);
            let field = disc.interpolate(&p).unwrap();
            for c in interior_cells(&mesh) {
                let u = field.local(&disc, c);
                let s = disc.local_stabilization(c, &u, &u).unwrap();
                let scale = u.iter().map(|x| x * x).sum::<f64>() / mesh.cell(c).diameter.powi(4);
                assert!(s.abs() < 1e-12 * scale, "{m} k={k}: {s}");
            }
        }
    }
    for m in [Method::Sip, Method::Nip] {
        let disc = Discretization::new(&mesh, m, 3).unwrap();
        let field = disc.interpolate(&random_poly(3, &mut rng)).unwrap();
        for (s, face) in mesh.faces().iter().enumerate() {
            if face.is_boundary() {
                continue;
            }
            let v = disc.dg_face_stabilization(s, &field, &field).unwrap();
            assert!(v.abs() < 1e-12 * face.length.powi(-3), "{v}");
        }
    }
}

#[test]
fn stabilization_is_bilinear() {
    let mesh = generate_mesh::<f64>(MeshKind::PerturbedQuad, 3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in Method::ALL {
        let disc = Discretization::new(&mesh, m, 2).unwrap();
        let u = HybridField::random(&disc, &mut rng);
        let u3 = u.scaled(3.0);
        if m.is_hybrid() {
            for c in 0..mesh.n_cells() {
                let (a, b) = (u.local(&disc, c), u3.local(&disc, c));
                let s1 = disc.local_stabilization(c, &a, &a).unwrap();
                let s3 = disc.local_stabilization(c, &b, &b).unwrap();
                assert!((s3 - 9.0 * s1).abs() < 1e-12 * s3.abs());
                assert!(s1 >= 0.0);
            }
        } else {
            for s in 0..mesh.n_faces() {
                let s1 = disc.dg_face_stabilization(s, &u, &u).unwrap();
                let s3 = disc.dg_face_stabilization(s, &u3, &u3).unwrap();
                assert!((s3 - 9.0 * s1).abs() < 1e-12 * s3.abs());
            }
        }
    }
}

#[test]
fn method_mismatch_is_rejected() {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 2, 0).unwrap();
    let dg = Discretization::new(&mesh, Method::Sip, 2).unwrap();
    let wg = Discretization::new(&mesh, Method::Wg, 2).unwrap();
    assert!(matches!(
        dg.hybrid_stabilization_matrix(0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        dg.wg_laplacian_matrix(0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        wg.dg_stabilization_matrix(0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        wg.hho_reconstruction_matrix(0),
        Err(Error::InvalidArgument(_))
    ));
    let f = HybridField::zeros(&wg);
    assert!(matches!(
        dg.discrete_laplacian(&f),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        wg.local_stabilization(0, &[1.0], &[1.0]),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn wg_stabilization_matches_face_oracle_on_pentagon() {
    let mesh = pentagon_and_triangle();
    let disc = Discretization::new(&mesh, Method::Wg, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let u = HybridField::random(&disc, &mut rng);
    let v = HybridField::random(&disc, &mut rng);
    let c = 0;
    assert_eq!(mesh.cell(c).n_faces(), 5);
    let ours = disc
        .local_stabilization(c, &u.local(&disc, c), &v.local(&disc, c))
        .unwrap();
    let basis = disc.basis(c);
    let mut oracle = 0.0;
    for &s in &mesh.cell(c).faces {
        let face = mesh.face(s);
        let fd = disc.face_data(s);
        let nb = fd.normal_basis.as_ref().unwrap();
        let h = face.length;
        for (off, x, w) in face_points(face, 10) {
            let res = |f: &HybridField<f64>| -> (f64, f64) {
                let (fs, gs) = if face.is_boundary() {
                    (0.0, 0.0)
                } else {
                    (
                        fd.value_basis.eval_combination(&f.face_values[s], off),
                        nb.eval_combination(&f.face_normals[s], off),
                    )
                };
                let g = [
                    basis.eval_combination(&f.cells[c], x, 1, 0),
                    basis.eval_combination(&f.cells[c], x, 0, 1),
                ];
                (
                    basis.eval_combination(&f.cells[c], x, 0, 0) - fs,
                    dot(g, face.normal) - gs,
                )
            };
            let (ru, rv) = (res(&u), res(&v));
            oracle += w * (ru.0 * rv.0 / h.powi(3) + ru.1 * rv.1 / h);
        }
    }
    assert!(
        (ours - oracle).abs() < 1e-11 * oracle.abs().max(1.0),
        "{ours} vs {oracle}"
    );
}

#[test]
fn norm_equivalence_ratios_are_bounded() {
    for m in [Method::Wg, Method::Sip, Method::Hho] {
        let ratios: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&n| crate::study::acceptance::norm_equivalence_ratio(m, n, 100).unwrap())
            .collect();
        for r in &ratios {
            assert!(*r <= 100.0 && r.is_finite(), "{m}: {ratios:?}");
        }
    }
}

#[test]
fn stabilization_of_interpolant_is_quasi_optimal() {
    let v = Wave {
        a: 2.3,
        b: -1.7,
        c: 0.4,
    };
    for m in [Method::Wg, Method::Sip, Method::Hho] {
        let mut ratios = Vec::new();
        for n in [4, 8, 16] {
            let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, n, 0).unwrap();
            let disc = Discretization::new(&mesh, m, 2).unwrap();
            let f = disc.interpolate(&v).unwrap();
            let cells = interior_cells(&mesh);
            let energy: f64 = cells
                .iter()
                .map(|&c| hessian_error(&disc, c, &v, coeff_hessian(&disc, c, &f.cells[c])).powi(2))
                .sum::<f64>()
                .sqrt();
            let stab: f64 = if m.is_hybrid() {
                cells
                    .iter()
                    .map(|&c| {
                        let l = f.local(&disc, c);
                        disc.local_stabilization(c, &l, &l).unwrap()
                    })
                    .sum()
            } else {
                (0..mesh.n_faces())
                    .filter(|&s| disc.face_cells(s).iter().all(|&c| mesh.is_interior_cell(c)))
                    .map(|s| disc.dg_face_stabilization(s, &f, &f).unwrap())
                    .sum()
            };
            ratios.push(stab.sqrt() / energy);
        }
        assert!(ratios.iter().all(|r| *r <= 100.0), "{m}: {ratios:?}");
        assert!(ratios[2] <= 1.5 * ratios[0], "{m}: growing {ratios:?}");
    }
}
