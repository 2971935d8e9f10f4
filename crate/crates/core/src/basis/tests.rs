use super::*;
use crate::mesh::{generate_mesh, MeshKind, PolyMesh};

fn stretched_quad() -> PolyMesh<f64> {
    PolyMesh::from_raw(
        vec![[0.0, 0.0], [10.0, 0.0], [10.5, 1.0], [0.3, 0.9]],
        vec![vec![0, 1, 2, 3]],
    )
    .unwrap()
}

#[test]
fn dimension_counts() {
    let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, 2, 0).unwrap();
    for k in 0..5 {
        assert_eq!(CellBasis::new(&mesh, 0, k).unwrap().dim(), dim_p(k));
    }
    assert_eq!(dim_p(2), 6);
}

#[test]
fn constant_on_unit_square_is_one() {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 1, 0).unwrap();
    let b = CellBasis::new(&mesh, 0, 0).unwrap();
    for p in [[0.1, 0.2], [0.9, 0.5]] {
        assert!((b.values(p)[0] - 1.0).abs() < 1e-14);
    }
}

#[test]
fn gram_identity_on_stretched_cell() {
    let mesh = stretched_quad();
    let b = CellBasis::new(&mesh, 0, 3).unwrap();
    // independent higher-order rule
    let rule = QuadRule::cell(&mesh, 0, 14).unwrap();
    let mut g = b.gram(&rule);
    g.add_assign_scaled(&Mat::identity(b.dim()), -1.0);
    assert!(g.max_abs() < 1e-10, "{}", g.max_abs());
}

#[test]
fn monomials_reproduced_by_basis_span() {
    let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, 3, 0).unwrap();
    let k = 3;
    let b = CellBasis::new(&mesh, 4, k).unwrap();
    let rule = QuadRule::cell(&mesh, 4, 2 * k + 2).unwrap();
    for (a, c) in monomial_exponents(k) {
        let f = |p: Point<f64>| p[0].powi(a as i32) * p[1].powi(c as i32);
        let coeffs = b.project(&rule, b.dim(), f);
        for p in &rule.points[..5] {
            let v = b.eval_combination(&coeffs, *p, 0, 0);
            assert!((v - f(*p)).abs() < 1e-12);
        }
    }
}

#[test]
fn derivative_order_limits() {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 1, 0).unwrap();
    let b = CellBasis::new(&mesh, 0, 2).unwrap();
    assert!(matches!(
        b.eval([0.5, 0.5], 4),
        Err(Error::UnsupportedOrder(4))
    ));
    let d = b.eval([0.3, 0.4], 1).unwrap();
    assert_eq!(d[(0, 0)], 0.0);
    assert_eq!(d[(0, 1)], 0.0);
    // P_2 Hessians are constant
    let h1 = b.eval([0.1, 0.7], 2).unwrap();
    let h2 = b.eval([0.8, 0.2], 2).unwrap();
    let mut diff = h1.clone();
    diff.add_assign_scaled(&h2, -1.0);
    assert!(diff.max_abs() < 1e-12);
}

#[test]
fn derivatives_match_finite_differences() {
    let mesh = generate_mesh::<f64>(MeshKind::PerturbedQuad, 3, 4).unwrap();
    let b = CellBasis::new(&mesh, 4, 4).unwrap();
    let c = mesh.cell(4).centroid;
    let h = 1e-5;
    let pts = [
        [0.0, 0.0],
        [0.03, -0.02],
        [-0.05, 0.04],
        [0.06, 0.05],
        [-0.02, -0.07],
    ];
    for off in pts {
        let x = [c[0] + off[0], c[1] + off[1]];
        for r in 1..=3 {
            let d = b.eval(x, r).unwrap();
            let lower_x = |dx: f64, dy: f64| b.eval([x[0] + dx, x[1] + dy], r - 1).unwrap();
            for comp in 0..=r {
                // ∂x^{r−comp} ∂y^comp: difference an order r−1 component
                let (lc, dir) = if comp < r {
                    (comp, [h, 0.0])
                } else {
                    (comp - 1, [0.0, h])
                };
                let plus = lower_x(dir[0], dir[1]);
                let minus = lower_x(-dir[0], -dir[1]);
                for i in 0..b.dim() {
                    let fd = (plus[(i, lc)] - minus[(i, lc)]) / (2.0 * h);
                    let exact = d[(i, comp)];
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (fd - exact).abs() / scale < 1e-6,
                        "r={r} comp={comp} i={i}: {fd} vs {exact}"
                    );
                }
            }
        }
    }
}

#[test]
fn face_basis_orthonormal_and_legendre_projection() {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 1, 0).unwrap();
    // bottom face of the unit square runs from (0,0) to (1,0)
    let face = mesh
        .faces()
        .iter()
        .find(|f| f.midpoint[1] == 0.0)
        .unwrap()
        .clone();
    let fb = FaceBasis::new(&face, 4);
    let rule = FaceRule::new(&face, 12).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let g: f64 = rule
                .offsets
                .iter()
                .zip(&rule.weights)
                .map(|(&s, &w)| w * fb.values(s)[i] * fb.values(s)[j])
                .sum();
            assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }
    // Π^1 of sin(πs) on [0, 1]: c0 = 2/π, c1 = 0 (odd about the midpoint)
    let f1 = FaceBasis::new(&face, 1);
    let rule = FaceRule::new(&face, 30).unwrap();
    let sign = face.tangent[0];
    let c = f1.project(&rule, |p| (std::f64::consts::PI * p[0]).sin());
    assert!((c[0] - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    assert!((sign * c[1]).abs() < 1e-12);
}

#[test]
fn projection_of_x_on_unit_square() {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 1, 0).unwrap();
    let b = CellBasis::new(&mesh, 0, 0).unwrap();
    let rule = QuadRule::cell(&mesh, 0, 2).unwrap();
    let c = b.project(&rule, 1, |p| p[0]);
    assert!((c[0] * b.values([0.5, 0.5])[0] - 0.5).abs() < 1e-14);
}

#[test]
fn projection_properties() {
    let mesh = generate_mesh::<f64>(MeshKind::Hexagonal, 4, 0).unwrap();
    let k = 3;
    let cell = 7;
    let b = CellBasis::new(&mesh, cell, k).unwrap();
    let rule = QuadRule::cell(&mesh, cell, 2 * k + 2).unwrap();
    let f = |p: Point<f64>| (3.0 * p[0]).sin() * (2.0 * p[1]).exp();
    let c = b.project(&rule, b.dim(), f);
    // contraction and orthogonality under the rule's inner product
    let norm_f: f64 = rule.integrate(|p| f(p) * f(p)).sqrt();
    let norm_pf: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm_pf <= norm_f * (1.0 + 1e-14));
    for i in 0..b.dim() {
        let r = rule.integrate(|p| (f(p) - b.eval_combination(&c, p, 0, 0)) * b.values(p)[i]);
        assert!(r.abs() < 1e-10 * norm_f);
    }
    // idempotence
    let c2 = b.project(&rule, b.dim(), |p| b.eval_combination(&c, p, 0, 0));
    for (u, v) in c.iter().zip(&c2) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn generic_over_f32() {
    let mesh = generate_mesh::<f32>(MeshKind::Cartesian, 2, 0).unwrap();
    let b = CellBasis::new(&mesh, 0, 2).unwrap();
    let rule = QuadRule::cell(&mesh, 0, 4).unwrap();
    let mut g = b.gram(&rule);
    g.add_assign_scaled(&Mat::identity(6), -1.0);
    assert!(g.max_abs() < 1e-4);
}
