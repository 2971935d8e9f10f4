//! Acceptance suite: nine property checks run by `study check` and by the
//! `acceptance` integration test. Each criterion yields one pass/fail line;
//! the per-item details are kept for verbose output.

use std::fmt;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{max_growth, run_series, LevelResult, ManufacturedCase, SeriesSpec};
use crate::assembly::{
    assemble, assemble_rhs, eval_bh, laplacian_product, solve_condensed, stabilization,
};
use crate::basis::{monomial_exponents, Poly2};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::localops::{Discretization, HybridField, Method};
use crate::mesh::{generate_mesh, MeshKind};
use crate::reference;
use crate::solver::{solve, SolverOptions, Strategy};

/// Titles of the criteria, indexed from 1.
pub const CRITERIA: [&str; 9] = [
    "operator exactness",
    "oracle equivalence",
    "norm equivalence",
    "energy convergence",
    "quasi-optimality",
    "stabilization efficiency",
    "lower-order rates",
    "structure checks",
    "exact representability",
];

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: usize,
    pub passed: bool,
    /// One-line summary.
    pub summary: String,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn title(&self) -> &'static str {
        CRITERIA[self.id - 1]
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {}: {} ({}; {:.1}s)",
            self.id,
            self.title(),
            if self.passed { "PASS" } else { "FAIL" },
            self.summary,
            self.seconds
        )
    }
}

/// Pass/fail items collected while a criterion runs.
#[derive(Default)]
struct Items(Vec<(bool, String)>);

impl Items {
    fn push(&mut self, ok: bool, detail: String) {
        self.0.push((ok, detail));
    }

    fn finish(self) -> (bool, String, Vec<String>) {
        let failed = self.0.iter().filter(|(ok, _)| !ok).count();
        let summary = if failed == 0 {
            format!("{} checks", self.0.len())
        } else {
            let first = self
                .0
                .iter()
                .find(|(ok, _)| !ok)
                .map(|(_, d)| d.as_str())
                .unwrap_or("");
            format!("{failed}/{} checks failed, first: {first}", self.0.len())
        };
        let details = self
            .0
            .into_iter()
            .map(|(ok, d)| format!("{} {d}", if ok { "ok  " } else { "FAIL" }))
            .collect();
        (failed == 0, summary, details)
    }
}

/// Runs one criterion (1 to 9).
pub fn run_criterion(id: usize) -> Result<CriterionOutcome> {
    let body: fn() -> Result<Items> = match id {
        1 => operator_exactness,
        2 => oracle_equivalence,
        3 => norm_equivalence,
        4 => energy_convergence,
        5 => quasi_optimality,
        6 => stabilization_efficiency,
        7 => lower_order_rates,
        8 => structure_checks,
        9 => exact_representability,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "no acceptance criterion {id}"
            )))
        }
    };
    let start = Instant::now();
    let (passed, summary, details) = match body() {
        Ok(items) => items.finish(),
        Err(e) => (false, format!("error: {e}"), Vec::new()),
    };
    Ok(CriterionOutcome {
        id,
        passed,
        summary,
        details,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the selected criteria in order; an empty selection runs all nine.
pub fn run_suite(selection: &[usize]) -> Result<Vec<CriterionOutcome>> {
    let ids: Vec<usize> = if selection.is_empty() {
        (1..=9).collect()
    } else {
        selection.to_vec()
    };
    ids.into_iter().map(run_criterion).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn random_poly(k: usize, rng: &mut ChaCha8Rng) -> Poly2<f64> {
    Poly2::new(
        monomial_exponents(k)
            .into_iter()
            .map(|e| (e, rng.gen_range(-1.0..1.0)))
            .collect(),
    )
}

/// Largest `|a_i − b_i|` relative to the largest `|b_i|`.
fn coeff_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn operator_exactness() -> Result<Items> {
    let mut items = Items::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [MeshKind::Cartesian, MeshKind::Hexagonal] {
        let mesh = generate_mesh::<f64>(kind, 4, 0)?;
        let interior: Vec<usize> = (0..mesh.n_cells())
            .filter(|&c| mesh.is_interior_cell(c))
            .collect();
        for k in [2, 3] {
            for m in Method::ALL {
                let disc = Discretization::new(&mesh, m, k)?;
                let mut worst = 0.0f64;
                for _ in 0..10 {
                    let p = random_poly(k, &mut rng);
                    let field = disc.interpolate(&p)?;
                    for &c in &interior {
                        let err = match m {
                            Method::Hho => {
                                let r = disc.hho_reconstruction(c, &field.local(&disc, c))?;
                                coeff_error(&r, &disc.cell_projection(c, &p))
                            }
                            _ => {
                                let lap = if m == Method::Wg {
                                    disc.wg_discrete_laplacian(c, &field.local(&disc, c))?
                                } else {
                                    disc.dg_discrete_laplacian(c, &field)?
                                };
                                let exact = disc.basis(c).project(
                                    &disc.cell_data(c).rule,
                                    disc.n_lap(),
                                    |x| p.laplacian(x),
                                );
                                coeff_error(&lap, &exact)
                            }
                        };
                        worst = worst.max(err);
                    }
                }
                items.push(
                    worst <= 1e-9,
                    format!(
                        "{m} k={k} {kind}: {} interior cells, max error {worst:.2e}",
                        interior.len()
                    ),
                );
            }
        }
    }
    Ok(items)
}

fn oracle_equivalence() -> Result<Items> {
    let mut items = Items::default();
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, 2, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in Method::ALL {
        for k in [2, 3] {
            let disc = Discretization::new(&mesh, m, k)?;
            let sys = assemble(&disc, None)?;
            let sigma = sys.config.sigma;
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let u = HybridField::random(&disc, &mut rng);
                let v = HybridField::random(&disc, &mut rng);
                let slow = reference::bilinear_form(&disc, sigma, &u, &v)?;
                let fast = sys.form(&sys.dofmap.to_vector(&u)?, &sys.dofmap.to_vector(&v)?);
                worst = worst.max(rel(fast, slow));
                if m.is_dg() {
                    let rewritten = laplacian_product(&disc, &u, &v)?
                        + eval_bh(&disc, &u, &v)?
                        + sigma * stabilization(&disc, &u, &v)?;
                    worst = worst.max(rel(rewritten, slow));
                }
            }
            let what = if m.is_dg() {
                "theta-form vs rewritten and assembled"
            } else {
                "assembled vs slow path"
            };
            items.push(
                worst <= 1e-10,
                format!("{m} k={k}: {what}, max relative gap {worst:.2e}"),
            );
        }
    }
    Ok(items)
}

/// Largest observed ratio `‖consistency defect‖ / |v_h|_s` over `samples`
/// random fields at `k = 2` on the cartesian mesh of size `n`. The defect is
/// `Δ_h v − Δ v_T` (WG, DG) or the Hessian seminorm of `R_h v − v_T` (HHO).
pub fn norm_equivalence_ratio(method: Method, n: usize, samples: usize) -> Result<f64> {
    let mesh = generate_mesh::<f64>(MeshKind::Cartesian, n, 0)?;
    let disc = Discretization::new(&mesh, method, 2)?;
    let nc = mesh.n_cells();
    // Δ of the cell polynomial in the P_{k−2} basis
    let vol: Vec<Mat<f64>> = (0..nc)
        .map(|c| {
            let data = disc.cell_data(c);
            let mut m = Mat::zeros(disc.n_lap(), disc.n_cell());
            for (&x, &w) in data.rule.points.iter().zip(&data.rule.weights) {
                let (psi, lap) = (data.basis.values(x), data.basis.laplacians(x));
                for i in 0..disc.n_lap() {
                    for j in 0..disc.n_cell() {
                        m[(i, j)] += w * psi[i] * lap[j];
                    }
                }
            }
            m
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let f = HybridField::random(&disc, &mut rng);
        let (mut num, mut den) = (0.0, 0.0);
        for c in 0..nc {
            let vk = &f.cells[c];
            let local = f.local(&disc, c);
            let defect: Vec<f64> = match method {
                Method::Hho => disc
                    .hho_reconstruction(c, &local)?
                    .iter()
                    .zip(vk)
                    .map(|(a, b)| a - b)
                    .collect(),
                Method::Wg => disc
                    .wg_discrete_laplacian(c, &local)?
                    .iter()
                    .zip(vol[c].mul_vec(vk))
                    .map(|(a, b)| a - b)
                    .collect(),
                _ => disc
                    .dg_discrete_laplacian(c, &f)?
                    .iter()
                    .zip(vol[c].mul_vec(vk))
                    .map(|(a, b)| a - b)
                    .collect(),
            };
            num += if method == Method::Hho {
                disc.hessian_stiffness(c).bilinear(&defect, &defect)
            } else {
                defect.iter().map(|x| x * x).sum::<f64>()
            };
            if method.is_hybrid() {
                den += disc.local_stabilization(c, &local, &local)?;
            }
        }
        if method.is_dg() {
            den = (0..mesh.n_faces())
                .map(|s| disc.dg_face_stabilization(s, &f, &f))
                .sum::<Result<f64>>()?;
        }
        worst = worst.max((num / den).sqrt());
    }
    Ok(worst)
}

fn norm_equivalence() -> Result<Items> {
    let mut items = Items::default();
    for m in [Method::Wg, Method::Sip, Method::Hho] {
        let ratios = [2, 4, 8]
            .iter()
            .map(|&n| norm_equivalence_ratio(m, n, 100))
            .collect::<Result<Vec<f64>>>()?;
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let growth = max_growth(&ratios);
        items.push(
            ratios.iter().all(|r| r.is_finite()) && max <= 100.0 && growth <= 0.2,
            format!(
                "{m}: ratios {:.3}/{:.3}/{:.3} (n=2/4/8), max {max:.3} <= 100, growth {:.1}% <= 20%",
                ratios[0],
                ratios[1],
                ratios[2],
                100.0 * growth
            ),
        );
    }
    Ok(items)
}

/// Sine-squared series on the cartesian and perturbed-quad families: all
/// methods at k = 2 on n = 4..32 and at k = 3 on n = 4..16. Shared by
/// criteria 4 to 6 and computed once.
fn convergence_runs() -> &'static [Vec<LevelResult>] {
    static RUNS: OnceLock<Vec<Vec<LevelResult>>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut specs = Vec::new();
        for mesh in [MeshKind::Cartesian, MeshKind::PerturbedQuad] {
            for (degree, levels) in [(2, vec![4, 8, 16, 32]), (3, vec![4, 8, 16])] {
                for method in Method::ALL {
                    specs.push(SeriesSpec {
                        method,
                        degree,
                        mesh,
                        levels: levels.clone(),
                        case: ManufacturedCase::SineSquared,
                        seed: 0,
                        sigma: None,
                        tolerance: 1e-10,
                        condense: false,
                    });
                }
            }
        }
        specs.par_iter().map(|s| run_series(s, None)).collect()
    })
}

fn tag(rows: &[LevelResult]) -> String {
    format!("{} k={} {}", rows[0].method, rows[0].degree, rows[0].mesh)
}

/// Checks that every level solved, recording failures as items.
fn solved<'a>(
    rows: &'a [LevelResult],
    items: &mut Items,
) -> Option<Vec<&'a crate::study::ErrorMeasures>> {
    let errs: Vec<_> = rows.iter().filter_map(|r| r.errors.as_ref()).collect();
    if errs.len() == rows.len() {
        return Some(errs);
    }
    let why: Vec<String> = rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("n={}: {f}", r.n)))
        .collect();
    items.push(
        false,
        format!("{}: unsolved levels: {}", tag(rows), why.join("; ")),
    );
    None
}

fn energy_convergence() -> Result<Items> {
    let mut items = Items::default();
    for rows in convergence_runs() {
        if solved(rows, &mut items).is_none() {
            continue;
        }
        let k = rows[0].degree;
        let want = if k == 2 { k as f64 - 1.25 } else { 1.7 };
        let eoc = rows.last().and_then(|r| r.eoc_energy).unwrap_or(f64::NAN);
        let all: Vec<String> = rows
            .iter()
            .filter_map(|r| r.eoc_energy)
            .map(|e| format!("{e:.2}"))
            .collect();
        items.push(
            eoc >= want,
            format!(
                "{}: last-pair EOC {eoc:.3} >= {want} (all {})",
                tag(rows),
                all.join(", ")
            ),
        );
    }
    Ok(items)
}

fn quasi_optimality() -> Result<Items> {
    let mut items = Items::default();
    for rows in convergence_runs() {
        let Some(errs) = solved(rows, &mut items) else {
            continue;
        };
        let q: Vec<f64> = errs.iter().map(|e| e.quasi_optimality).collect();
        let max = q.iter().cloned().fold(0.0, f64::max);
        let growth = max_growth(&q);
        let list: Vec<String> = q.iter().map(|v| format!("{v:.2}")).collect();
        items.push(
            max <= 50.0 && growth <= 0.2,
            format!(
                "{}: ratios {}, max {max:.2} <= 50, consecutive growth {:.1}% <= 20%",
                tag(rows),
                list.join("/"),
                100.0 * growth
            ),
        );
    }
    Ok(items)
}

fn stabilization_efficiency() -> Result<Items> {
    let mut items = Items::default();
    for rows in convergence_runs() {
        let Some(errs) = solved(rows, &mut items) else {
            continue;
        };
        let s: Vec<f64> = errs.iter().map(|e| e.stab_efficiency).collect();
        let max = s.iter().cloned().fold(0.0, f64::max);
        // flat trend: the finest pair changes by at most 20%
        let growth = max_growth(&s[s.len() - 2..]);
        let list: Vec<String> = s.iter().map(|v| format!("{v:.2}")).collect();
        items.push(
            max <= 50.0 && growth <= 0.2,
            format!(
                "{}: ratios {}, max {max:.2} <= 50, last-pair growth {:.1}% <= 20%",
                tag(rows),
                list.join("/"),
                100.0 * growth
            ),
        );
    }
    Ok(items)
}

/// Levels of the lower-order rate check. The L² rate of the DG methods is
/// still pre-asymptotic on the coarser meshes, so the finest pair is 32/64.
pub const LOWER_ORDER_LEVELS: [usize; 4] = [8, 16, 32, 64];

fn lower_order_rates() -> Result<Items> {
    let mut items = Items::default();
    let runs: Vec<Vec<LevelResult>> = Method::ALL
        .par_iter()
        .map(|&method| {
            run_series(
                &SeriesSpec {
                    method,
                    degree: 2,
                    mesh: MeshKind::Cartesian,
                    levels: LOWER_ORDER_LEVELS.to_vec(),
                    case: ManufacturedCase::SineSquared,
                    seed: 0,
                    sigma: None,
                    tolerance: 1e-10,
                    condense: false,
                },
                None,
            )
        })
        .collect();
    for rows in &runs {
        if solved(rows, &mut items).is_none() {
            continue;
        }
        let last = rows.last().expect("levels");
        let (l2, h1) = (
            last.eoc_l2.unwrap_or(f64::NAN),
            last.eoc_h1.unwrap_or(f64::NAN),
        );
        if last.method == Method::Nip {
            items.push(
                true,
                format!("{}: L2 EOC {l2:.3} (reported only)", tag(rows)),
            );
        } else {
            items.push(l2 >= 1.8, format!("{}: L2 EOC {l2:.3} >= 1.8", tag(rows)));
        }
        items.push(
            h1 >= 1.3,
            format!("{}: broken H1 EOC {h1:.3} >= 1.3", tag(rows)),
        );
    }
    Ok(items)
}

fn structure_checks() -> Result<Items> {
    let mut items = Items::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for kind in [
        MeshKind::Cartesian,
        MeshKind::PerturbedQuad,
        MeshKind::Hexagonal,
    ] {
        let mesh = generate_mesh::<f64>(kind, 4, 0)?;
        for k in [2, 3] {
            for m in [Method::Wg, Method::Hho, Method::Sip] {
                let disc = Discretization::new(&mesh, m, k)?;
                // the default penalty is below the coercivity threshold of
                // clipped hexagonal cells at k = 3
                let sigma =
                    (m == Method::Sip && kind == MeshKind::Hexagonal && k == 3).then_some(150.0);
                let sys = assemble(&disc, sigma)?;
                let asym = sys.matrix.relative_asymmetry();
                let chol = Cholesky::new(&sys.matrix.to_dense()).is_some();
                let note = if sigma.is_some() { ", sigma 150" } else { "" };
                items.push(
                    asym <= 1e-12 && chol,
                    format!(
                        "{m} k={k} {kind}{note}: asymmetry {asym:.1e}, Cholesky {}",
                        if chol { "ok" } else { "failed" }
                    ),
                );
            }
            let disc = Discretization::new(&mesh, Method::Nip, k)?;
            let sys = assemble(&disc, None)?;
            let mut min = f64::INFINITY;
            for _ in 0..1000 {
                let x = sys
                    .dofmap
                    .to_vector(&HybridField::random(&disc, &mut rng))?;
                let xx: f64 = x.iter().map(|v| v * v).sum();
                min = min.min(sys.form(&x, &x) / xx);
            }
            items.push(
                min > 0.0,
                format!("nip k={k} {kind}: min vᵀAv/|v|² over 1000 samples {min:.3e} > 0"),
            );
            for m in [Method::Wg, Method::Hho] {
                let disc = Discretization::new(&mesh, m, k)?;
                let mut sys = assemble(&disc, None)?;
                sys.rhs = assemble_rhs(&disc, &sys.dofmap, |x| {
                    ManufacturedCase::SineSquared.load(x)
                });
                let opts = SolverOptions {
                    strategy: Strategy::Direct,
                    ..SolverOptions::default()
                };
                let (full, _) = solve(&sys.matrix, &sys.rhs, true, &opts)?;
                let (cond, _) = solve_condensed(&disc, &sys, &opts)?;
                let norm = full.iter().map(|v| v * v).sum::<f64>().sqrt();
                let diff = full
                    .iter()
                    .zip(&cond)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    / norm;
                items.push(
                    diff <= 1e-8,
                    format!("{m} k={k} {kind}: condensed vs full {diff:.2e} <= 1e-8"),
                );
            }
        }
    }
    Ok(items)
}

fn exact_representability() -> Result<Items> {
    let mut items = Items::default();
    let rows = run_series(
        &SeriesSpec {
            method: Method::Wg,
            degree: 8,
            mesh: MeshKind::Cartesian,
            levels: vec![2],
            case: ManufacturedCase::PolynomialBubble,
            seed: 0,
            sigma: None,
            tolerance: 1e-12,
            condense: false,
        },
        None,
    );
    if let Some(errs) = solved(&rows, &mut items) {
        let e = errs[0];
        items.push(
            e.best <= 1e-9,
            format!(
                "wg k=8 2x2 bubble: best approximation {:.2e} <= 1e-9",
                e.best
            ),
        );
        items.push(
            e.energy <= 1e-6,
            format!("wg k=8 2x2 bubble: energy error {:.2e} <= 1e-6", e.energy),
        );
    }
    Ok(items)
}
