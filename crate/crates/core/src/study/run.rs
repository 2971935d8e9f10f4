use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_eoc, compute_errors, ErrorMeasures, Gates, ManufacturedCase, StudyConfig};
use crate::assembly::{assemble, assemble_rhs, solve_condensed, AssembledSystem};
use crate::error::Result;
use crate::localops::{Discretization, Method};
use crate::mesh::{generate_mesh, MeshKind};
use crate::solver::{solve_blocked, SolveReport, SolverOptions, Strategy};

/// One method × degree × level result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub method: Method,
    pub degree: usize,
    pub mesh: MeshKind,
    pub n: usize,
    pub ndofs: usize,
    pub sigma: f64,
    pub errors: Option<ErrorMeasures>,
    pub solver: Option<SolveReport>,
    /// Rates against the previous level.
    pub eoc_energy: Option<f64>,
    pub eoc_l2: Option<f64>,
    pub eoc_h1: Option<f64>,
    /// `None` on success, otherwise the failure message.
    pub failure: Option<String>,
}

/// Settings of a single refinement series.
#[derive(Debug, Clone)]
pub struct SeriesSpec {
    pub method: Method,
    pub degree: usize,
    pub mesh: MeshKind,
    pub levels: Vec<usize>,
    pub case: ManufacturedCase,
    pub seed: u64,
    pub sigma: Option<f64>,
    pub tolerance: f64,
    pub condense: bool,
}

/// Assembles and solves one level; returns the discretization-independent
/// pieces needed for reporting.
fn solve_level(
    spec: &SeriesSpec,
    n: usize,
    dump: Option<&Path>,
) -> Result<(usize, f64, ErrorMeasures, SolveReport)> {
    let mesh = generate_mesh::<f64>(spec.mesh, n, spec.seed)?;
    let disc = Discretization::new(&mesh, spec.method, spec.degree)?;
    let mut sys: AssembledSystem<f64> = assemble(&disc, spec.sigma)?;
    sys.rhs = assemble_rhs(&disc, &sys.dofmap, |x| spec.case.load(x));
    if let Some(dir) = dump {
        let name = format!(
            "matrix_{}_k{}_{}_n{}.mtx",
            spec.method, spec.degree, spec.mesh, n
        );
        sys.write_matrix_market(std::io::BufWriter::new(fs::File::create(dir.join(name))?))?;
    }
    let opts = SolverOptions {
        tolerance: spec.tolerance,
        strategy: Strategy::Auto,
        ..SolverOptions::default()
    };
    let (x, report) = if spec.condense && spec.method.is_hybrid() {
        solve_condensed(&disc, &sys, &opts)?
    } else {
        solve_blocked(
            &sys.matrix,
            &sys.rhs,
            sys.is_symmetric(),
            &opts,
            &sys.dofmap.blocks(),
        )?
    };
    let u_h = sys.dofmap.to_field(&disc, &x)?;
    let errors = compute_errors(&disc, &u_h, &spec.case)?;
    Ok((sys.dofmap.dim(), sys.config.sigma, errors, report))
}

/// Runs every level of a series and fills in the rates.
pub fn run_series(spec: &SeriesSpec, dump: Option<&Path>) -> Vec<LevelResult> {
    let mut rows: Vec<LevelResult> = spec
        .levels
        .iter()
        .map(|&n| {
            let mut row = LevelResult {
                method: spec.method,
                degree: spec.degree,
                mesh: spec.mesh,
                n,
                ndofs: 0,
                sigma: spec.sigma.unwrap_or(0.0),
                errors: None,
                solver: None,
                eoc_energy: None,
                eoc_l2: None,
                eoc_h1: None,
                failure: None,
            };
            match solve_level(spec, n, dump) {
                Ok((ndofs, sigma, errors, report)) => {
                    row.ndofs = ndofs;
                    row.sigma = sigma;
                    row.errors = Some(errors);
                    row.solver = Some(report);
                }
                Err(e) => row.failure = Some(e.to_string()),
            }
            row
        })
        .collect();
    for i in 1..rows.len() {
        if let (Some(a), Some(b)) = (rows[i - 1].errors, rows[i].errors) {
            let rate = |f: fn(&ErrorMeasures) -> f64| {
                compute_eoc(&[f(&a), f(&b)], &[a.h_max, b.h_max])
                    .ok()
                    .map(|r| r[0])
            };
            rows[i].eoc_energy = rate(|e| e.energy);
            rows[i].eoc_l2 = rate(|e| e.l2);
            rows[i].eoc_h1 = rate(|e| e.h1);
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl GateResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Largest relative increase between consecutive entries.
pub fn max_growth(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| w[1] / w[0] - 1.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

/// Gates of a finished series (rates on the last pair only).
pub fn series_gates(rows: &[LevelResult], gates: &Gates) -> Vec<GateResult> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let tag = format!("{} k={} {}", first.method, first.degree, first.mesh);
    let k = first.degree;
    let mut out = Vec::new();
    let failures: Vec<String> = rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("n={}: {f}", r.n)))
        .collect();
    out.push(GateResult::new(
        format!("{tag}: all levels solved"),
        failures.is_empty(),
        failures.join("; "),
    ));
    if !failures.is_empty() {
        return out;
    }
    let errs: Vec<ErrorMeasures> = rows
        .iter()
        .map(|r| r.errors.expect("solved level"))
        .collect();
    let last = rows.last().expect("non-empty");
    if rows.len() >= 2 {
        let e = last.eoc_energy.unwrap_or(f64::NAN);
        let want = gates.energy_rate(k);
        out.push(GateResult::new(
            format!("{tag}: energy EOC"),
            e >= want,
            format!("{e:.3} >= {want:.3}"),
        ));
        let h = last.eoc_h1.unwrap_or(f64::NAN);
        let want = gates.h1_rate(k);
        out.push(GateResult::new(
            format!("{tag}: broken H1 EOC"),
            h >= want,
            format!("{h:.3} >= {want:.3}"),
        ));
        let l = last.eoc_l2.unwrap_or(f64::NAN);
        let want = gates.l2_rate(k);
        if first.method == Method::Nip {
            out.push(GateResult::new(
                format!("{tag}: L2 EOC (reported only)"),
                true,
                format!("{l:.3}"),
            ));
        } else {
            out.push(GateResult::new(
                format!("{tag}: L2 EOC"),
                l >= want,
                format!("{l:.3} >= {want:.3}"),
            ));
        }
    }
    let q: Vec<f64> = errs.iter().map(|e| e.quasi_optimality).collect();
    let qmax = q.iter().cloned().fold(0.0, f64::max);
    let qg = max_growth(&q);
    out.push(GateResult::new(
        format!("{tag}: quasi-optimality"),
        qmax <= gates.max_ratio && qg <= gates.max_growth,
        format!(
            "max {qmax:.3} <= {}, growth {:.1}% <= {:.0}%",
            gates.max_ratio,
            100.0 * qg,
            100.0 * gates.max_growth
        ),
    ));
    let s: Vec<f64> = errs.iter().map(|e| e.stab_efficiency).collect();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    // a flat trend is judged on the finest pair, past the pre-asymptotic range
    let sg = max_growth(&s[s.len().saturating_sub(2)..]);
    out.push(GateResult::new(
        format!("{tag}: stabilization efficiency"),
        smax <= gates.max_ratio && sg <= gates.max_growth,
        format!(
            "max {smax:.3} <= {}, last-pair growth {:.1}% <= {:.0}%",
            gates.max_ratio,
            100.0 * sg,
            100.0 * gates.max_growth
        ),
    ));
    let opt = errs
        .iter()
        .all(|e| e.best <= e.energy + 1e-12 * e.energy.max(e.best).max(1.0));
    out.push(GateResult::new(
        format!("{tag}: best approximation <= energy error"),
        opt,
        "",
    ));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub rows: Vec<LevelResult>,
    pub gates: Vec<GateResult>,
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "method,degree,mesh,n,h_max,ndofs,sigma,energy,stab,best,osc,l2,h1,quasi_optimality,stab_efficiency,eoc_energy,eoc_l2,eoc_h1,solver,iterations,residual,status\n",
        );
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        for r in &self.rows {
            let _ = write!(s, "{},{},{},{},", r.method, r.degree, r.mesh, r.n);
            match &r.errors {
                Some(e) => {
                    let _ = write!(
                        s,
                        "{:.6e},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6},{:.6},",
                        e.h_max,
                        r.ndofs,
                        r.sigma,
                        e.energy,
                        e.stab,
                        e.best,
                        e.osc,
                        e.l2,
                        e.h1,
                        e.quasi_optimality,
                        e.stab_efficiency
                    );
                }
                None => s.push_str(",,,,,,,,,,,"),
            }
            let _ = write!(
                s,
                "{},{},{},",
                opt(r.eoc_energy),
                opt(r.eoc_l2),
                opt(r.eoc_h1)
            );
            match &r.solver {
                Some(rep) => {
                    let _ = write!(
                        s,
                        "{:?},{},{:.3e},",
                        rep.method, rep.iterations, rep.relative_residual
                    );
                }
                None => s.push_str(",,,"),
            }
            match &r.failure {
                None => s.push_str("ok\n"),
                Some(f) => {
                    let _ = writeln!(s, "\"failed: {}\"", f.replace('"', "'"));
                }
            }
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "passed": self.passed(),
            "config": self.config,
            "gates": self.gates,
            "rows": self.rows,
        })
    }

    /// Writes `report.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), self.to_csv())?;
        let json = serde_json::to_string_pretty(&self.summary_json())
            .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        fs::write(dir.join("summary.json"), json)?;
        Ok(())
    }
}

/// Runs every method × degree series of `config` and evaluates the gates.
/// Reports are not written; see [`StudyReport::write`].
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let dump = if config.dump_matrices {
        fs::create_dir_all(&config.output)?;
        Some(config.output.as_path())
    } else {
        None
    };
    let specs: Vec<SeriesSpec> = config
        .methods
        .iter()
        .flat_map(|&method| {
            config.degrees.iter().map(move |&degree| SeriesSpec {
                method,
                degree,
                mesh: config.mesh,
                levels: config.levels.clone(),
                case: config.case,
                seed: config.seed,
                sigma: config.sigma,
                tolerance: config.tolerance,
                condense: config.condense,
            })
        })
        .collect();
    let series: Vec<Vec<LevelResult>> = specs.par_iter().map(|s| run_series(s, dump)).collect();
    let mut gates: Vec<GateResult> = series
        .iter()
        .flat_map(|rows| series_gates(rows, &config.gates))
        .collect();
    for &k in &config.degrees {
        let last = |m: Method| {
            series
                .iter()
                .find(|r| r[0].method == m && r[0].degree == k)
                .and_then(|r| r.last()?.eoc_energy)
        };
        if let (Some(s), Some(n)) = (last(Method::Sip), last(Method::Nip)) {
            gates.push(GateResult::new(
                format!("nip vs sip k={k}: energy EOC"),
                (s - n).abs() <= 0.2,
                format!("|{n:.3} - {s:.3}| <= 0.2"),
            ));
        }
    }
    Ok(StudyReport {
        config: config.clone(),
        rows: series.into_iter().flatten().collect(),
        gates,
    })
}
