//! `study`: convergence studies, mesh export and the acceptance suite.
//!
//! Exit status is 0 when every gated check passes, 1 when a gate fails and
//! 2 on usage or runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use biharm::mesh::{export_mesh, generate_mesh, MeshKind};
use biharm::study::{acceptance, run_study, StudyConfig};

#[derive(Parser)]
#[command(
    name = "study",
    version,
    about = "Clamped-plate discretizations on polygonal meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report directory; overrides `output` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a mesh and write it as a JSON document.
    Mesh {
        /// cartesian, perturbed-quad or hexagonal
        #[arg(long)]
        kind: MeshKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Vertex jitter seed (perturbed-quad only).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the acceptance suite and print one line per criterion.
    Check {
        /// Criterion to run (1-9); repeat to select several. Default: all.
        #[arg(long = "criterion", short = 'c')]
        criteria: Vec<usize>,
        /// Also print the individual checks.
        #[arg(long, short)]
        verbose: bool,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = StudyConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            if let Some(dir) = output {
                cfg.output = dir;
            }
            let report = run_study(&cfg)?;
            report.write(&cfg.output)?;
            for g in &report.gates {
                let mark = if g.passed { "PASS" } else { "FAIL" };
                println!("{mark} {}: {}", g.name, g.detail);
            }
            println!(
                "{} rows written to {}",
                report.rows.len(),
                cfg.output.join("report.csv").display()
            );
            Ok(report.passed())
        }
        Command::Mesh { kind, n, out, seed } => {
            let mesh = generate_mesh::<f64>(kind, n, seed)?;
            let reg = mesh.validate()?;
            std::fs::write(&out, export_mesh(&mesh))
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{kind} n={n}: {} cells, {} faces, h_max {:.4}, min aspect {:.3}; wrote {}",
                mesh.n_cells(),
                mesh.n_faces(),
                mesh.h_max(),
                reg.min_aspect_ratio,
                out.display()
            );
            Ok(true)
        }
        Command::Check { criteria, verbose } => {
            let mut passed = true;
            let ids: Vec<usize> = if criteria.is_empty() {
                (1..=9).collect()
            } else {
                criteria
            };
            for id in ids {
                let outcome = acceptance::run_criterion(id)?;
                println!("{outcome}");
                if verbose || !outcome.passed {
                    for d in &outcome.details {
                        println!("    {d}");
                    }
                }
                passed &= outcome.passed;
            }
            Ok(passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
