//! Command-line entry points: production runs, the validation harnesses,
//! kernel metrics, and geometry generation.

use crate::error::Result;
use crate::fields::Norm;
use crate::geometry::{self, MushroomSpec};
use crate::kernels::{epsilon_mom, epsilon_unity, Phi};
use crate::output;
use crate::projection::{Init, Simulation};
use crate::scenario::{self, parse_fraction, Scenario};
use crate::validation::{self, Quantity, StudyKind};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "biofilm-ibm",
    about = "Immersed-boundary biofilm flow simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SolverOverrides {
    /// Multigrid levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Pre-smoothing sweeps.
    #[arg(long)]
    nu1: Option<usize>,
    /// Post-smoothing sweeps.
    #[arg(long)]
    nu2: Option<usize>,
    /// Coarse-viscosity scaling (repeat for per-level values).
    #[arg(long, num_args = 1..)]
    gamma: Option<Vec<f64>>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
}

impl SolverOverrides {
    fn apply(&self, sc: &mut Scenario) {
        if let Some(v) = self.levels {
            sc.levels = v;
        }
        if let Some(v) = self.tol {
            sc.residual_tol = v;
        }
        if let Some(v) = self.nu1 {
            sc.nu1 = v;
        }
        if let Some(v) = self.nu2 {
            sc.nu2 = v;
        }
        if let Some(v) = &self.gamma {
            sc.gamma = v.clone();
        }
        if let Some(v) = self.seed {
            sc.seed = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file, writing snapshots and a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverOverrides,
    },
    /// Temporal refinement study on the seeded mushroom scenario.
    ConvergeTime {
        /// Coarsest time step (halved per rung).
        #[arg(long, default_value = "2e-4")]
        dt_max: f64,
        #[arg(long, default_value_t = 4)]
        rungs: usize,
        #[arg(long, default_value = "1/128", value_parser = parse_fraction)]
        h: f64,
        #[arg(long, default_value = "0.01")]
        t_end: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverOverrides,
    },
    /// Spatial refinement study on the seeded mushroom scenario.
    ConvergeSpace {
        /// Mesh widths, coarse to fine (each must halve the previous).
        #[arg(long, num_args = 1.., value_parser = parse_fraction,
              default_values_t = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0])]
        h: Vec<f64>,
        /// Coefficient variant: plain, density (rho_b = rho0), or
        /// viscosity (mu_max = 500 mu0).
        #[arg(long, default_value = "plain")]
        variant: String,
        #[arg(long, default_value = "1e-4")]
        dt: f64,
        #[arg(long, default_value = "0.01")]
        t_end: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverOverrides,
    },
    /// Fluid-only regression against the exact laminar profile.
    LaminarCheck {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "1/128", value_parser = parse_fraction)]
        h: f64,
        #[arg(long, default_value = "1e-4")]
        dt: f64,
        #[arg(long, default_value_t = 300)]
        steps: usize,
        #[command(flatten)]
        solver: SolverOverrides,
    },
    /// Kernel quality metrics over a mesh-width sweep (CSV to stdout or file).
    DeltaMetrics {
        #[arg(long, default_value = "1/100", value_parser = parse_fraction)]
        omega: f64,
        #[arg(long, default_value = "1/1024", value_parser = parse_fraction)]
        h_min: f64,
        #[arg(long, default_value = "1/100", value_parser = parse_fraction)]
        h_max: f64,
        /// Sweep points, log-spaced.
        #[arg(long, default_value_t = 24)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic mushroom cell cloud as a cell CSV.
    GenerateGeometry {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "1.59")]
        spacing_um: f64,
        #[arg(long, default_value = "75")]
        center_um: f64,
        #[arg(long, default_value = "cells.csv")]
        out: PathBuf,
    },
}

/// Parses arguments and runs; returns the process exit code.
pub fn run(args: impl Iterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            config,
            out,
            solver,
        } => {
            let mut sc = scenario::load_scenario(&config)?;
            solver.apply(&mut sc);
            for w in &sc.warnings {
                eprintln!("warning: {w}");
            }
            let every = sc.schedule.snapshot_every;
            let steps = (sc.t_end / sc.dt).round() as usize;
            let mut sim = Simulation::new(sc, Init::Laminar)?;
            std::fs::create_dir_all(&out)?;
            output::write_snapshot(&out, &sim)?;
            for step in 0..steps {
                sim.full_step()?;
                if every > 0 && (step + 1) % every == 0 {
                    output::write_snapshot(&out, &sim)?;
                }
            }
            output::write_snapshot(&out, &sim)?;
            output::write_stats_csv(&out.join("stats.csv"), &sim.history)?;
            output::write_manifest(&out.join("manifest.txt"), &sim)?;
            println!(
                "{} steps to t = {:.4}; snapshots in {}",
                sim.step,
                sim.t,
                out.display()
            );
            Ok(())
        }
        Command::ConvergeTime {
            dt_max,
            rungs,
            h,
            t_end,
            out,
            solver,
        } => {
            let mut ladder = Vec::new();
            let mut dt = dt_max;
            for _ in 0..rungs {
                let mut sc = scenario::mushroom_2d(1, h, dt, t_end, 5e-6, 1.0, 0.0, 1.0);
                solver.apply(&mut sc);
                ladder.push(sc);
                dt /= 2.0;
            }
            let report = validation::run_refinement_study(StudyKind::Temporal, &ladder)?;
            finish_study(&report, &out, "temporal")
        }
        Command::ConvergeSpace {
            h,
            variant,
            dt,
            t_end,
            out,
            solver,
        } => {
            let (rho_b, mu_ratio) = match variant.as_str() {
                "plain" => (0.0, 1.0),
                "density" => (998.0, 1.0),
                "viscosity" => (0.0, 500.0),
                other => {
                    return Err(crate::error::SimError::Config(format!(
                        "variant must be plain|density|viscosity, got {other:?}"
                    )))
                }
            };
            let mut ladder = Vec::new();
            for hi in &h {
                let mut sc = scenario::mushroom_2d(1, *hi, dt, t_end, 5e-6, 1.0, rho_b, mu_ratio);
                solver.apply(&mut sc);
                ladder.push(sc);
            }
            let report = validation::run_refinement_study(StudyKind::Spatial, &ladder)?;
            finish_study(&report, &out, "spatial")
        }
        Command::LaminarCheck {
            dim,
            h,
            dt,
            steps,
            solver,
        } => {
            let mut sc = if dim == 2 {
                scenario::laminar_2d(h, dt, dt * steps as f64)
            } else {
                scenario::laminar_3d(h, dt, dt * steps as f64)
            };
            solver.apply(&mut sc);
            let mut sim = Simulation::new(sc, Init::HalfLaminar)?;
            for _ in 0..steps {
                sim.full_step()?;
            }
            let err = sim.laminar_error_inf();
            println!(
                "{dim}D laminar check: max-norm error {err:.3e} after {steps} steps (h = {h})"
            );
            Ok(())
        }
        Command::DeltaMetrics {
            omega,
            h_min,
            h_max,
            points,
            out,
        } => {
            let mut csv =
                String::from("h,eps_unity_phi1,eps_mom_phi1,eps_unity_phi2,eps_mom_phi2\n");
            let (l0, l1) = (h_min.ln(), h_max.ln());
            for s in 0..points {
                let f = s as f64 / (points.max(2) - 1) as f64;
                let h = (l0 + f * (l1 - l0)).exp();
                csv.push_str(&format!(
                    "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                    h,
                    epsilon_unity(omega, h, Phi::Phi1),
                    epsilon_mom(omega, h, Phi::Phi1),
                    epsilon_unity(omega, h, Phi::Phi2),
                    epsilon_mom(omega, h, Phi::Phi2),
                ));
            }
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::GenerateGeometry {
            seed,
            dim,
            spacing_um,
            center_um,
            out,
        } => {
            let l_um = 50.0;
            let extent = if dim == 2 {
                [3.0, 1.0, 0.0]
            } else {
                [1.0, 1.0, 3.0]
            };
            let center = if dim == 2 {
                [center_um, 0.0]
            } else {
                [25.0, center_um]
            };
            let spec = MushroomSpec::paper_silhouette(center, spacing_um);
            let cloud = geometry::generate_mushroom(seed, dim, &spec, l_um, extent)?;
            geometry::write_cells(&out, &cloud, l_um)?;
            println!(
                "{} cells written to {}",
                cloud.positions.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn finish_study(report: &validation::RefinementReport, out: &PathBuf, tag: &str) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let csv_path = out.join(format!("refinement_{tag}.csv"));
    std::fs::write(&csv_path, report.to_csv())?;
    print!("{}", report.summary());
    let u_inf = report.ladder(Quantity::Velocity, Norm::Inf);
    println!(
        "errors E_inf(u): {}",
        u_inf
            .errors
            .iter()
            .map(|e| format!("{e:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    if !report.unstable_rungs.is_empty() {
        println!("unstable rungs: {:?}", report.unstable_rungs);
    }
    println!("plot data: {}", csv_path.display());
    Ok(())
}
