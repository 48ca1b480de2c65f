use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use dhnet_core::generic::{observed_rate, refinement_study, Manufactured, PipeParams, StateLaw};
use dhnet_core::integrator::{flushed_state, simulate, Coupling, SimulationOptions, TimeGrid};
use dhnet_core::network::{generate, GeneratorKind, GeneratorOptions, Network};
use dhnet_core::ph::{build_ph, check_lyapunov, dissipation_audit, random_volume_preserving_flow, structure_report};
use dhnet_core::scenario::{
    case_study_network, case_study_scenario, energy_balance, feed_in_power, injection_bounds, optimize_peak,
    read_csv_columns, run_case_study, write_gnuplot_script, write_plot_csv, CaseStudyReport, Demand, PeakOptions,
    Scenario, TimeTable,
};
use dhnet_core::thermal::{assemble_system, Mesh};

/// Exit status when the run finished but operational bounds were violated.
const EXIT_VIOLATIONS: u8 = 2;

#[derive(Parser)]
#[command(name = "dhnet", version, about = "District heating network simulation and structure checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CouplingArg {
    QuasiStatic,
    FixedPoint,
}

#[derive(clap::Args)]
struct GridArgs {
    /// Time step [s].
    #[arg(long, default_value_t = 300.0)]
    dt: f64,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// End time [s].
    #[arg(long, default_value_t = 180_000.0)]
    t_end: f64,
    /// Target cell length [m].
    #[arg(long, default_value_t = 25.0)]
    mesh_dx: f64,
}

impl GridArgs {
    fn grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(self.t0, self.t_end, self.dt)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a thermo-hydraulic simulation.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "quasi-static")]
        coupling: CouplingArg,
        /// Hydraulic re-solves per step with fixed-point coupling.
        #[arg(long, default_value_t = 2)]
        sweeps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the port-Hamiltonian structure on random volume-preserving flows.
    CheckPh {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 25.0)]
        mesh_dx: f64,
    },
    /// Check the compressible pipe operators across a refinement ladder.
    CheckGeneric {
        /// Intervals on the coarsest mesh.
        #[arg(long, default_value_t = 16)]
        cells: usize,
        #[arg(long, default_value_t = 4)]
        refinements: usize,
    },
    /// Search a piecewise-constant injection minimizing the feed-in peak.
    OptimizePeak {
        #[arg(long)]
        network: PathBuf,
        /// Scenario JSON, or a CSV with a `t` column and one column per consumer.
        #[arg(long)]
        demand: PathBuf,
        #[arg(long, default_value_t = 12)]
        budget: usize,
        #[command(flatten)]
        grid: GridArgs,
        /// Baseline injection temperature for CSV demand [°C].
        #[arg(long, default_value_t = 95.0)]
        injection_celsius: f64,
        #[arg(long, default_value_t = 3e5)]
        stagnation_pressure: f64,
        #[arg(long, default_value_t = 5e5)]
        pressure_increase: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a synthetic network as JSON.
    GenNetwork {
        #[arg(long)]
        kind: GeneratorKind,
        #[arg(long, default_value_t = 3)]
        consumers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print arc and node counts of a network as CSV.
    Topology {
        #[arg(long)]
        network: PathBuf,
    },
    /// Constant versus optimized injection on the synthetic star network.
    CaseStudy {
        #[arg(long, default_value_t = 8)]
        consumers: usize,
        #[arg(long, default_value_t = 12)]
        budget: usize,
        #[arg(long, default_value_t = 95.0)]
        injection_celsius: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DHNET_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_network(path: &Path) -> Result<Network> {
    Network::load(path).with_context(|| format!("loading network {}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { network, scenario, grid, coupling, sweeps, out } => {
            let net = load_network(&network)?;
            let scenario = Scenario::load(&scenario, &net).context("loading scenario")?;
            let time = grid.grid()?;
            scenario.validate(&net, time.t0, time.t_end)?;
            let mesh = Mesh::build(&net, grid.mesh_dx)?;
            let opts = SimulationOptions {
                coupling: match coupling {
                    CouplingArg::QuasiStatic => Coupling::QuasiStatic,
                    CouplingArg::FixedPoint => Coupling::FixedPoint { sweeps },
                },
                bounds: Some(scenario.bounds.clone()),
                ..SimulationOptions::default()
            };
            let initial = flushed_state(&net, &mesh, &scenario, time.t0);
            let traj = simulate(&net, &mesh, &scenario, &time, initial, &opts)?;
            fs::create_dir_all(&out)?;
            traj.write_csv(&net, create(&out, "trajectory.csv")?)?;
            let feed_in = feed_in_power(&net, &traj, &scenario);
            let balance = energy_balance(&traj);
            let audit = dissipation_audit(traj.steps.iter().map(|s| &s.dissipation));
            let violations: Vec<_> = traj.steps.iter().flat_map(|s| s.bounds.violations.iter()).collect();
            let summary = json!({
                "steps": traj.steps.len(),
                "cells": mesh.cell_count(),
                "feed_in_max": feed_in.max,
                "feed_in_mean": feed_in.mean,
                "energy_balance": balance,
                "closure_error": balance.closure_error(),
                "worst_dissipation_margin": audit.worst_relative_margin,
                "violations": violations,
            });
            fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            println!(
                "{} steps, feed-in peak {:.1} kW, mean {:.1} kW, {} violations",
                traj.steps.len(),
                feed_in.max / 1e3,
                feed_in.mean / 1e3,
                violations.len()
            );
            if violations.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_VIOLATIONS))
            }
        }
        Command::CheckPh { network, samples, seed, mesh_dx } => {
            let net = load_network(&network)?;
            let mesh = Mesh::build(&net, mesh_dx)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = [0.0f64; 6];
            let mut lyapunov_ok = true;
            for _ in 0..samples {
                let q = random_volume_preserving_flow(&net, &mut rng, 1e-3);
                let sys = assemble_system(&net, &mesh, &q)?;
                let ph = build_ph(&sys, &mesh, &net)?;
                let r = structure_report(&ph, &sys, &mesh);
                let vals = [r.skew, r.symmetry, -r.min_eigenvalue, r.reconstruction, r.lyapunov_diagonal, r.output_containment];
                for (w, v) in worst.iter_mut().zip(vals) {
                    *w = w.max(v);
                }
                lyapunov_ok &= check_lyapunov(&ph).passed();
            }
            let limits = [1e-12, 1e-12, 1e-10, 1e-12, 1e-12, f64::EPSILON];
            let names = ["skew", "symmetry", "-min_eig(R)", "reconstruction", "L diagonal", "output containment"];
            println!("{:<20} {:>12} {:>10}", "check", "worst", "limit");
            let mut ok = lyapunov_ok;
            for ((name, w), lim) in names.iter().zip(worst).zip(limits) {
                println!("{name:<20} {w:>12.3e} {lim:>10.1e}");
                ok &= w <= lim;
            }
            println!("lyapunov {}", if lyapunov_ok { "ok" } else { "FAILED" });
            if !ok {
                bail!("port-Hamiltonian structure check failed");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckGeneric { cells, refinements } => {
            let law = StateLaw::default();
            let params = PipeParams::default();
            let levels = refinement_study(&Manufactured::default(), &law, &params, cells, refinements)?;
            println!(
                "{:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>12} {:>12} {:>10}",
                "points", "dx", "skew", "symmetry", "min_eig", "R^λ δH", "J δS", "entropy bal", "power gap"
            );
            for l in &levels {
                println!(
                    "{:>6} {:>10.4} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>12.4e} {:>12.4e} {:>10.3e}",
                    l.points,
                    l.spacing,
                    l.skew,
                    l.symmetry,
                    l.min_eigenvalue,
                    l.friction_degeneracy,
                    l.entropy_degeneracy,
                    l.entropy_balance,
                    l.power_gap
                );
            }
            if levels.len() >= 2 {
                let rate = |f: fn(&dhnet_core::generic::RefinementLevel) -> f64| {
                    observed_rate(&levels.iter().map(|l| (l.spacing, f(l))).collect::<Vec<_>>())
                };
                println!(
                    "rates: J δS {:.3}, entropy balance {:.3}, power gap {:.3}",
                    rate(|l| l.entropy_degeneracy),
                    rate(|l| l.entropy_balance),
                    rate(|l| l.power_gap)
                );
            }
            let structural = levels
                .iter()
                .all(|l| l.skew <= 1e-12 && l.symmetry <= 1e-12 && l.min_eigenvalue >= -1e-12 && l.friction_degeneracy <= 1e-12);
            if !structural {
                bail!("operator structure check failed");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::OptimizePeak {
            network,
            demand,
            budget,
            grid,
            injection_celsius,
            stagnation_pressure,
            pressure_increase,
            out,
        } => {
            let net = load_network(&network)?;
            let scenario = if demand.extension().is_some_and(|e| e == "json") {
                Scenario::load(&demand, &net)?
            } else {
                let ids: Vec<&str> = net.consumers().iter().map(|&c| net.arc(c).id.as_str()).collect();
                let (t, cols) = read_csv_columns(&demand, "t", &ids)?;
                let tables = cols
                    .into_iter()
                    .map(|v| TimeTable::new(t.clone(), v, Default::default()))
                    .collect::<Result<_, _>>()?;
                let mut s = case_study_scenario(&net, injection_celsius)?;
                s.demand = Demand::Tables(tables);
                s.stagnation_pressure = TimeTable::constant(stagnation_pressure);
                s.pressure_increase = TimeTable::constant(pressure_increase);
                s
            };
            let time = grid.grid()?;
            let mesh = Mesh::build(&net, grid.mesh_dx)?;
            let opts = SimulationOptions::default();
            let u_bounds = injection_bounds(&net.constants.material, &scenario.bounds)?;
            let result = optimize_peak(&net, &mesh, &scenario, &time, &opts, &PeakOptions { budget, u_bounds })?;
            let shifted = scenario.with_injection(result.profile.clone());
            let mut shifted_series = feed_in_power(&net, &result.trajectory, &shifted);
            shifted_series.threshold = result.cap;
            let report = CaseStudyReport {
                baseline: feed_in_power(&net, &result.baseline, &scenario),
                shifted: shifted_series,
                baseline_balance: energy_balance(&result.baseline),
                shifted_balance: energy_balance(&result.trajectory),
            };
            fs::create_dir_all(&out)?;
            write_profile(&net, &result.profile, create(&out, "profile.csv")?)?;
            write_plot_csv(&report, &net.constants.material, create(&out, "feed_in.csv")?)?;
            write_gnuplot_script(create(&out, "feed_in.gp")?, "feed_in.csv")?;
            write_summary(&out, &report, budget)?;
            println!(
                "baseline peak {:.1} kW, optimized peak {:.1} kW ({} evaluations)",
                result.baseline_peak / 1e3,
                result.peak / 1e3,
                result.evaluations
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::GenNetwork { kind, consumers, out } => {
            let net = generate(kind, consumers, &GeneratorOptions::default())?;
            match out {
                Some(path) => fs::write(&path, net.to_json_string())?,
                None => writeln!(io::stdout().lock(), "{}", net.to_json_string())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Topology { network } => {
            load_network(&network)?.topology_summary().write_csv(io::stdout().lock())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CaseStudy { consumers, budget, injection_celsius, grid, out } => {
            let net = case_study_network(consumers)?;
            let mesh = Mesh::build(&net, grid.mesh_dx)?;
            let time = grid.grid()?;
            let constant = case_study_scenario(&net, injection_celsius)?;
            let opts = SimulationOptions::default();
            let u_bounds = injection_bounds(&net.constants.material, &constant.bounds)?;
            let result = optimize_peak(&net, &mesh, &constant, &time, &opts, &PeakOptions { budget, u_bounds })?;
            let shifted = constant.with_injection(result.profile.clone());
            let report = run_case_study(&net, &mesh, &constant, &shifted, &time, &opts)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("network.json"), net.to_json_string())?;
            write_profile(&net, &result.profile, create(&out, "profile.csv")?)?;
            write_plot_csv(&report, &net.constants.material, create(&out, "case_study.csv")?)?;
            write_gnuplot_script(create(&out, "case_study.gp")?, "case_study.csv")?;
            write_summary(&out, &report, budget)?;
            println!(
                "constant injection peak {:.1} kW, shifted peak {:.1} kW ({:.1}% lower), mean {:.1} kW",
                report.baseline.max / 1e3,
                report.shifted.max / 1e3,
                100.0 * report.peak_reduction(),
                report.baseline.mean / 1e3
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_profile(net: &Network, profile: &TimeTable, out: impl io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "u_e", "T_C"])?;
    for (t, u) in profile.times().iter().zip(profile.values()) {
        let temperature = net.constants.material.temperature_of_energy(*u)?;
        w.write_record([t.to_string(), u.to_string(), temperature.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(out: &Path, report: &CaseStudyReport, budget: usize) -> Result<()> {
    let summary = json!({
        "budget": budget,
        "baseline_peak": report.baseline.max,
        "baseline_mean": report.baseline.mean,
        "shifted_peak": report.shifted.max,
        "shifted_mean": report.shifted.mean,
        "peak_reduction": report.peak_reduction(),
        "baseline_balance": report.baseline_balance,
        "shifted_balance": report.shifted_balance,
        "baseline_closure_error": report.baseline_balance.closure_error(),
        "shifted_closure_error": report.shifted_balance.closure_error(),
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
