//! Constant versus shifted injection on a synthetic street network.

use std::io::Write;

use serde::Serialize;

use crate::integrator::{flushed_state, simulate, SimulationOptions, TimeGrid};
use crate::materials::MaterialModel;
use crate::network::{generate, GeneratorKind, GeneratorOptions, Network, NetworkError, OperationalBounds};
use crate::thermal::Mesh;

use super::{consumer_shares, energy_balance, feed_in_power, Demand, DiurnalProfile, EnergyBalance, FeedInSeries};
use super::{Scenario, ScenarioError, TimeTable};

/// Star network whose foreflow trunk takes about an hour to cross at mean load.
pub fn case_study_network(consumers: usize) -> Result<Network, NetworkError> {
    let opts = GeneratorOptions {
        trunk_length: 300.0,
        trunk_diameter: 0.08,
        branch_length: 120.0,
        branch_diameter: 0.04,
        ..GeneratorOptions::default()
    };
    generate(GeneratorKind::Star, consumers, &opts)
}

/// Two-peak daily demand with mean 108 kW and maximum 160 kW, constant injection at `t_injection` °C.
pub fn case_study_scenario(net: &Network, t_injection: f64) -> Result<Scenario, ScenarioError> {
    let materials = &net.constants.material;
    let bounds = OperationalBounds::default();
    Ok(Scenario {
        injection: TimeTable::constant(materials.energy_of_temperature(t_injection)?),
        stagnation_pressure: TimeTable::constant(3e5),
        pressure_increase: TimeTable::constant(5e5),
        backflow_energy: materials.energy_of_temperature(bounds.t_bf)?,
        demand: Demand::Profile {
            profile: DiurnalProfile::new(108e3, 160e3, 86_400.0, 900.0)?,
            shares: consumer_shares(net.consumers().len()),
        },
        bounds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseStudyReport {
    pub baseline: FeedInSeries,
    pub shifted: FeedInSeries,
    pub baseline_balance: EnergyBalance,
    pub shifted_balance: EnergyBalance,
}

impl CaseStudyReport {
    /// `1 − peak_shifted / peak_baseline`.
    pub fn peak_reduction(&self) -> f64 {
        1.0 - self.shifted.max / self.baseline.max
    }
}

/// Simulates both scenarios from flushed states and compares their feed-in.
pub fn run_case_study(
    net: &Network,
    mesh: &Mesh,
    constant: &Scenario,
    shifted: &Scenario,
    grid: &TimeGrid,
    opts: &SimulationOptions,
) -> Result<CaseStudyReport, ScenarioError> {
    if constant.demand != shifted.demand {
        return Err(ScenarioError::Profile("case study scenarios must share their demand".into()));
    }
    let run = |s: &Scenario| -> Result<_, ScenarioError> {
        s.validate(net, grid.t0, grid.t_end)?;
        let traj = simulate(net, mesh, s, grid, flushed_state(net, mesh, constant, grid.t0), opts)?;
        Ok((feed_in_power(net, &traj, s), energy_balance(&traj)))
    };
    let (baseline, baseline_balance) = run(constant)?;
    let (mut shifted_series, shifted_balance) = run(shifted)?;
    shifted_series.threshold = Some(shifted_series.max);
    Ok(CaseStudyReport { baseline, shifted: shifted_series, baseline_balance, shifted_balance })
}

/// One row per step: injected temperatures, feed-in powers, demand, threshold and mean.
pub fn write_plot_csv<W: Write>(report: &CaseStudyReport, materials: &MaterialModel, out: W) -> Result<(), ScenarioError> {
    let csv_err = |source| ScenarioError::Csv { path: "<plot>".into(), source };
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t_h",
        "T_const_C",
        "P_const_kW",
        "T_shifted_C",
        "P_shifted_kW",
        "demand_kW",
        "threshold_kW",
        "mean_kW",
    ])
    .map_err(csv_err)?;
    let (b, s) = (&report.baseline, &report.shifted);
    let threshold = s.threshold.unwrap_or(s.max);
    for k in 0..b.t.len().min(s.t.len()) {
        let row = [
            b.t[k] / 3600.0,
            materials.temperature_of_energy(b.injection[k])?,
            b.p_in[k] / 1e3,
            materials.temperature_of_energy(s.injection[k])?,
            s.p_in[k] / 1e3,
            b.demand[k] / 1e3,
            threshold / 1e3,
            b.mean / 1e3,
        ];
        w.write_record(row.iter().map(|v| format!("{v:.6}"))).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ScenarioError::Io { path: "<plot>".into(), source })?;
    Ok(())
}

/// Gnuplot script plotting `csv_name` as produced by [`write_plot_csv`].
pub fn write_gnuplot_script<W: Write>(mut out: W, csv_name: &str) -> std::io::Result<()> {
    writeln!(out, "set datafile separator ','")?;
    writeln!(out, "set key autotitle columnhead")?;
    writeln!(out, "set xlabel 'time [h]'")?;
    writeln!(out, "set multiplot layout 2,1")?;
    writeln!(out, "set ylabel 'injection temperature [°C]'")?;
    writeln!(out, "plot '{csv_name}' using 1:2 with lines, '' using 1:4 with lines")?;
    writeln!(out, "set ylabel 'power [kW]'")?;
    writeln!(
        out,
        "plot '{csv_name}' using 1:3 with lines, '' using 1:5 with lines, '' using 1:7 with lines dt 2, '' using 1:8 with lines dt 3"
    )?;
    writeln!(out, "unset multiplot")
}
