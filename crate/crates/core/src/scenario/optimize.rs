//! Peak-minimizing injection search.

use crate::integrator::{flushed_state, simulate, SimulationOptions, Simulator, StepRecord, TimeGrid, Trajectory};
use crate::materials::{MaterialModel, REGIME_E_MAX};
use crate::network::{Network, OperationalBounds};
use crate::thermal::{Mesh, ThermalState};

use super::{Interpolation, Scenario, ScenarioError, TimeTable};

/// Admissible injection range `[e(T_ff_min), e(min(T_net, T_ff_max))]`,
/// capped at the top of the material regime.
pub fn injection_bounds(materials: &MaterialModel, bounds: &OperationalBounds) -> Result<(f64, f64), ScenarioError> {
    let lo = materials.energy_of_temperature(bounds.t_ff_min)?;
    let hi = materials.energy_of_temperature(bounds.t_net.min(bounds.t_ff_max))?.min(REGIME_E_MAX);
    if lo >= hi {
        return Err(ScenarioError::Infeasible(format!("empty injection range [{lo:e}, {hi:e}] J/m³")));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// Number of candidate caps to simulate.
    pub budget: usize,
    pub u_bounds: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct PeakResult {
    /// Piecewise-constant injection, one value per step.
    pub profile: TimeTable,
    pub peak: f64,
    pub baseline_peak: f64,
    /// Lowest feasible cap found, if any beat the baseline.
    pub cap: Option<f64>,
    pub evaluations: usize,
    pub trajectory: Trajectory,
    pub baseline: Trajectory,
}

struct Greedy<'a> {
    net: &'a Network,
    mesh: &'a Mesh,
    scenario: &'a Scenario,
    grid: TimeGrid,
    opts: &'a SimulationOptions,
    initial: ThermalState,
    u_bounds: (f64, f64),
}

impl Greedy<'_> {
    /// Steps at the highest injection keeping `P_in ≤ cap`; `Err` names the binding constraint.
    fn run(&self, cap: f64) -> Result<Trajectory, String> {
        let (lo, hi) = self.u_bounds;
        let mut sim = Simulator::new(self.net, self.mesh, self.scenario, self.grid, self.initial.clone(), self.opts);
        let slack = 1e-9 * cap.abs();
        while !sim.is_done() {
            let k = sim.step_index();
            let compute = |u: f64| sim.compute_step(u).map_err(|e| format!("step {k}: {e}"));
            let mut record: StepRecord = compute(hi)?;
            let mut u = hi;
            for _ in 0..3 {
                if record.p_in <= cap + slack || u <= lo {
                    break;
                }
                let flow: f64 = self.net.consumers().iter().map(|&c| record.qhat[c]).sum();
                u = (u - (record.p_in - cap) / flow).clamp(lo, hi);
                record = compute(u)?;
            }
            if record.p_in > cap + slack {
                return Err(format!(
                    "feed-in {:.1} W exceeds cap {cap:.1} W at the lowest injection (t = {} s)",
                    record.p_in, record.t_mid
                ));
            }
            if let Some(v) = record.bounds.violations.first() {
                return Err(format!("{} violated at {} (t = {} s)", v.constraint, v.location, v.time));
            }
            sim.commit(record);
        }
        let traj = sim.finish();
        let (e0, e1) = (traj.initial.stored_energy(&traj.volumes), traj.final_state().stored_energy(&traj.volumes));
        if e1 < e0 {
            return Err(format!("stored energy drops from {e0:e} J to {e1:e} J"));
        }
        Ok(traj)
    }
}

fn peak(traj: &Trajectory) -> f64 {
    traj.steps.iter().map(|s| s.p_in).fold(f64::NEG_INFINITY, f64::max)
}

fn step_profile(traj: &Trajectory) -> Result<TimeTable, ScenarioError> {
    let mut times: Vec<f64> = (0..traj.steps.len()).map(|k| traj.grid.time(k)).collect();
    let mut values: Vec<f64> = traj.steps.iter().map(|s| s.injection).collect();
    if let Some(&last) = values.last() {
        times.push(traj.grid.t_end);
        values.push(last);
    }
    TimeTable::new(times, values, Interpolation::Step)
}

/// Bisection on a feed-in cap with a greedy feasibility run per candidate.
///
/// The baseline is `scenario` as given; the result never has a higher peak.
pub fn optimize_peak(
    net: &Network,
    mesh: &Mesh,
    scenario: &Scenario,
    grid: &TimeGrid,
    opts: &SimulationOptions,
    peak_opts: &PeakOptions,
) -> Result<PeakResult, ScenarioError> {
    scenario.validate(net, grid.t0, grid.t_end)?;
    let initial = flushed_state(net, mesh, scenario, grid.t0);
    let baseline = simulate(net, mesh, scenario, grid, initial.clone(), opts)
        .map_err(|e| ScenarioError::Infeasible(format!("baseline run failed: {e}")))?;
    let baseline_peak = peak(&baseline);
    let mut best: Option<(f64, Trajectory)> = None;
    let mut evaluations = 0;

    if peak_opts.budget > 0 {
        let greedy = Greedy {
            net,
            mesh,
            scenario,
            grid: *grid,
            opts,
            initial,
            u_bounds: peak_opts.u_bounds,
        };
        let mean = baseline.steps.iter().map(|s| s.p_in).sum::<f64>() / baseline.steps.len().max(1) as f64;
        let (mut lo, mut hi) = (0.5 * mean.max(0.0), baseline_peak);
        for _ in 0..peak_opts.budget {
            let cap = 0.5 * (lo + hi);
            evaluations += 1;
            match greedy.run(cap) {
                Ok(traj) => {
                    log::debug!("cap {cap:.1} W feasible, peak {:.1} W", peak(&traj));
                    hi = cap;
                    best = Some((cap, traj));
                }
                Err(reason) => {
                    log::debug!("cap {cap:.1} W infeasible: {reason}");
                    lo = cap;
                }
            }
        }
    }

    match best {
        Some((cap, traj)) if peak(&traj) < baseline_peak => Ok(PeakResult {
            profile: step_profile(&traj)?,
            peak: peak(&traj),
            baseline_peak,
            cap: Some(cap),
            evaluations,
            trajectory: traj,
            baseline,
        }),
        _ => Ok(PeakResult {
            profile: scenario.injection.clone(),
            peak: baseline_peak,
            baseline_peak,
            cap: None,
            evaluations,
            trajectory: baseline.clone(),
            baseline,
        }),
    }
}
