//! Feed-in power series and energy accounting of a trajectory.

use serde::Serialize;

use crate::integrator::Trajectory;
use crate::network::Network;

use super::Scenario;

/// `P_in = (u^e − e_return) · Σ q̂_c`.
pub fn feed_in_formula(injection: f64, return_energy: f64, consumer_flow: f64) -> f64 {
    (injection - return_energy) * consumer_flow
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedInSeries {
    /// Step midpoints [s].
    pub t: Vec<f64>,
    pub injection: Vec<f64>,
    /// Feed-in power per step [W].
    pub p_in: Vec<f64>,
    /// Total consumer demand per step [W].
    pub demand: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    /// Peak cap the injection was shaped for, if any.
    pub threshold: Option<f64>,
    /// Largest relative gap between the depot return energy and e^bf.
    pub return_deviation: f64,
}

pub fn feed_in_power(net: &Network, traj: &Trajectory, scenario: &Scenario) -> FeedInSeries {
    let depot_tail = net.arc(net.depot()).tail;
    let e_bf = scenario.backflow_energy;
    let steps = &traj.steps;
    let p_in: Vec<f64> = steps.iter().map(|s| s.p_in).collect();
    let n = p_in.len().max(1) as f64;
    let return_deviation = steps
        .iter()
        .map(|s| ((s.e_node[depot_tail] - e_bf) / e_bf).abs())
        .fold(0.0, f64::max);
    let uncooled = net.pipes().iter().all(|&a| net.arc(a).pipe.as_ref().is_some_and(|p| p.heat_transmission == 0.0));
    if uncooled && return_deviation > 1e-9 {
        log::warn!("depot return energy deviates from e^bf by {return_deviation:e} on an uncooled network");
    }
    FeedInSeries {
        t: steps.iter().map(|s| s.t_mid).collect(),
        injection: steps.iter().map(|s| s.injection).collect(),
        demand: steps.iter().map(|s| s.demand).collect(),
        mean: p_in.iter().sum::<f64>() / n,
        max: p_in.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        p_in,
        threshold: None,
        return_deviation,
    }
}

/// Time-integrated energies of a trajectory [J].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBalance {
    pub injected: f64,
    /// Power taken out at the consumers by the simulated flows.
    pub consumed: f64,
    /// Prescribed demand.
    pub demanded: f64,
    /// Final minus initial stored energy `Σ V_i e_i`.
    pub storage_change: f64,
}

impl EnergyBalance {
    /// `|injected − storage_change − demanded| / demanded`.
    pub fn closure_error(&self) -> f64 {
        (self.injected - self.storage_change - self.demanded).abs() / self.demanded.abs().max(f64::MIN_POSITIVE)
    }

    /// Same with the simulated consumer power in place of the demand.
    pub fn transport_error(&self) -> f64 {
        (self.injected - self.storage_change - self.consumed).abs() / self.injected.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn energy_balance(traj: &Trajectory) -> EnergyBalance {
    let dt = traj.grid.dt;
    let sum = |f: fn(&crate::integrator::StepRecord) -> f64| traj.steps.iter().map(f).sum::<f64>() * dt;
    EnergyBalance {
        injected: sum(|s| s.p_in),
        consumed: sum(|s| s.p_consumed),
        demanded: sum(|s| s.demand),
        storage_change: traj.final_state().stored_energy(&traj.volumes) - traj.initial.stored_energy(&traj.volumes),
    }
}
