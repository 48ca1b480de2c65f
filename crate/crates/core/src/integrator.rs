//! Implicit midpoint time stepping of the transport model coupled to
//! quasi-static hydraulics.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::hydraulics::{
    check_operational_bounds, solve_hydraulics, BoundReport, HydraulicClosure, HydraulicError,
    HydraulicOptions, HydraulicState,
};
use crate::materials::MaterialError;
use crate::network::{Network, OperationalBounds};
use crate::ph::{dissipation_step, DissipationStep};
use crate::thermal::{assemble_system, cooling_rhs, node_mixing, Mesh, SystemMatrices, ThermalError, ThermalState};

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("step {step} (t = {time} s): {source}")]
    Hydraulics { step: usize, time: f64, source: HydraulicError },
    #[error("step {step} (t = {time} s): {source}")]
    Thermal { step: usize, time: f64, source: ThermalError },
    #[error("step {step} (t = {time} s): {source}")]
    Material { step: usize, time: f64, source: MaterialError },
    #[error("singular midpoint system")]
    Singular,
    #[error("prescribed flow has {got} entries, network has {expected} arcs")]
    FlowDimension { expected: usize, got: usize },
}

/// Uniform time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    steps: usize,
}

impl TimeGrid {
    /// `(t_end − t0) / dt` must be an integer.
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Result<Self, IntegratorError> {
        if !(dt > 0.0) || !(t_end > t0) {
            return Err(IntegratorError::InvalidGrid(format!("t0 = {t0}, t_end = {t_end}, dt = {dt}")));
        }
        let ratio = (t_end - t0) / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(IntegratorError::InvalidGrid(format!(
                "horizon {} s is not a multiple of dt = {dt} s",
                t_end - t0
            )));
        }
        Ok(Self { t0, t_end, dt, steps: steps as usize })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Start time of step `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.dt
    }
}

/// Time-dependent boundary data of a simulation.
pub trait BoundaryData {
    /// Injected energy density u^e(t) [J/m³].
    fn injection(&self, t: f64) -> f64;
    /// Backflow energy density e^bf [J/m³].
    fn backflow_energy(&self) -> f64;
    /// Power per consumer, in the order of [`Network::consumers`] [W].
    fn consumer_power(&self, t: f64) -> Vec<f64>;
    /// u^p(t) [Pa].
    fn stagnation_pressure(&self, t: f64) -> f64;
    /// u^Δp(t) [Pa].
    fn pressure_increase(&self, t: f64) -> f64;

    fn closure(&self, t: f64) -> HydraulicClosure {
        HydraulicClosure {
            consumer_power: self.consumer_power(t),
            stagnation_pressure: self.stagnation_pressure(t),
            pressure_increase: self.pressure_increase(t),
            backflow_energy: self.backflow_energy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// One hydraulic solve per step at the state `e_k`.
    #[default]
    QuasiStatic,
    /// Re-solve hydraulics at the midpoint state up to `sweeps` times.
    FixedPoint { sweeps: usize },
}

/// Where flows come from.
pub enum FlowSource {
    Hydraulic,
    /// Per-arc flows as a function of the midpoint time.
    Prescribed(Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
}

impl std::fmt::Debug for FlowSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Hydraulic => f.write_str("Hydraulic"),
            Self::Prescribed(_) => f.write_str("Prescribed(..)"),
        }
    }
}

#[derive(Debug)]
pub struct SimulationOptions {
    pub coupling: Coupling,
    pub flow: FlowSource,
    /// Drive the transport with zero boundary inputs.
    pub zero_ports: bool,
    /// Add the wall heat-loss sink explicitly.
    pub cooling: bool,
    pub hydraulics: HydraulicOptions,
    pub bounds: Option<OperationalBounds>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            coupling: Coupling::QuasiStatic,
            flow: FlowSource::Hydraulic,
            zero_ports: false,
            cooling: false,
            hydraulics: HydraulicOptions::default(),
            bounds: None,
        }
    }
}

/// Everything recorded for one step `t_k → t_{k+1}`.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// End time `t_{k+1}`.
    pub t: f64,
    pub t_mid: f64,
    /// Cell energies at `t_{k+1}`.
    pub e: Vec<f64>,
    /// Mixed node energies at `t_{k+1}`.
    pub e_node: Vec<f64>,
    pub qhat: Vec<f64>,
    pub hydraulics: Option<HydraulicState>,
    /// Padded input ũ at the midpoint time.
    pub u_tilde: Vec<f64>,
    /// Port output ỹ at the midpoint state.
    pub y_tilde: Vec<f64>,
    /// Transport outputs `C e_{k+1}`.
    pub outputs: Vec<f64>,
    /// Injected energy density u^e used for the step [J/m³].
    pub injection: f64,
    /// Feed-in power at the depot [W].
    pub p_in: f64,
    /// Power withdrawn by consumers at the midpoint state [W].
    pub p_consumed: f64,
    /// Total consumer power demanded at the midpoint time [W].
    pub demand: f64,
    pub dissipation: DissipationStep,
    pub bounds: BoundReport,
    /// Pipes whose flow direction changed at this step.
    pub reversed: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub initial: ThermalState,
    pub volumes: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn final_state(&self) -> ThermalState {
        self.steps.last().map_or_else(
            || self.initial.clone(),
            |s| ThermalState { e: s.e.clone(), e_node: s.e_node.clone() },
        )
    }

    pub fn violation_count(&self) -> usize {
        self.steps.iter().map(|s| s.bounds.len()).sum()
    }

    /// One row per step: time, per-output energy and temperature, feed-in
    /// power, depot flow and number of bound violations.
    pub fn write_csv<W: Write>(&self, net: &Network, out: W) -> Result<(), csv::Error> {
        let materials = &net.constants.material;
        let mut w = csv::Writer::from_writer(out);
        let outputs = self.steps.first().map_or(0, |s| s.outputs.len());
        let mut header = vec!["t".to_string()];
        for k in 0..outputs {
            header.push(format!("e_out{k}"));
            header.push(format!("T_out{k}"));
        }
        header.extend(["p_in", "depot_flow", "violations"].map(String::from));
        w.write_record(&header)?;
        for s in &self.steps {
            let mut row = vec![s.t.to_string()];
            for &y in &s.outputs {
                row.push(y.to_string());
                row.push(materials.temperature_of_energy(y).map_or(f64::NAN, |t| t).to_string());
            }
            row.push(s.p_in.to_string());
            row.push(s.qhat[net.depot()].to_string());
            row.push(s.bounds.len().to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cells in an order where every off-diagonal dependency comes first, if
/// the dependency graph of `a` is acyclic.
fn topological_order(a: &CsrMatrix<f64>) -> Option<Vec<usize>> {
    let n = a.nrows();
    let mut indegree = vec![0usize; n];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, v) in a.triplet_iter() {
        if i != j && *v != 0.0 {
            indegree[i] += 1;
            dependents[j].push(i);
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut head = 0;
    while head < order.len() {
        let j = order[head];
        head += 1;
        for &i in &dependents[j] {
            indegree[i] -= 1;
            if indegree[i] == 0 {
                order.push(i);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Solves `(I − Δt/2 A) x = (I + Δt/2 A) e_k + Δt f`.
pub fn midpoint_solve(a: &CsrMatrix<f64>, e_k: &[f64], forcing: &[f64], dt: f64) -> Result<Vec<f64>, IntegratorError> {
    let n = e_k.len();
    let h = 0.5 * dt;
    let mut rhs: Vec<f64> = e_k.iter().zip(forcing).map(|(e, f)| e + dt * f).collect();
    for (i, j, v) in a.triplet_iter() {
        rhs[i] += h * v * e_k[j];
    }

    let x = if let Some(order) = topological_order(a) {
        let mut x = vec![0.0; n];
        for &i in &order {
            let row = a.row(i);
            let mut diag = 1.0;
            let mut acc = rhs[i];
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                if j == i {
                    diag -= h * v;
                } else {
                    acc += h * v * x[j];
                }
            }
            x[i] = acc / diag;
        }
        x
    } else {
        let mut m = DMatrix::identity(n, n);
        for (i, j, v) in a.triplet_iter() {
            m[(i, j)] -= h * v;
        }
        let sol = m.lu().solve(&DVector::from_vec(rhs.clone())).ok_or(IntegratorError::Singular)?;
        sol.as_slice().to_vec()
    };

    let mut resid: Vec<f64> = x.iter().zip(&rhs).map(|(x, r)| x - r).collect();
    for (i, j, v) in a.triplet_iter() {
        resid[i] -= h * v * x[j];
    }
    let rnorm = resid.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let scale = rhs.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    if rnorm > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        log::warn!("midpoint solve residual {:e} relative", rnorm / scale);
    }
    Ok(x)
}

/// Implicit midpoint step of the assembled system with input `u`.
pub fn step_midpoint(sys: &SystemMatrices, e_k: &[f64], u: [f64; 2], dt: f64) -> Result<Vec<f64>, IntegratorError> {
    let forcing: Vec<f64> = (0..e_k.len()).map(|i| sys.b[(i, 0)] * u[0] + sys.b[(i, 1)] * u[1]).collect();
    midpoint_solve(&sys.a, e_k, &forcing, dt)
}

/// Initial state flushed with the injection at `t0` and e^bf.
pub fn flushed_state(net: &Network, mesh: &Mesh, boundary: &dyn BoundaryData, t0: f64) -> ThermalState {
    ThermalState::flushed(net, mesh, boundary.injection(t0), boundary.backflow_energy())
}

/// Step-by-step driver of the coupled simulation.
pub struct Simulator<'a> {
    net: &'a Network,
    mesh: &'a Mesh,
    boundary: &'a dyn BoundaryData,
    grid: TimeGrid,
    opts: &'a SimulationOptions,
    volumes: Vec<f64>,
    initial: ThermalState,
    state: ThermalState,
    hydraulic: Option<HydraulicState>,
    prev_sign: Option<Vec<bool>>,
    steps: Vec<StepRecord>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        net: &'a Network,
        mesh: &'a Mesh,
        boundary: &'a dyn BoundaryData,
        grid: TimeGrid,
        initial: ThermalState,
        opts: &'a SimulationOptions,
    ) -> Self {
        Self {
            net,
            mesh,
            boundary,
            grid,
            opts,
            volumes: mesh.cell_volumes(net),
            state: initial.clone(),
            initial,
            hydraulic: None,
            prev_sign: None,
            steps: Vec::with_capacity(grid.steps()),
        }
    }

    /// Index of the next step.
    pub fn step_index(&self) -> usize {
        self.steps.len()
    }

    pub fn is_done(&self) -> bool {
        self.steps.len() >= self.grid.steps()
    }

    pub fn state(&self) -> &ThermalState {
        &self.state
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    fn flows_at(
        &self,
        k: usize,
        t_mid: f64,
        closure: &HydraulicClosure,
        thermal: &ThermalState,
        guess: Option<&HydraulicState>,
    ) -> Result<(Vec<f64>, Option<HydraulicState>), IntegratorError> {
        match &self.opts.flow {
            FlowSource::Hydraulic => {
                let sol = solve_hydraulics(self.net, self.mesh, thermal, closure, guess, &self.opts.hydraulics)
                    .map_err(|source| IntegratorError::Hydraulics { step: k, time: t_mid, source })?;
                Ok((sol.qhat.clone(), Some(sol)))
            }
            FlowSource::Prescribed(f) => {
                let q = f(t_mid);
                if q.len() != self.net.arc_count() {
                    return Err(IntegratorError::FlowDimension { expected: self.net.arc_count(), got: q.len() });
                }
                Ok((q, None))
            }
        }
    }

    /// Computes the next step with injection `injection` without committing it.
    pub fn compute_step(&self, injection: f64) -> Result<StepRecord, IntegratorError> {
        let (net, mesh, opts) = (self.net, self.mesh, self.opts);
        let k = self.steps.len();
        let t_mid = self.grid.midpoint(k);
        let closure = self.boundary.closure(t_mid);
        let e_bf = self.boundary.backflow_energy();
        let inputs = if opts.zero_ports { [0.0, 0.0] } else { [injection, e_bf] };
        let state = &self.state;
        let thermal_err = |source| IntegratorError::Thermal { step: k, time: t_mid, source };

        let (mut qhat, mut hyd) = self.flows_at(k, t_mid, &closure, state, self.hydraulic.as_ref())?;
        let sweeps = match opts.coupling {
            Coupling::QuasiStatic => 0,
            Coupling::FixedPoint { sweeps } => sweeps,
        };
        let mut sweep = 0;
        let (sys, e_next) = loop {
            let sys = assemble_system(net, mesh, &qhat).map_err(thermal_err)?;
            let mut forcing: Vec<f64> =
                (0..state.e.len()).map(|i| sys.b[(i, 0)] * inputs[0] + sys.b[(i, 1)] * inputs[1]).collect();
            if opts.cooling {
                let sink = cooling_rhs(net, mesh, &state.e).map_err(thermal_err)?;
                forcing.iter_mut().zip(sink).for_each(|(f, s)| *f += s);
            }
            let e_next = midpoint_solve(&sys.a, &state.e, &forcing, self.grid.dt)?;
            if sweep >= sweeps {
                break (sys, e_next);
            }
            sweep += 1;
            let mid: Vec<f64> = state.e.iter().zip(&e_next).map(|(a, b)| 0.5 * (a + b)).collect();
            let (mid_nodes, _) = node_mixing(net, mesh, &mid, inputs, &qhat, &sys.partition, &state.e_node);
            let mid_state = ThermalState { e: mid, e_node: mid_nodes };
            (qhat, hyd) = self.flows_at(k, t_mid, &closure, &mid_state, hyd.as_ref())?;
        };

        let e_mid: Vec<f64> = state.e.iter().zip(&e_next).map(|(a, b)| 0.5 * (a + b)).collect();
        let (mid_nodes, _) = node_mixing(net, mesh, &e_mid, inputs, &qhat, &sys.partition, &state.e_node);
        let (e_node, _) = node_mixing(net, mesh, &e_next, inputs, &qhat, &sys.partition, &state.e_node);

        // Port pairing at the midpoint state: ỹ = (Bᵀ Q ē, C ē).
        let mut y_tilde = vec![0.0; 2 + sys.output_count()];
        for (i, (e, v)) in e_mid.iter().zip(&self.volumes).enumerate() {
            y_tilde[0] += sys.b[(i, 0)] * v * e;
            y_tilde[1] += sys.b[(i, 1)] * v * e;
        }
        y_tilde[2..].copy_from_slice(&sys.outputs(&e_mid));
        let mut u_tilde = vec![0.0; y_tilde.len()];
        u_tilde[..2].copy_from_slice(&inputs);
        let supply_rate: f64 = y_tilde.iter().zip(&u_tilde).map(|(y, u)| y * u).sum();
        let dissipation = dissipation_step(&self.volumes, &state.e, &e_next, self.grid.dt, supply_rate);

        let consumer_flow: f64 = net.consumers().iter().map(|&c| qhat[c]).sum();
        let depot_tail = net.arc(net.depot()).tail;
        let p_in = (injection - mid_nodes[depot_tail]) * consumer_flow;
        let p_consumed = net.consumers().iter().map(|&c| qhat[c] * (mid_nodes[net.arc(c).tail] - e_bf)).sum();
        let demand = closure.consumer_power.iter().sum();

        let bounds = match (&opts.bounds, &hyd) {
            (Some(b), Some(h)) => check_operational_bounds(net, h, &e_node, b, t_mid)
                .map_err(|source| IntegratorError::Material { step: k, time: t_mid, source })?,
            _ => BoundReport::default(),
        };

        let reversed: Vec<usize> = match &self.prev_sign {
            Some(prev) => net
                .pipes()
                .iter()
                .zip(prev)
                .filter(|(&a, &p)| qhat[a] != 0.0 && (qhat[a] > 0.0) != p)
                .map(|(&a, _)| a)
                .collect(),
            None => Vec::new(),
        };

        Ok(StepRecord {
            t: self.grid.time(k + 1),
            t_mid,
            outputs: sys.outputs(&e_next),
            e: e_next,
            e_node,
            qhat,
            hydraulics: hyd,
            u_tilde,
            y_tilde,
            injection,
            p_in,
            p_consumed,
            demand,
            dissipation,
            bounds,
            reversed,
        })
    }

    /// Accepts a step computed by [`Self::compute_step`].
    pub fn commit(&mut self, record: StepRecord) {
        for &a in &record.reversed {
            log::info!("flow reversal on pipe {} at t = {} s", self.net.arc(a).id, record.t_mid);
        }
        self.prev_sign = Some(self.net.pipes().iter().map(|&a| record.qhat[a] >= 0.0).collect());
        self.state = ThermalState { e: record.e.clone(), e_node: record.e_node.clone() };
        if record.hydraulics.is_some() {
            self.hydraulic = record.hydraulics.clone();
        }
        self.steps.push(record);
    }

    pub fn finish(self) -> Trajectory {
        Trajectory { grid: self.grid, initial: self.initial, volumes: self.volumes, steps: self.steps }
    }
}

/// Runs the coupled simulation over `grid`.
pub fn simulate(
    net: &Network,
    mesh: &Mesh,
    boundary: &dyn BoundaryData,
    grid: &TimeGrid,
    initial: ThermalState,
    opts: &SimulationOptions,
) -> Result<Trajectory, IntegratorError> {
    let mut sim = Simulator::new(net, mesh, boundary, *grid, initial, opts);
    while !sim.is_done() {
        let t_mid = grid.midpoint(sim.step_index());
        let record = sim.compute_step(boundary.injection(t_mid))?;
        sim.commit(record);
    }
    Ok(sim.finish())
}
