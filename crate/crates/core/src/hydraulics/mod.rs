//! Stationary incompressible network hydraulics.
//!
//! Unknowns are the volumetric flow on every arc and the pressure at every
//! node. Pipes carry a momentum balance, nodes a volume balance, consumers
//! a power closure and the depot pins the pressure level.

mod bounds;

pub use bounds::{check_operational_bounds, BoundReport, Constraint, Violation};

use std::collections::VecDeque;
use std::io::Write;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::materials::{friction_factor, MaterialError};
use crate::network::{ArcKind, Network};
use crate::thermal::{Mesh, ThermalState};

/// Regularization width of `|v| v` inside Newton [m/s].
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Below this Reynolds number friction is evaluated as at rest.
const RESTING_REYNOLDS: f64 = 1.0;

#[derive(Debug, Error)]
pub enum HydraulicError {
    #[error(
        "consumer {arc:?}: power demanded but no energy-density drop available \
         (P = {power} W, Δe = {delta_e:e} J/m³)"
    )]
    InfeasibleClosure { arc: String, power: f64, delta_e: f64 },
    #[error("hydraulic solve did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64, history: Vec<ResidualRecord> },
    #[error("singular Jacobian in Newton iteration {0}")]
    SingularJacobian(usize),
    #[error("invalid closure: {0}")]
    InvalidClosure(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("cannot write residual log: {0}")]
    Log(#[from] csv::Error),
}

/// Boundary data of one hydraulic solve.
#[derive(Debug, Clone, PartialEq)]
pub struct HydraulicClosure {
    /// Power P_a per consumer, in the order of [`Network::consumers`] [W].
    pub consumer_power: Vec<f64>,
    /// Stagnation pressure u^p at the depot tail [Pa].
    pub stagnation_pressure: f64,
    /// Pressure increase u^Δp across the depot [Pa].
    pub pressure_increase: f64,
    /// Energy density e^bf leaving every consumer [J/m³].
    pub backflow_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydraulicOptions {
    pub epsilon: f64,
    /// Regularization used for a first solve when no warm start is given.
    pub continuation_epsilon: f64,
    /// Convergence threshold on the scaled max-norm residual.
    pub tolerance: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    /// Write the residual history as CSV here.
    pub residual_log: Option<PathBuf>,
}

impl Default for HydraulicOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            continuation_epsilon: 0.1,
            tolerance: 1e-8,
            max_newton: 60,
            max_outer: 50,
            residual_log: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRecord {
    pub outer: usize,
    pub newton: usize,
    pub epsilon: f64,
    pub residual: f64,
}

/// Solution of the hydraulic system.
#[derive(Debug, Clone, PartialEq)]
pub struct HydraulicState {
    /// Volumetric flow q̂ per arc [m³/s].
    pub qhat: Vec<f64>,
    /// Pressure per node [Pa].
    pub p_node: Vec<f64>,
    /// Friction factor per arc (zero off pipes).
    pub lambda: Vec<f64>,
    /// Upwind density per arc (zero off pipes) [kg/m³].
    pub density: Vec<f64>,
    /// Energy-density drop Δe per arc (zero off consumers) [J/m³].
    pub delta_e: Vec<f64>,
    /// Scaled max-norm residual of the unregularized equations.
    pub residual: f64,
    pub history: Vec<ResidualRecord>,
    /// Pipes evaluated outside the turbulent regime.
    pub laminar_pipes: Vec<usize>,
}

impl HydraulicState {
    /// Velocity q̂/ς on pipe `a`.
    pub fn velocity(&self, net: &Network, a: usize) -> Option<f64> {
        net.pipe_attributes(a).map(|p| self.qhat[a] / p.cross_section())
    }

    /// Mass flow ρ q̂ on pipe `a` [kg/s].
    pub fn mass_flow(&self, net: &Network, a: usize) -> Option<f64> {
        net.pipe_attributes(a).map(|_| self.density[a] * self.qhat[a])
    }

    pub fn write_history_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.history {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Residual map of the hydraulic equations with frozen friction factors,
/// densities and consumer flows.
///
/// Works on scaled unknowns `x = (q̂ / q_scale, p / p_scale)`. Rows are pipe
/// momentum balances, nodal volume balances (depot tail omitted), consumer
/// closures and the two depot conditions; the last but one row pins the
/// pressure gauge.
#[derive(Debug, Clone)]
pub struct HydraulicSystem<'a> {
    net: &'a Network,
    /// ℓ λ ρ / (2 d) per pipe, in the order of `net.pipes()`.
    friction: Vec<f64>,
    /// ℓ ρ g ∂x h per pipe.
    gravity: Vec<f64>,
    sigma: Vec<f64>,
    consumer_flow: Vec<f64>,
    balance_nodes: Vec<usize>,
    u_p: f64,
    u_dp: f64,
    q_scale: f64,
    p_scale: f64,
}

impl<'a> HydraulicSystem<'a> {
    /// `lambda` and `density` are per arc, `consumer_flow` per consumer.
    pub fn new(
        net: &'a Network,
        lambda: &[f64],
        density: &[f64],
        consumer_flow: &[f64],
        closure: &HydraulicClosure,
    ) -> Self {
        let g = net.constants.g;
        let mut friction = Vec::with_capacity(net.pipes().len());
        let mut gravity = Vec::with_capacity(net.pipes().len());
        let mut sigma = Vec::with_capacity(net.pipes().len());
        for &a in net.pipes() {
            let p = net.pipe_attributes(a).expect("pipe");
            friction.push(p.length * lambda[a] * density[a] / (2.0 * p.diameter));
            gravity.push(p.length * density[a] * g * p.slope);
            sigma.push(p.cross_section());
        }
        let depot_tail = net.arc(net.depot()).tail;
        let total: f64 = consumer_flow.iter().sum();
        Self {
            net,
            friction,
            gravity,
            sigma,
            consumer_flow: consumer_flow.to_vec(),
            balance_nodes: (0..net.node_count()).filter(|&n| n != depot_tail).collect(),
            u_p: closure.stagnation_pressure,
            u_dp: closure.pressure_increase,
            q_scale: total.max(1e-6),
            p_scale: closure.stagnation_pressure.abs().max(1e5),
        }
    }

    /// Rebuilds the frozen system at a solved state.
    pub fn from_state(net: &'a Network, state: &HydraulicState, closure: &HydraulicClosure) -> Self {
        let flows: Vec<f64> = net.consumers().iter().map(|&a| state.qhat[a]).collect();
        Self::new(net, &state.lambda, &state.density, &flows, closure)
    }

    pub fn dim(&self) -> usize {
        self.net.arc_count() + self.net.node_count()
    }

    /// Index of the row `p_tail − u^p = 0`.
    pub fn gauge_row(&self) -> usize {
        self.dim() - 2
    }

    pub fn scale(&self, qhat: &[f64], p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            qhat.iter().map(|q| q / self.q_scale).chain(p.iter().map(|v| v / self.p_scale)),
        )
    }

    pub fn unscale(&self, x: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
        let na = self.net.arc_count();
        (
            x.rows(0, na).iter().map(|v| v * self.q_scale).collect(),
            x.rows(na, self.net.node_count()).iter().map(|v| v * self.p_scale).collect(),
        )
    }

    /// Friction pressure loss on pipe `alpha` at flow `q` and its derivative.
    fn friction_loss(&self, alpha: usize, q: f64, eps: f64) -> (f64, f64) {
        let v = q / self.sigma[alpha];
        let k = self.friction[alpha];
        if eps == 0.0 {
            return (k * v * v.abs(), 2.0 * k * v.abs() / self.sigma[alpha]);
        }
        let root = (v * v + eps * eps).sqrt();
        (k * v * root, k * (2.0 * v * v + eps * eps) / root / self.sigma[alpha])
    }

    /// Scaled residual; `eps = 0` evaluates the unregularized equations.
    pub fn residual(&self, x: &DVector<f64>, eps: f64) -> DVector<f64> {
        let net = self.net;
        let (q, p) = self.unscale(x);
        let mut r = Vec::with_capacity(self.dim());
        for (alpha, &a) in net.pipes().iter().enumerate() {
            let arc = net.arc(a);
            let (loss, _) = self.friction_loss(alpha, q[a], eps);
            r.push((p[arc.head] - p[arc.tail] + loss + self.gravity[alpha]) / self.p_scale);
        }
        let balance = net.volume_residuals(&q);
        r.extend(self.balance_nodes.iter().map(|&n| balance[n] / self.q_scale));
        for (c, &a) in net.consumers().iter().enumerate() {
            r.push((q[a] - self.consumer_flow[c]) / self.q_scale);
        }
        let depot = net.arc(net.depot());
        r.push((p[depot.tail] - self.u_p) / self.p_scale);
        r.push((p[depot.head] - p[depot.tail] - self.u_dp) / self.p_scale);
        DVector::from_vec(r)
    }

    /// Jacobian of [`Self::residual`] with respect to the scaled unknowns.
    pub fn jacobian(&self, x: &DVector<f64>, eps: f64) -> DMatrix<f64> {
        let net = self.net;
        let na = net.arc_count();
        let (q, _) = self.unscale(x);
        let mut j = DMatrix::zeros(self.dim(), self.dim());
        let mut row = 0;
        for (alpha, &a) in net.pipes().iter().enumerate() {
            let arc = net.arc(a);
            let (_, dloss) = self.friction_loss(alpha, q[a], eps);
            j[(row, a)] = dloss * self.q_scale / self.p_scale;
            j[(row, na + arc.head)] += 1.0;
            j[(row, na + arc.tail)] -= 1.0;
            row += 1;
        }
        for &n in &self.balance_nodes {
            for &a in net.delta_in(n) {
                j[(row, a)] += 1.0;
            }
            for &a in net.delta_out(n) {
                j[(row, a)] -= 1.0;
            }
            row += 1;
        }
        for &a in net.consumers() {
            j[(row, a)] = 1.0;
            row += 1;
        }
        let depot = net.arc(net.depot());
        j[(row, na + depot.tail)] = 1.0;
        j[(row + 1, na + depot.head)] = 1.0;
        j[(row + 1, na + depot.tail)] = -1.0;
        j
    }
}

fn validate_closure(net: &Network, closure: &HydraulicClosure) -> Result<(), HydraulicError> {
    if closure.consumer_power.len() != net.consumers().len() {
        return Err(HydraulicError::InvalidClosure(format!(
            "{} consumer powers for {} consumers",
            closure.consumer_power.len(),
            net.consumers().len()
        )));
    }
    if let Some(p) = closure.consumer_power.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(HydraulicError::InvalidClosure(format!("consumer power {p} must be non-negative")));
    }
    if !closure.stagnation_pressure.is_finite() || !closure.pressure_increase.is_finite() {
        return Err(HydraulicError::InvalidClosure("depot pressures must be finite".into()));
    }
    Ok(())
}

/// Zero-flow pressures: hydrostatic along pipes, pinned at the depot.
fn hydrostatic_pressures(net: &Network, density: &[f64], closure: &HydraulicClosure) -> Vec<f64> {
    let g = net.constants.g;
    let depot = net.arc(net.depot());
    let mut p = vec![f64::NAN; net.node_count()];
    p[depot.tail] = closure.stagnation_pressure;
    let mut queue = VecDeque::from([depot.tail]);
    while let Some(n) = queue.pop_front() {
        for &a in net.delta_out(n).iter().chain(net.delta_in(n)) {
            let arc = net.arc(a);
            let forward = arc.tail == n;
            let other = if forward { arc.head } else { arc.tail };
            if !p[other].is_nan() {
                continue;
            }
            let drop = match arc.kind {
                ArcKind::PipeFf | ArcKind::PipeBf => {
                    let pipe = arc.pipe.as_ref().expect("pipe");
                    pipe.length * density[a] * g * pipe.slope
                }
                ArcKind::Depot => -closure.pressure_increase,
                ArcKind::Consumer => 0.0,
            };
            p[other] = if forward { p[n] - drop } else { p[n] + drop };
            queue.push_back(other);
        }
    }
    p
}

struct PipeCoefficients {
    lambda: Vec<f64>,
    density: Vec<f64>,
    laminar: Vec<usize>,
}

/// Friction factor and upwind density per pipe at the current flows.
fn pipe_coefficients(
    net: &Network,
    mesh: &Mesh,
    thermal: &ThermalState,
    qhat: &[f64],
) -> Result<PipeCoefficients, HydraulicError> {
    let materials = &net.constants.material;
    let mut out = PipeCoefficients {
        lambda: vec![0.0; net.arc_count()],
        density: vec![0.0; net.arc_count()],
        laminar: Vec::new(),
    };
    for (alpha, &a) in net.pipes().iter().enumerate() {
        let cells = mesh.cell_range(alpha);
        let e_up = if qhat[a] >= 0.0 { thermal.e[cells.start] } else { thermal.e[cells.end - 1] };
        let pipe = net.pipe_attributes(a).expect("pipe");
        let mut v = qhat[a] / pipe.cross_section();
        if materials.reynolds(v, pipe.diameter, e_up)? < RESTING_REYNOLDS {
            v = 0.0;
        }
        let model = net.friction_model(a).expect("pipe");
        let ff = friction_factor(materials, v, e_up, &model)?;
        out.lambda[a] = ff.lambda;
        out.density[a] = materials.density_of_energy(e_up)?;
        if ff.laminar_violation && v != 0.0 {
            out.laminar.push(a);
        }
    }
    Ok(out)
}

fn newton(
    sys: &HydraulicSystem,
    x: &mut DVector<f64>,
    eps: f64,
    opts: &HydraulicOptions,
    outer: usize,
    history: &mut Vec<ResidualRecord>,
) -> Result<(), HydraulicError> {
    let mut f = sys.residual(x, eps);
    for it in 0..opts.max_newton {
        let norm = f.amax();
        history.push(ResidualRecord { outer, newton: it, epsilon: eps, residual: norm });
        if norm < 1e-14 {
            return Ok(());
        }
        let dx = sys.jacobian(x, eps).lu().solve(&f).ok_or(HydraulicError::SingularJacobian(it))?;
        let mut step = 1.0;
        loop {
            let trial = &*x - &dx * step;
            let ft = sys.residual(&trial, eps);
            if ft.amax() < (1.0 - 1e-4 * step) * norm {
                *x = trial;
                f = ft;
                break;
            }
            step *= 0.5;
            if step < 1e-10 {
                // No further decrease possible at this precision.
                return if norm < opts.tolerance {
                    Ok(())
                } else {
                    Err(HydraulicError::NotConverged {
                        iterations: it,
                        residual: norm,
                        history: history.clone(),
                    })
                };
            }
        }
    }
    let norm = f.amax();
    if norm < opts.tolerance {
        Ok(())
    } else {
        Err(HydraulicError::NotConverged { iterations: opts.max_newton, residual: norm, history: history.clone() })
    }
}

/// Solves the hydraulic system for the thermal state `thermal`.
///
/// The consumer drop Δe is taken as the mixed energy density at the
/// consumer's tail node minus e^bf. Friction factors and densities are
/// lagged in an outer fixed-point loop.
pub fn solve_hydraulics(
    net: &Network,
    mesh: &Mesh,
    thermal: &ThermalState,
    closure: &HydraulicClosure,
    guess: Option<&HydraulicState>,
    opts: &HydraulicOptions,
) -> Result<HydraulicState, HydraulicError> {
    validate_closure(net, closure)?;
    let mut delta_e = vec![0.0; net.arc_count()];
    let mut consumer_flow = Vec::with_capacity(net.consumers().len());
    for (c, &a) in net.consumers().iter().enumerate() {
        let de = thermal.e_node[net.arc(a).tail] - closure.backflow_energy;
        delta_e[a] = de;
        let power = closure.consumer_power[c];
        if power == 0.0 {
            consumer_flow.push(0.0);
        } else if de <= 0.0 {
            return Err(HydraulicError::InfeasibleClosure { arc: net.arc(a).id.clone(), power, delta_e: de });
        } else {
            consumer_flow.push(power / de);
        }
    }

    let (mut qhat, mut p) = match guess {
        Some(s) => (s.qhat.clone(), s.p_node.clone()),
        None => {
            let q = vec![0.0; net.arc_count()];
            let coeffs = pipe_coefficients(net, mesh, thermal, &q)?;
            let p = hydrostatic_pressures(net, &coeffs.density, closure);
            (q, p)
        }
    };

    let mut history = Vec::new();
    for outer in 0..opts.max_outer {
        let coeffs = pipe_coefficients(net, mesh, thermal, &qhat)?;
        let sys = HydraulicSystem::new(net, &coeffs.lambda, &coeffs.density, &consumer_flow, closure);
        let mut x = sys.scale(&qhat, &p);
        let exact = sys.residual(&x, 0.0).amax();
        history.push(ResidualRecord { outer, newton: 0, epsilon: 0.0, residual: exact });
        if exact < opts.tolerance {
            if !coeffs.laminar.is_empty() {
                log::debug!("{} pipe(s) outside the turbulent regime", coeffs.laminar.len());
            }
            let state = HydraulicState {
                qhat,
                p_node: p,
                lambda: coeffs.lambda,
                density: coeffs.density,
                delta_e,
                residual: exact,
                history,
                laminar_pipes: coeffs.laminar,
            };
            if let Some(path) = &opts.residual_log {
                let file = std::fs::File::create(path).map_err(csv::Error::from)?;
                state.write_history_csv(file)?;
            }
            return Ok(state);
        }
        if outer == 0 && guess.is_none() && opts.continuation_epsilon > opts.epsilon {
            newton(&sys, &mut x, opts.continuation_epsilon, opts, outer, &mut history)?;
        }
        newton(&sys, &mut x, opts.epsilon, opts, outer, &mut history)?;
        (qhat, p) = sys.unscale(&x);
    }
    let residual = history.last().map_or(f64::INFINITY, |r| r.residual);
    Err(HydraulicError::NotConverged { iterations: opts.max_outer, residual, history })
}
