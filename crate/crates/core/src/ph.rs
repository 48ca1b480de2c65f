//! Port-Hamiltonian form of the semi-discrete transport model.
//!
//! With the cell volumes `Q`, the transport matrix splits as
//! `A = (J − R) Q` with skew `J`, symmetric positive semidefinite `R` and
//! Hamiltonian `H(e) = eᵀ Q e`. Outputs of the transport model are appended
//! as extra ports with zero input.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::network::{ArcKind, Network};
use crate::thermal::{Mesh, SystemMatrices};

/// Relative tolerance of spectral checks.
pub const SPECTRAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PhError {
    #[error(
        "dissipation matrix is indefinite (min eigenvalue {min_eigenvalue:e}, norm {norm:e}); \
         flow is not volume preserving at node {node:?}"
    )]
    Indefinite { node: String, min_eigenvalue: f64, norm: f64 },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Parameter-dependent port-Hamiltonian system.
#[derive(Debug, Clone)]
pub struct PhSystem {
    /// Diagonal of `Q` (cell volumes) [m³].
    pub q: DVector<f64>,
    pub j: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// `[B, (C Q⁻¹)ᵀ]`, κ × (2 + c).
    pub b_tilde: DMatrix<f64>,
    /// Dense copy of the transport matrix.
    pub a: DMatrix<f64>,
}

impl PhSystem {
    pub fn cell_count(&self) -> usize {
        self.q.len()
    }

    pub fn port_count(&self) -> usize {
        self.b_tilde.ncols()
    }

    /// `H(e) = eᵀ Q e`.
    pub fn hamiltonian(&self, e: &[f64]) -> f64 {
        hamiltonian(self.q.as_slice(), e)
    }

    /// Padded input `ũ = (u^e, e^bf, 0, …, 0)`.
    pub fn padded_input(&self, u: [f64; 2]) -> DVector<f64> {
        let mut ut = DVector::zeros(self.port_count());
        ut[0] = u[0];
        ut[1] = u[1];
        ut
    }

    /// Port output `ỹ = B̃ᵀ Q e`.
    pub fn output(&self, e: &[f64]) -> DVector<f64> {
        let qe = DVector::from_iterator(e.len(), e.iter().zip(self.q.iter()).map(|(e, q)| e * q));
        self.b_tilde.transpose() * qe
    }

    /// `L = Q A + Aᵀ Q`.
    pub fn lyapunov_matrix(&self) -> DMatrix<f64> {
        let qa = DMatrix::from_fn(self.a.nrows(), self.a.ncols(), |i, j| self.q[i] * self.a[(i, j)]);
        &qa + qa.transpose()
    }
}

pub fn hamiltonian(q: &[f64], e: &[f64]) -> f64 {
    e.iter().zip(q).map(|(e, q)| e * q * e).sum()
}

/// Smallest margin `−L_ii − Σ_{j≠i} |L_ij|` over rows, and the row where it
/// is attained.
fn dominance_margin(l: &DMatrix<f64>) -> (f64, usize) {
    let mut worst = (f64::INFINITY, 0);
    for i in 0..l.nrows() {
        let off: f64 = (0..l.ncols()).filter(|&j| j != i).map(|j| l[(i, j)].abs()).sum();
        let margin = -l[(i, i)] - off;
        if margin < worst.0 {
            worst = (margin, i);
        }
    }
    worst
}

fn dominance_tol(l: &DMatrix<f64>) -> f64 {
    1e-12 * l.amax()
}

/// Node whose mixing produced row `cell` of the transport matrix.
fn node_of_cell(net: &Network, mesh: &Mesh, sys: &SystemMatrices, cell: usize) -> String {
    let alpha = mesh.pipe_of_cell(cell);
    let arc = net.arc(mesh.pipe_arc(alpha));
    let range = mesh.cell_range(alpha);
    let forward = sys.w[alpha] >= 0.0;
    let inlet = if forward { range.start } else { range.end - 1 };
    let node = match (cell == inlet, forward) {
        (true, true) | (false, false) => arc.tail,
        (true, false) | (false, true) => arc.head,
    };
    net.node(node).id.clone()
}

/// Builds `Q`, `J`, `R`, `B̃` from assembled transport matrices.
///
/// Positive semidefiniteness of `R` is gated by diagonal dominance of `L`
/// with an eigenvalue fallback.
pub fn build_ph(sys: &SystemMatrices, mesh: &Mesh, net: &Network) -> Result<PhSystem, PhError> {
    let kappa = mesh.cell_count();
    if sys.cell_count() != kappa {
        return Err(PhError::DimensionMismatch { expected: kappa, got: sys.cell_count() });
    }
    let q = DVector::from_vec(mesh.cell_volumes(net));
    let a = DMatrix::from(&sys.a);
    let aq = DMatrix::from_fn(kappa, kappa, |i, j| a[(i, j)] / q[j]);
    let aqt = aq.transpose();
    let j = (&aq - &aqt) * 0.5;
    let r = (&aq + &aqt) * -0.5;

    let c = DMatrix::from(&sys.c);
    let ncols = 2 + c.nrows();
    let mut b_tilde = DMatrix::zeros(kappa, ncols);
    b_tilde.columns_mut(0, 2).copy_from(&sys.b);
    for (k, row) in c.row_iter().enumerate() {
        for i in 0..kappa {
            b_tilde[(i, 2 + k)] = row[i] / q[i];
        }
    }
    let ph = PhSystem { q, j, r, b_tilde, a };

    let l = ph.lyapunov_matrix();
    let (margin, row) = dominance_margin(&l);
    if margin < -dominance_tol(&l) {
        let eig = ph.r.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        let norm = eig.eigenvalues.amax();
        if min < -SPECTRAL_TOL * norm {
            return Err(PhError::Indefinite {
                node: node_of_cell(net, mesh, sys, row),
                min_eigenvalue: min,
                norm,
            });
        }
    }
    Ok(ph)
}

/// Outcome of the two negative-semidefiniteness tests of `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub dominance_ok: bool,
    /// Smallest row margin of weak diagonal dominance.
    pub dominance_margin: f64,
    pub eigen_ok: bool,
    pub max_eigenvalue: f64,
    pub norm: f64,
}

impl LyapunovReport {
    pub fn agree(&self) -> bool {
        self.dominance_ok == self.eigen_ok
    }

    pub fn passed(&self) -> bool {
        self.dominance_ok && self.eigen_ok
    }
}

/// Checks `Q A + Aᵀ Q ⪯ 0` by diagonal dominance and by its spectrum.
pub fn check_lyapunov(ph: &PhSystem) -> LyapunovReport {
    let l = ph.lyapunov_matrix();
    let (margin, _) = dominance_margin(&l);
    let eig = l.clone().symmetric_eigen();
    let max = if eig.eigenvalues.is_empty() { 0.0 } else { eig.eigenvalues.max() };
    let norm = eig.eigenvalues.amax();
    LyapunovReport {
        dominance_ok: margin >= -dominance_tol(&l),
        dominance_margin: margin,
        eigen_ok: max <= SPECTRAL_TOL * norm,
        max_eigenvalue: max,
        norm,
    }
}

/// Structural residuals of a port-Hamiltonian system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureReport {
    /// `max |J + Jᵀ|`, relative to `max |J|`.
    pub skew: f64,
    /// `max |R − Rᵀ|`, relative to `max |R|`.
    pub symmetry: f64,
    /// Smallest eigenvalue of `R` relative to its spectral norm.
    pub min_eigenvalue: f64,
    /// `max |(J − R) Q − A|`, relative to `max |A|`.
    pub reconstruction: f64,
    /// `max |L_ii + 2 |q̂_α||`, relative to `max |L|`.
    pub lyapunov_diagonal: f64,
    /// `max |(B̃ᵀ Q)_{2+k,·} − C_k|`.
    pub output_containment: f64,
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        x
    } else {
        x / scale
    }
}

pub fn structure_report(ph: &PhSystem, sys: &SystemMatrices, mesh: &Mesh) -> StructureReport {
    let kappa = ph.cell_count();
    let qmat = DMatrix::from_diagonal(&ph.q);
    let recon = (&ph.j - &ph.r) * &qmat - &ph.a;
    let l = ph.lyapunov_matrix();
    let mut diag_err = 0.0_f64;
    for i in 0..kappa {
        let alpha = mesh.pipe_of_cell(i);
        let qa = sys.qhat[mesh.pipe_arc(alpha)].abs();
        diag_err = diag_err.max((l[(i, i)] + 2.0 * qa).abs());
    }
    let btq = ph.b_tilde.transpose() * &qmat;
    let c = DMatrix::from(&sys.c);
    let containment = (0..c.nrows())
        .flat_map(|k| (0..kappa).map(move |i| (k, i)))
        .map(|(k, i)| (btq[(2 + k, i)] - c[(k, i)]).abs())
        .fold(0.0_f64, f64::max);
    let eig = ph.r.clone().symmetric_eigen();
    let norm = eig.eigenvalues.amax();
    let min = if eig.eigenvalues.is_empty() { 0.0 } else { eig.eigenvalues.min() };
    StructureReport {
        skew: rel((&ph.j + ph.j.transpose()).amax(), ph.j.amax()),
        symmetry: rel((&ph.r - ph.r.transpose()).amax(), ph.r.amax()),
        min_eigenvalue: rel(min, norm),
        reconstruction: rel(recon.amax(), ph.a.amax()),
        lyapunov_diagonal: rel(diag_err, l.amax()),
        output_containment: containment,
    }
}

/// Random volume-preserving flow field.
///
/// Consumer flows are positive, the depot carries their sum and pipe flows
/// are a least-squares particular solution plus a random circulation, so
/// pipe directions are arbitrary.
pub fn random_volume_preserving_flow<R: Rng>(net: &Network, rng: &mut R, scale: f64) -> Vec<f64> {
    let mut q = vec![0.0; net.arc_count()];
    let mut total = 0.0;
    for &c in net.consumers() {
        q[c] = scale * rng.gen_range(0.1..1.0);
        total += q[c];
    }
    q[net.depot()] = total;

    let pipes = net.pipes();
    let nn = net.node_count();
    // Zero rows pad the system so that the SVD exposes the full kernel.
    let mut incidence = DMatrix::zeros(nn.max(pipes.len()), pipes.len());
    for (k, &a) in pipes.iter().enumerate() {
        incidence[(net.arc(a).head, k)] = 1.0;
        incidence[(net.arc(a).tail, k)] = -1.0;
    }
    // Balance of the non-pipe arcs that the pipes must compensate.
    let mut rhs = DVector::zeros(incidence.nrows());
    for (a, arc) in net.arcs().iter().enumerate() {
        if arc.kind == ArcKind::Consumer || arc.kind == ArcKind::Depot {
            rhs[arc.head] -= q[a];
            rhs[arc.tail] += q[a];
        }
    }
    let svd = incidence.clone().svd(true, true);
    let particular = svd.solve(&rhs, 1e-12).expect("svd with u and v");
    let v_t = svd.v_t.expect("computed");
    let smax = svd.singular_values.max();
    let mut flow = particular;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= 1e-10 * smax {
            let coeff = scale * rng.gen_range(-1.0..1.0);
            flow += v_t.row(k).transpose() * coeff;
        }
    }
    for (k, &a) in pipes.iter().enumerate() {
        q[a] = flow[k];
    }
    q
}

/// Energy bookkeeping of one implicit midpoint step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationStep {
    /// `H(e_{k+1}) − H(e_k)`.
    pub delta_h: f64,
    /// `2 Δt ỹ(ē)ᵀ ũ`.
    pub supply: f64,
    /// `supply − delta_h`; equals `2 Δt (Qē)ᵀ R (Qē) ≥ 0`.
    pub margin: f64,
    /// `margin / (|delta_h| + |supply|)`.
    pub relative_margin: f64,
}

/// Evaluates the discrete dissipation inequality of one step.
///
/// `supply_rate` is `ỹᵀũ` at the midpoint state.
pub fn dissipation_step(q: &[f64], e_k: &[f64], e_k1: &[f64], dt: f64, supply_rate: f64) -> DissipationStep {
    let delta_h: f64 = e_k
        .iter()
        .zip(e_k1)
        .zip(q)
        .map(|((a, b), q)| (b - a) * q * (b + a))
        .sum();
    let supply = 2.0 * dt * supply_rate;
    let margin = supply - delta_h;
    let scale = delta_h.abs() + supply.abs();
    DissipationStep {
        delta_h,
        supply,
        margin,
        relative_margin: if scale > 0.0 { margin / scale } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationReport {
    pub steps: usize,
    pub worst_relative_margin: f64,
    pub worst_step: usize,
    /// Every step has `H_{k+1} ≤ H_k` (within the tolerance).
    pub non_increasing: bool,
}

impl DissipationReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.worst_relative_margin >= -tol
    }
}

/// Worst margin over a trajectory's steps.
pub fn dissipation_audit<'a>(steps: impl IntoIterator<Item = &'a DissipationStep>) -> DissipationReport {
    let mut report = DissipationReport {
        steps: 0,
        worst_relative_margin: f64::INFINITY,
        worst_step: 0,
        non_increasing: true,
    };
    for (k, s) in steps.into_iter().enumerate() {
        report.steps += 1;
        if s.relative_margin < report.worst_relative_margin {
            report.worst_relative_margin = s.relative_margin;
            report.worst_step = k;
        }
        if s.delta_h > 1e-12 * s.supply.abs().max(s.delta_h.abs()) && s.supply <= 0.0 {
            report.non_increasing = false;
        }
    }
    if report.steps == 0 {
        report.worst_relative_margin = 0.0;
    }
    report
}
