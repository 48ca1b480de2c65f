//! Finite-volume upwind discretization of the energy transport in the
//! network.
//!
//! Every pipe is split into equidistant cells. Cells are numbered pipe by
//! pipe in the order of [`Network::pipes`], starting at the pipe's tail.

mod assemble;
mod mixing;

pub use assemble::{
    assemble_system, assemble_system_unchecked, output_cells, SystemMatrices, INPUT_BACKFLOW,
    INPUT_DEPOT,
};
pub use mixing::{mixing_weights, node_mixing, MixSource, NodeMix};

use std::io::Write;
use std::ops::Range;

use nalgebra_sparse::CsrMatrix;
use thiserror::Error;

use crate::materials::MaterialError;
use crate::network::{Network, NodePart};

#[derive(Debug, Error)]
pub enum ThermalError {
    #[error("target cell size must be positive, got {0}")]
    InvalidCellSize(f64),
    #[error("flow field is not volume preserving at node {node:?} (residual {residual:e} m³/s)")]
    NotVolumePreserving { node: String, residual: f64 },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Equidistant per-pipe cell layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pipe_arcs: Vec<usize>,
    offsets: Vec<usize>,
    counts: Vec<usize>,
    dx: Vec<f64>,
    arc_to_pipe: Vec<Option<usize>>,
    cell_pipe: Vec<usize>,
}

impl Mesh {
    /// One pipe gets `max(1, round(ℓ / target_dx))` cells.
    pub fn build(net: &Network, target_dx: f64) -> Result<Self, ThermalError> {
        if !(target_dx > 0.0) || !target_dx.is_finite() {
            return Err(ThermalError::InvalidCellSize(target_dx));
        }
        let mut mesh = Self {
            pipe_arcs: net.pipes().to_vec(),
            offsets: Vec::with_capacity(net.pipes().len()),
            counts: Vec::with_capacity(net.pipes().len()),
            dx: Vec::with_capacity(net.pipes().len()),
            arc_to_pipe: vec![None; net.arc_count()],
            cell_pipe: Vec::new(),
        };
        for (alpha, &a) in net.pipes().iter().enumerate() {
            let length = net.pipe_attributes(a).expect("pipe arcs carry attributes").length;
            let count = ((length / target_dx).round() as usize).max(1);
            mesh.offsets.push(mesh.cell_pipe.len());
            mesh.counts.push(count);
            mesh.dx.push(length / count as f64);
            mesh.arc_to_pipe[a] = Some(alpha);
            mesh.cell_pipe.extend(std::iter::repeat(alpha).take(count));
        }
        Ok(mesh)
    }

    /// Total number of cells κ.
    pub fn cell_count(&self) -> usize {
        self.cell_pipe.len()
    }

    pub fn pipe_count(&self) -> usize {
        self.pipe_arcs.len()
    }

    /// Arc index of the `alpha`-th pipe.
    pub fn pipe_arc(&self, alpha: usize) -> usize {
        self.pipe_arcs[alpha]
    }

    pub fn pipe_of_arc(&self, arc: usize) -> Option<usize> {
        self.arc_to_pipe[arc]
    }

    /// Pipe that owns cell `i`.
    pub fn pipe_of_cell(&self, i: usize) -> usize {
        self.cell_pipe[i]
    }

    pub fn cells_in_pipe(&self, alpha: usize) -> usize {
        self.counts[alpha]
    }

    pub fn dx(&self, alpha: usize) -> f64 {
        self.dx[alpha]
    }

    /// Global (zero-based) index of cell `beta` of pipe `alpha`.
    pub fn index(&self, alpha: usize, beta: usize) -> usize {
        debug_assert!(beta < self.counts[alpha]);
        self.offsets[alpha] + beta
    }

    pub fn cell_range(&self, alpha: usize) -> Range<usize> {
        self.offsets[alpha]..self.offsets[alpha] + self.counts[alpha]
    }

    /// Cell volumes ς Δx [m³].
    pub fn cell_volumes(&self, net: &Network) -> Vec<f64> {
        self.cell_pipe
            .iter()
            .map(|&alpha| {
                let p = net.pipe_attributes(self.pipe_arcs[alpha]).expect("pipe");
                p.cross_section() * self.dx[alpha]
            })
            .collect()
    }

    /// Cell-center coordinates along the owning pipe [m].
    pub fn cell_centers(&self, alpha: usize) -> Vec<f64> {
        (0..self.counts[alpha]).map(|b| (b as f64 + 0.5) * self.dx[alpha]).collect()
    }
}

/// Cell energy densities plus the mixed energy density at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub e: Vec<f64>,
    pub e_node: Vec<f64>,
}

impl ThermalState {
    /// Foreflow cells and nodes at `e_ff`, backflow at `e_bf`.
    pub fn flushed(net: &Network, mesh: &Mesh, e_ff: f64, e_bf: f64) -> Self {
        let by_part = |part| if part == NodePart::Foreflow { e_ff } else { e_bf };
        let e = (0..mesh.cell_count())
            .map(|i| {
                let arc = net.arc(mesh.pipe_arc(mesh.pipe_of_cell(i)));
                by_part(net.node(arc.tail).part)
            })
            .collect();
        let e_node = net.nodes().iter().map(|n| by_part(n.part)).collect();
        Self { e, e_node }
    }

    pub fn uniform(net: &Network, mesh: &Mesh, value: f64) -> Self {
        Self::flushed(net, mesh, value, value)
    }

    /// Stored energy Σ ς Δx e [J].
    pub fn stored_energy(&self, volumes: &[f64]) -> f64 {
        self.e.iter().zip(volumes).map(|(e, v)| e * v).sum()
    }
}

/// Wall heat-loss sink −(4 k_w / d)(T(e) − ϑ) per cell [W/m³].
///
/// Not covered by the port-Hamiltonian embedding.
pub fn cooling_rhs(net: &Network, mesh: &Mesh, e: &[f64]) -> Result<Vec<f64>, ThermalError> {
    if e.len() != mesh.cell_count() {
        return Err(ThermalError::DimensionMismatch { expected: mesh.cell_count(), got: e.len() });
    }
    let theta = net.constants.theta;
    let materials = &net.constants.material;
    e.iter()
        .enumerate()
        .map(|(i, &ei)| {
            let p = net.pipe_attributes(mesh.pipe_arc(mesh.pipe_of_cell(i))).expect("pipe");
            if p.heat_transmission == 0.0 {
                return Ok(0.0);
            }
            let t = materials.temperature_of_energy(ei)?;
            Ok(-4.0 * p.heat_transmission / p.diameter * (t - theta))
        })
        .collect()
}

/// Writes a sparse matrix as `row col value` lines (zero-based).
pub fn write_coo<W: Write>(m: &CsrMatrix<f64>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "% {} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (i, j, v) in m.triplet_iter() {
        writeln!(out, "{i} {j} {v:.17e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ArcDef, ArcKind, Network, NetworkConstants, Node, PipeAttributes};

    pub(crate) fn two_pipe_net(l1: f64, l2: f64, k_w: f64) -> Network {
        let pipe = |length| PipeAttributes {
            length,
            diameter: 0.1,
            slope: 0.0,
            roughness: 1e-4,
            heat_transmission: k_w,
        };
        let node = |id: &str, part| Node { id: id.into(), part };
        Network::new(
            NetworkConstants::default(),
            vec![
                node("F0", NodePart::Foreflow),
                node("F1", NodePart::Foreflow),
                node("B1", NodePart::Backflow),
                node("B0", NodePart::Backflow),
            ],
            vec![
                ArcDef::depot("d", "B0", "F0"),
                ArcDef::pipe("p1", "F0", "F1", ArcKind::PipeFf, pipe(l1)),
                ArcDef::consumer("c", "F1", "B1"),
                ArcDef::pipe("p2", "B1", "B0", ArcKind::PipeBf, pipe(l2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn mesh_sizes() {
        let net = two_pipe_net(100.0, 50.0, 0.0);
        let mesh = Mesh::build(&net, 10.0).unwrap();
        assert_eq!(mesh.cell_count(), 15);
        assert_eq!(mesh.cells_in_pipe(0), 10);
        assert_eq!(mesh.dx(0), 10.0);
        // second pipe, first cell: 1-based index 11
        assert_eq!(mesh.index(1, 0) + 1, 11);
        let mut seen: Vec<usize> = (0..2).flat_map(|a| mesh.cell_range(a)).collect();
        seen.dedup();
        assert_eq!(seen, (0..15).collect::<Vec<_>>());

        let short = two_pipe_net(3.0, 50.0, 0.0);
        let mesh = Mesh::build(&short, 10.0).unwrap();
        assert_eq!(mesh.cells_in_pipe(0), 1);
        assert_eq!(mesh.dx(0), 3.0);
        assert!(Mesh::build(&short, 0.0).is_err());
    }

    #[test]
    fn cooling_examples() {
        let net = two_pipe_net(100.0, 100.0, 1.0);
        let mesh = Mesh::build(&net, 50.0).unwrap();
        let m = &net.constants.material;
        let theta = net.constants.theta;
        let e_eq = m.energy_of_temperature(theta).unwrap();
        let sink = cooling_rhs(&net, &mesh, &vec![e_eq; 4]).unwrap();
        assert!(sink.iter().all(|s| s.abs() < 1e-9));

        let e50 = m.energy_of_temperature(theta + 50.0).unwrap();
        let sink = cooling_rhs(&net, &mesh, &vec![e50; 4]).unwrap();
        for s in sink {
            assert!((s + 2000.0).abs() < 1e-8, "{s}");
        }

        let adiabatic = two_pipe_net(100.0, 100.0, 0.0);
        let sink = cooling_rhs(&adiabatic, &mesh, &vec![e50; 4]).unwrap();
        assert!(sink.iter().all(|&s| s == 0.0));
    }
}
