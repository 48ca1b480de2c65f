//! Assembly of the semi-discrete transport system `ė = A(w) e + B(w) u`,
//! `y = C e`.

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::network::{FlowPartition, Network};

use super::mixing::{mixing_weights, MixSource, NodeMix};
use super::{Mesh, ThermalError};

/// Column of `B` fed by the depot injection u^e.
pub const INPUT_DEPOT: usize = 0;
/// Column of `B` fed by the backflow energy density e^bf.
pub const INPUT_BACKFLOW: usize = 1;

/// Relative tolerance of the nodal volume balance.
const VOLUME_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SystemMatrices {
    /// κ × κ transport matrix.
    pub a: CsrMatrix<f64>,
    /// κ × 2 input routing.
    pub b: DMatrix<f64>,
    /// c × κ output selection.
    pub c: CsrMatrix<f64>,
    /// Discretized velocity per pipe [m/s].
    pub w: Vec<f64>,
    /// Volumetric flow per arc [m³/s].
    pub qhat: Vec<f64>,
    pub partition: FlowPartition,
    pub mix: Vec<NodeMix>,
}

impl SystemMatrices {
    pub fn cell_count(&self) -> usize {
        self.a.nrows()
    }

    pub fn output_count(&self) -> usize {
        self.c.nrows()
    }

    /// `A e + B u`.
    pub fn apply(&self, e: &[f64], u: [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; e.len()];
        for (i, j, v) in self.a.triplet_iter() {
            out[i] += v * e[j];
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.b[(i, 0)] * u[0] + self.b[(i, 1)] * u[1];
        }
        out
    }

    /// Outputs `C e`.
    pub fn outputs(&self, e: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.c.nrows()];
        for (i, j, v) in self.c.triplet_iter() {
            y[i] += v * e[j];
        }
        y
    }
}

/// Last cells of foreflow pipes ending in a consumer's tail node, in
/// consumer order without duplicates.
pub fn output_cells(net: &Network, mesh: &Mesh) -> Vec<usize> {
    let mut cells = Vec::new();
    for &c in net.consumers() {
        let m = net.arc(c).tail;
        for &a in net.delta_in(m) {
            if let Some(alpha) = mesh.pipe_of_arc(a) {
                let last = mesh.cell_range(alpha).end - 1;
                if !cells.contains(&last) {
                    cells.push(last);
                }
            }
        }
    }
    cells
}

fn check_volume(net: &Network, qhat: &[f64]) -> Result<(), ThermalError> {
    let scale = qhat.iter().fold(0.0_f64, |m, q| m.max(q.abs()));
    if scale == 0.0 {
        return Ok(());
    }
    for (n, r) in net.volume_residuals(qhat).into_iter().enumerate() {
        if r.abs() > VOLUME_TOL * scale {
            return Err(ThermalError::NotVolumePreserving { node: net.node(n).id.clone(), residual: r });
        }
    }
    Ok(())
}

/// Assembles the system at the flow field `qhat` (per arc).
///
/// Rejects flows that violate nodal volume conservation.
pub fn assemble_system(net: &Network, mesh: &Mesh, qhat: &[f64]) -> Result<SystemMatrices, ThermalError> {
    if qhat.len() != net.arc_count() {
        return Err(ThermalError::DimensionMismatch { expected: net.arc_count(), got: qhat.len() });
    }
    check_volume(net, qhat)?;
    Ok(assemble_system_unchecked(net, mesh, qhat))
}

/// Assembly without the volume-conservation gate.
pub fn assemble_system_unchecked(net: &Network, mesh: &Mesh, qhat: &[f64]) -> SystemMatrices {
    let kappa = mesh.cell_count();
    let partition = net.flow_partition(qhat);
    let mix = mixing_weights(net, mesh, qhat, &partition);
    let mut a = CooMatrix::new(kappa, kappa);
    let mut b = DMatrix::zeros(kappa, 2);
    let mut w = Vec::with_capacity(mesh.pipe_count());

    for alpha in 0..mesh.pipe_count() {
        let arc = net.arc(mesh.pipe_arc(alpha));
        let sigma = arc.pipe.as_ref().expect("pipe").cross_section();
        let wa = qhat[mesh.pipe_arc(alpha)] / sigma;
        w.push(wa);
        if wa == 0.0 {
            continue;
        }
        let rate = wa.abs() / mesh.dx(alpha);
        let mut chain: Vec<usize> = mesh.cell_range(alpha).collect();
        let upstream = if wa > 0.0 {
            arc.tail
        } else {
            chain.reverse();
            arc.head
        };
        for (k, &i) in chain.iter().enumerate() {
            a.push(i, i, -rate);
            if k > 0 {
                a.push(i, chain[k - 1], rate);
            }
        }
        let first = chain[0];
        if let NodeMix::Weights(weights) = &mix[upstream] {
            for &(src, wt) in weights {
                match src {
                    MixSource::Cell(j) => a.push(first, j, rate * wt),
                    MixSource::Input(k) => b[(first, k)] += rate * wt,
                }
            }
        }
    }

    let outputs = output_cells(net, mesh);
    let mut c = CooMatrix::new(outputs.len(), kappa);
    for (r, &i) in outputs.iter().enumerate() {
        c.push(r, i, 1.0);
    }

    SystemMatrices {
        a: CsrMatrix::from(&a),
        b,
        c: CsrMatrix::from(&c),
        w,
        qhat: qhat.to_vec(),
        partition,
        mix,
    }
}
