//! Perfect mixing of energy densities at network nodes.

use crate::network::{ArcKind, FlowPartition, Network};

use super::{assemble::INPUT_BACKFLOW, assemble::INPUT_DEPOT, Mesh};

/// Where a node's inflowing energy density comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixSource {
    /// Outlet cell of a pipe delivering into the node.
    Cell(usize),
    /// Boundary input: `INPUT_DEPOT` (u^e) or `INPUT_BACKFLOW` (e^bf).
    Input(usize),
}

/// Convex weights of the mixing quotient at one node, or `Stagnant` when no
/// flow leaves the node.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeMix {
    Weights(Vec<(MixSource, f64)>),
    Stagnant,
}

/// Cell of pipe arc `a` that delivers into `node` under flow `q`.
fn outlet_cell(net: &Network, mesh: &Mesh, a: usize, node: usize, q: f64) -> usize {
    let alpha = mesh.pipe_of_arc(a).expect("pipe arc is meshed");
    let range = mesh.cell_range(alpha);
    if net.arc(a).head == node && q >= 0.0 {
        range.end - 1
    } else {
        range.start
    }
}

/// Mixing weights |q̂_b| / Σ_{O_n} |q̂_a| for every node.
pub fn mixing_weights(
    net: &Network,
    mesh: &Mesh,
    qhat: &[f64],
    partition: &FlowPartition,
) -> Vec<NodeMix> {
    (0..net.node_count())
        .map(|n| {
            let outflow: f64 = partition.outflow[n].iter().map(|&a| qhat[a].abs()).sum();
            if outflow == 0.0 {
                return NodeMix::Stagnant;
            }
            let weights = partition.inflow[n]
                .iter()
                .filter(|&&b| qhat[b] != 0.0)
                .map(|&b| {
                    let src = match net.arc(b).kind {
                        ArcKind::PipeFf | ArcKind::PipeBf => {
                            MixSource::Cell(outlet_cell(net, mesh, b, n, qhat[b]))
                        }
                        ArcKind::Consumer => MixSource::Input(INPUT_BACKFLOW),
                        ArcKind::Depot => MixSource::Input(INPUT_DEPOT),
                    };
                    (src, qhat[b].abs() / outflow)
                })
                .collect();
            NodeMix::Weights(weights)
        })
        .collect()
}

/// Mixed energy density per node.
///
/// Stagnant nodes keep their value from `previous`. Returns the mixed values
/// and the indices of stagnant nodes.
pub fn node_mixing(
    net: &Network,
    mesh: &Mesh,
    e: &[f64],
    inputs: [f64; 2],
    qhat: &[f64],
    partition: &FlowPartition,
    previous: &[f64],
) -> (Vec<f64>, Vec<usize>) {
    let mut stagnant = Vec::new();
    let values = mixing_weights(net, mesh, qhat, partition)
        .into_iter()
        .enumerate()
        .map(|(n, mix)| match mix {
            NodeMix::Stagnant => {
                stagnant.push(n);
                previous[n]
            }
            NodeMix::Weights(w) => w
                .iter()
                .map(|&(src, wt)| {
                    wt * match src {
                        MixSource::Cell(i) => e[i],
                        MixSource::Input(k) => inputs[k],
                    }
                })
                .sum(),
        })
        .collect();
    if !stagnant.is_empty() {
        log::debug!("{} stagnant node(s) keep their previous mixed energy density", stagnant.len());
    }
    (values, stagnant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ArcDef, NetworkConstants, Node, NodePart, PipeAttributes};

    /// Two foreflow pipes merging at F2, which feeds one consumer.
    fn merge_net() -> Network {
        let pipe = PipeAttributes { length: 10.0, diameter: 0.1, slope: 0.0, roughness: 0.0, heat_transmission: 0.0 };
        let node = |id: &str, part| Node { id: id.into(), part };
        Network::new(
            NetworkConstants::default(),
            vec![
                node("F0", NodePart::Foreflow),
                node("F1", NodePart::Foreflow),
                node("F2", NodePart::Foreflow),
                node("B2", NodePart::Backflow),
                node("B0", NodePart::Backflow),
            ],
            vec![
                ArcDef::depot("d", "B0", "F0"),
                ArcDef::pipe("a", "F0", "F2", ArcKind::PipeFf, pipe),
                ArcDef::pipe("b", "F0", "F1", ArcKind::PipeFf, pipe),
                ArcDef::pipe("c", "F1", "F2", ArcKind::PipeFf, pipe),
                ArcDef::consumer("k", "F2", "B2"),
                ArcDef::pipe("r", "B2", "B0", ArcKind::PipeBf, pipe),
            ],
        )
        .unwrap()
    }

    #[test]
    fn mixing_quotient() {
        let net = merge_net();
        let mesh = Mesh::build(&net, 10.0).unwrap();
        let qhat = [2.0, 1.0, 1.0, 1.0, 2.0, 2.0];
        let part = net.flow_partition(&qhat);
        let mut e = vec![0.0; mesh.cell_count()];
        e[mesh.index(0, 0)] = 2e8;
        e[mesh.index(2, 0)] = 4e8;
        let prev = vec![0.0; net.node_count()];
        let (en, stagnant) = node_mixing(&net, &mesh, &e, [5e8, 1e8], &qhat, &part, &prev);
        assert!(stagnant.is_empty());
        assert!((en[2] - 3e8).abs() < 1e-6);
        // pass-through: F1 takes pipe b's outlet
        assert_eq!(en[1], e[mesh.index(1, 0)]);
        // depot head receives u^e, consumer head receives e^bf
        assert_eq!(en[0], 5e8);
        assert_eq!(en[3], 1e8);

        let (en, _) = node_mixing(&net, &mesh, &vec![7e8; 4], [7e8, 7e8], &[3.0, 0.5, 2.5, 2.5, 3.0, 3.0], &part, &prev);
        assert!(en.iter().all(|&x| (x - 7e8).abs() < 1e-6));
    }

    #[test]
    fn reversed_pipe_delivers_from_first_cell() {
        let net = merge_net();
        let mesh = Mesh::build(&net, 5.0).unwrap();
        // pipe c reversed: F2 -> F1, and F1 -> F0 through b
        let qhat = [1.0, 2.0, -1.0, -1.0, 1.0, 1.0];
        let part = net.flow_partition(&qhat);
        let weights = mixing_weights(&net, &mesh, &qhat, &part);
        match &weights[1] {
            NodeMix::Weights(w) => assert_eq!(w, &vec![(MixSource::Cell(mesh.index(2, 0)), 1.0)]),
            NodeMix::Stagnant => panic!("F1 has outflow"),
        }
    }

    #[test]
    fn stagnant_node_holds_value() {
        let net = merge_net();
        let mesh = Mesh::build(&net, 10.0).unwrap();
        let qhat = [0.0; 6];
        let part = net.flow_partition(&qhat);
        let prev: Vec<f64> = (0..net.node_count()).map(|n| n as f64).collect();
        let (en, stagnant) = node_mixing(&net, &mesh, &[1.0; 4], [1.0, 1.0], &qhat, &part, &prev);
        assert_eq!(en, prev);
        assert_eq!(stagnant.len(), net.node_count());
    }
}
