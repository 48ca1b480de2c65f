//! Synthetic street-network generators.
//!
//! Every generator lays out a foreflow graph and mirrors it into the
//! backflow part: a foreflow pipe `Fi -> Fj` gets the backflow pipe
//! `Bj -> Bi`, consumers run `Fi -> Bi` and the depot closes the loop at the
//! root.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ArcDef, ArcKind, Network, NetworkConstants, NetworkError, Node, NodePart, PipeAttributes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Chain of consumers; `k` consumers give `2k - 1` pipes.
    Path,
    /// Two trunk pipes feeding a hub with one branch per consumer; `4 + 2k` pipes.
    Star,
    /// Ten-node foreflow graph with one loop, mirrored; 20 pipes, two loops.
    TwoLoop,
}

impl FromStr for GeneratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Self::Path),
            "star" => Ok(Self::Star),
            "two-loop" => Ok(Self::TwoLoop),
            other => Err(format!("unknown network kind {other:?} (expected path, star or two-loop)")),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Path => "path",
            Self::Star => "star",
            Self::TwoLoop => "two-loop",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    pub trunk_length: f64,
    pub trunk_diameter: f64,
    pub branch_length: f64,
    pub branch_diameter: f64,
    pub roughness: f64,
    pub heat_transmission: f64,
    pub constants: NetworkConstants,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            trunk_length: 200.0,
            trunk_diameter: 0.15,
            branch_length: 120.0,
            branch_diameter: 0.08,
            roughness: 1e-4,
            heat_transmission: 0.0,
            constants: NetworkConstants::default(),
        }
    }
}

impl GeneratorOptions {
    fn pipe(&self, length: f64, diameter: f64) -> PipeAttributes {
        PipeAttributes {
            length,
            diameter,
            slope: 0.0,
            roughness: self.roughness,
            heat_transmission: self.heat_transmission,
        }
    }
}

struct Layout {
    ff_nodes: usize,
    edges: Vec<(usize, usize, PipeAttributes)>,
    consumer_nodes: Vec<usize>,
    /// Leave the root's backflow mirror out and put the depot tail at `B1`.
    trim_root: bool,
}

/// Builds a synthetic network with `consumers` consumer arcs.
pub fn generate(
    kind: GeneratorKind,
    consumers: usize,
    opts: &GeneratorOptions,
) -> Result<Network, NetworkError> {
    let k = consumers.max(1);
    let layout = match kind {
        GeneratorKind::Path => Layout {
            ff_nodes: k + 1,
            edges: (0..k)
                .map(|i| (i, i + 1, opts.pipe(opts.branch_length, opts.trunk_diameter)))
                .collect(),
            consumer_nodes: (1..=k).collect(),
            trim_root: true,
        },
        GeneratorKind::Star => {
            let mut edges = vec![
                (0, 1, opts.pipe(opts.trunk_length, opts.trunk_diameter)),
                (1, 2, opts.pipe(opts.trunk_length, opts.trunk_diameter)),
            ];
            for i in 0..k {
                let length = opts.branch_length * (1.0 + 0.5 * i as f64 / k as f64);
                edges.push((2, 3 + i, opts.pipe(length, opts.branch_diameter)));
            }
            Layout { ff_nodes: 3 + k, edges, consumer_nodes: (3..3 + k).collect(), trim_root: false }
        }
        GeneratorKind::TwoLoop => {
            const EDGES: [(usize, usize); 10] =
                [(0, 1), (1, 2), (1, 3), (2, 4), (3, 4), (4, 5), (5, 6), (2, 7), (3, 8), (6, 9)];
            const ATTACH: [usize; 9] = [9, 8, 7, 5, 6, 4, 3, 2, 1];
            let edges = EDGES
                .iter()
                .enumerate()
                .map(|(idx, &(i, j))| {
                    let length = opts.trunk_length * (0.6 + 0.1 * (idx % 5) as f64);
                    let diameter = if idx < 3 { opts.trunk_diameter } else { opts.branch_diameter };
                    (i, j, opts.pipe(length, diameter))
                })
                .collect();
            Layout {
                ff_nodes: 10,
                edges,
                consumer_nodes: (0..k).map(|i| ATTACH[i % ATTACH.len()]).collect(),
                trim_root: false,
            }
        }
    };
    build(layout, opts.constants.clone())
}

fn build(layout: Layout, constants: NetworkConstants) -> Result<Network, NetworkError> {
    let first_bf = usize::from(layout.trim_root);
    let mut nodes: Vec<Node> = (0..layout.ff_nodes)
        .map(|i| Node { id: format!("F{i}"), part: NodePart::Foreflow })
        .collect();
    nodes.extend(
        (first_bf..layout.ff_nodes).map(|i| Node { id: format!("B{i}"), part: NodePart::Backflow }),
    );

    let mut arcs = vec![ArcDef::depot("depot", &format!("B{first_bf}"), "F0")];
    for (idx, (i, j, attrs)) in layout.edges.iter().enumerate() {
        arcs.push(ArcDef::pipe(&format!("ff{idx}"), &format!("F{i}"), &format!("F{j}"), ArcKind::PipeFf, *attrs));
    }
    for (idx, (i, j, attrs)) in layout.edges.iter().enumerate() {
        if layout.trim_root && *i == 0 {
            continue;
        }
        arcs.push(ArcDef::pipe(&format!("bf{idx}"), &format!("B{j}"), &format!("B{i}"), ArcKind::PipeBf, *attrs));
    }
    for (c, n) in layout.consumer_nodes.iter().enumerate() {
        arcs.push(ArcDef::consumer(&format!("c{c}"), &format!("F{n}"), &format!("B{n}")));
    }
    Network::new(constants, nodes, arcs)
}
