//! Directed-graph model of a district heating network.
//!
//! Nodes belong either to the foreflow (hot supply) or backflow (return)
//! part. Arcs are pipes within one part, consumer arcs bridging foreflow to
//! backflow, and exactly one depot arc bridging backflow to foreflow.

mod bounds;
mod generators;

pub use bounds::OperationalBounds;
pub use generators::{generate, GeneratorKind, GeneratorOptions};

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::{FrictionMode, FrictionModel, MaterialModel};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read network file: {0}")]
    Io(#[from] std::io::Error),
    #[error("network file does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("duplicate arc id {0:?}")]
    DuplicateArc(String),
    #[error("arc {arc:?} references unknown node {node:?}")]
    UnknownNode { arc: String, node: String },
    #[error("arc {0:?} starts and ends at the same node")]
    SelfLoop(String),
    #[error("pipe {0:?} has no pipe attribute block")]
    MissingPipeAttributes(String),
    #[error("arc {0:?} is not a pipe but carries a pipe attribute block")]
    UnexpectedPipeAttributes(String),
    #[error("pipe {arc:?}: {reason}")]
    InvalidPipeAttributes { arc: String, reason: String },
    #[error("network has no depot arc")]
    NoDepot,
    #[error("multiple depot arcs: {0:?}")]
    MultipleDepots(Vec<String>),
    #[error("consumer arc {0:?} must run from a foreflow node to a backflow node")]
    ConsumerOrientation(String),
    #[error("depot arc {0:?} must run from a backflow node to a foreflow node")]
    DepotOrientation(String),
    #[error("pipe {arc:?} of kind {kind} connects a node outside its network part")]
    PipePartMismatch { arc: String, kind: ArcKind },
    #[error("network graph is disconnected; node {0:?} is unreachable")]
    Disconnected(String),
    #[error("invalid network constants: {0}")]
    InvalidConstants(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodePart {
    Foreflow,
    Backflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    PipeFf,
    PipeBf,
    Consumer,
    Depot,
}

impl ArcKind {
    pub fn is_pipe(self) -> bool {
        matches!(self, ArcKind::PipeFf | ArcKind::PipeBf)
    }
}

impl fmt::Display for ArcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ArcKind::PipeFf => "pipe_ff",
            ArcKind::PipeBf => "pipe_bf",
            ArcKind::Consumer => "consumer",
            ArcKind::Depot => "depot",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub part: NodePart,
}

/// Constant geometric and thermal data of a pipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipeAttributes {
    /// ℓ [m]
    pub length: f64,
    /// d [m]
    pub diameter: f64,
    /// ∂x h, dimensionless
    #[serde(default)]
    pub slope: f64,
    /// k_r [m]
    #[serde(default)]
    pub roughness: f64,
    /// k_w [W/(m²K)]
    #[serde(default)]
    pub heat_transmission: f64,
}

impl PipeAttributes {
    /// Cross-section ς = d²π/4 [m²].
    pub fn cross_section(&self) -> f64 {
        self.diameter * self.diameter * std::f64::consts::PI / 4.0
    }

    pub fn volume(&self) -> f64 {
        self.cross_section() * self.length
    }

    fn validate(&self, arc: &str) -> Result<(), NetworkError> {
        let bad = |reason: &str| NetworkError::InvalidPipeAttributes {
            arc: arc.to_string(),
            reason: reason.to_string(),
        };
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(bad("length must be positive"));
        }
        if !(self.diameter > 0.0) || !self.diameter.is_finite() {
            return Err(bad("diameter must be positive"));
        }
        if !(self.roughness >= 0.0) {
            return Err(bad("roughness must be non-negative"));
        }
        if !(self.heat_transmission >= 0.0) {
            return Err(bad("heat transmission must be non-negative"));
        }
        if !self.slope.is_finite() {
            return Err(bad("slope must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub id: String,
    /// Index of the tail node m of a = (m, n).
    pub tail: usize,
    /// Index of the head node n.
    pub head: usize,
    pub kind: ArcKind,
    pub pipe: Option<PipeAttributes>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionSpec {
    #[serde(default)]
    pub mode: FrictionMode,
    /// λ or Re for the fixed modes.
    #[serde(default)]
    pub value: f64,
}

impl Default for FrictionSpec {
    fn default() -> Self {
        Self { mode: FrictionMode::ColebrookWhite, value: 0.0 }
    }
}

/// Network-wide constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConstants {
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    /// Outer ground temperature ϑ [°C].
    pub theta: f64,
    pub material: MaterialModel,
    pub friction: FrictionSpec,
}

impl Default for NetworkConstants {
    fn default() -> Self {
        Self {
            g: 9.81,
            theta: 10.0,
            material: MaterialModel::default(),
            friction: FrictionSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArcSpec {
    id: String,
    tail: String,
    head: String,
    kind: ArcKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pipe: Option<PipeAttributes>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    #[serde(default)]
    constants: NetworkConstants,
    nodes: Vec<Node>,
    arcs: Vec<ArcSpec>,
}

/// Validated, immutable network.
#[derive(Debug, Clone)]
pub struct Network {
    pub constants: NetworkConstants,
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    depot: usize,
    pipes: Vec<usize>,
    consumers: Vec<usize>,
    delta_in: Vec<Vec<usize>>,
    delta_out: Vec<Vec<usize>>,
    node_index: HashMap<String, usize>,
    arc_index: HashMap<String, usize>,
}

/// Arc description used to build a network programmatically.
#[derive(Debug, Clone)]
pub struct ArcDef {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub kind: ArcKind,
    pub pipe: Option<PipeAttributes>,
}

impl ArcDef {
    pub fn pipe(id: &str, tail: &str, head: &str, kind: ArcKind, attrs: PipeAttributes) -> Self {
        Self { id: id.into(), tail: tail.into(), head: head.into(), kind, pipe: Some(attrs) }
    }

    pub fn consumer(id: &str, tail: &str, head: &str) -> Self {
        Self { id: id.into(), tail: tail.into(), head: head.into(), kind: ArcKind::Consumer, pipe: None }
    }

    pub fn depot(id: &str, tail: &str, head: &str) -> Self {
        Self { id: id.into(), tail: tail.into(), head: head.into(), kind: ArcKind::Depot, pipe: None }
    }
}

/// Flow-specific ingoing and outgoing arc sets per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPartition {
    pub inflow: Vec<Vec<usize>>,
    pub outflow: Vec<Vec<usize>>,
}

/// Counts in the column layout of the street-network outline table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TopologySummary {
    pub pipes: usize,
    pub consumers: usize,
    pub depot: usize,
    pub arcs: usize,
    pub nodes: usize,
    /// Cycle-space dimension of the pipe subgraph: |A_p| − |N| + components.
    pub loops: usize,
}

impl Network {
    pub fn new(
        constants: NetworkConstants,
        nodes: Vec<Node>,
        arc_defs: Vec<ArcDef>,
    ) -> Result<Self, NetworkError> {
        if !(constants.g >= 0.0) || !constants.theta.is_finite() {
            return Err(NetworkError::InvalidConstants(format!(
                "g = {}, theta = {}",
                constants.g, constants.theta
            )));
        }
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateNode(n.id.clone()));
            }
        }

        let mut arcs = Vec::with_capacity(arc_defs.len());
        let mut arc_index = HashMap::with_capacity(arc_defs.len());
        for def in arc_defs {
            if arc_index.contains_key(&def.id) {
                return Err(NetworkError::DuplicateArc(def.id));
            }
            let lookup = |id: &str| {
                node_index.get(id).copied().ok_or_else(|| NetworkError::UnknownNode {
                    arc: def.id.clone(),
                    node: id.to_string(),
                })
            };
            let tail = lookup(&def.tail)?;
            let head = lookup(&def.head)?;
            if tail == head {
                return Err(NetworkError::SelfLoop(def.id));
            }
            let (tp, hp) = (nodes[tail].part, nodes[head].part);
            match def.kind {
                ArcKind::PipeFf | ArcKind::PipeBf => {
                    let part = if def.kind == ArcKind::PipeFf {
                        NodePart::Foreflow
                    } else {
                        NodePart::Backflow
                    };
                    if tp != part || hp != part {
                        return Err(NetworkError::PipePartMismatch { arc: def.id, kind: def.kind });
                    }
                    match &def.pipe {
                        Some(p) => p.validate(&def.id)?,
                        None => return Err(NetworkError::MissingPipeAttributes(def.id)),
                    }
                }
                ArcKind::Consumer => {
                    if tp != NodePart::Foreflow || hp != NodePart::Backflow {
                        return Err(NetworkError::ConsumerOrientation(def.id));
                    }
                }
                ArcKind::Depot => {
                    if tp != NodePart::Backflow || hp != NodePart::Foreflow {
                        return Err(NetworkError::DepotOrientation(def.id));
                    }
                }
            }
            if !def.kind.is_pipe() && def.pipe.is_some() {
                return Err(NetworkError::UnexpectedPipeAttributes(def.id));
            }
            arc_index.insert(def.id.clone(), arcs.len());
            arcs.push(Arc { id: def.id, tail, head, kind: def.kind, pipe: def.pipe });
        }

        let depots: Vec<usize> = (0..arcs.len()).filter(|&a| arcs[a].kind == ArcKind::Depot).collect();
        let depot = match depots.as_slice() {
            [] => return Err(NetworkError::NoDepot),
            [d] => *d,
            many => {
                return Err(NetworkError::MultipleDepots(
                    many.iter().map(|&a| arcs[a].id.clone()).collect(),
                ))
            }
        };

        let mut delta_in = vec![Vec::new(); nodes.len()];
        let mut delta_out = vec![Vec::new(); nodes.len()];
        for (a, arc) in arcs.iter().enumerate() {
            delta_out[arc.tail].push(a);
            delta_in[arc.head].push(a);
        }

        let net = Self {
            pipes: (0..arcs.len()).filter(|&a| arcs[a].kind.is_pipe()).collect(),
            consumers: (0..arcs.len()).filter(|&a| arcs[a].kind == ArcKind::Consumer).collect(),
            constants,
            nodes,
            arcs,
            depot,
            delta_in,
            delta_out,
            node_index,
            arc_index,
        };
        if let Some(unreached) = net.first_unreachable_node() {
            return Err(NetworkError::Disconnected(net.nodes[unreached].id.clone()));
        }
        Ok(net)
    }

    pub fn from_json_str(s: &str) -> Result<Self, NetworkError> {
        let file: NetworkFile = serde_json::from_str(s)?;
        let defs = file
            .arcs
            .into_iter()
            .map(|a| ArcDef { id: a.id, tail: a.tail, head: a.head, kind: a.kind, pipe: a.pipe })
            .collect();
        Self::new(file.constants, file.nodes, defs)
    }

    /// Reads and validates a network file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let file = NetworkFile {
            constants: self.constants.clone(),
            nodes: self.nodes.clone(),
            arcs: self
                .arcs
                .iter()
                .map(|a| ArcSpec {
                    id: a.id.clone(),
                    tail: self.nodes[a.tail].id.clone(),
                    head: self.nodes[a.head].id.clone(),
                    kind: a.kind,
                    pipe: a.pipe,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("network serializes")
    }

    fn first_unreachable_node(&self) -> Option<usize> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &a in self.delta_in[n].iter().chain(&self.delta_out[n]) {
                let other = if self.arcs[a].tail == n { self.arcs[a].head } else { self.arcs[a].tail };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn node(&self, n: usize) -> &Node {
        &self.nodes[n]
    }

    pub fn arc(&self, a: usize) -> &Arc {
        &self.arcs[a]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn node_by_id(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn arc_by_id(&self, id: &str) -> Option<usize> {
        self.arc_index.get(id).copied()
    }

    /// Arc indices of all pipes, in file order.
    pub fn pipes(&self) -> &[usize] {
        &self.pipes
    }

    pub fn consumers(&self) -> &[usize] {
        &self.consumers
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    /// Topological ingoing arcs δ^in_n.
    pub fn delta_in(&self, n: usize) -> &[usize] {
        &self.delta_in[n]
    }

    /// Topological outgoing arcs δ^out_n.
    pub fn delta_out(&self, n: usize) -> &[usize] {
        &self.delta_out[n]
    }

    pub fn pipe_attributes(&self, a: usize) -> Option<&PipeAttributes> {
        self.arcs[a].pipe.as_ref()
    }

    /// Friction model of pipe `a` under the network-wide friction spec.
    pub fn friction_model(&self, a: usize) -> Option<FrictionModel> {
        let p = self.arcs[a].pipe.as_ref()?;
        Some(FrictionModel {
            mode: self.constants.friction.mode,
            roughness: p.roughness,
            diameter: p.diameter,
            fixed_value: self.constants.friction.value,
        })
    }

    /// Total pipe volume of one network part [m³].
    pub fn part_volume(&self, part: NodePart) -> f64 {
        self.pipes
            .iter()
            .filter(|&&a| self.nodes[self.arcs[a].tail].part == part)
            .map(|&a| self.arcs[a].pipe.as_ref().map_or(0.0, |p| p.volume()))
            .sum()
    }

    /// Splits incident arcs into flow-specific in- and outflow sets.
    ///
    /// Zero flow on an arc puts it into the inflow set at both endpoints.
    pub fn flow_partition(&self, qhat: &[f64]) -> FlowPartition {
        assert_eq!(qhat.len(), self.arcs.len(), "one flow value per arc");
        let mut inflow = vec![Vec::new(); self.nodes.len()];
        let mut outflow = vec![Vec::new(); self.nodes.len()];
        for (n, (ins, outs)) in inflow.iter_mut().zip(outflow.iter_mut()).enumerate() {
            for &a in &self.delta_in[n] {
                if qhat[a] >= 0.0 {
                    ins.push(a);
                } else {
                    outs.push(a);
                }
            }
            for &a in &self.delta_out[n] {
                if qhat[a] <= 0.0 {
                    ins.push(a);
                } else {
                    outs.push(a);
                }
            }
        }
        FlowPartition { inflow, outflow }
    }

    /// Volume balance Σ_in q̂ − Σ_out q̂ per node.
    pub fn volume_residuals(&self, qhat: &[f64]) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|n| {
                let inflow: f64 = self.delta_in[n].iter().map(|&a| qhat[a]).sum();
                let outflow: f64 = self.delta_out[n].iter().map(|&a| qhat[a]).sum();
                inflow - outflow
            })
            .collect()
    }

    pub fn topology_summary(&self) -> TopologySummary {
        // Union-find over the pipe subgraph.
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.nodes.len();
        for &a in &self.pipes {
            let (ra, rb) = (find(&mut parent, self.arcs[a].tail), find(&mut parent, self.arcs[a].head));
            if ra != rb {
                parent[ra] = rb;
                components -= 1;
            }
        }
        TopologySummary {
            pipes: self.pipes.len(),
            consumers: self.consumers.len(),
            depot: 1,
            arcs: self.arcs.len(),
            nodes: self.nodes.len(),
            loops: self.pipes.len() + components - self.nodes.len(),
        }
    }
}

impl TopologySummary {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.serialize(self)?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "nodes": [
            {"id": "F0", "part": "foreflow"}, {"id": "F1", "part": "foreflow"},
            {"id": "B1", "part": "backflow"}, {"id": "B0", "part": "backflow"}
        ],
        "arcs": [
            {"id": "d", "tail": "B0", "head": "F0", "kind": "depot"},
            {"id": "p1", "tail": "F0", "head": "F1", "kind": "pipe_ff",
             "pipe": {"length": 100.0, "diameter": 0.1, "roughness": 1e-4}},
            {"id": "c1", "tail": "F1", "head": "B1", "kind": "consumer"},
            {"id": "p2", "tail": "B1", "head": "B0", "kind": "pipe_bf",
             "pipe": {"length": 100.0, "diameter": 0.1, "roughness": 1e-4}}
        ]
    }"#;

    #[test]
    fn minimal_loop() {
        let net = Network::from_json_str(MINIMAL).unwrap();
        assert_eq!(net.pipes().len(), 2);
        assert_eq!(net.consumers().len(), 1);
        assert_eq!(net.arc(net.depot()).id, "d");
        let s = net.topology_summary();
        assert_eq!((s.pipes, s.consumers, s.depot, s.arcs, s.nodes, s.loops), (2, 1, 1, 4, 4, 0));
        let p = net.pipe_attributes(net.arc_by_id("p1").unwrap()).unwrap();
        assert_eq!(p.cross_section(), 0.1 * 0.1 * std::f64::consts::PI / 4.0);
    }

    #[test]
    fn json_round_trip() {
        let net = Network::from_json_str(MINIMAL).unwrap();
        let again = Network::from_json_str(&net.to_json_string()).unwrap();
        assert_eq!(again.arcs(), net.arcs());
        assert_eq!(again.nodes(), net.nodes());
    }

    fn with_extra_arc(extra: &str) -> Result<Network, NetworkError> {
        let text = MINIMAL.replacen(
            r#"{"id": "d", "tail": "B0", "head": "F0", "kind": "depot"},"#,
            &format!(r#"{{"id": "d", "tail": "B0", "head": "F0", "kind": "depot"}}, {extra},"#),
            1,
        );
        Network::from_json_str(&text)
    }

    #[test]
    fn validation_diagnostics() {
        let err = with_extra_arc(r#"{"id": "d2", "tail": "B1", "head": "F1", "kind": "depot"}"#).unwrap_err();
        assert!(matches!(err, NetworkError::MultipleDepots(_)));
        assert!(err.to_string().contains("multiple depot arcs"));

        let err = with_extra_arc(r#"{"id": "d", "tail": "B1", "head": "F1", "kind": "consumer"}"#).unwrap_err();
        assert!(matches!(err, NetworkError::DuplicateArc(_)));

        let err = with_extra_arc(r#"{"id": "c2", "tail": "B1", "head": "F1", "kind": "consumer"}"#).unwrap_err();
        assert!(matches!(err, NetworkError::ConsumerOrientation(_)));

        let err = with_extra_arc(r#"{"id": "x", "tail": "F0", "head": "B1", "kind": "pipe_ff", "pipe": {"length": 1.0, "diameter": 0.1}}"#).unwrap_err();
        assert!(matches!(err, NetworkError::PipePartMismatch { .. }));

        let err = with_extra_arc(r#"{"id": "x", "tail": "F0", "head": "F1", "kind": "pipe_ff"}"#).unwrap_err();
        assert!(matches!(err, NetworkError::MissingPipeAttributes(_)));

        let err = with_extra_arc(r#"{"id": "x", "tail": "F0", "head": "F1", "kind": "pipe_ff", "pipe": {"length": 0.0, "diameter": 0.1}}"#).unwrap_err();
        assert!(matches!(err, NetworkError::InvalidPipeAttributes { .. }));

        let err = with_extra_arc(r#"{"id": "x", "tail": "F0", "head": "Q", "kind": "consumer"}"#).unwrap_err();
        assert!(matches!(err, NetworkError::UnknownNode { .. }));

        let no_depot = MINIMAL.replace(r#"{"id": "d", "tail": "B0", "head": "F0", "kind": "depot"},"#, "");
        assert!(matches!(Network::from_json_str(&no_depot), Err(NetworkError::NoDepot)));

        let dup = MINIMAL.replace(r#"{"id": "B0", "part": "backflow"}"#, r#"{"id": "B1", "part": "backflow"}"#);
        assert!(matches!(Network::from_json_str(&dup), Err(NetworkError::DuplicateNode(_))));

        let island = MINIMAL.replace(
            r#"{"id": "B0", "part": "backflow"}"#,
            r#"{"id": "B0", "part": "backflow"}, {"id": "X", "part": "backflow"}"#,
        );
        assert!(matches!(Network::from_json_str(&island), Err(NetworkError::Disconnected(id)) if id == "X"));

        assert!(matches!(Network::from_json_str("{\"nodes\": 3}"), Err(NetworkError::Schema(_))));
    }

    #[test]
    fn flow_partition_rules() {
        let net = Network::from_json_str(MINIMAL).unwrap();
        let f1 = net.node_by_id("F1").unwrap();
        let p1 = net.arc_by_id("p1").unwrap();
        let c1 = net.arc_by_id("c1").unwrap();

        let part = net.flow_partition(&[1.0, 1.0, 1.0, 1.0]);
        for n in 0..net.node_count() {
            assert_eq!(part.inflow[n], net.delta_in(n));
            assert_eq!(part.outflow[n], net.delta_out(n));
        }

        let mut q = vec![1.0; 4];
        q[p1] = -1.0;
        let part = net.flow_partition(&q);
        assert!(part.outflow[f1].contains(&p1));
        assert!(!part.inflow[f1].contains(&p1));

        q[p1] = 0.0;
        q[c1] = 0.0;
        let part = net.flow_partition(&q);
        assert!(part.inflow[f1].contains(&p1));
        // zero flow on a topological outflow also counts as inflow
        assert!(part.inflow[f1].contains(&c1));
    }

    #[test]
    fn summary_csv_layout() {
        let net = Network::from_json_str(MINIMAL).unwrap();
        let mut buf = Vec::new();
        net.topology_summary().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "pipes,consumers,depot,arcs,nodes,loops\n2,1,1,4,4,0\n");
    }
}
