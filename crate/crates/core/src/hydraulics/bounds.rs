//! Checks of a solved state against operational limits.

use std::fmt;

use serde::Serialize;

use crate::materials::MaterialError;
use crate::network::{Network, OperationalBounds};

use super::HydraulicState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    ConsumerSupplyTemperature,
    ConsumerTemperatureDrop,
    ConsumerBackflowPressure,
    ConsumerForeflowPressure,
    ConsumerPressureDifference,
    ConsumerFlowDirection,
    DepotTemperature,
    DepotFlowDirection,
    NodePressure,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::ConsumerSupplyTemperature => "consumer supply temperature range",
            Self::ConsumerTemperatureDrop => "consumer temperature drop cap",
            Self::ConsumerBackflowPressure => "consumer backflow pressure range",
            Self::ConsumerForeflowPressure => "consumer foreflow pressure range",
            Self::ConsumerPressureDifference => "consumer pressure difference range",
            Self::ConsumerFlowDirection => "consumer flow direction",
            Self::DepotTemperature => "depot injection temperature cap T_net",
            Self::DepotFlowDirection => "depot flow direction",
            Self::NodePressure => "network pressure cap p_net",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    /// Arc or node id.
    pub location: String,
    pub time: f64,
    /// Distance beyond the bound, in the constraint's unit.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundReport {
    pub violations: Vec<Violation>,
}

impl BoundReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

fn excess(value: f64, lo: f64, hi: f64) -> f64 {
    if value < lo {
        lo - value
    } else if value > hi {
        value - hi
    } else {
        0.0
    }
}

/// Lists every violated bound; bounds are inclusive.
///
/// `e_node` holds the mixed energy density per node.
pub fn check_operational_bounds(
    net: &Network,
    state: &HydraulicState,
    e_node: &[f64],
    bounds: &OperationalBounds,
    time: f64,
) -> Result<BoundReport, MaterialError> {
    let materials = &net.constants.material;
    let mut report = BoundReport::default();
    let mut push = |constraint, location: &str, magnitude: f64| {
        if magnitude > 0.0 {
            report.violations.push(Violation { constraint, location: location.to_string(), time, magnitude });
        }
    };

    for &a in net.consumers() {
        let arc = net.arc(a);
        let t_supply = materials.temperature_of_energy(e_node[arc.tail])?;
        let (p_m, p_n) = (state.p_node[arc.tail], state.p_node[arc.head]);
        push(Constraint::ConsumerSupplyTemperature, &arc.id, excess(t_supply, bounds.t_ff_min, bounds.t_ff_max));
        push(Constraint::ConsumerTemperatureDrop, &arc.id, t_supply - bounds.t_bf - bounds.dt_consumer_max);
        push(Constraint::ConsumerBackflowPressure, &arc.id, excess(p_n, bounds.p_bf_min, bounds.p_bf_max));
        push(Constraint::ConsumerForeflowPressure, &arc.id, excess(p_m, bounds.p_ff_min, bounds.p_ff_max));
        push(
            Constraint::ConsumerPressureDifference,
            &arc.id,
            excess(p_m - p_n, bounds.dp_consumer_min, bounds.dp_consumer_max),
        );
        push(Constraint::ConsumerFlowDirection, &arc.id, -state.qhat[a]);
    }

    let depot = net.arc(net.depot());
    let t_injected = materials.temperature_of_energy(e_node[depot.head])?;
    push(Constraint::DepotTemperature, &depot.id, t_injected - bounds.t_net);
    push(Constraint::DepotFlowDirection, &depot.id, -state.qhat[net.depot()]);

    for (n, node) in net.nodes().iter().enumerate() {
        push(Constraint::NodePressure, &node.id, state.p_node[n] - bounds.p_net);
    }
    Ok(report)
}
