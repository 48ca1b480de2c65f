//! Operational limits on consumer, depot and network quantities.

use serde::{Deserialize, Serialize};

/// Temperatures in °C, pressures in Pa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperationalBounds {
    /// Agreed consumer outflow temperature T^bf.
    pub t_bf: f64,
    pub t_ff_min: f64,
    pub t_ff_max: f64,
    /// Largest admissible foreflow/backflow temperature drop at a consumer.
    pub dt_consumer_max: f64,
    pub p_bf_min: f64,
    pub p_bf_max: f64,
    pub p_ff_min: f64,
    pub p_ff_max: f64,
    pub dp_consumer_min: f64,
    pub dp_consumer_max: f64,
    /// Cap on the injected temperature at the depot.
    pub t_net: f64,
    /// Cap on every nodal pressure.
    pub p_net: f64,
}

impl Default for OperationalBounds {
    fn default() -> Self {
        Self {
            t_bf: 60.0,
            t_ff_min: 70.0,
            t_ff_max: 130.0,
            dt_consumer_max: 70.0,
            p_bf_min: 1e5,
            p_bf_max: 1e6,
            p_ff_min: 1e5,
            p_ff_max: 1.6e6,
            dp_consumer_min: 0.0,
            dp_consumer_max: 1e6,
            t_net: 130.0,
            p_net: 1.6e6,
        }
    }
}

impl OperationalBounds {
    /// Names of the ranges whose lower end exceeds the upper end.
    pub fn inverted_ranges(&self) -> Vec<&'static str> {
        [
            ("t_ff", self.t_ff_min, self.t_ff_max),
            ("p_bf", self.p_bf_min, self.p_bf_max),
            ("p_ff", self.p_ff_min, self.p_ff_max),
            ("dp_consumer", self.dp_consumer_min, self.dp_consumer_max),
        ]
        .into_iter()
        .filter(|(_, lo, hi)| lo > hi)
        .map(|(name, _, _)| name)
        .collect()
    }
}
