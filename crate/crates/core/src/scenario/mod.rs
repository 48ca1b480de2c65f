//! Boundary scenarios, feed-in power, peak shaving and the case study.

mod case_study;
mod feed_in;
mod optimize;
mod profile;
mod table;

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::integrator::{BoundaryData, IntegratorError};
use crate::materials::{MaterialError, MaterialModel};
use crate::network::{Network, OperationalBounds};

pub use case_study::{
    case_study_network, case_study_scenario, run_case_study, write_gnuplot_script, write_plot_csv, CaseStudyReport,
};
pub use feed_in::{energy_balance, feed_in_formula, feed_in_power, EnergyBalance, FeedInSeries};
pub use optimize::{injection_bounds, optimize_peak, PeakOptions, PeakResult};
pub use profile::{consumer_shares, DiurnalProfile};
pub use table::{read_csv_columns, Interpolation, TimeTable};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("invalid time table: {0}")]
    Table(String),
    #[error("{table} table does not cover [{t0}, {t_end}] s")]
    NotCovering { table: String, t0: f64, t_end: f64 },
    #[error("injected temperature {temperature:.3} °C exceeds the cap T_net = {cap} °C")]
    InjectionAboveCap { temperature: f64, cap: f64 },
    #[error("{expected} consumers in the network but {got} demand series")]
    ConsumerCount { expected: usize, got: usize },
    #[error("invalid demand profile: {0}")]
    Profile(String),
    #[error("unit {unit:?} is not allowed for the {table} table")]
    Unit { table: String, unit: Unit },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Simulation(#[from] IntegratorError),
    #[error("peak shaving infeasible: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// J/m³ or Pa or W, whichever the table holds.
    #[default]
    Si,
    Celsius,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TableSource {
    Constant { value: f64 },
    Pairs { pairs: Vec<[f64; 2]> },
    Csv {
        csv: PathBuf,
        column: String,
        #[serde(default = "default_time_column")]
        time_column: String,
    },
}

fn default_time_column() -> String {
    "t".to_string()
}

#[derive(Debug, Clone, Deserialize)]
struct DetailedTable {
    #[serde(default)]
    unit: Unit,
    #[serde(default)]
    interpolation: Interpolation,
    #[serde(flatten)]
    source: TableSource,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TableSpec {
    Value(f64),
    Pairs(Vec<[f64; 2]>),
    Detailed(DetailedTable),
}

impl TableSpec {
    fn load(&self, name: &str, base: &Path, materials: &MaterialModel, allow_celsius: bool) -> Result<TimeTable, ScenarioError> {
        let detailed = match self {
            Self::Value(v) => return Ok(TimeTable::constant(*v)),
            Self::Pairs(p) => return TimeTable::from_pairs(p, Interpolation::Linear),
            Self::Detailed(d) => d,
        };
        let table = match &detailed.source {
            TableSource::Constant { value } => TimeTable::constant(*value),
            TableSource::Pairs { pairs } => TimeTable::from_pairs(pairs, detailed.interpolation)?,
            TableSource::Csv { csv, column, time_column } => {
                let (t, mut v) = read_csv_columns(&base.join(csv), time_column, &[column.as_str()])?;
                TimeTable::new(t, v.remove(0), detailed.interpolation)?
            }
        };
        match detailed.unit {
            Unit::Si => Ok(table),
            Unit::Celsius if allow_celsius => table.map(|t| Ok(materials.energy_of_temperature(t)?)),
            unit => Err(ScenarioError::Unit { table: name.to_string(), unit }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SyntheticSpec {
    mean: f64,
    max: f64,
    #[serde(default = "default_period")]
    period: f64,
    #[serde(default = "default_resolution")]
    resolution: f64,
}

fn default_period() -> f64 {
    86_400.0
}

fn default_resolution() -> f64 {
    900.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DemandSpec {
    Synthetic {
        synthetic: SyntheticSpec,
    },
    Csv {
        csv: PathBuf,
        #[serde(default)]
        interpolation: Interpolation,
        #[serde(default = "default_time_column")]
        time_column: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    injection: TableSpec,
    stagnation_pressure: TableSpec,
    pressure_increase: TableSpec,
    /// Defaults to the bounds' agreed backflow temperature.
    #[serde(default)]
    backflow_temperature: Option<f64>,
    demand: DemandSpec,
    #[serde(default)]
    bounds: OperationalBounds,
}

/// Power drawn by each consumer over time.
#[derive(Debug, Clone, PartialEq)]
pub enum Demand {
    /// One table per consumer, in network consumer order.
    Tables(Vec<TimeTable>),
    /// A total profile split by fixed shares.
    Profile { profile: DiurnalProfile, shares: Vec<f64> },
}

impl Demand {
    /// The same constant power `total / n` for each of `n` consumers.
    pub fn constant(total: f64, n: usize) -> Self {
        Self::Tables(vec![TimeTable::constant(total / n as f64); n])
    }

    pub fn consumer_count(&self) -> usize {
        match self {
            Self::Tables(t) => t.len(),
            Self::Profile { shares, .. } => shares.len(),
        }
    }

    pub fn power(&self, t: f64) -> Vec<f64> {
        match self {
            Self::Tables(tables) => tables.iter().map(|tab| tab.value(t)).collect(),
            Self::Profile { profile, shares } => {
                let total = profile.value(t);
                shares.iter().map(|s| s * total).collect()
            }
        }
    }

    pub fn total(&self, t: f64) -> f64 {
        self.power(t).iter().sum()
    }

    fn covers(&self, t0: f64, t_end: f64) -> bool {
        match self {
            Self::Tables(tables) => tables.iter().all(|tab| tab.covers(t0, t_end)),
            Self::Profile { .. } => true,
        }
    }
}

/// Boundary data of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// u^e(t) [J/m³].
    pub injection: TimeTable,
    /// u^p(t) [Pa].
    pub stagnation_pressure: TimeTable,
    /// u^Δp(t) [Pa].
    pub pressure_increase: TimeTable,
    /// e^bf [J/m³].
    pub backflow_energy: f64,
    pub demand: Demand,
    pub bounds: OperationalBounds,
}

impl Scenario {
    /// Parses a scenario; CSV paths are resolved against `base_dir`.
    pub fn from_json_str(json: &str, base_dir: &Path, net: &Network) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(json)?;
        let materials = &net.constants.material;
        let injection = file.injection.load("injection", base_dir, materials, true)?;
        let stagnation_pressure = file.stagnation_pressure.load("stagnation_pressure", base_dir, materials, false)?;
        let pressure_increase = file.pressure_increase.load("pressure_increase", base_dir, materials, false)?;
        let t_bf = file.backflow_temperature.unwrap_or(file.bounds.t_bf);
        let backflow_energy = materials.energy_of_temperature(t_bf)?;
        let consumers: Vec<&str> = net.consumers().iter().map(|&c| net.arc(c).id.as_str()).collect();
        let demand = match file.demand {
            DemandSpec::Synthetic { synthetic: s } => Demand::Profile {
                profile: DiurnalProfile::new(s.mean, s.max, s.period, s.resolution)?,
                shares: consumer_shares(consumers.len()),
            },
            DemandSpec::Csv { csv, interpolation, time_column } => {
                let (t, columns) = read_csv_columns(&base_dir.join(csv), &time_column, &consumers)?;
                Demand::Tables(
                    columns
                        .into_iter()
                        .map(|v| TimeTable::new(t.clone(), v, interpolation))
                        .collect::<Result<_, _>>()?,
                )
            }
        };
        let scenario = Self {
            injection,
            stagnation_pressure,
            pressure_increase,
            backflow_energy,
            demand,
            bounds: file.bounds,
        };
        scenario.check_static(net)?;
        Ok(scenario)
    }

    pub fn load(path: &Path, net: &Network) -> Result<Self, ScenarioError> {
        let json = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_owned(), source })?;
        Self::from_json_str(&json, path.parent().unwrap_or(Path::new(".")), net)
    }

    fn check_static(&self, net: &Network) -> Result<(), ScenarioError> {
        let expected = net.consumers().len();
        if self.demand.consumer_count() != expected {
            return Err(ScenarioError::ConsumerCount { expected, got: self.demand.consumer_count() });
        }
        let materials = &net.constants.material;
        for &u in self.injection.values() {
            let temperature = materials.temperature_of_energy(u)?;
            if temperature > self.bounds.t_net {
                return Err(ScenarioError::InjectionAboveCap { temperature, cap: self.bounds.t_net });
            }
        }
        Ok(())
    }

    /// Full validation for a run over `[t0, t_end]`.
    pub fn validate(&self, net: &Network, t0: f64, t_end: f64) -> Result<(), ScenarioError> {
        self.check_static(net)?;
        let tables = [
            ("injection", &self.injection),
            ("stagnation_pressure", &self.stagnation_pressure),
            ("pressure_increase", &self.pressure_increase),
        ];
        for (name, table) in tables {
            if !table.covers(t0, t_end) {
                return Err(ScenarioError::NotCovering { table: name.to_string(), t0, t_end });
            }
        }
        if !self.demand.covers(t0, t_end) {
            return Err(ScenarioError::NotCovering { table: "demand".to_string(), t0, t_end });
        }
        Ok(())
    }

    /// Copy with a different injection profile.
    pub fn with_injection(&self, injection: TimeTable) -> Self {
        Self { injection, ..self.clone() }
    }
}

impl BoundaryData for Scenario {
    fn injection(&self, t: f64) -> f64 {
        self.injection.value(t)
    }

    fn backflow_energy(&self) -> f64 {
        self.backflow_energy
    }

    fn consumer_power(&self, t: f64) -> Vec<f64> {
        self.demand.power(t)
    }

    fn stagnation_pressure(&self, t: f64) -> f64 {
        self.stagnation_pressure.value(t)
    }

    fn pressure_increase(&self, t: f64) -> f64 {
        self.pressure_increase.value(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate, GeneratorKind, GeneratorOptions};

    fn star() -> Network {
        generate(GeneratorKind::Star, 2, &GeneratorOptions::default()).unwrap()
    }

    #[test]
    fn parses_celsius_and_csv_demand() {
        let net = star();
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("demand.csv"), "t,c0,c1\n0,1000,2000\n3600,3000,4000\n").unwrap();
        let json = r#"{
            "injection": {"unit": "celsius", "value": 90.0},
            "stagnation_pressure": 3e5,
            "pressure_increase": [[0, 4e5], [3600, 5e5]],
            "demand": {"csv": "demand.csv"}
        }"#;
        let s = Scenario::from_json_str(json, dir.path(), &net).unwrap();
        let m = &net.constants.material;
        assert!((s.injection(100.0) - m.energy_of_temperature(90.0).unwrap()).abs() < 1e-6);
        assert_eq!(s.backflow_energy, m.energy_of_temperature(60.0).unwrap());
        assert_eq!(s.consumer_power(1800.0), vec![2000.0, 3000.0]);
        assert_eq!(s.pressure_increase(1800.0), 4.5e5);
        assert!(s.validate(&net, 0.0, 3600.0).is_ok());
        assert!(matches!(s.validate(&net, 0.0, 7200.0), Err(ScenarioError::NotCovering { .. })));
    }

    #[test]
    fn rejects_bad_scenarios() {
        let net = star();
        let dir = Path::new(".");
        let hot = r#"{"injection": {"unit": "celsius", "value": 140.0}, "stagnation_pressure": 3e5,
            "pressure_increase": 5e5, "demand": {"synthetic": {"mean": 1e5, "max": 1.5e5}}}"#;
        assert!(matches!(Scenario::from_json_str(hot, dir, &net), Err(ScenarioError::InjectionAboveCap { .. })));
        let pressure_in_celsius = r#"{"injection": 3e8, "stagnation_pressure": {"unit": "celsius", "value": 3.0},
            "pressure_increase": 5e5, "demand": {"synthetic": {"mean": 1e5, "max": 1.5e5}}}"#;
        assert!(matches!(Scenario::from_json_str(pressure_in_celsius, dir, &net), Err(ScenarioError::Unit { .. })));
        let tmp = tempfile::tempdir().unwrap();
        std::fs::write(tmp.path().join("d.csv"), "t,c0\n0,1\n").unwrap();
        let missing = r#"{"injection": 3e8, "stagnation_pressure": 3e5, "pressure_increase": 5e5,
            "demand": {"csv": "d.csv"}}"#;
        assert!(matches!(
            Scenario::from_json_str(missing, tmp.path(), &net),
            Err(ScenarioError::MissingColumn { .. })
        ));
    }

    #[test]
    fn synthetic_demand_splits_by_shares() {
        let net = star();
        let json = r#"{"injection": 3e8, "stagnation_pressure": 3e5, "pressure_increase": 5e5,
            "demand": {"synthetic": {"mean": 1e5, "max": 1.5e5}}}"#;
        let s = Scenario::from_json_str(json, Path::new("."), &net).unwrap();
        for t in [0.0, 20_000.0, 70_000.0] {
            let p = s.consumer_power(t);
            assert_eq!(p.len(), 2);
            assert!((p.iter().sum::<f64>() - s.demand.total(t)).abs() < 1e-9);
        }
    }
}
