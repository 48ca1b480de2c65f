//! Piecewise time tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Value `v_i` holds on `[t_i, t_{i+1})`.
    Step,
}

/// Time-tabulated scalar. Outside its knots the end values are held.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTable {
    times: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl TimeTable {
    pub fn constant(value: f64) -> Self {
        Self { times: vec![0.0], values: vec![value], interpolation: Interpolation::Step }
    }

    pub fn new(times: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self, ScenarioError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(ScenarioError::Table(format!(
                "{} times for {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(ScenarioError::Table(format!("times not strictly increasing at {}", w[1])));
        }
        if values.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(ScenarioError::Table("non-finite entry".into()));
        }
        Ok(Self { times, values, interpolation })
    }

    pub fn from_pairs(pairs: &[[f64; 2]], interpolation: Interpolation) -> Result<Self, ScenarioError> {
        Self::new(pairs.iter().map(|p| p[0]).collect(), pairs.iter().map(|p| p[1]).collect(), interpolation)
    }

    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// True if the knots span `[t0, t_end]` (always for constants).
    pub fn covers(&self, t0: f64, t_end: f64) -> bool {
        self.is_constant() || (self.times[0] <= t0 && *self.times.last().unwrap() >= t_end)
    }

    pub fn value(&self, t: f64) -> f64 {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        match self.interpolation {
            Interpolation::Step => self.values[i],
            Interpolation::Linear => {
                let s = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
                self.values[i] + s * (self.values[i + 1] - self.values[i])
            }
        }
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(f64) -> Result<f64, ScenarioError>) -> Result<Self, ScenarioError> {
        Ok(Self {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect::<Result<_, _>>()?,
            interpolation: self.interpolation,
        })
    }

    /// Largest value over the knots, which bounds the table everywhere.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Reads `(time column, value column)` from a CSV file with headers.
pub fn read_csv_columns(path: &Path, time: &str, columns: &[&str]) -> Result<(Vec<f64>, Vec<Vec<f64>>), ScenarioError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| ScenarioError::Csv { path: path.to_owned(), source: e })?;
    let headers = reader.headers().map_err(|e| ScenarioError::Csv { path: path.to_owned(), source: e })?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| ScenarioError::MissingColumn {
            path: path.to_owned(),
            column: name.to_string(),
        })
    };
    let t_col = find(time)?;
    let cols: Vec<usize> = columns.iter().map(|c| find(c)).collect::<Result<_, _>>()?;
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); cols.len()];
    for record in reader.records() {
        let record = record.map_err(|e| ScenarioError::Csv { path: path.to_owned(), source: e })?;
        let parse = |i: usize| -> Result<f64, ScenarioError> {
            let field = record.get(i).unwrap_or("").trim();
            field.parse().map_err(|_| ScenarioError::Table(format!("{}: cannot parse {field:?}", path.display())))
        };
        times.push(parse(t_col)?);
        for (k, &c) in cols.iter().enumerate() {
            values[k].push(parse(c)?);
        }
    }
    Ok((times, values))
}
