//! Synthetic two-peak daily load shape.

use super::ScenarioError;

/// Periodic piecewise-linear total demand through samples of a smooth day
/// shape, scaled affinely so that its time mean and maximum are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct DiurnalProfile {
    period: f64,
    resolution: f64,
    samples: Vec<f64>,
}

fn bump(hour: f64, center: f64, width: f64) -> f64 {
    let d = (hour - center).rem_euclid(24.0);
    let d = d.min(24.0 - d);
    (-0.5 * (d / width).powi(2)).exp()
}

/// Unscaled day shape over `hour ∈ [0, 24)`: a morning and a larger evening peak.
fn day_shape(hour: f64) -> f64 {
    1.0 + 0.7 * bump(hour, 7.0, 1.5) + 1.0 * bump(hour, 19.0, 2.0) - 0.25 * bump(hour, 3.0, 2.5)
}

impl DiurnalProfile {
    pub fn new(mean: f64, max: f64, period: f64, resolution: f64) -> Result<Self, ScenarioError> {
        if !(mean > 0.0 && max > mean) {
            return Err(ScenarioError::Profile(format!("need 0 < mean < max, got mean {mean}, max {max}")));
        }
        let n = period / resolution;
        if !(resolution > 0.0) || (n - n.round()).abs() > 1e-9 || n.round() < 2.0 {
            return Err(ScenarioError::Profile(format!("resolution {resolution} s does not divide period {period} s")));
        }
        let n = n.round() as usize;
        let raw: Vec<f64> = (0..n).map(|i| day_shape(24.0 * i as f64 / n as f64)).collect();
        let raw_mean = raw.iter().sum::<f64>() / n as f64;
        let raw_max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = (max - mean) / (raw_max - raw_mean);
        let samples: Vec<f64> = raw.iter().map(|r| mean + scale * (r - raw_mean)).collect();
        if samples.iter().any(|&s| s < 0.0) {
            return Err(ScenarioError::Profile(format!("mean {mean} and max {max} give negative demand")));
        }
        Ok(Self { period, resolution, samples })
    }

    pub fn value(&self, t: f64) -> f64 {
        let x = t.rem_euclid(self.period) / self.resolution;
        let i = (x.floor() as usize).min(self.samples.len() - 1);
        let s = x - i as f64;
        let next = self.samples[(i + 1) % self.samples.len()];
        self.samples[i] + s * (next - self.samples[i])
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn period(&self) -> f64 {
        self.period
    }
}

/// Fixed, mildly uneven shares of the total demand, summing to one.
pub fn consumer_shares(n: usize) -> Vec<f64> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let raw: Vec<f64> = (0..n).map(|i| 0.8 + 0.4 * (i as f64 * golden).fract()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|r| r / sum).collect()
}
