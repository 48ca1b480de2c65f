//! Water properties as polynomials of the internal energy density, and pipe
//! friction factors.
//!
//! All polynomials act on scaled variables `e* = e / e0` with `e0 = 1e9 J/m³`
//! and return scaled values that are multiplied by their reference value
//! (`T0 = 1 °C`, `ρ0 = 1e3 kg/m³`, `ν0 = 1e-6 m²/s`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower edge of the energy-density regime in which the fits are accurate [J/m³].
pub const REGIME_E_MIN: f64 = 0.2e9;
/// Upper edge of the energy-density regime [J/m³].
pub const REGIME_E_MAX: f64 = 0.5e9;

/// Below this Reynolds number the Colebrook–White law is outside its regime.
pub const TURBULENT_RE_MIN: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("energy density {0} J/m³ is negative")]
    NegativeEnergy(f64),
    #[error("temperature {0} °C is below the polynomial's value at zero energy")]
    TemperatureBelowRange(f64),
    #[error("friction solve did not converge after {iterations} iterations (last residual {residual:e})")]
    FrictionNotConverged { iterations: usize, residual: f64 },
    #[error("invalid friction model: {0}")]
    InvalidFrictionModel(String),
}

/// Polynomial material model of water.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialModel {
    /// `T*` coefficients in ascending powers.
    pub t_coeffs: [f64; 3],
    /// `ρ*` coefficients in ascending powers.
    pub rho_coeffs: [f64; 3],
    /// `ν*` coefficients in ascending powers.
    pub nu_coeffs: [f64; 5],
    pub e0: f64,
    pub t0_ref: f64,
    pub rho0_ref: f64,
    pub nu0_ref: f64,
}

impl Default for MaterialModel {
    fn default() -> Self {
        Self {
            t_coeffs: [1.93729, 220.536, 59.2453],
            rho_coeffs: [1.00280, -0.025576, -0.208084],
            nu_coeffs: [1.42624, -7.00355, 17.6559, -22.8079, 11.9285],
            e0: 1e9,
            t0_ref: 1.0,
            rho0_ref: 1e3,
            nu0_ref: 1e-6,
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl MaterialModel {
    fn scaled(&self, e: f64) -> Result<f64, MaterialError> {
        if e < 0.0 || e.is_nan() {
            return Err(MaterialError::NegativeEnergy(e));
        }
        if !(REGIME_E_MIN..=REGIME_E_MAX).contains(&e) {
            log::trace!("energy density {e:e} J/m³ outside the fitted regime");
        }
        Ok(e / self.e0)
    }

    /// Temperature [°C] of energy density `e` [J/m³].
    pub fn temperature_of_energy(&self, e: f64) -> Result<f64, MaterialError> {
        let es = self.scaled(e)?;
        Ok(self.t0_ref * horner(&self.t_coeffs, es))
    }

    /// Exact inverse of [`Self::temperature_of_energy`] on `e ≥ 0`.
    pub fn energy_of_temperature(&self, t: f64) -> Result<f64, MaterialError> {
        let [t0, t1, t2] = self.t_coeffs;
        let ts = t / self.t0_ref;
        let disc = t1 * t1 - 4.0 * t2 * (t0 - ts);
        if disc < 0.0 || ts < t0 || ts.is_nan() {
            return Err(MaterialError::TemperatureBelowRange(t));
        }
        // 0.5 (−T1 + √disc) / T2 in cancellation-free form.
        let es = 2.0 * (ts - t0) / (t1 + disc.sqrt());
        Ok(self.e0 * es)
    }

    /// Mass density [kg/m³].
    pub fn density_of_energy(&self, e: f64) -> Result<f64, MaterialError> {
        let es = self.scaled(e)?;
        Ok(self.rho0_ref * horner(&self.rho_coeffs, es))
    }

    /// Kinematic viscosity [m²/s].
    pub fn viscosity_of_energy(&self, e: f64) -> Result<f64, MaterialError> {
        let es = self.scaled(e)?;
        Ok(self.nu0_ref * horner(&self.nu_coeffs, es))
    }

    /// Reynolds number `|v| d / ν(e)`.
    pub fn reynolds(&self, v: f64, d: f64, e: f64) -> Result<f64, MaterialError> {
        Ok(v.abs() * d / self.viscosity_of_energy(e)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrictionMode {
    #[default]
    ColebrookWhite,
    FixedLambda,
    FixedReynolds,
}

/// Friction law of one pipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionModel {
    pub mode: FrictionMode,
    /// Roughness `k_r` [m].
    pub roughness: f64,
    /// Diameter `d` [m].
    pub diameter: f64,
    /// λ for `FixedLambda`, Re for `FixedReynolds`, unused otherwise.
    pub fixed_value: f64,
}

/// Friction factor together with regime diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionFactor {
    pub lambda: f64,
    pub reynolds: f64,
    /// Set when a Colebrook evaluation happened below `Re = 1e3` (or at `v = 0`).
    pub laminar_violation: bool,
}

const FRICTION_MAX_ITER: usize = 100;
const FRICTION_X_TOL: f64 = 1e-12;

/// Residual of the Colebrook–White equation in `x = 1/√λ`.
pub fn colebrook_residual(x: f64, reynolds: f64, rel_roughness: f64) -> f64 {
    x + 2.0 * (2.52 * x / reynolds + rel_roughness / 3.71).log10()
}

/// Fully rough limit `1/√λ = 1.14 − 2 log10(k_r/d)`.
pub fn rough_pipe_lambda(rel_roughness: f64) -> f64 {
    let x = 1.14 - 2.0 * rel_roughness.log10();
    1.0 / (x * x)
}

/// Solves Colebrook–White for λ at given Reynolds number and `k_r/d`.
pub fn colebrook_lambda(reynolds: f64, rel_roughness: f64) -> Result<f64, MaterialError> {
    if !(reynolds > 0.0) || rel_roughness < 0.0 {
        return Err(MaterialError::InvalidFrictionModel(format!(
            "Re = {reynolds}, k_r/d = {rel_roughness}"
        )));
    }
    let g = |x: f64| -2.0 * (2.52 * x / reynolds + rel_roughness / 3.71).log10();

    // Damped fixed point on x = g(x).
    let mut x = 7.0;
    for _ in 0..FRICTION_MAX_ITER {
        let next = 0.5 * (x + g(x));
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        if (next - x).abs() <= FRICTION_X_TOL * next.max(1.0) {
            x = next;
            if colebrook_residual(x, reynolds, rel_roughness).abs() < 1e-10 {
                return Ok(1.0 / (x * x));
            }
            break;
        }
        x = next;
    }

    // Bisection fallback: the residual is increasing in x.
    let (mut lo, mut hi) = (1e-3_f64, 1e3_f64);
    let f = |x: f64| colebrook_residual(x, reynolds, rel_roughness);
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(MaterialError::FrictionNotConverged {
            iterations: FRICTION_MAX_ITER,
            residual: f(x),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= FRICTION_X_TOL * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let residual = f(x);
    if residual.abs() < 1e-10 {
        Ok(1.0 / (x * x))
    } else {
        Err(MaterialError::FrictionNotConverged {
            iterations: FRICTION_MAX_ITER + 200,
            residual,
        })
    }
}

impl FrictionModel {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.diameter > 0.0) || self.roughness < 0.0 {
            return Err(MaterialError::InvalidFrictionModel(format!(
                "d = {}, k_r = {}",
                self.diameter, self.roughness
            )));
        }
        match self.mode {
            FrictionMode::FixedLambda | FrictionMode::FixedReynolds if !(self.fixed_value > 0.0) => {
                Err(MaterialError::InvalidFrictionModel(format!(
                    "fixed value {} must be positive",
                    self.fixed_value
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn relative_roughness(&self) -> f64 {
        self.roughness / self.diameter
    }
}

/// Friction factor λ at velocity `v` and energy density `e`.
pub fn friction_factor(
    materials: &MaterialModel,
    v: f64,
    e: f64,
    model: &FrictionModel,
) -> Result<FrictionFactor, MaterialError> {
    model.validate()?;
    let rel = model.relative_roughness();
    match model.mode {
        FrictionMode::FixedLambda => Ok(FrictionFactor {
            lambda: model.fixed_value,
            reynolds: materials.reynolds(v, model.diameter, e)?,
            laminar_violation: false,
        }),
        FrictionMode::FixedReynolds => Ok(FrictionFactor {
            lambda: colebrook_lambda(model.fixed_value, rel)?,
            reynolds: model.fixed_value,
            laminar_violation: model.fixed_value < TURBULENT_RE_MIN,
        }),
        FrictionMode::ColebrookWhite => {
            let reynolds = materials.reynolds(v, model.diameter, e)?;
            if reynolds == 0.0 {
                // Friction force vanishes with |v|v anyway.
                return Ok(FrictionFactor {
                    lambda: if rel > 0.0 { rough_pipe_lambda(rel) } else { 0.0 },
                    reynolds,
                    laminar_violation: true,
                });
            }
            Ok(FrictionFactor {
                lambda: colebrook_lambda(reynolds, rel)?,
                reynolds,
                laminar_violation: reynolds < TURBULENT_RE_MIN,
            })
        }
    }
}
