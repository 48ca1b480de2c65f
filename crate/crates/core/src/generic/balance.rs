//! Strong-form rates, the entropy and power balances, and mesh refinement.

use std::f64::consts::PI;

use super::operators::{assemble_r, check_degeneracy, port_pairing, structure_check};
use super::{energy_and_gradient, GenericError, PipeGrid, PipeParams, PipeState, StateLaw, DEFAULT_DENSITY_FLOOR};

/// Time derivative of `z` from the pipe balance laws, with discrete `∂_x`.
pub fn strong_form_rates(z: &PipeState, grid: &PipeGrid, law: &StateLaw, params: &PipeParams) -> PipeState {
    let n = z.len();
    let v: Vec<f64> = (0..n).map(|i| z.velocity(i)).collect();
    let p: Vec<f64> = (0..n).map(|i| law.pressure(z.rho[i], z.energy[i])).collect();
    let m_flux: Vec<f64> = (0..n).map(|i| z.momentum[i] * v[i]).collect();
    let e_flux: Vec<f64> = (0..n).map(|i| z.energy[i] * v[i]).collect();
    let (d_m, d_mflux, d_p, d_eflux, d_v) = (
        grid.derivative(&z.momentum),
        grid.derivative(&m_flux),
        grid.derivative(&p),
        grid.derivative(&e_flux),
        grid.derivative(&v),
    );
    let k = params.friction / (2.0 * params.diameter);
    let wall = 4.0 * params.heat_transmission / params.diameter;
    let mut rates = PipeState { rho: Vec::with_capacity(n), momentum: Vec::with_capacity(n), energy: Vec::with_capacity(n) };
    for i in 0..n {
        let (r, e) = (z.rho[i], z.energy[i]);
        let t = law.temperature(r, e);
        rates.rho.push(-d_m[i]);
        rates.momentum.push(-d_mflux[i] - d_p[i] - k * r * v[i].abs() * v[i] - r * params.g * params.slope);
        rates.energy.push(-d_eflux[i] - p[i] * d_v[i] + k * r * v[i].abs() * v[i] * v[i] - wall * (t - law.theta));
    }
    rates
}

/// Weighted L² norm of
/// `∂_t s + ∂_x(sv) − (λ/2d)(1/T)ρ|v|v² + (4k_w/d)(T−ϑ)/T`,
/// with `∂_t s` from the chain rule applied to `rates`.
pub fn entropy_balance_residual(
    z: &PipeState,
    rates: &PipeState,
    grid: &PipeGrid,
    law: &StateLaw,
    params: &PipeParams,
) -> f64 {
    let n = z.len();
    let sv: Vec<f64> = (0..n).map(|i| law.entropy(z.rho[i], z.energy[i]) * z.velocity(i)).collect();
    let d_sv = grid.derivative(&sv);
    let k = params.friction / (2.0 * params.diameter);
    let wall = 4.0 * params.heat_transmission / params.diameter;
    let sq: Vec<f64> = (0..n)
        .map(|i| {
            let (r, e, v) = (z.rho[i], z.energy[i], z.velocity(i));
            let t = law.temperature(r, e);
            let ds_dt = law.entropy_rho(r, e) * rates.rho[i] + law.entropy_e(r, e) * rates.energy[i];
            let res = ds_dt + d_sv[i] - k * r * v.abs() * v * v / t + wall * (t - law.theta) / t;
            res * res
        })
        .collect();
    grid.integrate(&sq).sqrt()
}

/// `(dE/dt, −gᵀRg + yᵀu)` along `rates`, with `g = δE/δz`.
pub fn power_balance_gap(
    z: &PipeState,
    rates: &PipeState,
    grid: &PipeGrid,
    law: &StateLaw,
    params: &PipeParams,
) -> Result<(f64, f64), GenericError> {
    let g = energy_and_gradient(z, grid, law, params, DEFAULT_DENSITY_FLOOR)?.gradient;
    let n = z.len();
    let de_dt: Vec<f64> = (0..n)
        .map(|i| g.rho[i] * rates.rho[i] + g.momentum[i] * rates.momentum[i] + g.energy[i] * rates.energy[i])
        .collect();
    let gs = g.stacked();
    let r = assemble_r(z, grid, law, params)?.total();
    let dissipated: f64 = r.triplet_iter().map(|(i, j, v)| gs[i] * v * gs[j]).sum();
    let port = port_pairing(z, grid, law, params);
    let supplied = port.output[0] * port.input[0] + port.output[1] * port.input[1];
    Ok((grid.integrate(&de_dt), supplied - dissipated))
}

/// Smooth manufactured fields `(ρ, v, T)` on `[0, ℓ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub rho: f64,
    pub velocity: f64,
    pub temperature: f64,
    /// Relative amplitude of the variations.
    pub amplitude: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Self { rho: 40.0, velocity: 4.0, temperature: 300.0, amplitude: 0.25 }
    }
}

impl Manufactured {
    pub fn fields(&self, x: f64, length: f64) -> (f64, f64, f64) {
        let s = x / length;
        let a = self.amplitude;
        (
            self.rho * (1.0 + a * (2.0 * PI * s).sin()),
            self.velocity * (1.0 + 3.0 * a * (PI * s).cos()),
            self.temperature * (1.0 + 0.4 * a * (PI * s + 0.4).sin()),
        )
    }

    pub fn state(&self, grid: &PipeGrid, law: &StateLaw) -> PipeState {
        PipeState::from_fields(grid, law, |x| self.fields(x, grid.length))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementLevel {
    pub points: usize,
    pub spacing: f64,
    pub skew: f64,
    pub symmetry: f64,
    pub min_eigenvalue: f64,
    pub friction_degeneracy: f64,
    pub entropy_degeneracy: f64,
    pub entropy_balance: f64,
    /// `|dE/dt − supply| / |dE/dt|`.
    pub power_gap: f64,
}

/// Checks on the manufactured state with `intervals · 2^k` intervals, `k < levels`.
pub fn refinement_study(
    fields: &Manufactured,
    law: &StateLaw,
    params: &PipeParams,
    intervals: usize,
    levels: usize,
) -> Result<Vec<RefinementLevel>, GenericError> {
    law.validate()?;
    (0..levels)
        .map(|k| {
            let grid = PipeGrid::new(params.length, intervals * (1 << k) + 1)?;
            let z = fields.state(&grid, law);
            z.validate(&grid, law, DEFAULT_DENSITY_FLOOR)?;
            let structure = structure_check(&z, &grid, law, params)?;
            let degeneracy = check_degeneracy(&z, &grid, law, params)?;
            let rates = strong_form_rates(&z, &grid, law, params);
            let (de_dt, supply) = power_balance_gap(&z, &rates, &grid, law, params)?;
            Ok(RefinementLevel {
                points: grid.points,
                spacing: grid.spacing(),
                skew: structure.skew,
                symmetry: structure.symmetry,
                min_eigenvalue: structure.min_eigenvalue,
                friction_degeneracy: degeneracy.friction,
                entropy_degeneracy: degeneracy.entropy,
                entropy_balance: entropy_balance_residual(&z, &rates, &grid, law, params),
                power_gap: (de_dt - supply).abs() / de_dt.abs().max(f64::MIN_POSITIVE),
            })
        })
        .collect()
}

/// Least-squares slope of `log r` against `log h`.
pub fn observed_rate(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(h, r)| (h.ln(), r.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
