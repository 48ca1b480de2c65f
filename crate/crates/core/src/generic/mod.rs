//! Structural checks of the compressible pipe model in GENERIC form.
//!
//! A pipe state `z = (ρ, M, e)` lives on `m` collocation points spanning
//! `[0, ℓ]` including both ends. Integrals use trapezoid weights and
//! derivatives one-sided differences (forward, backward at the last point).
//! Operators act on block vectors ordered `[ρ; M; e]` of length `3m`.

mod balance;
mod operators;

use thiserror::Error;

pub use balance::{
    entropy_balance_residual, observed_rate, power_balance_gap, refinement_study, strong_form_rates, Manufactured,
    RefinementLevel,
};
pub use operators::{
    assemble_b, assemble_j, assemble_r, check_degeneracy, port_output_from_operator, port_pairing, structure_check,
    DegeneracyReport, Dissipation, Port, StructureCheck,
};

pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenericError {
    #[error("density {rho} at point {point} is below the floor {floor}")]
    DensityBelowFloor { point: usize, rho: f64, floor: f64 },
    #[error("temperature {temperature} at point {point} is not positive")]
    NonPositiveTemperature { point: usize, temperature: f64 },
    #[error("non-finite state entry at point {0}")]
    NonFinite(usize),
    #[error("state has {got} points, grid has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LawMode {
    #[default]
    IdealGas,
}

/// Ideal-gas closure `s = (R/2) ρ ln(c_p e³/ρ⁵)`, `T = 2e/(3Rρ)`, `p = 2e/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateLaw {
    pub mode: LawMode,
    /// Specific gas constant [J/(kg K)].
    pub r_gas: f64,
    pub c_p: f64,
    /// Ground temperature ϑ [K].
    pub theta: f64,
}

impl Default for StateLaw {
    fn default() -> Self {
        Self { mode: LawMode::IdealGas, r_gas: 287.0, c_p: 1005.0, theta: 283.15 }
    }
}

impl StateLaw {
    pub fn validate(&self) -> Result<(), GenericError> {
        if [self.r_gas, self.c_p, self.theta].iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(GenericError::InvalidParameter(format!("gas law {self:?}")))
        }
    }

    pub fn entropy(&self, rho: f64, e: f64) -> f64 {
        0.5 * self.r_gas * rho * (self.c_p * e.powi(3) / rho.powi(5)).ln()
    }

    pub fn temperature(&self, rho: f64, e: f64) -> f64 {
        2.0 * e / (3.0 * self.r_gas * rho)
    }

    pub fn pressure(&self, _rho: f64, e: f64) -> f64 {
        2.0 * e / 3.0
    }

    /// ∂s/∂ρ.
    pub fn entropy_rho(&self, rho: f64, e: f64) -> f64 {
        0.5 * self.r_gas * ((self.c_p * e.powi(3) / rho.powi(5)).ln() - 5.0)
    }

    /// ∂s/∂e = 1/T.
    pub fn entropy_e(&self, rho: f64, e: f64) -> f64 {
        1.5 * self.r_gas * rho / e
    }

    /// Ballistic free energy `e − ϑ s`.
    pub fn ballistic(&self, rho: f64, e: f64) -> f64 {
        e - self.theta * self.entropy(rho, e)
    }

    pub fn ballistic_rho(&self, rho: f64, e: f64) -> f64 {
        -self.theta * self.entropy_rho(rho, e)
    }

    pub fn ballistic_e(&self, rho: f64, e: f64) -> f64 {
        1.0 - self.theta * self.entropy_e(rho, e)
    }
}

/// Pipe data entering the operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeParams {
    pub length: f64,
    pub diameter: f64,
    /// Darcy friction factor λ, held constant.
    pub friction: f64,
    pub heat_transmission: f64,
    /// ∂h/∂x, with h(0) = 0.
    pub slope: f64,
    pub g: f64,
}

impl Default for PipeParams {
    fn default() -> Self {
        Self { length: 100.0, diameter: 0.5, friction: 0.02, heat_transmission: 2.0, slope: 0.0, g: 9.81 }
    }
}

impl PipeParams {
    pub fn height(&self, x: f64) -> f64 {
        self.slope * x
    }

    /// Pointwise friction coefficient `(λ/2d)(T/ϑ)ρ|v|`.
    pub fn friction_coefficient(&self, law: &StateLaw, rho: f64, m: f64, e: f64) -> f64 {
        let v = m / rho;
        self.friction / (2.0 * self.diameter) * law.temperature(rho, e) / law.theta * rho * v.abs()
    }
}

/// Collocation points `x_i = i ℓ/(m−1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeGrid {
    pub length: f64,
    pub points: usize,
}

impl PipeGrid {
    pub fn new(length: f64, points: usize) -> Result<Self, GenericError> {
        if points < 2 || !(length > 0.0) {
            return Err(GenericError::InvalidParameter(format!("grid of {points} points on length {length}")));
        }
        Ok(Self { length, points })
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.points - 1) as f64
    }

    pub fn position(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Trapezoid weights.
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if i == 0 || i + 1 == self.points {
            0.5 * h
        } else {
            h
        }
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// Nonzeros `(column, coefficient)` of row `i` of the difference matrix.
    pub fn derivative_row(&self, i: usize) -> [(usize, f64); 2] {
        let inv_h = 1.0 / self.spacing();
        let i0 = if i + 1 == self.points { i - 1 } else { i };
        [(i0, -inv_h), (i0 + 1, inv_h)]
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        (0..self.points).map(|i| self.derivative_row(i).iter().map(|&(j, c)| c * f[j]).sum()).collect()
    }
}

/// Nodal values of `z = (ρ, M, e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeState {
    pub rho: Vec<f64>,
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
}

impl PipeState {
    /// Samples `x ↦ (ρ, v, T)` on the grid.
    pub fn from_fields(grid: &PipeGrid, law: &StateLaw, f: impl Fn(f64) -> (f64, f64, f64)) -> Self {
        let (mut rho, mut momentum, mut energy) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..grid.points {
            let (r, v, t) = f(grid.position(i));
            rho.push(r);
            momentum.push(r * v);
            energy.push(1.5 * law.r_gas * r * t);
        }
        Self { rho, momentum, energy }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn velocity(&self, i: usize) -> f64 {
        self.momentum[i] / self.rho[i]
    }

    /// Checks finiteness, the density floor and positive temperature.
    pub fn validate(&self, grid: &PipeGrid, law: &StateLaw, floor: f64) -> Result<(), GenericError> {
        if self.momentum.len() != self.len() || self.energy.len() != self.len() || self.len() != grid.points {
            return Err(GenericError::Dimension { expected: grid.points, got: self.len() });
        }
        for i in 0..self.len() {
            let (r, m, e) = (self.rho[i], self.momentum[i], self.energy[i]);
            if !(r.is_finite() && m.is_finite() && e.is_finite()) {
                return Err(GenericError::NonFinite(i));
            }
            if r < floor {
                return Err(GenericError::DensityBelowFloor { point: i, rho: r, floor });
            }
            let temperature = law.temperature(r, e);
            if !(temperature > 0.0) {
                return Err(GenericError::NonPositiveTemperature { point: i, temperature });
            }
        }
        Ok(())
    }

    /// Concatenation `[ρ; M; e]`.
    pub fn stacked(&self) -> Vec<f64> {
        [self.rho.as_slice(), &self.momentum, &self.energy].concat()
    }
}

/// Gradient field in block form.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub rho: Vec<f64>,
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Gradient {
    pub fn stacked(&self) -> Vec<f64> {
        [self.rho.as_slice(), &self.momentum, &self.energy].concat()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyFunctionals {
    /// ∫ (M²/2ρ + e + ρgh) dx.
    pub hamiltonian: f64,
    /// ∫ s dx.
    pub entropy: f64,
    /// H − ϑS.
    pub energy: f64,
    /// δE/δz.
    pub gradient: Gradient,
}

/// Energy functional and its variational derivative.
pub fn energy_and_gradient(
    z: &PipeState,
    grid: &PipeGrid,
    law: &StateLaw,
    params: &PipeParams,
    floor: f64,
) -> Result<EnergyFunctionals, GenericError> {
    z.validate(grid, law, floor)?;
    let n = z.len();
    let mut h_density = Vec::with_capacity(n);
    let mut s_density = Vec::with_capacity(n);
    let mut gradient = Gradient { rho: Vec::with_capacity(n), momentum: Vec::with_capacity(n), energy: Vec::with_capacity(n) };
    for i in 0..n {
        let (r, m, e) = (z.rho[i], z.momentum[i], z.energy[i]);
        let gh = params.g * params.height(grid.position(i));
        h_density.push(m * m / (2.0 * r) + e + r * gh);
        s_density.push(law.entropy(r, e));
        gradient.rho.push(-m * m / (2.0 * r * r) + law.ballistic_rho(r, e) + gh);
        gradient.momentum.push(m / r);
        gradient.energy.push(law.ballistic_e(r, e));
    }
    let hamiltonian = grid.integrate(&h_density);
    let entropy = grid.integrate(&s_density);
    Ok(EnergyFunctionals { hamiltonian, entropy, energy: hamiltonian - law.theta * entropy, gradient })
}

/// δH/δz = (−M²/2ρ² + gh, v, 1).
pub fn hamiltonian_gradient(z: &PipeState, grid: &PipeGrid, params: &PipeParams) -> Gradient {
    let n = z.len();
    Gradient {
        rho: (0..n)
            .map(|i| -z.momentum[i].powi(2) / (2.0 * z.rho[i].powi(2)) + params.g * params.height(grid.position(i)))
            .collect(),
        momentum: (0..n).map(|i| z.velocity(i)).collect(),
        energy: vec![1.0; n],
    }
}

/// δS/δz = (∂s/∂ρ, 0, ∂s/∂e).
pub fn entropy_gradient(z: &PipeState, law: &StateLaw) -> Gradient {
    let n = z.len();
    Gradient {
        rho: (0..n).map(|i| law.entropy_rho(z.rho[i], z.energy[i])).collect(),
        momentum: vec![0.0; n],
        energy: (0..n).map(|i| law.entropy_e(z.rho[i], z.energy[i])).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_gas_values() {
        let law = StateLaw { r_gas: 2.0 / 3.0, ..StateLaw::default() };
        assert!((law.temperature(1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((law.pressure(1.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gibbs_identities() {
        let law = StateLaw::default();
        for (rho, e) in [(1.2, 2.5e5), (50.0, 1e7), (0.1, 3e4)] {
            let t = law.temperature(rho, e);
            let p = law.pressure(rho, e);
            let s = law.entropy(rho, e);
            let lhs = law.entropy_rho(rho, e);
            let rhs = -(e + p - t * s) / (rho * t);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            assert!((law.entropy_e(rho, e) - 1.0 / t).abs() <= 1e-15 / t);
            // Central differences of s.
            let (hr, he) = (1e-6 * rho, 1e-6 * e);
            let fd_rho = (law.entropy(rho + hr, e) - law.entropy(rho - hr, e)) / (2.0 * hr);
            let fd_e = (law.entropy(rho, e + he) - law.entropy(rho, e - he)) / (2.0 * he);
            assert!((fd_rho - lhs).abs() < 1e-6 * lhs.abs().max(1.0));
            assert!((fd_e - 1.0 / t).abs() < 1e-6 / t);
        }
    }

    #[test]
    fn energy_without_motion_or_entropy() {
        let grid = PipeGrid::new(2.0, 5).unwrap();
        let law = StateLaw { theta: 0.0, ..StateLaw::default() };
        let params = PipeParams { slope: 0.0, ..PipeParams::default() };
        let z = PipeState { rho: vec![1.0; 5], momentum: vec![0.0; 5], energy: vec![3.0, 1.0, 2.0, 5.0, 4.0] };
        let f = energy_and_gradient(&z, &grid, &law, &params, DEFAULT_DENSITY_FLOOR).unwrap();
        assert!((f.energy - grid.integrate(&z.energy)).abs() < 1e-14);

        let z = PipeState { rho: vec![2.0; 5], momentum: vec![4.0; 5], energy: vec![1e5; 5] };
        let f = energy_and_gradient(&z, &grid, &StateLaw::default(), &params, DEFAULT_DENSITY_FLOOR).unwrap();
        assert!(f.gradient.momentum.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn rejects_inadmissible_states() {
        let grid = PipeGrid::new(1.0, 3).unwrap();
        let law = StateLaw::default();
        let params = PipeParams::default();
        let thin = PipeState { rho: vec![1.0, 1e-4, 1.0], momentum: vec![0.0; 3], energy: vec![1.0; 3] };
        assert!(matches!(
            energy_and_gradient(&thin, &grid, &law, &params, DEFAULT_DENSITY_FLOOR),
            Err(GenericError::DensityBelowFloor { point: 1, .. })
        ));
        let cold = PipeState { rho: vec![1.0; 3], momentum: vec![0.0; 3], energy: vec![1.0, -1.0, 1.0] };
        assert!(matches!(
            energy_and_gradient(&cold, &grid, &law, &params, DEFAULT_DENSITY_FLOOR),
            Err(GenericError::NonPositiveTemperature { point: 1, .. })
        ));
    }

    #[test]
    fn differences_are_exact_on_lines() {
        let grid = PipeGrid::new(3.0, 7).unwrap();
        let f: Vec<f64> = (0..7).map(|i| 2.0 * grid.position(i) + 1.0).collect();
        assert!(grid.derivative(&f).iter().all(|d| (d - 2.0).abs() < 1e-13));
        assert!((grid.integrate(&vec![1.0; 7]) - 3.0).abs() < 1e-15);
    }
}
