//! Weak-form operators J, R, B and the structural identities they satisfy.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::{
    energy_and_gradient, entropy_gradient, hamiltonian_gradient, GenericError, PipeGrid, PipeParams, PipeState,
    StateLaw,
};

fn to_dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.triplet_iter() {
        d[(i, j)] += *v;
    }
    d
}

fn apply(m: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.nrows()];
    for (i, j, v) in m.triplet_iter() {
        y[i] += v * x[j];
    }
    y
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Skew operator J(z) with derivatives on the test functions.
///
/// Every entry is pushed together with its negated transpose, so the
/// assembled matrix is skew to the last bit.
pub fn assemble_j(z: &PipeState, grid: &PipeGrid, law: &StateLaw) -> CsrMatrix<f64> {
    let m = grid.points;
    let (om, oe) = (m, 2 * m);
    let mut coo = CooMatrix::new(3 * m, 3 * m);
    let mut pair = |row: usize, col: usize, v: f64| {
        coo.push(row, col, v);
        coo.push(col, row, -v);
    };
    for b in 0..m {
        let w = grid.weight(b);
        for (a, c) in grid.derivative_row(b) {
            // ∫ ρ ψ_M ∂φ_ρ
            pair(a, om + b, w * z.rho[b] * c);
            // ∫ M (ψ_M ∂φ_M − φ_M ∂ψ_M)
            pair(om + a, om + b, w * z.momentum[b] * c);
            // ∫ e ψ_M ∂φ_e + ψ_M ∂(φ_e p)
            pair(oe + a, om + b, w * c * (z.energy[b] + law.pressure(z.rho[a], z.energy[a])));
        }
    }
    CsrMatrix::from(&coo)
}

/// R(z) split into friction and wall-loss parts.
#[derive(Debug, Clone)]
pub struct Dissipation {
    pub friction: CsrMatrix<f64>,
    pub wall: CsrMatrix<f64>,
}

impl Dissipation {
    pub fn total(&self) -> CsrMatrix<f64> {
        &self.friction + &self.wall
    }
}

/// Pointwise 2×2 friction blocks `a [[1, −v], [−v, v²]]` on (M, e) plus the wall-loss diagonal.
pub fn assemble_r(z: &PipeState, grid: &PipeGrid, law: &StateLaw, params: &PipeParams) -> Result<Dissipation, GenericError> {
    let m = grid.points;
    let (om, oe) = (m, 2 * m);
    let mut friction = CooMatrix::new(3 * m, 3 * m);
    let mut wall = CooMatrix::new(3 * m, 3 * m);
    for i in 0..m {
        let (r, mom, e) = (z.rho[i], z.momentum[i], z.energy[i]);
        let temperature = law.temperature(r, e);
        if !(temperature > 0.0) {
            return Err(GenericError::NonPositiveTemperature { point: i, temperature });
        }
        let w = grid.weight(i);
        let a = w * params.friction_coefficient(law, r, mom, e);
        let v = mom / r;
        friction.push(om + i, om + i, a);
        friction.push(om + i, oe + i, -a * v);
        friction.push(oe + i, om + i, -a * v);
        friction.push(oe + i, oe + i, a * v * v);
        wall.push(oe + i, oe + i, w * 4.0 * params.heat_transmission / params.diameter * temperature);
    }
    Ok(Dissipation { friction: CsrMatrix::from(&friction), wall: CsrMatrix::from(&wall) })
}

/// Port operator as a `3m × 2` matrix acting on `u = (v(0), v(ℓ))`.
pub fn assemble_b(z: &PipeState, grid: &PipeGrid, law: &StateLaw) -> DMatrix<f64> {
    let m = grid.points;
    let mut b = DMatrix::zeros(3 * m, 2);
    for (col, i, sign) in [(0, 0, 1.0), (1, m - 1, -1.0)] {
        b[(i, col)] = sign * z.rho[i];
        b[(m + i, col)] = sign * z.momentum[i];
        b[(2 * m + i, col)] = sign * (z.energy[i] + law.pressure(z.rho[i], z.energy[i]));
    }
    b
}

/// Boundary input and output of a pipe state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Port {
    /// Velocities at x = 0 and x = ℓ.
    pub input: [f64; 2],
    /// `−[M²/2ρ + p + H(ρ,e) + ρgh]` with the sign of the boundary orientation.
    pub output: [f64; 2],
}

pub fn port_pairing(z: &PipeState, grid: &PipeGrid, law: &StateLaw, params: &PipeParams) -> Port {
    let last = grid.points - 1;
    let flux = |i: usize| {
        let (r, m, e) = (z.rho[i], z.momentum[i], z.energy[i]);
        m * m / (2.0 * r) + law.pressure(r, e) + law.ballistic(r, e) + r * params.g * params.height(grid.position(i))
    };
    Port { input: [z.velocity(0), z.velocity(last)], output: [flux(0), -flux(last)] }
}

/// `Bᵀ δE/δz`, which must agree with [`port_pairing`]'s output.
pub fn port_output_from_operator(
    z: &PipeState,
    grid: &PipeGrid,
    law: &StateLaw,
    params: &PipeParams,
    floor: f64,
) -> Result<[f64; 2], GenericError> {
    let g = DVector::from_vec(energy_and_gradient(z, grid, law, params, floor)?.gradient.stacked());
    let y = assemble_b(z, grid, law).transpose() * g;
    Ok([y[0], y[1]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyReport {
    /// Pointwise ‖J δS/δz‖ over the size of its cancelling terms.
    pub entropy: f64,
    /// ‖R^λ δH/δz‖ / (‖R^λ‖ ‖δH/δz‖).
    pub friction: f64,
}

/// Residuals of `J δS/δz = 0` and `R^λ δH/δz = 0`.
pub fn check_degeneracy(
    z: &PipeState,
    grid: &PipeGrid,
    law: &StateLaw,
    params: &PipeParams,
) -> Result<DegeneracyReport, GenericError> {
    let m = grid.points;
    let ds = entropy_gradient(z, law);
    let j_ds = apply(&assemble_j(z, grid, law), &ds.stacked());
    let s_flux: Vec<f64> = (0..m).map(|i| law.pressure(z.rho[i], z.energy[i]) * ds.energy[i]).collect();
    let (d_srho, d_se, d_ps) = (grid.derivative(&ds.rho), grid.derivative(&ds.energy), grid.derivative(&s_flux));
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m {
        let w = grid.weight(i);
        let r: f64 = (0..3).map(|blk| (j_ds[blk * m + i] / w).powi(2)).sum();
        let scale = (z.rho[i] * d_srho[i]).abs() + (z.energy[i] * d_se[i]).abs() + d_ps[i].abs();
        num += w * r;
        den += w * scale * scale;
    }
    let entropy = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };

    let dh = hamiltonian_gradient(z, grid, params).stacked();
    let r_lambda = assemble_r(z, grid, law, params)?.friction;
    let r_dh = apply(&r_lambda, &dh);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r_norm = r_lambda.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let friction = if r_norm > 0.0 { norm(&r_dh) / (r_norm * norm(&dh)) } else { norm(&r_dh) };
    Ok(DegeneracyReport { entropy, friction })
}

/// Skewness, symmetry and definiteness of the assembled operators, all relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureCheck {
    pub skew: f64,
    pub symmetry: f64,
    /// Smallest eigenvalue of R over its spectral norm.
    pub min_eigenvalue: f64,
}

pub fn structure_check(
    z: &PipeState,
    grid: &PipeGrid,
    law: &StateLaw,
    params: &PipeParams,
) -> Result<StructureCheck, GenericError> {
    let j = to_dense(&assemble_j(z, grid, law));
    let r = to_dense(&assemble_r(z, grid, law, params)?.total());
    let rel = |x: f64, n: f64| if n > 0.0 { x / n } else { x };
    let skew = rel(max_abs(&(&j + j.transpose())), max_abs(&j));
    let symmetry = rel(max_abs(&(&r - r.transpose())), max_abs(&r));
    let eig = r.clone().symmetric_eigen().eigenvalues;
    let spectral = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min_eigenvalue = rel(eig.min(), spectral);
    Ok(StructureCheck { skew, symmetry, min_eigenvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generic::DEFAULT_DENSITY_FLOOR;

    fn smooth(grid: &PipeGrid, law: &StateLaw) -> PipeState {
        PipeState::from_fields(grid, law, |x| {
            (40.0 + 5.0 * (0.05 * x).sin(), 3.0 - 6.0 * (0.02 * x).cos(), 300.0 + 10.0 * (0.03 * x).cos())
        })
    }

    #[test]
    fn j_rho_m_block_for_constant_density() {
        let grid = PipeGrid::new(10.0, 6).unwrap();
        let law = StateLaw::default();
        let z = PipeState { rho: vec![3.0; 6], momentum: vec![0.0; 6], energy: vec![2e5; 6] };
        let j = to_dense(&assemble_j(&z, &grid, &law));
        for a in 0..6 {
            for b in 0..6 {
                // ρ (Dᵀ W)[a][b] = ρ w_b D[b][a]
                let d_ba = grid.derivative_row(b).iter().filter(|(c, _)| *c == a).map(|(_, v)| v).sum::<f64>();
                let expected = 3.0 * grid.weight(b) * d_ba;
                assert!((j[(a, 6 + b)] - expected).abs() < 1e-14);
                assert_eq!(j[(6 + a, 6 + b)], 0.0);
            }
        }
    }

    #[test]
    fn friction_kernel_and_rest_state() {
        let grid = PipeGrid::new(100.0, 9).unwrap();
        let law = StateLaw::default();
        let params = PipeParams::default();
        let z = smooth(&grid, &law);
        let rep = check_degeneracy(&z, &grid, &law, &params).unwrap();
        assert!(rep.friction < 1e-14, "{}", rep.friction);

        let rest = PipeState { momentum: vec![0.0; 9], ..z.clone() };
        let r = assemble_r(&rest, &grid, &law, &params).unwrap();
        assert!(r.friction.values().iter().all(|&v| v == 0.0));
        let wall = to_dense(&r.wall);
        for i in 0..9 {
            let t = law.temperature(rest.rho[i], rest.energy[i]);
            let expected = grid.weight(i) * 4.0 * params.heat_transmission / params.diameter * t;
            assert!((wall[(18 + i, 18 + i)] - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn uniform_state_is_entropy_degenerate() {
        let grid = PipeGrid::new(50.0, 11).unwrap();
        let law = StateLaw::default();
        let z = PipeState::from_fields(&grid, &law, |_| (10.0, 4.0, 320.0));
        let rep = check_degeneracy(&z, &grid, &law, &PipeParams::default()).unwrap();
        assert_eq!(rep.entropy, 0.0);
    }

    #[test]
    fn port_output_closed_form() {
        let grid = PipeGrid::new(1.0, 3).unwrap();
        let law = StateLaw { r_gas: 2.0 / 3.0, ..StateLaw::default() };
        let params = PipeParams { slope: 0.0, ..PipeParams::default() };
        let z = PipeState { rho: vec![1.0; 3], momentum: vec![0.0, 0.0, 1.0], energy: vec![1.0; 3] };
        let port = port_pairing(&z, &grid, &law, &params);
        let expected = -(0.5 + 2.0 / 3.0 + law.ballistic(1.0, 1.0));
        assert!((port.output[1] - expected).abs() < 1e-12);
        let same = PipeState { rho: vec![2.0; 3], momentum: vec![1.0; 3], energy: vec![5.0; 3] };
        let port = port_pairing(&same, &grid, &law, &params);
        assert_eq!(port.input[0] - port.input[1], 0.0);
        assert_eq!(port.output[0] + port.output[1], 0.0);
        let from_b = port_output_from_operator(&z, &grid, &law, &params, DEFAULT_DENSITY_FLOOR).unwrap();
        let direct = port_pairing(&z, &grid, &law, &params).output;
        for k in 0..2 {
            assert!((from_b[k] - direct[k]).abs() <= 1e-12 * direct[k].abs().max(1.0));
        }
    }
}
