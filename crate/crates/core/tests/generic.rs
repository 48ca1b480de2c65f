mod common;

use dhnet_core::generic::{
    assemble_r, energy_and_gradient, entropy_balance_residual, port_output_from_operator, port_pairing,
    refinement_study, strong_form_rates, GenericError, Manufactured, PipeGrid, PipeParams, PipeState, StateLaw,
    DEFAULT_DENSITY_FLOOR,
};

fn energy_functional(z: &PipeState, grid: &PipeGrid, law: &StateLaw, params: &PipeParams) -> f64 {
    energy_and_gradient(z, grid, law, params, DEFAULT_DENSITY_FLOOR).unwrap().energy
}

#[test]
fn gradient_matches_finite_differences() {
    let law = StateLaw::default();
    let params = PipeParams { slope: 0.02, ..PipeParams::default() };
    let grid = PipeGrid::new(params.length, 9).unwrap();
    let z = Manufactured::default().state(&grid, &law);
    let g = energy_and_gradient(&z, &grid, &law, &params, DEFAULT_DENSITY_FLOOR).unwrap().gradient.stacked();
    let base = z.stacked();
    let m = grid.points;
    for (k, &zk) in base.iter().enumerate() {
        let h = 1e-4 * zk.abs().max(1.0);
        let shifted = |d: f64| {
            let mut v = base.clone();
            v[k] += d;
            let state = PipeState { rho: v[..m].to_vec(), momentum: v[m..2 * m].to_vec(), energy: v[2 * m..].to_vec() };
            energy_functional(&state, &grid, &law, &params)
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h * grid.weight(k % m));
        assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "component {k}: fd {fd}, analytic {}", g[k]);
    }
}

#[test]
fn resting_state_at_ground_temperature_is_an_equilibrium() {
    let law = StateLaw::default();
    let params = PipeParams::default();
    let grid = PipeGrid::new(params.length, 17).unwrap();
    let z = PipeState::from_fields(&grid, &law, |_| (12.0, 0.0, law.theta));
    let rates = strong_form_rates(&z, &grid, &law, &params);
    let scale = z.energy[0];
    for v in rates.stacked() {
        assert!(v.abs() <= 1e-12 * scale, "{v}");
    }
    assert!(entropy_balance_residual(&z, &rates, &grid, &law, &params) <= 1e-12);
    let g = energy_and_gradient(&z, &grid, &law, &params, DEFAULT_DENSITY_FLOOR).unwrap().gradient;
    assert!(g.energy.iter().chain(&g.momentum).all(|v| v.abs() < 1e-14));
    let r = assemble_r(&z, &grid, &law, &params).unwrap().total();
    let gs = g.stacked();
    let dissipated: f64 = r.triplet_iter().map(|(i, j, v)| gs[i] * v * gs[j]).sum();
    assert!(dissipated.abs() < 1e-9);
}

#[test]
fn port_output_of_a_uniform_flow() {
    let law = StateLaw::default();
    let params = PipeParams::default();
    let grid = PipeGrid::new(params.length, 11).unwrap();
    let (rho, v, t) = (20.0, 3.0, 320.0);
    let z = PipeState::from_fields(&grid, &law, |_| (rho, v, t));
    let e = 1.5 * law.r_gas * rho * t;
    let s = 0.5 * law.r_gas * rho * (law.c_p * e.powi(3) / rho.powi(5)).ln();
    let flux = rho * v * v / 2.0 + 2.0 * e / 3.0 + e - law.theta * s;
    let port = port_pairing(&z, &grid, &law, &params);
    assert!(common::rel_err(port.input[0], v) < 1e-14 && common::rel_err(port.input[1], v) < 1e-14);
    assert!(common::rel_err(port.output[0], flux) < 1e-12);
    assert!(common::rel_err(port.output[1], -flux) < 1e-12);
    let y = port_output_from_operator(&z, &grid, &law, &params, DEFAULT_DENSITY_FLOOR).unwrap();
    assert!(common::rel_err(y[0], flux) < 1e-10 && common::rel_err(y[1], -flux) < 1e-10);
}

#[test]
fn invalid_states_are_rejected() {
    let law = StateLaw::default();
    let grid = PipeGrid::new(10.0, 4).unwrap();
    let good = PipeState::from_fields(&grid, &law, |_| (1.0, 1.0, 300.0));
    assert!(good.validate(&grid, &law, DEFAULT_DENSITY_FLOOR).is_ok());

    let mut thin = good.clone();
    thin.rho[2] = 1e-4;
    assert!(matches!(thin.validate(&grid, &law, DEFAULT_DENSITY_FLOOR), Err(GenericError::DensityBelowFloor { point: 2, .. })));
    let mut cold = good.clone();
    cold.energy[1] = -1.0;
    assert!(matches!(cold.validate(&grid, &law, DEFAULT_DENSITY_FLOOR), Err(GenericError::NonPositiveTemperature { point: 1, .. })));
    let mut nan = good.clone();
    nan.momentum[3] = f64::NAN;
    assert_eq!(nan.validate(&grid, &law, DEFAULT_DENSITY_FLOOR), Err(GenericError::NonFinite(3)));
    let mut short = good;
    short.rho.pop();
    assert!(matches!(short.validate(&grid, &law, DEFAULT_DENSITY_FLOOR), Err(GenericError::Dimension { .. })));

    assert!(PipeGrid::new(10.0, 1).is_err());
    let bad_law = StateLaw { r_gas: -1.0, ..StateLaw::default() };
    assert!(refinement_study(&Manufactured::default(), &bad_law, &PipeParams::default(), 8, 2).is_err());
}

#[test]
fn structure_holds_on_every_refinement_level() {
    let law = StateLaw::default();
    let params = PipeParams { slope: -0.01, ..PipeParams::default() };
    let levels = refinement_study(&Manufactured::default(), &law, &params, 8, 4).unwrap();
    assert_eq!(levels.iter().map(|l| l.points).collect::<Vec<_>>(), vec![9, 17, 33, 65]);
    for l in &levels {
        assert!(l.skew < 1e-12 && l.symmetry < 1e-12, "{l:?}");
        assert!(l.min_eigenvalue > -1e-10, "{l:?}");
    }
    for pair in levels.windows(2) {
        assert!(pair[1].power_gap < pair[0].power_gap);
        assert!(pair[1].entropy_degeneracy < pair[0].entropy_degeneracy);
    }
}
