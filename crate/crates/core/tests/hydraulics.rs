mod common;

use dhnet_core::hydraulics::{
    check_operational_bounds, solve_hydraulics, Constraint, HydraulicClosure, HydraulicError, HydraulicOptions,
    HydraulicSystem,
};
use dhnet_core::materials::MaterialModel;
use dhnet_core::network::{generate, GeneratorKind, GeneratorOptions, OperationalBounds};
use dhnet_core::thermal::{Mesh, ThermalState};

fn energy(celsius: f64) -> f64 {
    MaterialModel::default().energy_of_temperature(celsius).unwrap()
}

fn closure(consumers: usize, power: f64) -> HydraulicClosure {
    HydraulicClosure {
        consumer_power: vec![power; consumers],
        stagnation_pressure: 3e5,
        pressure_increase: 5e5,
        backflow_energy: energy(60.0),
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let net = generate(GeneratorKind::TwoLoop, 4, &GeneratorOptions::default()).unwrap();
    let mesh = Mesh::build(&net, 30.0).unwrap();
    let state = ThermalState::flushed(&net, &mesh, energy(90.0), energy(60.0));
    let cl = closure(4, 30e3);
    let sol = solve_hydraulics(&net, &mesh, &state, &cl, None, &HydraulicOptions::default()).unwrap();
    let sys = HydraulicSystem::from_state(&net, &sol, &cl);
    let x = sys.scale(&sol.qhat, &sol.p_node);
    for eps in [0.0, 1e-3] {
        let jac = sys.jacobian(&x, eps);
        for col in 0..sys.dim() {
            let h = 1e-6 * x[col].abs().max(1e-3);
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[col] += h;
            xm[col] -= h;
            let fd = (sys.residual(&xp, eps) - sys.residual(&xm, eps)) / (2.0 * h);
            let err = (fd - jac.column(col)).amax();
            assert!(err < 1e-5 * jac.amax(), "column {col}, eps {eps}: {err:e}");
        }
    }
    assert!(sys.residual(&x, 0.0).amax() < 1e-8);
    assert_eq!(sys.gauge_row(), sys.dim() - 2);
}

#[test]
fn warm_start_reproduces_solution() {
    let net = generate(GeneratorKind::Star, 5, &GeneratorOptions::default()).unwrap();
    let mesh = Mesh::build(&net, 30.0).unwrap();
    let state = ThermalState::flushed(&net, &mesh, energy(95.0), energy(60.0));
    let cl = closure(5, 25e3);
    let opts = HydraulicOptions::default();
    let cold = solve_hydraulics(&net, &mesh, &state, &cl, None, &opts).unwrap();
    let warm = solve_hydraulics(&net, &mesh, &state, &cl, Some(&cold), &opts).unwrap();
    for (a, b) in cold.qhat.iter().zip(&warm.qhat) {
        assert!((a - b).abs() <= 1e-9 * cold.qhat[net.depot()]);
    }
    assert!(warm.history.len() <= cold.history.len());
    let mut log = Vec::new();
    cold.write_history_csv(&mut log).unwrap();
    let log = String::from_utf8(log).unwrap();
    assert!(log.starts_with("outer,newton,epsilon,residual\n"));
    assert_eq!(log.lines().count(), cold.history.len() + 1);
}

#[test]
fn closure_errors() {
    let net = common::load_fixture("minimal.json");
    let mesh = Mesh::build(&net, 50.0).unwrap();
    let opts = HydraulicOptions::default();
    let cold = ThermalState::uniform(&net, &mesh, energy(60.0));
    let err = solve_hydraulics(&net, &mesh, &cold, &closure(1, 1e4), None, &opts).unwrap_err();
    assert!(matches!(err, HydraulicError::InfeasibleClosure { ref arc, .. } if arc == "c1"), "{err}");
    let hot = ThermalState::flushed(&net, &mesh, energy(90.0), energy(60.0));
    assert!(matches!(
        solve_hydraulics(&net, &mesh, &hot, &closure(2, 1e4), None, &opts),
        Err(HydraulicError::InvalidClosure(_))
    ));
    assert!(matches!(
        solve_hydraulics(&net, &mesh, &hot, &closure(1, -1.0), None, &opts),
        Err(HydraulicError::InvalidClosure(_))
    ));
}

#[test]
fn gravity_in_zero_flow_state() {
    let net = common::load_fixture("parallel.json");
    let mesh = Mesh::build(&net, 50.0).unwrap();
    let state = ThermalState::flushed(&net, &mesh, energy(90.0), energy(60.0));
    let sol = solve_hydraulics(&net, &mesh, &state, &closure(1, 0.0), None, &HydraulicOptions::default()).unwrap();
    assert!(sol.qhat.iter().all(|q| q.abs() < 1e-12));
    let node = |id| net.node_by_id(id).unwrap();
    let lift = 400.0 * common::water::density(energy(60.0)) * 9.81 * 0.01;
    assert!((sol.p_node[node("B1")] - sol.p_node[node("B0")] - lift).abs() < 1e-6 * lift);
    assert!((sol.p_node[node("F1")] - sol.p_node[node("F0")]).abs() < 1e-6);
}

#[test]
fn operational_bounds_are_reported() {
    let net = common::load_fixture("minimal.json");
    let mesh = Mesh::build(&net, 50.0).unwrap();
    let state = ThermalState::flushed(&net, &mesh, energy(90.0), energy(60.0));
    let sol = solve_hydraulics(&net, &mesh, &state, &closure(1, 50e3), None, &HydraulicOptions::default()).unwrap();
    let loose = check_operational_bounds(&net, &sol, &state.e_node, &OperationalBounds::default(), 0.0).unwrap();
    assert!(loose.is_empty(), "{loose:?}");

    let tight = OperationalBounds { p_net: 7e5, t_ff_min: 95.0, ..OperationalBounds::default() };
    let report = check_operational_bounds(&net, &sol, &state.e_node, &tight, 42.0).unwrap();
    let has = |c| report.violations.iter().any(|v| v.constraint == c);
    assert!(has(Constraint::NodePressure) && has(Constraint::ConsumerSupplyTemperature));
    assert!(report.violations.iter().all(|v| v.time == 42.0 && v.magnitude > 0.0));
    let supply = report.violations.iter().find(|v| v.constraint == Constraint::ConsumerSupplyTemperature).unwrap();
    assert_eq!(supply.location, "c1");
    assert!((supply.magnitude - 5.0).abs() < 1e-9);
}
