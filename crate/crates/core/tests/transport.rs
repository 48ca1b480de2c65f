mod common;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dhnet_core::integrator::{flushed_state, simulate, Coupling, FlowSource, SimulationOptions, Simulator, TimeGrid};
use dhnet_core::materials::MaterialModel;
use dhnet_core::network::{generate, GeneratorKind, GeneratorOptions, Network, OperationalBounds};
use dhnet_core::ph::{build_ph, random_volume_preserving_flow};
use dhnet_core::scenario::{consumer_shares, Demand, DiurnalProfile, Scenario, TimeTable};
use dhnet_core::thermal::{assemble_system, Mesh, ThermalState};

fn energy(celsius: f64) -> f64 {
    MaterialModel::default().energy_of_temperature(celsius).unwrap()
}

fn star_scenario(consumers: usize) -> Scenario {
    Scenario {
        injection: TimeTable::from_pairs(&[[0.0, energy(90.0)], [43_200.0, energy(105.0)], [86_400.0, energy(90.0)]], Default::default())
            .unwrap(),
        stagnation_pressure: TimeTable::constant(3e5),
        pressure_increase: TimeTable::constant(5e5),
        backflow_energy: energy(60.0),
        demand: Demand::Profile {
            profile: DiurnalProfile::new(20e3 * consumers as f64, 30e3 * consumers as f64, 86_400.0, 900.0).unwrap(),
            shares: consumer_shares(consumers),
        },
        bounds: OperationalBounds::default(),
    }
}

fn star(consumers: usize) -> Network {
    generate(GeneratorKind::Star, consumers, &GeneratorOptions::default()).unwrap()
}

#[test]
fn stored_energy_follows_port_powers() {
    let net = star(4);
    let mesh = Mesh::build(&net, 20.0).unwrap();
    let s = star_scenario(4);
    let grid = TimeGrid::new(0.0, 86_400.0, 600.0).unwrap();
    let traj = simulate(&net, &mesh, &s, &grid, flushed_state(&net, &mesh, &s, 0.0), &SimulationOptions::default()).unwrap();
    let mut previous = traj.initial.stored_energy(&traj.volumes);
    for step in &traj.steps {
        let stored: f64 = step.e.iter().zip(&traj.volumes).map(|(e, v)| e * v).sum();
        let expected = grid.dt * (step.p_in - step.p_consumed);
        let scale = grid.dt * (step.p_in.abs() + step.p_consumed.abs());
        assert!((stored - previous - expected).abs() <= 1e-9 * scale, "t = {}", step.t);
        previous = stored;
    }
}

#[test]
fn dissipation_margin_is_the_quadratic_form_of_r() {
    let net = generate(GeneratorKind::TwoLoop, 3, &GeneratorOptions::default()).unwrap();
    let mesh = Mesh::build(&net, 40.0).unwrap();
    let q = random_volume_preserving_flow(&net, &mut ChaCha8Rng::seed_from_u64(5), 5e-3);
    let ph = build_ph(&assemble_system(&net, &mesh, &q).unwrap(), &mesh, &net).unwrap();
    let s = star_scenario(3);
    let flows = q.clone();
    let opts = SimulationOptions { flow: FlowSource::Prescribed(Box::new(move |_| flows.clone())), ..SimulationOptions::default() };
    let grid = TimeGrid::new(0.0, 3600.0, 120.0).unwrap();
    let traj = simulate(&net, &mesh, &s, &grid, flushed_state(&net, &mesh, &s, 0.0), &opts).unwrap();
    let mut e_k = traj.initial.e.clone();
    for step in &traj.steps {
        let mid = DVector::from_iterator(e_k.len(), e_k.iter().zip(&step.e).map(|(a, b)| 0.5 * (a + b)));
        let qe = mid.component_mul(&ph.q);
        let expected = 2.0 * grid.dt * qe.dot(&(&ph.r * &qe));
        let d = step.dissipation;
        assert!((d.margin - expected).abs() <= 1e-9 * (d.delta_h.abs() + d.supply.abs()), "t = {}", step.t);
        assert!(d.margin >= 0.0);
        e_k = step.e.clone();
    }
}

#[test]
fn fixed_point_coupling_stays_close() {
    let net = star(3);
    let mesh = Mesh::build(&net, 25.0).unwrap();
    let s = star_scenario(3);
    let grid = TimeGrid::new(0.0, 43_200.0, 300.0).unwrap();
    let initial = flushed_state(&net, &mesh, &s, 0.0);
    let quasi = simulate(&net, &mesh, &s, &grid, initial.clone(), &SimulationOptions::default()).unwrap();
    let opts = SimulationOptions { coupling: Coupling::FixedPoint { sweeps: 2 }, ..SimulationOptions::default() };
    let fixed = simulate(&net, &mesh, &s, &grid, initial, &opts).unwrap();
    let peak = |t: &dhnet_core::integrator::Trajectory| t.steps.iter().map(|s| s.p_in).fold(0.0, f64::max);
    assert!(common::rel_err(peak(&fixed), peak(&quasi)) < 0.02);
}

#[test]
fn cooling_drains_stored_energy() {
    let opts = GeneratorOptions { heat_transmission: 2.0, ..GeneratorOptions::default() };
    let net = generate(GeneratorKind::Path, 2, &opts).unwrap();
    let mesh = Mesh::build(&net, 25.0).unwrap();
    let s = star_scenario(2);
    let grid = TimeGrid::new(0.0, 7200.0, 300.0).unwrap();
    let initial = flushed_state(&net, &mesh, &s, 0.0);
    let run = |cooling| {
        let opts = SimulationOptions { cooling, ..SimulationOptions::default() };
        let traj = simulate(&net, &mesh, &s, &grid, initial.clone(), &opts).unwrap();
        traj.final_state().stored_energy(&traj.volumes)
    };
    assert!(run(true) < run(false));
}

#[test]
fn flow_reversal_is_recorded() {
    let net = common::load_fixture("parallel.json");
    let mesh = Mesh::build(&net, 20.0).unwrap();
    let narrow = net.arc_by_id("narrow").unwrap();
    let flows = |wide_share: f64| {
        let total = 2e-3;
        let mut q = vec![total; net.arc_count()];
        q[net.arc_by_id("wide").unwrap()] = wide_share * total;
        q[narrow] = (1.0 - wide_share) * total;
        q
    };
    let (before, after) = (flows(0.7), flows(1.3));
    let opts = SimulationOptions {
        flow: FlowSource::Prescribed(Box::new(move |t| if t < 1800.0 { before.clone() } else { after.clone() })),
        ..SimulationOptions::default()
    };
    let mut s = star_scenario(1);
    s.demand = Demand::constant(1e4, 1);
    let grid = TimeGrid::new(0.0, 3600.0, 300.0).unwrap();
    let traj = simulate(&net, &mesh, &s, &grid, ThermalState::uniform(&net, &mesh, energy(80.0)), &opts).unwrap();
    let reversals: Vec<(usize, &[usize])> =
        traj.steps.iter().enumerate().filter(|(_, s)| !s.reversed.is_empty()).map(|(k, s)| (k, s.reversed.as_slice())).collect();
    assert_eq!(reversals, vec![(6, &[narrow][..])]);
    let fed_from_head = mesh.cell_range(mesh.pipe_of_arc(narrow).unwrap()).end - 1;
    let last = traj.steps.last().unwrap();
    assert!(last.e[fed_from_head] > energy(80.0), "reversed pipe is fed from its head node");
}

#[test]
fn committed_steps_match_simulate() {
    let net = star(3);
    let mesh = Mesh::build(&net, 25.0).unwrap();
    let s = star_scenario(3);
    let grid = TimeGrid::new(0.0, 7200.0, 600.0).unwrap();
    let opts = SimulationOptions::default();
    let initial = flushed_state(&net, &mesh, &s, 0.0);
    let reference = simulate(&net, &mesh, &s, &grid, initial.clone(), &opts).unwrap();
    let mut sim = Simulator::new(&net, &mesh, &s, grid, initial, &opts);
    while !sim.is_done() {
        // A discarded trial must not change the committed result.
        let _ = sim.compute_step(energy(70.0)).unwrap();
        let record = sim.compute_step(s.injection.value(grid.midpoint(sim.step_index()))).unwrap();
        sim.commit(record);
    }
    let traj = sim.finish();
    assert_eq!(traj.final_state(), reference.final_state());

    let mut csv = Vec::new();
    traj.write_csv(&net, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.starts_with("t,e_out0,T_out0,e_out1,T_out1,e_out2,T_out2,p_in,depot_flow,violations\n"));
    assert_eq!(csv.lines().count(), 1 + grid.steps());
}

#[test]
fn time_grid_validation() {
    assert!(TimeGrid::new(0.0, 100.0, 30.0).is_err());
    assert!(TimeGrid::new(0.0, 0.0, 1.0).is_err());
    assert!(TimeGrid::new(0.0, 10.0, -1.0).is_err());
    let grid = TimeGrid::new(10.0, 100.0, 30.0).unwrap();
    assert_eq!((grid.steps(), grid.time(3), grid.midpoint(0)), (3, 100.0, 25.0));
}
