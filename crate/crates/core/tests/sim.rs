use meshtube::control::{design_all, DesignOptions, ReferenceSchedule};
use meshtube::netmodel::{Network, NetworkModel};
use meshtube::output::{emit_outputs, CSV_HEADER};
use meshtube::sim::*;
use meshtube::Error;
use proptest::prelude::*;

fn small_net() -> Network {
    let mut model = NetworkModel::uniform(3, vec![(0, 1), (1, 2), (0, 2)]).with_loads(500.0, 400.0, 500.0, 400.0);
    model.constraint_center = vec![109.5; 3];
    model.line_inductance = vec![5e-3; 3];
    Network::new(model).unwrap()
}

fn scenario(kind: DisturbanceKind, seed: u64, t_end: f64) -> Scenario {
    let net = small_net();
    let gains = design_all(&net, &DesignOptions::uniform(3, 0.2, 5.0, 1.0)).unwrap().gains.unwrap();
    Scenario {
        schedule: ReferenceSchedule::new(vec![
            meshtube::control::Breakpoint { t: 0.0, z_hat: vec![0.0; 3] },
            meshtube::control::Breakpoint { t: 0.01, z_hat: vec![1.0, -0.5, 0.5] },
        ], 3)
        .unwrap(),
        net,
        gains,
        disturbance: DisturbanceProfile {
            kind,
            seed,
            dwell: 0.004,
            amplitude: 1.0,
        },
        sim: SimSettings {
            dt: 1e-5,
            t_end,
            record_stride: 10,
            initial: InitialCondition::Rated,
        },
    }
}

#[test]
fn harmonic_oscillator_energy_drift() {
    let mut sys = FnSystem(|_t: f64, x: &[f64]| Ok(vec![x[1], -x[0]]));
    let grid = TimeGrid::new(0.0, 100.0, 1e-3).unwrap();
    let end = integrate(&mut sys, &[1.0, 0.0], &grid, |_, _, _| Ok(())).unwrap();
    let energy = 0.5 * (end[0] * end[0] + end[1] * end[1]);
    assert!((energy - 0.5).abs() < 1e-9, "{energy}");
}

#[test]
fn rk4_is_fourth_order() {
    let err = |dt: f64| {
        let mut sys = FnSystem(|t: f64, x: &[f64]| Ok(vec![x[0] * t.cos()]));
        let grid = TimeGrid::new(0.0, 2.0, dt).unwrap();
        let end = integrate(&mut sys, &[1.0], &grid, |_, _, _| Ok(())).unwrap();
        (end[0] - 2.0f64.sin().exp()).abs()
    };
    let ratio = err(0.02) / err(0.01);
    assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
}

#[test]
fn observer_sees_every_grid_point() {
    let mut sys = FnSystem(|_t: f64, _x: &[f64]| Ok(vec![1.0]));
    let grid = TimeGrid::new(0.0, 1.0, 0.25).unwrap();
    let mut seen = Vec::new();
    integrate(&mut sys, &[0.0], &grid, |k, t, x| {
        seen.push((k, t, x[0]));
        Ok(())
    })
    .unwrap();
    assert_eq!(seen.len(), 5);
    assert_eq!(seen[4], (4, 1.0, 1.0));
}

#[test]
fn invalid_grids_rejected() {
    assert!(matches!(TimeGrid::new(0.0, 1.0, 0.0), Err(Error::TimeGrid(_))));
    assert!(matches!(TimeGrid::new(0.0, 1.0, -1e-3), Err(Error::TimeGrid(_))));
    assert!(matches!(TimeGrid::new(1.0, 0.0, 1e-3), Err(Error::TimeGrid(_))));
}

#[test]
fn zero_horizon_gives_header_only() {
    let (traj, report) = run_scenario(&scenario(DisturbanceKind::SquareWave, 1, 0.0)).unwrap();
    assert!(traj.is_empty());
    assert_eq!(report.steps, 0);
    assert!(report.min_barrier.iter().all(|b| (b - 0.2).abs() < 1e-12));
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&traj, &report, &scenario(DisturbanceKind::Zero, 0, 0.0).net.model, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn closed_loop_stays_in_safe_set() {
    for kind in [DisturbanceKind::SquareWave, DisturbanceKind::PiecewiseRandom, DisturbanceKind::Sinusoid] {
        let (traj, report) = run_scenario(&scenario(kind, 7, 0.03)).unwrap();
        assert_eq!(report.safe_set_exits, 0, "{kind:?}");
        assert_eq!(report.constraint_violations.count, 0, "{kind:?}");
        assert!(report.min_barrier.iter().all(|&b| b >= 0.0));
        assert!(report.max_abs_q_channel <= 1e-9);
        assert!(traj.states.iter().all(|s| s.sigma_d.iter().all(|x| x.abs() <= 1.0)));
        assert_eq!(traj.len(), 301);
        assert_eq!(traj.events, vec![0.01]);
    }
}

#[test]
fn runs_are_reproducible_and_seeds_matter() {
    let a = run_scenario(&scenario(DisturbanceKind::PiecewiseRandom, 3, 0.01)).unwrap();
    let b = run_scenario(&scenario(DisturbanceKind::PiecewiseRandom, 3, 0.01)).unwrap();
    let c = run_scenario(&scenario(DisturbanceKind::PiecewiseRandom, 4, 0.01)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0.disturbances, c.0.disturbances);
}

#[test]
fn outputs_round_trip() {
    let (traj, report) = run_scenario(&scenario(DisturbanceKind::SquareWave, 1, 0.005)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let net = small_net();
    let files = emit_outputs(&traj, &report, &net.model, dir.path()).unwrap();
    assert_eq!(files.len(), 2 + 8 * 3);
    let back: SimReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(back, report);
    let rows = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + traj.len() * 3);
    let barrier = std::fs::read_to_string(dir.path().join("plots/barrier2.dat")).unwrap();
    assert_eq!(barrier.lines().count(), traj.len());
}

#[test]
fn bad_profiles_rejected() {
    let net = small_net();
    let mut p = DisturbanceProfile::zero();
    p.kind = DisturbanceKind::SquareWave;
    p.dwell = 0.0;
    assert!(make_disturbance(&p, &net).is_err());
    p.dwell = 0.01;
    p.amplitude = 1.5;
    assert!(make_disturbance(&p, &net).is_err());
}

#[test]
fn model_comparison_agrees_for_uniform_references() {
    let mut s = scenario(DisturbanceKind::Zero, 0, 0.05);
    s.schedule = ReferenceSchedule::constant(vec![0.5; 3]);
    let r = compare_models(&s).unwrap();
    assert!(r.laplacian_current_gap < 1e-9, "{r:?}");
    assert!(r.transient_max_discrepancy.iter().all(|&x| x < 1e-3), "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disturbances_bounded_and_deterministic(
        seed in any::<u64>(),
        t in 0.0f64..10.0,
        amplitude in 0.0f64..=1.0,
        kind in prop_oneof![
            Just(DisturbanceKind::Zero),
            Just(DisturbanceKind::SquareWave),
            Just(DisturbanceKind::Sinusoid),
            Just(DisturbanceKind::PiecewiseRandom),
        ],
    ) {
        let net = small_net();
        let profile = DisturbanceProfile { kind, seed, dwell: 0.01, amplitude };
        let d = make_disturbance(&profile, &net).unwrap();
        let a = d.at(t);
        prop_assert!(a.within_bounds(&net));
        for i in 0..3 {
            prop_assert!(a.p[i].abs() <= amplitude * 500.0 + 1e-9);
        }
        prop_assert_eq!(&a, &make_disturbance(&profile, &net).unwrap().at(t));
    }

    #[test]
    fn random_disturbance_constant_within_dwell(seed in any::<u64>(), slot in 0u32..1000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let net = small_net();
        let profile = DisturbanceProfile { kind: DisturbanceKind::PiecewiseRandom, seed, dwell: 0.01, amplitude: 1.0 };
        let d = make_disturbance(&profile, &net).unwrap();
        let base = slot as f64 * 0.01;
        prop_assert_eq!(d.at(base + 0.001 + 0.008 * a), d.at(base + 0.001 + 0.008 * b));
    }
}
