use meshtube::certify::*;
use meshtube::control::{design_all, DesignOptions, GainSet, ReferenceSchedule};
use meshtube::dynamics::{
    cascade_rhs, line_equilibrium, full_rhs, rated_vector, CascadeState, PowerDemand, TrueState,
};
use meshtube::netmodel::{Network, NetworkModel};
use meshtube::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn sec7_like(n: usize) -> Network {
    let edges = (0..n - 1).map(|i| (i, i + 1)).chain((0..n.saturating_sub(2)).map(|i| (i, i + 2))).collect();
    let mut model = NetworkModel::uniform(n, edges).with_loads(500.0, 400.0, 500.0, 400.0);
    model.constraint_center = vec![109.5; n];
    model.line_inductance = vec![5e-3; model.edges.len()];
    Network::new(model).unwrap()
}

fn designed(net: &Network) -> GainSet {
    design_all(net, &DesignOptions::uniform(net.n(), 0.2, 5.0, 1.0)).unwrap().gains.unwrap()
}

#[test]
fn hurwitz_examples() {
    let m = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -1.0, 0.0]);
    let c = hurwitz_check(&m).unwrap();
    assert!(c.pass);
    assert!((c.margin - 0.5).abs() < 1e-12);
    let w = &c.witness.unwrap().values;
    assert!((w["im"].abs() - 0.75f64.sqrt()).abs() < 1e-12);

    let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let c = hurwitz_check(&rot).unwrap();
    assert!(!c.pass);
    assert!(c.margin.abs() < 1e-14);

    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, -3.0]));
    let c = hurwitz_check(&d).unwrap();
    assert!(c.pass);
    assert!((c.margin - 1.0).abs() < 1e-14);
}

#[test]
fn single_node_unloaded_jacobian() {
    let net = Network::new(NetworkModel::uniform(1, vec![])).unwrap();
    let gains = GainSet::uniform(1, 5.0, 10.0, 50.0, 0.2, 1.0);
    let eq = solve_equilibrium(&net, &gains, &[2.0]).unwrap();
    assert!((eq.sigma_hat_d[0] - 10.0 * 2.0 / 50.0).abs() < 1e-12);
    let j = build_jacobian(&net, &gains, &eq).unwrap();
    let c = net.model.capacitance[0];
    assert!((j[(0, 0)] + 10.0 / c).abs() < 1e-9);
    assert!((j[(0, 1)] - 50.0 / c).abs() < 1e-9);
    assert!((j[(1, 0)] + 50.0 * (1.0 - 0.16)).abs() < 1e-12);
    assert_eq!(j[(1, 1)], 0.0);
}

#[test]
fn origin_equilibrium() {
    let net = Network::new(NetworkModel::uniform(1, vec![])).unwrap();
    let gains = GainSet::uniform(1, 5.0, 10.0, 50.0, 0.2, 1.0);
    let eq = solve_equilibrium(&net, &gains, &[0.0]).unwrap();
    assert_eq!(eq.z_hat_d, vec![0.0]);
    assert_eq!(eq.sigma_hat_d, vec![0.0]);
}

#[test]
fn jacobian_blocks_decouple() {
    let net = sec7_like(4);
    let gains = designed(&net);
    let eq = solve_equilibrium(&net, &gains, &[0.5, -1.0, 2.0, 1.0]).unwrap();
    let j = build_jacobian(&net, &gains, &eq).unwrap();
    let n = 4;
    for r in 2 * n..4 * n {
        for c in 0..2 * n {
            assert_eq!(j[(r, c)], 0.0);
        }
    }
    let mut all: Vec<f64> = eigenvalues(&j).unwrap().iter().map(|e| e.0).collect();
    let mut blocks: Vec<f64> = eigenvalues(&j.view((0, 0), (2 * n, 2 * n)).into_owned())
        .unwrap()
        .into_iter()
        .chain(eigenvalues(&j.view((2 * n, 2 * n), (2 * n, 2 * n)).into_owned()).unwrap())
        .map(|e| e.0)
        .collect();
    all.sort_by(f64::total_cmp);
    blocks.sort_by(f64::total_cmp);
    for (a, b) in all.iter().zip(&blocks) {
        assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
    }
}

#[test]
fn saturated_jacobian_rejected_only_by_interior_check() {
    let net = sec7_like(3);
    let gains = designed(&net);
    match solve_equilibrium(&net, &gains, &[0.0, 0.0, 6.0]) {
        Err(Error::SaturatedEquilibrium { nodes, point }) => {
            assert_eq!(nodes, vec![2]);
            assert!((point.sigma_hat_d[2] - 1.0).abs() < 1e-15);
            assert!(point.z_hat_d[2] < 6.0, "{}", point.z_hat_d[2]);
            assert!(build_jacobian(&net, &gains, &point).is_err());
        }
        other => panic!("expected saturation, got {other:?}"),
    }
}

#[test]
fn equilibrium_residual_through_full_model() {
    // with uniform references the Laplacian currents vanish and coincide with
    // the exact line equilibrium, so the full model must be at rest too
    let net = sec7_like(5);
    let gains = designed(&net);
    let refs = vec![1.5; 5];
    let eq = solve_equilibrium(&net, &gains, &refs).unwrap();
    let n = 5;
    let mut s = CascadeState::rest(n);
    s.z_tilde[..n].copy_from_slice(&eq.z_hat_d);
    s.sigma_d.clone_from(&eq.sigma_hat_d);
    let v = s.nominal(&rated_vector(&net));
    let i_inj = meshtube::control::nominal_injection(&net, &gains, &s.z_tilde, &s.sigma_d, &s.sigma_q).unwrap();
    let d = full_rhs(
        &net,
        &TrueState {
            i_line: line_equilibrium(&net, &v),
            v,
        },
        &i_inj,
        &PowerDemand::nominal(&net),
    )
    .unwrap();
    let worst = d.v.iter().chain(&d.i_line).fold(0.0f64, |a, x| a.max(x.abs()));
    assert!(worst * net.model.capacitance[0] < 1e-6, "{worst}");

    let rhs = cascade_rhs(&net, &s, &gains, &refs, &PowerDemand::zeros(n)).unwrap();
    assert!(rhs.sigma_d.iter().all(|x| x.abs() < 1e-9));
}

#[test]
fn zero_error_gain_fails_boundary_check() {
    let net = sec7_like(3);
    let mut gains = designed(&net);
    gains.k = vec![1e-9; 3];
    let c = boundary_invariance_check(&net, &gains, &BoundaryOptions { n_boundary: 90, n_disturbance: 2, ..Default::default() }).unwrap();
    assert!(!c.pass);
    assert!(c.witness.unwrap().node.is_some());
}

#[test]
fn halved_gain_is_reported_by_name() {
    let net = sec7_like(3);
    let mut gains = designed(&net);
    gains.k.iter_mut().for_each(|k| *k *= 0.05);
    let opts = CertifyOptions {
        boundary: BoundaryOptions { n_boundary: 120, n_disturbance: 4, ..Default::default() },
    };
    let bundle = certify_all(&net, &gains, &ReferenceSchedule::constant(vec![0.0; 3]), &opts).unwrap();
    assert!(!bundle.pass);
    let failing: Vec<&str> = bundle.certificates.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    assert_eq!(failing, vec!["boundary_invariance"]);
    assert!(bundle.region_of_attraction.is_none());
}

#[test]
fn passive_network_certifies() {
    let mut model = NetworkModel::uniform(3, vec![(0, 1), (1, 2), (0, 2)]);
    model.constraint_center = vec![109.5; 3];
    let net = Network::new(model).unwrap();
    let gains = GainSet::uniform(3, 2.0, 4.0, 20.0, 0.2, 1.0);
    let opts = CertifyOptions {
        boundary: BoundaryOptions { n_boundary: 72, n_disturbance: 2, ..Default::default() },
    };
    let bundle = certify_all(&net, &gains, &ReferenceSchedule::constant(vec![0.1, -0.1, 0.0]), &opts).unwrap();
    assert!(bundle.pass, "{:#?}", bundle.certificates);
    assert_eq!(bundle.region_of_attraction.as_ref().unwrap().len(), 3);
    let json = serde_json::to_string(&bundle).unwrap();
    let back: CertificateBundle = serde_json::from_str(&json).unwrap();
    assert_eq!(back, bundle);
}

#[test]
fn sec7_gains_pass_at_rated_voltage() {
    let net = sec7_like(2);
    let gains = designed(&net);
    let c = boundary_invariance_check(&net, &gains, &BoundaryOptions { n_boundary: 180, n_disturbance: 4, ..Default::default() }).unwrap();
    assert!(c.pass && c.margin > 0.0);
}

fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hurwitz_margin_similarity_invariant(seed in 0u64..1000, shift in -3.0f64..3.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 5;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) - DMatrix::identity(n, n) * shift;
        let q = random_orthogonal(n, seed + 1);
        let b = q.transpose() * &a * &q;
        let ma = hurwitz_check(&a).unwrap().margin;
        let mb = hurwitz_check(&b).unwrap().margin;
        prop_assert!((ma - mb).abs() <= 1e-8);
    }

    #[test]
    fn larger_disturbance_never_increases_margin(extra in 0.0f64..400.0, node_dp in 0.0f64..300.0) {
        let base = {
            let mut m = NetworkModel::uniform(2, vec![(0, 1)]).with_loads(300.0, 200.0, node_dp, 100.0);
            m.constraint_center = vec![109.5; 2];
            Network::new(m).unwrap()
        };
        let bigger = {
            let mut m = base.model.clone();
            m.dp_max = vec![node_dp + extra; 2];
            m.dq_max = vec![100.0 + extra; 2];
            Network::new(m).unwrap()
        };
        let gains = GainSet::uniform(2, 12.0, 10.0, 50.0, 0.2, 1.0);
        let opts = BoundaryOptions { n_boundary: 48, n_disturbance: 0, z_samples: 3, seed: 0 };
        let a = boundary_invariance_check(&base, &gains, &opts).unwrap().margin;
        let b = boundary_invariance_check(&bigger, &gains, &opts).unwrap().margin;
        prop_assert!(b <= a + 1e-9 * a.abs());
    }
}
