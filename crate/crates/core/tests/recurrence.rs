use chflow::dynamics::SolverConfig;
use chflow::grid::ScalarField;
use chflow::ops::l2_norm;
use chflow::presets::Preset;
use chflow::recurrence::{
    audit_cover, build_cover, closest_return_curve, detect_returns, enstrophy_confined, sample_trajectory,
    RecurrenceConfig, Snapshot, SnapshotStore,
};
use chflow::{ChannelGrid, VectorField};
use proptest::prelude::*;

fn run(preset: Preset, grid: ChannelGrid, period: f64, samples: usize) -> SnapshotStore {
    let init = preset.initial_condition(&grid).unwrap();
    let cfg = RecurrenceConfig { period, samples, delta: 1.0 };
    let traj = sample_trajectory(grid, &init, &cfg, &SolverConfig::default(), &mut ()).unwrap();
    assert!(traj.abort.is_none());
    traj.store
}

#[test]
fn single_sample_is_initial_state() {
    let g = ChannelGrid::reference(16, 17).unwrap();
    let store = run(Preset::Eigenstate, g, 1.0, 1);
    assert_eq!(store.len(), 1);
    assert_eq!(store.samples()[0].t, 0.0);
}

#[test]
fn steady_shear_samples_coincide() {
    let g = ChannelGrid::reference(16, 33).unwrap();
    let store = run(Preset::Shear, g, 0.2, 50);
    assert_eq!(store.len(), 50);
    let scale = l2_norm(&store.samples()[0].velocity);
    for p in closest_return_curve(&store, 0).unwrap() {
        assert!(p.distance <= 1e-6 * scale);
    }
    let net = build_cover(&store, 0.01 * scale).unwrap();
    assert_eq!(net.centers.len(), 1);
    assert_eq!(detect_returns(&net, 50).unwrap()[0].visits.len(), 50);
    assert!(enstrophy_confined(&store, 1e-6));
}

#[test]
fn traveling_wave_returns_every_other_sample() {
    let g = ChannelGrid::reference(32, 33).unwrap();
    let c = 0.8;
    let store = run(Preset::TravelingWave { c }, g, g.lx / (2.0 * c), 12);
    let v0 = store.samples()[0].full_velocity();
    let scale = l2_norm(&v0);
    let curve = closest_return_curve(&store, 0).unwrap();
    for p in &curve {
        if p.m % 2 == 0 {
            assert!(p.distance <= 1e-3 * scale, "m = {}: {}", p.m, p.distance);
        } else {
            assert!(p.distance > 0.5 * scale);
        }
    }
    let net = build_cover(&store, 0.01 * scale).unwrap();
    let returns = detect_returns(&net, 2).unwrap();
    assert_eq!(returns[0].visits, vec![0, 2, 4, 6, 8, 10]);
}

#[test]
fn aborted_run_keeps_partial_store() {
    let g = ChannelGrid::reference(16, 17).unwrap();
    let init = Preset::Random { seed: 1, max_mode: 3, amplitude: 50.0 }.initial_condition(&g).unwrap();
    let cfg = RecurrenceConfig { period: 0.5, samples: 6, delta: 1.0 };
    // A fixed step far above the stability limit blows the run up after the first samples.
    let solver = SolverConfig { fixed_dt: Some(0.45), ..Default::default() };
    let traj = sample_trajectory(g, &init, &cfg, &solver, &mut ()).unwrap();
    assert!(traj.abort.is_some());
    assert!(!traj.store.is_empty() && traj.store.len() < 6);
}

fn store_from(points: &[(f64, f64)]) -> SnapshotStore {
    let g = ChannelGrid::reference(4, 3).unwrap();
    let mut store = SnapshotStore::new(g);
    for (m, &(a, b)) in points.iter().enumerate() {
        let u = ScalarField::from_fn(g, |x, _| a * x.sin()).unwrap();
        let v = ScalarField::from_fn(g, |x, _| b * x.cos()).unwrap();
        let velocity = VectorField::new(u, v).unwrap();
        store.push(Snapshot { m, t: m as f64, velocity, mean_u: 0.0, energy: 0.0, enstrophy: 0.0 }).unwrap();
    }
    store
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cover_invariants(points in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..60), delta in 0.1f64..5.0) {
        let store = store_from(&points);
        let net = build_cover(&store, delta).unwrap();
        let audit = audit_cover(&store, &net).unwrap();
        prop_assert!(audit.passes(delta));
        prop_assert!(net.pigeonhole_holds());
        let k = net.pigeonhole_bound();
        if k >= 2 {
            prop_assert!(!detect_returns(&net, k).unwrap().is_empty());
        }
        prop_assert_eq!(net.centers.iter().map(|c| c.visits.len()).sum::<usize>(), points.len());
        prop_assert_eq!(build_cover(&store, delta).unwrap(), net);
    }
}
