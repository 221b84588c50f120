use ratchet_core::presets::*;
use ratchet_core::*;

fn small_lattice() -> SweepLattice {
    SweepLattice::new(vec![1e-1, 1e-2, 1e-3], vec![1.0, 20.0]).unwrap()
}

#[test]
fn left_instance_has_forward_points_only() {
    let r = run_sweep(&transport_fixture(1001).unwrap(), &small_lattice()).unwrap();
    assert_eq!(r.points.len(), 6);
    let first = r.first(Direction::Left).unwrap();
    assert_eq!((first.sigma, first.kappa), (0.1, 1.0));
    assert!(r.first(Direction::Right).is_none());
    assert_eq!(r.direction(), Direction::Left);
}

#[test]
fn right_instance_satisfies_only_reversed_chains() {
    let params = PeakedInstance { a: 0.4, ..PeakedInstance::default() }.build(1001).unwrap();
    let r = run_sweep(&params, &small_lattice()).unwrap();
    assert!(r.first(Direction::Left).is_none());
    assert!(r.first(Direction::Right).is_some());
    assert!(r.points.iter().all(|p| !p.outcome.as_ref().unwrap().forward()));
}

#[test]
fn symmetric_instance_has_no_satisfying_point() {
    let r = run_sweep(&symmetric_instance(2, 1001).unwrap(), &small_lattice()).unwrap();
    assert_eq!(r.direction(), Direction::Indeterminate);
    assert!(r.first(Direction::Left).is_none() && r.first(Direction::Right).is_none());
    assert!(r.best_margin().unwrap().abs() < 1e-8);
}
