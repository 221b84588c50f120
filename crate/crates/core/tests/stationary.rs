use ratchet_core::presets::*;
use ratchet_core::stationary::{solve_collaborative_detailed, solve_stationary_detailed};
use ratchet_core::*;

fn max_abs_diff(a: &GridFn, b: &GridFn) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn conjugate_rates_give_equal_wells_and_flat_detached_density() {
    for (sigma, kappa) in [(0.1, 1.0), (0.05, 2.0), (1.0, 1.0)] {
        let params = conjugate_instance(2001, sigma, kappa).unwrap();
        let sol = solve_stationary_detailed(&params).unwrap();
        assert!(sol.residual <= 1e-10);
        let pair = &sol.pair;
        assert!((pair.total_mass() - 1.0).abs() < 1e-10);
        let sum = GridFn::new(
            params.grid().clone(),
            pair.attached.values().iter().zip(pair.detached.values()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        for m in well_integrals(&sum, 2).unwrap() {
            assert!((m - 0.5).abs() < 1e-6, "sigma={sigma} mass={m}");
        }
        let d = &pair.detached;
        assert!(d.max() - d.min() < 1e-8, "P spread {}", d.max() - d.min());
        // p is proportional to the Boltzmann factor.
        let psi = params.potential.values().values();
        let ratio: Vec<f64> = pair
            .attached
            .values()
            .iter()
            .zip(psi)
            .map(|(p, s)| p * (kappa * s / sigma).exp())
            .collect();
        let (lo, hi) = ratio.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        assert!((hi - lo) / hi < 1e-8);

        let renorm = renormalize(pair, &params).unwrap();
        assert!(renorm.detached.max() - renorm.detached.min() < 1e-8);
    }
}

#[test]
fn symmetric_instance_gives_symmetric_densities() {
    for params in [symmetric_instance(2, 2001).unwrap(), symmetric_bumps_instance(2, 0.25, 0.1, 2001).unwrap()] {
        let pair = solve_stationary(&params).unwrap();
        let mirror = pair.reflected();
        assert!(max_abs_diff(&pair.attached, &mirror.attached) < 1e-8);
        assert!(max_abs_diff(&pair.detached, &mirror.detached) < 1e-8);
        let (ep, np) = stationary::balance_integrals(&pair, &params).unwrap();
        assert!((ep - np).abs() <= 1e-10);
        let r = WellMassReport::new(&pair, 2).unwrap();
        assert_eq!(r.direction(), Direction::Indeterminate);
    }
}

#[test]
fn fixture_shows_left_chains() {
    let params = transport_fixture(2001).unwrap();
    let sol = solve_stationary_detailed(&params).unwrap();
    assert!(sol.residual <= 1e-10 && sol.dropped_row_residual <= 1e-10);
    assert!(sol.pair.min_value() >= -1e-10);
    let r = WellMassReport::new(&sol.pair, 2).unwrap();
    assert!(r.chain_p && r.chain_big_p && r.shift_big_p_ok, "{r:?}");
    assert!(r.min_margin > 1e-6);
    assert!(!r.reversed());
    let total: f64 = r.p_hat.iter().chain(&r.big_p_hat).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(transport_verdict(&params).unwrap().direction, Direction::Left);
}

#[test]
fn reflection_reverses_chains() {
    let params = transport_fixture(2001).unwrap();
    let pair = solve_stationary(&params).unwrap();
    let mirrored = solve_stationary(&params.reflected()).unwrap();
    let expect = pair.reflected();
    assert!(max_abs_diff(&mirrored.attached, &expect.attached) < 1e-8);
    assert!(max_abs_diff(&mirrored.detached, &expect.detached) < 1e-8);
    let r = WellMassReport::new(&mirrored, 2).unwrap();
    assert!(r.reversed() && !r.forward());
    assert_eq!(r.direction(), Direction::Right);
}

#[test]
fn renormalized_pair_has_unit_exchange_integrals() {
    let params = transport_fixture(2001).unwrap();
    let pair = solve_stationary(&params).unwrap();
    let renorm = renormalize(&pair, &params).unwrap();
    assert_eq!(renorm.normalization, Normalization::Renormalized);
    let (ep, np) = stationary::balance_integrals(&renorm, &params).unwrap();
    assert!((ep - 1.0).abs() < 1e-9 && (np - 1.0).abs() < 1e-9);
    assert!(renormalize(&renorm, &params).is_err());
}

#[test]
fn collaborative_with_flat_second_potential_matches_plain_solver() {
    let params = transport_fixture(2001).unwrap();
    let plain = solve_stationary(&params).unwrap();
    let flat = GridFn::constant(params.grid().clone(), 0.0).unwrap();
    let collab = solve_collaborative(&params.clone().with_psi_alt(flat).unwrap()).unwrap();
    assert!(max_abs_diff(&plain.attached, &collab.attached) < 1e-10);
    assert!(max_abs_diff(&plain.detached, &collab.detached) < 1e-10);
    assert!(solve_stationary(&params.clone().with_psi_alt(GridFn::constant(params.grid().clone(), 0.0).unwrap()).unwrap()).is_err());
    assert!(solve_collaborative(&params).is_err());
}

#[test]
fn collaborative_swap_symmetry() {
    let base = transport_fixture(2001).unwrap();
    let mut params = base.clone();
    params.varsigma = params.sigma;
    params.eta = params.nu.clone();
    let params = params.with_psi_alt(base.potential.values().clone()).unwrap();
    let pair = solve_collaborative(&params).unwrap();
    assert!(max_abs_diff(&pair.attached, &pair.detached) < 1e-8);
}

#[test]
fn collaborative_conserves_mass_for_generic_second_potential() {
    let params = transport_fixture(2001).unwrap();
    let alt = GridFn::from_fn(params.grid().clone(), |x| 0.3 * (4.0 * std::f64::consts::PI * x).cos()).unwrap();
    let sol = solve_collaborative_detailed(&params.with_psi_alt(alt).unwrap()).unwrap();
    assert!((sol.pair.total_mass() - 1.0).abs() < 1e-10);
    assert!(sol.residual <= 1e-10);
}

#[test]
fn verdict_examples() {
    let g = Grid::unit(2001).unwrap();
    let constant = RatchetParams::new(
        0.1,
        1.0,
        1.0,
        make_smoothed_sawtooth(2, 0.2, 1.0, &g).unwrap(),
        RateProfile::constant(&g, 2, 1.0).unwrap(),
        RateProfile::constant(&g, 2, 1.0).unwrap(),
    )
    .unwrap();
    let v = transport_verdict(&constant).unwrap();
    assert!((v.s_mean - 0.25).abs() < 1e-6);
    assert_eq!(v.direction, Direction::Left);

    let sym = symmetric_bumps_instance(2, 0.25, 0.08, 2001).unwrap();
    assert_eq!(transport_verdict(&sym).unwrap().direction, Direction::Indeterminate);

    let right = PeakedInstance { a: 0.4, ..PeakedInstance::default() }.build(2001).unwrap();
    let v = transport_verdict(&right).unwrap();
    assert_eq!(v.direction, Direction::Right);
    assert!(v.margin < 0.0);
}
