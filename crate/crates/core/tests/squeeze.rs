use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratchet_core::presets::{symmetric_instance, PeakedInstance};
use ratchet_core::*;

fn constant_nu(k: usize, a: f64, nu: f64, n: usize) -> RatchetParams {
    let g = Grid::unit(n).unwrap();
    RatchetParams::new(
        0.1,
        1.0,
        1.0,
        make_smoothed_sawtooth(k, a, 1.0, &g).unwrap(),
        RateProfile::constant(&g, k, nu).unwrap(),
        RateProfile::constant(&g, k, 1.0).unwrap(),
    )
    .unwrap()
}

fn fixture() -> RatchetParams {
    PeakedInstance::default().build(2001).unwrap()
}

/// Left null vector of `P - I` by dense elimination with partial pivoting,
/// replacing the last equation with the normalization.
fn dense_stationary(p: &TransitionMatrix) -> Vec<f64> {
    let k = p.k();
    let mut m = vec![vec![0.0; k + 1]; k];
    for j in 0..k {
        for i in 0..k {
            m[j][i] = p.get(i, j) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..k {
        m[k - 1][i] = 1.0;
    }
    m[k - 1][k] = 1.0;
    for c in 0..k {
        let piv = (c..k).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = m[r][c] / m[c][c];
                for j in c..=k {
                    m[r][j] -= f * m[c][j];
                }
            }
        }
    }
    (0..k).map(|i| m[i][k] / m[i][i]).collect()
}

#[test]
fn basis_has_unit_weighted_integral_and_is_unimodal() {
    for params in [fixture(), constant_nu(3, 0.1, 5.0, 2101)] {
        let basis = green_basis(&params).unwrap();
        for (q, &j) in basis.iter().zip(&params.potential.minima_nodes()) {
            let total = q.mul(params.nu.samples()).unwrap().integral();
            assert!((total - 1.0).abs() < 1e-8);
            let v = q.values();
            assert!(v.iter().all(|&x| x > 0.0));
            assert!(v[..=j].windows(2).all(|w| w[1] >= w[0]));
            assert!(v[j..].windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn constant_rate_basis_is_mirror_symmetric() {
    let params = constant_nu(2, 0.25, 3.0, 2001);
    let basis = green_basis(&params).unwrap();
    let mirrored = basis[0].reflected();
    for (a, b) in basis[1].values().iter().zip(mirrored.values()) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn transition_rows_are_stochastic() {
    let params = constant_nu(3, 0.1, 5.0, 2101);
    let p = transition_matrix(&green_basis(&params).unwrap(), &params.nu, 3).unwrap();
    for s in p.row_sums() {
        assert!((s - 1.0).abs() < 1e-10);
    }
    for i in 0..3 {
        assert!(p.row(i).iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

#[test]
fn symmetric_configuration_has_symmetric_matrix_and_equal_weights() {
    let sol = squeeze_solution(&symmetric_instance(2, 2001).unwrap()).unwrap();
    let p = &sol.matrix;
    for i in 0..2 {
        for j in 0..2 {
            assert!((p.get(i, j) - p.get(1 - i, 1 - j)).abs() < 1e-10);
        }
    }
    assert!((sol.xi[0] - 0.5).abs() < 1e-10 && (sol.xi[1] - 0.5).abs() < 1e-10);
    assert!(sol.gamma.abs() < 1e-8);
    assert!(sol.q_fixed_gap.abs() < 1e-8);
}

#[test]
fn identical_rows_give_that_row() {
    let r = [0.2, 0.5, 0.3];
    let p = TransitionMatrix::new(3, r.repeat(3)).unwrap();
    let xi = perron_weights(&p).unwrap();
    for (a, b) in xi.iter().zip(r) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn rejects_non_stochastic_matrix() {
    assert!(TransitionMatrix::new(2, vec![0.5, 0.6, 0.5, 0.5]).is_err());
    assert!(TransitionMatrix::new(2, vec![1.0, 0.0, 0.5, 0.5]).is_err());
}

#[test]
fn asymmetric_three_wells_weights_decrease() {
    let params = PeakedInstance {
        k: 3,
        a: 0.1,
        s_star: 0.2,
        ..PeakedInstance::default()
    }
    .build(aligned_node_count(3, 2001))
    .unwrap();
    let v = transport_verdict(&params).unwrap();
    assert!(v.s_mean > params.a());
    let sol = squeeze_solution(&params).unwrap();
    assert!(sol.xi[0] > sol.xi[1] && sol.xi[1] > sol.xi[2], "{:?}", sol.xi);
    let dense = dense_stationary(&sol.matrix);
    for (a, b) in sol.xi.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn fixture_satisfies_shift_bound() {
    let sol = squeeze_solution(&fixture()).unwrap();
    assert!(sol.gamma > 0.0);
    assert!(sol.m_const > 0.0);
    assert!(sol.shift_bound_holds(1e-8), "{} < {} * {}", sol.q_fixed_gap, sol.m_const, sol.gamma);
    assert!(sol.residual < 1e-8);
    assert!((sol.xi.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    let total = sol.q_fixed.mul(fixture().nu.samples()).unwrap().integral();
    assert!((total - 1.0).abs() < 1e-10);
    assert!(sol.q_fixed.min() > 0.0);
}

#[test]
fn reflection_reverses_fixed_point() {
    let params = fixture();
    let a = squeeze_solution(&params).unwrap();
    let b = squeeze_solution(&params.reflected()).unwrap();
    for (x, y) in b.q_fixed.values().iter().zip(a.q_fixed.reflected().values()) {
        assert!((x - y).abs() < 1e-8);
    }
    assert!((a.xi[0] - b.xi[1]).abs() < 1e-10);
}

#[test]
fn perron_vector_is_unique_across_restarts() {
    let params = PeakedInstance {
        k: 3,
        a: 0.1,
        s_star: 0.2,
        ..PeakedInstance::default()
    }
    .build(aligned_node_count(3, 1001))
    .unwrap();
    let sol = squeeze_solution(&params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let init: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0)).collect();
        let xi = perron_weights_from(&sol.matrix, &init).unwrap();
        for (a, b) in xi.iter().zip(&sol.xi) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn gap_grows_as_minimum_moves_left() {
    let gaps: Vec<f64> = [0.3, 0.25, 0.2, 0.15, 0.1]
        .iter()
        .map(|&a| {
            let p = PeakedInstance { a, ..PeakedInstance::default() }.build(2001).unwrap();
            squeeze_solution(&p).unwrap().gamma
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
    assert!(gaps[0] > 0.0);
}
