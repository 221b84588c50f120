//! Acceptance suite: twelve numbered checks with runtime limits, shared by
//! `ratchet-lab selftest` and the `acceptance` test target.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratchet_core::particles::{pooled_group_deviation, DEFAULT_BINS};
use ratchet_core::presets::{
    conjugate_instance, symmetric_bumps_instance, symmetric_instance, transport_fixture,
    PeakedInstance,
};
use ratchet_core::{
    aligned_node_count, compare_directions, compare_histogram, diffusive_mean, peaked_profile,
    reflection_check, run_sweep, run_to_stationary, simulate_particles, solve_sl_neumann,
    solve_stationary, squeeze_solution, transport_verdict, well_integrals, Direction,
    FlashingSchedule, Grid, GridFn, Occupancy, RatchetError, RatchetParams, SlOperator,
    SweepLattice,
};

type Check = Result<(bool, String), RatchetError>;

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub limit: Duration,
    run: fn() -> Check,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {}: {} ({:.2} s, limit {} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs_f64(),
        )
    }
}

impl Criterion {
    /// Runs the check; an error or an overrun of the time limit is a failure.
    pub fn evaluate(&self) -> Outcome {
        let start = Instant::now();
        let result = (self.run)();
        let elapsed = start.elapsed();
        let (mut pass, mut detail) = match result {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if elapsed > self.limit {
            pass = false;
            detail.push_str("; time limit exceeded");
        }
        Outcome {
            id: self.id,
            name: self.name,
            pass,
            detail,
            elapsed,
            limit: self.limit,
        }
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, name: "diffusive-mean symmetry", limit: Duration::from_millis(100), run: symmetry },
        Criterion { id: 2, name: "diffusive-mean bias", limit: Duration::from_millis(500), run: bias },
        Criterion { id: 3, name: "delta limit", limit: secs(1), run: delta_limit },
        Criterion { id: 4, name: "ergodic transition matrix", limit: secs(5), run: ergodic_matrix },
        Criterion { id: 5, name: "squeezing gap", limit: secs(2), run: squeezing_gap },
        Criterion { id: 6, name: "conjugate rates", limit: secs(2), run: conjugate_rates },
        Criterion { id: 7, name: "sweep chains", limit: secs(60), run: sweep_chains },
        Criterion { id: 8, name: "verdict consistency", limit: secs(600), run: verdict_consistency },
        Criterion { id: 9, name: "dynamic-static consistency", limit: secs(60), run: dynamic_static },
        Criterion { id: 10, name: "Monte Carlo oracle", limit: secs(300), run: monte_carlo },
        Criterion { id: 11, name: "model disagreement", limit: secs(120), run: model_disagreement },
        Criterion { id: 12, name: "discretization convergence", limit: secs(60), run: convergence },
    ]
}

/// Evaluates the criteria whose ids are listed (all when `only` is empty),
/// calling `report` after each one.
pub fn run_suite(only: &[usize], mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    criteria()
        .into_iter()
        .filter(|c| only.is_empty() || only.contains(&c.id))
        .map(|c| {
            let o = c.evaluate();
            report(&o);
            o
        })
        .collect()
}

fn unit_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<GridFn, RatchetError> {
    GridFn::from_fn(Grid::unit(n)?, f)
}

fn symmetry() -> Check {
    let s = diffusive_mean(&unit_fn(2001, |_| 1.0)?, 1.0)?.s;
    Ok(((s - 0.5).abs() <= 1e-6, format!("s = {s:.10}")))
}

fn bias() -> Check {
    let (s, s_tilde) = reflection_check(&unit_fn(2001, |x| 1.0 + x)?, 1.0)?;
    let defect = s + s_tilde - 1.0;
    Ok((
        s > 0.5 + 1e-4 && defect.abs() <= 1e-8,
        format!("s = {s:.8}, s + s~ - 1 = {defect:.2e}"),
    ))
}

fn delta_limit() -> Check {
    let grid = Grid::unit(2001)?;
    let mut errors = Vec::new();
    for w in [0.05, 0.02, 0.01] {
        let phi = peaked_profile(&grid, 0.7, w, 0.01, 1.0)?;
        errors.push((diffusive_mean(&phi, 1.0)?.s - 0.7).abs());
    }
    let decreasing = errors.windows(2).all(|p| p[1] < p[0]);
    let last = errors[errors.len() - 1];
    Ok((
        decreasing && last < 0.01,
        format!("|s - 0.7| = {:.3e}, {:.3e}, {:.3e}", errors[0], errors[1], errors[2]),
    ))
}

/// A randomized admissible instance: sawtooth with a random minimum and a
/// single active site, all other scalars drawn from moderate ranges.
fn random_instance(rng: &mut ChaCha8Rng) -> Result<RatchetParams, RatchetError> {
    let k = rng.random_range(2..=4usize);
    let period = 1.0 / k as f64;
    let inst = PeakedInstance {
        k,
        a: period * rng.random_range(0.1..0.9),
        depth: rng.random_range(0.5..2.0),
        s_star: period * rng.random_range(0.1..0.9),
        width: period * rng.random_range(0.01..0.05),
        base: rng.random_range(0.05..0.5),
        mass: rng.random_range(0.5..2.0),
        eta: rng.random_range(0.5..2.0),
        sigma: rng.random_range(0.01..0.2),
        varsigma: rng.random_range(0.3..3.0),
        kappa: rng.random_range(0.5..5.0),
    };
    inst.build(aligned_node_count(k, 2001))
}

fn ergodic_matrix() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_sum, mut min_entry) = (0.0f64, f64::INFINITY);
    for _ in 0..10 {
        let m = squeeze_solution(&random_instance(&mut rng)?)?.matrix;
        for s in m.row_sums() {
            worst_sum = worst_sum.max((s - 1.0).abs());
        }
        for i in 0..m.k() {
            min_entry = m.row(i).iter().copied().fold(min_entry, f64::min);
        }
    }
    Ok((
        worst_sum <= 1e-10 && min_entry > 0.0,
        format!("max |row sum - 1| = {worst_sum:.2e}, min entry = {min_entry:.3e}"),
    ))
}

fn squeezing_gap() -> Check {
    let f = squeeze_solution(&transport_fixture(2001)?)?;
    let sym = squeeze_solution(&symmetric_instance(2, 2001)?)?;
    let bound = f.m_const * f.gamma;
    Ok((
        f.gamma > 0.0 && f.shift_bound_holds(1e-8) && sym.q_fixed_gap.abs() <= 1e-8,
        format!(
            "gamma = {:.4e}, min[Q(x) - Q(x+1/2)] = {:.4e} >= M gamma = {bound:.4e}; symmetric gap = {:.1e}",
            f.gamma, f.q_fixed_gap, sym.q_fixed_gap
        ),
    ))
}

fn conjugate_rates() -> Check {
    let params = conjugate_instance(2001, 0.1, 1.0)?;
    let pair = solve_stationary(&params)?;
    let k = params.k();
    let total = GridFn::new(
        pair.grid().clone(),
        pair.attached
            .values()
            .iter()
            .zip(pair.detached.values())
            .map(|(p, q)| p + q)
            .collect(),
    )?;
    let wells = well_integrals(&total, k)?;
    let well_err = wells
        .iter()
        .map(|w| (w - 1.0 / k as f64).abs())
        .fold(0.0, f64::max);
    let spread = pair.detached.max() - pair.detached.min();
    Ok((
        well_err <= 1e-6 && spread <= 1e-8,
        format!("max |well - 1/k| = {well_err:.2e}, max P - min P = {spread:.2e}"),
    ))
}

fn sweep_chains() -> Check {
    let params = transport_fixture(2001)?;
    let lattice = SweepLattice::default();
    let fwd = run_sweep(&params, &lattice)?;
    let rev = run_sweep(&params.reflected(), &lattice)?;
    let first = fwd.first(Direction::Left);
    let mut mirrored = 0;
    let mut all_reverse = true;
    for (f, r) in fwd.points.iter().zip(&rev.points) {
        if let (Ok(f), Ok(r)) = (&f.outcome, &r.outcome) {
            let ok = r.chain_p_rev == f.chain_p
                && r.chain_big_p_rev == f.chain_big_p
                && r.shift_big_p_rev == f.shift_big_p_ok
                && !(f.forward() && r.forward());
            all_reverse &= ok;
            mirrored += 1;
        }
    }
    let rev_has_reversed = rev.first(Direction::Right).is_some() && rev.first(Direction::Left).is_none();
    let detail = match first {
        Some(p) => format!(
            "first pair sigma = {}, kappa = {}; {mirrored} mirrored points reversed: {all_reverse}",
            p.sigma, p.kappa
        ),
        None => format!("no satisfying pair; best margin {:?}", fwd.best_margin()),
    };
    Ok((
        first.is_some() && all_reverse && rev_has_reversed && mirrored == lattice.points().len(),
        detail,
    ))
}

fn verdict_consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let lattice = SweepLattice::default();
    let (mut found, mut agree, mut drawn) = (0, 0, 0);
    let mut mismatches = Vec::new();
    while found < 20 && drawn < 200 {
        drawn += 1;
        let params = random_instance(&mut rng)?;
        let chains = run_sweep(&params, &lattice)?.direction();
        if chains == Direction::Indeterminate {
            continue;
        }
        found += 1;
        let margin = transport_verdict(&params)?.margin;
        let predicted = if margin > 0.0 { Direction::Left } else { Direction::Right };
        if chains == predicted {
            agree += 1;
        } else {
            mismatches.push(format!("S - a = {margin:.3e}"));
        }
    }
    Ok((
        found == 20 && agree == 20,
        format!("{agree}/{found} agree ({drawn} configs drawn){}", if mismatches.is_empty() {
            String::new()
        } else {
            format!("; mismatches: {}", mismatches.join(", "))
        }),
    ))
}

const RELAX_DT: f64 = 1e-3;

fn dynamic_static() -> Check {
    let run = run_to_stationary(&transport_fixture(2001)?, RELAX_DT, 1e-6, 200_000)?;
    let gap = *run.gaps.last().expect("nonempty gap history");
    Ok((
        gap < 1e-6 && run.max_mass_drift <= 1e-12,
        format!(
            "gap {gap:.2e} after {} steps, max per-step mass drift {:.2e}",
            run.state.step_count, run.max_mass_drift
        ),
    ))
}

const MC_DT: f64 = 5e-4;
const MC_PARTICLES: usize = 160_000;

fn monte_carlo() -> Check {
    let params = transport_fixture(2001)?;
    let relax = run_to_stationary(&params, RELAX_DT, 1e-6, 200_000)?;
    let tau = relax
        .relaxation_time(RELAX_DT)
        .ok_or_else(|| RatchetError::InvalidParameter("no relaxation time".into()))?;
    let t_end = (5.0 * tau / MC_DT).ceil() * MC_DT;
    let run = simulate_particles(&params, MC_PARTICLES, t_end, MC_DT, 2024)?;
    let k = params.k();
    let stationary = &relax.stationary;
    let wells_ref = Occupancy::of_pair(stationary, k)?;
    let n = 100_000;
    let wells = run.ensemble.occupancy(0..n, k);
    let cmp = compare_histogram(&wells, &wells_ref, n)?;
    let bins_ref = Occupancy::of_pair(stationary, DEFAULT_BINS)?;
    let d1 = pooled_group_deviation(&run.ensemble, 10_000, &bins_ref)?;
    let d4 = pooled_group_deviation(&run.ensemble, 40_000, &bins_ref)?;
    let ratio = d1 / d4;
    let w1 = pooled_group_deviation(&run.ensemble, 10_000, &wells_ref)?;
    let w4 = pooled_group_deviation(&run.ensemble, 40_000, &wells_ref)?;
    Ok((
        cmp.pass && (1.4..=2.6).contains(&ratio),
        format!(
            "t_end {t_end:.4} (tau {tau:.3}); 1e5 wells max z {:.2}; pooled deviation ratio 1e4/4e4: bins {ratio:.3}, wells {:.3}",
            cmp.max_z,
            w1 / w4
        ),
    ))
}

fn model_disagreement() -> Check {
    let schedule = FlashingSchedule::new(2.0, 1.0)?;
    let opposite = PeakedInstance {
        s_star: 0.15,
        a: 0.2,
        sigma: 0.01,
        ..PeakedInstance::default()
    }
    .build(2001)?;
    let c1 = compare_directions(&opposite, schedule)?;
    let bumps = symmetric_bumps_instance(2, 0.15, 0.1, 2001)?.with_sigma_kappa(0.01, 1.0)?;
    let c2 = compare_directions(&bumps, schedule)?;
    Ok((
        c1.agree == Some(false) && c2.agree == Some(true),
        format!(
            "s*<a<1/(2k): random {} vs deterministic {}; symmetric nu: random {} vs deterministic {}",
            c1.random, c1.deterministic, c2.random, c2.deterministic
        ),
    ))
}

fn manufactured_error(n: usize) -> Result<f64, RatchetError> {
    let op = SlOperator::new(unit_fn(n, |_| 1.0)?, 1.0)?;
    let rhs = unit_fn(n, |x| (2.0 * PI * x).cos() * (1.0 + 4.0 * PI * PI))?;
    let u = solve_sl_neumann(&op, &rhs)?;
    Ok(u.values()
        .iter()
        .zip(op.grid().nodes())
        .map(|(v, x)| (v - (2.0 * PI * x).cos()).abs())
        .fold(0.0, f64::max))
}

fn convergence() -> Check {
    let ratio = manufactured_error(501)? / manufactured_error(1001)?;
    let s1 = diffusive_mean(&unit_fn(1001, |x| 1.0 + x)?, 1.0)?.s;
    let s2 = diffusive_mean(&unit_fn(2001, |x| 1.0 + x)?, 1.0)?.s;
    Ok((
        (ratio - 4.0).abs() <= 0.6 && (s1 - s2).abs() < 1e-5,
        format!("error ratio {ratio:.4}, |s(1001) - s(2001)| = {:.2e}", (s1 - s2).abs()),
    ))
}
