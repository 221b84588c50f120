//! Time integration of the randomly and deterministically flashing ratchets.
//!
//! Both models use implicit Euler on the exponentially fitted operator:
//! `(W + dt A) z_new = W z`. Columns of `A` sum to zero, so the trapezoidal
//! mass `sum W z` is conserved to roundoff, and `W + dt A` is a nonsingular
//! M-matrix, so nonnegativity is preserved for every `dt`.

use crate::error::{RatchetError, Result};
use crate::grid::{well_integrals, Grid, GridFn};
use crate::linalg::{BandLu, TridiagonalLu, TridiagonalSystem};
use crate::model::RatchetParams;
use crate::stationary::{
    bernoulli, chain_direction, solve_stationary, transport_verdict, DensityPair, Direction,
    Normalization, RatchetOperator,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TransientState {
    pub pair: DensityPair,
    pub t: f64,
    pub step_count: usize,
}

impl TransientState {
    pub fn new(pair: DensityPair) -> Self {
        Self {
            pair,
            t: 0.0,
            step_count: 0,
        }
    }

    /// `p = P = 1/2`.
    pub fn uniform(grid: &Grid) -> Result<Self> {
        let half = GridFn::constant(grid.clone(), 0.5)?;
        Ok(Self::new(DensityPair {
            attached: half.clone(),
            detached: half,
            normalization: Normalization::TotalMass,
        }))
    }

    pub fn mass(&self) -> f64 {
        self.pair.total_mass()
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(RatchetError::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )))
    }
}

/// Factored implicit step of the two-state system for a fixed `dt`.
#[derive(Debug, Clone)]
pub struct RandomFlashingStepper {
    grid: Grid,
    weights: Vec<f64>,
    lu: BandLu,
    dt: f64,
}

impl RandomFlashingStepper {
    pub fn new(params: &RatchetParams, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        params.validate()?;
        let op = RatchetOperator::assemble(params, params.psi_alt.as_ref());
        let weights = op.mass_weights();
        let mut m = op.matrix().clone();
        m.scale(dt);
        for (i, w) in weights.iter().enumerate() {
            m.add(i, i, *w);
        }
        Ok(Self {
            grid: op.grid().clone(),
            weights,
            lu: m.factor()?,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &TransientState) -> Result<TransientState> {
        if !state.pair.grid().same_as(&self.grid) {
            return Err(RatchetError::GridMismatch(
                "state is not on the operator grid".into(),
            ));
        }
        let mut z = state.pair.interleaved();
        z.iter_mut().zip(&self.weights).for_each(|(v, w)| *v *= w);
        self.lu.solve_in_place(&mut z);
        Ok(TransientState {
            pair: DensityPair::from_interleaved(&self.grid, &z, state.pair.normalization)?,
            t: state.t + self.dt,
            step_count: state.step_count + 1,
        })
    }
}

/// One implicit-Euler step of the randomly flashing ratchet (or of the
/// collaborative one when `psi_alt` is set).
pub fn step_random_flashing(
    state: &TransientState,
    dt: f64,
    params: &RatchetParams,
) -> Result<TransientState> {
    RandomFlashingStepper::new(params, dt)?.step(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub mass: f64,
    pub gap: f64,
    /// Well masses of `p + P`.
    pub wells: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RelaxationRun {
    pub state: TransientState,
    pub stationary: DensityPair,
    /// L1 gap to the stationary pair, before the first step and after each step.
    pub gaps: Vec<f64>,
    /// Largest change of total mass over a single step.
    pub max_mass_drift: f64,
    pub records: Vec<TimeSeriesRecord>,
}

impl RelaxationRun {
    /// Decay time of the gap, from a log-linear fit over the second half of
    /// the history.
    pub fn relaxation_time(&self, dt: f64) -> Option<f64> {
        relaxation_time(&self.gaps, dt)
    }
}

pub fn relaxation_time(gaps: &[f64], dt: f64) -> Option<f64> {
    let tail: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .skip(gaps.len() / 2)
        .filter(|(_, g)| **g > 0.0)
        .map(|(i, g)| (i as f64 * dt, g.ln()))
        .collect();
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let (mt, my) = tail
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sty, stt) = tail.iter().fold((0.0, 0.0), |(a, b), (t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    let slope = sty / stt;
    (slope < 0.0).then(|| -1.0 / slope)
}

fn wells_of_sum(pair: &DensityPair, k: usize) -> Result<Vec<f64>> {
    let p = well_integrals(&pair.attached, k)?;
    let d = well_integrals(&pair.detached, k)?;
    Ok(p.iter().zip(&d).map(|(a, b)| a + b).collect())
}

/// Steps from the uniform state until the L1 gap to the stationary solution
/// drops below `tol`.
pub fn run_to_stationary(
    params: &RatchetParams,
    dt: f64,
    tol: f64,
    max_steps: usize,
) -> Result<RelaxationRun> {
    run_to_stationary_from(params, TransientState::uniform(params.grid())?, dt, tol, max_steps, 0)
}

/// Like [`run_to_stationary`] from a given state; a record is kept every
/// `record_every` steps (never when zero).
pub fn run_to_stationary_from(
    params: &RatchetParams,
    init: TransientState,
    dt: f64,
    tol: f64,
    max_steps: usize,
    record_every: usize,
) -> Result<RelaxationRun> {
    let stationary = solve_stationary(params)?;
    let stepper = RandomFlashingStepper::new(params, dt)?;
    let k = params.k();
    let mut state = init;
    let mut gap = state.pair.l1_distance(&stationary);
    let mut gaps = vec![gap];
    let mut max_mass_drift: f64 = 0.0;
    let mut records = Vec::new();
    let record = |s: &TransientState, gap: f64| -> Result<TimeSeriesRecord> {
        Ok(TimeSeriesRecord {
            t: s.t,
            mass: s.mass(),
            gap,
            wells: wells_of_sum(&s.pair, k)?,
        })
    };
    if record_every > 0 {
        records.push(record(&state, gap)?);
    }
    let mut steps = 0;
    while gap >= tol {
        if steps == max_steps {
            return Err(RatchetError::NoConvergence {
                iterations: steps,
                last_change: gap,
            });
        }
        let next = stepper.step(&state)?;
        max_mass_drift = max_mass_drift.max((next.mass() - state.mass()).abs());
        state = next;
        steps += 1;
        gap = state.pair.l1_distance(&stationary);
        gaps.push(gap);
        if record_every > 0 && steps % record_every == 0 {
            records.push(record(&state, gap)?);
        }
    }
    Ok(RelaxationRun {
        state,
        stationary,
        gaps,
        max_mass_drift,
        records,
    })
}

/// Potential on for `nT < t <= nT + on_time`, off for the rest of the period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlashingSchedule {
    period: f64,
    on_time: f64,
}

impl FlashingSchedule {
    pub fn new(period: f64, on_time: f64) -> Result<Self> {
        if !(on_time > 0.0 && on_time < period && period.is_finite()) {
            return Err(RatchetError::InvalidParameter(format!(
                "need 0 < on_time < period, got on_time = {on_time}, period = {period}"
            )));
        }
        Ok(Self { period, on_time })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn on_time(&self) -> f64 {
        self.on_time
    }

    pub fn is_on(&self, t: f64) -> bool {
        let eps = 1e-9 * self.period;
        let phase = t.rem_euclid(self.period);
        phase > eps && phase < self.period - eps && phase <= self.on_time + eps
    }

    /// `(on, off)` step counts for `dt`; both phases must be whole multiples.
    pub fn steps(&self, dt: f64) -> Result<(usize, usize)> {
        check_dt(dt)?;
        let whole = |d: f64| -> Result<usize> {
            let s = (d / dt).round();
            if s < 1.0 || (s * dt - d).abs() > 1e-9 * d {
                Err(RatchetError::InvalidParameter(format!(
                    "phase length {d} is not a multiple of dt = {dt}"
                )))
            } else {
                Ok(s as usize)
            }
        };
        Ok((whole(self.on_time)?, whole(self.period - self.on_time)?))
    }
}

/// Weighted exponentially fitted operator of `-(sigma rho' + psi' rho)'`.
fn drift_diffusion_system(potential: &GridFn, sigma: f64, dt: f64, on: bool) -> Result<TridiagonalSystem> {
    let grid = potential.grid();
    let n = grid.len();
    let c = sigma / grid.spacing();
    let psi = potential.values();
    let mut sub = vec![0.0; n - 1];
    let mut sup = vec![0.0; n - 1];
    let mut diag: Vec<f64> = (0..n).map(|i| grid.weight(i)).collect();
    for i in 0..n - 1 {
        let d = if on { (psi[i + 1] - psi[i]) / sigma } else { 0.0 };
        let (bp, bm) = (dt * c * bernoulli(d), dt * c * bernoulli(-d));
        diag[i] += bp;
        sup[i] -= bm;
        diag[i + 1] += bm;
        sub[i] -= bp;
    }
    TridiagonalSystem::new(sub, diag, sup)
}

/// Factored implicit steps of `rho_t = sigma rho_xx + h(t) (psi' rho)_x`.
#[derive(Debug, Clone)]
pub struct DeterministicStepper {
    grid: Grid,
    schedule: FlashingSchedule,
    dt: f64,
    on: TridiagonalLu,
    off: TridiagonalLu,
}

impl DeterministicStepper {
    pub fn new(potential: &GridFn, sigma: f64, schedule: FlashingSchedule, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(RatchetError::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            grid: potential.grid().clone(),
            schedule,
            dt,
            on: drift_diffusion_system(potential, sigma, dt, true)?.factor()?,
            off: drift_diffusion_system(potential, sigma, dt, false)?.factor()?,
        })
    }

    pub fn schedule(&self) -> FlashingSchedule {
        self.schedule
    }

    fn apply(&self, rho: &[f64], on: bool) -> Vec<f64> {
        let mut x: Vec<f64> = rho
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.weight(i) * v)
            .collect();
        if on {
            self.on.solve_in_place(&mut x);
        } else {
            self.off.solve_in_place(&mut x);
        }
        x
    }

    /// Step from `t` to `t + dt`; the switch is evaluated at `t + dt`.
    pub fn step(&self, rho: &GridFn, t: f64) -> Result<GridFn> {
        if !rho.grid().same_as(&self.grid) {
            return Err(RatchetError::GridMismatch(
                "density is not on the operator grid".into(),
            ));
        }
        let on = self.schedule.is_on(t + self.dt);
        GridFn::new(self.grid.clone(), self.apply(rho.values(), on))
    }

    /// One full period from a cycle boundary. Returns the state at the end of
    /// the on-phase and at the end of the period.
    pub fn cycle(&self, rho: &GridFn) -> Result<(GridFn, GridFn)> {
        let (n_on, n_off) = self.schedule.steps(self.dt)?;
        let mut v = rho.values().to_vec();
        for _ in 0..n_on {
            v = self.apply(&v, true);
        }
        let after_on = GridFn::new(self.grid.clone(), v.clone())?;
        for _ in 0..n_off {
            v = self.apply(&v, false);
        }
        Ok((after_on, GridFn::new(self.grid.clone(), v)?))
    }

    /// Iterates the cycle map from `rho` until successive cycle-end states
    /// differ by less than `tol` in L1.
    pub fn periodic_regime(&self, rho: &GridFn, tol: f64, max_cycles: usize) -> Result<PeriodicRegime> {
        let mut current = rho.clone();
        let mut last_change = f64::INFINITY;
        for cycles in 1..=max_cycles {
            let (after_on, end) = self.cycle(&current)?;
            last_change = l1(&end, &current);
            current = end;
            if last_change < tol {
                return Ok(PeriodicRegime {
                    after_on,
                    cycle_end: current,
                    cycles,
                    last_change,
                });
            }
        }
        Err(RatchetError::NoConvergence {
            iterations: max_cycles,
            last_change,
        })
    }
}

fn l1(a: &GridFn, b: &GridFn) -> f64 {
    let g = a.grid();
    a.values()
        .iter()
        .zip(b.values())
        .enumerate()
        .map(|(i, (x, y))| g.weight(i) * (x - y).abs())
        .sum()
}

pub fn step_deterministic_flashing(
    rho: &GridFn,
    t: f64,
    dt: f64,
    potential: &GridFn,
    sigma: f64,
    schedule: FlashingSchedule,
) -> Result<GridFn> {
    DeterministicStepper::new(potential, sigma, schedule, dt)?.step(rho, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicRegime {
    pub after_on: GridFn,
    pub cycle_end: GridFn,
    pub cycles: usize,
    pub last_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionComparison {
    pub random: Direction,
    pub deterministic: Direction,
    /// Well masses at the end of the on-phase of the periodic regime.
    pub deterministic_wells: Vec<f64>,
    /// `None` when either side is indeterminate.
    pub agree: Option<bool>,
    pub regime: PeriodicRegime,
}

/// Default time step and cycle-map tolerance of [`compare_directions`].
pub const COMPARE_DT: f64 = 1e-3;
pub const CYCLE_TOL: f64 = 1e-8;
const MAX_CYCLES: usize = 20_000;

/// Random-model direction from the transport verdict against the direction
/// of the deterministic model driven by `kappa psi` with diffusivity `sigma`.
pub fn compare_directions(params: &RatchetParams, schedule: FlashingSchedule) -> Result<DirectionComparison> {
    compare_directions_with(params, schedule, COMPARE_DT)
}

pub fn compare_directions_with(
    params: &RatchetParams,
    schedule: FlashingSchedule,
    dt: f64,
) -> Result<DirectionComparison> {
    let random = transport_verdict(params)?.direction;
    let drive = params.potential.values().map(|v| params.kappa * v)?;
    let stepper = DeterministicStepper::new(&drive, params.sigma, schedule, dt)?;
    let start = GridFn::constant(params.grid().clone(), 1.0)?;
    let regime = stepper.periodic_regime(&start, CYCLE_TOL, MAX_CYCLES)?;
    let deterministic_wells = well_integrals(&regime.after_on, params.k())?;
    let deterministic = chain_direction(&deterministic_wells);
    let agree = match (random, deterministic) {
        (Direction::Indeterminate, _) | (_, Direction::Indeterminate) => None,
        (r, d) => Some(r == d),
    };
    Ok(DirectionComparison {
        random,
        deterministic,
        deterministic_wells,
        agree,
        regime,
    })
}
