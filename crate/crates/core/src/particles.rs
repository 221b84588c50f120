//! Particle-level Monte Carlo of the two-state switching diffusion.
//!
//! Euler-Maruyama moves with reflection at `0` and `1`, followed by a
//! Bernoulli state flip with probability `eta dt` (attached) or `nu dt`
//! (detached). Each particle draws from its own ChaCha8 stream, selected by
//! its index, so results do not depend on how the ensemble is sharded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{RatchetError, Result};
use crate::grid::{well_integrals, GridFn};
use crate::model::RatchetParams;
use crate::stationary::DensityPair;

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), one stream per particle index";
/// Upper bound on `max(eta, nu) dt`.
pub const MAX_SWITCH_PROBABILITY: f64 = 0.1;
pub const DEFAULT_BINS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub attached: Vec<bool>,
    pub rng_seed: u64,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Fractions of particles of the given index range in each of `cells`
    /// equal cells of `[0, 1]`.
    pub fn occupancy(&self, range: std::ops::Range<usize>, cells: usize) -> Occupancy {
        let mut attached = vec![0.0; cells];
        let mut detached = vec![0.0; cells];
        let total = range.len() as f64;
        for i in range {
            let c = ((self.positions[i] * cells as f64) as usize).min(cells - 1);
            if self.attached[i] {
                attached[c] += 1.0;
            } else {
                detached[c] += 1.0;
            }
        }
        attached.iter_mut().chain(detached.iter_mut()).for_each(|v| *v /= total);
        Occupancy { attached, detached }
    }
}

/// Masses of the attached and detached densities over equal cells of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    pub attached: Vec<f64>,
    pub detached: Vec<f64>,
}

impl Occupancy {
    /// Trapezoidal cell masses of a density pair; `cells` must divide the
    /// number of grid intervals.
    pub fn of_pair(pair: &DensityPair, cells: usize) -> Result<Self> {
        Ok(Self {
            attached: cell_masses(&pair.attached, cells)?,
            detached: cell_masses(&pair.detached, cells)?,
        })
    }

    pub fn cells(&self) -> usize {
        self.attached.len()
    }

    pub fn combined(&self) -> Vec<f64> {
        self.attached
            .iter()
            .zip(&self.detached)
            .map(|(a, d)| a + d)
            .collect()
    }

    /// Attached masses followed by detached masses.
    pub fn flat(&self) -> Vec<f64> {
        self.attached.iter().chain(&self.detached).copied().collect()
    }
}

fn cell_masses(f: &GridFn, cells: usize) -> Result<Vec<f64>> {
    if cells == 1 {
        return Ok(vec![f.integral()]);
    }
    well_integrals(f, cells)
}

#[derive(Debug, Clone)]
pub struct ParticleRun {
    pub ensemble: ParticleEnsemble,
    pub k: usize,
    pub wells: Occupancy,
    pub bins: Occupancy,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub algorithm: &'static str,
}

impl ParticleRun {
    pub fn n_particles(&self) -> usize {
        self.ensemble.len()
    }
}

/// Node samples with linear interpolation on `[0, 1]`.
struct Table {
    values: Vec<f64>,
    scale: f64,
}

impl Table {
    fn new(values: Vec<f64>) -> Self {
        let scale = (values.len() - 1) as f64;
        Self { values, scale }
    }

    #[inline]
    fn at(&self, x: f64) -> f64 {
        let s = x * self.scale;
        let i = (s as usize).min(self.values.len() - 2);
        let t = s - i as f64;
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Central differences with mirror closure (zero slope at the ends).
fn central_slope(f: &GridFn) -> Vec<f64> {
    let v = f.values();
    let n = v.len();
    let h2 = 2.0 * f.grid().spacing();
    (0..n)
        .map(|i| {
            let l = if i == 0 { v[1] } else { v[i - 1] };
            let r = if i + 1 == n { v[n - 2] } else { v[i + 1] };
            (r - l) / h2
        })
        .collect()
}

#[inline]
fn reflect(mut x: f64) -> f64 {
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > 1.0 {
            x = 2.0 - x;
        } else {
            return x;
        }
    }
}

struct Dynamics {
    drift: Table,
    eta: Table,
    nu: Table,
    step_attached: f64,
    step_detached: f64,
    dt: f64,
    steps: usize,
}

impl Dynamics {
    fn particle(&self, seed: u64, index: usize) -> (f64, bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut x: f64 = rng.random();
        let mut attached = rng.random_bool(0.5);
        for _ in 0..self.steps {
            let z: f64 = rng.sample(StandardNormal);
            x = if attached {
                reflect(x + self.drift.at(x) * self.dt + self.step_attached * z)
            } else {
                reflect(x + self.step_detached * z)
            };
            let rate = if attached { self.eta.at(x) } else { self.nu.at(x) };
            if rng.random::<f64>() < rate * self.dt {
                attached = !attached;
            }
        }
        (x, attached)
    }
}

/// Simulates `n_particles` from the uniform, equally split state up to
/// `t_end` and returns well and 100-bin occupancies.
pub fn simulate_particles(
    params: &RatchetParams,
    n_particles: usize,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<ParticleRun> {
    params.validate()?;
    if n_particles == 0 {
        return Err(RatchetError::InvalidParameter("need at least one particle".into()));
    }
    if !(dt > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(RatchetError::InvalidParameter(format!(
            "need dt > 0 and t_end >= 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let max_rate = params
        .nu
        .values()
        .iter()
        .chain(params.eta.values())
        .copied()
        .fold(0.0, f64::max);
    if max_rate * dt >= MAX_SWITCH_PROBABILITY {
        return Err(RatchetError::InvalidParameter(format!(
            "switching probability max(eta, nu) dt = {} must stay below {MAX_SWITCH_PROBABILITY}",
            max_rate * dt
        )));
    }
    if params.psi_alt.is_some() {
        return Err(RatchetError::InvalidParameter(
            "particle simulation covers the randomly flashing model only".into(),
        ));
    }
    let kappa = params.kappa;
    let dynamics = Dynamics {
        drift: Table::new(
            central_slope(params.potential.values())
                .into_iter()
                .map(|s| -kappa * s)
                .collect(),
        ),
        eta: Table::new(params.eta.values().to_vec()),
        nu: Table::new(params.nu.values().to_vec()),
        step_attached: (2.0 * params.sigma * dt).sqrt(),
        step_detached: (2.0 * params.varsigma * dt).sqrt(),
        dt,
        steps: (t_end / dt).round() as usize,
    };
    let (positions, attached): (Vec<f64>, Vec<bool>) = (0..n_particles)
        .into_par_iter()
        .map(|i| dynamics.particle(seed, i))
        .unzip();
    let ensemble = ParticleEnsemble {
        positions,
        attached,
        rng_seed: seed,
    };
    let k = params.k();
    Ok(ParticleRun {
        wells: ensemble.occupancy(0..n_particles, k),
        bins: ensemble.occupancy(0..n_particles, DEFAULT_BINS),
        ensemble,
        k,
        t_end,
        dt,
        steps: dynamics.steps,
        algorithm: RNG_ALGORITHM,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramComparison {
    /// `|empirical - reference|`, attached cells first.
    pub deviations: Vec<f64>,
    /// `sqrt(m (1 - m) / n)` for each reference mass `m`.
    pub standard_errors: Vec<f64>,
    pub max_well_deviation: f64,
    /// Largest deviation in units of its standard error.
    pub max_z: f64,
    pub pass: bool,
}

/// Per-cell comparison at the three-standard-error level.
pub fn compare_histogram(empirical: &Occupancy, reference: &Occupancy, n_particles: usize) -> Result<HistogramComparison> {
    if empirical.cells() != reference.cells() || empirical.detached.len() != reference.detached.len() {
        return Err(RatchetError::InvalidParameter(
            "histograms have different cell counts".into(),
        ));
    }
    let n = n_particles as f64;
    let (e, r) = (empirical.flat(), reference.flat());
    let deviations: Vec<f64> = e.iter().zip(&r).map(|(a, b)| (a - b).abs()).collect();
    let standard_errors: Vec<f64> = r
        .iter()
        .map(|m| (m.clamp(0.0, 1.0) * (1.0 - m.clamp(0.0, 1.0)) / n).sqrt())
        .collect();
    let pass = deviations
        .iter()
        .zip(&standard_errors)
        .all(|(d, s)| *d <= 3.0 * s);
    let max_z = deviations
        .iter()
        .zip(&standard_errors)
        .map(|(d, s)| if *s > 0.0 { d / s } else if *d > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(HistogramComparison {
        max_well_deviation: deviations.iter().copied().fold(0.0, f64::max),
        deviations,
        standard_errors,
        max_z,
        pass,
    })
}

/// Root-mean-square deviation from `reference` of the occupancies of
/// consecutive groups of `group` particles, pooled over all cells and groups.
pub fn pooled_group_deviation(
    ensemble: &ParticleEnsemble,
    group: usize,
    reference: &Occupancy,
) -> Result<f64> {
    let groups = ensemble.len() / group.max(1);
    if group == 0 || groups == 0 {
        return Err(RatchetError::InvalidParameter(format!(
            "cannot form groups of {group} from {} particles",
            ensemble.len()
        )));
    }
    let r = reference.flat();
    let mut sum = 0.0;
    for g in 0..groups {
        let occ = ensemble.occupancy(g * group..(g + 1) * group, reference.cells());
        sum += occ.flat().iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok((sum / (groups * r.len()) as f64).sqrt())
}
