//! Reference instances shared by the test suites, the CLI and the benches.

use crate::error::Result;
use crate::grid::Grid;
use crate::model::{
    conjugate_eta, make_multi_peaked_rate, make_peaked_rate, make_smoothed_sawtooth, RateProfile,
    RatchetParams,
};

/// `(sigma, kappa)` of the transport fixture: the first pair of the default
/// sweep lattice at which all strict chains hold.
pub const FIXTURE_SIGMA: f64 = 0.1;
pub const FIXTURE_KAPPA: f64 = 1.0;

/// Two-well sawtooth with minimum `a` and attachment rate peaked at `s_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakedInstance {
    pub k: usize,
    pub a: f64,
    pub depth: f64,
    pub s_star: f64,
    pub width: f64,
    pub base: f64,
    pub mass: f64,
    pub eta: f64,
    pub sigma: f64,
    pub varsigma: f64,
    pub kappa: f64,
}

impl Default for PeakedInstance {
    /// The left-transport fixture: `a = 0.15` with the active site at `0.35`.
    fn default() -> Self {
        Self {
            k: 2,
            a: 0.15,
            depth: 1.0,
            s_star: 0.35,
            width: 0.01,
            base: 0.1,
            mass: 1.0,
            eta: 1.0,
            sigma: FIXTURE_SIGMA,
            varsigma: 1.0,
            kappa: FIXTURE_KAPPA,
        }
    }
}

impl PeakedInstance {
    pub fn build(&self, n: usize) -> Result<RatchetParams> {
        let grid = Grid::unit(n)?;
        let potential = make_smoothed_sawtooth(self.k, self.a, self.depth, &grid)?;
        let nu = make_peaked_rate(self.k, self.s_star, self.width, self.base, self.mass, &grid)?;
        let eta = RateProfile::constant(&grid, self.k, self.eta)?;
        RatchetParams::new(self.sigma, self.varsigma, self.kappa, potential, nu, eta)
    }
}

pub fn transport_fixture(n: usize) -> Result<RatchetParams> {
    PeakedInstance::default().build(n)
}

/// Fully symmetric instance: constant rates and `a = 1/(2k)`.
pub fn symmetric_instance(k: usize, n: usize) -> Result<RatchetParams> {
    let grid = Grid::unit(n)?;
    let potential = make_smoothed_sawtooth(k, 0.5 / k as f64, 1.0, &grid)?;
    let nu = RateProfile::constant(&grid, k, 2.0)?;
    let eta = RateProfile::constant(&grid, k, 1.0)?;
    RatchetParams::new(FIXTURE_SIGMA, 1.0, FIXTURE_KAPPA, potential, nu, eta)
}

/// Rate peaked symmetrically at `1/(2k) +- offset` within each well.
pub fn symmetric_bumps_instance(k: usize, a: f64, offset: f64, n: usize) -> Result<RatchetParams> {
    let grid = Grid::unit(n)?;
    let c = 0.5 / k as f64;
    let potential = make_smoothed_sawtooth(k, a, 1.0, &grid)?;
    let nu = make_multi_peaked_rate(k, &[c - offset, c + offset], 0.01, 0.1, 0.5, &grid)?;
    let eta = RateProfile::constant(&grid, k, 1.0)?;
    RatchetParams::new(FIXTURE_SIGMA, 1.0, FIXTURE_KAPPA, potential, nu, eta)
}

/// The fixture with `eta = nu exp(kappa psi / sigma)`.
pub fn conjugate_instance(n: usize, sigma: f64, kappa: f64) -> Result<RatchetParams> {
    let base = PeakedInstance {
        sigma,
        kappa,
        ..PeakedInstance::default()
    }
    .build(n)?;
    let eta = conjugate_eta(&base.nu, &base.potential, kappa, sigma)?;
    RatchetParams::new(sigma, base.varsigma, kappa, base.potential, base.nu, eta)
}
