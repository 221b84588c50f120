//! Stationary two-state ratchet and the transport verdict.
//!
//! The attached flux `sigma p' + kappa psi' p` is discretized by exponential
//! fitting (Scharfetter-Gummel): on the face between nodes `i` and `i + 1`
//!
//! ```text
//! F = sigma / h * (B(-d) p[i+1] - B(d) p[i]),   d = kappa (psi[i+1] - psi[i]) / sigma,
//! ```
//!
//! with `B(x) = x / (e^x - 1)`. `F` vanishes exactly on `p ~ exp(-kappa psi / sigma)`.
//! Each equation is integrated over its trapezoid control volume, so the
//! assembled operator has zero column sums (mass conservation) and is a
//! singular M-matrix. Unknowns are interleaved `p0, P0, p1, P1, ...`, which
//! gives bandwidth 2.

use crate::diffusive_mean::diffusive_mean;
use crate::error::{RatchetError, Result};
use crate::grid::{well_integrals, Grid, GridFn};
use crate::linalg::BandMatrix;
use crate::model::RatchetParams;

/// Slack above which a chain inequality counts as strict.
pub const STRICT_SLACK: f64 = 1e-9;
const NEGATIVITY_TOL: f64 = 1e-10;
const BALANCE_TOL: f64 = 1e-8;

/// `x / (e^x - 1)`, finite for all finite `x`.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `int p + P = 1`.
    TotalMass,
    /// `int eta p = int nu P = 1`.
    Renormalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityPair {
    pub attached: GridFn,
    pub detached: GridFn,
    pub normalization: Normalization,
}

impl DensityPair {
    pub fn grid(&self) -> &Grid {
        self.attached.grid()
    }

    pub fn total_mass(&self) -> f64 {
        self.attached.integral() + self.detached.integral()
    }

    /// Interleaved state vector `p0, P0, p1, P1, ...`.
    pub fn interleaved(&self) -> Vec<f64> {
        self.attached
            .values()
            .iter()
            .zip(self.detached.values())
            .flat_map(|(&a, &d)| [a, d])
            .collect()
    }

    pub fn from_interleaved(grid: &Grid, z: &[f64], normalization: Normalization) -> Result<Self> {
        let attached = z.iter().step_by(2).copied().collect();
        let detached = z.iter().skip(1).step_by(2).copied().collect();
        Ok(Self {
            attached: GridFn::new(grid.clone(), attached)?,
            detached: GridFn::new(grid.clone(), detached)?,
            normalization,
        })
    }

    /// Trapezoidal L1 distance `int |p - p'| + |P - P'|`.
    pub fn l1_distance(&self, other: &DensityPair) -> f64 {
        let g = self.grid();
        let diff = |a: &GridFn, b: &GridFn| -> f64 {
            a.values()
                .iter()
                .zip(b.values())
                .enumerate()
                .map(|(i, (x, y))| g.weight(i) * (x - y).abs())
                .sum()
        };
        diff(&self.attached, &other.attached) + diff(&self.detached, &other.detached)
    }

    pub fn reflected(&self) -> DensityPair {
        DensityPair {
            attached: self.attached.reflected(),
            detached: self.detached.reflected(),
            normalization: self.normalization,
        }
    }

    /// Smallest nodal value of either density.
    pub fn min_value(&self) -> f64 {
        self.attached.min().min(self.detached.min())
    }
}

/// The weighted generator `A` of the two-state system: `W dz/dt = -A z`.
#[derive(Debug, Clone)]
pub struct RatchetOperator {
    grid: Grid,
    matrix: BandMatrix,
}

impl RatchetOperator {
    /// Assembles the operator; `detached_potential` adds a drift for the
    /// detached state (collaborative variant).
    pub fn assemble(params: &RatchetParams, detached_potential: Option<&GridFn>) -> Self {
        let grid = params.grid().clone();
        let n = grid.len();
        let h = grid.spacing();
        let psi = params.potential.values().values();
        let nu = params.nu.values();
        let eta = params.eta.values();
        let mut a = BandMatrix::zeros(2 * n, 2, 2);

        let mut add_flux = |offset: usize, diff: f64, drift: &dyn Fn(usize) -> f64| {
            let c = diff / h;
            for i in 0..n - 1 {
                let d = drift(i);
                let (bp, bm) = (bernoulli(d), bernoulli(-d));
                let (r, s) = (2 * i + offset, 2 * (i + 1) + offset);
                a.add(r, s, -c * bm);
                a.add(r, r, c * bp);
                a.add(s, s, c * bm);
                a.add(s, r, -c * bp);
            }
        };
        let (sigma, kappa, varsigma) = (params.sigma, params.kappa, params.varsigma);
        add_flux(0, sigma, &|i| kappa * (psi[i + 1] - psi[i]) / sigma);
        match detached_potential {
            Some(alt) => {
                let alt = alt.values();
                add_flux(1, varsigma, &|i| kappa * (alt[i + 1] - alt[i]) / varsigma);
            }
            None => add_flux(1, varsigma, &|_| 0.0),
        }
        for i in 0..n {
            let w = grid.weight(i);
            let (rp, rd) = (2 * i, 2 * i + 1);
            a.add(rp, rp, w * eta[i]);
            a.add(rp, rd, -w * nu[i]);
            a.add(rd, rp, -w * eta[i]);
            a.add(rd, rd, w * nu[i]);
        }
        Self { grid, matrix: a }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    /// Trapezoid weights repeated for both species.
    pub fn mass_weights(&self) -> Vec<f64> {
        (0..self.grid.len())
            .flat_map(|i| {
                let w = self.grid.weight(i);
                [w, w]
            })
            .collect()
    }

    /// Largest row residual of `A z` relative to the row scale `|A| |z|`.
    pub fn relative_residual(&self, z: &[f64], skip_last: bool) -> f64 {
        let r = self.matrix.apply(z);
        let s = self.matrix.apply_abs(z);
        let scale = s.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let rows = if skip_last { r.len() - 1 } else { r.len() };
        r[..rows].iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }
}

#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub pair: DensityPair,
    /// Relative residual of the equations kept in the closed system.
    pub residual: f64,
    /// Relative residual of the equation replaced by the normalization row.
    pub dropped_row_residual: f64,
}

fn solve_closed(params: &RatchetParams, alt: Option<&GridFn>) -> Result<StationarySolution> {
    params.validate()?;
    let op = RatchetOperator::assemble(params, alt);
    let mut closed = op.matrix().clone();
    closed.set_dense_last_row(op.mass_weights());
    let mut z = vec![0.0; closed.len()];
    *z.last_mut().expect("non-empty") = 1.0;
    closed.factor()?.solve_in_place(&mut z);

    let full = op.matrix().apply(&z);
    let scale = op
        .matrix()
        .apply_abs(&z)
        .into_iter()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let residual = op.relative_residual(&z, true);
    let dropped_row_residual = full.last().copied().unwrap_or(0.0).abs() / scale;

    let grid = op.grid().clone();
    if let Some(idx) = z.iter().position(|&v| v < -NEGATIVITY_TOL) {
        let node = idx / 2;
        return Err(RatchetError::Negative {
            node,
            x: grid.node(node),
            value: z[idx],
        });
    }
    Ok(StationarySolution {
        pair: DensityPair::from_interleaved(&grid, &z, Normalization::TotalMass)?,
        residual,
        dropped_row_residual,
    })
}

/// Stationary randomly flashing ratchet with `int p + P = 1`.
pub fn solve_stationary(params: &RatchetParams) -> Result<DensityPair> {
    Ok(solve_stationary_detailed(params)?.pair)
}

pub fn solve_stationary_detailed(params: &RatchetParams) -> Result<StationarySolution> {
    if params.psi_alt.is_some() {
        return Err(RatchetError::InvalidParameter(
            "a second potential is set; use the collaborative solver".into(),
        ));
    }
    solve_closed(params, None)
}

/// Stationary collaborative ratchet: the detached state feels `psi_alt`.
pub fn solve_collaborative(params: &RatchetParams) -> Result<DensityPair> {
    Ok(solve_collaborative_detailed(params)?.pair)
}

pub fn solve_collaborative_detailed(params: &RatchetParams) -> Result<StationarySolution> {
    let alt = params.psi_alt.as_ref().ok_or_else(|| {
        RatchetError::InvalidParameter("collaborative solve needs a second potential".into())
    })?;
    solve_closed(params, Some(alt))
}

/// Rescales a total-mass pair so that `int eta p = int nu P = 1`, after
/// checking the balance `int eta p = int nu P`.
pub fn renormalize(pair: &DensityPair, params: &RatchetParams) -> Result<DensityPair> {
    if pair.normalization != Normalization::TotalMass {
        return Err(RatchetError::InvalidParameter(
            "pair is already renormalized".into(),
        ));
    }
    let (ep, np) = balance_integrals(pair, params)?;
    if (ep - np).abs() > BALANCE_TOL * ep.abs().max(np.abs()).max(1.0) {
        return Err(RatchetError::Invariant(format!(
            "exchange balance violated: int eta p = {ep}, int nu P = {np}"
        )));
    }
    let c = 2.0 / (ep + np);
    Ok(DensityPair {
        attached: pair.attached.map(|v| c * v)?,
        detached: pair.detached.map(|v| c * v)?,
        normalization: Normalization::Renormalized,
    })
}

/// `(int eta p, int nu P)`.
pub fn balance_integrals(pair: &DensityPair, params: &RatchetParams) -> Result<(f64, f64)> {
    Ok((
        pair.attached.mul(params.eta.samples())?.integral(),
        pair.detached.mul(params.nu.samples())?.integral(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
    Indeterminate,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Indeterminate => "indeterminate",
        }
    }

    pub fn opposite(&self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Indeterminate => Direction::Indeterminate,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Smallest slack of `v[0] > v[1] > ... > v[k-1]`.
pub fn chain_slack(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
}

/// Direction read off a strict chain of well masses, `Left` for decreasing.
pub fn chain_direction(v: &[f64]) -> Direction {
    let rev: Vec<f64> = v.iter().rev().copied().collect();
    if chain_slack(v) > STRICT_SLACK {
        Direction::Left
    } else if chain_slack(&rev) > STRICT_SLACK {
        Direction::Right
    } else {
        Direction::Indeterminate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellMassReport {
    pub p_hat: Vec<f64>,
    pub big_p_hat: Vec<f64>,
    /// `p_hat` strictly decreasing.
    pub chain_p: bool,
    /// `P_hat` strictly decreasing.
    pub chain_big_p: bool,
    /// `P(x) > P(x + 1/k)` at every node `x <= 1 - 1/k`.
    pub shift_big_p_ok: bool,
    /// Smallest slack among the three forward conditions.
    pub min_margin: f64,
    pub chain_p_rev: bool,
    pub chain_big_p_rev: bool,
    pub shift_big_p_rev: bool,
    /// Smallest slack among the three reversed conditions.
    pub min_margin_rev: f64,
}

impl WellMassReport {
    pub fn new(pair: &DensityPair, k: usize) -> Result<Self> {
        let p_hat = well_integrals(&pair.attached, k)?;
        let big_p_hat = well_integrals(&pair.detached, k)?;
        let m = pair.grid().period_nodes(k)?;
        let d = pair.detached.values();
        let shifts: Vec<f64> = d.iter().zip(&d[m..]).map(|(a, b)| a - b).collect();
        let shift_fwd = shifts.iter().copied().fold(f64::INFINITY, f64::min);
        let shift_rev = shifts.iter().map(|v| -v).fold(f64::INFINITY, f64::min);
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
        let (cp, cd) = (chain_slack(&p_hat), chain_slack(&big_p_hat));
        let (cpr, cdr) = (chain_slack(&rev(&p_hat)), chain_slack(&rev(&big_p_hat)));
        Ok(Self {
            chain_p: cp > STRICT_SLACK,
            chain_big_p: cd > STRICT_SLACK,
            shift_big_p_ok: shift_fwd > STRICT_SLACK,
            min_margin: cp.min(cd).min(shift_fwd),
            chain_p_rev: cpr > STRICT_SLACK,
            chain_big_p_rev: cdr > STRICT_SLACK,
            shift_big_p_rev: shift_rev > STRICT_SLACK,
            min_margin_rev: cpr.min(cdr).min(shift_rev),
            p_hat,
            big_p_hat,
        })
    }

    pub fn forward(&self) -> bool {
        self.chain_p && self.chain_big_p && self.shift_big_p_ok
    }

    pub fn reversed(&self) -> bool {
        self.chain_p_rev && self.chain_big_p_rev && self.shift_big_p_rev
    }

    /// `Left` when all forward conditions hold strictly, `Right` when all
    /// reversed ones do.
    pub fn direction(&self) -> Direction {
        if self.forward() {
            Direction::Left
        } else if self.reversed() {
            Direction::Right
        } else {
            Direction::Indeterminate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportVerdict {
    /// The nu/varsigma-diffusive mean of `0` and `1/k`.
    pub s_mean: f64,
    pub a: f64,
    pub direction: Direction,
    /// `S - a`.
    pub margin: f64,
    /// Margins within this band are reported as indeterminate.
    pub resolution: f64,
}

pub fn transport_verdict(params: &RatchetParams) -> Result<TransportVerdict> {
    let grid = params.grid();
    let m = grid.period_nodes(params.k())?;
    let nu_well = params.nu.samples().restrict(0, m)?;
    let s_mean = diffusive_mean(&nu_well, params.varsigma)?.s;
    let a = params.a();
    let margin = s_mean - a;
    let resolution = 2.0 * grid.spacing();
    let direction = if margin > resolution {
        Direction::Left
    } else if margin < -resolution {
        Direction::Right
    } else {
        Direction::Indeterminate
    };
    Ok(TransportVerdict {
        s_mean,
        a,
        direction,
        margin,
        resolution,
    })
}
