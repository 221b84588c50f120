//! Stationary solves over a `sigma x kappa` lattice.

use rayon::prelude::*;

use crate::error::{RatchetError, Result};
use crate::model::RatchetParams;
use crate::stationary::{solve_stationary, Direction, WellMassReport};

/// A point counts as satisfying when all strict conditions hold with at
/// least this margin.
pub const SWEEP_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepLattice {
    pub sigmas: Vec<f64>,
    pub kappas: Vec<f64>,
}

impl Default for SweepLattice {
    /// Ten `sigma` values from `1e-1` down to `1e-4` and eight `kappa` values
    /// from `1` up to `200`, both log-spaced.
    fn default() -> Self {
        Self {
            sigmas: log_space(1e-1, 1e-4, 10),
            kappas: log_space(1.0, 200.0, 8),
        }
    }
}

pub fn log_space(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![from];
    }
    let (a, b) = (from.ln(), to.ln());
    (0..count)
        .map(|i| match i {
            0 => from,
            i if i + 1 == count => to,
            i => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

impl SweepLattice {
    pub fn new(sigmas: Vec<f64>, kappas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() || kappas.is_empty() {
            return Err(RatchetError::InvalidParameter("sweep lists must be nonempty".into()));
        }
        if let Some(v) = sigmas.iter().chain(&kappas).find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(RatchetError::InvalidParameter(format!(
                "sweep values must be positive, got {v}"
            )));
        }
        Ok(Self { sigmas, kappas })
    }

    /// Lattice points in evaluation order: `sigma` descending, then `kappa`
    /// ascending.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut s = self.sigmas.clone();
        let mut k = self.kappas.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        k.sort_by(|a, b| a.total_cmp(b));
        s.iter()
            .flat_map(|&sigma| k.iter().map(move |&kappa| (sigma, kappa)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub sigma: f64,
    pub kappa: f64,
    pub outcome: std::result::Result<WellMassReport, RatchetError>,
}

impl SweepPoint {
    pub fn satisfies(&self, direction: Direction) -> bool {
        match (&self.outcome, direction) {
            (Ok(r), Direction::Left) => r.forward() && r.min_margin > SWEEP_MARGIN,
            (Ok(r), Direction::Right) => r.reversed() && r.min_margin_rev > SWEEP_MARGIN,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// In lattice order.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// First point (in lattice order) with strict chains in `direction`.
    pub fn first(&self, direction: Direction) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.satisfies(direction))
    }

    /// Direction of the first satisfying point, trying left then right.
    pub fn direction(&self) -> Direction {
        let left = self.first(Direction::Left);
        let right = self.first(Direction::Right);
        match (left, right) {
            (Some(_), None) => Direction::Left,
            (None, Some(_)) => Direction::Right,
            _ => Direction::Indeterminate,
        }
    }

    /// Largest forward `min_margin` over the lattice.
    pub fn best_margin(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|r| r.min_margin))
            .reduce(f64::max)
    }

    /// Largest reversed margin over the lattice.
    pub fn best_margin_rev(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|r| r.min_margin_rev))
            .reduce(f64::max)
    }
}

/// Solves the stationary problem at every lattice point. Points are solved
/// concurrently and returned in lattice order; a failed solve is recorded,
/// not propagated.
pub fn run_sweep(params: &RatchetParams, lattice: &SweepLattice) -> Result<SweepResult> {
    params.validate()?;
    let k = params.k();
    let points = lattice
        .points()
        .into_par_iter()
        .map(|(sigma, kappa)| {
            let outcome = params
                .with_sigma_kappa(sigma, kappa)
                .and_then(|p| solve_stationary(&p))
                .and_then(|pair| WellMassReport::new(&pair, k));
            SweepPoint { sigma, kappa, outcome }
        })
        .collect();
    Ok(SweepResult { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lattice_endpoints() {
        let l = SweepLattice::default();
        assert_eq!(l.sigmas.len(), 10);
        assert_eq!(l.kappas.len(), 8);
        assert_eq!(l.sigmas[0], 0.1);
        assert_eq!(l.sigmas[9], 1e-4);
        assert_eq!(l.kappas[7], 200.0);
        assert!((l.sigmas[3] - 1e-2).abs() < 1e-15);
        let p = l.points();
        assert_eq!(p[0], (0.1, 1.0));
        assert_eq!(p[79], (1e-4, 200.0));
    }

    #[test]
    fn rejects_empty_or_nonpositive_lists() {
        assert!(SweepLattice::new(vec![], vec![1.0]).is_err());
        assert!(SweepLattice::new(vec![0.1], vec![-1.0]).is_err());
    }
}
