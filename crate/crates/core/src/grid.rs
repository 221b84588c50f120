//! Uniform grids, sampled functions and trapezoidal quadrature.
//!
//! Every integral in the crate goes through [`Grid::weights`] (trapezoid with
//! halved end weights). The finite-volume operators elsewhere use the same
//! weights as their control-volume sizes, which makes discrete conservation
//! identities hold to roundoff.

use crate::error::{RatchetError, Result};

/// Uniform grid of `n` nodes covering `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    start: f64,
    end: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(RatchetError::InvalidParameter(format!(
                "grid needs at least 3 nodes, got {n}"
            )));
        }
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(RatchetError::InvalidParameter(format!(
                "grid interval [{start}, {end}] is empty or not finite"
            )));
        }
        Ok(Self {
            start,
            end,
            n,
            h: (end - start) / (n - 1) as f64,
        })
    }

    /// Grid over `[0, 1]`.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.end
        } else {
            self.start + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Trapezoidal weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.weight(i)).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let inner: f64 = values[1..self.n - 1].iter().sum();
        self.h * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }

    /// Index of the node nearest to `x` (clamped to the grid).
    pub fn nearest_index(&self, x: f64) -> usize {
        let t = ((x - self.start) / self.h).round();
        t.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Index of the node at `x`, if `x` is a node up to a small relative tolerance.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.nearest_index(x);
        ((self.node(i) - x).abs() <= 1e-9 * self.h).then_some(i)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end
    }

    /// Grid made of nodes `first..=last` of this one.
    pub fn sub_grid(&self, first: usize, last: usize) -> Result<Grid> {
        if last >= self.n || last < first + 2 {
            return Err(RatchetError::InvalidParameter(format!(
                "sub-grid {first}..={last} invalid for {} nodes",
                self.n
            )));
        }
        Ok(Grid {
            start: self.node(first),
            end: self.node(last),
            n: last - first + 1,
            h: self.h,
        })
    }

    /// Whether the nodes match those of `other` (same interval and count).
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n
            && (self.start - other.start).abs() <= 1e-14
            && (self.end - other.end).abs() <= 1e-14
    }

    /// Number of nodes per period `1/k` on a grid over `[0, 1]`.
    pub fn period_nodes(&self, k: usize) -> Result<usize> {
        if k == 0 || !(self.n - 1).is_multiple_of(k) {
            return Err(RatchetError::GridMismatch(format!(
                "{} intervals are not divisible into {k} wells",
                self.n - 1
            )));
        }
        Ok((self.n - 1) / k)
    }
}

/// A function sampled at the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(RatchetError::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RatchetError::Invariant(format!(
                "non-finite sample {} at node {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Samples of `x -> f(start + end - x)`.
    pub fn reflected(&self) -> GridFn {
        let mut values = self.values.clone();
        values.reverse();
        GridFn {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Restriction to nodes `first..=last`.
    pub fn restrict(&self, first: usize, last: usize) -> Result<GridFn> {
        let grid = self.grid.sub_grid(first, last)?;
        Ok(GridFn {
            grid,
            values: self.values[first..=last].to_vec(),
        })
    }

    /// Nodewise product with another function on the same grid.
    pub fn mul(&self, other: &GridFn) -> Result<GridFn> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(GridFn {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFn> {
        GridFn::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_same_grid(&self, other: &GridFn) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(RatchetError::GridMismatch(
                "functions are sampled on different grids".into(),
            ))
        }
    }

    /// Linear interpolation at `x` (clamped to the grid interval).
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        let t = ((x - g.start) / g.h).clamp(0.0, (g.n - 1) as f64);
        let i = (t.floor() as usize).min(g.n - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Trapezoidal integrals of `f` over the `k` wells `[(i-1)/k, i/k]` of `[0, 1]`.
pub fn well_integrals(f: &GridFn, k: usize) -> Result<Vec<f64>> {
    let grid = f.grid();
    if grid.start() != 0.0 || grid.end() != 1.0 {
        return Err(RatchetError::GridMismatch(
            "well integrals need a grid over [0, 1]".into(),
        ));
    }
    let m = grid.period_nodes(k)?;
    let h = grid.spacing();
    let v = f.values();
    Ok((0..k)
        .map(|w| {
            let seg = &v[w * m..=(w + 1) * m];
            let inner: f64 = seg[1..m].iter().sum();
            h * (inner + 0.5 * (seg[0] + seg[m]))
        })
        .collect())
}
