//! The phi-diffusive mean of the endpoints of an interval.
//!
//! `s` is the unique point where the Neumann Green's function of
//! `-d^2/dx^2 + phi` satisfies `G(A, s) = G(B, s)`. Since `G` is symmetric,
//! `G(A, .)` and `G(B, .)` are the responses to deltas at the two endpoints:
//! two tridiagonal solves give `g(x) = G(A, x) - G(B, x)` at every node.

use crate::bvp::SlOperator;
use crate::error::{RatchetError, Result};
use crate::grid::GridFn;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusiveMeanResult {
    pub s: f64,
    /// `|G(A, s) - G(B, s)|` with both functions linearly interpolated at `s`.
    pub g_residual: f64,
    /// Bisection steps over the node indices.
    pub iterations: usize,
}

/// Samples of `g(x) = G(A, x) - G(B, x)` for the operator `-d^2/dx^2 + phi/varsigma`.
pub fn sign_function(phi: &GridFn, varsigma: f64) -> Result<GridFn> {
    // phi/varsigma u - u'' = delta  <=>  phi u - varsigma u'' = varsigma delta;
    // the common factor varsigma does not move the root but is kept for fidelity.
    let op = SlOperator::new(phi.clone(), varsigma)?;
    let f = op.factor()?;
    let n = phi.len();
    let left = f.green_at(0)?;
    let right = f.green_at(n - 1)?;
    let v = left
        .values()
        .iter()
        .zip(right.values())
        .map(|(l, r)| varsigma * (l - r))
        .collect();
    GridFn::new(phi.grid().clone(), v)
}

/// Locates the phi/varsigma-diffusive mean of the grid endpoints.
pub fn diffusive_mean(phi: &GridFn, varsigma: f64) -> Result<DiffusiveMeanResult> {
    let g = sign_function(phi, varsigma)?;
    let grid = g.grid();
    let v = g.values();
    let n = v.len();
    if !(v[0] > 0.0 && v[n - 1] < 0.0) {
        return Err(RatchetError::NoSignChange {
            a: grid.start(),
            b: grid.end(),
            g_left: v[0],
            g_right: v[n - 1],
        });
    }
    // g is strictly decreasing: bisect for the last node with g >= 0.
    let (mut lo, mut hi) = (0usize, n - 1);
    let mut iterations = 0;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if v[mid] >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let t = v[lo] / (v[lo] - v[hi]);
    let s = grid.node(lo) + t * grid.spacing();
    let g_residual = ((1.0 - t) * v[lo] + t * v[hi]).abs();
    Ok(DiffusiveMeanResult {
        s,
        g_residual,
        iterations,
    })
}

/// Diffusive means of `phi` and of its mirror image `x -> phi(A + B - x)`.
pub fn reflection_check(phi: &GridFn, varsigma: f64) -> Result<(f64, f64)> {
    let s = diffusive_mean(phi, varsigma)?.s;
    let s_tilde = diffusive_mean(&phi.reflected(), varsigma)?.s;
    Ok((s, s_tilde))
}
