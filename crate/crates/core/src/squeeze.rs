//! Squeezing-ratchet fixed point.
//!
//! With `q_i` the Neumann Green's function of `nu - varsigma d^2/dx^2` centred
//! at the minimum `a_i`, the matrix `P_ij = (nu q_i)^_j` is positive with unit
//! row sums. Its left Perron vector `xi` gives the fixed point
//! `Q = sum_i xi_i q_i`, whose well weights `(nu Q)^_i` equal `xi_i`.

use crate::bvp::SlOperator;
use crate::error::{RatchetError, Result};
use crate::grid::{well_integrals, GridFn};
use crate::model::{RateProfile, RatchetParams};

const ROW_SUM_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITER: usize = 10_000;

/// `q_1..q_k`, one Green's function per potential minimum.
pub fn green_basis(params: &RatchetParams) -> Result<Vec<GridFn>> {
    let op = SlOperator::new(params.nu.samples().clone(), params.varsigma)?;
    let f = op.factor()?;
    params
        .potential
        .minima_nodes()
        .into_iter()
        .map(|j| f.green_at(j))
        .collect()
}

/// Row-stochastic `k x k` matrix with positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(k: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != k * k {
            return Err(RatchetError::InvalidParameter(format!(
                "{} entries for a {k}x{k} matrix",
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(RatchetError::Invariant(format!(
                "transition entry ({}, {}) = {} is not positive",
                i / k,
                i % k,
                entries[i]
            )));
        }
        let m = Self { k, entries };
        for (i, s) in m.row_sums().into_iter().enumerate() {
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(RatchetError::Invariant(format!(
                    "row {i} sums to {s}, not 1"
                )));
            }
        }
        Ok(m)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.k).map(|i| self.row(i).iter().sum()).collect()
    }

    /// `xi P`.
    pub fn left_apply(&self, xi: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|j| (0..self.k).map(|i| xi[i] * self.get(i, j)).sum())
            .collect()
    }
}

/// `P_ij` = integral of `nu q_i` over well `j`.
pub fn transition_matrix(basis: &[GridFn], nu: &RateProfile, k: usize) -> Result<TransitionMatrix> {
    if basis.len() != k {
        return Err(RatchetError::InvalidParameter(format!(
            "{} basis functions for {k} wells",
            basis.len()
        )));
    }
    let mut entries = Vec::with_capacity(k * k);
    for q in basis {
        entries.extend(well_integrals(&q.mul(nu.samples())?, k)?);
    }
    TransitionMatrix::new(k, entries)
}

/// Left Perron vector of `P`, normalized to unit sum, from a uniform start.
pub fn perron_weights(p: &TransitionMatrix) -> Result<Vec<f64>> {
    perron_weights_from(p, &vec![1.0; p.k()])
}

/// Power iteration `xi <- xi P` from a positive starting vector.
pub fn perron_weights_from(p: &TransitionMatrix, init: &[f64]) -> Result<Vec<f64>> {
    if init.len() != p.k() || init.iter().any(|&v| !(v > 0.0)) {
        return Err(RatchetError::InvalidParameter(
            "power iteration needs a positive start vector of length k".into(),
        ));
    }
    let total: f64 = init.iter().sum();
    let mut xi: Vec<f64> = init.iter().map(|v| v / total).collect();
    let mut change = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let mut next = p.left_apply(&xi);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        change = next
            .iter()
            .zip(&xi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        xi = next;
        if change < POWER_TOL {
            return Ok(xi);
        }
    }
    Err(RatchetError::NoConvergence {
        iterations: POWER_MAX_ITER,
        last_change: change,
    })
}

/// `min_x f(x) - f(x + 1/k)` over nodes `x <= 1 - 1/k`.
pub fn shift_gap(f: &GridFn, k: usize) -> Result<f64> {
    let m = f.grid().period_nodes(k)?;
    let v = f.values();
    Ok(v.iter()
        .zip(&v[m..])
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone)]
pub struct SqueezeSolution {
    pub q_fixed: GridFn,
    pub xi: Vec<f64>,
    /// Shift gap of `q = sum_i q_i`.
    pub gamma: f64,
    /// Shift gap of the fixed point itself.
    pub q_fixed_gap: f64,
    /// `min_i (nu q_i)^_k`.
    pub m_const: f64,
    /// `max_i |(nu Q)^_i - xi_i|`.
    pub residual: f64,
    pub matrix: TransitionMatrix,
}

impl SqueezeSolution {
    /// Whether `Q(x) >= Q(x + 1/k) + M gamma` holds with slack `tol`.
    pub fn shift_bound_holds(&self, tol: f64) -> bool {
        self.q_fixed_gap >= self.m_const * self.gamma - tol
    }
}

pub fn squeeze_solution(params: &RatchetParams) -> Result<SqueezeSolution> {
    let k = params.k();
    let basis = green_basis(params)?;
    let matrix = transition_matrix(&basis, &params.nu, k)?;
    let xi = perron_weights(&matrix)?;
    let grid = params.grid().clone();
    let n = grid.len();
    let mut q_sum = vec![0.0; n];
    let mut q_fixed = vec![0.0; n];
    for (q, &w) in basis.iter().zip(&xi) {
        for ((s, f), v) in q_sum.iter_mut().zip(q_fixed.iter_mut()).zip(q.values()) {
            *s += v;
            *f += w * v;
        }
    }
    let q_sum = GridFn::new(grid.clone(), q_sum)?;
    let q_fixed = GridFn::new(grid, q_fixed)?;
    let weights = well_integrals(&q_fixed.mul(params.nu.samples())?, k)?;
    let residual = weights
        .iter()
        .zip(&xi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let m_const = (0..k)
        .map(|i| matrix.get(i, k - 1))
        .fold(f64::INFINITY, f64::min);
    Ok(SqueezeSolution {
        gamma: shift_gap(&q_sum, k)?,
        q_fixed_gap: shift_gap(&q_fixed, k)?,
        q_fixed,
        xi,
        m_const,
        residual,
        matrix,
    })
}
