//! Neumann Sturm-Liouville problems `phi u - varsigma u'' = f` on a uniform grid.
//!
//! Second-order central differences with mirror ghost nodes at both ends.
//! Multiplied by the trapezoid weights the discrete operator is symmetric, so
//! the discrete Green's function is symmetric and `sum w phi u = sum w f`
//! holds to roundoff.

use crate::error::{RatchetError, Result};
use crate::grid::{Grid, GridFn};
use crate::linalg::{TridiagonalLu, TridiagonalSystem};

#[derive(Debug, Clone)]
pub struct SlOperator {
    phi: GridFn,
    varsigma: f64,
}

impl SlOperator {
    pub fn new(phi: GridFn, varsigma: f64) -> Result<Self> {
        if !(varsigma > 0.0 && varsigma.is_finite()) {
            return Err(RatchetError::InvalidParameter(format!(
                "diffusivity must be positive, got {varsigma}"
            )));
        }
        if let Some(i) = phi.values().iter().position(|&v| v <= 0.0) {
            return Err(RatchetError::InvalidParameter(format!(
                "zeroth-order coefficient must be positive, got {} at node {i}",
                phi.values()[i]
            )));
        }
        Ok(Self { phi, varsigma })
    }

    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn phi(&self) -> &GridFn {
        &self.phi
    }

    pub fn varsigma(&self) -> f64 {
        self.varsigma
    }

    /// The weighted (symmetric) system `W (phi - varsigma D2)`.
    pub fn weighted_system(&self) -> TridiagonalSystem {
        let g = self.grid();
        let n = g.len();
        let c = self.varsigma / g.spacing();
        let phi = self.phi.values();
        let diag = (0..n)
            .map(|i| {
                let faces = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
                g.weight(i) * phi[i] + faces * c
            })
            .collect();
        TridiagonalSystem {
            sub: vec![-c; n - 1],
            diag,
            sup: vec![-c; n - 1],
        }
    }

    /// Row sums of the weighted system, `w_i phi_i`.
    fn row_excess(&self) -> Vec<f64> {
        let g = self.grid();
        self.phi
            .values()
            .iter()
            .enumerate()
            .map(|(i, p)| g.weight(i) * p)
            .collect()
    }

    pub fn factor(&self) -> Result<SlFactor> {
        Ok(SlFactor {
            grid: self.grid().clone(),
            lu: self.weighted_system().factor_with_excess(&self.row_excess())?,
        })
    }

    /// Pointwise discrete residual `phi u - varsigma D2 u - f` (mirror closure at the ends).
    pub fn residual(&self, u: &GridFn, rhs: &GridFn) -> Vec<f64> {
        let g = self.grid();
        let n = g.len();
        let h2 = g.spacing() * g.spacing();
        let (u, f, phi) = (u.values(), rhs.values(), self.phi.values());
        (0..n)
            .map(|i| {
                let left = if i == 0 { u[1] } else { u[i - 1] };
                let right = if i + 1 == n { u[n - 2] } else { u[i + 1] };
                phi[i] * u[i] - self.varsigma * (left - 2.0 * u[i] + right) / h2 - f[i]
            })
            .collect()
    }
}

/// A factored operator, for repeated solves.
#[derive(Debug, Clone)]
pub struct SlFactor {
    grid: Grid,
    lu: TridiagonalLu,
}

impl SlFactor {
    pub fn solve(&self, rhs: &GridFn) -> Result<GridFn> {
        if !rhs.grid().same_as(&self.grid) {
            return Err(RatchetError::GridMismatch(
                "right-hand side is not on the operator grid".into(),
            ));
        }
        let mut x: Vec<f64> = rhs
            .values()
            .iter()
            .enumerate()
            .map(|(i, f)| self.grid.weight(i) * f)
            .collect();
        self.lu.solve_in_place(&mut x);
        GridFn::new(self.grid.clone(), x)
    }

    /// Green's function `G(., y)` for the node `y` with index `node`.
    pub fn green_at(&self, node: usize) -> Result<GridFn> {
        if node >= self.grid.len() {
            return Err(RatchetError::InvalidParameter(format!(
                "node {node} outside grid"
            )));
        }
        // The lumped delta has mass one under the trapezoid rule, so W f = e_node.
        let mut x = vec![0.0; self.grid.len()];
        x[node] = 1.0;
        self.lu.solve_in_place(&mut x);
        GridFn::new(self.grid.clone(), x)
    }
}

pub fn solve_sl_neumann(op: &SlOperator, rhs: &GridFn) -> Result<GridFn> {
    op.factor()?.solve(rhs)
}

/// Discrete Green's function `G(., y)`: the response to a lumped delta of unit
/// trapezoidal mass at the node `y` (height `1/h` inside, `2/h` at an end node).
pub fn green_function(op: &SlOperator, y: f64) -> Result<GridFn> {
    let node = op.grid().index_of(y).ok_or_else(|| {
        RatchetError::InvalidParameter(format!("y = {y} is not a grid node"))
    })?;
    op.factor()?.green_at(node)
}
