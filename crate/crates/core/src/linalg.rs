//! Tridiagonal and narrow-band elimination without pivoting.
//!
//! All matrices assembled in this crate are (possibly singular) M-matrices that
//! are diagonally dominant by columns, so elimination without pivoting is stable.

use crate::error::{RatchetError, Result};

/// `sub[i]` couples row `i + 1` to column `i`, `sup[i]` couples row `i` to column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(RatchetError::InvalidParameter(format!(
                "tridiagonal lengths sub={} diag={} sup={} are inconsistent",
                sub.len(),
                n,
                sup.len()
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Rows that fail weak diagonal dominance.
    pub fn non_dominant_rows(&self) -> Vec<usize> {
        let n = self.len();
        (0..n)
            .filter(|&i| {
                let off = if i > 0 { self.sub[i - 1].abs() } else { 0.0 }
                    + if i + 1 < n { self.sup[i].abs() } else { 0.0 };
                self.diag[i].abs() < off
            })
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.len();
        let mut pivot = vec![0.0; n];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        pivot[0] = self.diag[0];
        check_pivot(pivot[0], 0)?;
        for i in 1..n {
            let l = self.sub[i - 1] / pivot[i - 1];
            lower[i - 1] = l;
            pivot[i] = self.diag[i] - l * self.sup[i - 1];
            check_pivot(pivot[i], i)?;
        }
        Ok(TridiagonalLu {
            lower,
            pivot,
            sup: self.sup.clone(),
        })
    }

    /// Factorization of an M-matrix given its row excesses
    /// `diag_i + sub_{i-1} + sup_i >= 0`. Pivots are formed from the excesses
    /// by additions only, so nearly singular Neumann-type operators keep full
    /// relative accuracy.
    pub fn factor_with_excess(&self, excess: &[f64]) -> Result<TridiagonalLu> {
        let n = self.len();
        if excess.len() != n {
            return Err(RatchetError::InvalidParameter(format!(
                "excess length {} for {n} rows",
                excess.len()
            )));
        }
        if self.sub.iter().chain(&self.sup).any(|&v| v > 0.0)
            || excess.iter().any(|&e| !(e >= 0.0))
        {
            return Err(RatchetError::InvalidParameter(
                "not an M-matrix with nonnegative row excess".into(),
            ));
        }
        let up = |i: usize| if i + 1 < n { -self.sup[i] } else { 0.0 };
        let mut pivot = vec![0.0; n];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        let mut e = excess[0];
        pivot[0] = e + up(0);
        check_pivot(pivot[0], 0)?;
        for i in 1..n {
            lower[i - 1] = self.sub[i - 1] / pivot[i - 1];
            e = excess[i] - self.sub[i - 1] * e / pivot[i - 1];
            pivot[i] = e + up(i);
            check_pivot(pivot[i], i)?;
        }
        Ok(TridiagonalLu {
            lower,
            pivot,
            sup: self.sup.clone(),
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.factor()?.solve_in_place(&mut x);
        Ok(x)
    }
}

fn check_pivot(p: f64, row: usize) -> Result<()> {
    if p == 0.0 || !p.is_finite() {
        Err(RatchetError::Singular { row })
    } else {
        Ok(())
    }
}

/// Thomas factorization, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    pivot: Vec<f64>,
    sup: Vec<f64>,
}

impl TridiagonalLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.pivot.len();
        for i in 1..n {
            x[i] -= self.lower[i - 1] * x[i - 1];
        }
        x[n - 1] /= self.pivot[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.sup[i] * x[i + 1]) / self.pivot[i];
        }
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored by rows.
///
/// Optionally the last row is dense; this is how a singular conservative
/// operator gets closed by a normalization row.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
    dense_last: Option<Vec<f64>>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
            dense_last: None,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + 1 == self.n {
            if let Some(row) = &self.dense_last {
                return row[j];
            }
        }
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// Multiplies every entry by `c`.
    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
        if let Some(row) = &mut self.dense_last {
            row.iter_mut().for_each(|v| *v *= c);
        }
    }

    /// Replaces the last row by a dense row.
    pub fn set_dense_last_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.n);
        self.dense_last = Some(row);
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            if i + 1 == self.n {
                if let Some(row) = &self.dense_last {
                    *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
                    continue;
                }
            }
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            *yi = (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum();
        }
        y
    }

    /// `sum_j |a_ij| |x_j|` per row, the natural scale for residuals.
    pub fn apply_abs(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            if i + 1 == self.n {
                if let Some(row) = &self.dense_last {
                    *yi = row.iter().zip(x).map(|(a, b)| (a * b).abs()).sum();
                    continue;
                }
            }
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            *yi = (lo..=hi)
                .map(|j| (self.data[self.slot(i, j)] * x[j]).abs())
                .sum();
        }
        y
    }

    /// Transposed product `A^T x`, ignoring any dense last row.
    pub fn apply_transpose_band(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, &xi) in x.iter().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for (j, yj) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yj += self.data[self.slot(i, j)] * xi;
            }
        }
        y
    }

    /// In-place LU without pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let band_rows = if self.dense_last.is_some() { n - 1 } else { n };
        let mut last_multipliers = Vec::new();
        for k in 0..n {
            if k + 1 == n && self.dense_last.is_some() {
                break;
            }
            let pivot = self.data[self.slot(k, k)];
            check_pivot(pivot, k)?;
            let jmax = (k + ku).min(n - 1);
            for i in (k + 1)..=(k + kl).min(band_rows.saturating_sub(1)) {
                let s = self.slot(i, k);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l != 0.0 {
                    for j in (k + 1)..=jmax {
                        let u = self.data[self.slot(k, j)];
                        let t = self.slot(i, j);
                        self.data[t] -= l * u;
                    }
                }
            }
            if let Some(row) = self.dense_last.as_mut() {
                let l = row[k] / pivot;
                last_multipliers.push(l);
                if l != 0.0 {
                    for j in (k + 1)..=jmax {
                        let s = k * (kl + ku + 1) + (j + kl - k);
                        row[j] -= l * self.data[s];
                    }
                }
            }
        }
        if let Some(row) = &self.dense_last {
            check_pivot(row[n - 1], n - 1)?;
        }
        Ok(BandLu {
            m: self,
            last_multipliers,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    last_multipliers: Vec<f64>,
}

impl BandLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        let band_rows = if m.dense_last.is_some() { n - 1 } else { n };
        for i in 1..band_rows {
            let lo = i.saturating_sub(m.kl);
            let mut acc = x[i];
            for (j, xj) in x.iter().enumerate().take(i).skip(lo) {
                acc -= m.data[m.slot(i, j)] * xj;
            }
            x[i] = acc;
        }
        if m.dense_last.is_some() {
            let mut acc = x[n - 1];
            for (l, xj) in self.last_multipliers.iter().zip(x.iter()) {
                acc -= l * xj;
            }
            x[n - 1] = acc;
        }
        for i in (0..n).rev() {
            let (diag, hi) = match (&m.dense_last, i + 1 == n) {
                (Some(row), true) => (row[n - 1], i),
                _ => (m.data[m.slot(i, i)], (i + m.ku).min(n - 1)),
            };
            let mut acc = x[i];
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(i + 1) {
                acc -= m.data[m.slot(i, j)] * xj;
            }
            x[i] = acc / diag;
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {

    #[test]
    fn excess_factorization_conserves_on_near_singular_operator() {
        // Neumann Laplacian with conductance 1e4 plus a tiny diagonal mass.
        let n = 2001;
        let (c, m) = (1e4, 1e-7);
        let excess = vec![m; n];
        let diag = (0..n)
            .map(|i| m + if i == 0 || i + 1 == n { c } else { 2.0 * c })
            .collect();
        let sys = TridiagonalSystem::new(vec![-c; n - 1], diag, vec![-c; n - 1]).unwrap();
        let mut x = vec![0.0; n];
        x[n / 3] = 1.0;
        sys.factor_with_excess(&excess).unwrap().solve_in_place(&mut x);
        let total: f64 = x.iter().map(|v| m * v).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
        assert!(x.iter().all(|&v| v > 0.0));
    }
    use super::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let l = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= l * a[k][j];
                }
                b[i] -= l * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn thomas_matches_known_solution() {
        let sys = TridiagonalSystem::new(
            vec![-1.0; 4],
            vec![4.0, 4.0, 4.0, 4.0, 4.0],
            vec![-1.0; 4],
        )
        .unwrap();
        let x = vec![1.0, -2.0, 3.0, 0.5, 2.0];
        let b = sys.apply(&x);
        let y = sys.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-14);
        }
        assert!(sys.non_dominant_rows().is_empty());
    }

    #[test]
    fn thomas_reports_zero_pivot() {
        let sys = TridiagonalSystem::new(vec![1.0], vec![0.0, 1.0], vec![1.0]).unwrap();
        assert_eq!(sys.solve(&[1.0, 1.0]), Err(RatchetError::Singular { row: 0 }));
    }

    #[test]
    fn inconsistent_lengths_rejected() {
        assert!(TridiagonalSystem::new(vec![1.0; 2], vec![1.0; 2], vec![1.0]).is_err());
    }

    #[test]
    fn band_with_dense_row_matches_dense_elimination() {
        let n = 9;
        let mut m = BandMatrix::zeros(n, 2, 2);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                let v = if i == j {
                    6.0 + i as f64
                } else {
                    -(((i * 7 + j * 3) % 5) as f64) * 0.3
                };
                m.add(i, j, v);
                dense[i][j] = v;
            }
        }
        let last: Vec<f64> = (0..n).map(|j| 0.5 + j as f64 * 0.1).collect();
        dense[n - 1] = last.clone();
        m.set_dense_last_row(last);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let want = dense_solve(dense, b.clone());
        let lu = m.clone().factor().unwrap();
        let got = lu.solve(&b);
        for (u, v) in want.iter().zip(&got) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
        let back = m.apply(&got);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn band_solve_inverts_apply(seed in 0u64..500, n in 3usize..40) {
            let mut m = BandMatrix::zeros(n, 2, 2);
            for i in 0..n {
                let mut off = 0.0;
                for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                    if i != j {
                        let v = -(((seed as usize + i * 31 + j * 17) % 11) as f64) * 0.1;
                        m.add(i, j, v);
                        off += v.abs();
                    }
                }
                m.add(i, i, off + 1.0);
            }
            let x: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.7 + seed as f64).cos()).collect();
            let b = m.apply(&x);
            let y = m.factor().unwrap().solve(&b);
            for (u, v) in x.iter().zip(&y) {
                proptest::prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
