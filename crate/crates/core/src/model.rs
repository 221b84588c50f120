//! Admissible ratchet potentials, transition-rate profiles and model parameters.

use crate::error::{RatchetError, Result};
use crate::grid::{Grid, GridFn};

const PERIODICITY_TOL: f64 = 1e-10;

fn check_unit_grid(grid: &Grid) -> Result<()> {
    if grid.start() != 0.0 || grid.end() != 1.0 {
        return Err(RatchetError::GridMismatch(format!(
            "grid must cover [0, 1], got [{}, {}]",
            grid.start(),
            grid.end()
        )));
    }
    Ok(())
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(RatchetError::InvalidParameter(format!(
            "tooth count k must exceed 1, got {k}"
        )));
    }
    Ok(())
}

/// Smallest node count `n >= min_n` such that `n - 1` is divisible by `2k`,
/// so that well boundaries and well midpoints are nodes.
pub fn aligned_node_count(k: usize, min_n: usize) -> usize {
    let step = 2 * k.max(1);
    let intervals = min_n.saturating_sub(1).max(step);
    intervals.div_ceil(step) * step + 1
}

fn periodicity_residual(values: &[f64], m: usize) -> f64 {
    values
        .iter()
        .zip(&values[m..])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// A `1/k`-periodic potential with maxima at `x_i = (i-1)/k` and minima at
/// `a_i = a + x_i`, strictly monotone in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    k: usize,
    a_node: usize,
    values: GridFn,
    slope: GridFn,
}

/// Builds a potential from two cubic Hermite arcs per tooth with zero end
/// slopes: descending on `[x_i, a_i]`, ascending on `[a_i, x_{i+1}]`.
/// The minimum value is 0, the maximum `depth`. `a` is snapped to the nearest node.
pub fn make_smoothed_sawtooth(k: usize, a: f64, depth: f64, grid: &Grid) -> Result<Potential> {
    check_k(k)?;
    check_unit_grid(grid)?;
    let period = 1.0 / k as f64;
    if !(a > 0.0 && a < period) {
        return Err(RatchetError::InvalidParameter(format!(
            "minimum offset a = {a} must satisfy 0 < a < 1/k = {period}"
        )));
    }
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(RatchetError::InvalidParameter(format!(
            "potential depth must be positive, got {depth}"
        )));
    }
    let m = grid.period_nodes(k)?;
    let a_node = ((a / grid.spacing()).round() as usize).clamp(1, m - 1);
    let h = grid.spacing();
    let left = a_node as f64 * h;
    let right = (m - a_node) as f64 * h;
    let (values, slope): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .map(|j| {
            let r = j % m;
            if r < a_node {
                let s = r as f64 / a_node as f64;
                (
                    depth * (1.0 - s * s * (3.0 - 2.0 * s)),
                    -depth * 6.0 * s * (1.0 - s) / left,
                )
            } else {
                let s = (r - a_node) as f64 / (m - a_node) as f64;
                (depth * s * s * (3.0 - 2.0 * s), depth * 6.0 * s * (1.0 - s) / right)
            }
        })
        .unzip();
    let p = Potential {
        k,
        a_node,
        values: GridFn::new(grid.clone(), values)?,
        slope: GridFn::new(grid.clone(), slope)?,
    };
    p.check()?;
    Ok(p)
}

impl Potential {
    pub fn k(&self) -> usize {
        self.k
    }

    /// The (snapped) offset of the minimum inside each well.
    pub fn a(&self) -> f64 {
        self.values.grid().node(self.a_node)
    }

    /// Node offset of the minimum inside each well.
    pub fn a_node(&self) -> usize {
        self.a_node
    }

    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    pub fn values(&self) -> &GridFn {
        &self.values
    }

    /// Exact derivative of the construction at the nodes.
    pub fn slope(&self) -> &GridFn {
        &self.slope
    }

    pub fn period_nodes(&self) -> usize {
        (self.grid().len() - 1) / self.k
    }

    /// Node indices of the minima `a_1..a_k`.
    pub fn minima_nodes(&self) -> Vec<usize> {
        let m = self.period_nodes();
        (0..self.k).map(|i| i * m + self.a_node).collect()
    }

    /// Node indices of the maxima `x_1..x_{k+1}`.
    pub fn maxima_nodes(&self) -> Vec<usize> {
        let m = self.period_nodes();
        (0..=self.k).map(|i| i * m).collect()
    }

    /// The image under `x -> 1 - x`: minima move to `1/k - a` inside each well.
    pub fn reflected(&self) -> Potential {
        Potential {
            k: self.k,
            a_node: self.period_nodes() - self.a_node,
            values: self.values.reflected(),
            slope: self.slope.reflected().map(|v| -v).expect("finite"),
        }
    }

    /// Verifies periodicity, extremum placement and strict monotonicity.
    pub fn check(&self) -> Result<()> {
        let m = self.period_nodes();
        let v = self.values.values();
        let d = self.slope.values();
        let res = periodicity_residual(v, m);
        if res >= PERIODICITY_TOL {
            return Err(RatchetError::Invariant(format!(
                "potential periodicity residual {res:e}"
            )));
        }
        for (j, w) in v.windows(2).enumerate() {
            let r = j % m;
            let descending = r < self.a_node;
            if (descending && w[1] >= w[0]) || (!descending && w[1] <= w[0]) {
                return Err(RatchetError::Invariant(format!(
                    "potential not strictly monotone between nodes {j} and {}",
                    j + 1
                )));
            }
        }
        for j in self.minima_nodes().into_iter().chain(self.maxima_nodes()) {
            if d[j] != 0.0 {
                return Err(RatchetError::Invariant(format!(
                    "nonzero slope {} at extremum node {j}",
                    d[j]
                )));
            }
        }
        Ok(())
    }
}

/// A strictly positive, `1/k`-periodic transition-rate profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    k: usize,
    samples: GridFn,
}

impl RateProfile {
    pub fn new(samples: GridFn, k: usize) -> Result<Self> {
        check_k(k)?;
        check_unit_grid(samples.grid())?;
        let m = samples.grid().period_nodes(k)?;
        if let Some(i) = samples.values().iter().position(|&v| v <= 0.0) {
            return Err(RatchetError::InvalidParameter(format!(
                "rate must be positive, got {} at node {i}",
                samples.values()[i]
            )));
        }
        let res = periodicity_residual(samples.values(), m);
        let scale = samples.max().max(1.0);
        if res >= PERIODICITY_TOL * scale {
            return Err(RatchetError::Invariant(format!(
                "rate periodicity residual {res:e}"
            )));
        }
        Ok(Self { k, samples })
    }

    pub fn constant(grid: &Grid, k: usize, value: f64) -> Result<Self> {
        Self::new(GridFn::constant(grid.clone(), value)?, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn samples(&self) -> &GridFn {
        &self.samples
    }

    pub fn values(&self) -> &[f64] {
        self.samples.values()
    }

    pub fn reflected(&self) -> RateProfile {
        RateProfile {
            k: self.k,
            samples: self.samples.reflected(),
        }
    }
}

/// `base` plus a periodized Gaussian bump of standard deviation `width`
/// (truncated at `6 width`) centred at `s_star + x_i`, scaled so that its
/// integral over each well is `mass`.
pub fn make_peaked_rate(
    k: usize,
    s_star: f64,
    width: f64,
    base: f64,
    mass: f64,
    grid: &Grid,
) -> Result<RateProfile> {
    let period = 1.0 / k as f64;
    if !(s_star > 0.0 && s_star < period) {
        return Err(RatchetError::InvalidParameter(format!(
            "active site s_star = {s_star} must satisfy 0 < s_star < 1/k = {period}"
        )));
    }
    make_multi_peaked_rate(k, &[s_star], width, base, mass, grid)
}

/// Like [`make_peaked_rate`] with several active sites per well; `mass` is
/// the per-well integral of each bump.
pub fn make_multi_peaked_rate(
    k: usize,
    sites: &[f64],
    width: f64,
    base: f64,
    mass: f64,
    grid: &Grid,
) -> Result<RateProfile> {
    check_k(k)?;
    check_unit_grid(grid)?;
    for (name, v) in [("width", width), ("base", base), ("mass", mass)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(RatchetError::InvalidParameter(format!(
                "peaked rate {name} must be positive, got {v}"
            )));
        }
    }
    let m = grid.period_nodes(k)?;
    let period = 1.0 / k as f64;
    if let Some(site) = sites.iter().find(|s| !(0.0..period).contains(*s)) {
        return Err(RatchetError::InvalidParameter(format!(
            "active site {site} outside [0, 1/k)"
        )));
    }
    let values = periodic_bumps(grid, m, sites, width, base, mass);
    RateProfile::new(GridFn::new(grid.clone(), values)?, k)
}

fn periodic_bumps(grid: &Grid, m: usize, sites: &[f64], width: f64, base: f64, mass: f64) -> Vec<f64> {
    let h = grid.spacing();
    let mut values = vec![base; grid.len()];
    let reach = 6.0 * width;
    let period_len = m as f64 * h;
    let images = (reach / period_len).ceil() as i64 + 1;
    for &site in sites {
        let centre = (((site - grid.start()) / h).round() as usize) % m;
        // One period of the periodized bump, indexed by node offset.
        let bump: Vec<f64> = (0..m)
            .map(|r| {
                let d0 = (r as i64 - centre as i64) as f64 * h;
                (-images..=images)
                    .map(|img| d0 + img as f64 * period_len)
                    .filter(|d| d.abs() <= reach)
                    .map(|d| (-0.5 * (d / width).powi(2)).exp())
                    .sum()
            })
            .collect();
        let scale = mass / (h * bump.iter().sum::<f64>());
        for (j, v) in values.iter_mut().enumerate() {
            *v += scale * bump[j % m];
        }
    }
    values
}

/// A single bump on an arbitrary grid, periodized over the whole interval:
/// `base` plus a Gaussian of standard deviation `width` centred at the node
/// nearest to `centre`, truncated at `6 width` and scaled to integral `mass`.
pub fn peaked_profile(grid: &Grid, centre: f64, width: f64, base: f64, mass: f64) -> Result<GridFn> {
    for (name, v) in [("width", width), ("base", base), ("mass", mass)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(RatchetError::InvalidParameter(format!(
                "peaked profile {name} must be positive, got {v}"
            )));
        }
    }
    if !grid.contains(centre) {
        return Err(RatchetError::InvalidParameter(format!(
            "centre {centre} outside the grid interval"
        )));
    }
    let values = periodic_bumps(grid, grid.len() - 1, &[centre], width, base, mass);
    GridFn::new(grid.clone(), values)
}

/// Full description of a two-state ratchet.
#[derive(Debug, Clone)]
pub struct RatchetParams {
    pub sigma: f64,
    pub varsigma: f64,
    pub kappa: f64,
    pub potential: Potential,
    pub nu: RateProfile,
    pub eta: RateProfile,
    /// Potential felt by the detached state (collaborative variant).
    pub psi_alt: Option<GridFn>,
}

impl RatchetParams {
    pub fn new(
        sigma: f64,
        varsigma: f64,
        kappa: f64,
        potential: Potential,
        nu: RateProfile,
        eta: RateProfile,
    ) -> Result<Self> {
        let p = Self {
            sigma,
            varsigma,
            kappa,
            potential,
            nu,
            eta,
            psi_alt: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_psi_alt(mut self, psi_alt: GridFn) -> Result<Self> {
        self.psi_alt = Some(psi_alt);
        self.validate()?;
        Ok(self)
    }

    pub fn with_sigma_kappa(&self, sigma: f64, kappa: f64) -> Result<Self> {
        let mut p = self.clone();
        p.sigma = sigma;
        p.kappa = kappa;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma", self.sigma),
            ("varsigma", self.varsigma),
            ("kappa", self.kappa),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RatchetError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let k = self.potential.k();
        if self.nu.k() != k || self.eta.k() != k {
            return Err(RatchetError::InvalidParameter(format!(
                "period counts differ: potential {k}, nu {}, eta {}",
                self.nu.k(),
                self.eta.k()
            )));
        }
        let g = self.potential.grid();
        if !g.same_as(self.nu.samples().grid()) || !g.same_as(self.eta.samples().grid()) {
            return Err(RatchetError::GridMismatch(
                "potential and rates are sampled on different grids".into(),
            ));
        }
        if let Some(alt) = &self.psi_alt {
            if !g.same_as(alt.grid()) {
                return Err(RatchetError::GridMismatch(
                    "second potential is sampled on a different grid".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    pub fn k(&self) -> usize {
        self.potential.k()
    }

    pub fn a(&self) -> f64 {
        self.potential.a()
    }

    /// `b = psi' / eta`.
    pub fn drift_ratio(&self) -> GridFn {
        let v = self
            .potential
            .slope()
            .values()
            .iter()
            .zip(self.eta.values())
            .map(|(d, e)| d / e)
            .collect();
        GridFn::new(self.grid().clone(), v).expect("finite ratio of finite samples")
    }

    /// The instance mirrored by `x -> 1 - x`.
    pub fn reflected(&self) -> RatchetParams {
        RatchetParams {
            sigma: self.sigma,
            varsigma: self.varsigma,
            kappa: self.kappa,
            potential: self.potential.reflected(),
            nu: self.nu.reflected(),
            eta: self.eta.reflected(),
            psi_alt: self.psi_alt.as_ref().map(GridFn::reflected),
        }
    }
}

/// Detachment rate `nu exp(kappa psi / sigma)`, the choice for which no
/// transport occurs.
pub fn conjugate_eta(nu: &RateProfile, potential: &Potential, kappa: f64, sigma: f64) -> Result<RateProfile> {
    let v = nu
        .values()
        .iter()
        .zip(potential.values().values())
        .map(|(n, psi)| n * (kappa * psi / sigma).exp())
        .collect();
    RateProfile::new(GridFn::new(potential.grid().clone(), v)?, nu.k())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::unit(n).unwrap()
    }

    #[test]
    fn aligned_counts() {
        assert_eq!(aligned_node_count(2, 2001), 2001);
        assert_eq!(aligned_node_count(3, 2001), 2005);
        assert_eq!((aligned_node_count(5, 1000) - 1) % 10, 0);
    }

    #[test]
    fn symmetric_tooth() {
        let p = make_smoothed_sawtooth(2, 0.25, 1.0, &grid(2001)).unwrap();
        let v = p.values().values();
        for j in 0..v.len() {
            assert!((v[j] - v[v.len() - 1 - j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn monotone_between_extrema() {
        let p = make_smoothed_sawtooth(2, 0.1, 1.0, &grid(2001)).unwrap();
        let g = p.grid().clone();
        let v = p.values().values();
        let tol = 1e-12;
        for j in 1..v.len() - 1 {
            let x = g.node(j);
            let w = x % 0.5;
            let slope = (v[j + 1] - v[j - 1]) / (2.0 * g.spacing());
            if w > 1e-9 && w < 0.1 - g.spacing() {
                assert!(slope <= -tol, "x={x} slope={slope}");
            } else if w > 0.1 + g.spacing() && w < 0.5 - g.spacing() {
                assert!(slope >= tol, "x={x} slope={slope}");
            }
        }
        assert_eq!(p.minima_nodes(), vec![200, 1200]);
        assert_eq!(p.maxima_nodes(), vec![0, 1000, 2000]);
    }

    #[test]
    fn periodic_teeth() {
        let g = grid(aligned_node_count(3, 2001));
        let p = make_smoothed_sawtooth(3, 0.2, 2.0, &g).unwrap();
        let v = p.values().values();
        let m = p.period_nodes();
        for j in 0..v.len() - m {
            assert!((v[j] - v[j + m]).abs() <= 1e-12);
        }
        assert!(p.check().is_ok());
    }

    #[test]
    fn sawtooth_rejects_bad_offset_and_grid() {
        let g = grid(2001);
        assert!(make_smoothed_sawtooth(2, 0.5, 1.0, &g).is_err());
        assert!(make_smoothed_sawtooth(2, 0.0, 1.0, &g).is_err());
        assert!(make_smoothed_sawtooth(1, 0.2, 1.0, &g).is_err());
        let half = Grid::new(0.0, 0.5, 1001).unwrap();
        assert!(make_smoothed_sawtooth(2, 0.2, 1.0, &half).is_err());
    }

    #[test]
    fn sawtooth_wells_are_equal() {
        let p = make_smoothed_sawtooth(2, 0.13, 1.0, &grid(2001)).unwrap();
        let w = crate::grid::well_integrals(p.values(), 2).unwrap();
        assert!((w[0] - w[1]).abs() < 1e-14);
    }

    #[test]
    fn reflected_potential_moves_minimum() {
        let p = make_smoothed_sawtooth(2, 0.1, 1.0, &grid(2001)).unwrap();
        let r = p.reflected();
        assert!((r.a() - 0.4).abs() < 1e-12);
        r.check().unwrap();
    }

    #[test]
    fn peaked_rate_mass_per_period() {
        let g = grid(2001);
        let nu = make_peaked_rate(2, 0.3, 0.01, 0.01, 1.0, &g).unwrap();
        let excess = nu.samples().map(|v| v - 0.01).unwrap();
        for w in crate::grid::well_integrals(&excess, 2).unwrap() {
            assert!((w - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn peaked_rate_argmax() {
        let g = grid(2001);
        let nu = make_peaked_rate(2, 0.15, 0.005, 0.01, 1.0, &g).unwrap();
        let v = &nu.values()[..=1000];
        let argmax = (0..v.len()).max_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
        assert!((g.node(argmax) - 0.15).abs() <= g.spacing());
    }

    #[test]
    fn wide_bump_is_nearly_constant() {
        let g = grid(2001);
        let nu = make_peaked_rate(2, 0.1, 5.0, 0.01, 1.0, &g).unwrap();
        let spread = nu.samples().max() - nu.samples().min();
        assert!(spread < 1e-6 * nu.samples().max(), "{spread}");
    }

    #[test]
    fn peaked_rate_rejects_nonpositive_inputs() {
        let g = grid(2001);
        assert!(make_peaked_rate(2, 0.3, 0.0, 0.01, 1.0, &g).is_err());
        assert!(make_peaked_rate(2, 0.3, 0.01, -1.0, 1.0, &g).is_err());
        assert!(make_peaked_rate(2, 0.3, 0.01, 0.01, 0.0, &g).is_err());
        assert!(make_peaked_rate(2, 0.6, 0.01, 0.01, 1.0, &g).is_err());
    }

    #[test]
    fn rate_rejects_aperiodic_samples() {
        let g = grid(101);
        let f = GridFn::from_fn(g, |x| 1.0 + x).unwrap();
        assert!(RateProfile::new(f, 2).is_err());
    }

    #[test]
    fn params_validation() {
        let g = grid(2001);
        let psi = make_smoothed_sawtooth(2, 0.2, 1.0, &g).unwrap();
        let nu = RateProfile::constant(&g, 2, 1.0).unwrap();
        let eta3 = RateProfile::constant(&grid(aligned_node_count(3, 2001)), 3, 1.0).unwrap();
        assert!(RatchetParams::new(0.0, 1.0, 1.0, psi.clone(), nu.clone(), nu.clone()).is_err());
        assert!(RatchetParams::new(1.0, 1.0, 1.0, psi.clone(), nu.clone(), eta3).is_err());
        let p = RatchetParams::new(1.0, 1.0, 1.0, psi, nu.clone(), nu).unwrap();
        let b = p.drift_ratio();
        for j in p.potential.minima_nodes() {
            assert_eq!(b.values()[j], 0.0);
        }
    }
}
