//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use ratchet_core::model::{
    conjugate_eta, make_multi_peaked_rate, make_smoothed_sawtooth, RateProfile, RatchetParams,
};
use ratchet_core::{aligned_node_count, FlashingSchedule, Grid, GridFn, SweepLattice};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    RandomFlashing,
    DeterministicFlashing,
    Collaborative,
    Squeezing,
    DiffusiveMean,
    Particles,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::RandomFlashing => "random-flashing",
            ModelKind::DeterministicFlashing => "deterministic-flashing",
            ModelKind::Collaborative => "collaborative",
            ModelKind::Squeezing => "squeezing",
            ModelKind::DiffusiveMean => "diffusive-mean",
            ModelKind::Particles => "particles",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: GridSection,
    pub params: ParamsSection,
    pub potential: PotentialSection,
    pub nu: RateSection,
    pub eta: RateSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_alt: Option<AltSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient: Option<TransientSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flashing: Option<FlashingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<ParticlesSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Node count; defaults to the smallest count `>= 2001` aligned with `2k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub sigma: f64,
    pub varsigma: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub k: usize,
    pub a: f64,
    #[serde(default = "one")]
    pub depth: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateSection {
    Constant {
        value: f64,
    },
    /// `base` plus Gaussian bumps of width `width` at `sites` (offsets within
    /// the first well), each of mass `mass` per well.
    Peaked {
        sites: Vec<f64>,
        width: f64,
        base: f64,
        mass: f64,
    },
    /// `eta = nu exp(kappa psi / sigma)`; only valid for `eta`.
    Conjugate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AltSection {
    Flat,
    /// The attached-state potential itself.
    Same,
    Sawtooth {
        a: f64,
        #[serde(default = "one")]
        depth: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sigmas: Vec<f64>,
    pub kappas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_steps() -> usize {
    200_000
}
fn default_record_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlashingSection {
    pub period: f64,
    pub on_time: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSection {
    pub n: usize,
    pub t_end: f64,
    pub dt: f64,
}

/// A parsed configuration together with its source text, used to attach
/// line numbers to validation errors.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: String,
    pub path: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            location: path.display().to_string(),
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&source, path)
    }

    pub fn parse(source: &str, path: &Path) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(source).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(source, s.start));
            CliError::Config {
                location: location(path, line),
                message: e.message().trim().to_string(),
            }
        })?;
        Ok(Self {
            config,
            source: source.to_string(),
            path: path.to_path_buf(),
        })
    }

    /// A config error pointing at `section.key` in the source.
    pub fn error_at(&self, section: &str, key: &str, message: impl Into<String>) -> CliError {
        let line = find_key_line(&self.source, section, key)
            .or_else(|| find_key_line(&self.source, "", section));
        CliError::Config {
            location: location(&self.path, line),
            message: message.into(),
        }
    }
}

fn location(path: &Path, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("{}:{l}", path.display()),
        None => path.display().to_string(),
    }
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// 1-based line of `key = ...` inside the table `[section]` (top level when
/// `section` is empty), or of the table header itself when `key` is empty.
pub fn find_key_line(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            if key.is_empty() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid_n: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl LoadedConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.grid_n {
            self.config.grid.n = Some(n);
        }
        if let Some(d) = &o.output_dir {
            self.config.output_dir = d.clone();
        }
        if let Some(s) = o.seed {
            self.config.seed = s;
        }
    }

    pub fn grid_n(&self) -> usize {
        self.config
            .grid
            .n
            .unwrap_or_else(|| aligned_node_count(self.config.potential.k, 2001))
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<(), CliError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(self.error_at(section, key, format!("{section}.{key} must be positive, got {v}")))
        }
    }

    /// Checks every scalar against the constructors' invariants and names
    /// the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        let p = &c.params;
        self.positive("params", "sigma", p.sigma)?;
        self.positive("params", "varsigma", p.varsigma)?;
        self.positive("params", "kappa", p.kappa)?;
        let k = c.potential.k;
        if k < 2 {
            return Err(self.error_at("potential", "k", format!("potential.k must be at least 2, got {k}")));
        }
        let period = 1.0 / k as f64;
        let a = c.potential.a;
        if !(a > 0.0 && a < period) {
            return Err(self.error_at(
                "potential",
                "a",
                format!("potential.a = {a} violates 0 < a < 1/k = {period}"),
            ));
        }
        self.positive("potential", "depth", c.potential.depth)?;
        let n = self.grid_n();
        if n < 3 || !(n - 1).is_multiple_of(k) {
            return Err(self.error_at(
                "grid",
                "n",
                format!("grid.n = {n}: need n >= 3 and n - 1 divisible by k = {k}"),
            ));
        }
        self.validate_rate("nu", &c.nu, period, false)?;
        self.validate_rate("eta", &c.eta, period, true)?;
        if let Some(AltSection::Sawtooth { a, depth }) = &c.psi_alt {
            if !(*a > 0.0 && *a < period) {
                return Err(self.error_at(
                    "psi_alt",
                    "a",
                    format!("psi_alt.a = {a} violates 0 < a < 1/k = {period}"),
                ));
            }
            self.positive("psi_alt", "depth", *depth)?;
        }
        match (c.model, &c.psi_alt) {
            (ModelKind::Collaborative, None) => {
                return Err(self.error_at("", "model", "model collaborative needs a [psi_alt] table"))
            }
            (m, Some(_)) if m != ModelKind::Collaborative => {
                return Err(self.error_at(
                    "psi_alt",
                    "",
                    format!("[psi_alt] is only used by the collaborative model, not {}", m.name()),
                ))
            }
            _ => {}
        }
        if let Some(s) = &c.sweep {
            if s.sigmas.is_empty() || s.kappas.is_empty() {
                return Err(self.error_at("sweep", "sigmas", "sweep lists must be nonempty"));
            }
            for (key, list) in [("sigmas", &s.sigmas), ("kappas", &s.kappas)] {
                if let Some(v) = list.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(self.error_at("sweep", key, format!("sweep.{key} must be positive, got {v}")));
                }
            }
        }
        if let Some(t) = &c.transient {
            self.positive("transient", "dt", t.dt)?;
            self.positive("transient", "tol", t.tol)?;
        }
        if let Some(f) = &c.flashing {
            self.positive("flashing", "dt", f.dt)?;
            FlashingSchedule::new(f.period, f.on_time)
                .and_then(|s| s.steps(f.dt))
                .map_err(|e| self.error_at("flashing", "on_time", e.to_string()))?;
        }
        if let Some(pt) = &c.particles {
            if pt.n == 0 {
                return Err(self.error_at("particles", "n", "particles.n must be at least 1"));
            }
            self.positive("particles", "t_end", pt.t_end)?;
            self.positive("particles", "dt", pt.dt)?;
        }
        Ok(())
    }

    fn validate_rate(&self, section: &str, r: &RateSection, period: f64, allow_conjugate: bool) -> Result<(), CliError> {
        match r {
            RateSection::Constant { value } => self.positive(section, "value", *value),
            RateSection::Peaked { sites, width, base, mass } => {
                if sites.is_empty() {
                    return Err(self.error_at(section, "sites", format!("{section}.sites must be nonempty")));
                }
                if let Some(s) = sites.iter().find(|s| !(**s > 0.0 && **s < period)) {
                    return Err(self.error_at(
                        section,
                        "sites",
                        format!("{section}.sites entry {s} violates 0 < s < 1/k = {period}"),
                    ));
                }
                self.positive(section, "width", *width)?;
                self.positive(section, "base", *base)?;
                self.positive(section, "mass", *mass)
            }
            RateSection::Conjugate if allow_conjugate => Ok(()),
            RateSection::Conjugate => Err(self.error_at(
                section,
                "kind",
                format!("{section}: kind = \"conjugate\" is only available for eta"),
            )),
        }
    }

    /// Builds the model; call [`LoadedConfig::validate`] first for keyed
    /// error messages.
    pub fn build_params(&self) -> Result<RatchetParams, CliError> {
        self.validate()?;
        let c = &self.config;
        let k = c.potential.k;
        let grid = Grid::unit(self.grid_n()).map_err(|e| self.error_at("grid", "n", e.to_string()))?;
        let potential = make_smoothed_sawtooth(k, c.potential.a, c.potential.depth, &grid)
            .map_err(|e| self.error_at("potential", "a", e.to_string()))?;
        let rate = |section: &str, r: &RateSection| -> Result<Option<RateProfile>, CliError> {
            let built = match r {
                RateSection::Constant { value } => RateProfile::constant(&grid, k, *value),
                RateSection::Peaked { sites, width, base, mass } => {
                    make_multi_peaked_rate(k, sites, *width, *base, *mass, &grid)
                }
                RateSection::Conjugate => return Ok(None),
            };
            built.map(Some).map_err(|e| self.error_at(section, "kind", e.to_string()))
        };
        let nu = rate("nu", &c.nu)?.expect("nu is never conjugate after validation");
        let p = &c.params;
        let eta = match rate("eta", &c.eta)? {
            Some(e) => e,
            None => conjugate_eta(&nu, &potential, p.kappa, p.sigma)
                .map_err(|e| self.error_at("eta", "kind", e.to_string()))?,
        };
        let alt = match &c.psi_alt {
            None => None,
            Some(AltSection::Flat) => Some(GridFn::constant(grid.clone(), 0.0)),
            Some(AltSection::Same) => Some(Ok(potential.values().clone())),
            Some(AltSection::Sawtooth { a, depth }) => Some(
                make_smoothed_sawtooth(k, *a, *depth, &grid).map(|q| q.values().clone()),
            ),
        };
        let params = RatchetParams::new(p.sigma, p.varsigma, p.kappa, potential, nu, eta)
            .map_err(|e| self.error_at("params", "", e.to_string()))?;
        match alt {
            None => Ok(params),
            Some(alt) => {
                let alt = alt.map_err(|e| self.error_at("psi_alt", "kind", e.to_string()))?;
                params
                    .with_psi_alt(alt)
                    .map_err(|e| self.error_at("psi_alt", "kind", e.to_string()))
            }
        }
    }

    pub fn lattice(&self) -> SweepLattice {
        match &self.config.sweep {
            Some(s) => SweepLattice {
                sigmas: s.sigmas.clone(),
                kappas: s.kappas.clone(),
            },
            None => SweepLattice::default(),
        }
    }
}
