//! `run` and `sweep`.

use std::path::PathBuf;

use ratchet_core::particles::{simulate_particles, Occupancy, DEFAULT_BINS};
use ratchet_core::stationary::{
    balance_integrals, solve_collaborative_detailed, solve_stationary_detailed,
};
use ratchet_core::transient::{compare_directions_with, run_to_stationary_from, TransientState};
use ratchet_core::{
    compare_histogram, diffusive_mean, reflection_check, renormalize, run_sweep, squeeze_solution,
    transport_verdict, DensityPair, Direction, FlashingSchedule, RatchetParams, SqueezeSolution,
    TransportVerdict, WellMassReport,
};

use crate::config::{FlashingSection, LoadedConfig, ModelKind, ParticlesSection, TransientSection};
use crate::error::CliError;
use crate::output::{fmt_f64, OutputDir, Summary};

pub const SUMMARY_FILE: &str = "summary.txt";
pub const DENSITIES_FILE: &str = "densities.csv";
pub const WELLS_FILE: &str = "wells.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const FIXTURE_FILE: &str = "fixture.toml";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

struct Artifacts {
    dir: OutputDir,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
        self.files.push(self.dir.write_csv(name, header, &rows)?);
        Ok(())
    }

    fn finish(mut self, summary: Summary) -> Result<RunOutcome, CliError> {
        self.files.push(self.dir.write_text(SUMMARY_FILE, &summary.render())?);
        Ok(RunOutcome {
            summary,
            files: self.files,
        })
    }
}

fn header(summary: &mut Summary, cfg: &LoadedConfig, params: &RatchetParams) {
    summary
        .text("model", cfg.config.model.name())
        .text("seed", cfg.config.seed)
        .text("grid_n", params.grid().len())
        .text("k", params.k())
        .num("sigma", params.sigma)
        .num("varsigma", params.varsigma)
        .num("kappa", params.kappa);
}

fn verdict_lines(summary: &mut Summary, v: &TransportVerdict) {
    summary
        .text("direction", v.direction)
        .num("S", v.s_mean)
        .num("a", v.a)
        .num("margin", v.margin)
        .num("resolution", v.resolution);
}

fn report_lines(summary: &mut Summary, r: &WellMassReport) {
    summary
        .nums("p_hat", &r.p_hat)
        .nums("P_hat", &r.big_p_hat)
        .flag("chain_p", r.chain_p)
        .flag("chain_P", r.chain_big_p)
        .flag("shift_P_ok", r.shift_big_p_ok)
        .num("min_margin", r.min_margin)
        .flag("reversed_chains", r.reversed())
        .text("chain_direction", r.direction());
}

fn squeeze_lines(summary: &mut Summary, s: &SqueezeSolution) {
    summary
        .num("gamma", s.gamma)
        .num("M", s.m_const)
        .num("Q_shift_gap", s.q_fixed_gap)
        .flag("Q_shift_bound", s.shift_bound_holds(1e-8))
        .nums("xi", &s.xi)
        .num("squeeze_residual", s.residual);
}

fn density_rows(pair: &DensityPair, q: Option<&SqueezeSolution>) -> Vec<Vec<String>> {
    let g = pair.grid();
    (0..g.len())
        .map(|i| {
            let mut row = vec![
                fmt_f64(g.node(i)),
                fmt_f64(pair.attached.values()[i]),
                fmt_f64(pair.detached.values()[i]),
            ];
            if let Some(s) = q {
                row.push(fmt_f64(s.q_fixed.values()[i]));
            }
            row
        })
        .collect()
}

fn well_rows(r: &WellMassReport, xi: Option<&[f64]>) -> Vec<Vec<String>> {
    (0..r.p_hat.len())
        .map(|i| {
            let mut row = vec![(i + 1).to_string(), fmt_f64(r.p_hat[i]), fmt_f64(r.big_p_hat[i])];
            if let Some(xi) = xi {
                row.push(fmt_f64(xi[i]));
            }
            row
        })
        .collect()
}

/// Runs the model named in the configuration and writes its artifacts.
pub fn run_experiment(cfg: &LoadedConfig) -> Result<RunOutcome, CliError> {
    let params = cfg.build_params()?;
    let mut art = Artifacts {
        dir: OutputDir::create(&cfg.config.output_dir)?,
        files: Vec::new(),
    };
    let mut summary = Summary::default();
    header(&mut summary, cfg, &params);
    match cfg.config.model {
        ModelKind::RandomFlashing | ModelKind::Squeezing => {
            random_flashing(cfg, &params, &mut art, &mut summary)?
        }
        ModelKind::Collaborative => collaborative(&params, &mut art, &mut summary)?,
        ModelKind::DeterministicFlashing => deterministic(cfg, &params, &mut art, &mut summary)?,
        ModelKind::DiffusiveMean => diffusive(&params, &mut art, &mut summary)?,
        ModelKind::Particles => particles(cfg, &params, &mut art, &mut summary)?,
    }
    art.finish(summary)
}

fn random_flashing(
    cfg: &LoadedConfig,
    params: &RatchetParams,
    art: &mut Artifacts,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let k = params.k();
    verdict_lines(summary, &transport_verdict(params)?);
    let squeeze = squeeze_solution(params)?;
    squeeze_lines(summary, &squeeze);
    let sol = solve_stationary_detailed(params)?;
    let report = WellMassReport::new(&sol.pair, k)?;
    report_lines(summary, &report);
    let (ep, np) = balance_integrals(&sol.pair, params)?;
    renormalize(&sol.pair, params)?;
    summary
        .num("residual", sol.residual)
        .num("dropped_row_residual", sol.dropped_row_residual)
        .num("total_mass", sol.pair.total_mass())
        .num("exchange_imbalance", ep - np);
    if cfg.config.model == ModelKind::Squeezing {
        let m = &squeeze.matrix;
        let rows = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| vec![(i + 1).to_string(), (j + 1).to_string(), fmt_f64(m.get(i, j))])
            .collect();
        art.csv("transition.csv", &["i", "j", "P_ij"], rows)?;
    }
    art.csv(DENSITIES_FILE, &["x", "p", "P", "Q"], density_rows(&sol.pair, Some(&squeeze)))?;
    art.csv(WELLS_FILE, &["i", "p_hat", "P_hat", "xi"], well_rows(&report, Some(&squeeze.xi)))?;
    if let Some(t) = &cfg.config.transient {
        transient(params, t, art, summary)?;
    }
    Ok(())
}

fn transient(
    params: &RatchetParams,
    t: &TransientSection,
    art: &mut Artifacts,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let init = TransientState::uniform(params.grid())?;
    let run = run_to_stationary_from(params, init, t.dt, t.tol, t.max_steps, t.record_every)?;
    summary
        .text("transient_steps", run.state.step_count)
        .num("transient_final_gap", *run.gaps.last().expect("history starts with the initial gap"))
        .num("transient_max_mass_drift", run.max_mass_drift);
    if let Some(tau) = run.relaxation_time(t.dt) {
        summary.num("relaxation_time", tau);
    }
    let k = params.k();
    let mut head = vec!["t".to_string(), "mass".to_string(), "gap".to_string()];
    head.extend((1..=k).map(|i| format!("w{i}")));
    let head: Vec<&str> = head.iter().map(String::as_str).collect();
    let rows = run
        .records
        .iter()
        .map(|r| {
            let mut row = vec![fmt_f64(r.t), fmt_f64(r.mass), fmt_f64(r.gap)];
            row.extend(r.wells.iter().map(|w| fmt_f64(*w)));
            row
        })
        .collect();
    art.csv("timeseries.csv", &head, rows)
}

fn collaborative(params: &RatchetParams, art: &mut Artifacts, summary: &mut Summary) -> Result<(), CliError> {
    verdict_lines(summary, &transport_verdict(params)?);
    let sol = solve_collaborative_detailed(params)?;
    let report = WellMassReport::new(&sol.pair, params.k())?;
    report_lines(summary, &report);
    summary
        .num("residual", sol.residual)
        .num("total_mass", sol.pair.total_mass());
    art.csv(DENSITIES_FILE, &["x", "p", "P"], density_rows(&sol.pair, None))?;
    art.csv(WELLS_FILE, &["i", "p_hat", "P_hat"], well_rows(&report, None))
}

fn deterministic(
    cfg: &LoadedConfig,
    params: &RatchetParams,
    art: &mut Artifacts,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let f = cfg.config.flashing.clone().unwrap_or(FlashingSection {
        period: 2.0,
        on_time: 1.0,
        dt: 1e-3,
    });
    let schedule = FlashingSchedule::new(f.period, f.on_time)?;
    let c = compare_directions_with(params, schedule, f.dt)?;
    let v = transport_verdict(params)?;
    summary
        .num("period", f.period)
        .num("on_time", f.on_time)
        .num("dt", f.dt)
        .text("random_direction", c.random)
        .text("deterministic_direction", c.deterministic)
        .text(
            "agree",
            match c.agree {
                Some(b) => b.to_string(),
                None => "undefined".to_string(),
            },
        )
        .num("S", v.s_mean)
        .num("a", v.a)
        .num("well_centre", 0.5 / params.k() as f64)
        .nums("rho_hat", &c.deterministic_wells)
        .text("cycles", c.regime.cycles)
        .num("cycle_change", c.regime.last_change);
    let g = params.grid();
    let rows = (0..g.len())
        .map(|i| {
            vec![
                fmt_f64(g.node(i)),
                fmt_f64(c.regime.after_on.values()[i]),
                fmt_f64(c.regime.cycle_end.values()[i]),
            ]
        })
        .collect();
    art.csv(DENSITIES_FILE, &["x", "rho_on", "rho_end"], rows)?;
    let rows = c
        .deterministic_wells
        .iter()
        .enumerate()
        .map(|(i, m)| vec![(i + 1).to_string(), fmt_f64(*m)])
        .collect();
    art.csv(WELLS_FILE, &["i", "rho_hat"], rows)
}

fn diffusive(params: &RatchetParams, art: &mut Artifacts, summary: &mut Summary) -> Result<(), CliError> {
    let m = params.grid().period_nodes(params.k())?;
    let nu = params.nu.samples().restrict(0, m)?;
    let r = diffusive_mean(&nu, params.varsigma)?;
    let (s, s_tilde) = reflection_check(&nu, params.varsigma)?;
    verdict_lines(summary, &transport_verdict(params)?);
    summary
        .num("s", s)
        .num("s_reflected", s_tilde)
        .num("reflection_defect", s + s_tilde - nu.grid().end())
        .num("g_residual", r.g_residual)
        .text("iterations", r.iterations);
    let g = ratchet_core::diffusive_mean::sign_function(&nu, params.varsigma)?;
    let rows = (0..g.len())
        .map(|i| vec![fmt_f64(g.grid().node(i)), fmt_f64(g.values()[i])])
        .collect();
    art.csv("sign_function.csv", &["x", "g"], rows)
}

fn particles(
    cfg: &LoadedConfig,
    params: &RatchetParams,
    art: &mut Artifacts,
    summary: &mut Summary,
) -> Result<(), CliError> {
    let p = cfg.config.particles.clone().unwrap_or(ParticlesSection {
        n: 100_000,
        t_end: 6.0,
        dt: 5e-4,
    });
    let run = simulate_particles(params, p.n, p.t_end, p.dt, cfg.config.seed)?;
    let pair = solve_stationary_detailed(params)?.pair;
    let k = params.k();
    let wells_ref = Occupancy::of_pair(&pair, k)?;
    let wells_cmp = compare_histogram(&run.wells, &wells_ref, p.n)?;
    summary
        .text("rng", run.algorithm)
        .text("n_particles", p.n)
        .num("t_end", p.t_end)
        .num("dt", p.dt)
        .nums("p_hat", &run.wells.attached)
        .nums("P_hat", &run.wells.detached)
        .nums("p_hat_reference", &wells_ref.attached)
        .nums("P_hat_reference", &wells_ref.detached)
        .num("max_well_deviation", wells_cmp.max_well_deviation)
        .num("max_z", wells_cmp.max_z)
        .flag("pass", wells_cmp.pass);
    let rows = (0..k)
        .map(|i| {
            vec![
                (i + 1).to_string(),
                fmt_f64(run.wells.attached[i]),
                fmt_f64(run.wells.detached[i]),
            ]
        })
        .collect();
    art.csv(WELLS_FILE, &["i", "p_hat", "P_hat"], rows)?;
    let bins = if (params.grid().len() - 1).is_multiple_of(DEFAULT_BINS) {
        Some(Occupancy::of_pair(&pair, DEFAULT_BINS)?)
    } else {
        None
    };
    let width = 1.0 / DEFAULT_BINS as f64;
    let rows = (0..DEFAULT_BINS)
        .map(|b| {
            let mut row = vec![
                fmt_f64(b as f64 * width),
                fmt_f64((b + 1) as f64 * width),
                fmt_f64(run.bins.attached[b]),
                fmt_f64(run.bins.detached[b]),
            ];
            if let Some(r) = &bins {
                row.push(fmt_f64(r.attached[b]));
                row.push(fmt_f64(r.detached[b]));
            }
            row
        })
        .collect();
    let head: &[&str] = if bins.is_some() {
        &["x_left", "x_right", "p", "P", "p_ref", "P_ref"]
    } else {
        &["x_left", "x_right", "p", "P"]
    };
    art.csv("histogram.csv", head, rows)
}

/// Evaluates the stationary solver on the sweep lattice, writes `sweep.csv`
/// and, when a lattice point satisfies all strict chains, a fixture config
/// with that `(sigma, kappa)`.
pub fn run_sweep_command(cfg: &LoadedConfig) -> Result<RunOutcome, CliError> {
    let params = cfg.build_params()?;
    if params.psi_alt.is_some() {
        return Err(cfg.error_at("", "model", "sweeps use the randomly flashing model"));
    }
    let mut art = Artifacts {
        dir: OutputDir::create(&cfg.config.output_dir)?,
        files: Vec::new(),
    };
    let lattice = cfg.lattice();
    let result = run_sweep(&params, &lattice)?;
    let mut summary = Summary::default();
    header(&mut summary, cfg, &params);
    verdict_lines(&mut summary, &transport_verdict(&params)?);
    let rows = result
        .points
        .iter()
        .map(|p| {
            let (cp, cd, sh, mm) = match &p.outcome {
                Ok(r) => (r.chain_p, r.chain_big_p, r.shift_big_p_ok, fmt_f64(r.min_margin)),
                Err(_) => (false, false, false, "nan".to_string()),
            };
            vec![
                fmt_f64(p.sigma),
                fmt_f64(p.kappa),
                cp.to_string(),
                cd.to_string(),
                sh.to_string(),
                mm,
            ]
        })
        .collect();
    art.csv(
        SWEEP_FILE,
        &["sigma", "kappa", "chain_p", "chain_P", "shift_P_ok", "min_margin"],
        rows,
    )?;
    let failures = result.points.iter().filter(|p| p.outcome.is_err()).count();
    summary
        .text("lattice_points", result.points.len())
        .text("failed_points", failures)
        .text("sweep_direction", result.direction());
    if let Some(m) = result.best_margin() {
        summary.num("best_margin", m);
    }
    if let Some(m) = result.best_margin_rev() {
        summary.num("best_margin_reversed", m);
    }
    let first = result
        .first(Direction::Left)
        .map(|p| (p, Direction::Left))
        .or_else(|| result.first(Direction::Right).map(|p| (p, Direction::Right)));
    match first {
        Some((p, dir)) => {
            summary
                .flag("satisfied", true)
                .text("fixture_direction", dir)
                .num("fixture_sigma", p.sigma)
                .num("fixture_kappa", p.kappa);
            let mut fixture = cfg.config.clone();
            fixture.params.sigma = p.sigma;
            fixture.params.kappa = p.kappa;
            fixture.sweep = None;
            fixture.model = ModelKind::RandomFlashing;
            let text = toml::to_string(&fixture).map_err(|e| CliError::Output {
                path: FIXTURE_FILE.into(),
                message: e.to_string(),
            })?;
            art.files.push(art.dir.write_text(FIXTURE_FILE, &text)?);
        }
        None => {
            summary.flag("satisfied", false);
        }
    }
    art.finish(summary)
}
