//! Batch driver: runs configured solves and verification suites and renders
//! their reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::collision::CollisionError;
use crate::config::{ConfigError, InitialData, Mode, RunConfig};
use crate::cosmo::{apriori_check, BoundReport, APRIORI_TOL};
use crate::phase_space::sobolev_norm;
use crate::solver::{
    decay_check, direct_solve, energy_estimate_check, picard_solve, ContractionReport, SolveConfig, SolverError,
    INIT_RESIDUAL_TOL,
};
use crate::trajectory::{SolveStatus, Trajectory};
use crate::verify::{jacobian_suite, kinematics_suite, moser_suite, random_pairs, BumpFamily, MoserError, MoserSetup};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Ok,
    CheckFailure,
    ConfigError,
    ValidityHorizon,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::CheckFailure => 1,
            Outcome::ConfigError => 2,
            Outcome::ValidityHorizon => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Moser(#[from] MoserError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("sweep: {0}")]
    Sweep(String),
}

impl CliError {
    pub fn outcome(&self) -> Outcome {
        match self {
            CliError::Config(_) | CliError::Sweep(_) => Outcome::ConfigError,
            CliError::Solver(SolverError::InvalidInitialData(_) | SolverError::BadConfig(_)) => Outcome::ConfigError,
            _ => Outcome::CheckFailure,
        }
    }
}

/// Result of one configured run, before anything is written to disk.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub outcome: Outcome,
    pub report: String,
    pub csv: Option<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Executes the configured mode without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    match cfg.mode {
        Mode::Direct | Mode::Picard => simulate_artifacts(cfg),
        Mode::VerifyCollision => verify_collision(cfg),
        Mode::VerifyEnergy => verify_energy(cfg),
        Mode::Sweep => Err(CliError::Sweep(
            "sweep mode needs a parameter and values; use the sweep command".into(),
        )),
    }
}

/// Executes `cfg` and writes `trajectory.csv` and `report.txt` under `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunArtifacts, CliError> {
    let art = execute(cfg)?;
    write_artifacts(&art, out)?;
    Ok(art)
}

pub fn write_artifacts(art: &RunArtifacts, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    if let Some(csv) = &art.csv {
        let path = out.join("trajectory.csv");
        fs::write(&path, csv).map_err(io_err(&path))?;
    }
    let path = out.join("report.txt");
    fs::write(&path, &art.report).map_err(io_err(&path))?;
    Ok(())
}

fn header(cfg: &RunConfig, title: &str) -> String {
    let mut r = String::new();
    let s = &cfg.solve;
    let kernel = serde_json::to_string(&cfg.collision.kernel).unwrap_or_default();
    let _ = writeln!(r, "embsim {title}");
    let _ = writeln!(
        r,
        "physics: Lambda = {}, m = {}, rho = {}",
        cfg.physics.lambda, cfg.physics.m, cfg.physics.rho
    );
    let _ = writeln!(
        r,
        "grid: u_max = {}, n = {}; kernel {kernel}, sphere order {}, stride {}",
        cfg.grid.u_max, cfg.grid.n, cfg.collision.sphere_order, cfg.collision.stride
    );
    let _ = writeln!(
        r,
        "time: {} steps of {:e} (T = {}); Sobolev norm H^{}_{}",
        s.steps(),
        s.step_size(),
        s.t_final,
        s.sobolev.m,
        s.sobolev.d
    );
    r
}

fn verdict(r: &mut String, failures: &[String], status: &SolveStatus) -> Outcome {
    let _ = writeln!(r);
    if let SolveStatus::ValidityHorizon { t_last, reason } = status {
        let _ = writeln!(r, "verdict: VALIDITY HORIZON after t = {t_last:e} ({reason})");
        return Outcome::ValidityHorizon;
    }
    if failures.is_empty() {
        let _ = writeln!(r, "verdict: PASS");
        Outcome::Ok
    } else {
        let _ = writeln!(r, "verdict: FAIL ({})", failures.join(", "));
        Outcome::CheckFailure
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn bound_table(r: &mut String, rep: &BoundReport) {
    let _ = writeln!(r, "  {:<18} {:<6} {:>14}  first violation", "bound", "result", "margin");
    for c in &rep.checks {
        let first = c
            .first_violation
            .map(|t| format!("{t:e}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(r, "  {:<18} {:<6} {:>14.6e}  {first}", c.name, pass(c.passed), c.margin);
    }
}

pub fn contraction_table(r: &mut String, rep: &ContractionReport) {
    let _ = writeln!(r, "  {:>4} {:>14} {:>10}", "iter", "norm", "ratio");
    for (i, n) in rep.norms.iter().enumerate() {
        let ratio = if i == 0 {
            "-".to_string()
        } else {
            format!("{:.4}", rep.ratios[i - 1])
        };
        let _ = writeln!(r, "  {:>4} {:>14.6e} {:>10}", i + 1, n, ratio);
    }
    let _ = writeln!(r, "  converged: {}, monotone: {}", rep.converged, rep.monotone);
}

fn initial_section(r: &mut String, data: &InitialData, cfg: &RunConfig) -> Result<f64, CliError> {
    let s = &data.state;
    let r0 = crate::cosmo::hamiltonian_residual(s, &data.field, &cfg.physics);
    let f_norm = sobolev_norm(&data.field, &cfg.solve.sobolev).map_err(SolverError::from)?;
    let _ = writeln!(r);
    let _ = writeln!(r, "initial data");
    let _ = writeln!(
        r,
        "  E0 = {:e}, U0 = {:e} (from constraint), W0 = {:e}, Z0 = {:e}, Phi0 = {:e}, psi0 = {:e}",
        s.e, s.u, s.w, s.z, s.phi, s.psi
    );
    let _ = writeln!(r, "  ||f0|| = {f_norm:e}, min f0 = {:e}", data.field.min());
    let _ = writeln!(
        r,
        "  hamiltonian residual at t = 0: {r0:e} ({} <= {INIT_RESIDUAL_TOL:e})",
        pass(r0.abs() <= INIT_RESIDUAL_TOL)
    );
    Ok(r0)
}

fn simulate_artifacts(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    let data = cfg.initial_data()?;
    let kernel = cfg.collision.kernel;
    let ccfg = cfg.collision_config();
    let sq = ccfg.sphere()?;
    let mode = if cfg.mode == Mode::Picard { "picard" } else { "direct" };
    let mut r = header(cfg, &format!("simulate ({mode})"));
    initial_section(&mut r, &data, cfg)?;
    let init = (&data.state, &data.field);
    let mut failures = Vec::new();

    let (traj, contraction) = if cfg.mode == Mode::Picard {
        match picard_solve(init, &cfg.physics, &kernel, &sq, &ccfg, &cfg.solve) {
            Ok((t, rep)) => (t, Some(rep)),
            Err(SolverError::NoContraction(rep)) => {
                let _ = writeln!(r);
                let _ = writeln!(r, "fixed-point contraction");
                contraction_table(&mut r, &rep);
                failures.push("fixed-point iteration does not contract".to_string());
                let outcome = verdict(&mut r, &failures, &SolveStatus::Completed);
                return Ok(RunArtifacts {
                    outcome,
                    report: r,
                    csv: None,
                });
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        (direct_solve(init, &cfg.physics, &kernel, &sq, &ccfg, &cfg.solve)?, None)
    };

    trajectory_sections(&mut r, cfg, &traj, &mut failures)?;
    if let Some(rep) = &contraction {
        let _ = writeln!(r);
        let _ = writeln!(r, "fixed-point contraction");
        contraction_table(&mut r, rep);
        if !rep.converged {
            failures.push("fixed-point iteration did not reach tolerance".into());
        }
    }
    let outcome = verdict(&mut r, &failures, &traj.status);
    let mut csv = Vec::new();
    traj.write_csv_every(&mut csv, cfg.output.stride)
        .expect("writing to memory");
    Ok(RunArtifacts {
        outcome,
        report: r,
        csv: Some(String::from_utf8(csv).expect("csv is ascii")),
    })
}

fn trajectory_sections(
    r: &mut String,
    cfg: &RunConfig,
    traj: &Trajectory,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let p = &cfg.physics;
    let last = traj.final_state().copied().unwrap_or_default();
    let _ = writeln!(r);
    let _ = writeln!(r, "final state at t = {:e}", traj.last_time().unwrap_or(0.0));
    let _ = writeln!(
        r,
        "  E = {:e}, U = {:e}, W = {:e}, Z = {:e}, Phi = {:e}, psi = {:e}",
        last.e, last.u, last.w, last.z, last.phi, last.psi
    );
    if p.lambda > 0.0 {
        let _ = writeln!(r, "  de Sitter limit sqrt(Lambda/3) = {:e}", (p.lambda / 3.0).sqrt());
    }
    if let Some(min) = traj.diagnostics.f_min.iter().copied().reduce(f64::min) {
        let _ = writeln!(r, "  min f over run = {min:e}");
    }

    let res = &traj.diagnostics.ham_residual;
    let _ = writeln!(r);
    let _ = writeln!(r, "constraint drift");
    let _ = writeln!(
        r,
        "  max |residual| = {:e}, final residual = {:e}",
        traj.max_abs_residual(),
        res.last().copied().unwrap_or(0.0)
    );

    let _ = writeln!(r);
    let _ = writeln!(r, "conserved flux Z/E^3");
    let _ = writeln!(
        r,
        "  initial = {:e}, max drift = {:e}",
        traj.diagnostics.flux.first().copied().unwrap_or(0.0),
        traj.flux_drift()
    );

    let s0 = traj.states.first().copied().unwrap_or_default();
    let hypotheses = s0.u > 0.0 && p.global_regime(s0.phi);
    let rep = apriori_check(traj, p);
    let _ = writeln!(r);
    let _ = writeln!(
        r,
        "a-priori bounds (tol {APRIORI_TOL:e}; hypotheses U0 > 0 and Lambda > -4 pi m^2 Phi0^2: {})",
        if hypotheses {
            "hold"
        } else {
            "do not hold, informational"
        }
    );
    bound_table(r, &rep);
    if hypotheses && !rep.passed() {
        failures.push("a-priori bounds".into());
    }

    let f0_norm = traj.diagnostics.f_sobolev.first().copied().unwrap_or(0.0);
    let f0_h3 = if cfg.solve.sobolev.m == 3 {
        f0_norm
    } else {
        let p3 = crate::phase_space::SobolevParams {
            m: 3,
            d: cfg.solve.sobolev.d,
        };
        traj.fields
            .first()
            .map(|f| sobolev_norm(f, &p3))
            .transpose()
            .map_err(SolverError::from)?
            .unwrap_or(0.0)
    };
    let radius = cfg.checks.r.unwrap_or(f0_h3);
    let decay = decay_check(traj, radius, cfg.checks.delta1)?;
    let _ = writeln!(r);
    let _ = writeln!(r, "decay check sup e^(-delta1 t/2) ||f||_H3 <= 4r");
    let _ = writeln!(
        r,
        "  r = {radius:e}, delta1 = {}, sup = {:e}, margin = {:e}: {}",
        cfg.checks.delta1,
        decay.sup,
        decay.margin,
        pass(decay.passed)
    );
    if !decay.passed {
        failures.push("decay check".into());
    }
    Ok(())
}

fn verify_collision(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    let checks = &cfg.checks;
    let mut r = header(cfg, "verify collision");
    let mut failures = Vec::new();

    let k = kinematics_suite(checks.kinematic_samples, checks.seed)?;
    let _ = writeln!(r);
    let _ = writeln!(r, "kinematics over {} samples", k.samples);
    let _ = writeln!(r, "  max momentum defect = {} ulp (<= 1)", k.max_momentum_ulps);
    let _ = writeln!(
        r,
        "  max energy error = {:e} (<= 1e-10): {}",
        k.max_energy_error,
        pass(k.passed)
    );
    if !k.passed {
        failures.push("kinematics".to_string());
    }

    let j = jacobian_suite(checks.jacobian_samples, checks.seed.wrapping_add(1))?;
    let _ = writeln!(r);
    let _ = writeln!(r, "jacobian identity over {} samples", j.samples);
    let _ = writeln!(r, "  max relative residual = {:e} (<= 1e-6)", j.max_relative_residual);
    let _ = writeln!(r, "  observed order = {:.3}: {}", j.observed_order, pass(j.passed));
    if !j.passed {
        failures.push("jacobian".to_string());
    }

    let grid = cfg.momentum_grid()?;
    let ccfg = cfg.collision_config();
    let sq = ccfg.sphere()?;
    let setup = MoserSetup {
        kernel: &cfg.collision.kernel,
        sq: &sq,
        ccfg: &ccfg,
        e: cfg.initial.e0,
        sobolev: crate::phase_space::SobolevParams {
            m: 3,
            d: cfg.solve.sobolev.d,
        },
    };
    let pairs = random_pairs(checks.moser_pairs, checks.seed.wrapping_add(2), &BumpFamily::default());
    let m = moser_suite(&pairs, grid, &setup)?;
    let _ = writeln!(r);
    let _ = writeln!(r, "bilinear bound over {} pairs on n = {}", pairs.len(), m.n);
    let _ = writeln!(
        r,
        "  max ||Q(f,g)/u0|| / (||f|| ||g||) = {:e}: {}",
        m.max_ratio,
        pass(m.finite)
    );
    if !m.finite {
        failures.push("bilinear bound".to_string());
    }
    let outcome = verdict(&mut r, &failures, &SolveStatus::Completed);
    Ok(RunArtifacts {
        outcome,
        report: r,
        csv: None,
    })
}

fn verify_energy(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    let data = cfg.initial_data()?;
    let kernel = cfg.collision.kernel;
    let ccfg = cfg.collision_config();
    let sq = ccfg.sphere()?;
    let solve = SolveConfig {
        record_sources: true,
        ..cfg.solve
    };
    let mut r = header(cfg, "verify energy");
    initial_section(&mut r, &data, cfg)?;
    let traj = direct_solve((&data.state, &data.field), &cfg.physics, &kernel, &sq, &ccfg, &solve)?;
    let rep = energy_estimate_check(&traj, cfg.checks.kappa, &cfg.solve.sobolev);
    let _ = writeln!(r);
    let _ = writeln!(r, "energy estimate (kappa = {})", cfg.checks.kappa);
    if rep.feasible {
        let _ = writeln!(
            r,
            "  feasible: delta1 = {:e}, C1 = {:e}, min slack = {:e}",
            rep.delta1, rep.c1, rep.min_slack
        );
    } else {
        let _ = writeln!(r, "  infeasible: {}", rep.note.as_deref().unwrap_or("-"));
    }
    let _ = writeln!(r, "  speed bound 3|c| <= 1/kappa: {}", pass(rep.speed_bound_ok));
    let mut failures = Vec::new();
    if !rep.feasible {
        failures.push("energy estimate".to_string());
    }
    let outcome = verdict(&mut r, &failures, &traj.status);
    let mut csv = Vec::new();
    traj.write_csv_every(&mut csv, cfg.output.stride)
        .expect("writing to memory");
    Ok(RunArtifacts {
        outcome,
        report: r,
        csv: Some(String::from_utf8(csv).expect("csv is ascii")),
    })
}

/// Parses a sweep value as JSON, falling back to a plain string.
pub fn parse_sweep_value(text: &str) -> serde_json::Value {
    let text = text.trim();
    serde_json::from_str(text).unwrap_or_else(|_| serde_json::Value::String(text.to_string()))
}

/// Replaces the value at a dotted path such as `physics.rho`.
pub fn set_path(root: &mut serde_json::Value, path: &str, value: serde_json::Value) -> Result<(), CliError> {
    let mut keys: Vec<&str> = path.split('.').collect();
    let leaf = keys
        .pop()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| CliError::Sweep(format!("empty parameter path {path:?}")))?;
    let mut node = root;
    for key in keys {
        node = node
            .get_mut(key)
            .ok_or_else(|| CliError::Sweep(format!("no section {key:?} in parameter path {path:?}")))?;
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Sweep(format!("parameter path {path:?} does not name an object field")))?;
    obj.insert(leaf.to_string(), value);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: String,
    pub outcome: Outcome,
    pub summary: String,
}

/// Runs one simulation per value, in parallel, each into `out/<param>=<value>`.
pub fn sweep(
    cfg: &RunConfig,
    param: &str,
    values: &[String],
    out: &Path,
) -> Result<(Outcome, Vec<SweepEntry>), CliError> {
    if values.is_empty() {
        return Err(CliError::Sweep("no values given".into()));
    }
    let mut configs = Vec::with_capacity(values.len());
    for v in values {
        let mut raw = cfg.source.clone();
        set_path(&mut raw, param, parse_sweep_value(v))?;
        let mode = if cfg.mode == Mode::Sweep {
            Mode::Direct
        } else {
            cfg.mode
        };
        set_path(&mut raw, "mode", serde_json::to_value(mode).expect("mode serializes"))?;
        let mut c = RunConfig::from_value(raw)?;
        c.base_dir = cfg.base_dir.clone();
        configs.push(c);
    }
    let results: Vec<Result<RunArtifacts, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .zip(values)
            .map(|(c, v)| {
                let dir = out.join(format!("{param}={}", v.trim()));
                scope.spawn(move || run(c, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut entries = Vec::with_capacity(values.len());
    let mut worst = Outcome::Ok;
    for (v, res) in values.iter().zip(results) {
        let (outcome, summary) = match res {
            Ok(a) => {
                let line = a.report.lines().last().unwrap_or("").to_string();
                (a.outcome, line)
            }
            Err(e) => (e.outcome(), format!("error: {e}")),
        };
        worst = worst.max(outcome);
        entries.push(SweepEntry {
            value: v.trim().to_string(),
            outcome,
            summary,
        });
    }
    let mut table = String::new();
    for e in &entries {
        let _ = writeln!(table, "{param}={}\texit {}\t{}", e.value, e.outcome.code(), e.summary);
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join("sweep.txt");
    fs::write(&path, table).map_err(io_err(&path))?;
    Ok((worst, entries))
}
