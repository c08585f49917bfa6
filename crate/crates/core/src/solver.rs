//! Time integration of the coupled system, by direct splitting or by the
//! linearized fixed-point iteration, and post-hoc diagnostics.

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{collision_term, CollisionConfig, CollisionError, Kernel};
use crate::cosmo::{cosmo_rhs, hamiltonian_residual, CosmoError, CosmoState, Moments, PhysParams, E_FLOOR, PSI_FLOOR};
use crate::phase_space::{moment_number, sobolev_norm, GridError, GridFunction, SobolevParams};
use crate::sphere::SphereQuadrature;
use crate::trajectory::{SolveStatus, Trajectory};
use crate::transport::{shift_interpolate, transport_step};

/// Largest admissible Hamiltonian residual of the initial data.
pub const INIT_RESIDUAL_TOL: f64 = 1e-10;

/// Consecutive non-contracting iterations after which the fixed-point
/// iteration gives up.
const NO_CONTRACTION_RUN: usize = 3;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("fixed-point iteration does not contract (norms {:?})", .0.norms)]
    NoContraction(ContractionReport),
    #[error("trajectories are not aligned: {0}")]
    Misaligned(String),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Cosmo(#[from] CosmoError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub sobolev: SobolevParams,
    #[serde(default = "default_stride")]
    pub storage_stride: usize,
    /// Store `(1/u⁰)Q(f, f)` at each stored time.
    #[serde(default)]
    pub record_sources: bool,
}

impl SolveConfig {
    pub fn new(dt: f64, t_final: f64, sobolev: SobolevParams) -> Self {
        Self {
            dt,
            t_final,
            picard_tol: 1e-10,
            picard_max_iters: 50,
            sobolev,
            storage_stride: 1,
            record_sources: false,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::BadConfig(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(format!("T must be positive, got {}", self.t_final));
        }
        if self.dt > self.t_final * (1.0 + 1e-12) {
            return bad(format!("dt = {} exceeds T = {}", self.dt, self.t_final));
        }
        if self.picard_max_iters == 0 {
            return bad("picard_max_iters must be at least 1".into());
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        if self.storage_stride == 0 {
            return bad("storage_stride must be at least 1".into());
        }
        self.sobolev.validate()?;
        Ok(())
    }

    /// Number of steps; the step is adjusted to `T / steps`.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }

    pub fn step_size(&self) -> f64 {
        self.t_final / self.steps() as f64
    }
}

/// The scalar sector needs `ψ > 0` once `ρ > 0` or when started with `ψ₀ > 0`.
fn scalar_sector_active(s0: &CosmoState, p: &PhysParams) -> bool {
    p.rho > 0.0 || s0.psi > PSI_FLOOR
}

fn check_initial(s0: &CosmoState, f0: &GridFunction, p: &PhysParams) -> Result<(), SolverError> {
    p.validate()
        .map_err(|e| SolverError::InvalidInitialData(e.to_string()))?;
    s0.validate()
        .map_err(|e| SolverError::InvalidInitialData(e.to_string()))?;
    if !f0.is_finite() {
        return Err(SolverError::InvalidInitialData("f0 is not finite".into()));
    }
    if p.rho > 0.0 && s0.psi <= PSI_FLOOR {
        return Err(SolverError::InvalidInitialData(
            "psi0 must be positive when rho > 0".into(),
        ));
    }
    let r = hamiltonian_residual(s0, f0, p);
    if !(r.abs() <= INIT_RESIDUAL_TOL) {
        return Err(SolverError::InvalidInitialData(format!(
            "Hamiltonian residual {r:e} exceeds {INIT_RESIDUAL_TOL:e}"
        )));
    }
    Ok(())
}

/// Reason the state `s` has left the regime of validity, if it has.
fn validity_violation(s: &CosmoState, active: bool) -> Option<String> {
    if !s.is_finite() {
        return Some("non-finite state".into());
    }
    if s.e <= E_FLOOR {
        return Some(format!("E = {:e} reached the floor", s.e));
    }
    if active && s.psi <= PSI_FLOOR {
        return Some(format!("psi = {:e} reached the floor", s.psi));
    }
    None
}

fn rk4_frozen_field(s: &CosmoState, f: &GridFunction, p: &PhysParams, h: f64) -> Result<CosmoState, CosmoError> {
    let rhs = |x: &CosmoState| cosmo_rhs(x, &Moments::of(f, x.e), p);
    let k1 = rhs(s)?;
    let k2 = rhs(&(*s + k1 * (0.5 * h)))?;
    let k3 = rhs(&(*s + k2 * (0.5 * h)))?;
    let k4 = rhs(&(*s + k3 * h))?;
    Ok(*s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// RK4 on the scalars with moments from the current field, followed by one
/// split transport step for the field.
pub fn direct_solve<K: Kernel + ?Sized>(
    init: (&CosmoState, &GridFunction),
    p: &PhysParams,
    kernel: &K,
    sq: &SphereQuadrature,
    ccfg: &CollisionConfig,
    cfg: &SolveConfig,
) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    ccfg.validate(init.1.grid())?;
    let (s0, f0) = init;
    check_initial(s0, f0, p)?;
    let active = scalar_sector_active(s0, p);
    let steps = cfg.steps();
    let h = cfg.step_size();

    let mut traj = Trajectory::new(cfg.sobolev, *p);
    let mut s = *s0;
    let mut f = f0.clone();
    let record = |traj: &mut Trajectory, t: f64, s: CosmoState, f: &GridFunction| -> Result<(), SolverError> {
        if cfg.record_sources {
            traj.sources.push(collision_term(f, s.e, kernel, sq, ccfg)?);
        }
        traj.push(t, s, f.clone())?;
        Ok(())
    };
    record(&mut traj, 0.0, s, &f)?;

    for step in 1..=steps {
        let t_prev = (step - 1) as f64 * h;
        let t = step as f64 * h;
        let next = match rk4_frozen_field(&s, &f, p, h) {
            Ok(next) => next,
            Err(err) => {
                halt(&mut traj, t_prev, s, &f, err.to_string(), &record)?;
                return Ok(traj);
            }
        };
        if let Some(reason) = validity_violation(&next, active) {
            halt(&mut traj, t_prev, s, &f, reason, &record)?;
            return Ok(traj);
        }
        let mid = s.lerp(&next, 0.5);
        let f_next = transport_step(&f, &mid, h, mid.e, kernel, sq, ccfg)?;
        if !f_next.is_finite() {
            halt(&mut traj, t_prev, s, &f, "non-finite distribution".into(), &record)?;
            return Ok(traj);
        }
        s = next;
        f = f_next;
        if step % cfg.storage_stride == 0 || step == steps {
            record(&mut traj, t, s, &f)?;
        }
        debug!(
            "t = {t:.6} U = {:.12} residual = {:e}",
            s.u,
            traj.diagnostics.ham_residual.last().unwrap_or(&0.0)
        );
    }
    Ok(traj)
}

fn halt<R>(
    traj: &mut Trajectory,
    t: f64,
    s: CosmoState,
    f: &GridFunction,
    reason: String,
    record: &R,
) -> Result<(), SolverError>
where
    R: Fn(&mut Trajectory, f64, CosmoState, &GridFunction) -> Result<(), SolverError>,
{
    warn!("validity horizon after t = {t}: {reason}");
    if traj.last_time() != Some(t) {
        record(traj, t, s, f)?;
    }
    traj.status = SolveStatus::ValidityHorizon { t_last: t, reason };
    Ok(())
}

/// Per-iteration distances `|||X^{n+1} - X^n|||` of the fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContractionReport {
    pub norms: Vec<f64>,
    /// `norms[k] / norms[k-1]`, starting with the second iteration.
    pub ratios: Vec<f64>,
    pub converged: bool,
    /// Ratios stayed below one after first dropping below one.
    pub monotone: bool,
}

impl ContractionReport {
    pub fn iterations(&self) -> usize {
        self.norms.len()
    }
}

struct Iterate {
    states: Vec<CosmoState>,
    fields: Vec<GridFunction>,
}

fn iterate_distance(
    a_states: &[CosmoState],
    a_fields: &[GridFunction],
    b_states: &[CosmoState],
    b_fields: &[GridFunction],
    d: f64,
) -> Result<f64, SolverError> {
    let h2 = SobolevParams { m: 2, d };
    let mut sup = [0.0f64; 6];
    for (x, y) in a_states.iter().zip(b_states) {
        let (x, y) = (x.to_array(), y.to_array());
        for i in 0..6 {
            let diff = (x[i] - y[i]).abs();
            sup[i] = if diff.is_nan() { f64::NAN } else { sup[i].max(diff) };
        }
    }
    let mut f_sup: f64 = 0.0;
    for (fa, fb) in a_fields.iter().zip(b_fields) {
        let diff = sobolev_norm(&fa.sub(fb)?, &h2)?;
        f_sup = if diff.is_nan() { f64::NAN } else { f_sup.max(diff) };
    }
    Ok(sup.iter().sum::<f64>() + f_sup)
}

/// `Σᵢ sup_t |Xᵢ^a - Xᵢ^b| + sup_t ‖f^a - f^b‖_{H²_d}` with `d` from `a`.
pub fn cauchy_norm(a: &Trajectory, b: &Trajectory) -> Result<f64, SolverError> {
    if a.len() != b.len() {
        return Err(SolverError::Misaligned(format!("{} vs {} records", a.len(), b.len())));
    }
    for (ta, tb) in a.times.iter().zip(&b.times) {
        if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
            return Err(SolverError::Misaligned(format!("time {ta} vs {tb}")));
        }
    }
    iterate_distance(&a.states, &a.fields, &b.states, &b.fields, a.sobolev.d)
}

/// Linearized fixed-point iteration: every coefficient and source of iterate
/// `n + 1` is evaluated on iterate `n`, starting from the constant extension
/// of the initial data. The iterates are stored at every step.
pub fn picard_solve<K: Kernel + ?Sized>(
    init: (&CosmoState, &GridFunction),
    p: &PhysParams,
    kernel: &K,
    sq: &SphereQuadrature,
    ccfg: &CollisionConfig,
    cfg: &SolveConfig,
) -> Result<(Trajectory, ContractionReport), SolverError> {
    cfg.validate()?;
    ccfg.validate(init.1.grid())?;
    let (s0, f0) = init;
    check_initial(s0, f0, p)?;
    let steps = cfg.steps();
    let h = cfg.step_size();

    let mut current = Iterate {
        states: vec![*s0; steps + 1],
        fields: vec![f0.clone(); steps + 1],
    };
    let mut report = ContractionReport {
        monotone: true,
        ..Default::default()
    };
    let mut entered = false;
    let mut bad_run = 0;
    for iter in 0..cfg.picard_max_iters {
        let next = picard_iterate(&current, p, kernel, sq, ccfg, h)?;
        let norm = iterate_distance(
            &next.states,
            &next.fields,
            &current.states,
            &current.fields,
            cfg.sobolev.d,
        )?;
        report.norms.push(norm);
        debug!("picard iteration {}: norm {norm:e}", iter + 1);
        current = next;
        if iter > 0 {
            let prev = report.norms[iter - 1];
            let ratio = norm / prev;
            report.ratios.push(ratio);
            if !(ratio < 1.0) {
                if entered {
                    report.monotone = false;
                    warn!("contraction ratio rose to {ratio:e} at iteration {}", iter + 1);
                }
                bad_run += 1;
            } else {
                entered = true;
                bad_run = 0;
            }
        }
        if norm <= cfg.picard_tol {
            report.converged = true;
            break;
        }
        if !norm.is_finite() || bad_run >= NO_CONTRACTION_RUN {
            return Err(SolverError::NoContraction(report));
        }
    }

    let mut traj = Trajectory::new(cfg.sobolev, *p);
    for (k, (s, f)) in current.states.into_iter().zip(current.fields).enumerate() {
        if cfg.record_sources {
            traj.sources.push(collision_term(&f, s.e, kernel, sq, ccfg)?);
        }
        traj.push(k as f64 * h, s, f)?;
    }
    Ok((traj, report))
}

fn picard_iterate<K: Kernel + ?Sized>(
    x: &Iterate,
    p: &PhysParams,
    kernel: &K,
    sq: &SphereQuadrature,
    ccfg: &CollisionConfig,
    h: f64,
) -> Result<Iterate, SolverError> {
    let knots = x.states.len();
    let moments: Vec<Moments> = x
        .states
        .iter()
        .zip(&x.fields)
        .map(|(s, f)| Moments::of(f, s.e))
        .collect();
    // ψ of an intermediate iterate may dip below zero; the frozen forcing
    // only needs √(2 max(ψ, 0)), so ρ-checks apply to the accepted data only.
    let forcing = |s: &CosmoState, m: &Moments| {
        cosmo_rhs(s, m, &PhysParams { rho: 0.0, ..*p }).map(|d| CosmoState {
            w: d.w - p.rho * p.rho,
            psi: d.psi - p.rho * p.rho,
            ..d
        })
    };
    let g: Vec<CosmoState> = x
        .states
        .iter()
        .zip(&moments)
        .map(|(s, m)| forcing(s, m))
        .collect::<Result<_, _>>()?;
    let speeds: Vec<f64> = x
        .states
        .iter()
        .zip(&x.fields)
        .map(|(s, f)| if s.z == 0.0 { 0.0 } else { s.e * s.z * moment_number(f) })
        .collect();
    let sources: Vec<GridFunction> = x
        .states
        .iter()
        .zip(&x.fields)
        .map(|(s, f)| collision_term(f, s.e, kernel, sq, ccfg))
        .collect::<Result<_, _>>()?;

    let mut states = Vec::with_capacity(knots);
    let mut fields = Vec::with_capacity(knots);
    states.push(x.states[0]);
    fields.push(x.fields[0].clone());
    for k in 0..knots - 1 {
        // RK4 for y' = G(t) with G sampled on the linear interpolant of X^n
        let mid_state = x.states[k].lerp(&x.states[k + 1], 0.5);
        let g_mid = forcing(&mid_state, &moments[k].lerp(&moments[k + 1], 0.5))?;
        let incr = (g[k] + g_mid * 4.0 + g[k + 1]) * (h / 6.0);
        states.push(states[k] + incr);

        let shift = 0.5 * h * (speeds[k] + speeds[k + 1]);
        let start = fields[k].lin_comb(1.0, &sources[k], 0.5 * h)?;
        let f = shift_interpolate(&start, shift).lin_comb(1.0, &sources[k + 1], 0.5 * h)?;
        fields.push(f);
    }
    Ok(Iterate { states, fields })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub feasible: bool,
    pub delta1: f64,
    pub c1: f64,
    /// Smallest slack of the inequality over stored times at `(delta1, c1)`.
    pub min_slack: f64,
    /// `sup 3|c(t)|` compared against `1/κ`.
    pub speed_bound_ok: bool,
    pub note: Option<String>,
}

/// Search box and resolution of [`energy_estimate_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateSearch {
    pub delta_max: f64,
    pub c_max: f64,
    pub points: usize,
}

impl EstimateSearch {
    pub fn for_params(kappa: f64, p: &SobolevParams) -> Self {
        Self {
            delta_max: (4.0 * (p.d + p.m as f64) / kappa).max(1.0),
            c_max: 100.0,
            points: 101,
        }
    }
}

/// Searches `(δ₁, C₁)`, in order of increasing `δ₁` then `C₁`, such that
/// `e^{-δ₁t}‖f(t)‖² <= ‖f₀‖² + C₁∫₀ᵗ e^{-δ₁s}‖S(s)‖² ds` at every stored
/// time, with norms in `H^k_d` by `p` and `S = (1/u⁰)Q(f, f)`.
pub fn energy_estimate_check(traj: &Trajectory, kappa: f64, p: &SobolevParams) -> InequalityReport {
    energy_estimate_search(traj, kappa, p, &EstimateSearch::for_params(kappa, p))
}

pub fn energy_estimate_search(
    traj: &Trajectory,
    kappa: f64,
    p: &SobolevParams,
    box_: &EstimateSearch,
) -> InequalityReport {
    let infeasible = |note: String| InequalityReport {
        feasible: false,
        delta1: f64::NAN,
        c1: f64::NAN,
        min_slack: f64::NEG_INFINITY,
        speed_bound_ok: false,
        note: Some(note),
    };
    if traj.is_empty() {
        return infeasible("empty trajectory".into());
    }
    let all_zero = traj.fields.iter().all(|f| f.is_zero());
    if traj.sources.len() != traj.len() && !all_zero {
        return infeasible("collision sources were not recorded".into());
    }
    let norm2 = |f: &GridFunction| sobolev_norm(f, p).map(|x| x * x);
    let (f_norms, s_norms): (Vec<f64>, Vec<f64>) = match (0..traj.len())
        .map(|i| {
            let sn = if all_zero { Ok(0.0) } else { norm2(&traj.sources[i]) };
            Ok::<_, GridError>((norm2(&traj.fields[i])?, sn?))
        })
        .collect::<Result<Vec<_>, _>>()
    {
        Ok(v) => v.into_iter().unzip(),
        Err(e) => return infeasible(e.to_string()),
    };
    let speed_sup = traj
        .states
        .iter()
        .zip(&traj.fields)
        .map(|(s, f)| 3.0 * (s.e * s.z * moment_number(f)).abs())
        .fold(0.0, f64::max);
    let speed_bound_ok = speed_sup <= 1.0 / kappa;
    let f0 = f_norms[0];
    let t = &traj.times;
    let pts = box_.points.max(2);
    let step = |max: f64, i: usize| max * i as f64 / (pts - 1) as f64;

    for i in 0..pts {
        let delta = step(box_.delta_max, i);
        let mut integral = vec![0.0; t.len()];
        for j in 1..t.len() {
            let a = (-delta * t[j - 1]).exp() * s_norms[j - 1];
            let b = (-delta * t[j]).exp() * s_norms[j];
            integral[j] = integral[j - 1] + 0.5 * (t[j] - t[j - 1]) * (a + b);
        }
        let slack = |c: f64| {
            (0..t.len())
                .map(|j| f0 + c * integral[j] - (-delta * t[j]).exp() * f_norms[j])
                .fold(f64::INFINITY, f64::min)
        };
        for k in 0..pts {
            let c = step(box_.c_max, k);
            let s = slack(c);
            if s >= 0.0 {
                return InequalityReport {
                    feasible: true,
                    delta1: delta,
                    c1: c,
                    min_slack: s,
                    speed_bound_ok,
                    note: None,
                };
            }
        }
    }
    InequalityReport {
        speed_bound_ok,
        ..infeasible("no feasible constants in the search box".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub passed: bool,
    /// `4r - sup_t e^{-δ₁t/2}‖f(t)‖_{H³_d}`.
    pub margin: f64,
    pub sup: f64,
}

/// `sup_t e^{-δ₁t/2}‖f(t)‖_{H³_d} <= 4r`.
pub fn decay_check(traj: &Trajectory, r: f64, delta1: f64) -> Result<DecayReport, SolverError> {
    let norms: Vec<f64> = if traj.sobolev.m == 3 && traj.diagnostics.f_sobolev.len() == traj.len() {
        traj.diagnostics.f_sobolev.clone()
    } else {
        let p = SobolevParams {
            m: 3,
            d: traj.sobolev.d,
        };
        traj.fields
            .iter()
            .map(|f| sobolev_norm(f, &p))
            .collect::<Result<_, _>>()?
    };
    let sup = traj
        .times
        .iter()
        .zip(&norms)
        .map(|(t, n)| (-0.5 * delta1 * t).exp() * n)
        .fold(0.0, |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x) });
    let margin = 4.0 * r - sup;
    Ok(DecayReport {
        passed: margin >= 0.0,
        margin,
        sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::BuiltinKernel;
    use crate::cosmo::solve_constraint_for_U;
    use crate::phase_space::make_grid;

    fn sob() -> SobolevParams {
        SobolevParams::new(3, 3.0).unwrap()
    }

    fn de_sitter(lambda: f64) -> (CosmoState, GridFunction, PhysParams) {
        let p = PhysParams {
            lambda,
            m: 1.0,
            rho: 0.0,
        };
        let grid = make_grid(2.0, 5).unwrap();
        let f = GridFunction::zeros(grid);
        let u = solve_constraint_for_U(1.0, 0.0, 0.0, 0.0, 0.0, &f, &p).unwrap();
        (
            CosmoState {
                e: 1.0,
                u,
                ..Default::default()
            },
            f,
            p,
        )
    }

    #[test]
    fn config_validation() {
        let c = SolveConfig::new(0.1, 1.0, sob());
        assert!(c.validate().is_ok());
        assert_eq!(c.steps(), 10);
        assert!(SolveConfig::new(2.0, 1.0, sob()).validate().is_err());
        assert!(SolveConfig {
            picard_max_iters: 0,
            ..c
        }
        .validate()
        .is_err());
        assert!(SolveConfig { storage_stride: 0, ..c }.validate().is_err());
        let c: SolveConfig = serde_json::from_str(
            r#"{"dt":0.5,"T":2.0,"picard_tol":1e-8,"picard_max_iters":5,"sobolev":{"m":2,"d":3.0}}"#,
        )
        .unwrap();
        assert_eq!((c.storage_stride, c.record_sources, c.steps()), (1, false, 4));
    }

    #[test]
    fn rejects_unconstrained_data() {
        let (mut s, f, p) = de_sitter(3.0);
        s.u = 2.0;
        let cfg = SolveConfig::new(0.1, 1.0, sob());
        let ccfg = CollisionConfig::default();
        let sq = ccfg.sphere().unwrap();
        let err = direct_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap_err();
        assert!(matches!(err, SolverError::InvalidInitialData(_)));
    }

    #[test]
    fn fixed_point_stays_fixed() {
        let (s, f, p) = de_sitter(3.0);
        let cfg = SolveConfig {
            storage_stride: 3,
            ..SolveConfig::new(0.1, 1.0, sob())
        };
        let ccfg = CollisionConfig::default();
        let sq = ccfg.sphere().unwrap();
        let tr = direct_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap();
        assert!(tr.completed());
        assert_eq!(tr.len(), 5);
        assert_eq!(tr.times.last(), Some(&1.0));
        for st in &tr.states {
            assert_eq!(st.u, 1.0);
        }
        assert!((tr.states.last().unwrap().e - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn horizon_when_psi_exhausted() {
        // strong ρ drains ψ quickly
        let p = PhysParams {
            lambda: 3.0,
            m: 1.0,
            rho: 1.0,
        };
        let f = GridFunction::zeros(make_grid(2.0, 5).unwrap());
        let (phi, psi) = (0.1, 0.05);
        let u = solve_constraint_for_U(1.0, 0.0, 0.0, phi, psi, &f, &p).unwrap();
        let s = CosmoState {
            e: 1.0,
            u,
            w: 0.0,
            z: 0.0,
            phi,
            psi,
        };
        let cfg = SolveConfig::new(1e-3, 1.0, sob());
        let ccfg = CollisionConfig::default();
        let sq = ccfg.sphere().unwrap();
        let tr = direct_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap();
        match &tr.status {
            SolveStatus::ValidityHorizon { t_last, .. } => {
                assert!(*t_last < 0.1 && *t_last > 0.0);
                assert_eq!(tr.last_time(), Some(*t_last));
                assert!(tr.final_state().unwrap().psi > 0.0);
            }
            other => panic!("unexpected status {other:?}"),
        }
    }

    #[test]
    fn cauchy_norm_examples() {
        let (s, f, p) = de_sitter(3.0);
        let cfg = SolveConfig::new(0.25, 1.0, sob());
        let ccfg = CollisionConfig::default();
        let sq = ccfg.sphere().unwrap();
        let a = direct_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap();
        assert_eq!(cauchy_norm(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        for st in &mut b.states {
            st.u += 0.5;
        }
        assert_eq!(cauchy_norm(&a, &b).unwrap(), 0.5);
        let mut c = a.clone();
        c.times.pop();
        assert!(matches!(cauchy_norm(&a, &c), Err(SolverError::Misaligned(_))));
    }

    #[test]
    fn picard_fixed_point_scalars_exact() {
        let (s, f, p) = de_sitter(3.0);
        let cfg = SolveConfig::new(0.01, 0.1, sob());
        let ccfg = CollisionConfig::default();
        let sq = ccfg.sphere().unwrap();
        let (tr, rep) = picard_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap();
        assert!(rep.converged);
        // only E moves away from the constant first guess
        for st in &tr.states {
            assert_eq!((st.u, st.w, st.z, st.phi, st.psi), (1.0, 0.0, 0.0, 0.0, 0.0));
        }
        let direct = direct_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap();
        assert!(cauchy_norm(&tr, &direct).unwrap() < 1e-5);
    }

    #[test]
    fn picard_detects_divergence() {
        let p = PhysParams {
            lambda: 3.0,
            m: 1.0,
            rho: 0.0,
        };
        let f = GridFunction::zeros(make_grid(2.0, 5).unwrap());
        let w = -10.0;
        let u = solve_constraint_for_U(1.0, w, 0.0, 0.0, 0.0, &f, &p).unwrap();
        let s = CosmoState {
            e: 1.0,
            u,
            w,
            ..Default::default()
        };
        let cfg = SolveConfig {
            picard_tol: 1e-14,
            ..SolveConfig::new(0.01, 1.0, sob())
        };
        let ccfg = CollisionConfig::default();
        let sq = ccfg.sphere().unwrap();
        let err = picard_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap_err();
        assert!(matches!(err, SolverError::NoContraction(_)), "{err}");
    }

    #[test]
    fn zero_trajectory_estimates() {
        let (s, f, p) = de_sitter(3.0);
        let cfg = SolveConfig::new(0.25, 1.0, sob());
        let ccfg = CollisionConfig::default();
        let sq = ccfg.sphere().unwrap();
        let tr = direct_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap();
        let rep = energy_estimate_check(&tr, 1.0, &sob());
        assert!(rep.feasible);
        assert_eq!((rep.delta1, rep.c1), (0.0, 0.0));
        let d = decay_check(&tr, 1e-3, 0.1).unwrap();
        assert!(d.passed);
        assert_eq!(d.margin, 4e-3);
    }

    #[test]
    fn missing_sources_reported() {
        let (s, _, p) = de_sitter(3.0);
        let grid = make_grid(3.0, 9).unwrap();
        let f = GridFunction::gaussian(grid, 1e-4, 1.0);
        let u = solve_constraint_for_U(1.0, 0.0, 0.0, 0.0, 0.0, &f, &p).unwrap();
        let s = CosmoState { u, ..s };
        let cfg = SolveConfig::new(0.25, 0.5, sob());
        let ccfg = CollisionConfig::default();
        let sq = ccfg.sphere().unwrap();
        let tr = direct_solve((&s, &f), &p, &BuiltinKernel::zero(), &sq, &ccfg, &cfg).unwrap();
        let rep = energy_estimate_check(&tr, 1.0, &sob());
        assert!(!rep.feasible);
        assert!(rep.note.unwrap().contains("sources"));
    }
}
