//! The six cosmological scalars `(E, U, W, Z, Φ, ψ)`, their evolution
//! equations, the Hamiltonian constraint and a-priori bounds.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase_space::{moment_energy, moment_number, moment_pressure, GridFunction};
use crate::trajectory::Trajectory;

/// Smallest `ψ` for which the `√(2ψ)` terms are evaluated when `ρ > 0`.
pub const PSI_FLOOR: f64 = 1e-12;

/// Smallest admissible inverse scale factor.
pub const E_FLOOR: f64 = 1e-12;

/// Absolute tolerance of the a-priori bound checks.
pub const APRIORI_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CosmoError {
    #[error("psi = {0:e} is at or below the floor while rho > 0")]
    PsiNonpositive(f64),
    #[error("Hamiltonian constraint has no real solution (radicand {0:e})")]
    ConstraintUnsolvable(f64),
    #[error("invalid cosmological state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CosmoState {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "Phi")]
    pub phi: f64,
    pub psi: f64,
}

impl CosmoState {
    pub fn to_array(&self) -> [f64; 6] {
        [self.e, self.u, self.w, self.z, self.phi, self.psi]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            e: a[0],
            u: a[1],
            w: a[2],
            z: a[3],
            phi: a[4],
            psi: a[5],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// `E > 0`, `Φ >= 0`, `ψ >= 0`, `W <= 0`.
    pub fn validate(&self) -> Result<(), CosmoError> {
        if !self.is_finite() {
            return Err(CosmoError::InvalidState("non-finite component".into()));
        }
        if self.e <= 0.0 {
            return Err(CosmoError::InvalidState(format!("E must be > 0, got {}", self.e)));
        }
        if self.phi < 0.0 {
            return Err(CosmoError::InvalidState(format!("Phi must be >= 0, got {}", self.phi)));
        }
        if self.psi < 0.0 {
            return Err(CosmoError::InvalidState(format!("psi must be >= 0, got {}", self.psi)));
        }
        if self.w > 0.0 {
            return Err(CosmoError::InvalidState(format!("W must be <= 0, got {}", self.w)));
        }
        Ok(())
    }

    pub(crate) fn lerp(&self, other: &Self, theta: f64) -> Self {
        *self + (*other + *self * -1.0) * theta
    }
}

impl Add for CosmoState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.to_array(), o.to_array());
        Self::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl Mul<f64> for CosmoState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::from_array(self.to_array().map(|x| x * s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub m: f64,
    pub rho: f64,
}

impl PhysParams {
    pub fn validate(&self) -> Result<(), CosmoError> {
        if !self.lambda.is_finite() {
            return Err(CosmoError::InvalidState("Lambda must be finite".into()));
        }
        if !(self.m > 0.0) || !self.m.is_finite() {
            return Err(CosmoError::InvalidState(format!("m must be > 0, got {}", self.m)));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(CosmoError::InvalidState(format!("rho must be >= 0, got {}", self.rho)));
        }
        Ok(())
    }

    /// `Λ > -4π m² Φ₀²`.
    pub fn global_regime(&self, phi0: f64) -> bool {
        self.lambda > -4.0 * PI * self.m * self.m * phi0 * phi0
    }
}

/// Velocity moments of `f` entering the scalar equations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub n0: f64,
    pub e0: f64,
    pub p11: f64,
}

impl Moments {
    pub fn of(f: &GridFunction, e: f64) -> Self {
        if f.is_zero() {
            return Self::default();
        }
        Self {
            n0: moment_number(f),
            e0: moment_energy(f, e),
            p11: moment_pressure(f, e),
        }
    }

    pub(crate) fn lerp(&self, other: &Self, theta: f64) -> Self {
        let l = |a: f64, b: f64| a + theta * (b - a);
        Self {
            n0: l(self.n0, other.n0),
            e0: l(self.e0, other.e0),
            p11: l(self.p11, other.p11),
        }
    }
}

/// Tangent `(Ė, U̇, Ẇ, Ż, Φ̇, ψ̇)` of the reduced system.
pub fn cosmo_rhs(s: &CosmoState, mom: &Moments, p: &PhysParams) -> Result<CosmoState, CosmoError> {
    if p.rho > 0.0 && s.psi <= PSI_FLOOR {
        return Err(CosmoError::PsiNonpositive(s.psi));
    }
    let CosmoState { e, u, w, z, phi, psi } = *s;
    let m2 = p.m * p.m;
    let rho2 = p.rho * p.rho;
    let sq = (2.0 * psi.max(0.0)).sqrt();
    let e2 = e * e;
    Ok(CosmoState {
        e: -u * e,
        u: -1.5 * u * u + 0.5 * p.lambda
            - 4.0 * PI * e2 * e2 * e * mom.p11
            - 2.0 * PI * z * z / e2
            - 2.0 * PI * (2.0 * psi - m2 * phi * phi),
        w: -3.0 * u * w - rho2,
        z: -3.0 * u * z,
        phi: sq,
        psi: -6.0 * u * psi - m2 * phi * sq - rho2,
    })
}

/// Matter bracket `8πE³e0 + 12πZ²/E² - 8πW + 4π(2ψ + m²Φ²)`.
fn constraint_bracket(e: f64, w: f64, z: f64, phi: f64, psi: f64, e0: f64, p: &PhysParams) -> f64 {
    8.0 * PI * e * e * e * e0 + 12.0 * PI * z * z / (e * e) - 8.0 * PI * w
        + 4.0 * PI * (2.0 * psi + p.m * p.m * phi * phi)
}

/// Residual of the constraint given the energy moment `e0 = ∫v⁰f`.
pub fn hamiltonian_residual_with(s: &CosmoState, e0: f64, p: &PhysParams) -> f64 {
    3.0 * s.u * s.u - p.lambda - constraint_bracket(s.e, s.w, s.z, s.phi, s.psi, e0, p)
}

/// `3U² - Λ - [8πE³e0 + 12πZ²/E² - 8πW + 4π(2ψ + m²Φ²)]`.
pub fn hamiltonian_residual(s: &CosmoState, f: &GridFunction, p: &PhysParams) -> f64 {
    hamiltonian_residual_with(s, moment_energy(f, s.e), p)
}

/// Positive root `U₀` of the Hamiltonian constraint.
#[allow(non_snake_case)]
pub fn solve_constraint_for_U(
    e: f64,
    w: f64,
    z: f64,
    phi: f64,
    psi: f64,
    f: &GridFunction,
    p: &PhysParams,
) -> Result<f64, CosmoError> {
    let radicand = (p.lambda + constraint_bracket(e, w, z, phi, psi, moment_energy(f, e), p)) / 3.0;
    if !(radicand >= 0.0) {
        return Err(CosmoError::ConstraintUnsolvable(radicand));
    }
    Ok(radicand.sqrt())
}

/// `Z / E³`, constant along exact solutions.
pub fn conserved_em_flux(s: &CosmoState) -> f64 {
    s.z / (s.e * s.e * s.e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest slack over all stored times; negative when violated.
    pub margin: f64,
    /// First stored time at which the bound fails.
    pub first_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct BoundAcc {
    name: &'static str,
    margin: f64,
    first_violation: Option<f64>,
}

impl BoundAcc {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            margin: f64::INFINITY,
            first_violation: None,
        }
    }

    fn record(&mut self, t: f64, slack: f64) {
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        self.margin = self.margin.min(slack);
        if slack < 0.0 && self.first_violation.is_none() {
            self.first_violation = Some(t);
        }
    }

    fn finish(self) -> BoundCheck {
        BoundCheck {
            name: self.name,
            passed: self.first_violation.is_none(),
            margin: self.margin,
            first_violation: self.first_violation,
        }
    }
}

/// Checks the a-priori inequalities at every stored time of `traj`.
pub fn apriori_check(traj: &Trajectory, p: &PhysParams) -> BoundReport {
    apriori_check_with_tol(traj, p, APRIORI_TOL)
}

pub fn apriori_check_with_tol(traj: &Trajectory, p: &PhysParams, tol: f64) -> BoundReport {
    let Some(s0) = traj.states.first() else {
        return BoundReport { checks: Vec::new() };
    };
    let t_end = traj.times.last().copied().unwrap_or(0.0);
    let m2 = p.m * p.m;
    let energy_excess = 3.0 * s0.u * s0.u - p.lambda;
    let u_low = (p.lambda / 3.0 + 4.0 * PI / 3.0 * m2 * s0.phi * s0.phi).max(0.0).sqrt();
    let psi_high = energy_excess / (8.0 * PI);
    let phi_high = (energy_excess / (4.0 * PI * m2)).max(0.0).sqrt();
    let w_high = s0.w.abs() + p.rho * p.rho / (3.0 * s0.u) * (3.0 * s0.u * t_end).exp();

    let mut acc = [
        BoundAcc::new("U lower bound"),
        BoundAcc::new("U <= U0"),
        BoundAcc::new("U nonincreasing"),
        BoundAcc::new("E nonincreasing"),
        BoundAcc::new("0 <= E <= E0"),
        BoundAcc::new("|Z| <= |Z0|"),
        BoundAcc::new("psi bounds"),
        BoundAcc::new("Phi bounds"),
        BoundAcc::new("|W| bound"),
    ];
    let mut prev: Option<&CosmoState> = None;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let t = *t;
        acc[0].record(t, s.u - u_low + tol);
        acc[1].record(t, s0.u + tol - s.u);
        if let Some(q) = prev {
            acc[2].record(t, q.u + tol - s.u);
            acc[3].record(t, q.e + tol - s.e);
        }
        acc[4].record(t, (s.e + tol).min(s0.e + tol - s.e));
        acc[5].record(t, s0.z.abs() + tol - s.z.abs());
        acc[6].record(t, (s.psi + tol).min(psi_high + tol - s.psi));
        acc[7].record(t, (s.phi + tol).min(phi_high + tol - s.phi));
        acc[8].record(t, w_high + tol - s.w.abs());
        prev = Some(s);
    }
    BoundReport {
        checks: acc.into_iter().map(BoundAcc::finish).collect(),
    }
}
