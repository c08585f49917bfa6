//! Semi-Lagrangian transport in momentum space.
//!
//! The kinetic equation `∂f/∂t - c Σ ∂f/∂uⁱ = (1/u⁰)Q(f, f)` has a
//! spatially uniform advection speed `c = E Z ∫f`, so the characteristics
//! are rigid diagonal translations `du/dt = -c (1, 1, 1)`.

use log::warn;

use crate::collision::{collision_term, CollisionConfig, CollisionError, Kernel};
use crate::cosmo::CosmoState;
use crate::interp::{shift_axis, shift_axis_exact};
use crate::phase_space::{moment_number, GridFunction};
use crate::sphere::SphereQuadrature;

/// Relative distance to the nearest node below which a shift is treated as
/// grid-aligned.
const ALIGN_TOL: f64 = 1e-12;

/// Running integral of the advection speed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdvectionState {
    pub cumulative_shift: f64,
}

impl AdvectionState {
    pub fn advance(&mut self, c: f64, dt: f64) {
        self.cumulative_shift += c * dt;
    }
}

/// `c = E Z ∫f`.
pub fn advection_speed(s: &CosmoState, f: &GridFunction) -> f64 {
    if s.z == 0.0 {
        return 0.0;
    }
    s.e * s.z * moment_number(f)
}

/// `g(u) = f(u + Δ(1, 1, 1))`, zero where the sample point leaves the cube.
pub fn shift_interpolate(f: &GridFunction, delta: f64) -> GridFunction {
    let grid = *f.grid();
    if delta == 0.0 {
        return f.clone();
    }
    if delta.abs() > 0.5 * grid.u_max() {
        warn!(
            "shift {delta:e} exceeds half the cube extent {}; mass leaves the grid",
            grid.u_max()
        );
    }
    let s = delta / grid.h();
    let k = s.round();
    let mut values = f.values().to_vec();
    if (s - k).abs() <= ALIGN_TOL * s.abs().max(1.0) {
        for axis in 0..3 {
            values = shift_axis_exact(&values, &grid, axis, k as i64);
        }
    } else {
        for axis in 0..3 {
            values = shift_axis(&values, &grid, axis, s);
        }
    }
    GridFunction::from_raw(grid, values)
}

/// Strang step: half advection, explicit midpoint collision, half advection.
/// The advection speed is taken from `s` and the incoming `f`.
pub fn transport_step<K: Kernel + ?Sized>(
    f: &GridFunction,
    s: &CosmoState,
    dt: f64,
    e: f64,
    kernel: &K,
    sq: &SphereQuadrature,
    cfg: &CollisionConfig,
) -> Result<GridFunction, CollisionError> {
    let half = 0.5 * advection_speed(s, f) * dt;
    let g = shift_interpolate(f, half);
    let k1 = collision_term(&g, e, kernel, sq, cfg)?;
    let g = if k1.is_zero() {
        g
    } else {
        let mid = g.lin_comb(1.0, &k1, 0.5 * dt)?;
        let k2 = collision_term(&mid, e, kernel, sq, cfg)?;
        g.lin_comb(1.0, &k2, dt)?
    };
    Ok(shift_interpolate(&g, half))
}
