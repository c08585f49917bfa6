//! Binary elastic collisions in covariant momentum.
//!
//! Post-collision momenta follow the Glassey parametrization
//! `u' = u + b ω`, `v' = v - b ω`, with `b` the nontrivial root of energy
//! conservation. The gain and loss integrals are discretized with the
//! product-trapezoid rule over the partner momentum and a fixed sphere rule
//! over `ω`; off-grid values `f(u')` come from tricubic interpolation.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::Sampler;
use crate::phase_space::{dot, norm_sq, u_zero, GridError, GridFunction, MomentumGrid, Vec3};
use crate::sphere::{SphereError, SphereQuadrature};

/// Smallest admissible denominator in [`btilde`]. The exact denominator is
/// bounded below by the invariant mass `s >= 4`.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Pairs whose kernel bound falls below this fraction of the uniform bound
/// are skipped.
const PRUNE_FRACTION: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CollisionError {
    #[error("degenerate collision denominator {0:e}")]
    DegenerateDenominator(f64),
    #[error("velocity stride {stride} does not divide n - 1 = {cells}")]
    BadStride { stride: usize, cells: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sphere(#[from] SphereError),
}

/// Shock kernel `B(E, u, v, u', v', ω)`, nonnegative and bounded.
pub trait Kernel: Send + Sync {
    fn evaluate(&self, e: f64, u: &Vec3, v: &Vec3, u_post: &Vec3, v_post: &Vec3, omega: &Vec3) -> f64;

    /// Uniform bound `C` with `0 <= B <= C`.
    fn sup_bound(&self, e: f64) -> f64;

    /// Natural log of an upper bound of `B` over all `ω` for the pair `(u, v)`.
    fn ln_pair_bound(&self, e: f64, _u: &Vec3, _v: &Vec3) -> f64 {
        self.sup_bound(e).ln()
    }

    /// Radius beyond which no partner `v` of `u` reaches `ln_cutoff` in
    /// [`Kernel::ln_pair_bound`]; `None` when unbounded.
    fn partner_radius(&self, _e: f64, _u: &Vec3, _ln_cutoff: f64) -> Option<f64> {
        None
    }
}

/// Kernels selectable from a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum BuiltinKernel {
    /// `A exp(-a^2 - |u|^2 - |v|^2 - |u'|^2 - |v'|^2)` with `a = 1/E`.
    Gaussian { amplitude: f64 },
    /// Constant cross section; only integrable because the cube is bounded.
    Constant { value: f64 },
}

impl BuiltinKernel {
    pub fn zero() -> Self {
        BuiltinKernel::Constant { value: 0.0 }
    }
}

impl Kernel for BuiltinKernel {
    #[inline]
    fn evaluate(&self, e: f64, u: &Vec3, v: &Vec3, u_post: &Vec3, v_post: &Vec3, _omega: &Vec3) -> f64 {
        match *self {
            BuiltinKernel::Gaussian { amplitude } => {
                let a2 = 1.0 / (e * e);
                amplitude * (-a2 - norm_sq(u) - norm_sq(v) - norm_sq(u_post) - norm_sq(v_post)).exp()
            }
            BuiltinKernel::Constant { value } => value,
        }
    }

    fn sup_bound(&self, e: f64) -> f64 {
        match *self {
            BuiltinKernel::Gaussian { amplitude } => amplitude * (-1.0 / (e * e)).exp(),
            BuiltinKernel::Constant { value } => value,
        }
    }

    #[inline]
    fn ln_pair_bound(&self, e: f64, u: &Vec3, v: &Vec3) -> f64 {
        match *self {
            BuiltinKernel::Gaussian { amplitude } => {
                // |u'|^2 + |v'|^2 >= |u + v|^2 / 2 by momentum conservation
                amplitude.ln() - 1.0 / (e * e) - 1.5 * (norm_sq(u) + norm_sq(v)) - dot(u, v)
            }
            BuiltinKernel::Constant { value } => value.ln(),
        }
    }

    fn partner_radius(&self, e: f64, u: &Vec3, ln_cutoff: f64) -> Option<f64> {
        match *self {
            BuiltinKernel::Gaussian { amplitude } => {
                // 1.5|v|^2 + u·v >= 1.5|v|^2 - |u||v|
                let r2 = norm_sq(u);
                let k = amplitude.ln() - 1.0 / (e * e) - 1.5 * r2 - ln_cutoff;
                let disc = r2 + 6.0 * k;
                Some(if disc < 0.0 {
                    -1.0
                } else {
                    (r2.sqrt() + disc.sqrt()) / 3.0
                })
            }
            BuiltinKernel::Constant { .. } => None,
        }
    }
}

/// Quadrature resolution of the collision integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionConfig {
    pub sphere_order: usize,
    /// Stride over the partner-momentum grid; must divide `n - 1`.
    pub velocity_subsample: usize,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        Self {
            sphere_order: 6,
            velocity_subsample: 1,
        }
    }
}

impl CollisionConfig {
    pub fn validate(&self, grid: &MomentumGrid) -> Result<(), CollisionError> {
        let cells = grid.n() - 1;
        if self.velocity_subsample == 0 || !cells.is_multiple_of(self.velocity_subsample) {
            return Err(CollisionError::BadStride {
                stride: self.velocity_subsample,
                cells,
            });
        }
        SphereQuadrature::lebedev(self.sphere_order)?;
        Ok(())
    }

    pub fn sphere(&self) -> Result<SphereQuadrature, CollisionError> {
        Ok(SphereQuadrature::lebedev(self.sphere_order)?)
    }
}

/// Total energy `u^0 + v^0` of a colliding pair.
#[inline]
pub fn elementary_energy(u: &Vec3, v: &Vec3, e: f64) -> f64 {
    u_zero(u, e) + u_zero(v, e)
}

#[inline]
fn btilde_parts(u0: f64, v0: f64, e: f64, hat_diff: &Vec3, sum: &Vec3, omega: &Vec3) -> (f64, f64) {
    let et = u0 + v0;
    let proj = dot(omega, sum);
    let den = et * et - e * e * proj * proj;
    (2.0 * u0 * v0 * et * dot(omega, hat_diff), den)
}

/// Collision parameter `b` such that `u + bω`, `v - bω` conserve
/// `u^0 + v^0`, where `u^0 = sqrt(1 + E^2|u|^2)`.
pub fn btilde(u: &Vec3, v: &Vec3, omega: &Vec3, e: f64) -> Result<f64, CollisionError> {
    let u0 = u_zero(u, e);
    let v0 = u_zero(v, e);
    let hat_diff = [v[0] / v0 - u[0] / u0, v[1] / v0 - u[1] / u0, v[2] / v0 - u[2] / u0];
    let sum = [u[0] + v[0], u[1] + v[1], u[2] + v[2]];
    let (num, den) = btilde_parts(u0, v0, e, &hat_diff, &sum, omega);
    if !(den >= DENOMINATOR_FLOOR) {
        return Err(CollisionError::DegenerateDenominator(den));
    }
    Ok(num / den)
}

/// Denominator `ẽ^2 - E^2 (ω·(u+v))^2` of the collision parameter.
pub fn btilde_denominator(u: &Vec3, v: &Vec3, omega: &Vec3, e: f64) -> f64 {
    let et = elementary_energy(u, v, e);
    let proj = omega[0] * (u[0] + v[0]) + omega[1] * (u[1] + v[1]) + omega[2] * (u[2] + v[2]);
    et * et - e * e * proj * proj
}

pub fn post_collision(u: &Vec3, v: &Vec3, omega: &Vec3, e: f64) -> Result<(Vec3, Vec3), CollisionError> {
    let b = btilde(u, v, omega, e)?;
    Ok(apply(u, v, omega, b))
}

#[inline]
fn apply(u: &Vec3, v: &Vec3, omega: &Vec3, b: f64) -> (Vec3, Vec3) {
    let d = [b * omega[0], b * omega[1], b * omega[2]];
    (
        [u[0] + d[0], u[1] + d[1], u[2] + d[2]],
        [v[0] - d[0], v[1] - d[1], v[2] - d[2]],
    )
}

/// Central-difference Jacobian determinant of `(u, v) -> (u', v')` at fixed
/// `ω`, compared against `-u'^0 v'^0 / (u^0 v^0)`. Returns
/// `(numeric_det, expected_det)`.
pub fn jacobian_dets(u: &Vec3, v: &Vec3, omega: &Vec3, e: f64, delta: f64) -> Result<(f64, f64), CollisionError> {
    let map = |x: &[f64; 6]| -> Result<[f64; 6], CollisionError> {
        let (up, vp) = post_collision(&[x[0], x[1], x[2]], &[x[3], x[4], x[5]], omega, e)?;
        Ok([up[0], up[1], up[2], vp[0], vp[1], vp[2]])
    };
    let x0 = [u[0], u[1], u[2], v[0], v[1], v[2]];
    let mut jac = SMatrix::<f64, 6, 6>::zeros();
    for col in 0..6 {
        let mut xp = x0;
        let mut xm = x0;
        xp[col] += delta;
        xm[col] -= delta;
        let fp = map(&xp)?;
        let fm = map(&xm)?;
        for row in 0..6 {
            jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * delta);
        }
    }
    let (up, vp) = post_collision(u, v, omega, e)?;
    let expected = -u_zero(&up, e) * u_zero(&vp, e) / (u_zero(u, e) * u_zero(v, e));
    Ok((jac.determinant(), expected))
}

/// `|det J_numeric - (-u'^0 v'^0 / (u^0 v^0))|`.
pub fn jacobian_residual(u: &Vec3, v: &Vec3, omega: &Vec3, e: f64, delta: f64) -> Result<f64, CollisionError> {
    let (num, exact) = jacobian_dets(u, v, omega, e, delta)?;
    Ok((num - exact).abs())
}

/// Optional gain and loss values at every node.
type GainLoss = (Option<Vec<f64>>, Option<Vec<f64>>);

struct Partner {
    v: Vec3,
    v0: f64,
    /// `v / v0`
    vh: Vec3,
    radius: f64,
    /// trapezoid weight over `v0`
    weight: f64,
    idx: usize,
}

fn partners(grid: &MomentumGrid, e: f64, stride: usize) -> Vec<Partner> {
    let n = grid.n();
    let coarse_n = (n - 1) / stride + 1;
    let hw = grid.h() * stride as f64;
    let w1 = |i: usize| if i == 0 || i == coarse_n - 1 { 0.5 * hw } else { hw };
    let mut out = Vec::with_capacity(coarse_n * coarse_n * coarse_n);
    for a in 0..coarse_n {
        for b in 0..coarse_n {
            for c in 0..coarse_n {
                let (i, j, k) = (a * stride, b * stride, c * stride);
                let v = [grid.coord(i), grid.coord(j), grid.coord(k)];
                let v0 = u_zero(&v, e);
                out.push(Partner {
                    v,
                    v0,
                    vh: [v[0] / v0, v[1] / v0, v[2] / v0],
                    radius: norm_sq(&v).sqrt(),
                    weight: w1(a) * w1(b) * w1(c) / v0,
                    idx: grid.index(i, j, k),
                });
            }
        }
    }
    out.sort_by(|a, b| a.radius.total_cmp(&b.radius).then(a.idx.cmp(&b.idx)));
    out
}

/// Gain and loss integrals at every grid node; `None` for the part not
/// requested.
#[allow(clippy::too_many_arguments)]
fn gain_loss<K: Kernel + ?Sized>(
    f: &GridFunction,
    g: &GridFunction,
    e: f64,
    kernel: &K,
    sq: &SphereQuadrature,
    cfg: &CollisionConfig,
    want_gain: bool,
    want_loss: bool,
) -> Result<GainLoss, CollisionError> {
    if f.grid() != g.grid() {
        return Err(GridError::GridMismatch.into());
    }
    let grid = *f.grid();
    cfg.validate(&grid)?;
    let npts = grid.len();
    let mut gain = want_gain.then(|| vec![0.0; npts]);
    let mut loss = want_loss.then(|| vec![0.0; npts]);
    let sup = kernel.sup_bound(e);
    if sup <= 0.0 || f.is_zero() || g.is_zero() {
        return Ok((gain, loss));
    }
    let cutoff = PRUNE_FRACTION * sup;
    let ln_cutoff = cutoff.ln();
    let parts = partners(&grid, e, cfg.velocity_subsample);
    let e3 = e * e * e;
    let gv = g.values();
    let fv = f.values();
    let (f_at, g_at) = (Sampler::new(f), Sampler::new(g));

    for idx in 0..npts {
        let fu = fv[idx];
        let need_gain = want_gain;
        let need_loss = want_loss && fu != 0.0;
        if !need_gain && !need_loss {
            continue;
        }
        let u = grid.node(idx);
        let u0 = u_zero(&u, e);
        let uh = [u[0] / u0, u[1] / u0, u[2] / u0];
        let mut acc_gain = 0.0;
        let mut acc_loss = 0.0;
        let radius = kernel.partner_radius(e, &u, ln_cutoff).unwrap_or(f64::INFINITY);
        for p in parts.iter().take_while(|p| p.radius <= radius) {
            let gvp = gv[p.idx];
            if !need_gain && gvp == 0.0 {
                continue;
            }
            if kernel.ln_pair_bound(e, &u, &p.v) < ln_cutoff {
                continue;
            }
            let v = &p.v;
            let hat_diff = [p.vh[0] - uh[0], p.vh[1] - uh[1], p.vh[2] - uh[2]];
            let sum = [u[0] + v[0], u[1] + v[1], u[2] + v[2]];
            let mut sphere_gain = 0.0;
            let mut sphere_loss = 0.0;
            for (omega, wk) in sq.nodes().iter().zip(sq.weights()) {
                let (num, den) = btilde_parts(u0, p.v0, e, &hat_diff, &sum, omega);
                if !(den >= DENOMINATOR_FLOOR) {
                    return Err(CollisionError::DegenerateDenominator(den));
                }
                let (up, vp) = apply(&u, v, omega, num / den);
                let b = kernel.evaluate(e, &u, v, &up, &vp, omega);
                if b < cutoff {
                    continue;
                }
                if need_loss {
                    sphere_loss += wk * b;
                }
                if need_gain {
                    let fup = f_at.eval(&up);
                    if fup != 0.0 {
                        sphere_gain += wk * b * fup * g_at.eval(&vp);
                    }
                }
            }
            acc_gain += p.weight * sphere_gain;
            acc_loss += p.weight * gvp * sphere_loss;
        }
        if let Some(gain) = gain.as_mut() {
            gain[idx] = e3 * acc_gain;
        }
        if let Some(loss) = loss.as_mut() {
            loss[idx] = e3 * fu * acc_loss;
        }
    }
    Ok((gain, loss))
}

/// Gain term `Q⁺(f, g)` at every node.
pub fn q_gain<K: Kernel + ?Sized>(
    f: &GridFunction,
    g: &GridFunction,
    e: f64,
    kernel: &K,
    sq: &SphereQuadrature,
    cfg: &CollisionConfig,
) -> Result<GridFunction, CollisionError> {
    let (gain, _) = gain_loss(f, g, e, kernel, sq, cfg, true, false)?;
    Ok(GridFunction::from_raw(*f.grid(), gain.expect("gain requested")))
}

/// Loss term `Q⁻(f, g)`; no interpolation is involved.
pub fn q_loss<K: Kernel + ?Sized>(
    f: &GridFunction,
    g: &GridFunction,
    e: f64,
    kernel: &K,
    sq: &SphereQuadrature,
    cfg: &CollisionConfig,
) -> Result<GridFunction, CollisionError> {
    let (_, loss) = gain_loss(f, g, e, kernel, sq, cfg, false, true)?;
    Ok(GridFunction::from_raw(*f.grid(), loss.expect("loss requested")))
}

/// Bilinear source `(1/u^0) (Q⁺(f, g) - Q⁻(f, g))`.
pub fn collision_operator<K: Kernel + ?Sized>(
    f: &GridFunction,
    g: &GridFunction,
    e: f64,
    kernel: &K,
    sq: &SphereQuadrature,
    cfg: &CollisionConfig,
) -> Result<GridFunction, CollisionError> {
    let (gain, loss) = gain_loss(f, g, e, kernel, sq, cfg, true, true)?;
    let grid = *f.grid();
    let (gain, loss) = (gain.expect("gain requested"), loss.expect("loss requested"));
    let values = (0..grid.len())
        .map(|idx| (gain[idx] - loss[idx]) / u_zero(&grid.node(idx), e))
        .collect();
    Ok(GridFunction::from_raw(grid, values))
}

/// Right-hand side `(1/u^0) Q(f, f)` of the kinetic equation.
pub fn collision_term<K: Kernel + ?Sized>(
    f: &GridFunction,
    e: f64,
    kernel: &K,
    sq: &SphereQuadrature,
    cfg: &CollisionConfig,
) -> Result<GridFunction, CollisionError> {
    collision_operator(f, f, e, kernel, sq, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{make_grid, moment_number};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
        [
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        ]
    }

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let v = random_vec(rng, 1.0);
            let r = norm_sq(&v).sqrt();
            if r > 0.1 && r <= 1.0 {
                return [v[0] / r, v[1] / r, v[2] / r];
            }
        }
    }

    #[test]
    fn elementary_energy_values() {
        assert_eq!(elementary_energy(&[0.0; 3], &[0.0; 3], 1.7), 2.0);
        assert_relative_eq!(
            elementary_energy(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], 1.0),
            2.0 * 2f64.sqrt()
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (u, v) = (random_vec(&mut rng, 3.0), random_vec(&mut rng, 3.0));
            assert_eq!(elementary_energy(&u, &v, 0.8), elementary_energy(&v, &u, 0.8));
        }
    }

    #[test]
    fn btilde_vanishing_cases() {
        let u = [0.3, -1.2, 0.5];
        let omega = [0.0, 0.6, 0.8];
        assert_eq!(btilde(&u, &u, &omega, 1.3).unwrap(), 0.0);
        // ω orthogonal to v̂ - û
        let v = [-0.3, 1.2, -0.5];
        let e = 0.9;
        let (u0, v0) = (u_zero(&u, e), u_zero(&v, e));
        let d = [v[0] / v0 - u[0] / u0, v[1] / v0 - u[1] / u0, v[2] / v0 - u[2] / u0];
        let perp = [d[1], -d[0], 0.0];
        let r = norm_sq(&perp).sqrt();
        let perp = [perp[0] / r, perp[1] / r, 0.0];
        assert!(btilde(&u, &v, &perp, e).unwrap().abs() < 1e-15);
    }

    #[test]
    fn head_on_collision_swaps_momenta() {
        // u0 = v0 = √2, ẽ = 2√2, numerator 2·2·2√2·(-√2) = -16, denominator 8
        let u = [1.0, 0.0, 0.0];
        let v = [-1.0, 0.0, 0.0];
        let omega = [1.0, 0.0, 0.0];
        let b = btilde(&u, &v, &omega, 1.0).unwrap();
        assert_relative_eq!(b, -2.0, max_relative = 1e-15);
        let (up, vp) = post_collision(&u, &v, &omega, 1.0).unwrap();
        assert_eq!(up, [-1.0, 0.0, 0.0]);
        assert_eq!(vp, [1.0, 0.0, 0.0]);
        assert_relative_eq!(u_zero(&up, 1.0) + u_zero(&vp, 1.0), 2.0 * 2f64.sqrt());
    }

    #[test]
    fn coincident_momenta_unchanged() {
        let u = [0.4, 0.1, -2.0];
        let (up, vp) = post_collision(&u, &u, &[0.0, 0.0, 1.0], 1.5).unwrap();
        assert_eq!((up, vp), (u, u));
    }

    #[test]
    fn energy_conserved_and_denominator_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let e = rng.gen_range(0.5..2.0);
            let (u, v) = (random_vec(&mut rng, 4.0), random_vec(&mut rng, 4.0));
            let omega = random_unit(&mut rng);
            assert!(btilde_denominator(&u, &v, &omega, e) >= 4.0 - 1e-9);
            let (up, vp) = post_collision(&u, &v, &omega, e).unwrap();
            let before = elementary_energy(&u, &v, e);
            let after = u_zero(&up, e) + u_zero(&vp, e);
            assert!((after - before).abs() <= 1e-12 * before.max(1.0), "{after} vs {before}");
        }
    }

    #[test]
    fn jacobian_identity_and_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let e = rng.gen_range(0.5..2.0);
            let (u, v) = (random_vec(&mut rng, 2.0), random_vec(&mut rng, 2.0));
            let omega = random_unit(&mut rng);
            let r1 = jacobian_residual(&u, &v, &omega, e, 1e-4).unwrap();
            assert!(r1 <= 1e-6, "residual {r1}");
        }
        // identity map direction still passes
        let u = [0.5, -0.2, 0.1];
        assert!(jacobian_residual(&u, &u, &[0.0, 1.0, 0.0], 1.0, 1e-4).unwrap() <= 1e-6);
        // second-order convergence at a larger step
        let (u, v, omega) = ([1.0, 0.5, -0.3], [-0.7, 0.2, 0.9], [0.48, 0.6, 0.64]);
        let a = jacobian_residual(&u, &v, &omega, 1.2, 2e-2).unwrap();
        let b = jacobian_residual(&u, &v, &omega, 1.2, 1e-2).unwrap();
        assert!(a / b > 3.0 && a / b < 5.0, "ratio {}", a / b);
    }

    fn small_setup() -> (MomentumGrid, SphereQuadrature, CollisionConfig) {
        let grid = make_grid(3.0, 9).unwrap();
        let cfg = CollisionConfig::default();
        (grid, cfg.sphere().unwrap(), cfg)
    }

    #[test]
    fn bilinear_zeros() {
        let (grid, sq, cfg) = small_setup();
        let f = GridFunction::gaussian(grid, 1.0, 1.0);
        let z = GridFunction::zeros(grid);
        let k = BuiltinKernel::Gaussian { amplitude: 1.0 };
        assert!(q_gain(&f, &z, 1.0, &k, &sq, &cfg).unwrap().is_zero());
        assert!(q_gain(&z, &f, 1.0, &k, &sq, &cfg).unwrap().is_zero());
        assert!(q_loss(&z, &f, 1.0, &k, &sq, &cfg).unwrap().is_zero());
        assert!(collision_term(&z, 1.0, &k, &sq, &cfg).unwrap().is_zero());
        let zero_kernel = BuiltinKernel::zero();
        assert!(collision_term(&f, 1.0, &zero_kernel, &sq, &cfg).unwrap().is_zero());
    }

    #[test]
    fn loss_with_constant_kernel_separates() {
        let (grid, sq, cfg) = small_setup();
        let c = 0.3;
        let e = 1.4;
        let k = BuiltinKernel::Constant { value: c };
        let f = GridFunction::gaussian(grid, 2.0, 1.1);
        let g = GridFunction::gaussian(grid, 1.0, 0.8);
        let loss = q_loss(&f, &g, e, &k, &sq, &cfg).unwrap();
        // oracle: c · 4π · E^3 · f(u) · ∫ g/v0
        let g_over_v0 = GridFunction::from_fn(grid, |v| {
            let idx_val = (-norm_sq(&v) / (0.8 * 0.8)).exp();
            idx_val / u_zero(&v, e)
        });
        let int = moment_number(&g_over_v0);
        for idx in [0, 40, 364, 500, grid.len() - 1] {
            let want = c * 4.0 * std::f64::consts::PI * e.powi(3) * f.values()[idx] * int;
            assert_relative_eq!(loss.values()[idx], want, max_relative = 1e-12);
        }
        assert!(loss.min() >= 0.0);
    }

    #[test]
    fn quadratic_scaling() {
        let (grid, sq, cfg) = small_setup();
        let k = BuiltinKernel::Gaussian { amplitude: 2.0 };
        let f = GridFunction::gaussian(grid, 1.0, 1.0);
        let q1 = collision_term(&f, 1.0, &k, &sq, &cfg).unwrap();
        let q3 = collision_term(&f.scaled(3.0), 1.0, &k, &sq, &cfg).unwrap();
        let scale = q3.max_abs();
        for (a, b) in q1.values().iter().zip(q3.values()) {
            assert!((9.0 * a - b).abs() <= 1e-11 * scale, "{a} {b}");
        }
    }

    #[test]
    fn stride_validation() {
        let grid = make_grid(3.0, 9).unwrap();
        let bad = CollisionConfig {
            sphere_order: 6,
            velocity_subsample: 3,
        };
        assert!(matches!(bad.validate(&grid), Err(CollisionError::BadStride { .. })));
        let ok = CollisionConfig {
            sphere_order: 14,
            velocity_subsample: 2,
        };
        assert!(ok.validate(&grid).is_ok());
        let bad_sphere = CollisionConfig {
            sphere_order: 7,
            velocity_subsample: 1,
        };
        assert!(bad_sphere.validate(&grid).is_err());
    }

    #[test]
    fn kernel_config_names() {
        let k: BuiltinKernel = serde_json::from_str(r#"{"name":"gaussian","amplitude":2.5}"#).unwrap();
        assert_eq!(k, BuiltinKernel::Gaussian { amplitude: 2.5 });
        let k: BuiltinKernel = serde_json::from_str(r#"{"name":"constant","value":0.1}"#).unwrap();
        assert_eq!(k, BuiltinKernel::Constant { value: 0.1 });
    }
}
