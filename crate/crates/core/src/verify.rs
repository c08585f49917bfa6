//! Randomized checks of the collision kinematics and operator bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::{
    collision_operator, elementary_energy, jacobian_dets, post_collision, CollisionConfig, CollisionError, Kernel,
};
use crate::phase_space::{norm_sq, sobolev_norm, u_zero, GridError, GridFunction, MomentumGrid, SobolevParams, Vec3};
use crate::sphere::SphereQuadrature;

pub const ENERGY_TOL: f64 = 1e-10;
pub const JACOBIAN_TOL: f64 = 1e-6;
pub const JACOBIAN_DELTA: f64 = 1e-4;

pub fn random_vec<R: Rng>(rng: &mut R, scale: f64) -> Vec3 {
    [
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    ]
}

/// Uniform direction on the unit sphere by rejection.
pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = random_vec(rng, 1.0);
        let r = norm_sq(&v).sqrt();
        if r > 0.1 && r <= 1.0 {
            return [v[0] / r, v[1] / r, v[2] / r];
        }
    }
}

/// Distance between adjacent doubles at `|x|`.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    f64::from_bits(a.to_bits() + 1) - a
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Error of `(u' + v') - (u + v)` in units of the last place of the largest
/// operand, evaluated without cancellation loss.
pub fn momentum_defect_ulps(u: &Vec3, v: &Vec3, up: &Vec3, vp: &Vec3) -> f64 {
    (0..3)
        .map(|i| {
            let (s1, e1) = two_sum(up[i], vp[i]);
            let (s2, e2) = two_sum(u[i], v[i]);
            let defect = (s1 - s2) + (e1 - e2);
            let scale = u[i].abs().max(v[i].abs()).max(up[i].abs()).max(vp[i].abs());
            if defect == 0.0 {
                0.0
            } else {
                defect.abs() / ulp(scale)
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicsReport {
    pub samples: usize,
    pub max_momentum_ulps: f64,
    pub max_energy_error: f64,
    pub passed: bool,
}

/// Momentum and energy conservation over random `(u, v, ω, E)`,
/// `E ∈ [0.5, 2]`, momenta in `[-4, 4]³`.
pub fn kinematics_suite(samples: usize, seed: u64) -> Result<KinematicsReport, CollisionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ulps: f64 = 0.0;
    let mut max_energy: f64 = 0.0;
    for _ in 0..samples {
        let e = rng.gen_range(0.5..2.0);
        let (u, v) = (random_vec(&mut rng, 4.0), random_vec(&mut rng, 4.0));
        let omega = random_unit(&mut rng);
        let (up, vp) = post_collision(&u, &v, &omega, e)?;
        max_ulps = max_ulps.max(momentum_defect_ulps(&u, &v, &up, &vp));
        let err = (u_zero(&up, e) + u_zero(&vp, e) - elementary_energy(&u, &v, e)).abs();
        max_energy = if err.is_nan() { f64::NAN } else { max_energy.max(err) };
    }
    Ok(KinematicsReport {
        samples,
        max_momentum_ulps: max_ulps,
        max_energy_error: max_energy,
        passed: max_ulps <= 1.0 && max_energy <= ENERGY_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianReport {
    pub samples: usize,
    /// `|det J_h - det J| / |det J|` at `δ = 1e-4`.
    pub max_relative_residual: f64,
    /// Median of `log₂(r(2δ)/r(δ))` at `δ = 1e-2`.
    pub observed_order: f64,
    pub passed: bool,
}

pub fn jacobian_suite(samples: usize, seed: u64) -> Result<JacobianReport, CollisionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut orders = Vec::with_capacity(samples);
    for _ in 0..samples {
        let e = rng.gen_range(0.5..2.0);
        let (u, v) = (random_vec(&mut rng, 2.0), random_vec(&mut rng, 2.0));
        let omega = random_unit(&mut rng);
        let rel = |delta: f64| -> Result<f64, CollisionError> {
            let (num, exact) = jacobian_dets(&u, &v, &omega, e, delta)?;
            Ok((num - exact).abs() / exact.abs())
        };
        let r = rel(JACOBIAN_DELTA)?;
        worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
        let (coarse, fine) = (rel(2e-2)?, rel(1e-2)?);
        if fine > 0.0 && coarse > 0.0 {
            orders.push((coarse / fine).log2());
        }
    }
    orders.sort_by(f64::total_cmp);
    let observed_order = if orders.is_empty() {
        f64::NAN
    } else {
        orders[orders.len() / 2]
    };
    Ok(JacobianReport {
        samples,
        max_relative_residual: worst,
        observed_order,
        passed: worst <= JACOBIAN_TOL && (1.5..=2.5).contains(&observed_order),
    })
}

/// Sum of isotropic Gaussian bumps, defined independently of any grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBumps {
    pub bumps: Vec<(Vec3, f64, f64)>,
}

/// Distribution of [`SmoothBumps::random`]: one to three bumps with centers
/// in `[-center_radius, center_radius]³` and widths and amplitudes drawn
/// uniformly from the given ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpFamily {
    pub center_radius: f64,
    pub width: (f64, f64),
    pub amplitude: (f64, f64),
}

impl Default for BumpFamily {
    fn default() -> Self {
        Self {
            center_radius: 0.5,
            width: (0.5, 0.8),
            amplitude: (0.2, 1.0),
        }
    }
}

impl SmoothBumps {
    pub fn random<R: Rng>(rng: &mut R, family: &BumpFamily) -> Self {
        let count = rng.gen_range(1..=3);
        let bumps = (0..count)
            .map(|_| {
                let c = random_vec(rng, family.center_radius);
                let w = rng.gen_range(family.width.0..family.width.1);
                (c, w, rng.gen_range(family.amplitude.0..family.amplitude.1))
            })
            .collect();
        Self { bumps }
    }

    pub fn eval(&self, u: &Vec3) -> f64 {
        self.bumps
            .iter()
            .map(|(c, w, a)| {
                let d = [u[0] - c[0], u[1] - c[1], u[2] - c[2]];
                a * (-norm_sq(&d) / (w * w)).exp()
            })
            .sum()
    }

    pub fn sample(&self, grid: MomentumGrid) -> GridFunction {
        GridFunction::from_fn(grid, |u| self.eval(&u))
    }
}

/// Random pairs `(f, g)` reproducible from `seed`.
pub fn random_pairs(count: usize, seed: u64, family: &BumpFamily) -> Vec<(SmoothBumps, SmoothBumps)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                SmoothBumps::random(&mut rng, family),
                SmoothBumps::random(&mut rng, family),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoserReport {
    pub n: usize,
    /// `‖(1/u⁰)Q(f, g)‖ / (‖f‖ ‖g‖)` per pair, norms in `H^m_d`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub finite: bool,
}

pub struct MoserSetup<'a, K: Kernel + ?Sized> {
    pub kernel: &'a K,
    pub sq: &'a SphereQuadrature,
    pub ccfg: &'a CollisionConfig,
    pub e: f64,
    pub sobolev: SobolevParams,
}

#[derive(Debug, thiserror::Error)]
pub enum MoserError {
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn moser_suite<K: Kernel + ?Sized>(
    pairs: &[(SmoothBumps, SmoothBumps)],
    grid: MomentumGrid,
    setup: &MoserSetup<'_, K>,
) -> Result<MoserReport, MoserError> {
    let mut ratios = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let (f, g) = (a.sample(grid), b.sample(grid));
        let q = collision_operator(&f, &g, setup.e, setup.kernel, setup.sq, setup.ccfg)?;
        let nf = sobolev_norm(&f, &setup.sobolev)?;
        let ng = sobolev_norm(&g, &setup.sobolev)?;
        ratios.push(sobolev_norm(&q, &setup.sobolev)? / (nf * ng));
    }
    let finite = ratios.iter().all(|r| r.is_finite());
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(MoserReport {
        n: grid.n(),
        ratios,
        max_ratio,
        finite,
    })
}
