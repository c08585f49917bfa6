//! Momentum-space discretization.
//!
//! The kinetic unknown lives on a uniform, truncated cube `[-u_max, u_max]^3`
//! in covariant momentum. Integrals are product-trapezoid sums and the
//! weighted Sobolev norms `H^m_d` use second-order finite differences.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

/// Plain 3-vector used throughout the momentum-space code.
pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm_sq(a: &Vec3) -> f64 {
    dot(a, a)
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs an odd number of points per axis, at least 5 (got {0})")]
    BadResolution(usize),
    #[error("grid half-extent must be positive and finite (got {0})")]
    BadExtent(f64),
    #[error("expected {expected} values for the grid, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid function value at index {0} is not finite")]
    NonFinite(usize),
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("derivative order {0} is not supported (0..=3)")]
    BadOrder(usize),
    #[error("weight exponent d = {0} must exceed 5/2")]
    BadWeight(f64),
    #[error("malformed grid function file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Uniform grid with `n` nodes per axis on `[-u_max, u_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    u_max: f64,
    n: usize,
    h: f64,
}

/// Builds a grid; `n` must be odd so that the origin is a node.
pub fn make_grid(u_max: f64, n: usize) -> Result<MomentumGrid, GridError> {
    MomentumGrid::new(u_max, n)
}

impl MomentumGrid {
    pub fn new(u_max: f64, n: usize) -> Result<Self, GridError> {
        if !(u_max.is_finite() && u_max > 0.0) {
            return Err(GridError::BadExtent(u_max));
        }
        if n < 5 || n.is_multiple_of(2) {
            return Err(GridError::BadResolution(n));
        }
        Ok(Self {
            u_max,
            n,
            h: 2.0 * u_max / (n - 1) as f64,
        })
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.u_max + i as f64 * self.h
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx % self.n;
        let j = (idx / self.n) % self.n;
        (idx / (self.n * self.n), j, k)
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Vec3 {
        let (i, j, k) = self.unindex(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// One-dimensional trapezoid weights along an axis.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }

    /// Product trapezoid weights for every node, lexicographic order.
    pub fn cell_weights(&self) -> Vec<f64> {
        let w = self.trapezoid_weights();
        let mut out = Vec::with_capacity(self.len());
        for wi in &w {
            for wj in &w {
                for wk in &w {
                    out.push(wi * wj * wk);
                }
            }
        }
        out
    }
}

/// Samples of a scalar function on a [`MomentumGrid`].
///
/// Values are finite. Non-negativity is a physical property of the
/// distribution function but is only monitored (see [`GridFunction::min`]),
/// never enforced: interpolation may undershoot slightly.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: MomentumGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: MomentumGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(idx));
        }
        Ok(Self { grid, values })
    }

    /// Wraps values produced internally; finiteness is checked in debug builds.
    pub(crate) fn from_raw(grid: MomentumGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: MomentumGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: MomentumGrid, mut f: impl FnMut(Vec3) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.node(idx))).collect();
        Self { grid, values }
    }

    /// Isotropic Gaussian `amplitude * exp(-|u|^2 / width^2)`.
    pub fn gaussian(grid: MomentumGrid, amplitude: f64, width: f64) -> Self {
        let inv = 1.0 / (width * width);
        Self::from_fn(grid, |u| amplitude * (-norm_sq(&u) * inv).exp())
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GridError> {
        self.lin_comb(1.0, other, -1.0)
    }

    /// Discrete L2 norm with trapezoid weights.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.cell_weights();
        self.values.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "u_max,n")?;
        writeln!(out, "{:e},{}", self.grid.u_max, self.grid.n)?;
        for v in &self.values {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, GridError> {
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String, GridError> {
            lines
                .next()
                .ok_or_else(|| GridError::Format(format!("missing {what}")))?
                .map_err(GridError::from)
        };
        let header = next("header")?;
        if header.trim() != "u_max,n" {
            return Err(GridError::Format(format!("unexpected header {header:?}")));
        }
        let (u_max, n) = parse_grid_line(&next("grid line")?)?;
        let grid = MomentumGrid::new(u_max, n)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(
                t.parse::<f64>()
                    .map_err(|e| GridError::Format(format!("value {t:?}: {e}")))?,
            );
        }
        Self::new(grid, values)
    }

    /// Binary layout: ASCII line `"<u_max>,<n>\n"` followed by `n^3`
    /// little-endian `f64` values.
    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{:e},{}", self.grid.u_max, self.grid.n)?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: BufRead>(mut input: R) -> Result<Self, GridError> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        let (u_max, n) = parse_grid_line(&line)?;
        let grid = MomentumGrid::new(u_max, n)?;
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: bytes.len() / 8,
            });
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(grid, values)
    }

    /// Loads `.csv` as text, anything else as the binary layout.
    pub fn load(path: &Path) -> Result<Self, GridError> {
        let file = io::BufReader::new(std::fs::File::open(path)?);
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::read_csv(file)
        } else {
            Self::read_binary(file)
        }
    }
}

fn parse_grid_line(line: &str) -> Result<(f64, usize), GridError> {
    let mut parts = line.trim().split(',');
    let bad = || GridError::Format(format!("bad grid line {line:?}"));
    let u_max = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let n = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    Ok((u_max, n))
}

impl fmt::Display for MomentumGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[-{u}, {u}]^3 with {n}^3 nodes (h = {h})",
            u = self.u_max,
            n = self.n,
            h = self.h
        )
    }
}

/// Particle energy `sqrt(1 + E^2 |u|^2)` in covariant momentum.
#[inline]
pub fn u_zero(u: &Vec3, e: f64) -> f64 {
    (1.0 + e * e * norm_sq(u)).sqrt()
}

fn weighted_sum(f: &GridFunction, weight: impl Fn(Vec3) -> f64) -> f64 {
    let grid = f.grid();
    let w = grid.trapezoid_weights();
    let n = grid.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let wij = w[i] * w[j];
            let row = grid.index(i, j, 0);
            for (k, (&v, &wk)) in f.values[row..row + n].iter().zip(&w).enumerate() {
                if v != 0.0 {
                    let u = [grid.coord(i), grid.coord(j), grid.coord(k)];
                    total += wij * wk * weight(u) * v;
                }
            }
        }
    }
    total
}

/// Trapezoid approximation of `∫ f du` over the cube.
pub fn moment_number(f: &GridFunction) -> f64 {
    weighted_sum(f, |_| 1.0)
}

/// `∫ v^0 f dv` with `v^0 = sqrt(1 + E^2 |v|^2)`.
pub fn moment_energy(f: &GridFunction, e: f64) -> f64 {
    weighted_sum(f, |u| u_zero(&u, e))
}

/// `∫ (v^1)^2 / v^0 f dv`.
pub fn moment_pressure(f: &GridFunction, e: f64) -> f64 {
    weighted_sum(f, |u| u[0] * u[0] / u_zero(&u, e))
}

/// Comoving charge density `E^3 ∫ f du`.
pub fn charge_density(f: &GridFunction, e: f64) -> f64 {
    e * e * e * moment_number(f)
}

/// Derivative order `m` and weight exponent `d` of `H^m_d`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SobolevParams {
    pub m: usize,
    pub d: f64,
}

impl SobolevParams {
    pub fn new(m: usize, d: f64) -> Result<Self, GridError> {
        let p = Self { m, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.m > 3 {
            return Err(GridError::BadOrder(self.m));
        }
        if !(self.d > 2.5) || !self.d.is_finite() {
            return Err(GridError::BadWeight(self.d));
        }
        Ok(())
    }
}

// Second-order stencils. Center rows use symmetric differences, rows at
// the boundary layer fall back to one-sided second-order formulas.
fn first_derivative(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    let c = 0.5 / h;
    out[0] = c * (-3.0 * line[0] + 4.0 * line[1] - line[2]);
    for i in 1..n - 1 {
        out[i] = c * (line[i + 1] - line[i - 1]);
    }
    out[n - 1] = c * (3.0 * line[n - 1] - 4.0 * line[n - 2] + line[n - 3]);
}

fn second_derivative(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    let c = 1.0 / (h * h);
    out[0] = c * (2.0 * line[0] - 5.0 * line[1] + 4.0 * line[2] - line[3]);
    for i in 1..n - 1 {
        out[i] = c * (line[i + 1] - 2.0 * line[i] + line[i - 1]);
    }
    out[n - 1] = c * (2.0 * line[n - 1] - 5.0 * line[n - 2] + 4.0 * line[n - 3] - line[n - 4]);
}

fn third_derivative(line: &[f64], h: f64, out: &mut [f64]) {
    // weights (times 2) for a five-node window with the evaluation node at
    // offset 0..=4
    const W: [[f64; 5]; 5] = [
        [-5.0, 18.0, -24.0, 14.0, -3.0],
        [-3.0, 10.0, -12.0, 6.0, -1.0],
        [-1.0, 2.0, 0.0, -2.0, 1.0],
        [1.0, -6.0, 12.0, -10.0, 3.0],
        [3.0, -14.0, 24.0, -18.0, 5.0],
    ];
    let n = line.len();
    let c = 0.5 / (h * h * h);
    for (i, o) in out.iter_mut().enumerate() {
        let start = i.saturating_sub(2).min(n - 5);
        let w = &W[i - start];
        let win = &line[start..start + 5];
        *o = c * (w[0] * win[0] + w[1] * win[1] + w[2] * win[2] + w[3] * win[3] + w[4] * win[4]);
    }
}

/// Applies the `order`-th 1-D derivative along `axis` (0, 1 or 2).
pub fn partial_derivative(f: &GridFunction, axis: usize, order: usize) -> GridFunction {
    if order == 0 {
        return f.clone();
    }
    let grid = *f.grid();
    let n = grid.n();
    let h = grid.h();
    let stride = match axis {
        0 => n * n,
        1 => n,
        _ => 1,
    };
    let mut out = vec![0.0; grid.len()];
    let mut line = vec![0.0; n];
    let mut d = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            let base = match axis {
                0 => a * n + b,
                1 => a * n * n + b,
                _ => (a * n + b) * n,
            };
            for (i, l) in line.iter_mut().enumerate() {
                *l = f.values[base + i * stride];
            }
            match order {
                1 => first_derivative(&line, h, &mut d),
                2 => second_derivative(&line, h, &mut d),
                3 => third_derivative(&line, h, &mut d),
                _ => unreachable!("derivative order above 3"),
            }
            for (i, v) in d.iter().enumerate() {
                out[base + i * stride] = *v;
            }
        }
    }
    GridFunction::from_raw(grid, out)
}

/// All multi-indices `β` with `|β| <= m`.
pub fn multi_indices(m: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for total in 0..=m {
        for a in 0..=total {
            for b in 0..=total - a {
                out.push([a, b, total - a - b]);
            }
        }
    }
    out
}

/// Weighted L2 norm of `(1+|u|)^power * g`.
fn weighted_l2(g: &GridFunction, power: f64) -> f64 {
    let grid = g.grid();
    let w = grid.cell_weights();
    let mut acc = 0.0;
    for (idx, (&v, &wt)) in g.values.iter().zip(&w).enumerate() {
        if v != 0.0 {
            let r = norm_sq(&grid.node(idx)).sqrt();
            let s = (1.0 + r).powf(power) * v;
            acc += wt * s * s;
        }
    }
    acc.sqrt()
}

/// `max_{|β| <= m} ‖(1+|u|)^{d+|β|} ∂^β f‖_{L2}`.
pub fn sobolev_norm(f: &GridFunction, p: &SobolevParams) -> Result<f64, GridError> {
    p.validate()?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    for beta in multi_indices(p.m) {
        let mut g = partial_derivative(f, 0, beta[0]);
        g = partial_derivative(&g, 1, beta[1]);
        g = partial_derivative(&g, 2, beta[2]);
        let order = (beta[0] + beta[1] + beta[2]) as f64;
        best = best.max(weighted_l2(&g, p.d + order));
    }
    Ok(best)
}
