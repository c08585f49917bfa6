//! Deterministic quadrature rules on the unit sphere.
//!
//! Lebedev rules with 6, 14, 26, 38 and 50 nodes are tabulated; any other
//! accuracy can be had from the Gauss-Legendre x trapezoid product rule.

use std::f64::consts::PI;

use thiserror::Error;

use crate::phase_space::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum SphereError {
    #[error("no Lebedev rule with {0} nodes (available: 6, 14, 26, 38, 50)")]
    UnsupportedOrder(usize),
    #[error("product rule needs at least one node in each direction")]
    EmptyProduct,
}

/// Nodes `ω_k` on the unit sphere and weights summing to `4π`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
}

/// Lebedev orbit generators (normalized weights sum to 1 before scaling).
fn push_a1(nodes: &mut Vec<Vec3>, weights: &mut Vec<f64>, w: f64) {
    for axis in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = [0.0; 3];
            p[axis] = s;
            nodes.push(p);
            weights.push(w);
        }
    }
}

fn push_a2(nodes: &mut Vec<Vec3>, weights: &mut Vec<f64>, w: f64) {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    for zero_axis in 0..3 {
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let mut p = [0.0; 3];
                let (a, b) = match zero_axis {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                p[a] = s1 * c;
                p[b] = s2 * c;
                nodes.push(p);
                weights.push(w);
            }
        }
    }
}

fn push_a3(nodes: &mut Vec<Vec3>, weights: &mut Vec<f64>, w: f64) {
    let c = 1.0 / 3f64.sqrt();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                nodes.push([sx * c, sy * c, sz * c]);
                weights.push(w);
            }
        }
    }
}

/// Orbit of `(l, l, m)`: 24 points.
fn push_b(nodes: &mut Vec<Vec3>, weights: &mut Vec<f64>, l: f64, m: f64, w: f64) {
    for m_axis in 0..3 {
        for s0 in [1.0, -1.0] {
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    let mut p = [s0 * l, s1 * l, s2 * l];
                    p[m_axis] = p[m_axis].signum() * m;
                    nodes.push(p);
                    weights.push(w);
                }
            }
        }
    }
}

/// Orbit of `(p, q, 0)`: 24 points.
fn push_c(nodes: &mut Vec<Vec3>, weights: &mut Vec<f64>, p: f64, q: f64, w: f64) {
    for zero_axis in 0..3 {
        let (a, b) = match zero_axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for (x, y) in [(p, q), (q, p)] {
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    let mut v = [0.0; 3];
                    v[a] = s1 * x;
                    v[b] = s2 * y;
                    nodes.push(v);
                    weights.push(w);
                }
            }
        }
    }
}

impl SphereQuadrature {
    /// Lebedev rule with the given number of nodes.
    pub fn lebedev(order: usize) -> Result<Self, SphereError> {
        let mut nodes = Vec::with_capacity(order);
        let mut weights = Vec::with_capacity(order);
        match order {
            6 => push_a1(&mut nodes, &mut weights, 1.0 / 6.0),
            14 => {
                push_a1(&mut nodes, &mut weights, 1.0 / 15.0);
                push_a3(&mut nodes, &mut weights, 3.0 / 40.0);
            }
            26 => {
                push_a1(&mut nodes, &mut weights, 1.0 / 21.0);
                push_a2(&mut nodes, &mut weights, 4.0 / 105.0);
                push_a3(&mut nodes, &mut weights, 9.0 / 280.0);
            }
            38 => {
                push_a1(&mut nodes, &mut weights, 1.0 / 105.0);
                push_a3(&mut nodes, &mut weights, 9.0 / 280.0);
                push_c(
                    &mut nodes,
                    &mut weights,
                    0.459_700_843_380_983_1,
                    0.888_073_833_977_115_3,
                    1.0 / 35.0,
                );
            }
            50 => {
                push_a1(&mut nodes, &mut weights, 4.0 / 315.0);
                push_a2(&mut nodes, &mut weights, 64.0 / 2835.0);
                push_a3(&mut nodes, &mut weights, 27.0 / 1280.0);
                let l = 1.0 / 11f64.sqrt();
                push_b(&mut nodes, &mut weights, l, 3.0 * l, 14641.0 / 725_760.0);
            }
            other => return Err(SphereError::UnsupportedOrder(other)),
        }
        for w in &mut weights {
            *w *= 4.0 * PI;
        }
        Ok(Self { nodes, weights })
    }

    /// Gauss-Legendre in `cos θ` times the trapezoid rule in `φ`.
    pub fn product(n_theta: usize, n_phi: usize) -> Result<Self, SphereError> {
        if n_theta == 0 || n_phi == 0 {
            return Err(SphereError::EmptyProduct);
        }
        let (xs, ws) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (x, w) in xs.iter().zip(&ws) {
            let s = (1.0 - x * x).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                nodes.push([s * phi.cos(), s * phi.sin(), *x]);
                weights.push(w * dphi);
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
