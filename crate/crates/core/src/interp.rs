//! Tricubic (tensor-product cubic Lagrange) interpolation on a
//! [`MomentumGrid`], extended by zero outside the cube.

use crate::phase_space::{GridFunction, MomentumGrid, Vec3};

/// Stencil start and the four Lagrange weights for one axis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisStencil {
    pub start: usize,
    pub w: [f64; 4],
}

#[inline]
fn lagrange4(t: f64) -> [f64; 4] {
    // nodes at -1, 0, 1, 2
    const SIXTH: f64 = 1.0 / 6.0;
    let tm1 = t - 1.0;
    let tm2 = t - 2.0;
    let tp1 = t + 1.0;
    let a = t * tm1;
    let b = tp1 * tm2;
    [-a * tm2 * SIXTH, 0.5 * b * tm1, -0.5 * b * t, a * tp1 * SIXTH]
}

/// Stencil for a fractional index position `p` in `[0, n-1]`; `None` when
/// `p` lies outside the grid.
#[inline]
pub(crate) fn axis_stencil(p: f64, n: usize) -> Option<AxisStencil> {
    const EDGE_SLACK: f64 = 1e-9;
    let last = (n - 1) as f64;
    if !(p >= -EDGE_SLACK && p <= last + EDGE_SLACK) {
        return None;
    }
    let p = p.clamp(0.0, last);
    let cell = (p.floor() as usize).min(n - 2);
    // interior cells use nodes cell-1..cell+2; edge cells shift the stencil inward
    let start = cell.saturating_sub(1).min(n - 4);
    let t = p - start as f64 - 1.0;
    Some(AxisStencil { start, w: lagrange4(t) })
}

/// Evaluates `f` at an arbitrary point; zero outside the cube.
#[inline]
pub fn tricubic(f: &GridFunction, u: &Vec3) -> f64 {
    Sampler::new(f).eval(u)
}

/// Repeated tricubic evaluation of one grid function.
#[derive(Clone, Copy)]
pub(crate) struct Sampler<'a> {
    values: &'a [f64],
    n: usize,
    u_max: f64,
    inv_h: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(f: &'a GridFunction) -> Self {
        let grid = f.grid();
        Self {
            values: f.values(),
            n: grid.n(),
            u_max: grid.u_max(),
            inv_h: 1.0 / grid.h(),
        }
    }

    #[inline]
    pub fn eval(&self, u: &Vec3) -> f64 {
        let n = self.n;
        let pos = |x: f64| (x + self.u_max) * self.inv_h;
        let Some(sx) = axis_stencil(pos(u[0]), n) else {
            return 0.0;
        };
        let Some(sy) = axis_stencil(pos(u[1]), n) else {
            return 0.0;
        };
        let Some(sz) = axis_stencil(pos(u[2]), n) else {
            return 0.0;
        };
        let v = self.values;
        let mut acc = 0.0;
        for a in 0..4 {
            let mut acc_y = 0.0;
            let plane = (sx.start + a) * n;
            for b in 0..4 {
                let base = (plane + sy.start + b) * n + sz.start;
                let row = &v[base..base + 4];
                let s = row[0] * sz.w[0] + row[1] * sz.w[1] + row[2] * sz.w[2] + row[3] * sz.w[3];
                acc_y += sy.w[b] * s;
            }
            acc += sx.w[a] * acc_y;
        }
        acc
    }
}

/// Shifts `values` along one axis: `out(i) = in(i + s)` in index units,
/// cubic interpolation, zero where `i + s` leaves the grid.
pub(crate) fn shift_axis(values: &[f64], grid: &MomentumGrid, axis: usize, s: f64) -> Vec<f64> {
    let n = grid.n();
    let stride = match axis {
        0 => n * n,
        1 => n,
        _ => 1,
    };
    let stencils: Vec<Option<AxisStencil>> = (0..n).map(|i| axis_stencil(i as f64 + s, n)).collect();
    let mut out = vec![0.0; values.len()];
    for a in 0..n {
        for b in 0..n {
            let base = match axis {
                0 => a * n + b,
                1 => a * n * n + b,
                _ => (a * n + b) * n,
            };
            for (i, st) in stencils.iter().enumerate() {
                if let Some(st) = st {
                    let mut acc = 0.0;
                    for (q, w) in st.w.iter().enumerate() {
                        acc += w * values[base + (st.start + q) * stride];
                    }
                    out[base + i * stride] = acc;
                }
            }
        }
    }
    out
}

/// Integer shift along one axis, exact re-indexing.
pub(crate) fn shift_axis_exact(values: &[f64], grid: &MomentumGrid, axis: usize, s: i64) -> Vec<f64> {
    let n = grid.n() as i64;
    let nn = grid.n();
    let stride = match axis {
        0 => nn * nn,
        1 => nn,
        _ => 1,
    };
    let mut out = vec![0.0; values.len()];
    for a in 0..nn {
        for b in 0..nn {
            let base = match axis {
                0 => a * nn + b,
                1 => a * nn * nn + b,
                _ => (a * nn + b) * nn,
            };
            for i in 0..n {
                let src = i + s;
                if (0..n).contains(&src) {
                    out[base + i as usize * stride] = values[base + src as usize * stride];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::make_grid;

    #[test]
    fn weights_partition_unity() {
        for t in [-0.3, 0.0, 0.25, 0.5, 0.99, 1.0, 1.7] {
            let w = lagrange4(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert_eq!(lagrange4(0.0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn reproduces_cubics() {
        let g = make_grid(2.0, 9).unwrap();
        let poly = |u: Vec3| 1.0 + u[0] - 0.5 * u[1] * u[1] * u[2] + 0.1 * u[0].powi(3) + u[0] * u[1] * u[2].powi(3);
        let f = GridFunction::from_fn(g, poly);
        for p in [[0.1, -0.7, 1.9], [-1.95, 1.99, 0.0], [2.0, -2.0, 0.33], [0.5, 0.5, 0.5]] {
            assert!((tricubic(&f, &p) - poly(p)).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn zero_outside() {
        let g = make_grid(1.0, 5).unwrap();
        let f = GridFunction::from_fn(g, |_| 1.0);
        assert_eq!(tricubic(&f, &[1.0001, 0.0, 0.0]), 0.0);
        assert_eq!(tricubic(&f, &[0.0, -1.5, 0.0]), 0.0);
        assert!((tricubic(&f, &[1.0, 1.0, -1.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_at_nodes() {
        let g = make_grid(1.5, 7).unwrap();
        let f = GridFunction::from_fn(g, |u| (u[0] * 3.0).sin() + u[1] * u[2].exp());
        for idx in [0, 17, 100, g.len() - 1] {
            let u = g.node(idx);
            assert!((tricubic(&f, &u) - f.values()[idx]).abs() < 1e-13);
        }
    }
}
