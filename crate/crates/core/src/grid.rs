//! Uniform node grids on rectangles `[y1_min, y1_max] x [0, 1]` and fields
//! sampled on them.

use crate::background::FlowState;
use crate::error::{Error, Result};

/// Component indices of a [`Field`], matching the `(u1, u2, S, B, kappa)` order.
pub const U1: usize = 0;
pub const U2: usize = 1;
pub const S: usize = 2;
pub const B: usize = 3;
pub const KAPPA: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub y1_min: f64,
    pub y1_max: f64,
}

impl Grid {
    pub fn new(n1: usize, n2: usize, y1_min: f64, y1_max: f64) -> Result<Self> {
        if n1 < 8 || n2 < 8 {
            return Err(Error::Config(format!(
                "grids need at least 8 cells per direction, got {n1} x {n2}"
            )));
        }
        if !(y1_min < y1_max) {
            return Err(Error::Config(format!(
                "grid interval [{y1_min}, {y1_max}] is empty"
            )));
        }
        Ok(Self {
            n1,
            n2,
            y1_min,
            y1_max,
        })
    }

    pub fn h1(&self) -> f64 {
        (self.y1_max - self.y1_min) / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        1.0 / self.n2 as f64
    }

    pub fn y1(&self, i: usize) -> f64 {
        if i == self.n1 {
            self.y1_max
        } else {
            self.y1_min + self.h1() * i as f64
        }
    }

    pub fn y2(&self, j: usize) -> f64 {
        j as f64 / self.n2 as f64
    }

    /// Row-major index, `y2` outer and `y1` inner.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.n1 + 1) + i
    }

    pub fn len(&self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Coordinate chart a field is sampled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Lagrangian `(y1, y2)`.
    Lagrangian,
    /// Shock-fixed `(z1, z2)`.
    Fixed,
}

/// Five-component nodal field: either a full state or a fluctuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub chart: Chart,
    pub comps: [Vec<f64>; 5],
}

impl Field {
    pub fn zeros(grid: Grid, chart: Chart) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            grid,
            chart,
            comps: [z.clone(), z.clone(), z.clone(), z.clone(), z],
        }
    }

    pub fn uniform(grid: Grid, chart: Chart, state: &FlowState) -> Self {
        let a = state.as_array();
        Self {
            grid,
            chart,
            comps: a.map(|v| vec![v; grid.len()]),
        }
    }

    pub fn get(&self, c: usize, i: usize, j: usize) -> f64 {
        self.comps[c][self.grid.idx(i, j)]
    }

    pub fn set(&mut self, c: usize, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.comps[c][k] = v;
    }

    pub fn state(&self, i: usize, j: usize) -> FlowState {
        let k = self.grid.idx(i, j);
        FlowState::from_array([0, 1, 2, 3, 4].map(|c| self.comps[c][k]))
    }

    pub fn set_state(&mut self, i: usize, j: usize, st: &FlowState) {
        let k = self.grid.idx(i, j);
        for (c, v) in st.as_array().into_iter().enumerate() {
            self.comps[c][k] = v;
        }
    }

    /// Column of component `c` at station `i`, ordered by `y2`.
    pub fn column(&self, c: usize, i: usize) -> Vec<f64> {
        (0..=self.grid.n2).map(|j| self.get(c, i, j)).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.comps.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Max absolute nodal value over the listed components.
    pub fn sup(&self, comps: &[usize]) -> f64 {
        comps
            .iter()
            .flat_map(|&c| self.comps[c].iter())
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Tensor-product cubic interpolation of component `c` at `(y1, y2)`.
    pub fn interpolate(&self, c: usize, y1: f64, y2: f64) -> Result<f64> {
        let g = &self.grid;
        let tol = 1e-12 * (1.0 + g.y1_max.abs());
        if !(y1 >= g.y1_min - tol && y1 <= g.y1_max + tol && (-1e-12..=1.0 + 1e-12).contains(&y2)) {
            return Err(Error::Geometry(format!(
                "point ({y1}, {y2}) outside [{}, {}] x [0, 1]",
                g.y1_min, g.y1_max
            )));
        }
        let (i0, wx) = cubic_weights((y1 - g.y1_min) / g.h1(), g.n1);
        let (j0, wy) = cubic_weights(y2 / g.h2(), g.n2);
        let mut acc = 0.0;
        for (b, wb) in wy.iter().enumerate() {
            if *wb == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for (a, wa) in wx.iter().enumerate() {
                row += wa * self.get(c, i0 + a, j0 + b);
            }
            acc += wb * row;
        }
        Ok(acc)
    }
}

/// Four-point Lagrange stencil start and weights for fractional index `t`
/// on nodes `0..=n`; the stencil is shifted inward near the ends.
fn cubic_weights(t: f64, n: usize) -> (usize, [f64; 4]) {
    let k = t.floor().clamp(0.0, n as f64) as usize;
    if (t - k as f64).abs() < 1e-13 || (k == n) {
        // On a node: exact pick avoids round-off in the weights.
        let start = k.saturating_sub(1).min(n - 3);
        let mut w = [0.0; 4];
        w[k - start] = 1.0;
        return (start, w);
    }
    let start = k.saturating_sub(1).min(n - 3);
    let x = t - start as f64;
    let mut w = [0.0; 4];
    for (a, wa) in w.iter_mut().enumerate() {
        let mut prod = 1.0;
        for b in 0..4 {
            if b != a {
                prod *= (x - b as f64) / (a as f64 - b as f64);
            }
        }
        *wa = prod;
    }
    (start, w)
}

/// Samples of every component along `y1 = curve[j]` at the grid rows `y2_j`.
pub fn sample_on_curve(field: &Field, curve: &[f64]) -> Result<Vec<FlowState>> {
    if curve.len() != field.grid.n2 + 1 {
        return Err(Error::Geometry(format!(
            "curve has {} samples, grid has {} rows",
            curve.len(),
            field.grid.n2 + 1
        )));
    }
    curve
        .iter()
        .enumerate()
        .map(|(j, &y1)| {
            let y2 = field.grid.y2(j);
            let mut a = [0.0; 5];
            for (c, v) in a.iter_mut().enumerate() {
                *v = field.interpolate(c, y1, y2)?;
            }
            Ok(FlowState::from_array(a))
        })
        .collect()
}
