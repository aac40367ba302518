//! Upstream supersonic flow on the whole Lagrangian rectangle, marched in y1
//! with a two-step Lax-Wendroff (Richtmyer) scheme.
//!
//! Both the constant-coefficient fluctuation system and the quasilinear
//! system are written as `d1 w + A(w) d2 w = 0` with `w = (u1, u2)`; the
//! characteristic speeds `dy2/dy1` are the eigenvalues of `A`. Entropy,
//! Bernoulli constant and field strength are constant along rows and are
//! never differenced.

use crate::background::{BackgroundShock, FlowState, Local, Side};
use crate::error::{Error, Result};
use crate::grid::{Chart, Field, Grid, B, KAPPA, S, U1, U2};
use crate::profiles::WallProfile;

type Mat2 = [[f64; 2]; 2];

trait MarchModel {
    fn coeff(&self, w: [f64; 2]) -> Result<Mat2>;
    /// Upper-wall value of `u2` given the extrapolated `u1`.
    fn wall_top(&self, y1: f64, u1: f64) -> Result<f64>;
}

/// Largest characteristic speed of `A`, or a regime error if `A` has
/// complex eigenvalues.
fn max_speed(a: &Mat2) -> Result<f64> {
    let half_tr = 0.5 * (a[0][0] + a[1][1]);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = half_tr * half_tr - det;
    if !(disc >= 0.0) {
        return Err(Error::Regime(format!(
            "marching operator lost hyperbolicity (discriminant {disc:e})"
        )));
    }
    Ok(half_tr.abs() + disc.sqrt())
}

fn cfl_check(h1: f64, h2: f64, speed: f64, span: f64) -> Result<()> {
    if h1 * speed > h2 {
        return Err(Error::Cfl {
            h1,
            limit: h2 / speed,
            suggested_n1: (span * speed / h2).ceil() as usize,
        });
    }
    Ok(())
}

fn matvec(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

/// Marches `w` from `y1_min` to `y1_max`; returns the stations' `(u1, u2)` columns.
fn march(grid: &Grid, entrance: [f64; 2], model: &dyn MarchModel) -> Result<Vec<Vec<[f64; 2]>>> {
    let (h1, h2) = (grid.h1(), grid.h2());
    let span = grid.y1_max - grid.y1_min;
    let n2 = grid.n2;
    let r = h1 / h2;
    let mut w = vec![entrance; n2 + 1];
    let mut out = Vec::with_capacity(grid.n1 + 1);
    out.push(w.clone());
    let mut half = vec![[0.0; 2]; n2];
    for i in 1..=grid.n1 {
        let mut speed: f64 = 0.0;
        for (j, h) in half.iter_mut().enumerate() {
            let (a, b) = (w[j], w[j + 1]);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let am = model.coeff(mid)?;
            speed = speed.max(max_speed(&am)?);
            let flux = matvec(&am, [b[0] - a[0], b[1] - a[1]]);
            *h = [mid[0] - 0.5 * r * flux[0], mid[1] - 0.5 * r * flux[1]];
        }
        cfl_check(h1, h2, speed, span)?;
        let mut next = w.clone();
        for j in 1..n2 {
            let (a, b) = (half[j - 1], half[j]);
            let am = model.coeff([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])?;
            let flux = matvec(&am, [b[0] - a[0], b[1] - a[1]]);
            next[j] = [w[j][0] - r * flux[0], w[j][1] - r * flux[1]];
        }
        next[0][0] = 3.0 * next[1][0] - 3.0 * next[2][0] + next[3][0];
        next[0][1] = 0.0;
        next[n2][0] = 3.0 * next[n2 - 1][0] - 3.0 * next[n2 - 2][0] + next[n2 - 3][0];
        next[n2][1] = model.wall_top(grid.y1(i), next[n2][0])?;
        if next.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(Error::Numerical(format!(
                "supersonic march produced non-finite values at y1 = {}",
                grid.y1(i)
            )));
        }
        w = next;
        out.push(w.clone());
    }
    Ok(out)
}

struct Linear<'a> {
    a: Mat2,
    slope: &'a dyn Fn(f64) -> Result<f64>,
    gain: f64,
}

impl MarchModel for Linear<'_> {
    fn coeff(&self, _w: [f64; 2]) -> Result<Mat2> {
        Ok(self.a)
    }

    fn wall_top(&self, y1: f64, _u1: f64) -> Result<f64> {
        Ok(self.gain * (self.slope)(y1)?)
    }
}

/// Constant marching matrix of the fluctuation system about the upstream state.
pub fn linear_operator(bg: &BackgroundShock) -> Mat2 {
    let s = &bg.minus;
    let m = bg.mass_flux;
    let rk2 = s.rho * bg.kappa * bg.kappa;
    [
        [0.0, m / (1.0 - s.mach2)],
        [-m * s.c_factor / (1.0 - rk2), 0.0],
    ]
}

/// Linear fluctuation field for an arbitrary wall slope function.
pub fn solve_linear_supersonic_with(
    bg: &BackgroundShock,
    slope: &dyn Fn(f64) -> Result<f64>,
    sigma: f64,
    grid: &Grid,
) -> Result<Field> {
    let model = Linear {
        a: linear_operator(bg),
        slope,
        gain: sigma * bg.minus.u,
    };
    cfl_check(
        grid.h1(),
        grid.h2(),
        max_speed(&model.a)?,
        grid.y1_max - grid.y1_min,
    )?;
    let cols = march(grid, [0.0; 2], &model)?;
    let mut f = Field::zeros(*grid, Chart::Lagrangian);
    for (i, col) in cols.iter().enumerate() {
        for (j, w) in col.iter().enumerate() {
            f.set(U1, i, j, w[0]);
            f.set(U2, i, j, w[1]);
        }
    }
    Ok(f)
}

/// Linear upstream fluctuation `(u1, u2, 0, 0, 0)` with zero entrance data.
pub fn solve_linear_supersonic(
    bg: &BackgroundShock,
    wall: &WallProfile,
    grid: &Grid,
) -> Result<Field> {
    let slope = |x: f64| wall.fp(x).map_err(Error::from);
    solve_linear_supersonic_with(bg, &slope, wall.sigma, grid)
}

struct Nonlinear<'a> {
    bg: &'a BackgroundShock,
    wall: &'a WallProfile,
}

impl Nonlinear<'_> {
    fn state(&self, w: [f64; 2]) -> FlowState {
        let s = &self.bg.minus.state;
        FlowState { u1: w[0], u2: w[1], ..*s }
    }
}

impl MarchModel for Nonlinear<'_> {
    fn coeff(&self, w: [f64; 2]) -> Result<Mat2> {
        let st = self.state(w);
        let loc = Local::at(&st, self.bg.gas)?;
        if loc.mach2() <= 1.0 || loc.rk2 >= 1.0 || loc.cf <= 0.0 {
            return Err(Error::Regime(format!(
                "upstream state {st:?} is no longer supersonic and super-Alfvenic"
            )));
        }
        let rho = loc.th.rho;
        let a1 = [
            [1.0 - loc.m1 * loc.m1, -loc.m1 * loc.m2],
            [loc.rk2 * loc.m1 * loc.m2, 1.0 - loc.rk2 + loc.rk2 * loc.m2 * loc.m2],
        ];
        let a2 = [
            [-rho * st.u2, rho * st.u1],
            [-rho * st.u1 * loc.cf, -rho * st.u2 * loc.cf],
        ];
        let det = a1[0][0] * a1[1][1] - a1[0][1] * a1[1][0];
        let inv = [
            [a1[1][1] / det, -a1[0][1] / det],
            [-a1[1][0] / det, a1[0][0] / det],
        ];
        let mut a = [[0.0; 2]; 2];
        for (r, row) in a.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = inv[r][0] * a2[0][c] + inv[r][1] * a2[1][c];
            }
        }
        Ok(a)
    }

    fn wall_top(&self, y1: f64, u1: f64) -> Result<f64> {
        Ok(self.wall.sigma * self.wall.fp(y1)? * u1)
    }
}

/// Full upstream state on the rectangle from the quasilinear system with
/// uniform entrance data and the slip condition on the walls.
pub fn solve_nonlinear_supersonic(
    bg: &BackgroundShock,
    wall: &WallProfile,
    grid: &Grid,
) -> Result<Field> {
    let model = Nonlinear { bg, wall };
    let cols = march(grid, [bg.minus.u, 0.0], &model).map_err(|e| match e {
        Error::Regime(msg) => Error::Regime(format!("{msg} (nonlinear supersonic march)")),
        e => e,
    })?;
    let mut f = Field::uniform(*grid, Chart::Lagrangian, &bg.minus.state);
    for (i, col) in cols.iter().enumerate() {
        for (j, w) in col.iter().enumerate() {
            f.set(U1, i, j, w[0]);
            f.set(U2, i, j, w[1]);
        }
    }
    debug_assert!([S, B, KAPPA].iter().all(|&c| f.comps[c]
        .iter()
        .all(|&v| v == bg.side(Side::Minus).state.as_array()[c])));
    Ok(f)
}
