//! Downstream subsonic velocity system on the shock-fixed rectangle
//! `[eta*, L1] x [0, 1]`:
//!
//! ```text
//! (1 - M+^2) d1 v1 + m d2 v2       = f1
//! (1 - rho+ kappa^2) d1 v2 - m C+ d2 v1 = f2
//! ```
//!
//! with `v1` given on the shock and exit edges and `v2` on the walls.
//! After removing the divergence source with a row integral, a potential
//! `phi` with `d1 phi = -m v2`, `d2 phi = (1 - M+^2) v1` solves
//! `-a1 d11 phi - a2 d22 phi = R`. The edge data fix the tangential
//! derivative of `phi`, so its boundary values follow by integrating around
//! the rectangle; the loop closes only when the compatibility defect
//! vanishes.

use crate::background::BackgroundShock;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::profiles::{cumulative_trapezoid, simpson_samples};

/// Default relative threshold on the compatibility defect.
pub const DEFECT_REL_TOL: f64 = 1e-6;
/// Absolute floor on the defect threshold, for data at round-off size.
pub const DEFECT_ABS_TOL: f64 = 1e-13;
/// Bound on the scaled residual of the discrete potential system.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub grid: Grid,
    /// `(1 - rho+ kappa^2) / m`
    pub a1: f64,
    /// `m C+ / (1 - M+^2)`
    pub a2: f64,
    /// `1 - M+^2`
    pub div_coeff: f64,
    pub mass_flux: f64,
    /// `m C+`
    pub cross: f64,
    /// Nodal `f1`.
    pub div_source: Vec<f64>,
    /// Nodal `f2`.
    pub curl_source: Vec<f64>,
    /// `v1` on the shock edge, by `z2`.
    pub left: Vec<f64>,
    /// `v1` on the exit edge, by `z2`.
    pub right: Vec<f64>,
    /// `v2` on the lower wall, by `z1`.
    pub bottom: Vec<f64>,
    /// `v2` on the upper wall, by `z1`.
    pub top: Vec<f64>,
    pub defect_rel_tol: f64,
}

impl EllipticProblem {
    /// Zero sources and data with the downstream background coefficients.
    pub fn new(bg: &BackgroundShock, grid: Grid) -> Self {
        let (a1, a2) = bg.elliptic_coeffs();
        let m = bg.mass_flux;
        Self {
            grid,
            a1,
            a2,
            div_coeff: 1.0 - bg.plus.mach2,
            mass_flux: m,
            cross: m * bg.plus.c_factor,
            div_source: vec![0.0; grid.len()],
            curl_source: vec![0.0; grid.len()],
            left: vec![0.0; grid.n2 + 1],
            right: vec![0.0; grid.n2 + 1],
            bottom: vec![0.0; grid.n1 + 1],
            top: vec![0.0; grid.n1 + 1],
            defect_rel_tol: DEFECT_REL_TOL,
        }
    }

    fn check_shapes(&self) -> Result<()> {
        let g = &self.grid;
        let ok = self.div_source.len() == g.len()
            && self.curl_source.len() == g.len()
            && self.left.len() == g.n2 + 1
            && self.right.len() == g.n2 + 1
            && self.bottom.len() == g.n1 + 1
            && self.top.len() == g.n1 + 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Numerical("elliptic data do not match the grid".into()))
        }
    }

    /// Size of the data entering the defect, for relative thresholds.
    pub fn flux_scale(&self) -> f64 {
        let g = &self.grid;
        let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
        let src: Vec<f64> = self.div_source.iter().map(|x| x.abs()).collect();
        self.div_coeff
            * (simpson_samples(&abs(&self.left), g.h2()) + simpson_samples(&abs(&self.right), g.h2()))
            + self.mass_flux
                * (simpson_samples(&abs(&self.top), g.h1())
                    + simpson_samples(&abs(&self.bottom), g.h1()))
            + double_integral(g, &src, simpson_samples)
    }
}

/// Iterated one-dimensional rule over a nodal array: rows first, then `z2`.
fn double_integral(g: &Grid, v: &[f64], rule: fn(&[f64], f64) -> f64) -> f64 {
    let rows: Vec<f64> = (0..=g.n2)
        .map(|j| rule(&v[g.idx(0, j)..=g.idx(g.n1, j)], g.h1()))
        .collect();
    rule(&rows, g.h2())
}

fn trapezoid(v: &[f64], h: f64) -> f64 {
    cumulative_trapezoid(v, h).last().copied().unwrap_or(0.0)
}

fn defect_with(p: &EllipticProblem, rule: fn(&[f64], f64) -> f64) -> f64 {
    let g = &p.grid;
    p.div_coeff * (rule(&p.right, g.h2()) - rule(&p.left, g.h2()))
        + p.mass_flux * (rule(&p.top, g.h1()) - rule(&p.bottom, g.h1()))
        - double_integral(g, &p.div_source, rule)
}

/// Net outflow of the first equation minus the integrated divergence
/// source, by Simpson quadrature. Zero iff the continuous problem is solvable.
pub fn compatibility_defect(problem: &EllipticProblem) -> f64 {
    defect_with(problem, simpson_samples)
}

/// Potential samples on the elliptic grid, gauge-fixed to zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub grid: Grid,
    pub phi: Vec<f64>,
}

impl PotentialField {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.idx(i, j)]
    }
}

/// Everything one downstream solve produces.
#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub potential: PotentialField,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// Simpson compatibility defect of the input data.
    pub defect: f64,
    /// Scaled residual of the discrete potential system.
    pub residual: f64,
}

/// Row integral `(1 / div_coeff) int_{z1_min}^{z1} f1` removing the divergence source.
fn particular(p: &EllipticProblem) -> Vec<f64> {
    let g = &p.grid;
    let mut out = vec![0.0; g.len()];
    for j in 0..=g.n2 {
        let row = &p.div_source[g.idx(0, j)..=g.idx(g.n1, j)];
        for (i, v) in cumulative_trapezoid(row, g.h1()).into_iter().enumerate() {
            out[g.idx(i, j)] = v / p.div_coeff;
        }
    }
    out
}

/// Potential boundary values from the loop integral of the edge data,
/// after moving the trapezoid loop mismatch onto the exit edge. Returns the
/// values on the edges (interior entries zero), the adjusted exit data of
/// the homogeneous part, and the mismatch.
fn boundary_potential(p: &EllipticProblem, part: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let g = &p.grid;
    let (h1, h2) = (g.h1(), g.h2());
    let m = p.mass_flux;
    let k = p.div_coeff;
    let mut right: Vec<f64> = (0..=g.n2)
        .map(|j| p.right[j] - part[g.idx(g.n1, j)])
        .collect();
    let left_phi: Vec<f64> = cumulative_trapezoid(&p.left, h2)
        .into_iter()
        .map(|v| k * v)
        .collect();
    let bottom_phi: Vec<f64> = cumulative_trapezoid(&p.bottom, h1)
        .into_iter()
        .map(|v| -m * v)
        .collect();
    let top_phi: Vec<f64> = cumulative_trapezoid(&p.top, h1)
        .into_iter()
        .map(|v| left_phi[g.n2] - m * v)
        .collect();
    let right_end = bottom_phi[g.n1] + k * trapezoid(&right, h2);
    let mismatch = right_end - top_phi[g.n1];
    let shift = mismatch / k;
    for v in right.iter_mut() {
        *v -= shift;
    }
    let right_phi: Vec<f64> = cumulative_trapezoid(&right, h2)
        .into_iter()
        .map(|v| bottom_phi[g.n1] + k * v)
        .collect();
    let mut phi = vec![0.0; g.len()];
    for i in 0..=g.n1 {
        phi[g.idx(i, 0)] = bottom_phi[i];
        phi[g.idx(i, g.n2)] = top_phi[i];
    }
    for j in 0..=g.n2 {
        phi[g.idx(0, j)] = left_phi[j];
        phi[g.idx(g.n1, j)] = right_phi[j];
    }
    (phi, right, mismatch)
}

/// Solves `-a1 D11 phi - a2 D22 phi = rhs` on interior nodes with the edge
/// values already stored in `phi`, by a sine transform in `z2` and
/// tridiagonal solves in `z1`.
fn dirichlet_solve(g: &Grid, a1: f64, a2: f64, rhs: &[f64], phi: &mut [f64]) {
    let (n1, n2) = (g.n1, g.n2);
    let (h1, h2) = (g.h1(), g.h2());
    let (c1, c2) = (a1 / (h1 * h1), a2 / (h2 * h2));
    let ni = n1 - 1;
    let nj = n2 - 1;
    // Right-hand side with the boundary stencil entries folded in.
    let mut b = vec![0.0; ni * nj];
    for j in 1..n2 {
        for i in 1..n1 {
            let mut v = rhs[g.idx(i, j)];
            if i == 1 {
                v += c1 * phi[g.idx(0, j)];
            }
            if i == n1 - 1 {
                v += c1 * phi[g.idx(n1, j)];
            }
            if j == 1 {
                v += c2 * phi[g.idx(i, 0)];
            }
            if j == n2 - 1 {
                v += c2 * phi[g.idx(i, n2)];
            }
            b[(j - 1) * ni + (i - 1)] = v;
        }
    }
    let sines: Vec<f64> = (0..nj * nj)
        .map(|t| {
            let (j, k) = (t / nj + 1, t % nj + 1);
            (std::f64::consts::PI * (j * k) as f64 / n2 as f64).sin()
        })
        .collect();
    let transform = |src: &[f64], dst: &mut [f64], scale: f64| {
        for k in 0..nj {
            for i in 0..ni {
                let mut acc = 0.0;
                for j in 0..nj {
                    acc += sines[j * nj + k] * src[j * ni + i];
                }
                dst[k * ni + i] = scale * acc;
            }
        }
    };
    let mut bh = vec![0.0; ni * nj];
    transform(&b, &mut bh, 1.0);
    let mut sol = vec![0.0; ni * nj];
    let mut cp = vec![0.0; ni];
    let mut dp = vec![0.0; ni];
    for k in 0..nj {
        let lam = c2 * (2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / n2 as f64).cos());
        let diag = 2.0 * c1 + lam;
        let row = &bh[k * ni..(k + 1) * ni];
        // Thomas algorithm with off-diagonals -c1.
        cp[0] = -c1 / diag;
        dp[0] = row[0] / diag;
        for i in 1..ni {
            let den = diag + c1 * cp[i - 1];
            cp[i] = -c1 / den;
            dp[i] = (row[i] + c1 * dp[i - 1]) / den;
        }
        let out = &mut sol[k * ni..(k + 1) * ni];
        out[ni - 1] = dp[ni - 1];
        for i in (0..ni - 1).rev() {
            out[i] = dp[i] - cp[i] * out[i + 1];
        }
    }
    let mut x = vec![0.0; ni * nj];
    transform(&sol, &mut x, 2.0 / n2 as f64);
    for j in 1..n2 {
        for i in 1..n1 {
            phi[g.idx(i, j)] = x[(j - 1) * ni + (i - 1)];
        }
    }
}

/// Max nodal residual of the five-point system, relative to the data size.
fn scaled_residual(g: &Grid, a1: f64, a2: f64, rhs: &[f64], phi: &[f64]) -> f64 {
    let (c1, c2) = (a1 / (g.h1() * g.h1()), a2 / (g.h2() * g.h2()));
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 1..g.n2 {
        for i in 1..g.n1 {
            let at = |a: usize, b: usize| phi[g.idx(a, b)];
            let lap = -c1 * (at(i - 1, j) - 2.0 * at(i, j) + at(i + 1, j))
                - c2 * (at(i, j - 1) - 2.0 * at(i, j) + at(i, j + 1));
            res = res.max((lap - rhs[g.idx(i, j)]).abs());
            scale = scale.max(rhs[g.idx(i, j)].abs()).max((c1 + c2) * at(i, j).abs());
        }
    }
    if scale == 0.0 {
        res
    } else {
        res / scale
    }
}

/// Potential for the problem's data; errors if the defect exceeds the
/// relative threshold or the discrete residual check fails.
pub fn solve_potential(problem: &EllipticProblem) -> Result<PotentialField> {
    Ok(solve_velocity(problem)?.potential)
}

/// Derivative along `z2` (`axis = 2`) or `z1` (`axis = 1`) at every node:
/// central inside, second-order one-sided on the edges.
pub fn nodal_derivative(g: &Grid, v: &[f64], axis: u8) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    let (n, h) = if axis == 1 { (g.n1, g.h1()) } else { (g.n2, g.h2()) };
    let at = |i: usize, j: usize, t: usize| {
        if axis == 1 {
            v[g.idx(t, j)]
        } else {
            v[g.idx(i, t)]
        }
    };
    for j in 0..=g.n2 {
        for i in 0..=g.n1 {
            let t = if axis == 1 { i } else { j };
            let d = if t == 0 {
                (-3.0 * at(i, j, 0) + 4.0 * at(i, j, 1) - at(i, j, 2)) / (2.0 * h)
            } else if t == n {
                (3.0 * at(i, j, n) - 4.0 * at(i, j, n - 1) + at(i, j, n - 2)) / (2.0 * h)
            } else {
                (at(i, j, t + 1) - at(i, j, t - 1)) / (2.0 * h)
            };
            out[g.idx(i, j)] = d;
        }
    }
    out
}

/// Velocities `(d2 phi / div_coeff, -d1 phi / m)` from a potential.
pub fn recover_velocity(phi: &PotentialField, bg: &BackgroundShock) -> (Vec<f64>, Vec<f64>) {
    let g = &phi.grid;
    let k = 1.0 - bg.plus.mach2;
    let m = bg.mass_flux;
    let d1 = nodal_derivative(g, &phi.phi, 1);
    let d2 = nodal_derivative(g, &phi.phi, 2);
    (
        d2.into_iter().map(|v| v / k).collect(),
        d1.into_iter().map(|v| -v / m).collect(),
    )
}

/// Full downstream velocity solve.
pub fn solve_velocity(problem: &EllipticProblem) -> Result<EllipticSolution> {
    problem.check_shapes()?;
    let p = problem;
    let g = &p.grid;
    let defect = compatibility_defect(p);
    let threshold = p.defect_rel_tol * p.flux_scale() + DEFECT_ABS_TOL;
    if defect.abs() > threshold {
        return Err(Error::Solvability { defect, threshold });
    }
    let part = particular(p);
    let dpart = nodal_derivative(g, &part, 2);
    let rhs: Vec<f64> = p
        .curl_source
        .iter()
        .zip(&dpart)
        .map(|(f, d)| f + p.cross * d)
        .collect();
    let (mut phi, _, _) = boundary_potential(p, &part);
    dirichlet_solve(g, p.a1, p.a2, &rhs, &mut phi);
    let residual = scaled_residual(g, p.a1, p.a2, &rhs, &phi);
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::Numerical(format!(
            "potential solve residual {residual:e} above {RESIDUAL_TOL:e}"
        )));
    }
    let mean = double_integral(g, &phi, simpson_samples) / (g.y1_max - g.y1_min);
    for v in phi.iter_mut() {
        *v -= mean;
    }
    let d1 = nodal_derivative(g, &phi, 1);
    let d2 = nodal_derivative(g, &phi, 2);
    let u1: Vec<f64> = d2
        .iter()
        .zip(&part)
        .map(|(d, q)| d / p.div_coeff + q)
        .collect();
    let u2: Vec<f64> = d1.iter().map(|d| -d / p.mass_flux).collect();
    Ok(EllipticSolution {
        potential: PotentialField {
            grid: *g,
            phi,
        },
        u1,
        u2,
        defect,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{solve_background, GasModel};
    use std::f64::consts::PI;

    fn bg() -> BackgroundShock {
        solve_background(1.0, 2.0, 0.3, GasModel::new(1.4).unwrap()).unwrap()
    }

    const ETA: f64 = 0.8166166274767208;

    fn grid(n1: usize, n2: usize) -> Grid {
        Grid::new(n1, n2, ETA, 1.0).unwrap()
    }

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Problem from an exact velocity pair `(v1, v2)` and its derivatives.
    struct Exact {
        v1: fn(f64, f64) -> f64,
        v2: fn(f64, f64) -> f64,
        d1v1: fn(f64, f64) -> f64,
        d2v1: fn(f64, f64) -> f64,
        d1v2: fn(f64, f64) -> f64,
        d2v2: fn(f64, f64) -> f64,
    }

    fn manufactured(ex: &Exact, g: Grid) -> EllipticProblem {
        let b = bg();
        let mut p = EllipticProblem::new(&b, g);
        let k = p.div_coeff;
        let m = p.mass_flux;
        let t = 1.0 - b.plus.rho * b.kappa * b.kappa;
        for j in 0..=g.n2 {
            for i in 0..=g.n1 {
                let (x, y) = (g.y1(i), g.y2(j));
                p.div_source[g.idx(i, j)] = k * (ex.d1v1)(x, y) + m * (ex.d2v2)(x, y);
                p.curl_source[g.idx(i, j)] = t * (ex.d1v2)(x, y) - p.cross * (ex.d2v1)(x, y);
            }
        }
        for j in 0..=g.n2 {
            p.left[j] = (ex.v1)(g.y1(0), g.y2(j));
            p.right[j] = (ex.v1)(g.y1(g.n1), g.y2(j));
        }
        for i in 0..=g.n1 {
            p.bottom[i] = (ex.v2)(g.y1(i), 0.0);
            p.top[i] = (ex.v2)(g.y1(i), 1.0);
        }
        p
    }

    fn velocity_errors(ex: &Exact, n1: usize, n2: usize) -> (f64, f64) {
        let g = grid(n1, n2);
        let sol = solve_velocity(&manufactured(ex, g)).unwrap();
        let mut e1: f64 = 0.0;
        let mut e2: f64 = 0.0;
        for j in 0..=n2 {
            for i in 0..=n1 {
                let (x, y) = (g.y1(i), g.y2(j));
                e1 = e1.max((sol.u1[g.idx(i, j)] - (ex.v1)(x, y)).abs());
                e2 = e2.max((sol.u2[g.idx(i, j)] - (ex.v2)(x, y)).abs());
            }
        }
        (e1, e2)
    }

    fn potential_mms() -> Exact {
        // Velocities of phi* = cos(pi z2) cos(pi (z1 - eta) / (1 - eta)).
        Exact {
            v1: |x, y| {
                let k = 1.0 - bg().plus.mach2;
                -PI * (PI * y).sin() * (PI * (x - ETA) / (1.0 - ETA)).cos() / k
            },
            v2: |x, y| {
                let w = PI / (1.0 - ETA);
                w * (PI * y).cos() * (w * (x - ETA)).sin()
            },
            d1v1: |x, y| {
                let k = 1.0 - bg().plus.mach2;
                let w = PI / (1.0 - ETA);
                PI * w * (PI * y).sin() * (w * (x - ETA)).sin() / k
            },
            d2v1: |x, y| {
                let k = 1.0 - bg().plus.mach2;
                -PI * PI * (PI * y).cos() * (PI * (x - ETA) / (1.0 - ETA)).cos() / k
            },
            d1v2: |x, y| {
                let w = PI / (1.0 - ETA);
                w * w * (PI * y).cos() * (w * (x - ETA)).cos()
            },
            d2v2: |x, y| {
                let w = PI / (1.0 - ETA);
                -PI * w * (PI * y).sin() * (w * (x - ETA)).sin()
            },
        }
    }

    #[test]
    fn zero_data_gives_zero_potential() {
        let g = grid(16, 16);
        let sol = solve_velocity(&EllipticProblem::new(&bg(), g)).unwrap();
        assert!(sol.potential.phi.iter().all(|&v| v == 0.0));
        assert_eq!(compatibility_defect(&EllipticProblem::new(&bg(), g)), 0.0);
    }

    #[test]
    fn defect_examples() {
        let b = bg();
        let g = grid(16, 16);
        let mut p = EllipticProblem::new(&b, g);
        // Unit potential flux through the exit edge.
        p.right = vec![1.0 / p.div_coeff; 17];
        assert!((compatibility_defect(&p) - 1.0).abs() < 1e-14);
        let mut q = EllipticProblem::new(&b, g);
        q.div_source = vec![2.5; g.len()];
        let area = 1.0 - ETA;
        assert!((compatibility_defect(&q).abs() - 2.5 * area).abs() < 1e-13);
        assert!(matches!(solve_velocity(&q), Err(Error::Solvability { .. })));
    }

    #[test]
    fn potential_mms_is_second_order() {
        let ex = potential_mms();
        let errs: Vec<(f64, f64)> = [(16, 16), (32, 32), (64, 64), (128, 128)]
            .iter()
            .map(|&(a, b)| velocity_errors(&ex, a, b))
            .collect();
        for w in errs.windows(2) {
            let o1 = (w[0].0 / w[1].0).log2();
            let o2 = (w[0].1 / w[1].1).log2();
            assert!((o1 - 2.0).abs() < 0.2 && (o2 - 2.0).abs() < 0.2, "{errs:?}");
        }
    }

    #[test]
    fn divergence_source_path_is_second_order() {
        let ex = Exact {
            v1: |x, y| (x * y).exp() + x,
            v2: |x, y| y * (1.0 - y) * x * x,
            d1v1: |x, y| y * (x * y).exp() + 1.0,
            d2v1: |x, y| x * (x * y).exp(),
            d1v2: |x, y| 2.0 * x * y * (1.0 - y),
            d2v2: |x, y| (1.0 - 2.0 * y) * x * x,
        };
        let e: Vec<(f64, f64)> = [(16, 16), (32, 32), (64, 64)]
            .iter()
            .map(|&(a, b)| velocity_errors(&ex, a, b))
            .collect();
        for w in e.windows(2) {
            assert!(((w[0].0 / w[1].0).log2() - 2.0).abs() < 0.3, "{e:?}");
            assert!(((w[0].1 / w[1].1).log2() - 2.0).abs() < 0.3, "{e:?}");
        }
    }

    #[test]
    fn loop_mismatch_is_the_trapezoid_defect() {
        let ex = Exact {
            v1: |x, y| (x * y).exp(),
            v2: |x, y| x * y,
            d1v1: |_, _| 0.0,
            d2v1: |_, _| 0.0,
            d1v2: |_, _| 0.0,
            d2v2: |x, _| x,
        };
        let g = grid(20, 12);
        let mut p = manufactured(&ex, g);
        p.div_source.iter_mut().enumerate().for_each(|(k, v)| *v = 0.3 * k as f64 / g.len() as f64);
        let part = particular(&p);
        let (_, _, mismatch) = boundary_potential(&p, &part);
        assert!((mismatch - defect_with(&p, trapezoid)).abs() < 1e-13);
    }

    #[test]
    fn gauge_does_not_move_velocities() {
        let b = bg();
        let g = grid(24, 24);
        let sol = solve_velocity(&manufactured(&potential_mms(), g)).unwrap();
        let (u1, u2) = recover_velocity(&sol.potential, &b);
        let shifted = PotentialField {
            grid: g,
            phi: sol.potential.phi.iter().map(|v| v + 0.75).collect(),
        };
        let (w1, w2) = recover_velocity(&shifted, &b);
        assert!(sup_diff(&u1, &w1) < 1e-12 && sup_diff(&u2, &w2) < 1e-12);
        let uniform = PotentialField {
            grid: g,
            phi: (0..g.len()).map(|k| g.y2(k / (g.n1 + 1))).collect(),
        };
        let (v1, v2) = recover_velocity(&uniform, &b);
        let k = 1.0 - b.plus.mach2;
        assert!(v1.iter().all(|v| (v - 1.0 / k).abs() < 1e-12));
        assert!(v2.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn mirror_symmetric_data_give_symmetric_solution() {
        let g = grid(20, 20);
        let mut p = EllipticProblem::new(&bg(), g);
        for j in 0..=20 {
            let y = g.y2(j);
            p.left[j] = (PI * y).sin();
            p.right[j] = 0.5 * (PI * y).sin() + 0.1;
        }
        for i in 0..=20 {
            p.top[i] = 0.2 * g.y1(i);
            p.bottom[i] = -0.2 * g.y1(i);
        }
        p.defect_rel_tol = f64::INFINITY;
        let sol = solve_velocity(&p).unwrap();
        for j in 0..=20 {
            for i in 0..=20 {
                let a = sol.u1[g.idx(i, j)];
                let b = sol.u1[g.idx(i, 20 - j)];
                assert!((a - b).abs() < 1e-10);
                let c = sol.u2[g.idx(i, j)] + sol.u2[g.idx(i, 20 - j)];
                assert!(c.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn recovered_pair_satisfies_first_order_system() {
        let ex = potential_mms();
        let b = bg();
        let t = 1.0 - b.plus.rho * b.kappa * b.kappa;
        let res = |n: usize| {
            let g = grid(n, n);
            let p = manufactured(&ex, g);
            let sol = solve_velocity(&p).unwrap();
            let d1u1 = nodal_derivative(&g, &sol.u1, 1);
            let d2u1 = nodal_derivative(&g, &sol.u1, 2);
            let d1u2 = nodal_derivative(&g, &sol.u2, 1);
            let d2u2 = nodal_derivative(&g, &sol.u2, 2);
            let mut div: f64 = 0.0;
            let mut curl: f64 = 0.0;
            for k in 0..g.len() {
                div = div.max((p.div_coeff * d1u1[k] + p.mass_flux * d2u2[k] - p.div_source[k]).abs());
                curl = curl.max((t * d1u2[k] - p.cross * d2u1[k] - p.curl_source[k]).abs());
            }
            (div, curl)
        };
        let (c, f) = (res(32), res(64));
        // Differences of one potential commute, so the first equation holds to round-off.
        assert!(c.0 < 1e-9 && f.0 < 1e-9);
        assert!(((c.1 / f.1).log2() - 2.0).abs() < 0.3, "{c:?} {f:?}");
    }
}
