//! Shock position and shape: the admissibility root, interface and exit
//! data of the linear problem, slope recovery from the tangential jump
//! condition, the solvability functional and its root, and curve assembly.

use crate::background::{BackgroundShock, FlowState};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::profiles::{simpson_samples, ExitPressureProfile, Expr, WallProfile};

/// Samples used to scan the admissibility function for a bracket.
pub const SCAN_SAMPLES: usize = 256;
/// Bisection stops at this bracket width before the secant polish.
pub const BISECTION_WIDTH: f64 = 1e-6;
/// Required accuracy of the admissibility root.
pub const ROOT_TOL: f64 = 1e-10;
/// Smallest wall slope accepted at the shock position.
pub const FLAT_SLOPE: f64 = 1e-8;
/// Spread of `F - target` below which every position is a root.
pub const DEGENERATE_SPREAD: f64 = 1e-12;

/// `F(eta) = (-K f(eta) + u+ f(L1)) / K0` for the unscaled wall shape.
pub fn admissibility_f(eta: f64, bg: &BackgroundShock, wall: &WallProfile) -> Result<f64> {
    Ok(bg.admissibility(wall.f(eta)?, wall.f(wall.l1)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleRoot {
    pub eta: f64,
    /// Set when `F` equals the target everywhere; `eta` is then the fallback.
    pub degenerate: bool,
}

/// Root of `fun(eta) = target` in `(l0, l1)`: scan for the first sign
/// change, bisect to [`BISECTION_WIDTH`], then polish by secant.
fn admissible_root(
    fun: &dyn Fn(f64) -> Result<f64>,
    slope: &dyn Fn(f64) -> Result<f64>,
    target: f64,
    l0: f64,
    l1: f64,
    fallback: f64,
) -> Result<AdmissibleRoot> {
    let xs: Vec<f64> = (0..=SCAN_SAMPLES)
        .map(|k| l0 + (l1 - l0) * k as f64 / SCAN_SAMPLES as f64)
        .collect();
    let vals = xs
        .iter()
        .map(|&x| fun(x).map(|v| v - target))
        .collect::<Result<Vec<_>>>()?;
    let spread = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if spread < DEGENERATE_SPREAD {
        return Ok(AdmissibleRoot {
            eta: fallback,
            degenerate: true,
        });
    }
    let bracket = (1..=SCAN_SAMPLES)
        .find(|&k| vals[k - 1] * vals[k] <= 0.0)
        .map(|k| match (vals[k - 1] == 0.0, vals[k] == 0.0) {
            (true, _) => (xs[k - 1], xs[k - 1]),
            (_, true) => (xs[k], xs[k]),
            _ => (xs[k - 1], xs[k]),
        });
    let Some((mut a, mut b)) = bracket else {
        let lo = vals.iter().fold(f64::INFINITY, |m, v| m.min(v + target));
        let hi = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v + target));
        return Err(Error::NoBracket { target, lo, hi });
    };
    let mut fa = fun(a)? - target;
    while b - a > BISECTION_WIDTH {
        let mid = 0.5 * (a + b);
        let fm = fun(mid)? - target;
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let mut x = if a == b { a } else { 0.5 * (a + b) };
    let (mut x0, mut f0) = (a, fa);
    let mut fx = fun(x)? - target;
    for _ in 0..60 {
        if fx.abs() <= ROOT_TOL * 1e-3 || fx == f0 {
            break;
        }
        let next = x - fx * (x - x0) / (fx - f0);
        if !(next > a - BISECTION_WIDTH && next < b + BISECTION_WIDTH) {
            break;
        }
        x0 = x;
        f0 = fx;
        x = next;
        fx = fun(x)? - target;
        if (x - x0).abs() < 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    if !(x > l0 && x < l1) {
        return Err(Error::Geometry(format!(
            "admissible position {x} is not inside ({l0}, {l1})"
        )));
    }
    let s = slope(x)?;
    if s.abs() <= FLAT_SLOPE {
        return Err(Error::FlatWallAtShock { eta: x, slope: s });
    }
    Ok(AdmissibleRoot {
        eta: x,
        degenerate: false,
    })
}

/// Position solving `F(eta) = int_0^1 P_ex`, with `n` Simpson intervals for
/// the exit integral.
pub fn find_initial_position(
    bg: &BackgroundShock,
    wall: &WallProfile,
    exit: &ExitPressureProfile,
    n: usize,
) -> Result<AdmissibleRoot> {
    let target = exit.integral(n)?;
    let fun = |eta: f64| admissibility_f(eta, bg, wall);
    let slope = |eta: f64| wall.fp(eta).map_err(Error::from);
    admissible_root(
        &fun,
        &slope,
        target,
        wall.l0,
        wall.l1,
        0.5 * (wall.l0 + wall.l1),
    )
}

/// Same root for a duct with wall `1 + sigma f(x1, x2)` in the third
/// direction and exit data `P_ex(x2, x3)`; both integrated over the unit
/// cross-section with `n` Simpson intervals. Only the position is computed.
pub fn find_initial_position_3d(
    bg: &BackgroundShock,
    f: &Expr,
    p_ex: &Expr,
    l0: f64,
    l1: f64,
    n: usize,
) -> Result<AdmissibleRoot> {
    let h = 1.0 / n as f64;
    let mean = |e: &Expr, first: f64| -> Result<f64> {
        let v = (0..=n)
            .map(|k| e.eval_at(&[first, k as f64 * h]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(simpson_samples(&v, h))
    };
    let rows = (0..=n)
        .map(|k| {
            let v = (0..=n)
                .map(|l| p_ex.eval_at(&[k as f64 * h, l as f64 * h]))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(simpson_samples(&v, h))
        })
        .collect::<Result<Vec<_>>>()?;
    let target = simpson_samples(&rows, h);
    let f_l1 = mean(f, l1)?;
    let fun = |eta: f64| Ok(bg.admissibility(mean(f, eta)?, f_l1));
    let fx = f.derivative(0);
    let slope = |eta: f64| mean(&fx, eta);
    admissible_root(&fun, &slope, target, l0, l1, 0.5 * (l0 + l1))
}

/// Interface, exit and wall data for the downstream problem. Edge data are
/// indexed by `z2`, wall data by `z1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub g_s: Vec<f64>,
    pub g1: Vec<f64>,
    pub g3: Vec<f64>,
    pub g4_top: Vec<f64>,
    pub g4_bottom: Vec<f64>,
    pub g0: Vec<f64>,
    /// Second-order remainder of the exit total pressure.
    pub r_p: Vec<f64>,
}

fn dot(a: &[f64; 5], b: [f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear data from the upstream fluctuation trace at `eta*`.
pub fn linear_boundary_data(
    bg: &BackgroundShock,
    upstream: &[FlowState],
    exit: &ExitPressureProfile,
    wall: &WallProfile,
    grid: &Grid,
) -> Result<BoundaryData> {
    let m = bg.mass_flux;
    let mc = m * bg.plus.c_factor;
    let sigma = wall.sigma;
    if upstream.len() != grid.n2 + 1 {
        return Err(Error::Geometry("upstream trace does not match the grid".into()));
    }
    let mut data = BoundaryData {
        g_s: Vec::new(),
        g1: Vec::new(),
        g3: Vec::new(),
        g4_top: Vec::new(),
        g4_bottom: vec![0.0; grid.n1 + 1],
        g0: Vec::new(),
        r_p: vec![0.0; grid.n2 + 1],
    };
    for (j, tr) in upstream.iter().enumerate() {
        data.g_s.push(bg.b_s_s * tr.u1);
        data.g1.push(bg.b_u_s * tr.u1);
        data.g3.push(bg.b_u_1 * tr.u1 - sigma * exit.eval(grid.y2(j))? / mc);
        data.g0.push(dot(&bg.minus.beta0, tr.as_array()));
    }
    for i in 0..=grid.n1 {
        data.g4_top.push(sigma * bg.plus.u * wall.fp(grid.y1(i))?);
    }
    Ok(data)
}

/// `eta' = (beta0+ . U+ + g0) / [P]` along the interface. The slope enters
/// the tangential jump functional through the total pressure jump.
pub fn slope_from_g0(plus: &[FlowState], g0: &[f64], bg: &BackgroundShock) -> Vec<f64> {
    plus.iter()
        .zip(g0)
        .map(|(u, g)| (dot(&bg.plus.beta0, u.as_array()) + g) / bg.total_pressure_jump)
        .collect()
}

/// Solvability functional: wall inflow minus net axial flux minus the
/// integrated divergence source, each by Simpson quadrature.
pub fn solvability_i(data: &BoundaryData, f1: &[f64], bg: &BackgroundShock, grid: &Grid) -> f64 {
    let m = bg.mass_flux;
    let k = 1.0 - bg.plus.mach2;
    let diff: Vec<f64> = data.g1.iter().zip(&data.g3).map(|(a, b)| a - b).collect();
    let rows: Vec<f64> = (0..=grid.n2)
        .map(|j| simpson_samples(&f1[grid.idx(0, j)..=grid.idx(grid.n1, j)], grid.h1()))
        .collect();
    simpson_samples(&data.g4_top, grid.h1())
        - k / m * simpson_samples(&diff, grid.h2())
        - simpson_samples(&rows, grid.h2()) / m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointRoot {
    pub eta_ddot_star: f64,
    /// `I` at the returned value.
    pub residual: f64,
    pub evaluations: usize,
    /// Set for zero amplitude, where `I` vanishes identically.
    pub degenerate: bool,
}

/// Root of the solvability functional by a safeguarded secant from zero.
/// The root must stay within a quarter of the nozzle length.
pub fn find_eta_ddot_star(
    eval: &mut dyn FnMut(f64) -> Result<f64>,
    sigma: f64,
    l0: f64,
    l1: f64,
) -> Result<EndpointRoot> {
    if sigma == 0.0 {
        return Ok(EndpointRoot {
            eta_ddot_star: 0.0,
            residual: 0.0,
            evaluations: 0,
            degenerate: true,
        });
    }
    let bound = 0.25 * (l1 - l0);
    let tol = 1e-11 * sigma.abs();
    let mut x0 = 0.0;
    let mut f0 = eval(x0)?;
    let mut evals = 1;
    if f0.abs() <= tol {
        return Ok(EndpointRoot {
            eta_ddot_star: 0.0,
            residual: f0,
            evaluations: evals,
            degenerate: false,
        });
    }
    let mut x1 = 1e-3 * (l1 - l0) * sigma.abs().min(1.0);
    let mut f1 = eval(x1)?;
    evals += 1;
    for _ in 0..60 {
        if f1.abs() <= tol {
            break;
        }
        let df = f1 - f0;
        if df == 0.0 || !df.is_finite() {
            return Err(Error::EndpointRoot(format!(
                "solvability functional is flat near {x1:e}"
            )));
        }
        let next = x1 - f1 * (x1 - x0) / df;
        if !(next.abs() <= bound) {
            return Err(Error::EndpointRoot(format!(
                "secant left [-{bound}, {bound}] (step to {next:e})"
            )));
        }
        x0 = x1;
        f0 = f1;
        x1 = next;
        f1 = eval(x1)?;
        evals += 1;
        if (x1 - x0).abs() <= 1e-15 * (l1 - l0) {
            break;
        }
    }
    if !(f1.abs() <= 1e3 * tol) {
        return Err(Error::EndpointRoot(format!(
            "secant stalled with residual {f1:e}"
        )));
    }
    Ok(EndpointRoot {
        eta_ddot_star: x1,
        residual: f1,
        evaluations: evals,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockFront {
    pub eta_bar_star: f64,
    pub eta_ddot_star: f64,
    /// Slope samples by `z2`.
    pub slope: Vec<f64>,
    /// Position samples by `z2`.
    pub curve: Vec<f64>,
}

impl ShockFront {
    /// Flat front at `eta` with `n2 + 1` samples.
    pub fn flat(eta: f64, n2: usize) -> Self {
        Self {
            eta_bar_star: eta,
            eta_ddot_star: 0.0,
            slope: vec![0.0; n2 + 1],
            curve: vec![eta; n2 + 1],
        }
    }
}

/// `eta(z2) = eta* + eta_ddot* - int_{z2}^1 slope`, trapezoid from the top.
pub fn assemble_curve(
    eta_bar_star: f64,
    eta_ddot_star: f64,
    slope: &[f64],
    l0: f64,
    l1: f64,
) -> Result<ShockFront> {
    let n = slope.len() - 1;
    let h = 1.0 / n as f64;
    let end = eta_bar_star + eta_ddot_star;
    let mut curve = vec![end; n + 1];
    let mut tail = 0.0;
    for j in (0..n).rev() {
        tail += 0.5 * h * (slope[j] + slope[j + 1]);
        curve[j] = end - tail;
    }
    if let Some(bad) = curve.iter().find(|&&c| !(c > l0 && c < l1)) {
        return Err(Error::Geometry(format!(
            "shock curve reaches {bad}, outside ({l0}, {l1})"
        )));
    }
    Ok(ShockFront {
        eta_bar_star,
        eta_ddot_star,
        slope: slope.to_vec(),
        curve,
    })
}
