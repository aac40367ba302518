//! Fixed-point iteration for the downstream fluctuation and the shock shape,
//! carried out in coordinates `(z1, z2)` where the shock is the line
//! `z1 = eta*` and the exit stays at `z1 = L1`.

use crate::background::{
    jump_g, solve2, total_pressure_expansion, BackgroundShock, FlowState, Local, Side,
};
use crate::elliptic::{nodal_derivative, solve_velocity, EllipticProblem};
use crate::error::{Error, Result};
use crate::grid::{sample_on_curve, Chart, Field, Grid, S, U1, U2};
use crate::profiles::{cumulative_trapezoid, ExitPressureProfile, WallProfile};
use crate::shockfront::{
    assemble_curve, find_eta_ddot_star, linear_boundary_data, slope_from_g0, solvability_i,
    BoundaryData, ShockFront,
};

/// Relative defect accepted for the linear problem, whose compatibility
/// holds only up to the discretisation error of the upstream march.
pub const DOTTED_DEFECT_TOL: f64 = 1e-2;
/// Default factor on top of `sigma^{3/2}` for the neighborhood guard.
pub const NEIGHBORHOOD_MARGIN: f64 = 9.0;
/// Consecutive non-contracting steps that count as divergence.
pub const DIVERGENCE_STREAK: usize = 3;

/// Change of variables between `(y1, y2)` and `(z1, z2)` for a shock curve.
/// `z2 = y2`; the map is affine in the first variable on every row.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedMap {
    pub l1: f64,
    pub eta_bar_star: f64,
    pub curve: Vec<f64>,
    pub slope: Vec<f64>,
}

pub fn to_fixed_domain(front: &ShockFront, l0: f64, l1: f64) -> Result<FixedMap> {
    let gap = 1e-6 * (l1 - l0);
    if let Some(e) = front.curve.iter().find(|&&e| !(l1 - e > gap)) {
        return Err(Error::Geometry(format!(
            "shock at {e} is within {gap:e} of the exit"
        )));
    }
    Ok(FixedMap {
        l1,
        eta_bar_star: front.eta_bar_star,
        curve: front.curve.clone(),
        slope: front.slope.clone(),
    })
}

impl FixedMap {
    pub fn z1(&self, y1: f64, j: usize) -> f64 {
        self.stretch(j) * (y1 - self.curve[j]) + self.eta_bar_star
    }

    pub fn y1(&self, z1: f64, j: usize) -> f64 {
        z1 + (self.l1 - z1) / (self.l1 - self.eta_bar_star) * (self.curve[j] - self.eta_bar_star)
    }

    /// `dz1/dy1` on row `j`.
    pub fn stretch(&self, j: usize) -> f64 {
        (self.l1 - self.eta_bar_star) / (self.l1 - self.curve[j])
    }

    /// Coefficient of `d/dz1` in `d/dy2`.
    pub fn shear(&self, z1: f64, j: usize) -> f64 {
        -(self.l1 - z1) / (self.l1 - self.curve[j]) * self.slope[j]
    }
}

/// Downstream fluctuation `(u1, u2, S)` on the fixed grid with the shock
/// slope and endpoint correction it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub fluct: Field,
    pub slope: Vec<f64>,
    pub eta_ddot_star: f64,
}

impl IterationState {
    pub fn zero(grid: Grid) -> Self {
        Self {
            fluct: Field::zeros(grid, Chart::Fixed),
            slope: vec![0.0; grid.n2 + 1],
            eta_ddot_star: 0.0,
        }
    }

    /// Sup norm over the velocity and entropy fluctuation and the slope.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for c in [U1, U2, S] {
            for (a, b) in self.fluct.comps[c].iter().zip(&other.fluct.comps[c]) {
                d = d.max((a - b).abs());
            }
        }
        for (a, b) in self.slope.iter().zip(&other.slope) {
            d = d.max((a - b).abs());
        }
        d
    }

    /// Full downstream state `U+ + fluctuation` at a node.
    pub fn full(&self, bg: &BackgroundShock, i: usize, j: usize) -> FlowState {
        let f = self.fluct.state(i, j);
        FlowState {
            u1: bg.plus.u + f.u1,
            u2: f.u2,
            s: bg.plus.state.s + f.s,
            ..bg.plus.state
        }
    }

    pub fn full_field(&self, bg: &BackgroundShock) -> Field {
        let g = self.fluct.grid;
        let mut out = Field::uniform(g, Chart::Fixed, &bg.plus.state);
        for j in 0..=g.n2 {
            for i in 0..=g.n1 {
                out.set_state(i, j, &self.full(bg, i, j));
            }
        }
        out
    }
}

/// Fourth-order first derivative of samples with spacing `h`, one-sided
/// five-point stencils at the two ends of each side.
pub fn fourth_order_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len() - 1;
    assert!(n >= 4, "need at least five samples");
    let c = 12.0 * h;
    (0..=n)
        .map(|j| match j {
            0 => (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / c,
            1 => (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / c,
            j if j == n - 1 => {
                (3.0 * v[n] + 10.0 * v[n - 1] - 18.0 * v[n - 2] + 6.0 * v[n - 3] - v[n - 4]) / c
            }
            j if j == n => {
                (25.0 * v[n] - 48.0 * v[n - 1] + 36.0 * v[n - 2] - 16.0 * v[n - 3]
                    + 3.0 * v[n - 4])
                    / c
            }
            j => (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) / c,
        })
        .collect()
}

/// Inputs shared by every step: background, profiles, the full upstream
/// state on `[L0, L1] x [0, 1]`, and the fixed downstream grid starting at `eta*`.
#[derive(Debug, Clone, Copy)]
pub struct Setup<'a> {
    pub bg: &'a BackgroundShock,
    pub wall: &'a WallProfile,
    pub exit: &'a ExitPressureProfile,
    pub upstream: &'a Field,
    pub grid: Grid,
}

impl Setup<'_> {
    pub fn eta_bar_star(&self) -> f64 {
        self.grid.y1_min
    }

    fn check(&self) -> Result<()> {
        if self.upstream.grid.n2 != self.grid.n2 {
            return Err(Error::Config(format!(
                "upstream and downstream grids need the same n2 ({} vs {})",
                self.upstream.grid.n2, self.grid.n2
            )));
        }
        if self.grid.y1_max != self.wall.l1 {
            return Err(Error::Geometry("downstream grid must end at L1".into()));
        }
        Ok(())
    }
}

/// Nonlinear sources `(f1, f2)` of the constant-coefficient downstream
/// system at `state`, with `g_s` the entropy datum on the shock.
pub fn nonlinear_sources(
    state: &IterationState,
    g_s: &[f64],
    bg: &BackgroundShock,
    l0: f64,
    l1: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let fl = &state.fluct;
    let g = fl.grid;
    let eb = g.y1_min;
    let front = assemble_curve(eb, state.eta_ddot_star, &state.slope, l0, l1)?;
    let d1u1 = nodal_derivative(&g, &fl.comps[U1], 1);
    let d1u2 = nodal_derivative(&g, &fl.comps[U2], 1);
    let d2u1 = nodal_derivative(&g, &fl.comps[U1], 2);
    let d2u2 = nodal_derivative(&g, &fl.comps[U2], 2);
    let dgs = fourth_order_derivative(g_s, g.h2());
    let m = bg.mass_flux;
    let mbar2 = bg.plus.mach2;
    let rk2bar = bg.plus.rho * bg.kappa * bg.kappa;
    let mcbar = m * bg.plus.c_factor;
    let mut f1 = vec![0.0; g.len()];
    let mut f2 = vec![0.0; g.len()];
    for j in 0..=g.n2 {
        let shift = (front.curve[j] - eb) / (l1 - front.curve[j]);
        let tilt = state.slope[j] / (l1 - front.curve[j]);
        for i in 0..=g.n1 {
            let k = g.idx(i, j);
            let st = state.full(bg, i, j);
            let loc = Local::at(&st, bg.gas).map_err(|e| {
                Error::Numerical(format!("closure failed at node ({i}, {j}): {e}"))
            })?;
            let (m1, m2, rk2, cf) = (loc.m1, loc.m2, loc.rk2, loc.cf);
            let ru1 = loc.th.rho * st.u1;
            let ru2 = loc.th.rho * st.u2;
            let lever = (l1 - g.y1(i)) * tilt;
            let (a, b, c, d) = (d1u1[k], d1u2[k], d2u1[k], d2u2[k]);
            f1[k] = (m1 * m1 - mbar2) * a - (ru1 - m) * d + m1 * m2 * b + ru2 * c
                - shift * ((1.0 - m1 * m1) * a - m1 * m2 * b)
                + lever * (-ru2 * a + ru1 * b);
            f2[k] = (rk2 - rk2bar) * b - (mcbar - ru1 * cf) * c - rk2 * m1 * m2 * a
                - rk2 * m2 * m2 * b
                + ru2 * cf * d
                - shift * (rk2 * m1 * m2 * a + (cf - rk2 * m1 * m1) * b)
                - lever * cf * (ru1 * a + ru2 * b)
                + loc.entropy_coeff(bg.gas) * dgs[j];
        }
    }
    Ok((f1, f2))
}

/// Physical height of the exit streamlines, `int_0^{z2} 1 / (rho u1)(L1, .)`.
pub fn exit_streamline_heights(state: &IterationState, bg: &BackgroundShock) -> Result<Vec<f64>> {
    let g = state.fluct.grid;
    let inv = (0..=g.n2)
        .map(|j| {
            let st = state.full(bg, g.n1, j);
            let th = crate::background::closure(&st, bg.gas)?;
            Ok(1.0 / (th.rho * st.u1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cumulative_trapezoid(&inv, g.h2()))
}

/// Interface, exit and wall data at `state` for a trial endpoint correction,
/// built from the exact jump functionals and total pressure.
pub fn nonlinear_boundary_data(
    state: &IterationState,
    setup: &Setup,
    eta_ddot_star: f64,
) -> Result<(BoundaryData, ShockFront)> {
    let bg = setup.bg;
    let g = setup.grid;
    let (l0, l1) = (setup.wall.l0, setup.wall.l1);
    let eb = setup.eta_bar_star();
    let sigma = setup.wall.sigma;
    let m = bg.mass_flux;
    let mc = m * bg.plus.c_factor;
    let front = assemble_curve(eb, eta_ddot_star, &state.slope, l0, l1)?;
    let minus = sample_on_curve(setup.upstream, &front.curve)?;
    let heights = exit_streamline_heights(state, bg)?;
    let p_s = bg.pressure_entropy_coeff(Side::Plus);
    let n2 = g.n2;
    let mut data = BoundaryData {
        g_s: Vec::with_capacity(n2 + 1),
        g1: Vec::with_capacity(n2 + 1),
        g3: Vec::with_capacity(n2 + 1),
        g4_top: Vec::with_capacity(g.n1 + 1),
        g4_bottom: vec![0.0; g.n1 + 1],
        g0: Vec::with_capacity(n2 + 1),
        r_p: Vec::with_capacity(n2 + 1),
    };
    for (j, um) in minus.iter().enumerate() {
        let fl = state.fluct.state(0, j);
        let plus = state.full(bg, 0, j);
        let parts = jump_g(&plus, um, bg.gas)?;
        let v = [fl.u1, fl.s];
        let bs = &bg.plus.bs;
        let rhs = [
            bs[0][0] * v[0] + bs[0][1] * v[1] - m * parts.g1,
            bs[1][0] * v[0] + bs[1][1] * v[1] - parts.g2,
        ];
        let [g1, gs] = solve2(bs, rhs);
        let slope = state.slope[j];
        let beta = bg.plus.beta0.iter().zip(fl.as_array()).map(|(a, b)| a * b).sum::<f64>();
        data.g_s.push(gs);
        data.g1.push(g1);
        data.g0.push(slope * bg.total_pressure_jump - beta + parts.g0(slope));
        let exit = state.full(bg, g.n1, j);
        let r_p = total_pressure_expansion(&exit, bg, Side::Plus)?.remainder;
        data.r_p.push(r_p);
        data.g3.push((-sigma * setup.exit.eval(heights[j])? + p_s * gs + r_p) / mc);
    }
    let top = g.n2;
    for i in 0..=g.n1 {
        let z1 = g.y1(i);
        let x = z1 + (l1 - z1) / (l1 - eb) * eta_ddot_star;
        let u1 = bg.plus.u + state.fluct.get(U1, i, top);
        data.g4_top.push(sigma * setup.wall.fp(x)? * u1);
    }
    Ok((data, front))
}

/// Solvability functional at `state` for a trial endpoint correction.
pub fn solvability_at(state: &IterationState, setup: &Setup, eta_ddot_star: f64) -> Result<f64> {
    let (data, _) = nonlinear_boundary_data(state, setup, eta_ddot_star)?;
    let trial = IterationState {
        eta_ddot_star,
        ..state.clone()
    };
    let (f1, _) = nonlinear_sources(&trial, &data.g_s, setup.bg, setup.wall.l0, setup.wall.l1)?;
    Ok(solvability_i(&data, &f1, setup.bg, &setup.grid))
}

/// Elliptic problem for boundary data and sources on `grid`.
fn downstream_problem(
    bg: &BackgroundShock,
    grid: Grid,
    data: &BoundaryData,
    f1: Vec<f64>,
    f2: Vec<f64>,
) -> EllipticProblem {
    let mut p = EllipticProblem::new(bg, grid);
    p.div_source = f1;
    p.curl_source = f2;
    p.left = data.g1.clone();
    p.right = data.g3.clone();
    p.top = data.g4_top.clone();
    p.bottom = data.g4_bottom.clone();
    p
}

/// New state from velocities, the entropy datum and the slope source.
fn assemble_state(
    bg: &BackgroundShock,
    grid: Grid,
    u1: &[f64],
    u2: &[f64],
    data: &BoundaryData,
    eta_ddot_star: f64,
) -> IterationState {
    let mut fluct = Field::zeros(grid, Chart::Fixed);
    fluct.comps[U1] = u1.to_vec();
    fluct.comps[U2] = u2.to_vec();
    for j in 0..=grid.n2 {
        for i in 0..=grid.n1 {
            fluct.set(S, i, j, data.g_s[j]);
        }
    }
    let edge: Vec<FlowState> = (0..=grid.n2).map(|j| fluct.state(0, j)).collect();
    let slope = slope_from_g0(&edge, &data.g0, bg);
    IterationState {
        fluct,
        slope,
        eta_ddot_star,
    }
}

/// Linear initial approximation from the linear upstream fluctuation.
#[derive(Debug, Clone)]
pub struct Dotted {
    pub state: IterationState,
    pub data: BoundaryData,
    /// Compatibility defect of the linear data.
    pub defect: f64,
}

pub fn dotted_approximation(
    bg: &BackgroundShock,
    wall: &WallProfile,
    exit: &ExitPressureProfile,
    linear_upstream: &Field,
    grid: Grid,
) -> Result<Dotted> {
    let eb = grid.y1_min;
    let trace = sample_on_curve(linear_upstream, &vec![eb; grid.n2 + 1])?;
    let data = linear_boundary_data(bg, &trace, exit, wall, &grid)?;
    let dgs = fourth_order_derivative(&data.g_s, grid.h2());
    let coeff = Local::at(&bg.plus.state, bg.gas)?.entropy_coeff(bg.gas);
    let mut f2 = vec![0.0; grid.len()];
    for j in 0..=grid.n2 {
        for i in 0..=grid.n1 {
            f2[grid.idx(i, j)] = coeff * dgs[j];
        }
    }
    let mut problem = downstream_problem(bg, grid, &data, vec![0.0; grid.len()], f2);
    problem.defect_rel_tol = DOTTED_DEFECT_TOL;
    let sol = solve_velocity(&problem)?;
    let state = assemble_state(bg, grid, &sol.u1, &sol.u2, &data, 0.0);
    Ok(Dotted {
        state,
        data,
        defect: sol.defect,
    })
}

/// Outcome of one application of the map besides the new state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Solvability functional at the chosen endpoint correction.
    pub solvability: f64,
    pub root_evaluations: usize,
    /// Compatibility defect seen by the elliptic solve.
    pub defect: f64,
}

/// One application of the iteration map: endpoint correction from the
/// solvability root, entropy by row copy, velocities from the elliptic
/// solve, slope from the tangential jump condition.
/// With zero amplitude the background is the solution and the map returns zero.
pub fn apply_t(state: &IterationState, setup: &Setup) -> Result<(IterationState, StepInfo)> {
    setup.check()?;
    if setup.wall.sigma == 0.0 {
        let info = StepInfo {
            solvability: 0.0,
            root_evaluations: 0,
            defect: 0.0,
        };
        return Ok((IterationState::zero(setup.grid), info));
    }
    let mut eval = |x: f64| solvability_at(state, setup, x);
    let root = find_eta_ddot_star(&mut eval, setup.wall.sigma, setup.wall.l0, setup.wall.l1)?;
    let x = root.eta_ddot_star;
    let (data, _) = nonlinear_boundary_data(state, setup, x)?;
    let trial = IterationState {
        eta_ddot_star: x,
        ..state.clone()
    };
    let (f1, f2) = nonlinear_sources(&trial, &data.g_s, setup.bg, setup.wall.l0, setup.wall.l1)?;
    let problem = downstream_problem(setup.bg, setup.grid, &data, f1, f2);
    let sol = solve_velocity(&problem)?;
    let next = assemble_state(setup.bg, setup.grid, &sol.u1, &sol.u2, &data, x);
    Ok((
        next,
        StepInfo {
            solvability: root.residual,
            root_evaluations: root.evaluations,
            defect: sol.defect,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    /// Stopping threshold on the update norm; `None` means `1e-10 sigma`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Under-relaxation factor in `(0, 1]`.
    pub relaxation: f64,
    pub margin: f64,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            tol: None,
            max_iter: 50,
            relaxation: 1.0,
            margin: NEIGHBORHOOD_MARGIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub update_norm: f64,
    /// Ratio of successive update norms, from the second iteration on.
    pub ratio: Option<f64>,
    pub solvability: f64,
    pub eta_ddot_star: f64,
    /// Distance of the iterate to the linear approximation.
    pub neighborhood: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationReport {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
    pub tol: f64,
    pub radius: f64,
}

impl IterationReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios().fold(0.0, f64::max)
    }

    pub fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| r.ratio)
    }

    /// Geometric mean of the recorded ratios after the first, which carries
    /// the start-up transient. Single ratios near round-off are noisy, so
    /// the mean is the estimate of the asymptotic contraction.
    pub fn asymptotic_ratio(&self) -> Option<f64> {
        let ratios: Vec<f64> = self.ratios().collect();
        let tail = if ratios.len() > 1 { &ratios[1..] } else { &ratios[..] };
        if tail.is_empty() || tail.iter().any(|r| *r <= 0.0) {
            return tail.first().copied();
        }
        let log: f64 = tail.iter().map(|r| r.ln()).sum();
        Some((log / tail.len() as f64).exp())
    }
}

/// Picard iteration of the map from the linear approximation until the
/// update norm drops below the tolerance.
pub fn run_fixed_point(
    setup: &Setup,
    dotted: &IterationState,
    opts: &IterationOptions,
) -> Result<(IterationState, IterationReport)> {
    let sigma = setup.wall.sigma.abs();
    let tol = opts.tol.unwrap_or(1e-10 * sigma);
    let radius = sigma.powf(1.5) * (1.0 + opts.margin);
    if !(opts.relaxation > 0.0 && opts.relaxation <= 1.0) {
        return Err(Error::Config(format!(
            "iteration.relaxation must lie in (0, 1], got {}",
            opts.relaxation
        )));
    }
    let mut report = IterationReport {
        tol,
        radius,
        ..Default::default()
    };
    let mut cur = dotted.clone();
    let mut prev_norm: Option<f64> = None;
    let mut streak = 0;
    for k in 1..=opts.max_iter {
        let (mut next, info) = apply_t(&cur, setup).map_err(|e| match e.root() {
            Error::EndpointRoot(_) | Error::Geometry(_) | Error::Solvability { .. } => {
                Error::Divergence(format!("iterate {k} left the admissible set: {e}"))
            }
            _ => e,
        })
        .map_err(|e| e.at("fixed point"))?;
        if opts.relaxation < 1.0 {
            relax(&mut next, &cur, opts.relaxation);
        }
        let norm = next.distance(&cur);
        let ratio = prev_norm.map(|p| if p > 0.0 { norm / p } else { 0.0 });
        let neighborhood = next.distance(dotted);
        report.records.push(IterationRecord {
            update_norm: norm,
            ratio,
            solvability: info.solvability,
            eta_ddot_star: next.eta_ddot_star,
            neighborhood,
        });
        report.iterations = k;
        cur = next;
        if norm <= tol {
            report.converged = true;
            break;
        }
        if neighborhood > radius {
            return Err(Error::Divergence(format!(
                "iterate {k} left the neighborhood: distance {neighborhood:e} > {radius:e}"
            )));
        }
        streak = if ratio.is_some_and(|r| r >= 1.0) { streak + 1 } else { 0 };
        if streak >= DIVERGENCE_STREAK {
            return Err(Error::Divergence(format!(
                "update norm grew for {streak} consecutive iterations (last {norm:e})"
            )));
        }
        prev_norm = Some(norm);
    }
    Ok((cur, report))
}

fn relax(next: &mut IterationState, cur: &IterationState, w: f64) {
    for c in [U1, U2, S] {
        for (a, b) in next.fluct.comps[c].iter_mut().zip(&cur.fluct.comps[c]) {
            *a = b + w * (*a - b);
        }
    }
    for (a, b) in next.slope.iter_mut().zip(&cur.slope) {
        *a = b + w * (*a - b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{solve_background, GasModel};
    use crate::shockfront::find_initial_position;
    use crate::supersonic::{solve_linear_supersonic, solve_nonlinear_supersonic};
    use proptest::prelude::*;

    fn bg() -> BackgroundShock {
        solve_background(1.0, 2.0, 0.3, GasModel::new(1.4).unwrap()).unwrap()
    }

    struct Case {
        bg: BackgroundShock,
        wall: WallProfile,
        exit: ExitPressureProfile,
        upstream: Field,
        dotted: Dotted,
        grid: Grid,
    }

    impl Case {
        fn new(sigma: f64, n1: usize, n2: usize) -> Self {
            let bg = bg();
            let wall = WallProfile::parse(0.0, 1.0, sigma, "x^4").unwrap();
            let exit = ExitPressureProfile::zero();
            let eta = find_initial_position(&bg, &wall, &exit, 64).unwrap().eta;
            let up_grid = Grid::new(2 * n2, n2, 0.0, 1.0).unwrap();
            let upstream = solve_nonlinear_supersonic(&bg, &wall, &up_grid).unwrap();
            let linear = solve_linear_supersonic(&bg, &wall, &up_grid).unwrap();
            let grid = Grid::new(n1, n2, eta, 1.0).unwrap();
            let dotted = dotted_approximation(&bg, &wall, &exit, &linear, grid).unwrap();
            Self {
                bg,
                wall,
                exit,
                upstream,
                dotted,
                grid,
            }
        }

        fn setup(&self) -> Setup<'_> {
            Setup {
                bg: &self.bg,
                wall: &self.wall,
                exit: &self.exit,
                upstream: &self.upstream,
                grid: self.grid,
            }
        }
    }

    fn front(curve: Vec<f64>, eb: f64) -> ShockFront {
        let n = curve.len();
        ShockFront {
            eta_bar_star: eb,
            eta_ddot_star: curve[n - 1] - eb,
            slope: vec![0.0; n],
            curve,
        }
    }

    #[test]
    fn fixed_map_pins_shock_and_exit() {
        let flat = to_fixed_domain(&ShockFront::flat(0.8, 8), 0.0, 1.0).unwrap();
        for z in [0.8, 0.85, 0.93, 1.0] {
            assert_eq!(flat.y1(z, 3), z);
        }
        let curve: Vec<f64> = (0..=8).map(|j| 0.78 + 0.005 * j as f64).collect();
        let map = to_fixed_domain(&front(curve.clone(), 0.8), 0.0, 1.0).unwrap();
        for (j, c) in curve.iter().enumerate() {
            assert_eq!(map.y1(0.8, j), *c);
            assert_eq!(map.y1(1.0, j), 1.0);
        }
        assert!(to_fixed_domain(&front(vec![1.0 - 1e-8; 9], 0.8), 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn fixed_map_round_trip(shift in -0.05f64..0.05, tilt in -0.1f64..0.1, t in 0.0f64..1.0) {
            let curve: Vec<f64> = (0..=8).map(|j| 0.8 + shift + tilt * (j as f64 / 8.0 - 1.0)).collect();
            let map = to_fixed_domain(&front(curve.clone(), 0.8), 0.0, 1.0).unwrap();
            for (j, c) in curve.iter().enumerate() {
                let y = c + t * (1.0 - c);
                prop_assert!((map.y1(map.z1(y, j), j) - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn fourth_order_derivative_is_exact_on_quartics() {
        let h = 1.0 / 16.0;
        let v: Vec<f64> = (0..=16).map(|j| (j as f64 * h).powi(4) - 0.3 * j as f64 * h).collect();
        for (j, d) in fourth_order_derivative(&v, h).iter().enumerate() {
            let y = j as f64 * h;
            assert!((d - (4.0 * y.powi(3) - 0.3)).abs() < 1e-11, "{j}");
        }
    }

    #[test]
    fn sources_vanish_at_background() {
        let b = bg();
        let g = Grid::new(16, 8, 0.8, 1.0).unwrap();
        let mut st = IterationState::zero(g);
        let (f1, f2) = nonlinear_sources(&st, &[0.0; 9], &b, 0.0, 1.0).unwrap();
        assert!(f1.iter().chain(&f2).all(|&v| v == 0.0));
        st.eta_ddot_star = 0.01;
        let (f1, f2) = nonlinear_sources(&st, &[0.0; 9], &b, 0.0, 1.0).unwrap();
        assert!(f1.iter().chain(&f2).all(|&v| v == 0.0));
    }

    /// Sources written as the full transformed operator minus the constant
    /// background one, matrix by matrix.
    fn operator_oracle(st: &IterationState, g_s: &[f64], b: &BackgroundShock) -> (Vec<f64>, Vec<f64>) {
        let g = st.fluct.grid;
        let fr = assemble_curve(g.y1_min, st.eta_ddot_star, &st.slope, 0.0, 1.0).unwrap();
        let map = to_fixed_domain(&fr, 0.0, 1.0).unwrap();
        let d = |c: usize, axis: u8| nodal_derivative(&g, &st.fluct.comps[c], axis);
        let (d1u1, d1u2, d2u1, d2u2) = (d(U1, 1), d(U2, 1), d(U1, 2), d(U2, 2));
        let dgs = fourth_order_derivative(g_s, g.h2());
        let m = b.mass_flux;
        let abar1 = [[1.0 - b.plus.mach2, 0.0], [0.0, 1.0 - b.plus.rho * b.kappa * b.kappa]];
        let abar2 = [[0.0, m], [-m * b.plus.c_factor, 0.0]];
        let mut out = (vec![0.0; g.len()], vec![0.0; g.len()]);
        for j in 0..=g.n2 {
            for i in 0..=g.n1 {
                let k = g.idx(i, j);
                let s = st.full(b, i, j);
                let l = Local::at(&s, b.gas).unwrap();
                let rho = l.th.rho;
                let a1 = [
                    [1.0 - l.m1 * l.m1, -l.m1 * l.m2],
                    [l.rk2 * l.m1 * l.m2, 1.0 - l.rk2 + l.rk2 * l.m2 * l.m2],
                ];
                let a2 = [
                    [-rho * s.u2, rho * s.u1],
                    [-rho * s.u1 * l.cf, -rho * s.u2 * l.cf],
                ];
                let du1 = [d1u1[k], d1u2[k]];
                let du2 = [d2u1[k], d2u2[k]];
                let stretch_m1 = map.stretch(j) - 1.0;
                let shear = map.shear(g.y1(i), j);
                let mut r = [0.0, l.entropy_coeff(b.gas) * dgs[j]];
                for (row, rv) in r.iter_mut().enumerate() {
                    for c in 0..2 {
                        *rv += -stretch_m1 * a1[row][c] * du1[c] - shear * a2[row][c] * du1[c]
                            - (a1[row][c] - abar1[row][c]) * du1[c]
                            - (a2[row][c] - abar2[row][c]) * du2[c];
                    }
                }
                out.0[k] = r[0];
                out.1[k] = r[1];
            }
        }
        out
    }

    #[test]
    fn sources_match_operator_difference() {
        let b = bg();
        let g = Grid::new(20, 12, 0.8, 1.0).unwrap();
        let mut st = IterationState::zero(g);
        for j in 0..=g.n2 {
            for i in 0..=g.n1 {
                let (x, y) = (g.y1(i), g.y2(j));
                st.fluct.set(U1, i, j, 0.02 * (3.0 * x).sin() * y);
                st.fluct.set(U2, i, j, 0.015 * x * x * (1.0 - y));
                st.fluct.set(S, i, j, 0.001 * y * y);
            }
        }
        st.slope = (0..=g.n2).map(|j| 0.03 * (j as f64 / 12.0 - 0.4)).collect();
        st.eta_ddot_star = 0.007;
        let gs: Vec<f64> = (0..=g.n2).map(|j| 0.001 * (j as f64 / 12.0).powi(2)).collect();
        let (f1, f2) = nonlinear_sources(&st, &gs, &b, 0.0, 1.0).unwrap();
        let (o1, o2) = operator_oracle(&st, &gs, &b);
        for k in 0..g.len() {
            assert!((f1[k] - o1[k]).abs() < 1e-14, "f1 at {k}: {} vs {}", f1[k], o1[k]);
            assert!((f2[k] - o2[k]).abs() < 1e-14, "f2 at {k}: {} vs {}", f2[k], o2[k]);
        }
    }

    #[test]
    fn zero_state_boundary_data() {
        let c = Case::new(0.01, 32, 16);
        let st = IterationState::zero(c.grid);
        let (d, _) = nonlinear_boundary_data(&st, &c.setup(), 0.0).unwrap();
        let eb = c.grid.y1_min;
        let trace = sample_on_curve(&c.upstream, &vec![eb; 17]).unwrap();
        let mut worst = 0.0f64;
        for (j, tr) in trace.iter().enumerate() {
            let du = tr.u1 - c.bg.minus.u;
            worst = worst
                .max((d.g1[j] - c.bg.b_u_s * du).abs())
                .max((d.g_s[j] - c.bg.b_s_s * du).abs());
        }
        let size = c.upstream.comps[U1].iter().map(|u| (u - c.bg.minus.u).abs()).fold(0.0, f64::max);
        assert!(worst < 5.0 * size * size, "{worst} vs {size}");
        let heights = exit_streamline_heights(&st, &c.bg).unwrap();
        for (j, x) in heights.iter().enumerate() {
            assert!((x - c.grid.y2(j)).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_upstream_gives_zero_slope_source() {
        let b = bg();
        let wall = WallProfile::parse(0.0, 1.0, 0.0, "x^4").unwrap();
        let exit = ExitPressureProfile::zero();
        let up = Field::uniform(Grid::new(16, 8, 0.0, 1.0).unwrap(), Chart::Lagrangian, &b.minus.state);
        let grid = Grid::new(16, 8, 0.8, 1.0).unwrap();
        let setup = Setup { bg: &b, wall: &wall, exit: &exit, upstream: &up, grid };
        let (d, _) = nonlinear_boundary_data(&IterationState::zero(grid), &setup, 0.0).unwrap();
        for v in d.g0.iter().chain(&d.g1).chain(&d.g_s).chain(&d.g3).chain(&d.g4_top) {
            assert!(v.abs() < 1e-14, "{v}");
        }
        let (next, _) = apply_t(&IterationState::zero(grid), &setup).unwrap();
        assert_eq!(next.distance(&IterationState::zero(grid)), 0.0);
    }

    #[test]
    fn entropy_update_is_constant_along_rows() {
        let c = Case::new(0.01, 32, 16);
        let (next, _) = apply_t(&c.dotted.state, &c.setup()).unwrap();
        for j in 0..=c.grid.n2 {
            let row = &next.fluct.comps[S][c.grid.idx(0, j)..=c.grid.idx(c.grid.n1, j)];
            assert!(row.iter().all(|v| v.to_bits() == row[0].to_bits()));
        }
    }

    #[test]
    fn first_update_is_second_order_in_sigma() {
        let gap = |s: f64| {
            let c = Case::new(s, 64, 32);
            let (next, _) = apply_t(&c.dotted.state, &c.setup()).unwrap();
            next.distance(&c.dotted.state)
        };
        let (a, b) = (gap(0.02), gap(0.01));
        assert!((a / b - 4.0).abs() < 1.6, "{a} {b}");
    }

    #[test]
    fn solvability_slope_matches_expansion() {
        let c = Case::new(0.01, 64, 32);
        let st = &c.dotted.state;
        let h = 1e-4;
        let setup = c.setup();
        let d = (solvability_at(st, &setup, h).unwrap() - solvability_at(st, &setup, -h).unwrap())
            / (2.0 * h);
        let eb = c.grid.y1_min;
        let want = -0.01 * c.bg.k * c.wall.fp(eb).unwrap();
        assert!((d / want - 1.0).abs() < 0.1, "{d} vs {want}");
    }

    #[test]
    fn contraction_on_a_coarse_grid() {
        let c = Case::new(0.01, 64, 32);
        let (_, rep) = run_fixed_point(&c.setup(), &c.dotted.state, &IterationOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.max_ratio() < 0.5, "{rep:?}");
        assert!(rep.iterations <= 20);
    }

    #[test]
    fn zero_amplitude_is_one_step() {
        let c = Case::new(0.0, 32, 16);
        let (st, rep) = run_fixed_point(&c.setup(), &c.dotted.state, &IterationOptions::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(st.fluct.sup(&[U1, U2, S]), 0.0);
    }
}
