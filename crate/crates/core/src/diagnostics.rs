//! Read-only checks of computed solutions: field-equation and jump
//! residuals, streamline reconstruction, constancy of the transported
//! quantities, regime classification, weighted norms, and a
//! finite-difference audit of the linearisation coefficients.

use crate::background::{
    classify, jump_g, total_pressure_expansion, BackgroundShock, FlowState, GasModel, Local,
    Regime, Side,
};
use crate::elliptic::nodal_derivative;
use crate::error::Result;
use crate::grid::{Field, Grid, B, KAPPA, S, U1, U2};
use crate::iteration::{fourth_order_derivative, FixedMap};
use crate::profiles::cumulative_trapezoid;
use crate::shockfront::ShockFront;

/// Finite-difference order used for residual evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    Second,
    Fourth,
}

fn derivative(g: &Grid, v: &[f64], axis: u8, order: DiffOrder) -> Vec<f64> {
    match order {
        DiffOrder::Second => nodal_derivative(g, v, axis),
        DiffOrder::Fourth => {
            let mut out = vec![0.0; g.len()];
            if axis == 1 {
                for j in 0..=g.n2 {
                    let row = &v[g.idx(0, j)..=g.idx(g.n1, j)];
                    for (i, d) in fourth_order_derivative(row, g.h1()).into_iter().enumerate() {
                        out[g.idx(i, j)] = d;
                    }
                }
            } else {
                for i in 0..=g.n1 {
                    let col: Vec<f64> = (0..=g.n2).map(|j| v[g.idx(i, j)]).collect();
                    for (j, d) in fourth_order_derivative(&col, g.h2()).into_iter().enumerate() {
                        out[g.idx(i, j)] = d;
                    }
                }
            }
            out
        }
    }
}

/// Max and root-mean-square residual of the two field equations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EquationResiduals {
    pub linf: [f64; 2],
    pub l2: [f64; 2],
    /// Max over the central quarter box, away from the corners where the
    /// data meet without compatibility and the pointwise residual stalls.
    pub core: [f64; 2],
}

impl EquationResiduals {
    pub fn max(&self) -> f64 {
        self.linf[0].max(self.linf[1])
    }
}

/// Residual of the steady field equations for a full-state field, in the
/// Lagrangian chart (`map = None`) or the shock-fixed chart of `map`.
pub fn mhd_residual(
    field: &Field,
    gas: GasModel,
    map: Option<&FixedMap>,
    order: DiffOrder,
) -> Result<EquationResiduals> {
    let g = &field.grid;
    let d = |c: usize, axis: u8| derivative(g, &field.comps[c], axis, order);
    let (z1u1, z1u2, z1s) = (d(U1, 1), d(U2, 1), d(S, 1));
    let (z2u1, z2u2, z2s) = (d(U1, 2), d(U2, 2), d(S, 2));
    let mut out = EquationResiduals::default();
    let mut sq = [0.0; 2];
    for j in 0..=g.n2 {
        for i in 0..=g.n1 {
            let k = g.idx(i, j);
            let (stretch, shear) = match map {
                Some(m) => (m.stretch(j), m.shear(g.y1(i), j)),
                None => (1.0, 0.0),
            };
            let st = field.state(i, j);
            let l = Local::at(&st, gas)?;
            let rho = l.th.rho;
            let y1 = [stretch * z1u1[k], stretch * z1u2[k]];
            let y2 = [z2u1[k] + shear * z1u1[k], z2u2[k] + shear * z1u2[k]];
            let ds = z2s[k] + shear * z1s[k];
            let r1 = (1.0 - l.m1 * l.m1) * y1[0] - l.m1 * l.m2 * y1[1] - rho * st.u2 * y2[0]
                + rho * st.u1 * y2[1];
            let r2 = l.rk2 * l.m1 * l.m2 * y1[0] + (1.0 - l.rk2 + l.rk2 * l.m2 * l.m2) * y1[1]
                - rho * st.u1 * l.cf * y2[0]
                - rho * st.u2 * l.cf * y2[1]
                - l.entropy_coeff(gas) * ds;
            let central = 4 * i >= g.n1 && 4 * i <= 3 * g.n1 && 4 * j >= g.n2 && 4 * j <= 3 * g.n2;
            for (e, r) in [r1, r2].into_iter().enumerate() {
                out.linf[e] = out.linf[e].max(r.abs());
                sq[e] += r * r;
                if central {
                    out.core[e] = out.core[e].max(r.abs());
                }
            }
        }
    }
    let n = g.len() as f64;
    out.l2 = sq.map(|s| (s / n).sqrt());
    Ok(out)
}

/// Jump functionals sampled along the shock.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RhResidual {
    /// Pointwise `(G0, G1, G2)` by `z2`.
    pub pointwise: Vec<[f64; 3]>,
    pub max: [f64; 3],
}

impl RhResidual {
    pub fn worst(&self) -> f64 {
        self.max.iter().fold(0.0, |a, b| a.max(*b))
    }
}

/// Exact jump functionals between the downstream trace and the upstream
/// field sampled on the curve, with the curve's slope.
pub fn rh_residual_on_shock(
    downstream: &[FlowState],
    upstream: &Field,
    front: &ShockFront,
    gas: GasModel,
) -> Result<RhResidual> {
    let minus = crate::grid::sample_on_curve(upstream, &front.curve)?;
    let mut out = RhResidual::default();
    for ((p, m), s) in downstream.iter().zip(&minus).zip(&front.slope) {
        let parts = jump_g(p, m, gas)?;
        let g = [parts.g0(*s), parts.g1, parts.g2];
        for (a, b) in out.max.iter_mut().zip(g) {
            *a = a.max(b.abs());
        }
        out.pointwise.push(g);
    }
    Ok(out)
}

/// Physical transverse coordinate of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseLagrangian {
    pub x2: Vec<f64>,
    /// Max of `dX2/dy1 - u2/u1`, mass conservation in disguise.
    pub cross_defect: f64,
}

impl InverseLagrangian {
    /// Image of the upper wall, by station.
    pub fn top(&self, g: &Grid) -> Vec<f64> {
        (0..=g.n1).map(|i| self.x2[g.idx(i, g.n2)]).collect()
    }
}

/// `X2` by integration from the lower wall along lines of constant first
/// coordinate; in the shock-fixed chart those lines move in `y1`, which
/// adds the `u2/u1` term.
pub fn inverse_lagrangian(
    field: &Field,
    gas: GasModel,
    map: Option<&FixedMap>,
) -> Result<InverseLagrangian> {
    let g = &field.grid;
    let mut x2 = vec![0.0; g.len()];
    let mut ratio = vec![0.0; g.len()];
    for i in 0..=g.n1 {
        let mut col = Vec::with_capacity(g.n2 + 1);
        for j in 0..=g.n2 {
            let st = field.state(i, j);
            let rho = crate::background::closure(&st, gas)?.rho;
            let k = g.idx(i, j);
            ratio[k] = st.u2 / st.u1;
            let lean = match map {
                Some(m) => (m.l1 - g.y1(i)) / (m.l1 - m.eta_bar_star) * m.slope[j],
                None => 0.0,
            };
            col.push(1.0 / (rho * st.u1) + ratio[k] * lean);
        }
        for (j, v) in cumulative_trapezoid(&col, g.h2()).into_iter().enumerate() {
            x2[g.idx(i, j)] = v;
        }
    }
    let d1 = nodal_derivative(g, &x2, 1);
    let mut cross = 0.0f64;
    for j in 0..=g.n2 {
        let stretch = map.map_or(1.0, |m| m.stretch(j));
        for i in 0..=g.n1 {
            let k = g.idx(i, j);
            cross = cross.max((stretch * d1[k] - ratio[k]).abs());
        }
    }
    Ok(InverseLagrangian {
        x2,
        cross_defect: cross,
    })
}

/// Row variation of the entropy and global deviation of `B` and `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Constancy {
    pub entropy_rows: f64,
    pub bernoulli: f64,
    pub kappa: f64,
}

impl Constancy {
    pub fn max(&self) -> f64 {
        self.entropy_rows.max(self.bernoulli).max(self.kappa)
    }
}

pub fn constancy_check(field: &Field, reference: &FlowState) -> Constancy {
    let g = &field.grid;
    let mut out = Constancy::default();
    for j in 0..=g.n2 {
        let row = &field.comps[S][g.idx(0, j)..=g.idx(g.n1, j)];
        let lo = row.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        let hi = row.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        out.entropy_rows = out.entropy_rows.max(hi - lo);
    }
    let dev = |c: usize, r: f64| field.comps[c].iter().fold(0.0f64, |a, v| a.max((v - r).abs()));
    out.bernoulli = dev(B, reference.b);
    out.kappa = dev(KAPPA, reference.kappa);
    out
}

/// Order of the weighted Hölder estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderOrder {
    Zero,
    One,
}

/// Pairs within this many nodes in each direction enter the Hölder quotients.
pub const HOLDER_RADIUS: usize = 8;

/// Discrete estimate of the weighted Hölder norm with wall distance
/// `d = min(y2, 1 - y2)`: weighted sups of the values and first
/// differences plus the weighted Hölder quotient of the top-order term.
/// Only nearby node pairs are compared, so this is an estimate.
pub fn weighted_norm_estimate(grid: &Grid, v: &[f64], order: HolderOrder, alpha: f64, delta: f64) -> f64 {
    let g = grid;
    let dist = |j: usize| {
        let y = g.y2(j);
        y.min(1.0 - y)
    };
    let weight = |d: f64, e: f64| if e > 0.0 { d.powf(e) } else { 1.0 };
    let sup = |vals: &[&[f64]], e: f64| {
        let mut s = 0.0f64;
        for j in 0..=g.n2 {
            let w = weight(dist(j), e);
            for i in 0..=g.n1 {
                for f in vals {
                    s = s.max(w * f[g.idx(i, j)].abs());
                }
            }
        }
        s
    };
    let d1 = nodal_derivative(g, v, 1);
    let d2 = nodal_derivative(g, v, 2);
    let (m, top): (f64, Vec<&[f64]>) = match order {
        HolderOrder::Zero => (0.0, vec![v]),
        HolderOrder::One => (1.0, vec![&d1, &d2]),
    };
    let mut norm = sup(&[v], delta);
    if order == HolderOrder::One {
        norm += sup(&[&d1, &d2], 1.0 + delta);
    }
    let e = m + alpha + delta;
    let mut quot = 0.0f64;
    for j in 0..=g.n2 {
        for i in 0..=g.n1 {
            let (x1, x2) = (g.y1(i), g.y2(j));
            for jj in j..=(j + HOLDER_RADIUS).min(g.n2) {
                let w = weight(dist(j).min(dist(jj)), e);
                let lo = if jj == j { i + 1 } else { i.saturating_sub(HOLDER_RADIUS) };
                for ii in lo..=(i + HOLDER_RADIUS).min(g.n1) {
                    let r = ((g.y1(ii) - x1).powi(2) + (g.y2(jj) - x2).powi(2)).sqrt();
                    for f in &top {
                        let diff = (f[g.idx(ii, jj)] - f[g.idx(i, j)]).abs();
                        quot = quot.max(w * diff / r.powf(alpha));
                    }
                }
            }
        }
    }
    norm + quot
}

/// Classification counts over the region each field actually covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RegimeMap {
    pub upstream_nodes: usize,
    pub upstream_hyperbolic: usize,
    pub downstream_nodes: usize,
    pub downstream_elliptic: usize,
}

impl RegimeMap {
    pub fn exceptions(&self) -> usize {
        (self.upstream_nodes - self.upstream_hyperbolic)
            + (self.downstream_nodes - self.downstream_elliptic)
    }
}

/// Upstream nodes ahead of the shock must be hyperbolic, every downstream
/// node elliptic-hyperbolic. Failed classifications count as exceptions.
pub fn regime_map(upstream: &Field, downstream: &Field, curve: &[f64], gas: GasModel) -> RegimeMap {
    let mut out = RegimeMap::default();
    let gu = &upstream.grid;
    for j in 0..=gu.n2 {
        for i in 0..=gu.n1 {
            if gu.y1(i) >= curve[j] {
                continue;
            }
            out.upstream_nodes += 1;
            if matches!(classify(&upstream.state(i, j), gas), Ok(c) if c.regime == Regime::Hyperbolic) {
                out.upstream_hyperbolic += 1;
            }
        }
    }
    let gd = &downstream.grid;
    for j in 0..=gd.n2 {
        for i in 0..=gd.n1 {
            out.downstream_nodes += 1;
            if matches!(classify(&downstream.state(i, j), gas), Ok(c) if c.regime == Regime::EllipticHyperbolic)
            {
                out.downstream_elliptic += 1;
            }
        }
    }
    out
}

/// One row of the linearisation audit.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCheck {
    pub name: String,
    /// Fitted log-log slope of the linearisation error; `None` when the
    /// error is at round-off for every step.
    pub slope: Option<f64>,
    pub pass: bool,
}

pub const AUDIT_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
const EXACT_FLOOR: f64 = 1e-13;
/// Errors of odd-symmetric directions fall off at third order, so only the
/// lower end of the window is enforced.
pub const SLOPE_TOL: f64 = 0.1;
const COMPONENTS: [&str; 5] = ["u1", "u2", "S", "B", "kappa"];

fn fit_slope(errors: &[f64]) -> Option<f64> {
    if errors.iter().all(|e| *e < EXACT_FLOOR) {
        return None;
    }
    let xs: Vec<f64> = AUDIT_STEPS.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(num / den)
}

fn verdict(name: String, errors: &[f64]) -> CoefficientCheck {
    let slope = fit_slope(errors);
    CoefficientCheck {
        pass: slope.is_none_or(|s| s >= 2.0 - SLOPE_TOL),
        name,
        slope,
    }
}

/// Compares every linearisation vector of the jump functionals and the
/// total-pressure expansion on both sides against one-sided perturbations
/// of the background states; a correct coefficient leaves an error of
/// second order in the step.
pub fn linearization_suite(bg: &BackgroundShock) -> Vec<CoefficientCheck> {
    let gas = bg.gas;
    let (up, um) = (bg.plus.state, bg.minus.state);
    let functional = |p: &FlowState, m: &FlowState, which: usize| -> Option<f64> {
        let parts = jump_g(p, m, gas).ok()?;
        Some([parts.g0(0.0), parts.g1, parts.g2][which])
    };
    let mut out = Vec::new();
    for (side, label) in [(Side::Plus, "+"), (Side::Minus, "-")] {
        let s = bg.side(side);
        for (which, beta) in [&s.beta0, &s.beta1, &s.beta2].into_iter().enumerate() {
            for (c, name) in COMPONENTS.iter().enumerate() {
                let mut dir = [0.0; 5];
                dir[c] = 1.0;
                let base = functional(&up, &um, which).unwrap_or(f64::NAN);
                let errors: Vec<f64> = AUDIT_STEPS
                    .iter()
                    .map(|&e| {
                        let (p, m) = match side {
                            Side::Plus => (up.offset(dir, e), um),
                            Side::Minus => (up, um.offset(dir, e)),
                        };
                        let v = functional(&p, &m, which).unwrap_or(f64::NAN);
                        (v - base - e * beta[c]).abs()
                    })
                    .collect();
                out.push(verdict(format!("beta{which}{label}[{name}]"), &errors));
            }
        }
        for (c, name) in COMPONENTS.iter().enumerate() {
            let mut dir = [0.0; 5];
            dir[c] = 1.0;
            let errors: Vec<f64> = AUDIT_STEPS
                .iter()
                .map(|&e| {
                    total_pressure_expansion(&s.state.offset(dir, e), bg, side)
                        .map_or(f64::NAN, |x| x.remainder.abs())
                })
                .collect();
            out.push(verdict(format!("P{label}[{name}]"), &errors));
        }
    }
    out
}

/// Hölder parameters of the reported fluctuation norm.
pub const NORM_ALPHA: f64 = 0.5;
pub const NORM_DELTA: f64 = -0.5;

/// Everything the diagnostics report about one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub upstream: EquationResiduals,
    pub downstream: EquationResiduals,
    pub downstream_fourth: EquationResiduals,
    pub shock: RhResidual,
    pub constancy_upstream: Constancy,
    pub constancy_downstream: Constancy,
    pub regime: RegimeMap,
    /// Streamline cross-derivative defect, upstream then downstream.
    pub streamline_defect: [f64; 2],
    /// Weighted first-order estimate of the downstream velocity fluctuation.
    pub weighted_norm: f64,
}

impl ResidualReport {
    pub fn is_well_formed(&self) -> bool {
        let c = |k: &Constancy| [k.entropy_rows, k.bernoulli, k.kappa];
        self.upstream
            .linf
            .iter()
            .chain(&self.upstream.l2)
            .chain(&self.upstream.core)
            .chain(&self.downstream.linf)
            .chain(&self.downstream.l2)
            .chain(&self.downstream.core)
            .chain(&self.downstream_fourth.linf)
            .chain(&self.downstream_fourth.l2)
            .chain(&self.downstream_fourth.core)
            .chain(&self.shock.max)
            .chain(&c(&self.constancy_upstream))
            .chain(&c(&self.constancy_downstream))
            .chain(&self.streamline_defect)
            .chain([&self.weighted_norm])
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Runs every check on an upstream field (Lagrangian chart) and a
/// downstream field (shock-fixed chart of `map`).
pub fn diagnose(
    bg: &BackgroundShock,
    upstream: &Field,
    downstream: &Field,
    map: &FixedMap,
    front: &ShockFront,
) -> Result<ResidualReport> {
    let gas = bg.gas;
    let gd = &downstream.grid;
    let edge: Vec<FlowState> = (0..=gd.n2).map(|j| downstream.state(0, j)).collect();
    let mut weighted = 0.0f64;
    for (c, r) in [(U1, bg.plus.state.u1), (U2, bg.plus.state.u2)] {
        let fl: Vec<f64> = downstream.comps[c].iter().map(|v| v - r).collect();
        weighted = weighted.max(weighted_norm_estimate(gd, &fl, HolderOrder::One, NORM_ALPHA, NORM_DELTA));
    }
    Ok(ResidualReport {
        upstream: mhd_residual(upstream, gas, None, DiffOrder::Second)?,
        downstream: mhd_residual(downstream, gas, Some(map), DiffOrder::Second)?,
        downstream_fourth: mhd_residual(downstream, gas, Some(map), DiffOrder::Fourth)?,
        shock: rh_residual_on_shock(&edge, upstream, front, gas)?,
        constancy_upstream: constancy_check(upstream, &bg.minus.state),
        constancy_downstream: constancy_check(downstream, &bg.plus.state),
        regime: regime_map(upstream, downstream, &front.curve, gas),
        streamline_defect: [
            inverse_lagrangian(upstream, gas, None)?.cross_defect,
            inverse_lagrangian(downstream, gas, Some(map))?.cross_defect,
        ],
        weighted_norm: weighted,
    })
}
