//! Polytropic closure, the piecewise-constant background shock, the exact
//! Lagrangian jump functionals and their linearisation, and the local
//! type classification of the steady system.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shocks whose pressure jump falls below this are treated as degenerate.
pub const DEGENERATE_JUMP: f64 = 1e-8;
/// Smallest total-pressure jump the reduced jump functionals divide by.
pub const DIVISION_HAZARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
}

impl GasModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 1.0 {
            Ok(Self { gamma })
        } else {
            Err(Error::Config(format!("gas.gamma must exceed 1, got {gamma}")))
        }
    }
}

/// Pointwise unknowns `(u1, u2, S, B, kappa)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub u1: f64,
    pub u2: f64,
    pub s: f64,
    pub b: f64,
    pub kappa: f64,
}

impl FlowState {
    /// State from density, pressure and velocity.
    pub fn from_primitive(rho: f64, p: f64, u1: f64, u2: f64, kappa: f64, gas: GasModel) -> Self {
        let g = gas.gamma;
        Self {
            u1,
            u2,
            s: p / rho.powf(g),
            b: 0.5 * (u1 * u1 + u2 * u2) + g * p / ((g - 1.0) * rho),
            kappa,
        }
    }

    pub fn speed2(&self) -> f64 {
        self.u1 * self.u1 + self.u2 * self.u2
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.u1, self.u2, self.s, self.b, self.kappa]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            u1: a[0],
            u2: a[1],
            s: a[2],
            b: a[3],
            kappa: a[4],
        }
    }

    /// Componentwise `self + t * dir`.
    pub fn offset(&self, dir: [f64; 5], t: f64) -> Self {
        let mut a = self.as_array();
        for (x, d) in a.iter_mut().zip(dir) {
            *x += t * d;
        }
        Self::from_array(a)
    }
}

/// Closure values at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    pub rho: f64,
    pub p: f64,
    pub c2: f64,
    /// Total pressure: gas plus magnetic.
    pub big_p: f64,
}

impl Thermo {
    pub fn c(&self) -> f64 {
        self.c2.sqrt()
    }
}

pub fn closure(state: &FlowState, gas: GasModel) -> Result<Thermo> {
    let g = gas.gamma;
    let q2 = state.speed2();
    let internal = state.b - 0.5 * q2;
    if !(internal > 0.0 && state.s > 0.0 && internal.is_finite()) {
        return Err(Error::Domain(format!(
            "nonpositive internal energy or entropy at {state:?}"
        )));
    }
    let rho = ((g - 1.0) / (g * state.s) * internal).powf(1.0 / (g - 1.0));
    let p = state.s * rho.powf(g);
    Ok(Thermo {
        rho,
        p,
        c2: g * p / rho,
        big_p: p + 0.5 * state.kappa * state.kappa * rho * rho * q2,
    })
}

/// Closure plus the local Mach and magnetic factors used by the field equations.
#[derive(Debug, Clone, Copy)]
pub struct Local {
    pub th: Thermo,
    pub m1: f64,
    pub m2: f64,
    /// `rho * kappa^2`
    pub rk2: f64,
    /// `C = 1 - rho kappa^2 + rho kappa^2 |M|^2`
    pub cf: f64,
}

impl Local {
    pub fn at(state: &FlowState, gas: GasModel) -> Result<Self> {
        let th = closure(state, gas)?;
        let c = th.c();
        let m1 = state.u1 / c;
        let m2 = state.u2 / c;
        let rk2 = th.rho * state.kappa * state.kappa;
        Ok(Self {
            th,
            m1,
            m2,
            rk2,
            cf: 1.0 - rk2 + rk2 * (m1 * m1 + m2 * m2),
        })
    }

    pub fn mach2(&self) -> f64 {
        self.m1 * self.m1 + self.m2 * self.m2
    }

    /// Coefficient of the transverse entropy gradient in the second field equation.
    pub fn entropy_coeff(&self, gas: GasModel) -> f64 {
        let g = gas.gamma;
        self.th.rho.powf(g) * (1.0 + g * self.rk2 * self.mach2()) / (g - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Constant state on one side of the background shock with its derived numbers.
#[derive(Debug, Clone)]
pub struct SideState {
    pub state: FlowState,
    pub rho: f64,
    pub u: f64,
    pub p: f64,
    pub c: f64,
    pub mach2: f64,
    /// Squared Alfven number `1 / (rho kappa^2)`; infinite without field.
    pub alfven2: f64,
    pub c_factor: f64,
    pub d: f64,
    /// Linearisation vectors in `(u1, u2, S, B, kappa)` order.
    pub beta0: [f64; 5],
    pub beta1: [f64; 5],
    pub beta2: [f64; 5],
    /// Rows are the two reduced jump functionals, columns `(u1, S)`.
    pub bs: [[f64; 2]; 2],
}

impl SideState {
    fn new(state: FlowState, gas: GasModel, mass_flux: f64, sign: f64) -> Result<Self> {
        let th = closure(&state, gas)?;
        let g = gas.gamma;
        let k = state.kappa;
        let u = state.u1;
        let mach2 = u * u / th.c2;
        let rk2 = th.rho * k * k;
        let c_factor = 1.0 - rk2 + rk2 * mach2;
        let d = 1.0 / g + 0.5 * rk2 * mach2;
        let s = state.s;
        let m = mass_flux;
        let beta0 = [0.0, sign * (1.0 - rk2), 0.0, 0.0, 0.0];
        let beta1 = [
            sign / m * (mach2 - 1.0) / u,
            0.0,
            sign / m / ((g - 1.0) * s),
            -sign / m / th.c2,
            0.0,
        ];
        let beta2 = [
            sign * d * (mach2 - 1.0) / mach2,
            0.0,
            sign * th.rho * u * k * k / (2.0 * (g - 1.0) * s),
            sign * (1.0 - d) / u,
            -sign * th.rho * u * k,
        ];
        let b1 = [(mach2 - 1.0) / u, d * (mach2 - 1.0) / mach2];
        let b2 = [1.0 / ((g - 1.0) * s), 0.5 * m * k * k / ((g - 1.0) * s)];
        Ok(Self {
            state,
            rho: th.rho,
            u,
            p: th.p,
            c: th.c(),
            mach2,
            alfven2: if rk2 > 0.0 { 1.0 / rk2 } else { f64::INFINITY },
            c_factor,
            d,
            beta0,
            beta1,
            beta2,
            bs: [[b1[0], b2[0]], [b1[1], b2[1]]],
        })
    }

    pub fn bs_det(&self) -> f64 {
        self.bs[0][0] * self.bs[1][1] - self.bs[0][1] * self.bs[1][0]
    }

    pub fn total_pressure(&self) -> f64 {
        self.p + 0.5 * self.state.kappa.powi(2) * self.rho * self.rho * self.u * self.u
    }
}

/// Piecewise-constant transonic shock with mass flux normalised to one.
#[derive(Debug, Clone)]
pub struct BackgroundShock {
    pub gas: GasModel,
    pub mass_flux: f64,
    pub kappa: f64,
    pub bernoulli: f64,
    pub minus: SideState,
    pub plus: SideState,
    /// `p+ - p-`
    pub pressure_jump: f64,
    /// `P+ - P-`, the slope coefficient of the tangential jump functional.
    pub total_pressure_jump: f64,
    pub k0: f64,
    pub k: f64,
    pub b_u_s: f64,
    pub b_s_s: f64,
    pub b_u_1: f64,
}

/// Classical normal-shock density ratio, used as the Newton starting point.
fn normal_shock_density_ratio(m2: f64, g: f64) -> f64 {
    (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0)
}

pub fn solve_background(
    rho_minus: f64,
    mach_minus: f64,
    kappa: f64,
    gas: GasModel,
) -> Result<BackgroundShock> {
    let g = gas.gamma;
    if !(rho_minus > 0.0 && rho_minus.is_finite()) {
        return Err(Error::Config(format!(
            "background.rho_minus must be positive, got {rho_minus}"
        )));
    }
    if !kappa.is_finite() {
        return Err(Error::Config("background.kappa must be finite".into()));
    }
    if !(mach_minus > 1.0 && mach_minus.is_finite()) {
        return Err(Error::Regime(format!(
            "upstream Mach number {mach_minus} is not supersonic"
        )));
    }
    let m = 1.0;
    let u_m = m / rho_minus;
    let p_m = rho_minus * u_m * u_m / (g * mach_minus * mach_minus);
    let classical_jump = p_m * 2.0 * g / (g + 1.0) * (mach_minus * mach_minus - 1.0);
    if classical_jump < DEGENERATE_JUMP {
        return Err(Error::DegenerateShock {
            jump: classical_jump,
            threshold: DEGENERATE_JUMP,
        });
    }
    let minus_state = FlowState::from_primitive(rho_minus, p_m, u_m, 0.0, kappa, gas);
    let bern = minus_state.b;
    let impulse = p_m + m * u_m;
    let gg = g / (g - 1.0);

    // Energy balance along the mass and momentum jump relations, in rho+.
    let residual = |r: f64| 0.5 * m * m / (r * r) + gg * (impulse - m * m / r) / r - bern;
    let slope = |r: f64| -m * m / r.powi(3) - gg * impulse / (r * r) + 2.0 * gg * m * m / r.powi(3);
    let mut r = rho_minus * normal_shock_density_ratio(mach_minus * mach_minus, g);
    for _ in 0..50 {
        let step = residual(r) / slope(r);
        r -= step;
        if step.abs() <= 1e-15 * r {
            break;
        }
    }
    let u_p = m / r;
    let p_p = impulse - m * u_p;
    let jump = p_p - p_m;
    if !(jump >= DEGENERATE_JUMP) || !r.is_finite() {
        return Err(Error::DegenerateShock {
            jump,
            threshold: DEGENERATE_JUMP,
        });
    }
    let mut plus_state = FlowState::from_primitive(r, p_p, u_p, 0.0, kappa, gas);
    // The jump relation for B holds exactly by construction.
    plus_state.b = bern;

    let minus = SideState::new(minus_state, gas, m, -1.0)?;
    let plus = SideState::new(plus_state, gas, m, 1.0)?;
    if plus.mach2 >= 1.0 {
        return Err(Error::Regime(format!(
            "downstream Mach number squared {} is not subsonic",
            plus.mach2
        )));
    }
    if kappa * kappa * plus.rho >= 1.0 {
        return Err(Error::Regime(format!(
            "kappa^2 = {} must stay below 1/rho+ = {} (super-Alfvenic requirement)",
            kappa * kappa,
            1.0 / plus.rho
        )));
    }
    let k0 = (1.0 - plus.mach2) / (m * m * plus.c_factor);
    let k = ((1.0 - plus.mach2) / plus.c_factor * (1.0 / (g * plus.mach2) + plus.rho * kappa * kappa)
        + 1.0)
        * plus.u
        / plus.p
        * jump;
    if !(k0 > 0.0 && k > 0.0) {
        return Err(Error::Regime(format!(
            "admissibility coefficients must be positive, got K0 = {k0}, K = {k}"
        )));
    }
    let mm2 = minus.mach2;
    let b_u_s = plus.mach2 / mm2 * (mm2 - 1.0) / (plus.mach2 - 1.0);
    let b_s_s = (g - 1.0) * plus.state.s / (plus.p * minus.u) * (mm2 - 1.0) * jump;
    let b_u_1 = -(plus.p + kappa * kappa * m * m) / (m * plus.c_factor) * (mm2 - 1.0)
        / (plus.p * minus.u)
        * jump;
    let total_pressure_jump = plus.total_pressure() - minus.total_pressure();
    Ok(BackgroundShock {
        gas,
        mass_flux: m,
        kappa,
        bernoulli: bern,
        minus,
        plus,
        pressure_jump: jump,
        total_pressure_jump,
        k0,
        k,
        b_u_s,
        b_s_s,
        b_u_1,
    })
}

impl BackgroundShock {
    pub fn side(&self, side: Side) -> &SideState {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    /// Largest of the mass, momentum and Bernoulli jump defects.
    pub fn rh_residual(&self) -> f64 {
        let (a, b) = (&self.minus, &self.plus);
        let mass = (b.rho * b.u - a.rho * a.u).abs();
        let mom = (b.rho * b.u * b.u + b.p - a.rho * a.u * a.u - a.p).abs();
        let bern = (b.state.b - a.state.b).abs();
        mass.max(mom).max(bern)
    }

    /// Entropy and velocity gains of the downstream trace per unit upstream
    /// u1 fluctuation, `Bs+^{-1} Bs- (1, 0)^T`.
    pub fn interface_map(&self) -> [f64; 2] {
        let rhs = [self.minus.bs[0][0], self.minus.bs[1][0]];
        solve2(&self.plus.bs, rhs)
    }

    /// Admissibility function `F(eta)` for wall values `f(eta)` and `f(L1)`.
    pub fn admissibility(&self, f_eta: f64, f_l1: f64) -> f64 {
        (-self.k * f_eta + self.plus.u * f_l1) / self.k0
    }

    /// `a1`, `a2` of the downstream potential operator `-a1 d11 - a2 d22`.
    pub fn elliptic_coeffs(&self) -> (f64, f64) {
        let m = self.mass_flux;
        let p = &self.plus;
        (
            (1.0 - p.rho * self.kappa * self.kappa) / m,
            m * p.c_factor / (1.0 - p.mach2),
        )
    }

    /// Coefficient of `dS` in the linear total-pressure expansion about side `side`.
    pub fn pressure_entropy_coeff(&self, side: Side) -> f64 {
        let s = self.side(side);
        let m = self.mass_flux;
        -(s.p + self.kappa * self.kappa * m * m) / ((self.gas.gamma - 1.0) * s.state.s)
    }
}

/// Solves a 2x2 system by Cramer's rule.
pub fn solve2(a: &[[f64; 2]; 2], rhs: [f64; 2]) -> [f64; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        (rhs[0] * a[1][1] - a[0][1] * rhs[1]) / det,
        (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det,
    ]
}

/// Jump functionals split so the slope-dependent first one can be assembled
/// by the caller as `tangential - slope * total_pressure_jump`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpParts {
    /// `[(1 - kappa^2 rho) u2]`
    pub tangential: f64,
    /// `[P]`
    pub total_pressure_jump: f64,
    pub g1: f64,
    pub g2: f64,
}

impl JumpParts {
    pub fn g0(&self, slope: f64) -> f64 {
        self.tangential - slope * self.total_pressure_jump
    }
}

/// Exact Lagrangian jump functionals with `[X] = X(plus) - X(minus)`.
pub fn jump_g(plus: &FlowState, minus: &FlowState, gas: GasModel) -> Result<JumpParts> {
    let tp = closure(plus, gas)?;
    let tm = closure(minus, gas)?;
    let tangential = (1.0 - plus.kappa * plus.kappa * tp.rho) * plus.u2
        - (1.0 - minus.kappa * minus.kappa * tm.rho) * minus.u2;
    let dp = tp.big_p - tm.big_p;
    if dp.abs() < DIVISION_HAZARD {
        return Err(Error::DivisionHazard { jump: dp });
    }
    let ratio = tangential / dp;
    let g1 = (1.0 / (tp.rho * plus.u1) - 1.0 / (tm.rho * minus.u1))
        + ratio * (plus.u2 / plus.u1 - minus.u2 / minus.u1);
    let normal = |s: &FlowState, t: &Thermo| {
        s.u1 + t.big_p / (t.rho * s.u1) - s.kappa * s.kappa * t.rho * s.u1
    };
    let g2 = (normal(plus, &tp) - normal(minus, &tm))
        + ratio * (tp.big_p * plus.u2 / plus.u1 - tm.big_p * minus.u2 / minus.u1);
    Ok(JumpParts {
        tangential,
        total_pressure_jump: dp,
        g1,
        g2,
    })
}

/// Exact total pressure, its linear expansion about one background side,
/// and the remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureExpansion {
    pub exact: f64,
    pub linear: f64,
    pub remainder: f64,
}

pub fn total_pressure_expansion(
    state: &FlowState,
    bg: &BackgroundShock,
    side: Side,
) -> Result<PressureExpansion> {
    let s = bg.side(side);
    let m = bg.mass_flux;
    let k = bg.kappa;
    let exact = closure(state, bg.gas)?.big_p;
    let linear = s.total_pressure() - m * s.c_factor * (state.u1 - s.u)
        + bg.pressure_entropy_coeff(side) * (state.s - s.state.s)
        + s.rho * (1.0 + s.rho * k * k * s.mach2) * (state.b - s.state.b)
        + k * m * m * (state.kappa - s.state.kappa);
    Ok(PressureExpansion {
        exact,
        linear,
        remainder: exact - linear,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Hyperbolic,
    EllipticHyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeClassification {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub discriminant: f64,
    pub regime: Regime,
    /// Set when the local Mach number is one to round-off.
    pub sonic: bool,
}

pub fn classify(state: &FlowState, gas: GasModel) -> Result<RegimeClassification> {
    let loc = Local::at(state, gas)?;
    if loc.rk2 >= 1.0 || loc.cf <= 0.0 {
        return Err(Error::Regime(format!(
            "sub-Alfvenic state (rho kappa^2 = {}, C = {})",
            loc.rk2, loc.cf
        )));
    }
    let mach2 = loc.mach2();
    let disc = (1.0 - loc.rk2) * (mach2 - 1.0) / loc.cf;
    let root = Complex64::new(disc, 0.0).sqrt();
    let scale = 1.0 / (loc.th.rho * state.speed2());
    let lambda_plus = (Complex64::new(-state.u2, 0.0) + state.u1 * root) * scale;
    let lambda_minus = (Complex64::new(-state.u2, 0.0) - state.u1 * root) * scale;
    Ok(RegimeClassification {
        lambda_plus,
        lambda_minus,
        discriminant: disc,
        regime: if disc >= 0.0 {
            Regime::Hyperbolic
        } else {
            Regime::EllipticHyperbolic
        },
        sonic: (mach2 - 1.0).abs() < 1e-12,
    })
}
