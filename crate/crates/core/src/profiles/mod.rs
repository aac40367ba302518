//! Wall and exit-pressure profiles: parsing, exact derivatives, quadrature,
//! and the left-end compatibility check on the wall perturbation.

mod expr;
mod quadrature;

pub use expr::{
    eval_deriv, parse_expression, parse_expression_in, Expr, ExprError, Func, MAX_ORDER,
};
pub use quadrature::{cumulative_trapezoid, integrate, simpson_samples};

/// Absolute tolerance for the vanishing of f and its first three
/// derivatives at the nozzle entrance.
pub const COMPAT_TOL: f64 = 1e-10;

/// Upper wall `y = 1 + sigma * f(x)` over `[l0, l1]`.
#[derive(Debug, Clone)]
pub struct WallProfile {
    pub l0: f64,
    pub l1: f64,
    pub sigma: f64,
    pub f: Expr,
    /// `derivs[k]` is the k-th derivative of `f`, k = 0..=4.
    derivs: Vec<Expr>,
}

impl WallProfile {
    pub fn new(l0: f64, l1: f64, sigma: f64, f: Expr) -> Result<Self, ExprError> {
        let derivs = (0..=MAX_ORDER)
            .map(|k| f.nth_derivative(0, k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            l0,
            l1,
            sigma,
            f,
            derivs,
        })
    }

    pub fn parse(l0: f64, l1: f64, sigma: f64, src: &str) -> Result<Self, ExprError> {
        Self::new(l0, l1, sigma, parse_expression(src)?)
    }

    /// Same profile with a different amplitude.
    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self {
            sigma,
            ..self.clone()
        }
    }

    /// k-th derivative of the unscaled shape `f`.
    pub fn deriv(&self, x: f64, k: usize) -> Result<f64, ExprError> {
        self.derivs
            .get(k)
            .ok_or(ExprError::OrderTooHigh(k))?
            .eval(x)
    }

    pub fn f(&self, x: f64) -> Result<f64, ExprError> {
        self.deriv(x, 0)
    }

    pub fn fp(&self, x: f64) -> Result<f64, ExprError> {
        self.deriv(x, 1)
    }
}

/// Orders j in 0..=3 with |f^(j)(L0)| above [`COMPAT_TOL`]; empty means valid.
/// Evaluation failures count as violations.
pub fn validate_wall(profile: &WallProfile) -> Vec<usize> {
    (0..=3)
        .filter(|&j| match profile.deriv(profile.l0, j) {
            Ok(v) => v.abs() > COMPAT_TOL,
            Err(_) => true,
        })
        .collect()
}

/// Total-pressure perturbation at the exit, per unit amplitude, on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ExitPressureProfile {
    pub p_ex: Expr,
}

impl ExitPressureProfile {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        Ok(Self {
            p_ex: parse_expression(src)?,
        })
    }

    pub fn zero() -> Self {
        Self {
            p_ex: Expr::Const(0.0),
        }
    }

    pub fn eval(&self, y: f64) -> Result<f64, ExprError> {
        self.p_ex.eval(y)
    }

    /// Simpson mean over `[0, 1]`.
    pub fn integral(&self, n: usize) -> Result<f64, ExprError> {
        let vals = sample(&self.p_ex, 0.0, 1.0, n)?;
        Ok(simpson_samples(&vals, 1.0 / n as f64))
    }

    /// Sampled sup of |P|, |P'|, |P''| on `[0, 1]`; errors if any sample fails.
    pub fn c2_norm(&self, n: usize) -> Result<f64, ExprError> {
        let mut norm: f64 = 0.0;
        for k in 0..=2 {
            let d = self.p_ex.nth_derivative(0, k)?;
            for v in sample(&d, 0.0, 1.0, n)? {
                norm = norm.max(v.abs());
            }
        }
        Ok(norm)
    }
}

fn sample(e: &Expr, a: f64, b: f64, n: usize) -> Result<Vec<f64>, ExprError> {
    (0..=n)
        .map(|i| e.eval(a + (b - a) * i as f64 / n as f64))
        .collect()
}
