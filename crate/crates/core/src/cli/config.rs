//! Run configuration: INI-style sections with dotted key names.

use std::path::{Path, PathBuf};

use ini::{Ini, ParseOption};

use crate::background::GasModel;
use crate::error::{Error, Result};
use crate::profiles::{validate_wall, ExitPressureProfile, WallProfile};

/// Environment variable that replaces `output.dir`.
pub const OUT_ENV: &str = "MHDSHOCK_OUT";

/// Every accepted key, in rendering order.
pub const KEYS: [&str; 18] = [
    "gas.gamma",
    "background.M_minus",
    "background.rho_minus",
    "background.kappa",
    "nozzle.L0",
    "nozzle.L1",
    "nozzle.sigma",
    "nozzle.f",
    "exit.P_ex",
    "grid.n1_sup",
    "grid.n1_sub",
    "grid.n2",
    "iteration.tol",
    "iteration.max_iter",
    "iteration.relaxation",
    "output.dir",
    "output.emit_fields",
    "output.emit_plot_data",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub mach_minus: f64,
    pub rho_minus: f64,
    pub kappa: f64,
    pub l0: f64,
    pub l1: f64,
    pub sigma: f64,
    pub wall: String,
    pub exit_pressure: String,
    pub n1_sup: usize,
    pub n1_sub: usize,
    pub n2: usize,
    /// `None` selects `1e-10 sigma`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub relaxation: f64,
    pub out_dir: PathBuf,
    pub emit_fields: bool,
    pub emit_plot_data: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            mach_minus: 2.0,
            rho_minus: 1.0,
            kappa: 0.3,
            l0: 0.0,
            l1: 1.0,
            sigma: 0.01,
            wall: "x^4".into(),
            exit_pressure: "0".into(),
            n1_sup: 256,
            n1_sub: 128,
            n2: 64,
            tol: None,
            max_iter: 50,
            relaxation: 1.0,
            out_dir: PathBuf::from("out"),
            emit_fields: true,
            emit_plot_data: false,
        }
    }
}

/// Typed objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub gas: GasModel,
    pub wall: WallProfile,
    pub exit: ExitPressureProfile,
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl RunConfig {
    /// Sets one dotted key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "gas.gamma" => self.gamma = num(key, v)?,
            "background.M_minus" => self.mach_minus = num(key, v)?,
            "background.rho_minus" => self.rho_minus = num(key, v)?,
            "background.kappa" => self.kappa = num(key, v)?,
            "nozzle.L0" => self.l0 = num(key, v)?,
            "nozzle.L1" => self.l1 = num(key, v)?,
            "nozzle.sigma" => self.sigma = num(key, v)?,
            "nozzle.f" => self.wall = v.trim().to_string(),
            "exit.P_ex" => self.exit_pressure = v.trim().to_string(),
            "grid.n1_sup" => self.n1_sup = num(key, v)?,
            "grid.n1_sub" => self.n1_sub = num(key, v)?,
            "grid.n2" => self.n2 = num(key, v)?,
            "iteration.tol" => {
                self.tol = match v.trim() {
                    "auto" => None,
                    s => Some(num(key, s)?),
                }
            }
            "iteration.max_iter" => self.max_iter = num(key, v)?,
            "iteration.relaxation" => self.relaxation = num(key, v)?,
            "output.dir" => self.out_dir = PathBuf::from(v.trim()),
            "output.emit_fields" => self.emit_fields = flag(key, v)?,
            "output.emit_plot_data" => self.emit_plot_data = flag(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "gas.gamma" => self.gamma.to_string(),
            "background.M_minus" => self.mach_minus.to_string(),
            "background.rho_minus" => self.rho_minus.to_string(),
            "background.kappa" => self.kappa.to_string(),
            "nozzle.L0" => self.l0.to_string(),
            "nozzle.L1" => self.l1.to_string(),
            "nozzle.sigma" => self.sigma.to_string(),
            "nozzle.f" => self.wall.clone(),
            "exit.P_ex" => self.exit_pressure.clone(),
            "grid.n1_sup" => self.n1_sup.to_string(),
            "grid.n1_sub" => self.n1_sub.to_string(),
            "grid.n2" => self.n2.to_string(),
            "iteration.tol" => self.tol.map_or("auto".into(), |t| t.to_string()),
            "iteration.max_iter" => self.max_iter.to_string(),
            "iteration.relaxation" => self.relaxation.to_string(),
            "output.dir" => self.out_dir.display().to_string(),
            "output.emit_fields" => self.emit_fields.to_string(),
            "output.emit_plot_data" => self.emit_plot_data.to_string(),
            _ => return None,
        })
    }

    /// Defaults overridden by `(dotted key, value)` pairs; repeated keys
    /// are rejected.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (String, &'a str)>) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (key, v) in pairs {
            if !seen.insert(key.clone()) {
                return Err(Error::Config(format!("key {key:?} given twice")));
            }
            cfg.set(&key, v)?;
        }
        Ok(cfg)
    }

    /// Parses INI text. Keys inside `[section]` become `section.key`;
    /// keys before any section must already be dotted.
    pub fn parse(text: &str) -> Result<Self> {
        let opt = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt)
            .map_err(|e| Error::Config(format!("config syntax: {e}")))?;
        let mut pairs = Vec::new();
        for (section, props) in ini.iter() {
            for (k, v) in props.iter() {
                let key = match section {
                    Some(s) => format!("{s}.{k}"),
                    None => k.to_string(),
                };
                pairs.push((key, v));
            }
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies [`OUT_ENV`] when set and non-empty.
    pub fn with_env(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
            self.out_dir = PathBuf::from(dir);
        }
        self
    }

    /// INI rendering that parses back to the same configuration.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for key in KEYS {
            let (section, name) = key.split_once('.').unwrap_or(("", key));
            if section != current {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{section}]\n"));
                current = section;
            }
            out.push_str(&format!("{name} = {}\n", self.get(key).unwrap_or_default()));
        }
        out
    }

    /// Checks every entry and builds the gas model and profiles.
    pub fn validate(&self) -> Result<Resolved> {
        let bad = |msg: String| Err(Error::Config(msg));
        let gas = GasModel::new(self.gamma)?;
        if !(self.rho_minus.is_finite() && self.rho_minus > 0.0) {
            return bad(format!("background.rho_minus must be positive, got {}", self.rho_minus));
        }
        if !self.mach_minus.is_finite() {
            return bad("background.M_minus must be finite".into());
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return bad(format!("background.kappa must be nonnegative, got {}", self.kappa));
        }
        if !(self.l0.is_finite() && self.l1.is_finite() && self.l0 < self.l1) {
            return bad(format!("nozzle needs L0 < L1, got [{}, {}]", self.l0, self.l1));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("nozzle.sigma must be nonnegative, got {}", self.sigma));
        }
        let wall = WallProfile::parse(self.l0, self.l1, self.sigma, &self.wall)?;
        let orders = validate_wall(&wall);
        if !orders.is_empty() {
            return bad(format!(
                "nozzle.f and its derivatives of order {orders:?} must vanish at L0"
            ));
        }
        let exit = ExitPressureProfile::parse(&self.exit_pressure)?;
        if self.n2 < 8 || self.n2 % 2 != 0 || self.n1_sub < 8 || self.n1_sub % 2 != 0 {
            return bad(format!(
                "grid.n2 and grid.n1_sub must be even and at least 8, got {} and {}",
                self.n2, self.n1_sub
            ));
        }
        if self.n1_sup < 8 {
            return bad(format!("grid.n1_sup must be at least 8, got {}", self.n1_sup));
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("iteration.tol must be positive, got {t}"));
            }
        }
        if self.max_iter == 0 {
            return bad("iteration.max_iter must be at least 1".into());
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return bad(format!("iteration.relaxation must lie in (0, 1], got {}", self.relaxation));
        }
        Ok(Resolved { gas, wall, exit })
    }
}
