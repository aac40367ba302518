use thiserror::Error;

use crate::profiles::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("state outside the gas model: {0}")]
    Domain(String),
    #[error("regime violation: {0}")]
    Regime(String),
    #[error("degenerate shock: pressure jump {jump:e} below {threshold:e}")]
    DegenerateShock { jump: f64, threshold: f64 },
    #[error("total-pressure jump {jump:e} too small to divide by")]
    DivisionHazard { jump: f64 },
    #[error("admissibility has no bracket: target {target} outside [{lo}, {hi}]")]
    NoBracket { target: f64, lo: f64, hi: f64 },
    #[error("wall slope f'({eta}) = {slope:e} vanishes at the shock position")]
    FlatWallAtShock { eta: f64, slope: f64 },
    #[error("degenerate admissibility: every position solves the admissibility equation")]
    DegenerateAdmissibility,
    #[error("CFL violation: h1 = {h1:e} exceeds {limit:e}; use n1 >= {suggested_n1}")]
    Cfl {
        h1: f64,
        limit: f64,
        suggested_n1: usize,
    },
    #[error("elliptic problem not solvable: compatibility defect {defect:e} above {threshold:e}")]
    Solvability { defect: f64, threshold: f64 },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("no endpoint correction root: {0}")]
    EndpointRoot(String),
    #[error("iteration diverged: {0}")]
    Divergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Tags an error with the pipeline stage it came from.
    pub fn at(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, skipping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Regime(_) | Error::DegenerateShock { .. } => 2,
            Error::NoBracket { .. } => 3,
            Error::FlatWallAtShock { .. } => 4,
            Error::DegenerateAdmissibility => 5,
            Error::Divergence(_) => 6,
            Error::Config(_) | Error::Expr(_) => 1,
            _ => 7,
        }
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<Error>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.into().at(stage))
    }
}
