//! Shock-fitting solver for steady super-Alfvenic transonic shocks of
//! aligned-field MHD in almost-flat two-dimensional nozzles.
//!
//! The pipeline runs in Lagrangian (stream-function) coordinates:
//! background shock, admissible shock position, linear initial
//! approximation, then a fixed-point iteration on the fluctuation and the
//! shock slope. See the README for a walkthrough.

pub mod background;
pub mod cli;
pub mod diagnostics;
pub mod elliptic;
pub mod grid;
pub mod iteration;
pub mod supersonic;
pub mod error;
pub mod profiles;
pub mod shockfront;

pub use error::{Error, Result};
