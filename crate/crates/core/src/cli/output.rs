//! CSV emission of fields, the shock curve and per-iteration data.

use std::fmt::Write;

use crate::background::{closure, FlowState, GasModel};
use crate::error::Result;
use crate::grid::Field;
use crate::iteration::{FixedMap, IterationReport};
use crate::diagnostics::RhResidual;
use crate::shockfront::ShockFront;

pub const FIELD_HEADER: &str = "y1,y2,u1,u2,S,B,kappa,rho,p,P";

fn row(out: &mut String, y1: f64, y2: f64, st: &FlowState, gas: GasModel) -> Result<()> {
    let th = closure(st, gas)?;
    let _ = writeln!(
        out,
        "{y1},{y2},{},{},{},{},{},{},{},{}",
        st.u1, st.u2, st.s, st.b, st.kappa, th.rho, th.p, th.big_p
    );
    Ok(())
}

/// Both regions in Lagrangian coordinates, row by row in `y2` and by `y1`
/// within a row: upstream nodes strictly ahead of the shock, then every
/// downstream node placed at its `y1` through the fixed-domain map.
pub fn fields_csv(
    upstream: &Field,
    downstream: Option<(&Field, &FixedMap)>,
    curve: &[f64],
    gas: GasModel,
) -> Result<String> {
    let mut out = String::from(FIELD_HEADER);
    out.push('\n');
    let gu = &upstream.grid;
    for j in 0..=gu.n2 {
        for i in 0..=gu.n1 {
            if gu.y1(i) < curve[j] {
                row(&mut out, gu.y1(i), gu.y2(j), &upstream.state(i, j), gas)?;
            }
        }
        if let Some((down, map)) = downstream {
            let gd = &down.grid;
            for i in 0..=gd.n1 {
                row(&mut out, map.y1(gd.y1(i), j), gd.y2(j), &down.state(i, j), gas)?;
            }
        }
    }
    Ok(out)
}

pub fn shock_csv(front: &ShockFront, n2: usize) -> String {
    let mut out = String::from("y2,eta,slope\n");
    for (j, (e, s)) in front.curve.iter().zip(&front.slope).enumerate() {
        let _ = writeln!(out, "{},{e},{s}", j as f64 / n2 as f64);
    }
    out
}

pub fn shock_residual_csv(rh: &RhResidual, n2: usize) -> String {
    let mut out = String::from("y2,G0,G1,G2\n");
    for (j, g) in rh.pointwise.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", j as f64 / n2 as f64, g[0], g[1], g[2]);
    }
    out
}

pub fn iterations_csv(report: &IterationReport) -> String {
    let mut out = String::from("k,update_norm,ratio,solvability,eta_ddot_star,neighborhood\n");
    for (k, r) in report.records.iter().enumerate() {
        let ratio = r.ratio.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{ratio},{},{},{}",
            k + 1,
            r.update_norm,
            r.solvability,
            r.eta_ddot_star,
            r.neighborhood
        );
    }
    out
}
