//! Pipelines behind the subcommands. Every command returns an exit code
//! and a report; file output goes to the configured directory.

use std::path::Path;

use crate::background::{solve_background, BackgroundShock};
use crate::cli::config::{Resolved, RunConfig};
use crate::cli::output::{fields_csv, iterations_csv, shock_csv, shock_residual_csv};
use crate::cli::report::Report;
use crate::diagnostics::{diagnose, linearization_suite, ResidualReport};
use crate::error::{Error, Result, StageExt};
use crate::grid::{Field, Grid, S, U1, U2};
use crate::iteration::{
    dotted_approximation, run_fixed_point, to_fixed_domain, Dotted, FixedMap, IterationOptions,
    IterationReport, Setup,
};
use crate::shockfront::{assemble_curve, find_initial_position, ShockFront};
use crate::supersonic::{solve_linear_supersonic, solve_nonlinear_supersonic};

/// Simpson intervals for the exit-pressure mean.
pub const EXIT_SAMPLES: usize = 256;
/// Constant in the shock residual bound `C (sigma^2 + h^2)`.
pub const RH_CONSTANT: f64 = 10.0;
/// Largest accepted deviation of the transported quantities.
pub const CONSTANCY_TOL: f64 = 1e-12;

/// Exit code for failures that have no dedicated code.
pub const EXIT_OTHER: i32 = 7;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: Report,
}

fn background_of(cfg: &RunConfig, r: &Resolved) -> Result<BackgroundShock> {
    solve_background(cfg.rho_minus, cfg.mach_minus, cfg.kappa, r.gas).stage("background")
}

fn push_background(rep: &mut Report, bg: &BackgroundShock) {
    for (side, s) in [("minus", &bg.minus), ("plus", &bg.plus)] {
        rep.push(format!("background.{side}.rho"), s.rho);
        rep.push(format!("background.{side}.u"), s.u);
        rep.push(format!("background.{side}.p"), s.p);
        rep.push(format!("background.{side}.P"), s.total_pressure());
        rep.push(format!("background.{side}.S"), s.state.s);
        rep.push(format!("background.{side}.mach2"), s.mach2);
        rep.push(format!("background.{side}.C"), s.c_factor);
        for (name, beta) in [("beta0", &s.beta0), ("beta1", &s.beta1), ("beta2", &s.beta2)] {
            let v: Vec<String> = beta.iter().map(f64::to_string).collect();
            rep.push(format!("background.{side}.{name}"), v.join(","));
        }
    }
    rep.push("background.B", bg.bernoulli);
    rep.push("background.kappa", bg.kappa);
    rep.push("background.mass_flux", bg.mass_flux);
    rep.push("background.pressure_jump", bg.pressure_jump);
    rep.push("background.total_pressure_jump", bg.total_pressure_jump);
    rep.push("background.K0", bg.k0);
    rep.push("background.K", bg.k);
    rep.push("background.b_u_s", bg.b_u_s);
    rep.push("background.b_s_s", bg.b_s_s);
    rep.push("background.b_u_1", bg.b_u_1);
    rep.push("background.rh_residual", bg.rh_residual());
}

fn failure(mut rep: Report, e: &Error) -> Outcome {
    rep.push("status", "failed");
    rep.push("error", e.to_string().replace('\n', " "));
    let code = e.exit_code();
    rep.push("exit_code", code);
    Outcome { code, report: rep }
}

pub fn cmd_background(cfg: &RunConfig) -> Outcome {
    let mut rep = Report::default();
    let run = || -> Result<BackgroundShock> {
        let r = cfg.validate().stage("config")?;
        let bg = background_of(cfg, &r)?;
        crate::background::classify(&bg.plus.state, bg.gas).stage("downstream regime")?;
        Ok(bg)
    };
    let out = match run() {
        Ok(bg) => {
            push_background(&mut rep, &bg);
            rep.push("status", "ok");
            rep.push("exit_code", 0);
            Outcome { code: 0, report: rep }
        }
        Err(e) => failure(rep, &e),
    };
    let mut out = out;
    out.report.embed_config(cfg);
    out
}

/// Background, admissible position, supersonic fields and the linear
/// downstream approximation.
pub struct Initial {
    pub resolved: Resolved,
    pub background: BackgroundShock,
    pub eta_bar_star: f64,
    pub upstream: Field,
    pub dotted: Dotted,
    pub grid: Grid,
}

pub fn initialise(cfg: &RunConfig) -> Result<Initial> {
    let resolved = cfg.validate().stage("config")?;
    let bg = background_of(cfg, &resolved)?;
    let root = find_initial_position(&bg, &resolved.wall, &resolved.exit, EXIT_SAMPLES)
        .stage("admissibility")?;
    if root.degenerate {
        return Err(Error::DegenerateAdmissibility.at("admissibility"));
    }
    let up_grid = Grid::new(cfg.n1_sup, cfg.n2, cfg.l0, cfg.l1).stage("supersonic")?;
    let upstream = solve_nonlinear_supersonic(&bg, &resolved.wall, &up_grid).stage("supersonic")?;
    let linear = solve_linear_supersonic(&bg, &resolved.wall, &up_grid).stage("supersonic")?;
    let grid = Grid::new(cfg.n1_sub, cfg.n2, root.eta, cfg.l1).stage("linear downstream")?;
    let dotted = dotted_approximation(&bg, &resolved.wall, &resolved.exit, &linear, grid)
        .stage("linear downstream")?;
    Ok(Initial {
        resolved,
        background: bg,
        eta_bar_star: root.eta,
        upstream,
        dotted,
        grid,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn cmd_init(cfg: &RunConfig) -> Outcome {
    let mut rep = Report::default();
    let run = |rep: &mut Report| -> Result<()> {
        let init = initialise(cfg)?;
        let bg = &init.background;
        rep.push("shock.eta_bar_star", init.eta_bar_star);
        rep.push("dotted.compatibility_defect", init.dotted.defect);
        rep.push("dotted.sup", init.dotted.state.fluct.sup(&[U1, U2, S]));
        let slope_sup = init.dotted.state.slope.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        rep.push("dotted.slope_sup", slope_sup);
        if cfg.emit_fields {
            let front = ShockFront::flat(init.eta_bar_star, cfg.n2);
            let map = to_fixed_domain(&front, cfg.l0, cfg.l1)?;
            let down = init.dotted.state.full_field(bg);
            let csv = fields_csv(&init.upstream, Some((&down, &map)), &front.curve, bg.gas)?;
            write(&cfg.out_dir, "dotted_fields.csv", &csv)?;
        }
        Ok(())
    };
    let mut out = match run(&mut rep) {
        Ok(()) => {
            rep.push("status", "ok");
            rep.push("exit_code", 0);
            Outcome { code: 0, report: rep }
        }
        Err(e) => failure(rep, &e),
    };
    out.report.embed_config(cfg);
    let _ = write(&cfg.out_dir, "init_report.txt", &out.report.render());
    out
}

/// Converged or stopped transonic solution with its diagnostics.
#[derive(Debug, Clone)]
pub struct TransonicSolution {
    pub background: BackgroundShock,
    /// Full upstream state, Lagrangian chart.
    pub supersonic: Field,
    /// Full downstream state, shock-fixed chart; `map` places it in `y1`.
    pub subsonic: Field,
    pub map: FixedMap,
    pub front: ShockFront,
    pub residuals: ResidualReport,
    pub iteration: IterationReport,
    pub dotted_defect: f64,
    pub sigma: f64,
}

impl TransonicSolution {
    /// Sup of the downstream velocity and entropy fluctuation.
    pub fn fluctuation_sup(&self) -> f64 {
        let bg = &self.background;
        let refs = [(U1, bg.plus.u), (U2, 0.0), (S, bg.plus.state.s)];
        refs.iter().fold(0.0f64, |a, &(c, r)| {
            self.subsonic.comps[c].iter().fold(a, |a, v| a.max((v - r).abs()))
        })
    }

    /// Shock residual allowance `C (sigma^2 + h^2)` with the coarser spacing.
    pub fn rh_bound(&self) -> f64 {
        let g = &self.subsonic.grid;
        let h = g.h1().max(g.h2()).max(self.supersonic.grid.h1());
        RH_CONSTANT * (self.sigma * self.sigma + h * h)
    }

    /// Named pass/fail checks on the diagnostics.
    pub fn checks(&self) -> Vec<(&'static str, bool)> {
        let r = &self.residuals;
        vec![
            ("converged", self.iteration.converged),
            ("report_well_formed", r.is_well_formed()),
            ("regime_exceptions_zero", r.regime.exceptions() == 0),
            (
                "constancy",
                r.constancy_upstream.max() <= CONSTANCY_TOL
                    && r.constancy_downstream.max() <= CONSTANCY_TOL,
            ),
            ("shock_residual", r.shock.worst() <= self.rh_bound()),
        ]
    }

    pub fn passes(&self) -> bool {
        self.checks().iter().all(|(_, ok)| *ok)
    }
}

/// Full pipeline: initialisation, fixed point, diagnostics.
pub fn solve(cfg: &RunConfig) -> Result<TransonicSolution> {
    let init = initialise(cfg)?;
    let bg = init.background;
    let setup = Setup {
        bg: &bg,
        wall: &init.resolved.wall,
        exit: &init.resolved.exit,
        upstream: &init.upstream,
        grid: init.grid,
    };
    let opts = IterationOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        relaxation: cfg.relaxation,
        ..IterationOptions::default()
    };
    let (state, report) = run_fixed_point(&setup, &init.dotted.state, &opts)?;
    let front = assemble_curve(init.eta_bar_star, state.eta_ddot_star, &state.slope, cfg.l0, cfg.l1)
        .stage("shock curve")?;
    let map = to_fixed_domain(&front, cfg.l0, cfg.l1).stage("shock curve")?;
    let subsonic = state.full_field(&bg);
    let residuals = diagnose(&bg, &init.upstream, &subsonic, &map, &front).stage("diagnostics")?;
    Ok(TransonicSolution {
        background: bg,
        supersonic: init.upstream,
        subsonic,
        map,
        front,
        residuals,
        iteration: report,
        dotted_defect: init.dotted.defect,
        sigma: cfg.sigma,
    })
}

fn push_solution(rep: &mut Report, sol: &TransonicSolution) {
    let it = &sol.iteration;
    let r = &sol.residuals;
    let sigma = sol.sigma;
    let per_sigma = |v: f64| if sigma > 0.0 { v / sigma } else { 0.0 };
    rep.push("shock.eta_bar_star", sol.front.eta_bar_star);
    rep.push("shock.eta_ddot_star", sol.front.eta_ddot_star);
    rep.push("shock.shift_over_sigma", per_sigma(sol.front.eta_ddot_star.abs()));
    rep.push("dotted.compatibility_defect", sol.dotted_defect);
    rep.push("iteration.converged", it.converged);
    rep.push("iteration.count", it.iterations);
    rep.push("iteration.tol", it.tol);
    rep.push("iteration.radius", it.radius);
    rep.push("iteration.final_norm", it.records.last().map_or(0.0, |x| x.update_norm));
    rep.push("iteration.max_ratio", it.max_ratio());
    rep.push("iteration.asymptotic_ratio", it.asymptotic_ratio().unwrap_or(0.0));
    rep.push("fluctuation.sup", sol.fluctuation_sup());
    rep.push("fluctuation.sup_over_sigma", per_sigma(sol.fluctuation_sup()));
    rep.push("fluctuation.weighted_norm", r.weighted_norm);
    for (name, e) in [
        ("upstream", &r.upstream),
        ("downstream", &r.downstream),
        ("downstream_fourth", &r.downstream_fourth),
    ] {
        rep.push(format!("residual.{name}.linf"), format!("{},{}", e.linf[0], e.linf[1]));
        rep.push(format!("residual.{name}.l2"), format!("{},{}", e.l2[0], e.l2[1]));
        rep.push(format!("residual.{name}.core"), format!("{},{}", e.core[0], e.core[1]));
    }
    rep.push("residual.shock.G0", r.shock.max[0]);
    rep.push("residual.shock.G1", r.shock.max[1]);
    rep.push("residual.shock.G2", r.shock.max[2]);
    rep.push("residual.shock.bound", sol.rh_bound());
    rep.push("residual.constancy.upstream", r.constancy_upstream.max());
    rep.push("residual.constancy.downstream", r.constancy_downstream.max());
    rep.push("residual.streamline.upstream", r.streamline_defect[0]);
    rep.push("residual.streamline.downstream", r.streamline_defect[1]);
    rep.push("regime.upstream_nodes", r.regime.upstream_nodes);
    rep.push("regime.downstream_nodes", r.regime.downstream_nodes);
    rep.push("regime.exceptions", r.regime.exceptions());
    for (name, ok) in sol.checks() {
        rep.push(format!("check.{name}"), if ok { "pass" } else { "fail" });
    }
}

fn emit(cfg: &RunConfig, sol: &TransonicSolution) -> Result<()> {
    let dir = &cfg.out_dir;
    let n2 = sol.subsonic.grid.n2;
    write(dir, "shock.csv", &shock_csv(&sol.front, n2))?;
    if cfg.emit_fields {
        let csv = fields_csv(
            &sol.supersonic,
            Some((&sol.subsonic, &sol.map)),
            &sol.front.curve,
            sol.background.gas,
        )?;
        write(dir, "fields.csv", &csv)?;
    }
    if cfg.emit_plot_data {
        write(dir, "shock_residual.csv", &shock_residual_csv(&sol.residuals.shock, n2))?;
        write(dir, "iterations.csv", &iterations_csv(&sol.iteration))?;
    }
    Ok(())
}

/// Runs the pipeline and writes artifacts. Exit 0 needs convergence and
/// passing diagnostics; a run that stops without converging exits as a
/// divergence.
pub fn cmd_solve(cfg: &RunConfig) -> (Outcome, Option<TransonicSolution>) {
    let mut rep = Report::default();
    let (mut out, sol) = match solve(cfg).and_then(|s| emit(cfg, &s).map(|_| s)) {
        Ok(sol) => {
            push_solution(&mut rep, &sol);
            let code = if !sol.iteration.converged {
                Error::Divergence(String::new()).exit_code()
            } else if sol.passes() {
                0
            } else {
                EXIT_OTHER
            };
            let status = match code {
                0 => "converged",
                c if c == EXIT_OTHER => "diagnostics_failed",
                _ => "not_converged",
            };
            rep.push("status", status);
            rep.push("exit_code", code);
            (Outcome { code, report: rep }, Some(sol))
        }
        Err(e) => (failure(rep, &e), None),
    };
    out.report.embed_config(cfg);
    if let Err(e) = write(&cfg.out_dir, "report.txt", &out.report.render()) {
        out = failure(out.report, &e);
    }
    (out, sol)
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub code: i32,
    pub iterations: usize,
    pub norm_over_sigma: f64,
    pub shift_over_sigma: f64,
    pub asymptotic_ratio: f64,
    pub ratio_over_sigma: f64,
    pub shock_residual: f64,
}

pub const SWEEP_HEADER: &str =
    "sigma,exit_code,iterations,norm_over_sigma,shift_over_sigma,asymptotic_ratio,ratio_over_sigma,shock_residual";

/// Runs each amplitude in its own subdirectory, concurrently. Failures are
/// recorded in the table and do not stop the others.
pub fn cmd_sweep(cfg: &RunConfig, sigmas: &[f64]) -> (Outcome, Vec<SweepRow>) {
    let mut rep = Report::default();
    if sigmas.is_empty() {
        let e = Error::Config("sweep needs at least one sigma".into());
        return (failure(rep, &e), Vec::new());
    }
    let rows: Vec<SweepRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = sigmas
            .iter()
            .map(|&sigma| {
                let mut run = cfg.clone();
                run.sigma = sigma;
                run.out_dir = cfg.out_dir.join(format!("sigma_{sigma}"));
                scope.spawn(move || {
                    let (out, sol) = cmd_solve(&run);
                    let nan = f64::NAN;
                    match sol {
                        Some(s) => {
                            let ratio = s.iteration.asymptotic_ratio().unwrap_or(nan);
                            SweepRow {
                                sigma,
                                code: out.code,
                                iterations: s.iteration.iterations,
                                norm_over_sigma: s.fluctuation_sup() / sigma,
                                shift_over_sigma: s.front.eta_ddot_star.abs() / sigma,
                                asymptotic_ratio: ratio,
                                ratio_over_sigma: ratio / sigma,
                                shock_residual: s.residuals.shock.worst(),
                            }
                        }
                        None => SweepRow {
                            sigma,
                            code: out.code,
                            iterations: 0,
                            norm_over_sigma: nan,
                            shift_over_sigma: nan,
                            asymptotic_ratio: nan,
                            ratio_over_sigma: nan,
                            shock_residual: nan,
                        },
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut table = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.sigma,
            r.code,
            r.iterations,
            r.norm_over_sigma,
            r.shift_over_sigma,
            r.asymptotic_ratio,
            r.ratio_over_sigma,
            r.shock_residual
        ));
        rep.push(format!("sweep.{}.exit_code", r.sigma), r.code);
    }
    let code = rows.iter().map(|r| r.code).find(|&c| c != 0).unwrap_or(0);
    rep.push("status", if code == 0 { "ok" } else { "failures" });
    rep.push("exit_code", code);
    rep.embed_config(cfg);
    let mut out = Outcome { code, report: rep };
    let written = write(&cfg.out_dir, "sweep.csv", &table)
        .and_then(|_| write(&cfg.out_dir, "sweep_report.txt", &out.report.render()));
    if let Err(e) = written {
        out = failure(out.report, &e);
    }
    (out, rows)
}

/// Background oracle and the linearisation audit.
pub fn cmd_verify(cfg: &RunConfig) -> Outcome {
    let mut rep = Report::default();
    let run = |rep: &mut Report| -> Result<bool> {
        let r = cfg.validate().stage("config")?;
        let bg = background_of(cfg, &r)?;
        let rh = bg.rh_residual();
        rep.push("background.rh_residual", rh);
        let mut ok = rh < 1e-12;
        for row in linearization_suite(&bg) {
            let slope = row.slope.map_or("exact".to_string(), |s| s.to_string());
            rep.push(
                format!("linearization.{}", row.name),
                format!("{} {slope}", if row.pass { "pass" } else { "fail" }),
            );
            ok &= row.pass;
        }
        Ok(ok)
    };
    let mut out = match run(&mut rep) {
        Ok(ok) => {
            let code = if ok { 0 } else { EXIT_OTHER };
            rep.push("status", if ok { "pass" } else { "fail" });
            rep.push("exit_code", code);
            Outcome { code, report: rep }
        }
        Err(e) => failure(rep, &e),
    };
    out.report.embed_config(cfg);
    out
}
