//! Acceptance criteria. Each criterion prints one PASS or FAIL line with its
//! measured numbers. The amplitude sweeps are shared between criteria.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mhdshock::background::{solve_background, GasModel};
use mhdshock::cli::commands::{cmd_solve, initialise, solve, TransonicSolution, RH_CONSTANT};
use mhdshock::cli::RunConfig;
use mhdshock::diagnostics::linearization_suite;
use mhdshock::elliptic::{solve_velocity, EllipticProblem};
use mhdshock::grid::{Grid, U1};
use mhdshock::iteration::{run_fixed_point, solvability_at, IterationOptions, Setup};
use mhdshock::profiles::{simpson_samples, ExitPressureProfile, WallProfile};
use mhdshock::shockfront::find_initial_position;
use mhdshock::supersonic::solve_linear_supersonic;

type Verdict = Result<String, String>;

fn gas() -> GasModel {
    GasModel::new(1.4).unwrap()
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn within(values: &[f64], rel: f64) -> bool {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().all(|v| ((v - mean) / mean).abs() <= rel)
}

fn run(sigma: f64, n2: usize) -> TransonicSolution {
    let cfg = RunConfig {
        sigma,
        n2,
        n1_sub: 2 * n2,
        n1_sup: 4 * n2,
        ..RunConfig::default()
    };
    solve(&cfg).unwrap()
}

fn c1_background() -> Verdict {
    let mut best = Duration::MAX;
    let mut bg = None;
    for _ in 0..20 {
        let t = Instant::now();
        let b = solve_background(1.0, 2.0, 0.0, gas()).unwrap();
        best = best.min(t.elapsed());
        bg = Some(b);
    }
    let bg = bg.unwrap();
    let p_ratio = bg.plus.p / bg.minus.p;
    let r_ratio = bg.plus.rho / bg.minus.rho;
    let err = (p_ratio - 4.5)
        .abs()
        .max((r_ratio - 8.0 / 3.0).abs())
        .max((bg.plus.mach2 - 1.0 / 3.0).abs());
    let db = (bg.plus.state.b - bg.minus.state.b).abs();
    let rh = bg.rh_residual();
    check(
        err < 1e-10 && rh < 1e-12 && db < 1e-12 && best < Duration::from_millis(1),
        format!("ratio error {err:.1e}, RH {rh:.1e}, [B] {db:.1e}, {best:?}"),
    )
}

fn c2_linearization() -> Verdict {
    let bg = solve_background(1.0, 2.0, 0.3, gas()).unwrap();
    let table = linearization_suite(&bg);
    let failed: Vec<&str> = table.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    let slopes: Vec<f64> = table.iter().filter_map(|r| r.slope).collect();
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    check(
        failed.is_empty(),
        format!(
            "{} coefficients, slopes in [{lo:.3}, {hi:.3}], {} exact, failed {failed:?}",
            table.len(),
            table.len() - slopes.len()
        ),
    )
}

fn c3_mass_balance() -> Verdict {
    let t = Instant::now();
    let bg = solve_background(1.0, 2.0, 0.3, gas()).unwrap();
    let wall = WallProfile::parse(0.0, 1.0, 0.01, "x^4").unwrap();
    let scale = (1.0 - bg.minus.mach2) / bg.mass_flux;
    let errors: Vec<f64> = [(64, 32), (128, 64), (256, 128)]
        .iter()
        .map(|&(n1, n2)| {
            let g = Grid::new(n1, n2, 0.0, 1.0).unwrap();
            let f = solve_linear_supersonic(&bg, &wall, &g).unwrap();
            (0..=n1)
                .map(|i| {
                    let lhs = scale * simpson_samples(&f.column(U1, i), g.h2());
                    let rhs = -wall.sigma * bg.minus.u * wall.f(g.y1(i)).unwrap();
                    (lhs - rhs).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let el = t.elapsed();
    let ord = order(&errors);
    check(
        ord.iter().all(|o| (o - 2.0).abs() <= 0.2) && el < Duration::from_secs(5),
        format!("errors {}, orders {ord:.3?}, {el:.2?}", sci(&errors)),
    )
}

fn c4_elliptic_mms() -> Verdict {
    let t = Instant::now();
    let bg = solve_background(1.0, 2.0, 0.3, gas()).unwrap();
    let pi = std::f64::consts::PI;
    let v1 = |x: f64, y: f64| (0.5 * x).exp() * (pi * y).cos();
    let v2 = |x: f64, y: f64| 0.5 * (pi * x).sin() * (pi * y).sin() + x * y;
    let d1v1 = |x: f64, y: f64| 0.5 * v1(x, y);
    let d2v1 = |x: f64, y: f64| -pi * (0.5 * x).exp() * (pi * y).sin();
    let d1v2 = |x: f64, y: f64| 0.5 * pi * (pi * x).cos() * (pi * y).sin() + y;
    let d2v2 = |x: f64, y: f64| 0.5 * pi * (pi * x).sin() * (pi * y).cos() + x;
    let errors: Vec<f64> = [(32, 16), (64, 32), (128, 64)]
        .iter()
        .map(|&(n1, n2)| {
            let g = Grid::new(n1, n2, 0.5, 1.0).unwrap();
            let mut p = EllipticProblem::new(&bg, g);
            let t1 = p.a1 * p.mass_flux;
            for j in 0..=n2 {
                for i in 0..=n1 {
                    let (x, y) = (g.y1(i), g.y2(j));
                    let k = g.idx(i, j);
                    p.div_source[k] = p.div_coeff * d1v1(x, y) + p.mass_flux * d2v2(x, y);
                    p.curl_source[k] = t1 * d1v2(x, y) - p.cross * d2v1(x, y);
                }
            }
            p.left = (0..=n2).map(|j| v1(g.y1(0), g.y2(j))).collect();
            p.right = (0..=n2).map(|j| v1(g.y1(n1), g.y2(j))).collect();
            p.bottom = (0..=n1).map(|i| v2(g.y1(i), 0.0)).collect();
            p.top = (0..=n1).map(|i| v2(g.y1(i), 1.0)).collect();
            p.defect_rel_tol = 1e-3;
            let sol = solve_velocity(&p).unwrap();
            let mut e = 0.0f64;
            for j in 0..=n2 {
                for i in 0..=n1 {
                    let (x, y) = (g.y1(i), g.y2(j));
                    let k = g.idx(i, j);
                    e = e.max((sol.u1[k] - v1(x, y)).abs()).max((sol.u2[k] - v2(x, y)).abs());
                }
            }
            e
        })
        .collect();
    let el = t.elapsed();
    let ord = order(&errors);
    check(
        ord.iter().all(|o| (o - 2.0).abs() <= 0.2) && el < Duration::from_secs(10),
        format!("errors {}, orders {ord:.3?}, {el:.2?}", sci(&errors)),
    )
}

fn c5_admissibility() -> Verdict {
    let bg = solve_background(1.0, 2.0, 0.3, gas()).unwrap();
    let wall = WallProfile::parse(0.0, 1.0, 0.01, "x^4").unwrap();
    let root = find_initial_position(&bg, &wall, &ExitPressureProfile::zero(), 256).unwrap();
    let closed = (bg.plus.u / bg.k).powf(0.25);
    let dev = (root.eta - closed).abs();
    let base_exit = "0.05*(x - 0.3)";
    let base = find_initial_position(&bg, &wall, &ExitPressureProfile::parse(base_exit).unwrap(), 256)
        .unwrap()
        .eta;
    let scaled: Vec<f64> = ["3", "0.25", "16"]
        .iter()
        .map(|t| {
            let w = WallProfile::parse(0.0, 1.0, 0.01, &format!("{t}*x^4")).unwrap();
            let p = ExitPressureProfile::parse(&format!("{t}*({base_exit})")).unwrap();
            find_initial_position(&bg, &w, &p, 256).unwrap().eta
        })
        .collect();
    let spread = scaled.iter().map(|e| (e - base).abs()).fold(0.0, f64::max);
    check(
        dev < 1e-8 && spread < 1e-12,
        format!(
            "eta {:.13}, closed form {closed:.13}, |diff| {dev:.1e}, scaled-data spread {spread:.1e}",
            root.eta
        ),
    )
}

fn c6_euler() -> Verdict {
    let bg = solve_background(1.0, 2.0, 0.0, gas()).unwrap();
    let g = 1.4;
    let m2 = bg.plus.mach2;
    let k0 = 1.0 - m2;
    let k = ((1.0 - m2) / (g * m2) + 1.0) * bg.plus.u * bg.pressure_jump / bg.plus.p;
    let (d0, d) = ((bg.k0 - k0).abs(), (bg.k - k).abs());
    check(d0 < 1e-13 && d < 1e-13, format!("|K0 diff| {d0:.1e}, |K diff| {d:.1e}"))
}

fn c7_solvability_slope() -> Verdict {
    let sigma = 0.01;
    let cfg = RunConfig {
        sigma,
        n2: 64,
        n1_sub: 128,
        n1_sup: 256,
        ..RunConfig::default()
    };
    let init = initialise(&cfg).unwrap();
    let setup = Setup {
        bg: &init.background,
        wall: &init.resolved.wall,
        exit: &init.resolved.exit,
        upstream: &init.upstream,
        grid: init.grid,
    };
    let (state, _) = run_fixed_point(&setup, &init.dotted.state, &IterationOptions::default()).unwrap();
    let x = state.eta_ddot_star;
    let d = 1e-4;
    let fd = (solvability_at(&state, &setup, x + d).unwrap() - solvability_at(&state, &setup, x - d).unwrap())
        / (2.0 * d);
    let want = -sigma * init.background.k * init.resolved.wall.fp(init.eta_bar_star).unwrap();
    let rel = (fd / want - 1.0).abs();
    check(rel <= 0.1, format!("dI/d(eta_ddot) {fd:.6e}, predicted {want:.6e}, rel {rel:.3}"))
}

struct Sweep {
    runs: Vec<(f64, TransonicSolution)>,
}

fn c8_contraction(sw: &Sweep, elapsed: Duration) -> Verdict {
    let r1 = &sw.runs[1].1;
    let r2 = &sw.runs[2].1;
    let it = &r1.iteration;
    let tol_ok = (it.tol - 1e-10 * 0.01).abs() < 1e-20;
    let (a1, a2) = (it.asymptotic_ratio().unwrap(), r2.iteration.asymptotic_ratio().unwrap());
    let halving = a2 / a1;
    check(
        it.converged
            && tol_ok
            && it.iterations <= 20
            && it.max_ratio() < 0.5
            && (halving - 0.5).abs() <= 0.2
            && elapsed < Duration::from_secs(60),
        format!(
            "{} iterations, max ratio {:.3}, asymptotic {a1:.4} -> {a2:.4} (factor {halving:.3}), {elapsed:.2?}",
            it.iterations,
            it.max_ratio()
        ),
    )
}

fn c9_scaling(sw: &Sweep) -> Verdict {
    let norm: Vec<f64> = sw.runs.iter().map(|(s, r)| r.fluctuation_sup() / s).collect();
    let shift: Vec<f64> = sw.runs.iter().map(|(s, r)| r.front.eta_ddot_star.abs() / s).collect();
    check(
        within(&norm, 0.2) && within(&shift, 0.2),
        format!("norm/sigma {norm:.4?}, shift/sigma {shift:.4?}"),
    )
}

fn c10_shock_residual(coarse: &Sweep, fine: &Sweep) -> Verdict {
    let bounded = coarse
        .runs
        .iter()
        .chain(&fine.runs)
        .all(|(_, r)| r.residuals.shock.worst() <= r.rh_bound());
    let res: Vec<f64> = fine.runs.iter().map(|(_, r)| r.residuals.shock.worst()).collect();
    let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    check(
        bounded && ratios.iter().all(|q| (q - 4.0).abs() <= 1.6),
        format!("C = {RH_CONSTANT}, fine-grid residuals {}, halving ratios {ratios:.3?}", sci(&res)),
    )
}

fn c11_regime(sweeps: &[&Sweep]) -> Verdict {
    let mut nodes = 0;
    let mut exceptions = 0;
    for (_, r) in sweeps.iter().flat_map(|s| &s.runs) {
        nodes += r.residuals.regime.upstream_nodes + r.residuals.regime.downstream_nodes;
        exceptions += r.residuals.regime.exceptions();
    }
    check(exceptions == 0, format!("{nodes} nodes classified, {exceptions} exceptions"))
}

fn c12_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let files = ["fields.csv", "shock.csv"];
    let mut outputs = Vec::new();
    for k in 0..2 {
        let cfg = RunConfig {
            out_dir: dir.path().join(format!("run{k}")),
            ..RunConfig::default()
        };
        let (out, _) = cmd_solve(&cfg);
        if out.code != 0 {
            return Err(format!("run {k} exited with {}", out.code));
        }
        outputs.push(
            files
                .iter()
                .map(|f| std::fs::read(cfg.out_dir.join(f)).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    let bytes: usize = outputs[0].iter().map(Vec::len).sum();
    check(outputs[0] == outputs[1], format!("{bytes} bytes compared"))
}

struct Runs {
    coarse: Sweep,
    fine: Sweep,
    single: Duration,
}

fn runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        let t = Instant::now();
        let _ = run(0.01, 64);
        let single = t.elapsed();
        let sweep = |n2| Sweep {
            runs: [0.02, 0.01, 0.005].iter().map(|&s| (s, run(s, n2))).collect(),
        };
        Runs {
            coarse: sweep(64),
            fine: sweep(128),
            single,
        }
    })
}

fn report(k: usize, name: &str, v: Verdict) {
    match v {
        Ok(d) => println!("criterion {k:>2} PASS {name}: {d}"),
        Err(d) => {
            println!("criterion {k:>2} FAIL {name}: {d}");
            panic!("criterion {k} failed: {d}");
        }
    }
}

#[test]
fn criterion_01_background_oracle() {
    report(1, "background oracle", c1_background());
}

#[test]
fn criterion_02_linearization_suite() {
    report(2, "linearization suite", c2_linearization());
}

#[test]
fn criterion_03_integrated_mass_balance() {
    report(3, "integrated mass balance", c3_mass_balance());
}

#[test]
fn criterion_04_elliptic_manufactured_solution() {
    report(4, "elliptic manufactured solution", c4_elliptic_mms());
}

#[test]
fn criterion_05_admissible_position() {
    report(5, "admissible position", c5_admissibility());
}

#[test]
fn criterion_06_euler_reduction() {
    report(6, "Euler reduction", c6_euler());
}

#[test]
fn criterion_07_solvability_derivative() {
    report(7, "solvability derivative", c7_solvability_slope());
}

#[test]
fn criterion_08_contraction() {
    let r = runs();
    report(8, "contraction", c8_contraction(&r.coarse, r.single));
}

#[test]
fn criterion_09_amplitude_scaling() {
    report(9, "amplitude scaling", c9_scaling(&runs().coarse));
}

#[test]
fn criterion_10_shock_consistency() {
    let r = runs();
    report(10, "shock consistency", c10_shock_residual(&r.coarse, &r.fine));
}

#[test]
fn criterion_11_regime_map() {
    let r = runs();
    report(11, "regime map", c11_regime(&[&r.coarse, &r.fine]));
}

#[test]
fn criterion_12_determinism() {
    report(12, "determinism", c12_determinism());
}
