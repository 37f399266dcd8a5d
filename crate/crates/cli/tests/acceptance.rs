//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use dnsde_cli::experiments::{run, with_threads, Experiment, Outcome};
use dnsde_cli::presets::preset;
use dnsde_core::diagnostics::{convergence_joint, convergence_lambda, dissipation_defect, graph_calculus};
use dnsde_core::graph1d::{Breakpoint, GraphKind, ScalarGraph};
use dnsde_core::noise::RngStream;
use dnsde_core::operators::{NemytskiiA, NewtonConfig, NonlocalKernel};
use dnsde_core::solver::{simulate_path, Scheme, SolverConfig};
use dnsde_core::space::{sine_profile, GridFunction, Mesh1D};
use nalgebra::DMatrix;

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn builtin_graphs() -> Vec<(&'static str, ScalarGraph)> {
    let kinds = [
        ("identity", GraphKind::Identity),
        ("scaled_identity", GraphKind::ScaledIdentity { c: 2.0 }),
        ("sign", GraphKind::Sign),
        ("stefan", GraphKind::Stefan),
        ("stefan_smooth", GraphKind::StefanSmooth { kappa: 1.0 }),
        (
            "piecewise_linear",
            GraphKind::PiecewiseLinear {
                breakpoints: vec![
                    Breakpoint { at: -1.0, left: -3.0, right: -2.0 },
                    Breakpoint { at: 0.0, left: 0.0, right: 0.0 },
                    Breakpoint { at: 2.0, left: 1.0, right: 4.0 },
                ],
            },
        ),
        (
            "sum_with_identity",
            GraphKind::SumWithIdentity {
                inner: Box::new(GraphKind::Sign),
                c: 0.5,
            },
        ),
    ];
    kinds
        .into_iter()
        .map(|(name, k)| (name, ScalarGraph::from_kind(k).expect("built-in graph")))
        .collect()
}

/// `sup_r (rv − f(r))` for concave `r ↦ rv − f(r)`: coarse scan then golden
/// section on the bracketing cells.
fn golden_conjugate(f: impl Fn(f64) -> f64, v: f64) -> f64 {
    let half = 20.0 * (1.0 + v.abs());
    let cells = 400;
    let g = |r: f64| r * v - f(r);
    let step = 2.0 * half / cells as f64;
    let best = (0..=cells)
        .map(|k| -half + k as f64 * step)
        .max_by(|a, b| g(*a).total_cmp(&g(*b)))
        .expect("nonempty scan");
    let (mut a, mut b) = (best - step, best + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..100 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
    }
    g(0.5 * (a + b)).max(gc).max(gd)
}

fn criterion_1() -> Verdict {
    let points = 10_000;
    let eps = 0.1;
    let mut worst_moreau = 0.0_f64;
    let mut failed = Vec::new();
    for (name, g) in builtin_graphs() {
        for c in graph_calculus(&g, eps, points, points, 11).map_err(|e| e.to_string())? {
            if !c.pass {
                failed.push(format!("{name}/{} = {:e}", c.name, c.measured));
            }
        }
        let mut rng = RngStream::new(12, 0);
        for x in rng.uniforms(points, -10.0, 10.0) {
            let v = g.yosida(eps, x).map_err(|e| e.to_string())?;
            let oracle = golden_conjugate(|r| g.moreau_envelope(eps, r).expect("envelope"), v);
            let d = (oracle - g.moreau_conjugate(eps, v)).abs();
            worst_moreau = worst_moreau.max(d);
        }
    }
    ensure(
        failed.is_empty() && worst_moreau <= 1e-8,
        format!(
            "7 graphs x 10^4 points; independent Moreau oracle max deviation {worst_moreau:.2e} (<= 1e-8){}",
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

fn riesz_dense(mesh: Mesh1D) -> DMatrix<f64> {
    let n = mesh.n();
    let h2 = mesh.h() * mesh.h();
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 / h2,
        1 => -1.0 / h2,
        _ => 0.0,
    })
}

/// `‖M⁻¹‖` for symmetric positive definite `M`.
fn inverse_norm(m: DMatrix<f64>) -> f64 {
    1.0 / m.symmetric_eigen().eigenvalues.min()
}

fn criterion_2() -> Verdict {
    let mesh = Mesh1D::new(64).unwrap();
    let r = riesz_dense(mesh);
    let operators = [
        ("stefan_smooth", NemytskiiA::Pointwise(ScalarGraph::stefan_smooth(1.0).unwrap())),
        ("piecewise_linear", NemytskiiA::Pointwise(builtin_graphs()[5].1.clone())),
        ("nonlocal", NemytskiiA::NonlocalKernel(NonlocalKernel::gaussian(mesh, 1.0, 0.5, 0.1).unwrap())),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (name, a) in operators {
        let bound = 2.0 / a.c_a() + 1e-8;
        let mut rng = RngStream::new(21, 0);
        let (mut worst, mut agreement) = (0.0_f64, 0.0_f64);
        for _ in 0..100 {
            let p = rng.uniforms(3, 0.0, 1.0);
            let lambda = 10f64.powf(-6.0 * p[0]);
            let eps = (0.001 + 0.998 * p[1]) / a.c_a();
            let u = GridFunction::new(mesh, rng.uniforms(mesh.n(), -5.0 * p[2], 5.0 * p[2])).unwrap();
            let estimate = a.inverse_jacobian_norm(lambda, eps, &u).map_err(|e| e.to_string())?;
            let da = match &a {
                NemytskiiA::Pointwise(g) => DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    mesh.n(),
                    u.values().iter().map(|&x| g.yosida_derivative(eps, x).unwrap()),
                )),
                NemytskiiA::NonlocalKernel(k) => {
                    let inv = k.matrix().clone().try_inverse().expect("invertible");
                    (inv + DMatrix::identity(mesh.n(), mesh.n()) * eps).try_inverse().expect("invertible")
                }
            };
            let exact = inverse_norm(&r * lambda + da);
            worst = worst.max(estimate.max(exact));
            agreement = agreement.max((estimate - exact).abs() / exact);
        }
        ok &= worst <= bound && agreement <= 1e-3;
        details.push(format!("{name}: max {worst:.4} (<= {bound:.4}), estimate vs dense eigen {agreement:.1e} (<= 1e-3)"));
    }
    ensure(ok, format!("100 triples each; {}", details.join("; ")))
}

fn criterion_3() -> Verdict {
    let mesh = Mesh1D::new(64).unwrap();
    let y = sine_profile(mesh, 1, 2.0).into_dual();
    let lambdas = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let eps = 0.1;
    let newton = NewtonConfig::default();
    let a = NemytskiiA::Pointwise(ScalarGraph::stefan_smooth(1.0).unwrap());
    let pts = convergence_lambda(&a, eps, &y, &lambdas, &newton).map_err(|e| e.to_string())?;
    let mono = |s: Vec<f64>| s.windows(2).all(|w| w[1] <= w[0]);
    let e1_ok = mono(pts.iter().map(|p| p.e1).collect());
    let e2_ok = mono(pts.iter().map(|p| p.e2).collect());
    let e2_final = pts.last().unwrap().e2;

    // A = I: A^ε = I/(1+ε), x_λ = 2v₁/(λμ₁ + 1/(1+ε)), ‖v₁‖_h = 1/√2.
    let id = NemytskiiA::Pointwise(ScalarGraph::identity());
    let id_pts = convergence_lambda(&id, eps, &y, &lambdas, &newton).map_err(|e| e.to_string())?;
    let mu = mesh.eigenvalue(1);
    let v1 = mesh.eigenvector(1);
    let mut closed = 0.0_f64;
    for (p, &lambda) in id_pts.iter().zip(&lambdas) {
        let c = 2.0 / (lambda * mu + 1.0 / (1.0 + eps));
        let e1 = (c - 2.0 * (1.0 + eps)).abs() / 2f64.sqrt();
        let e2 = (c / (1.0 + eps) - 2.0).abs() / 2f64.sqrt();
        closed = closed.max((p.e1 - e1).abs()).max((p.e2 - e2).abs());
        let x = id.invert_a_lambda_eps(lambda, eps, &y, &newton, None).map_err(|e| e.to_string())?;
        let diff = &x - &v1.scaled(c);
        closed = closed.max(diff.sup_norm());
    }
    ensure(
        e1_ok && e2_ok && e2_final <= 1e-4 && closed <= 1e-10,
        format!(
            "e1 nonincreasing {e1_ok}, e2 nonincreasing {e2_ok}, e2(1e-6) = {e2_final:.3e} (<= 1e-4), identity closed form {closed:.1e} (<= 1e-10)"
        ),
    )
}

fn criterion_4() -> Verdict {
    let mesh = Mesh1D::new(64).unwrap();
    let y = sine_profile(mesh, 1, 2.0).into_dual();
    let a = NemytskiiA::Pointwise(ScalarGraph::stefan_smooth(1.0).unwrap());
    let lambdas = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let pts = convergence_joint(&a, &y, &lambdas, &NewtonConfig::default()).map_err(|e| e.to_string())?;
    let mono = pts.windows(2).all(|w| w[1].gap <= w[0].gap);
    let last = pts.last().unwrap();
    ensure(
        mono && last.gap <= 1e-4 && last.v_norm_gap <= 1e-3,
        format!(
            "gap nonincreasing {mono}, final gap {:.3e} (<= 1e-4), V-norm gap {:.3e} (<= 1e-3)",
            last.gap, last.v_norm_gap
        ),
    )
}

fn run_preset(exp: Experiment, name: &str) -> Result<Outcome, String> {
    let cfg = preset(name).map_err(|e| e.to_string())?;
    run(exp, &cfg).map_err(|e| e.to_string())
}

fn verdict_line(o: &Outcome) -> String {
    o.verdict
        .checks
        .iter()
        .map(|c| format!("{} {:.3e}{}", c.name, c.measured, if c.pass { "" } else { " FAIL" }))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_5() -> Verdict {
    let mut cfg = preset("stefan").map_err(|e| e.to_string())?;
    cfg.paths = 32;
    let o = run(Experiment::ItoCheck, &cfg).map_err(|e| e.to_string())?;
    let csv = o.csv().next().map(|a| a.contents.clone()).unwrap_or_default();
    let rms: Vec<String> = csv.lines().skip(2).map(|l| l.split(',').nth(1).unwrap_or("").to_string()).collect();
    ensure(
        o.verdict.passed() && o.verdict.checks.len() == 2,
        format!("M = 32, RMS at dt = 4e-4/2e-4/1e-4: {}; {}", rms.join(" / "), verdict_line(&o)),
    )
}

fn criterion_6() -> Verdict {
    let o = run_preset(Experiment::LedgerSweep, "stefan")?;
    ensure(o.verdict.passed(), verdict_line(&o))
}

fn criterion_7() -> Verdict {
    let o = run_preset(Experiment::UniquenessCheck, "stefan")?;
    ensure(o.verdict.passed(), verdict_line(&o))
}

fn criterion_8() -> Verdict {
    let o = run_preset(Experiment::HeatOracle, "stefan")?;
    // Backward Euler on the first eigenmode is exact in closed form:
    // uᴺ = (1 + dt·μ₁)^{−N} v₁.
    let mesh = Mesh1D::new(128).unwrap();
    let mu = mesh.eigenvalue(1);
    let t_end: f64 = 0.05;
    let closed = |dt: f64| {
        let steps = (t_end / dt).round() as i32;
        ((1.0 + dt * mu).powi(-steps) - (-mu * t_end).exp()).abs() / 2f64.sqrt()
    };
    let (e1, e2) = (closed(1e-3), closed(5e-4));
    let measured = o.verdict.checks[0].measured;
    let agree = (measured - e1).abs() <= 1e-10 * e1;
    ensure(
        o.verdict.passed() && agree && e1 <= 5e-3 && e1 / e2 >= 1.8,
        format!("{}; closed-form error {e1:.6e}, ratio {:.4}, solver agrees {agree}", verdict_line(&o), e1 / e2),
    )
}

fn criterion_9() -> Verdict {
    let cfg = preset("stefan").map_err(|e| e.to_string())?;
    let built = cfg.build().map_err(|e| e.to_string())?;
    let problem = built.problem.deterministic();
    let mut details = Vec::new();
    let mut ok = true;
    for (scheme, dt) in [
        (Scheme::ExplicitRegularized, 4e-5),
        (Scheme::SemiImplicitRegularized, 2.5e-4),
        (Scheme::ImplicitLimit, 1e-3),
    ] {
        let sc = SolverConfig {
            scheme,
            dt,
            ..built.solver.clone()
        };
        let path = simulate_path(&problem, &sc, 0).map_err(|e| e.to_string())?;
        let d = dissipation_defect(&problem.a, &path).map_err(|e| e.to_string())?;
        ok &= d <= 1e-10;
        details.push(format!("{scheme:?} max increase {d:.1e}"));
    }
    ensure(ok, format!("{} (<= 1e-10)", details.join(", ")))
}

fn criterion_10() -> Verdict {
    let mut cfg = preset("stefan").map_err(|e| e.to_string())?;
    cfg.paths = 4;
    let outputs = [1, 2, 8]
        .map(|t| with_threads(Some(t), || run(Experiment::Simulate, &cfg)).map_err(|e| e.to_string()));
    let mut csvs = Vec::new();
    for o in outputs {
        let o = o?;
        csvs.push(o.csv().map(|a| (a.name.clone(), a.contents.clone())).collect::<Vec<_>>());
    }
    let bytes: usize = csvs[0].iter().map(|(_, c)| c.len()).sum();
    ensure(
        csvs[0] == csvs[1] && csvs[0] == csvs[2],
        format!("{} CSV files, {bytes} bytes, identical under 1, 2 and 8 threads", csvs[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("graph calculus", criterion_1),
        ("operator bound", criterion_2),
        ("lambda sweep", criterion_3),
        ("joint sweep", criterion_4),
        ("Ito residual", criterion_5),
        ("ledger boundedness", criterion_6),
        ("uniqueness", criterion_7),
        ("heat anchor", criterion_8),
        ("dissipation", criterion_9),
        ("reproducibility", criterion_10),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("PASS criterion {:>2} ({name}, {secs:.1}s): {d}", k + 1),
            Err(d) => {
                failures += 1;
                println!("FAIL criterion {:>2} ({name}, {secs:.1}s): {d}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
