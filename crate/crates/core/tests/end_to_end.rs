use dnsde_core::diagnostics::{ito_residual, ItoVariant};
use dnsde_core::graph1d::ScalarGraph;
use dnsde_core::noise::{Multiplicative, NoiseModel};
use dnsde_core::operators::{DivergenceFormB, NemytskiiA, NonlocalKernel};
use dnsde_core::solver::{monte_carlo, simulate_path, simulate_with_noise, Drift, Problem, Scheme, SolverConfig};
use dnsde_core::space::{sine_profile, DualGridFunction, Mesh1D};

/// Solves `(I + dt·R) x = b` with the Thomas algorithm.
fn implicit_heat_step(h: f64, dt: f64, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let off = -dt / (h * h);
    let diag = 1.0 + 2.0 * dt / (h * h);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag;
    d[0] = b[0] / diag;
    for i in 1..n {
        let m = diag - off * c[i - 1];
        c[i] = off / m;
        d[i] = (b[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[test]
fn ito_single_step_matches_hand_computation() {
    let mesh = Mesh1D::new(20).unwrap();
    let h = mesh.h();
    let noise = NoiseModel::new(4, 0.7, 1.0, Multiplicative::Additive).unwrap();
    let problem = Problem::new(
        NemytskiiA::Pointwise(ScalarGraph::identity()),
        DivergenceFormB::riesz(mesh),
        noise,
        Drift::Zero,
    )
    .unwrap();
    let dt = 0.01;
    let cfg = SolverConfig::new(Scheme::ImplicitLimit, 0.0, 0.1, dt, dt, 3, DualGridFunction::zeros(mesh));
    let xi = vec![0.3, -0.2, 0.05, 0.11];
    let path = simulate_with_noise(&problem, &cfg, vec![xi.clone()]).unwrap();
    let report = ito_residual(&problem, &path, ItoVariant::Limit).unwrap();

    let u0 = dnsde_core::space::GridFunction::zeros(mesh);
    let g: Vec<f64> = (0..mesh.n())
        .map(|i| {
            (1..=4)
                .map(|k| xi[k - 1] * noise.sigma(k) * (k as f64 * std::f64::consts::PI * mesh.node(i)).sin())
                .sum()
        })
        .collect();
    let v1 = implicit_heat_step(h, dt, &g);
    let v1_sq: f64 = h * v1.iter().map(|x| x * x).sum::<f64>();
    let trace: f64 = noise.columns(0.0, &u0).iter().map(|c| c.norm_h().powi(2)).sum();
    let expected = 0.5 * v1_sq - 0.5 * dt * trace;
    assert!((report.final_residual() - expected).abs() < 1e-13, "{} vs {expected}", report.final_residual());
    assert!((path.v[1].values()[7] - v1[7]).abs() < 1e-12);
}

fn stefan_problem(n: usize) -> Problem {
    let mesh = Mesh1D::new(n).unwrap();
    Problem::new(
        NemytskiiA::Pointwise(ScalarGraph::stefan_smooth(1.0).unwrap()),
        DivergenceFormB::riesz(mesh),
        NoiseModel::new(6, 0.5, 1.0, Multiplicative::BoundedLinear { c: 1.0 }).unwrap(),
        Drift::Zero,
    )
    .unwrap()
}

#[test]
fn monte_carlo_is_thread_count_independent() {
    let problem = stefan_problem(32);
    let v0 = sine_profile(problem.mesh(), 1, 2.0).into_dual();
    let cfg = SolverConfig::new(Scheme::SemiImplicitRegularized, 0.01, 0.01, 1e-3, 0.02, 5, v0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo(&problem, &cfg, 6, 2.0).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert!(a.var_u_h.iter().skip(1).all(|&v| v > 0.0));
}

#[test]
fn paths_differ_across_indices_and_repeat_within() {
    let problem = stefan_problem(16);
    let v0 = sine_profile(problem.mesh(), 1, 2.0).into_dual();
    let cfg = SolverConfig::new(Scheme::ExplicitRegularized, 0.05, 0.05, 1e-4, 0.005, 9, v0);
    let p0 = simulate_path(&problem, &cfg, 0).unwrap();
    let p0b = simulate_path(&problem, &cfg, 0).unwrap();
    let p1 = simulate_path(&problem, &cfg, 1).unwrap();
    assert_eq!(p0.to_csv("x"), p0b.to_csv("x"));
    assert_ne!(p0.v.last(), p1.v.last());
}

#[test]
fn nonlocal_and_fractional_scenarios_run() {
    let mesh = Mesh1D::new(32).unwrap();
    let v0 = sine_profile(mesh, 1, 1.5).into_dual();
    let noise = NoiseModel::new(4, 0.3, 1.0, Multiplicative::Linear).unwrap();
    let scenarios = [
        Problem::new(
            NemytskiiA::NonlocalKernel(NonlocalKernel::gaussian(mesh, 1.0, 0.5, 0.1).unwrap()),
            DivergenceFormB::riesz(mesh),
            noise,
            Drift::Zero,
        )
        .unwrap(),
        Problem::new(
            NemytskiiA::Pointwise(ScalarGraph::sum_with_identity(ScalarGraph::stefan_smooth(1.0).unwrap(), 1.0).unwrap()),
            DivergenceFormB::fractional(mesh, 0.5, None).unwrap(),
            noise,
            Drift::Zero,
        )
        .unwrap(),
    ];
    for problem in &scenarios {
        for scheme in [Scheme::SemiImplicitRegularized, Scheme::ImplicitLimit] {
            let cfg = SolverConfig::new(scheme, 0.01, 0.01, 1e-3, 0.02, 4, v0.clone());
            let p = simulate_path(problem, &cfg, 0).unwrap();
            assert!(p.u.iter().all(|u| u.is_finite()));
            assert!(p.identity_residual <= p.steps as f64 * cfg.newton.tol_abs, "{}", p.identity_residual);
        }
    }
}

#[test]
fn csv_export_layout() {
    let problem = stefan_problem(8);
    let v0 = sine_profile(problem.mesh(), 1, 2.0).into_dual();
    let cfg = SolverConfig::new(Scheme::ImplicitLimit, 0.0, 0.01, 0.01, 0.05, 1, v0);
    let p = simulate_path(&problem, &cfg, 0).unwrap();
    let csv = p.to_csv("seed=1\nscheme=implicit");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# seed=1");
    assert_eq!(lines[1], "# scheme=implicit");
    assert_eq!(lines[2].split(',').count(), 1 + 2 * 8);
    assert_eq!(lines.len(), 3 + 6);
    assert!(!csv.contains('\r'));
}
