//! Numerical checks of the a priori estimates, the generalized Itô formulas,
//! the `λ → 0` and `λ = ε → 0` limits, and pathwise uniqueness.

use crate::error::{Error, Result};
use crate::graph1d::{GraphKind, ScalarGraph};
use crate::noise::{coarsen, noise_record, NoiseModel};
use crate::operators::{DivergenceFormB, NemytskiiA, NewtonConfig};
use crate::solver::{run_paths, simulate_path, simulate_with_noise, Drift, PathResult, Problem, Scheme, SolverConfig};
use crate::space::{dot_h, norm_v, norm_vstar, pairing, DualGridFunction, GridFunction, Mesh1D};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// One entry of a JSON verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
}

impl Check {
    /// Passes when `measured ≤ threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: measured <= threshold,
            measured,
            threshold,
        }
    }

    /// Passes when `measured ≥ threshold`.
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: measured >= threshold,
            measured,
            threshold,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            measured: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
        }
    }
}

/// `(φ_λ^ε)*(v) = λ‖u‖²_V/2 + ε‖A^εu‖²_h/2 + φ*(A^εu)` with `u = (A_λ^ε)⁻¹v`.
pub fn regularized_conjugate(a: &NemytskiiA, lambda: f64, eps: f64, u: &GridFunction) -> Result<f64> {
    let y = a.apply_a_eps(eps, u)?.into_dual();
    Ok(0.5 * lambda * norm_v(u).powi(2) + a.phi_star_eps(eps, &y))
}

/// The conjugate functional whose gradient is the path's `u`.
pub fn path_conjugate(a: &NemytskiiA, path: &PathResult, i: usize) -> Result<f64> {
    if path.scheme.is_regularized() {
        regularized_conjugate(a, path.lambda, path.eps, &path.u[i])
    } else {
        Ok(a.phi_star(&path.v[i]))
    }
}

pub const LEDGER_NAMES: [&str; 7] = [
    "sqrt_lambda_u_v",
    "sqrt_eps_a_eps_u_h",
    "u_h",
    "a_eps_u_h",
    "phi_star_a_eps_u",
    "resolvent_b_u_v",
    "yosida_b_u_vstar",
];

/// The tracked quantities at one stored time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRecord {
    pub t: f64,
    pub values: [f64; 7],
    /// `‖(λR + DA^ε(u))⁻¹‖_{H→H}`, sampled on every tenth record.
    pub derivative_norm: Option<f64>,
}

pub fn energy_ledger(a: &NemytskiiA, b: &DivergenceFormB, path: &PathResult, newton: &NewtonConfig) -> Result<Vec<LedgerRecord>> {
    if !path.scheme.is_regularized() {
        return Err(Error::InvalidArgument("the energy ledger needs a regularized path".into()));
    }
    let (lambda, eps) = (path.lambda, path.eps);
    path.u
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let ae = a.apply_a_eps(eps, u)?.into_dual();
            let j = b.resolvent_b(lambda, u, newton)?;
            let ae_h = ae.norm_h();
            let derivative_norm = if i % 10 == 0 {
                Some(a.inverse_jacobian_norm(lambda, eps, u)?)
            } else {
                None
            };
            Ok(LedgerRecord {
                t: path.times[i],
                values: [
                    lambda.sqrt() * norm_v(u),
                    eps.sqrt() * ae_h,
                    u.norm_h(),
                    ae_h,
                    a.phi_star(&ae),
                    norm_v(&j),
                    norm_vstar(&path.w[i]),
                ],
                derivative_norm,
            })
        })
        .collect()
}

/// Largest sampled derivative norm of a ledger.
pub fn ledger_derivative_max(records: &[LedgerRecord]) -> f64 {
    records.iter().filter_map(|r| r.derivative_norm).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ItoVariant {
    Limit,
    Regularized,
}

/// `residual = lhs − rhs` per time step of a densely stored path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItoReport {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual: Vec<f64>,
}

impl ItoReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual.last().expect("reports are never empty")
    }
}

pub fn ito_residual(problem: &Problem, path: &PathResult, variant: ItoVariant) -> Result<ItoReport> {
    let ok = match variant {
        ItoVariant::Limit => path.scheme == Scheme::ImplicitLimit,
        ItoVariant::Regularized => path.scheme.is_regularized(),
    };
    if !ok {
        return Err(Error::InvalidArgument(format!(
            "{variant:?} Itô formula does not apply to a {:?} path",
            path.scheme
        )));
    }
    if !path.is_dense() {
        return Err(Error::InvalidArgument("the Itô residual needs every step stored".into()));
    }
    let a = &problem.a;
    let h = path.mesh().h();
    let dt = path.dt;
    let psi0 = path_conjugate(a, path, 0)?;
    let mut report = ItoReport {
        times: vec![0.0],
        lhs: vec![psi0],
        rhs: vec![psi0],
        residual: vec![0.0],
    };
    let mut dissipated = 0.0;
    let mut source = 0.0;
    for n in 0..path.steps {
        let u = &path.u[n];
        let t = path.times[n];
        dissipated += dt * pairing(&path.w[n], u)?;
        if !problem.noise.is_zero() {
            let cols = problem.noise.columns(t, u);
            let g = problem.noise.apply_g(t, u, &path.noise[n])?;
            source += dot_h(h, u.values(), g.values());
            let trace = match variant {
                ItoVariant::Limit => a.trace_limit(&path.v[n], &cols)?,
                ItoVariant::Regularized => a.trace_regularized(path.lambda, path.eps, u, &cols)?,
            };
            source += 0.5 * dt * trace;
        }
        if !problem.drift.is_zero() {
            source += dt * pairing(&problem.drift.eval(u), u)?;
        }
        let lhs = path_conjugate(a, path, n + 1)? + dissipated;
        let rhs = psi0 + source;
        report.times.push(path.times[n + 1]);
        report.lhs.push(lhs);
        report.rhs.push(rhs);
        report.residual.push(lhs - rhs);
    }
    Ok(report)
}

/// Root mean square of the final Itô residual over paths `0..m`.
pub fn ito_rms(problem: &Problem, cfg: &SolverConfig, m: usize, variant: ItoVariant) -> Result<f64> {
    let finals = run_paths(problem, cfg, m, |_, p| Ok(ito_residual(problem, &p, variant)?.final_residual()))?;
    Ok((finals.iter().map(|r| r * r).sum::<f64>() / m as f64).sqrt())
}

/// Largest per-step increase of the conjugate functional along a path.
pub fn dissipation_defect(a: &NemytskiiA, path: &PathResult) -> Result<f64> {
    let values = (0..path.v.len())
        .map(|i| path_conjugate(a, path, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    /// `‖x_λ^ε − (A^ε)⁻¹y‖_h`.
    pub e1: f64,
    /// `‖A^ε(x_λ^ε) − y‖_h`.
    pub e2: f64,
}

fn check_decreasing(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] >= w[0]) || lambdas.iter().any(|&l| !(l >= 1e-10)) {
        return Err(Error::InvalidArgument("lambdas must decrease and stay ≥ 1e-10".into()));
    }
    Ok(())
}

pub fn convergence_lambda(
    a: &NemytskiiA,
    eps: f64,
    y: &DualGridFunction,
    lambdas: &[f64],
    newton: &NewtonConfig,
) -> Result<Vec<LambdaPoint>> {
    check_decreasing(lambdas)?;
    let target = a.inverse_a_eps(eps, y);
    let mut guess: Option<GridFunction> = None;
    lambdas
        .iter()
        .map(|&lambda| {
            let x = a.invert_a_lambda_eps(lambda, eps, y, newton, guess.as_ref())?;
            let ae = a.apply_a_eps(eps, &x)?.into_dual();
            let point = LambdaPoint {
                lambda,
                e1: (&x - &target).norm_h(),
                e2: (&ae - y).norm_h(),
            };
            guess = Some(x);
            Ok(point)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPoint {
    pub lambda: f64,
    /// `‖A^λ(x_λ) − y‖_h`.
    pub gap: f64,
    /// `|‖x_λ‖_V − ‖x‖_V|`.
    pub v_norm_gap: f64,
    /// `‖x_λ − x‖_h`.
    pub h_error: f64,
}

/// `ε = λ` along the list; the limit is `x = A⁻¹y`.
pub fn convergence_joint(a: &NemytskiiA, y: &DualGridFunction, lambdas: &[f64], newton: &NewtonConfig) -> Result<Vec<JointPoint>> {
    check_decreasing(lambdas)?;
    let x = a.gamma_apply(y);
    if !x.is_finite() {
        return Err(Error::InvalidArgument("A⁻¹y is not finite".into()));
    }
    let xv = norm_v(&x);
    let mut guess: Option<GridFunction> = None;
    lambdas
        .iter()
        .map(|&lambda| {
            let xl = a.invert_a_lambda_eps(lambda, lambda, y, newton, guess.as_ref())?;
            let ae = a.apply_a_eps(lambda, &xl)?.into_dual();
            let point = JointPoint {
                lambda,
                gap: (&ae - y).norm_h(),
                v_norm_gap: (norm_v(&xl) - xv).abs(),
                h_error: (&xl - &x).norm_h(),
            };
            guess = Some(xl);
            Ok(point)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativePoint {
    pub lambda: f64,
    /// `(k_λ − k_∞, v_j)_H` for `j = 1, 2, 3`.
    pub probes: [f64; 3],
    pub h_error: f64,
}

/// `D((A^ε)⁻¹)(z) = εI + D(A⁻¹)(z)` as a dense matrix.
fn d_inverse_a_eps(a: &NemytskiiA, eps: f64, z: &DualGridFunction) -> DMatrix<f64> {
    let n = z.mesh().n();
    a.d_ainv_jacobian(z).to_dense() + DMatrix::identity(n, n) * eps
}

/// `k_λ = [I + λD((A^ε)⁻¹)(A^εx_λ)R]⁻¹D((A^ε)⁻¹)(A^εx_λ)·hdir` against
/// `k_∞ = D((A^ε)⁻¹)(y)·hdir`.
pub fn derivative_convergence(
    a: &NemytskiiA,
    eps: f64,
    y: &DualGridFunction,
    hdir: &GridFunction,
    lambdas: &[f64],
    newton: &NewtonConfig,
) -> Result<Vec<DerivativePoint>> {
    check_decreasing(lambdas)?;
    let mesh = y.mesh();
    let n = mesh.n();
    let hv = DVector::from_column_slice(hdir.values());
    let k_inf = d_inverse_a_eps(a, eps, y) * &hv;
    let r = crate::space::Tridiagonal::riesz(mesh, 1.0, 0.0).to_dense();
    let probes: Vec<DVector<f64>> = (1..=3)
        .map(|k| DVector::from_column_slice(mesh.eigenvector(k).values()))
        .collect();
    let mut guess: Option<GridFunction> = None;
    lambdas
        .iter()
        .map(|&lambda| {
            let x = a.invert_a_lambda_eps(lambda, eps, y, newton, guess.as_ref())?;
            let z = a.apply_a_eps(eps, &x)?.into_dual();
            let d = d_inverse_a_eps(a, eps, &z);
            let lhs = DMatrix::identity(n, n) + &d * &r * lambda;
            let k = lhs
                .lu()
                .solve(&(&d * &hv))
                .ok_or_else(|| Error::InvalidArgument("singular derivative system".into()))?;
            let diff = k - &k_inf;
            let h = mesh.h();
            guess = Some(x);
            Ok(DerivativePoint {
                lambda,
                probes: [0, 1, 2].map(|j| h * diff.dot(&probes[j])),
                h_error: (h * diff.norm_squared()).sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessMode {
    LinearA,
    LinearB,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub sup_gap: f64,
}

fn check_mode(problem: &Problem, mode: UniquenessMode) -> Result<()> {
    let ok = match mode {
        UniquenessMode::LinearA => match &problem.a {
            NemytskiiA::Pointwise(g) => matches!(g.kind(), GraphKind::Identity | GraphKind::ScaledIdentity { .. }),
            NemytskiiA::NonlocalKernel(_) => true,
        },
        UniquenessMode::LinearB => problem.b.is_riesz(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("problem is outside the {mode:?} regime")))
    }
}

/// Integer ratio `coarse/fine`, or `IncompatibleSteps`.
fn step_ratio(coarse: f64, fine: f64) -> Result<usize> {
    let r = coarse / fine;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-9 * r {
        return Err(Error::IncompatibleSteps(format!("dt ratio {coarse}/{fine} is not an integer")));
    }
    Ok(k as usize)
}

/// Runs both configurations on one shared Brownian path and reports
/// `‖v₁(t) − v₂(t)‖_{V*}` on the coarser time grid.
pub fn uniqueness_check(
    problem: &Problem,
    cfg1: &SolverConfig,
    cfg2: &SolverConfig,
    mode: UniquenessMode,
    path_index: u64,
) -> Result<UniquenessReport> {
    check_mode(problem, mode)?;
    if cfg1.seed != cfg2.seed || (cfg1.t_end - cfg2.t_end).abs() > 1e-12 * cfg1.t_end.max(1.0) {
        return Err(Error::InvalidArgument("configurations must share seed and horizon".into()));
    }
    let (fine, coarse) = if cfg1.dt <= cfg2.dt { (cfg1, cfg2) } else { (cfg2, cfg1) };
    let ratio = step_ratio(coarse.dt, fine.dt)?;
    let fine_steps = fine.steps()?;
    let record = noise_record(fine.seed, path_index, problem.noise.modes, fine.dt, fine_steps)?;
    let coarse_record = coarsen(&record, ratio)?;
    let dense = |c: &SolverConfig| SolverConfig {
        storage_cap: c.steps().unwrap_or(0) + 1,
        ..c.clone()
    };
    let (pf, pc) = rayon::join(
        || simulate_with_noise(problem, &dense(fine), record),
        || simulate_with_noise(problem, &dense(coarse), coarse_record),
    );
    let (pf, pc) = (pf?, pc?);
    let gaps: Vec<f64> = (0..pc.v.len())
        .map(|k| norm_vstar(&(&pc.v[k] - &pf.v[k * ratio])))
        .collect();
    Ok(UniquenessReport {
        times: pc.times.clone(),
        sup_gap: gaps.iter().cloned().fold(0.0, f64::max),
        gaps,
    })
}

/// Refinement study: at level `ℓ` the regularized semi-implicit run with
/// `(λ, ε, dt)/2^ℓ` is compared with the limit scheme at `dt/2^ℓ`.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_refinement(
    problem: &Problem,
    v0: &DualGridFunction,
    seed: u64,
    lambda0: f64,
    eps0: f64,
    dt0: f64,
    t_end: f64,
    levels: usize,
    mode: UniquenessMode,
) -> Result<Vec<f64>> {
    (0..levels)
        .into_par_iter()
        .map(|l| {
            let f = 0.5_f64.powi(l as i32);
            let reg = SolverConfig::new(Scheme::SemiImplicitRegularized, lambda0 * f, eps0 * f, dt0 * f, t_end, seed, v0.clone());
            let lim = SolverConfig {
                scheme: Scheme::ImplicitLimit,
                ..reg.clone()
            };
            Ok(uniqueness_check(problem, &reg, &lim, mode, 0)?.sup_gap)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatReport {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub error: f64,
}

/// Backward Euler for `u_t = −Ru`, `u₀ = sin(πx)` against `e^{−μ₁T}sin(πx)`.
pub fn heat_oracle(mesh: Mesh1D, dt: f64, t_end: f64) -> Result<HeatReport> {
    let problem = Problem::new(
        NemytskiiA::Pointwise(ScalarGraph::identity()),
        DivergenceFormB::riesz(mesh),
        NoiseModel::zero(),
        Drift::Zero,
    )?;
    let u0 = mesh.eigenvector(1);
    let cfg = SolverConfig::new(Scheme::ImplicitLimit, 0.0, 0.0, dt, t_end, 0, u0.clone().into_dual());
    let path = simulate_path(&problem, &cfg, 0)?;
    let exact = u0.scaled((-mesh.eigenvalue(1) * t_end).exp());
    Ok(HeatReport {
        n: mesh.n(),
        dt,
        t_end,
        error: (path.u.last().expect("paths hold the initial state") - &exact).norm_h(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub eps: f64,
    /// `sup_t` of each ledger quantity.
    pub maxima: [f64; 7],
    pub derivative_norm: f64,
    pub c_a: f64,
    pub finite: bool,
}

/// Ledger over a `(λ, ε)` grid, all points sharing the noise of `path_index`.
pub fn ledger_sweep(problem: &Problem, base: &SolverConfig, lambdas: &[f64], epss: &[f64], path_index: u64) -> Result<Vec<SweepPoint>> {
    let grid: Vec<(f64, f64)> = lambdas.iter().flat_map(|&l| epss.iter().map(move |&e| (l, e))).collect();
    grid.into_par_iter()
        .map(|(lambda, eps)| {
            let cfg = SolverConfig {
                lambda,
                eps,
                ..base.clone()
            };
            let path = simulate_path(problem, &cfg, path_index)?;
            let records = energy_ledger(&problem.a, &problem.b, &path, &cfg.newton)?;
            let mut maxima = [0.0; 7];
            let mut finite = true;
            for r in &records {
                for (m, v) in maxima.iter_mut().zip(r.values) {
                    finite &= v.is_finite();
                    *m = f64::max(*m, v);
                }
            }
            Ok(SweepPoint {
                lambda,
                eps,
                maxima,
                derivative_norm: ledger_derivative_max(&records),
                c_a: problem.a.c_a(),
                finite,
            })
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per quantity: `sweep-max / sweep-median` (0 when both vanish).
pub fn ledger_ratios(points: &[SweepPoint]) -> [f64; 7] {
    let mut out = [0.0; 7];
    for (q, o) in out.iter_mut().enumerate() {
        let mut col: Vec<f64> = points.iter().map(|p| p.maxima[q]).collect();
        let max = col.iter().cloned().fold(0.0, f64::max);
        let med = median(&mut col);
        *o = if max == 0.0 { 0.0 } else { max / med };
    }
    out
}

/// Pointwise calculus of a scalar graph at `points` random samples in
/// `[−10, 10]`: resolvent nonexpansiveness, strong monotonicity, Lipschitz
/// bound and growth of `α^ε`, the dual identity `εα^ε + γ∘α^ε = id`, and the
/// Moreau conjugate identity against numeric conjugation (on `conjugate_points`
/// of the samples).
pub fn graph_calculus(graph: &ScalarGraph, eps: f64, points: usize, conjugate_points: usize, seed: u64) -> Result<Vec<Check>> {
    if !(eps > 0.0) || eps * graph.c_alpha > 1.0 {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1/c_alpha]")));
    }
    let mut rng = crate::noise::RngStream::new(seed, 0);
    let xs = rng.uniforms(points, -10.0, 10.0);
    let ys = rng.uniforms(points, -10.0, 10.0);
    let (mut nonexp, mut mono, mut lip, mut growth, mut dual, mut moreau) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (k, (&x1, &x2)) in xs.iter().zip(&ys).enumerate() {
        let d = x1 - x2;
        let (j1, j2) = (graph.resolvent(eps, x1)?, graph.resolvent(eps, x2)?);
        nonexp = nonexp.max((j1 - j2).abs() - d.abs());
        let (a1, a2) = (graph.yosida(eps, x1)?, graph.yosida(eps, x2)?);
        mono = mono.max(0.5 * graph.c_alpha * d * d - (a1 - a2) * d);
        lip = lip.max((a1 - a2).abs() - d.abs() / eps);
        growth = growth.max(a1.abs() - graph.growth * (1.0 + 2.0 * x1.abs()));
        // x − εα^ε(x) = J_ε x ∈ γ-preimage of α^ε(x)
        dual = dual.max(graph.inverse_value(a1).distance(x1 - eps * a1));
        if k < conjugate_points {
            let numeric = crate::graph1d::numeric_conjugate(|r| graph.moreau_envelope(eps, r).unwrap_or(f64::INFINITY), a1);
            moreau = moreau.max((numeric - graph.moreau_conjugate(eps, a1)).abs());
        }
    }
    Ok(vec![
        Check::at_most("resolvent_nonexpansive", nonexp, 1e-9),
        Check::at_most("yosida_strong_monotonicity", mono, 1e-9),
        Check::at_most("yosida_lipschitz", lip, 1e-9),
        Check::at_most("yosida_growth", growth, 1e-9),
        Check::at_most("dual_identity", dual, 1e-9),
        Check::at_most("moreau_conjugate", moreau, 1e-8),
    ])
}

/// Largest estimate of `‖(λR + DA^ε(u))⁻¹‖_{H→H}` over
/// `triples` random `(u, λ, ε)` with `λ ∈ [1e-6, 1]` log-uniform and
/// `ε ∈ (0, 1/c_A)`.
pub fn operator_bound_study(a: &NemytskiiA, mesh: Mesh1D, triples: usize, seed: u64) -> Result<f64> {
    let mut rng = crate::noise::RngStream::new(seed, 1);
    let eps_max = if a.c_a() > 0.0 { 1.0 / a.c_a() } else { 1.0 };
    let mut worst = 0.0_f64;
    for _ in 0..triples {
        let p = rng.uniforms(3, 0.0, 1.0);
        let lambda = 10f64.powf(-6.0 * p[0]);
        let eps = eps_max * (0.001 + 0.998 * p[1]);
        let amp = 5.0 * p[2];
        let vals = rng.uniforms(mesh.n(), -amp, amp);
        let u = GridFunction::new(mesh, vals)?;
        worst = worst.max(a.inverse_jacobian_norm(lambda, eps, &u)?);
    }
    Ok(worst)
}
