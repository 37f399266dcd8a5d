//! Time stepping for the regularized equation
//! `dv + B_λ(A_λ^ε)⁻¹v dt = F dt + G dW` and for the limit inclusion
//! `d(Au) + Bu dt ∋ F dt + G dW`, with Monte Carlo over independent paths.

use crate::error::{Error, Result};
use crate::noise::{noise_record, NoiseModel};
use crate::operators::{damped_newton, DivergenceFormB, Jacobian, NemytskiiA, NewtonConfig};
use crate::space::{norm_v, smooth, DualGridFunction, GridFunction, Mesh1D};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExplicitRegularized,
    SemiImplicitRegularized,
    ImplicitLimit,
}

impl Scheme {
    pub fn is_regularized(&self) -> bool {
        !matches!(self, Scheme::ImplicitLimit)
    }
}

/// Nodewise affine drift `F(u) = a·u + b(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Zero,
    Affine { a: f64, b: GridFunction },
}

impl Drift {
    pub fn eval(&self, u: &GridFunction) -> DualGridFunction {
        match self {
            Drift::Zero => DualGridFunction::zeros(u.mesh()),
            Drift::Affine { a, b } => {
                let mut out = u.scaled(*a);
                out.axpy(1.0, b);
                out.into_dual()
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Drift::Zero => 0.0,
            Drift::Affine { a, .. } => a.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero)
    }
}

/// Operators and coefficients of one equation on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub a: NemytskiiA,
    pub b: DivergenceFormB,
    pub noise: NoiseModel,
    pub drift: Drift,
}

impl Problem {
    pub fn new(a: NemytskiiA, b: DivergenceFormB, noise: NoiseModel, drift: Drift) -> Result<Self> {
        noise.validate()?;
        if let Drift::Affine { b: bx, .. } = &drift {
            if bx.mesh() != b.mesh() {
                return Err(Error::MeshMismatch {
                    left: b.mesh().n(),
                    right: bx.mesh().n(),
                });
            }
        }
        Ok(Self { a, b, noise, drift })
    }

    pub fn mesh(&self) -> Mesh1D {
        self.b.mesh()
    }

    /// The same problem with `G = 0` and `F = 0`.
    pub fn deterministic(&self) -> Self {
        Self {
            noise: NoiseModel::zero(),
            drift: Drift::Zero,
            ..self.clone()
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.noise.is_zero() && self.drift.is_zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub newton: NewtonConfig,
    pub seed: u64,
    pub v0: DualGridFunction,
    /// Maximum number of stored states; longer runs are stored with a stride.
    pub storage_cap: usize,
}

pub const DEFAULT_STORAGE_CAP: usize = 100_001;

impl SolverConfig {
    pub fn new(scheme: Scheme, lambda: f64, eps: f64, dt: f64, t_end: f64, seed: u64, v0: DualGridFunction) -> Self {
        Self {
            lambda,
            eps,
            dt,
            t_end,
            scheme,
            newton: NewtonConfig::default(),
            seed,
            v0,
            storage_cap: DEFAULT_STORAGE_CAP,
        }
    }

    /// `round(T/dt)`, provided `dt` divides `T`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need dt > 0 and T ≥ 0, got dt = {}, T = {}",
                self.dt, self.t_end
            )));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::InvalidArgument(format!("dt = {} does not divide T = {}", self.dt, self.t_end)));
        }
        Ok(n as usize)
    }

    pub fn stride(&self) -> Result<usize> {
        let steps = self.steps()?;
        if self.storage_cap < 2 {
            return Err(Error::InvalidArgument("storage cap must be at least 2".into()));
        }
        Ok(steps.div_ceil(self.storage_cap - 1).max(1))
    }
}

/// `L = C_B(1 + 1/λ)/λ`, the Lipschitz bound of `v ↦ B_λ(A_λ^ε)⁻¹v` in `V*`.
pub fn explicit_lipschitz(problem: &Problem, lambda: f64) -> f64 {
    problem.b.growth() * (1.0 + 1.0 / lambda) / lambda
}

pub fn validate(problem: &Problem, cfg: &SolverConfig) -> Result<()> {
    cfg.newton.validate()?;
    cfg.steps()?;
    cfg.stride()?;
    if cfg.v0.mesh() != problem.mesh() {
        return Err(Error::MeshMismatch {
            left: problem.mesh().n(),
            right: cfg.v0.mesh().n(),
        });
    }
    if cfg.scheme.is_regularized() {
        if !(cfg.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {}", cfg.lambda)));
        }
        problem.a.check_eps(cfg.eps)?;
    } else if let NemytskiiA::Pointwise(g) = &problem.a {
        if !(g.c_alpha > 0.0) {
            return Err(Error::InvalidArgument(
                "the implicit limit scheme needs a finite inverse graph (c_alpha > 0)".into(),
            ));
        }
    }
    if cfg.scheme == Scheme::ExplicitRegularized {
        let l = explicit_lipschitz(problem, cfg.lambda);
        if cfg.dt * l > 0.5 {
            return Err(Error::InvalidArgument(format!(
                "explicit step needs dt·L ≤ 0.5, got dt = {}, L = {l:e}",
                cfg.dt
            )));
        }
    }
    Ok(())
}

/// `v₀^ε = (I + εR)⁻¹v₀`.
pub fn initial_data(eps: f64, v0_raw: &DualGridFunction) -> Result<DualGridFunction> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    Ok(smooth(eps, v0_raw))
}

/// One stored state of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub v: DualGridFunction,
    pub u: GridFunction,
    pub w: DualGridFunction,
}

/// Stepper bound to a problem and configuration.
pub struct Stepper<'a> {
    problem: &'a Problem,
    cfg: &'a SolverConfig,
}

impl<'a> Stepper<'a> {
    pub fn new(problem: &'a Problem, cfg: &'a SolverConfig) -> Result<Self> {
        validate(problem, cfg)?;
        Ok(Self { problem, cfg })
    }

    fn regularized_u(&self, v: &DualGridFunction, guess: Option<&GridFunction>) -> Result<GridFunction> {
        self.problem
            .a
            .invert_a_lambda_eps(self.cfg.lambda, self.cfg.eps, v, &self.cfg.newton, guess)
    }

    fn regularized_w(&self, u: &GridFunction) -> Result<DualGridFunction> {
        self.problem.b.yosida_b(self.cfg.lambda, u, &self.cfg.newton)
    }

    /// The state at `t = 0`.
    pub fn initial_state(&self) -> Result<State> {
        if self.cfg.scheme.is_regularized() {
            let v = initial_data(self.cfg.eps, &self.cfg.v0)?;
            let u = self.regularized_u(&v, None)?;
            let w = self.regularized_w(&u)?;
            Ok(State { t: 0.0, v, u, w })
        } else {
            let v = self.cfg.v0.clone();
            let u = self.problem.a.gamma_apply(&v);
            let w = self.problem.b.apply_b(&u)?;
            Ok(State { t: 0.0, v, u, w })
        }
    }

    /// `vⁿ + dt·F(uⁿ) + G(uⁿ)ΔWⁿ`.
    fn explicit_rhs(&self, s: &State, dw: &[f64]) -> Result<DualGridFunction> {
        let mut rhs = s.v.clone();
        if !self.problem.drift.is_zero() {
            rhs.axpy(self.cfg.dt, &self.problem.drift.eval(&s.u));
        }
        if !self.problem.noise.is_zero() {
            let g = self.problem.noise.apply_g(s.t, &s.u, dw)?;
            rhs.axpy(1.0, &g.into_dual());
        }
        Ok(rhs)
    }

    /// Advances one step; returns the new state and the drift `w` used by it.
    pub fn step(&self, s: &State, dw: &[f64]) -> Result<(State, DualGridFunction)> {
        let rhs = self.explicit_rhs(s, dw)?;
        let dt = self.cfg.dt;
        let t = s.t + dt;
        match self.cfg.scheme {
            Scheme::ExplicitRegularized => {
                let mut v = rhs;
                v.axpy(-dt, &s.w);
                let u = self.regularized_u(&v, Some(&s.u))?;
                let w = self.regularized_w(&u)?;
                Ok((State { t, v, u, w }, s.w.clone()))
            }
            Scheme::SemiImplicitRegularized => {
                let mut v = s.v.clone();
                let mut u = s.u.clone();
                let mut w = s.w.clone();
                let mut converged = false;
                let mut update = f64::INFINITY;
                for _ in 0..SEMI_IMPLICIT_MAX_ITER {
                    let mut next = rhs.clone();
                    next.axpy(-dt, &w);
                    update = (&next - &v).norm_h();
                    v = next;
                    u = self.regularized_u(&v, Some(&u))?;
                    w = self.regularized_w(&u)?;
                    if update < SEMI_IMPLICIT_TOL {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::NonConvergence {
                        what: "semi-implicit fixed point",
                        iterations: SEMI_IMPLICIT_MAX_ITER,
                        residual: update,
                    });
                }
                Ok((State { t, v, u, w: w.clone() }, w))
            }
            Scheme::ImplicitLimit => {
                let v = self.implicit_solve(&rhs, &s.v)?;
                let u = self.problem.a.gamma_apply(&v);
                let w = self.problem.b.apply_b(&u)?;
                let mut v = rhs;
                v.axpy(-dt, &w);
                Ok((State { t, v, u, w: w.clone() }, w))
            }
        }
    }

    /// Solves `v + dt·B(A⁻¹v) = rhs` by damped semismooth Newton in `v`.
    fn implicit_solve(&self, rhs: &DualGridFunction, guess: &DualGridFunction) -> Result<DualGridFunction> {
        let dt = self.cfg.dt;
        let a = &self.problem.a;
        let b = &self.problem.b;
        let h = rhs.mesh().h();
        let x = damped_newton(
            "implicit limit step",
            guess.as_primal(),
            |x| {
                let v = x.clone().into_dual();
                let bu = b.apply_b(&a.gamma_apply(&v))?;
                Ok(x.values()
                    .iter()
                    .zip(bu.values())
                    .zip(rhs.values())
                    .map(|((xi, bi), ri)| xi + dt * bi - ri)
                    .collect())
            },
            |x| {
                let v = x.clone().into_dual();
                let u = a.gamma_apply(&v);
                let jb = b.jacobian(&u);
                let jg = a.d_ainv_jacobian(&v);
                let mut jac = match (jb, jg) {
                    (Jacobian::Tri(mut t), Jacobian::Tri(d)) => {
                        t.scale_columns(&d.diag);
                        Jacobian::Tri(t)
                    }
                    (jb, jg) => Jacobian::Dense(jb.to_dense() * jg.to_dense()),
                };
                match &mut jac {
                    Jacobian::Tri(t) => {
                        for e in t.sub.iter_mut().chain(t.diag.iter_mut()).chain(t.sup.iter_mut()) {
                            *e *= dt;
                        }
                    }
                    Jacobian::Dense(m) => *m *= dt,
                }
                jac.add_diag(&vec![1.0; x.values().len()]);
                Ok(jac)
            },
            |r| (h * r.iter().map(|v| v * v).sum::<f64>()).sqrt(),
            &self.cfg.newton,
        )?;
        Ok(x.into_dual())
    }
}

const SEMI_IMPLICIT_TOL: f64 = 1e-10;
const SEMI_IMPLICIT_MAX_ITER: usize = 100;

/// A simulated trajectory. `w[n]` is `w` at state `n`; the drift used by
/// step `n → n+1` is `w[n]` for the explicit scheme and `w[n+1]` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub scheme: Scheme,
    pub lambda: f64,
    pub eps: f64,
    pub dt: f64,
    pub steps: usize,
    pub stride: usize,
    pub times: Vec<f64>,
    pub v: Vec<DualGridFunction>,
    pub u: Vec<GridFunction>,
    pub w: Vec<DualGridFunction>,
    pub noise: Vec<Vec<f64>>,
    /// `max_n ‖vⁿ − v⁰ + Σ dt·w − Σ dt·F − Σ GΔW‖_h`.
    pub identity_residual: f64,
}

/// Final norms and residuals of a path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub steps: usize,
    pub final_time: f64,
    pub final_u_h: f64,
    pub final_u_v: f64,
    pub final_v_h: f64,
    pub sup_u_h: f64,
    pub sup_u_sup: f64,
    pub identity_residual: f64,
}

impl PathResult {
    pub fn mesh(&self) -> Mesh1D {
        self.v[0].mesh()
    }

    /// Every step is stored.
    pub fn is_dense(&self) -> bool {
        self.stride == 1
    }

    /// The drift used by step `i → i+1` (dense storage only).
    pub fn step_drift(&self, i: usize) -> &DualGridFunction {
        match self.scheme {
            Scheme::ExplicitRegularized => &self.w[i],
            _ => &self.w[i + 1],
        }
    }

    pub fn summary(&self) -> PathSummary {
        let last = self.u.len() - 1;
        PathSummary {
            steps: self.steps,
            final_time: self.times[last],
            final_u_h: self.u[last].norm_h(),
            final_u_v: norm_v(&self.u[last]),
            final_v_h: self.v[last].norm_h(),
            sup_u_h: self.u.iter().map(|u| u.norm_h()).fold(0.0, f64::max),
            sup_u_sup: self.u.iter().map(|u| u.sup_norm()).fold(0.0, f64::max),
            identity_residual: self.identity_residual,
        }
    }

    /// One row per stored state: `t`, then `v`, then `u`.
    pub fn to_csv(&self, header: &str) -> String {
        let n = self.mesh().n();
        let mut out = String::new();
        for line in header.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push('t');
        for i in 0..n {
            out.push_str(&format!(",v{i}"));
        }
        for i in 0..n {
            out.push_str(&format!(",u{i}"));
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t}"));
            for x in self.v[k].values().iter().chain(self.u[k].values()) {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs one path with the increments drawn from `(seed, path_index)`.
pub fn simulate_path(problem: &Problem, cfg: &SolverConfig, path_index: u64) -> Result<PathResult> {
    let steps = cfg.steps()?;
    let noise = noise_record(cfg.seed, path_index, problem.noise.modes, cfg.dt, steps)?;
    simulate_with_noise(problem, cfg, noise)
}

/// Runs one path with a prescribed increment record.
pub fn simulate_with_noise(problem: &Problem, cfg: &SolverConfig, noise: Vec<Vec<f64>>) -> Result<PathResult> {
    let stepper = Stepper::new(problem, cfg)?;
    let steps = cfg.steps()?;
    let stride = cfg.stride()?;
    if noise.len() != steps || noise.iter().any(|x| x.len() != problem.noise.modes) {
        return Err(Error::DimensionMismatch {
            expected: steps,
            got: noise.len(),
        });
    }
    let mut state = stepper.initial_state()?;
    let v0 = state.v.clone();
    let mut balance = DualGridFunction::zeros(problem.mesh());
    let mut identity_residual: f64 = 0.0;
    let mut result = PathResult {
        scheme: cfg.scheme,
        lambda: cfg.lambda,
        eps: cfg.eps,
        dt: cfg.dt,
        steps,
        stride,
        times: vec![0.0],
        v: vec![state.v.clone()],
        u: vec![state.u.clone()],
        w: vec![state.w.clone()],
        noise: Vec::new(),
        identity_residual: 0.0,
    };
    for (n, dw) in noise.iter().enumerate() {
        let rhs_terms = stepper.explicit_rhs(&state, dw)?;
        let (mut next, w_step) = stepper.step(&state, dw)?;
        next.t = (n + 1) as f64 * cfg.dt;
        if !next.v.is_finite() || !next.u.is_finite() {
            return Err(Error::NonConvergence {
                what: "time stepping (non-finite state)",
                iterations: n + 1,
                residual: f64::INFINITY,
            });
        }
        // balance accumulates Σ dt·F + Σ GΔW − Σ dt·w
        balance.axpy(1.0, &(&rhs_terms - &state.v));
        balance.axpy(-cfg.dt, &w_step);
        let defect = &(&next.v - &v0) - &balance;
        identity_residual = identity_residual.max(defect.norm_h());
        state = next;
        if (n + 1) % stride == 0 || n + 1 == steps {
            result.times.push(state.t);
            result.v.push(state.v.clone());
            result.u.push(state.u.clone());
            result.w.push(state.w.clone());
        }
    }
    result.noise = noise;
    result.identity_residual = identity_residual;
    Ok(result)
}

/// Per-time statistics over Monte Carlo paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub paths: usize,
    pub q: f64,
    pub times: Vec<f64>,
    pub mean_u_h: Vec<f64>,
    pub var_u_h: Vec<f64>,
    pub mean_v_h: Vec<f64>,
    pub var_v_h: Vec<f64>,
    pub mean_u_sup: Vec<f64>,
    pub var_u_sup: Vec<f64>,
    /// `E[sup_t ‖u‖_h^q]`.
    pub moment_sup_u_h: f64,
    /// `E[(Σ dt‖u‖²_V)^{q/2}]`.
    pub moment_l2_v: f64,
    pub max_identity_residual: f64,
    /// Mean of the nodal `u` at the final time.
    pub mean_final_u: Vec<f64>,
}

/// Scalar series kept from each Monte Carlo path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStats {
    pub u_h: Vec<f64>,
    pub v_h: Vec<f64>,
    pub u_sup: Vec<f64>,
    pub l2_v: f64,
    pub identity_residual: f64,
    pub final_u: Vec<f64>,
}

impl PathStats {
    pub fn from_path(p: &PathResult) -> Self {
        let dt_stored = p.dt * p.stride as f64;
        Self {
            u_h: p.u.iter().map(|u| u.norm_h()).collect(),
            v_h: p.v.iter().map(|v| v.norm_h()).collect(),
            u_sup: p.u.iter().map(|u| u.sup_norm()).collect(),
            l2_v: p.u[..p.u.len() - 1]
                .iter()
                .map(|u| dt_stored * norm_v(u).powi(2))
                .sum::<f64>()
                .sqrt(),
            identity_residual: p.identity_residual,
            final_u: p.u[p.u.len() - 1].values().to_vec(),
        }
    }
}

/// Runs `m` paths in parallel on the current rayon pool; `per_path` maps each
/// completed path to the retained value. Output order is path order.
pub fn run_paths<T, F>(problem: &Problem, cfg: &SolverConfig, m: usize, per_path: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, PathResult) -> Result<T> + Sync,
{
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    (0..m as u64)
        .into_par_iter()
        .map(|i| per_path(i, simulate_path(problem, cfg, i)?))
        .collect()
}

pub fn monte_carlo(problem: &Problem, cfg: &SolverConfig, m: usize, q: f64) -> Result<MonteCarloSummary> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("moment order q must be ≥ 1, got {q}")));
    }
    let stats = run_paths(problem, cfg, m, |_, p| Ok((p.times.clone(), PathStats::from_path(&p))))?;
    let times = stats[0].0.clone();
    let stats: Vec<PathStats> = stats.into_iter().map(|(_, s)| s).collect();
    summarize(times, &stats, q)
}

/// Moments over per-path statistics sharing the time grid `times`.
pub fn summarize(times: Vec<f64>, stats: &[PathStats], q: f64) -> Result<MonteCarloSummary> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("moment order q must be ≥ 1, got {q}")));
    }
    if stats.is_empty() || stats.iter().any(|s| s.u_h.len() != times.len()) {
        return Err(Error::InvalidArgument("path statistics must be nonempty and share the time grid".into()));
    }
    let m = stats.len();
    let mf = m as f64;
    let moments = |f: &dyn Fn(&PathStats) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        let len = f(&stats[0]).len();
        let mut mean = vec![0.0; len];
        let mut var = vec![0.0; len];
        for s in stats {
            for (a, x) in mean.iter_mut().zip(f(s)) {
                *a += x / mf;
            }
        }
        if m > 1 {
            for s in stats {
                for ((a, x), mu) in var.iter_mut().zip(f(s)).zip(&mean) {
                    *a += (x - mu).powi(2) / (mf - 1.0);
                }
            }
        }
        (mean, var)
    };
    let (mean_u_h, var_u_h) = moments(&|s| &s.u_h);
    let (mean_v_h, var_v_h) = moments(&|s| &s.v_h);
    let (mean_u_sup, var_u_sup) = moments(&|s| &s.u_sup);
    let (mean_final_u, _) = moments(&|s| &s.final_u);
    Ok(MonteCarloSummary {
        paths: m,
        q,
        times,
        mean_u_h,
        var_u_h,
        mean_v_h,
        var_v_h,
        mean_u_sup,
        var_u_sup,
        moment_sup_u_h: stats
            .iter()
            .map(|s| s.u_h.iter().cloned().fold(0.0, f64::max).powf(q))
            .sum::<f64>()
            / mf,
        moment_l2_v: stats.iter().map(|s| s.l2_v.powf(q)).sum::<f64>() / mf,
        max_identity_residual: stats.iter().map(|s| s.identity_residual).fold(0.0, f64::max),
        mean_final_u,
    })
}
