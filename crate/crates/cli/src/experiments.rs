//! Experiment orchestration: each subcommand turns a validated config into
//! CSV tables and a JSON verdict.

use std::path::Path;

use dnsde_core::diagnostics::{
    self, convergence_joint, convergence_lambda, derivative_convergence, dissipation_defect, energy_ledger, graph_calculus,
    heat_oracle, ito_residual, ledger_derivative_max, ledger_ratios, ledger_sweep, operator_bound_study, uniqueness_refinement,
    Check, ItoVariant, UniquenessMode, LEDGER_NAMES,
};
use dnsde_core::graph1d::ScalarGraph;
use dnsde_core::operators::{DivergenceFormB, NemytskiiA};
use dnsde_core::solver::{run_paths, summarize, PathStats, PathSummary, Problem, SolverConfig};
use dnsde_core::space::Mesh1D;
use serde::Serialize;
use thiserror::Error;

use crate::config::{Built, ConfigError, ExperimentConfig};

/// Slack on the uniform bound `2/c_A`.
const DERIVATIVE_SLACK: f64 = 1e-8;
const DISSIPATION_TOL: f64 = 1e-10;
const LEDGER_RATIO_MAX: f64 = 10.0;
const ITO_HALVING_RATIO: f64 = 1.8;
const CONVERGENCE_FINAL: f64 = 1e-4;
const V_NORM_GAP_FINAL: f64 = 1e-3;
const HEAT_ERROR_MAX: f64 = 5e-3;
const HEAT_RATIO_MIN: f64 = 1.8;
const WARNING_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Simulate,
    ItoCheck,
    ConvergeLambda,
    ConvergeJoint,
    DerivativeCheck,
    UniquenessCheck,
    LedgerSweep,
    ValidateGraph,
    HeatOracle,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::ItoCheck => "ito-check",
            Experiment::ConvergeLambda => "converge-lambda",
            Experiment::ConvergeJoint => "converge-joint",
            Experiment::DerivativeCheck => "derivative-check",
            Experiment::UniquenessCheck => "uniqueness-check",
            Experiment::LedgerSweep => "ledger-sweep",
            Experiment::ValidateGraph => "validate-graph",
            Experiment::HeatOracle => "heat-oracle",
        }
    }

    fn stem(&self) -> String {
        self.name().replace('-', "_")
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] dnsde_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub experiment: String,
    pub config_hash: String,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("verdicts serialize");
        s.push('\n');
        s
    }
}

/// JSON report printed when an experiment cannot run at all.
#[derive(Debug, Clone, Serialize)]
pub struct FailureReport {
    pub experiment: String,
    pub config_hash: Option<String>,
    pub error: String,
}

/// One output file, named relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Verdict,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    /// Writes every artifact and the verdict (`<experiment>.json`).
    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        let io = |path: &Path, source| RunError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for a in &self.artifacts {
            let p = dir.join(&a.name);
            std::fs::write(&p, &a.contents).map_err(|e| io(&p, e))?;
        }
        let p = dir.join(format!("{}.json", self.verdict.experiment.replace('-', "_")));
        std::fs::write(&p, self.verdict.to_json()).map_err(|e| io(&p, e))
    }

    pub fn csv(&self) -> impl Iterator<Item = &Artifact> {
        self.artifacts.iter().filter(|a| a.name.ends_with(".csv"))
    }
}

/// Runs `f` on a dedicated rayon pool of `threads` workers, or on the global
/// pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// `DNSDE_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var("DNSDE_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("DNSDE_THREADS must be a positive integer, got `{s}`")),
        },
    }
}

/// Structural hypotheses that fail for the configured graph.
pub fn hypothesis_warnings(cfg: &ExperimentConfig) -> Vec<String> {
    let Ok(graph) = ScalarGraph::from_kind(cfg.graph.clone()) else {
        return Vec::new();
    };
    let range = (cfg.experiment.range[0], cfg.experiment.range[1]);
    match graph.validate_hypotheses(range, WARNING_SAMPLES) {
        Ok(r) => {
            let mut out = Vec::new();
            if !r.gamma_is_c1 {
                let at = r.gamma_prime_jump_at.map(|x| format!(" near v = {x:.4}")).unwrap_or_default();
                out.push(format!("γ = α⁻¹ is not C¹{at}; uniqueness and the Itô formula are outside their hypotheses"));
            }
            if !r.monotonicity_pass {
                out.push(format!(
                    "measured strong monotonicity {:.3e} is below the declared c_alpha {:.3e}",
                    r.c_alpha_estimate, r.declared_c_alpha
                ));
            }
            if !r.growth_pass {
                out.push(format!(
                    "measured growth {:.3e} exceeds the declared constant {:.3e}",
                    r.growth_estimate, r.declared_growth
                ));
            }
            out
        }
        Err(e) => vec![e.to_string()],
    }
}

/// CSV text with the config-hash comment and a header row.
struct Table {
    text: String,
}

impl Table {
    fn new(hash: &str, experiment: Experiment, columns: &[&str]) -> Self {
        let mut text = format!("# config_hash={hash} experiment={}\n", experiment.name());
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    fn finish(self, name: impl Into<String>) -> Artifact {
        Artifact {
            name: name.into(),
            contents: self.text,
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn derivative_bound(a: &NemytskiiA) -> f64 {
    2.0 / a.c_a() + DERIVATIVE_SLACK
}

/// `max_k s[k+1]/s[k]`; at most 1 iff the series is nonincreasing.
fn max_step_ratio(s: &[f64]) -> f64 {
    s.windows(2)
        .map(|w| if w[0] == 0.0 { if w[1] == 0.0 { 1.0 } else { f64::INFINITY } } else { w[1] / w[0] })
        .fold(0.0, f64::max)
}

fn nonincreasing(name: &str, s: &[f64]) -> Check {
    Check::at_most(name, max_step_ratio(s), 1.0)
}

fn strictly_decreasing(name: &str, s: &[f64]) -> Check {
    let r = max_step_ratio(s);
    Check {
        name: name.into(),
        pass: r < 1.0,
        measured: r,
        threshold: 1.0,
    }
}

fn positive_series(name: &str, s: &[f64]) -> Check {
    let m = s.iter().cloned().fold(f64::INFINITY, f64::min);
    Check {
        name: name.into(),
        pass: m > 0.0,
        measured: m,
        threshold: 0.0,
    }
}

fn dense(cfg: &SolverConfig) -> Result<SolverConfig, RunError> {
    Ok(SolverConfig {
        storage_cap: cfg.steps()? + 1,
        ..cfg.clone()
    })
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    built: Built,
    hash: String,
    exp: Experiment,
}

impl Ctx<'_> {
    fn table(&self, columns: &[&str]) -> Table {
        Table::new(&self.hash, self.exp, columns)
    }

    fn file(&self, suffix: &str) -> String {
        format!("{}{suffix}", self.exp.stem())
    }

    fn outcome(&self, checks: Vec<Check>, artifacts: Vec<Artifact>) -> Outcome {
        Outcome {
            verdict: Verdict {
                experiment: self.exp.name().into(),
                config_hash: self.hash.clone(),
                checks,
            },
            artifacts,
        }
    }
}

/// Runs one experiment. The config is validated first; all randomness derives
/// from `cfg.seed`, so the outcome does not depend on the thread count.
pub fn run(exp: Experiment, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let ctx = Ctx {
        cfg,
        built: cfg.build()?,
        hash: cfg.hash_hex(),
        exp,
    };
    match exp {
        Experiment::Simulate => simulate(&ctx),
        Experiment::ItoCheck => ito_check(&ctx),
        Experiment::ConvergeLambda => converge_lambda(&ctx),
        Experiment::ConvergeJoint => converge_joint(&ctx),
        Experiment::DerivativeCheck => derivative_check(&ctx),
        Experiment::UniquenessCheck => uniqueness_check(&ctx),
        Experiment::LedgerSweep => ledger_sweep_exp(&ctx),
        Experiment::ValidateGraph => validate_graph(&ctx),
        Experiment::HeatOracle => heat(&ctx),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    paths: Vec<PathSummary>,
    ledger_maxima: Option<Vec<(String, f64)>>,
    max_derivative_norm: Option<f64>,
    max_dissipation_defect: Option<f64>,
    moments: dnsde_core::solver::MonteCarloSummary,
}

struct PathOutput {
    csv: String,
    summary: PathSummary,
    stats: PathStats,
    times: Vec<f64>,
    ledger: Vec<diagnostics::LedgerRecord>,
    dissipation: Option<f64>,
    finite: bool,
    steps: usize,
}

fn simulate(ctx: &Ctx) -> Result<Outcome, RunError> {
    let Built { problem, solver, newton, .. } = &ctx.built;
    let m = ctx.cfg.paths;
    let outputs = run_paths(problem, solver, m, |i, p| {
        let header = format!("config_hash={} experiment=simulate path={i}", ctx.hash);
        let ledger = if p.scheme.is_regularized() {
            energy_ledger(&problem.a, &problem.b, &p, newton)?
        } else {
            Vec::new()
        };
        let dissipation = if problem.is_deterministic() {
            Some(dissipation_defect(&problem.a, &p)?)
        } else {
            None
        };
        Ok(PathOutput {
            csv: p.to_csv(&header),
            summary: p.summary(),
            stats: PathStats::from_path(&p),
            times: p.times.clone(),
            finite: p.v.iter().all(|v| v.is_finite()) && p.u.iter().all(|u| u.is_finite()),
            steps: p.steps,
            ledger,
            dissipation,
        })
    })?;

    let mut artifacts: Vec<Artifact> = outputs
        .iter()
        .enumerate()
        .map(|(i, o)| Artifact {
            name: format!("simulate_path_{i:03}.csv"),
            contents: o.csv.clone(),
        })
        .collect();

    let stats: Vec<PathStats> = outputs.iter().map(|o| o.stats.clone()).collect();
    let moments = summarize(outputs[0].times.clone(), &stats, ctx.cfg.experiment.q)?;
    let mut t = ctx.table(&["t", "mean_u_h", "var_u_h", "mean_v_h", "var_v_h", "mean_u_sup", "var_u_sup"]);
    for (k, &time) in moments.times.iter().enumerate() {
        t.row(&[
            num(time),
            num(moments.mean_u_h[k]),
            num(moments.var_u_h[k]),
            num(moments.mean_v_h[k]),
            num(moments.var_v_h[k]),
            num(moments.mean_u_sup[k]),
            num(moments.var_u_sup[k]),
        ]);
    }
    artifacts.push(t.finish("simulate_moments.csv"));

    let regularized = solver.scheme.is_regularized();
    let mut checks = vec![Check::flag("all_finite", outputs.iter().all(|o| o.finite))];
    let residual = outputs.iter().map(|o| o.summary.identity_residual).fold(0.0, f64::max);
    checks.push(Check::at_most("integrated_identity_residual", residual, outputs[0].steps as f64 * newton.tol_abs));

    let mut ledger_maxima = None;
    let mut max_derivative = None;
    if regularized {
        let mut cols = vec!["path", "t"];
        cols.extend(LEDGER_NAMES);
        cols.push("derivative_norm");
        let mut t = ctx.table(&cols);
        let mut maxima = [0.0_f64; 7];
        for (i, o) in outputs.iter().enumerate() {
            for r in &o.ledger {
                let mut cells = vec![i.to_string(), num(r.t)];
                cells.extend(r.values.iter().map(|&v| num(v)));
                cells.push(r.derivative_norm.map(num).unwrap_or_default());
                t.row(&cells);
                for (m, v) in maxima.iter_mut().zip(r.values) {
                    *m = m.max(v);
                }
            }
        }
        artifacts.push(t.finish("simulate_ledger.csv"));
        let d = outputs.iter().map(|o| ledger_derivative_max(&o.ledger)).fold(0.0, f64::max);
        checks.push(Check::at_most("derivative_bound", d, derivative_bound(&problem.a)));
        ledger_maxima = Some(LEDGER_NAMES.iter().map(|s| s.to_string()).zip(maxima).collect());
        max_derivative = Some(d);
    }
    let dissipation = outputs.iter().filter_map(|o| o.dissipation).reduce(f64::max);
    if let Some(d) = dissipation {
        checks.push(Check::at_most("dissipation", d, DISSIPATION_TOL));
    }

    let summary = SimulateSummary {
        paths: outputs.iter().map(|o| o.summary.clone()).collect(),
        ledger_maxima,
        max_derivative_norm: max_derivative,
        max_dissipation_defect: dissipation,
        moments,
    };
    artifacts.push(Artifact {
        name: "simulate_summary.json".into(),
        contents: serde_json::to_string_pretty(&summary).expect("summaries serialize") + "\n",
    });
    Ok(ctx.outcome(checks, artifacts))
}

fn ito_variant(cfg: &SolverConfig) -> ItoVariant {
    if cfg.scheme.is_regularized() {
        ItoVariant::Regularized
    } else {
        ItoVariant::Limit
    }
}

fn ito_check(ctx: &Ctx) -> Result<Outcome, RunError> {
    let Built { problem, solver, .. } = &ctx.built;
    let m = ctx.cfg.paths;
    let variant = ito_variant(solver);
    let deterministic = problem.deterministic();
    let mut rms = Vec::new();
    let mut det = Vec::new();
    for &dt in &ctx.cfg.experiment.dts {
        let cfg = SolverConfig { dt, ..solver.clone() };
        let cfg = dense(&cfg).map_err(|_| ConfigError::ValidationError {
            field: "experiment.dts".into(),
            reason: format!("dt = {dt} does not divide t_end = {}", solver.t_end),
        })?;
        dnsde_core::solver::validate(problem, &cfg)?;
        let finals = run_paths(problem, &cfg, m, |_, p| Ok(ito_residual(problem, &p, variant)?.final_residual()))?;
        rms.push((finals.iter().map(|r| r * r).sum::<f64>() / m as f64).sqrt());
        let path = dnsde_core::solver::simulate_path(&deterministic, &cfg, 0)?;
        det.push(ito_residual(&deterministic, &path, variant)?.final_residual().abs());
    }
    let mut t = ctx.table(&["dt", "rms_residual", "deterministic_residual"]);
    for (k, &dt) in ctx.cfg.experiment.dts.iter().enumerate() {
        t.row(&[num(dt), num(rms[k]), num(det[k])]);
    }
    let min_ratio = det
        .windows(2)
        .map(|w| w[0] / w[1])
        .fold(f64::INFINITY, f64::min);
    let mut checks = vec![strictly_decreasing("rms_strictly_decreasing", &rms)];
    if det.len() > 1 {
        checks.push(Check::at_least("deterministic_halving_ratio", min_ratio, ITO_HALVING_RATIO));
    }
    Ok(ctx.outcome(checks, vec![t.finish(ctx.file(".csv"))]))
}

fn converge_lambda(ctx: &Ctx) -> Result<Outcome, RunError> {
    let Built { problem, solver, newton, .. } = &ctx.built;
    let pts = convergence_lambda(&problem.a, solver.eps, &solver.v0, &ctx.cfg.experiment.lambdas, newton)?;
    let mut t = ctx.table(&["lambda", "e1", "e2"]);
    for p in &pts {
        t.row(&[num(p.lambda), num(p.e1), num(p.e2)]);
    }
    let e1: Vec<f64> = pts.iter().map(|p| p.e1).collect();
    let e2: Vec<f64> = pts.iter().map(|p| p.e2).collect();
    let checks = vec![
        positive_series("e1_positive", &e1),
        positive_series("e2_positive", &e2),
        nonincreasing("e1_nonincreasing", &e1),
        nonincreasing("e2_nonincreasing", &e2),
        Check::at_most("e2_final", *e2.last().expect("nonempty"), CONVERGENCE_FINAL),
    ];
    Ok(ctx.outcome(checks, vec![t.finish(ctx.file(".csv"))]))
}

fn converge_joint(ctx: &Ctx) -> Result<Outcome, RunError> {
    let Built { problem, solver, newton, .. } = &ctx.built;
    let pts = convergence_joint(&problem.a, &solver.v0, &ctx.cfg.experiment.lambdas, newton)?;
    let mut t = ctx.table(&["lambda", "gap", "v_norm_gap", "h_error"]);
    for p in &pts {
        t.row(&[num(p.lambda), num(p.gap), num(p.v_norm_gap), num(p.h_error)]);
    }
    let gap: Vec<f64> = pts.iter().map(|p| p.gap).collect();
    let last = pts.last().expect("nonempty");
    let checks = vec![
        nonincreasing("gap_nonincreasing", &gap),
        Check::at_most("gap_final", last.gap, CONVERGENCE_FINAL),
        Check::at_most("v_norm_gap_final", last.v_norm_gap, V_NORM_GAP_FINAL),
    ];
    Ok(ctx.outcome(checks, vec![t.finish(ctx.file(".csv"))]))
}

fn derivative_check(ctx: &Ctx) -> Result<Outcome, RunError> {
    let Built { problem, solver, newton, mesh, .. } = &ctx.built;
    let hdir = mesh.eigenvector(1);
    let pts = derivative_convergence(&problem.a, solver.eps, &solver.v0, &hdir, &ctx.cfg.experiment.lambdas, newton)?;
    let mut t = ctx.table(&["lambda", "probe1", "probe2", "probe3", "h_error"]);
    for p in &pts {
        t.row(&[num(p.lambda), num(p.probes[0]), num(p.probes[1]), num(p.probes[2]), num(p.h_error)]);
    }
    let probe_max: Vec<f64> = pts.iter().map(|p| p.probes.iter().fold(0.0_f64, |m, x| m.max(x.abs()))).collect();
    let h_err: Vec<f64> = pts.iter().map(|p| p.h_error).collect();
    let worst = operator_bound_study(&problem.a, *mesh, ctx.cfg.experiment.triples, ctx.cfg.seed)?;
    let checks = vec![
        nonincreasing("probes_nonincreasing", &probe_max),
        Check::at_most("probes_final", *probe_max.last().expect("nonempty"), CONVERGENCE_FINAL),
        nonincreasing("h_error_nonincreasing", &h_err),
        Check::at_most("operator_bound", worst, derivative_bound(&problem.a)),
    ];
    Ok(ctx.outcome(checks, vec![t.finish(ctx.file(".csv"))]))
}

/// The same equation with `A = I` and `B = R`.
fn linear_counterpart(problem: &Problem, mesh: Mesh1D) -> Result<Problem, RunError> {
    Ok(Problem::new(
        NemytskiiA::Pointwise(ScalarGraph::identity()),
        DivergenceFormB::riesz(mesh),
        problem.noise,
        problem.drift.clone(),
    )?)
}

fn uniqueness_check(ctx: &Ctx) -> Result<Outcome, RunError> {
    let Built { problem, solver, mesh, .. } = &ctx.built;
    let mode = if problem.a.is_linear() {
        UniquenessMode::LinearA
    } else if problem.b.is_riesz() {
        UniquenessMode::LinearB
    } else {
        return Err(ConfigError::ValidationError {
            field: "b".into(),
            reason: "uniqueness needs a linear A or B = R".into(),
        }
        .into());
    };
    let u = &ctx.cfg.experiment.uniqueness;
    let lambda0 = u.lambda0.unwrap_or(solver.lambda);
    let eps0 = u.eps0.unwrap_or(solver.eps);
    let dt0 = u.dt0.unwrap_or(solver.dt);
    let t_end = u.t_end.unwrap_or(solver.t_end);
    if !(lambda0 > 0.0) {
        return Err(ConfigError::ValidationError {
            field: "experiment.uniqueness.lambda0".into(),
            reason: "must be positive; set it when solver.lambda is 0".into(),
        }
        .into());
    }
    let run = |p: &Problem, mode| uniqueness_refinement(p, &solver.v0, solver.seed, lambda0, eps0, dt0, t_end, u.levels, mode);
    let gaps = run(problem, mode)?;
    let linear = run(&linear_counterpart(problem, *mesh)?, UniquenessMode::LinearA)?;
    let mut t = ctx.table(&["level", "lambda", "eps", "dt", "gap", "linear_gap"]);
    for (l, (g, lg)) in gaps.iter().zip(&linear).enumerate() {
        let f = 0.5_f64.powi(l as i32);
        t.row(&[l.to_string(), num(lambda0 * f), num(eps0 * f), num(dt0 * f), num(*g), num(*lg)]);
    }
    let checks = vec![
        nonincreasing("gap_nonincreasing", &gaps),
        nonincreasing("linear_gap_nonincreasing", &linear),
        Check::at_most("linear_gap_final", *linear.last().expect("nonempty"), u.linear_bound),
    ];
    Ok(ctx.outcome(checks, vec![t.finish(ctx.file(".csv"))]))
}

fn ledger_sweep_exp(ctx: &Ctx) -> Result<Outcome, RunError> {
    let Built { problem, solver, .. } = &ctx.built;
    if !solver.scheme.is_regularized() {
        return Err(ConfigError::ValidationError {
            field: "solver.scheme".into(),
            reason: "the ledger sweep needs a regularized scheme".into(),
        }
        .into());
    }
    let x = &ctx.cfg.experiment;
    let pts = ledger_sweep(problem, solver, &x.sweep_lambdas, &x.sweep_epss, 0)?;
    let mut cols = vec!["lambda", "eps"];
    cols.extend(LEDGER_NAMES);
    cols.push("derivative_norm");
    let mut t = ctx.table(&cols);
    for p in &pts {
        let mut cells = vec![num(p.lambda), num(p.eps)];
        cells.extend(p.maxima.iter().map(|&v| num(v)));
        cells.push(num(p.derivative_norm));
        t.row(&cells);
    }
    let ratios = ledger_ratios(&pts);
    let mut checks: Vec<Check> = LEDGER_NAMES
        .iter()
        .zip(ratios)
        .map(|(name, r)| Check::at_most(format!("{name}_max_over_median"), r, LEDGER_RATIO_MAX))
        .collect();
    checks.push(Check::flag("all_finite", pts.iter().all(|p| p.finite)));
    let d = pts.iter().map(|p| p.derivative_norm).fold(0.0, f64::max);
    checks.push(Check::at_most("derivative_bound", d, derivative_bound(&problem.a)));
    Ok(ctx.outcome(checks, vec![t.finish(ctx.file(".csv"))]))
}

fn validate_graph(ctx: &Ctx) -> Result<Outcome, RunError> {
    let graph = ScalarGraph::from_kind(ctx.cfg.graph.clone())?;
    let x = &ctx.cfg.experiment;
    let report = graph.validate_hypotheses((x.range[0], x.range[1]), x.samples)?;
    let eps = if graph.c_alpha > 0.0 { 0.5 / graph.c_alpha } else { 0.5 };
    let mut checks = vec![
        Check::at_least("strong_monotonicity", report.c_alpha_estimate, report.declared_c_alpha),
        Check::at_most("linear_growth", report.growth_estimate, report.declared_growth),
        Check {
            name: "gamma_c1".into(),
            pass: report.gamma_is_c1,
            measured: report.gamma_prime_jump_at.unwrap_or(0.0),
            threshold: 0.0,
        },
    ];
    checks[0].pass = report.monotonicity_pass;
    checks[1].pass = report.growth_pass;
    checks.extend(graph_calculus(&graph, eps, x.calculus_points, x.calculus_points, ctx.cfg.seed)?);
    let mut t = ctx.table(&["name", "pass", "measured", "threshold"]);
    for c in &checks {
        t.row(&[c.name.clone(), c.pass.to_string(), num(c.measured), num(c.threshold)]);
    }
    Ok(ctx.outcome(checks, vec![t.finish(ctx.file(".csv"))]))
}

fn heat(ctx: &Ctx) -> Result<Outcome, RunError> {
    let h = &ctx.cfg.experiment.heat;
    let mesh = Mesh1D::new(h.n)?;
    let coarse = heat_oracle(mesh, h.dt, h.t_end)?;
    let fine = heat_oracle(mesh, 0.5 * h.dt, h.t_end)?;
    let mut t = ctx.table(&["n", "dt", "t_end", "error"]);
    for r in [&coarse, &fine] {
        t.row(&[r.n.to_string(), num(r.dt), num(r.t_end), num(r.error)]);
    }
    let checks = vec![
        Check::at_most("heat_error", coarse.error, HEAT_ERROR_MAX),
        Check::at_least("halving_ratio", coarse.error / fine.error, HEAT_RATIO_MIN),
    ];
    Ok(ctx.outcome(checks, vec![t.finish(ctx.file(".csv"))]))
}

/// One-line description of a run, for logging.
pub fn describe(exp: Experiment, cfg: &ExperimentConfig) -> String {
    format!("{} (config {}, seed {}, paths {})", exp.name(), cfg.hash_hex(), cfg.seed, cfg.paths)
}
