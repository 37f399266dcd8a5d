//! Experiment configuration: TOML schema, validation and the config hash.

use std::path::{Path, PathBuf};

use dnsde_core::graph1d::{GraphKind, ScalarGraph};
use dnsde_core::noise::{Multiplicative, NoiseModel};
use dnsde_core::operators::{DivergenceFormB, Flux, NemytskiiA, NewtonConfig, NonlocalKernel};
use dnsde_core::solver::{self, Drift, Problem, Scheme, SolverConfig, DEFAULT_STORAGE_CAP};
use dnsde_core::space::{sine_profile, DualGridFunction, GridFunction, Mesh1D};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), key.as_ref().map(|k| format!(" (key `{k}`)")).unwrap_or_default())]
    ParseError {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("invalid `{field}`: {reason}")]
    ValidationError { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::ValidationError {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// A complete experiment description. Every table except `mesh` and
/// `solver` is optional; omitted keys take the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Monte Carlo path count `M`.
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Output directory.
    #[serde(default = "default_out")]
    pub out: String,
    pub mesh: MeshSpec,
    #[serde(default = "default_graph")]
    pub graph: GraphKind,
    #[serde(default)]
    pub a: ASpec,
    #[serde(default)]
    pub b: BSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub v0: ProfileSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
}

fn default_seed() -> u64 {
    0
}
fn default_paths() -> usize {
    1
}
fn default_out() -> String {
    "out".into()
}
fn default_graph() -> GraphKind {
    GraphKind::Identity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Interior nodes.
    pub n: usize,
}

/// How `A` acts: pointwise through `graph`, or as the linear map
/// `c·I + K` with a Gaussian kernel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ASpec {
    #[default]
    Pointwise,
    Nonlocal { c: f64, amplitude: f64, length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxSpec {
    Linear { c: f64 },
    ArctanPerturbed { a: f64 },
}

impl Default for FluxSpec {
    fn default() -> Self {
        FluxSpec::Linear { c: 1.0 }
    }
}

impl From<FluxSpec> for Flux {
    fn from(f: FluxSpec) -> Self {
        match f {
            FluxSpec::Linear { c } => Flux::Linear { c },
            FluxSpec::ArctanPerturbed { a } => Flux::ArctanPerturbed { a },
        }
    }
}

/// `B = −div q(∇·) + β₀`, or the spectral power `R^s` when `fractional` is set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BSpec {
    #[serde(default)]
    pub flux: FluxSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractional: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<GraphKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default)]
    pub sigma0: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default = "default_multiplicative")]
    pub multiplicative: Multiplicative,
}

fn default_modes() -> usize {
    1
}
fn default_decay() -> f64 {
    1.0
}
fn default_multiplicative() -> Multiplicative {
    Multiplicative::Additive
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            sigma0: 0.0,
            decay: default_decay(),
            multiplicative: default_multiplicative(),
        }
    }
}

/// `F(u) = a·u + b` with a constant `b`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    #[default]
    Zero,
    Affine { a: f64, b: f64 },
}

/// Initial datum `v₀`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Sine {
        #[serde(default = "default_k")]
        k: usize,
        amplitude: f64,
    },
    /// A constant `v₀` with `γ(v₀) = 0`: the material sits on a plateau.
    ConstantInPlateau { value: f64 },
    #[default]
    Zero,
    /// A single-row CSV as written by `GridFunction::to_csv`.
    File { path: String },
}

fn default_k() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSpec {
    #[serde(default = "default_tol")]
    pub tol_abs: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_backtrack")]
    pub backtrack: f64,
    #[serde(default = "default_halvings")]
    pub max_halvings: usize,
}

fn default_tol() -> f64 {
    NewtonConfig::default().tol_abs
}
fn default_max_iter() -> usize {
    NewtonConfig::default().max_iter
}
fn default_backtrack() -> f64 {
    NewtonConfig::default().backtrack
}
fn default_halvings() -> usize {
    NewtonConfig::default().max_halvings
}

impl Default for NewtonSpec {
    fn default() -> Self {
        let d = NewtonConfig::default();
        Self {
            tol_abs: d.tol_abs,
            max_iter: d.max_iter,
            backtrack: d.backtrack,
            max_halvings: d.max_halvings,
        }
    }
}

impl From<NewtonSpec> for NewtonConfig {
    fn from(s: NewtonSpec) -> Self {
        NewtonConfig {
            tol_abs: s.tol_abs,
            max_iter: s.max_iter,
            backtrack: s.backtrack,
            max_halvings: s.max_halvings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub scheme: Scheme,
    pub lambda: f64,
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_storage_cap")]
    pub storage_cap: usize,
    #[serde(default)]
    pub newton: NewtonSpec,
}

fn default_storage_cap() -> usize {
    DEFAULT_STORAGE_CAP
}

/// Parameters of the individual experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Decreasing `λ` list of the convergence studies.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// `λ` and `ε` grids of the ledger sweep.
    #[serde(default = "default_sweep")]
    pub sweep_lambdas: Vec<f64>,
    #[serde(default = "default_sweep")]
    pub sweep_epss: Vec<f64>,
    /// Halving time steps of the Itô check.
    #[serde(default = "default_dts")]
    pub dts: Vec<f64>,
    /// Moment order `q` of the simulation summary.
    #[serde(default = "default_q")]
    pub q: f64,
    /// Sample range and count of the graph hypothesis check.
    #[serde(default = "default_range")]
    pub range: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Random points of the graph calculus suite.
    #[serde(default = "default_calculus_points")]
    pub calculus_points: usize,
    /// Random `(u, λ, ε)` triples of the operator bound study.
    #[serde(default = "default_triples")]
    pub triples: usize,
    #[serde(default)]
    pub uniqueness: UniquenessSpec,
    #[serde(default)]
    pub heat: HeatSpec,
}

fn default_lambdas() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}
fn default_sweep() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn default_dts() -> Vec<f64> {
    vec![4e-4, 2e-4, 1e-4]
}
fn default_q() -> f64 {
    2.0
}
fn default_range() -> [f64; 2] {
    [-10.0, 10.0]
}
fn default_samples() -> usize {
    10_000
}
fn default_calculus_points() -> usize {
    10_000
}
fn default_triples() -> usize {
    100
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            lambdas: default_lambdas(),
            sweep_lambdas: default_sweep(),
            sweep_epss: default_sweep(),
            dts: default_dts(),
            q: default_q(),
            range: default_range(),
            samples: default_samples(),
            calculus_points: default_calculus_points(),
            triples: default_triples(),
            uniqueness: UniquenessSpec::default(),
            heat: HeatSpec::default(),
        }
    }
}

/// Coarsest level of the uniqueness refinement; `(dt, λ, ε)` halve together
/// at each further level. Unset values fall back to the `solver` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Finest-level bound for the fully linear counterpart.
    #[serde(default = "default_linear_bound")]
    pub linear_bound: f64,
}

fn default_levels() -> usize {
    4
}
fn default_linear_bound() -> f64 {
    1e-3
}

impl Default for UniquenessSpec {
    fn default() -> Self {
        Self {
            lambda0: None,
            eps0: None,
            dt0: None,
            t_end: None,
            levels: default_levels(),
            linear_bound: default_linear_bound(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSpec {
    #[serde(default = "default_heat_n")]
    pub n: usize,
    #[serde(default = "default_heat_dt")]
    pub dt: f64,
    #[serde(default = "default_heat_t")]
    pub t_end: f64,
}

fn default_heat_n() -> usize {
    128
}
fn default_heat_dt() -> f64 {
    1e-3
}
fn default_heat_t() -> f64 {
    0.05
}

impl Default for HeatSpec {
    fn default() -> Self {
        Self {
            n: default_heat_n(),
            dt: default_heat_dt(),
            t_end: default_heat_t(),
        }
    }
}

/// The configuration turned into solver objects.
#[derive(Debug, Clone)]
pub struct Built {
    pub mesh: Mesh1D,
    /// `None` in nonlocal mode.
    pub graph: Option<ScalarGraph>,
    pub problem: Problem,
    pub solver: SolverConfig,
    pub newton: NewtonConfig,
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut cfg = parse_str(&text)?;
    if let ProfileSpec::File { path: p } = &mut cfg.v0 {
        let rel = PathBuf::from(&*p);
        if rel.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(rel).display().to_string();
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses without validating; see [`ExperimentConfig::validate`].
pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let key = message.split('`').nth(1).map(str::to_string);
        ConfigError::ParseError { line, key, message }
    })
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("must be positive and finite, got {x}")))
    }
}

fn decreasing(field: &str, xs: &[f64]) -> Result<(), ConfigError> {
    if xs.is_empty() {
        return Err(ConfigError::invalid(field, "must not be empty"));
    }
    if xs.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(ConfigError::invalid(field, "entries must be positive and finite"));
    }
    if xs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError::invalid(field, "must be strictly decreasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// TOML rendering of the fully defaulted config; the hash input.
    pub fn canonical_text(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Hash of the canonical text with the output directory blanked.
    pub fn hash(&self) -> u64 {
        let mut c = self.clone();
        c.out.clear();
        fnv1a64(c.canonical_text().as_bytes())
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build().map(|_| ())
    }

    pub fn mesh(&self) -> Result<Mesh1D, ConfigError> {
        Mesh1D::new(self.mesh.n).map_err(|e| ConfigError::invalid("mesh.n", e.to_string()))
    }

    fn build_a(&self, mesh: Mesh1D) -> Result<(NemytskiiA, Option<ScalarGraph>), ConfigError> {
        let graph = ScalarGraph::from_kind(self.graph.clone()).map_err(|e| ConfigError::invalid("graph", e.to_string()))?;
        match self.a {
            ASpec::Pointwise => Ok((NemytskiiA::Pointwise(graph.clone()), Some(graph))),
            ASpec::Nonlocal { c, amplitude, length } => {
                positive("a.c", c)?;
                positive("a.length", length)?;
                if !(amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(ConfigError::invalid("a.amplitude", "must be nonnegative"));
                }
                let k = NonlocalKernel::gaussian(mesh, c, amplitude, length).map_err(|e| ConfigError::invalid("a", e.to_string()))?;
                Ok((NemytskiiA::NonlocalKernel(k), None))
            }
        }
    }

    fn build_b(&self, mesh: Mesh1D) -> Result<DivergenceFormB, ConfigError> {
        let beta0 = self
            .b
            .beta0
            .clone()
            .map(ScalarGraph::from_kind)
            .transpose()
            .map_err(|e| ConfigError::invalid("b.beta0", e.to_string()))?;
        match self.b.fractional {
            Some(s) => DivergenceFormB::fractional(mesh, s, beta0).map_err(|e| ConfigError::invalid("b.fractional", e.to_string())),
            None => {
                match self.b.flux {
                    FluxSpec::Linear { c } => positive("b.flux.c", c)?,
                    FluxSpec::ArctanPerturbed { a } => {
                        if !(a >= 0.0 && a.is_finite()) {
                            return Err(ConfigError::invalid("b.flux.a", "must be nonnegative"));
                        }
                    }
                }
                DivergenceFormB::new(mesh, self.b.flux.into(), beta0).map_err(|e| ConfigError::invalid("b", e.to_string()))
            }
        }
    }

    fn build_v0(&self, mesh: Mesh1D, graph: Option<&ScalarGraph>) -> Result<DualGridFunction, ConfigError> {
        match &self.v0 {
            ProfileSpec::Sine { k, amplitude } => {
                if *k == 0 {
                    return Err(ConfigError::invalid("v0.k", "must be at least 1"));
                }
                Ok(sine_profile(mesh, *k, *amplitude).into_dual())
            }
            ProfileSpec::ConstantInPlateau { value } => {
                let g = graph.ok_or_else(|| ConfigError::invalid("v0.kind", "constant_in_plateau needs a pointwise A"))?;
                if !value.is_finite() || g.gamma(*value) != 0.0 {
                    return Err(ConfigError::invalid("v0.value", format!("γ({value}) ≠ 0: not on a plateau of the graph")));
                }
                Ok(GridFunction::from_fn(mesh, |_| *value).into_dual())
            }
            ProfileSpec::Zero => Ok(DualGridFunction::zeros(mesh)),
            ProfileSpec::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::invalid("v0.path", format!("{path}: {e}")))?;
                let f = GridFunction::from_csv(&text).map_err(|e| ConfigError::invalid("v0.path", e.to_string()))?;
                if f.mesh() != mesh {
                    return Err(ConfigError::invalid("v0.path", format!("file has n = {}, mesh has n = {}", f.mesh().n(), mesh.n())));
                }
                Ok(f.into_dual())
            }
        }
    }

    pub fn build(&self) -> Result<Built, ConfigError> {
        if self.paths == 0 {
            return Err(ConfigError::invalid("paths", "must be at least 1"));
        }
        let mesh = self.mesh()?;
        let (a, graph) = self.build_a(mesh)?;
        let b = self.build_b(mesh)?;
        let noise = NoiseModel::new(self.noise.modes, self.noise.sigma0, self.noise.decay, self.noise.multiplicative)
            .map_err(|e| ConfigError::invalid("noise", e.to_string()))?;
        let drift = match self.drift {
            DriftSpec::Zero => Drift::Zero,
            DriftSpec::Affine { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(ConfigError::invalid("drift", "coefficients must be finite"));
                }
                Drift::Affine {
                    a,
                    b: GridFunction::from_fn(mesh, |_| b),
                }
            }
        };
        let problem = Problem::new(a, b, noise, drift).map_err(|e| ConfigError::invalid("problem", e.to_string()))?;
        let v0 = self.build_v0(mesh, graph.as_ref())?;

        let s = &self.solver;
        positive("solver.eps", s.eps)?;
        let c_a = problem.a.c_a();
        if c_a > 0.0 && s.eps >= 1.0 / c_a {
            return Err(ConfigError::invalid("solver.eps", "must be < 1/c_alpha"));
        }
        if s.scheme.is_regularized() {
            positive("solver.lambda", s.lambda)?;
        } else if !(s.lambda >= 0.0 && s.lambda.is_finite()) {
            return Err(ConfigError::invalid("solver.lambda", "must be nonnegative"));
        }
        positive("solver.dt", s.dt)?;
        positive("solver.t_end", s.t_end)?;
        if s.storage_cap < 2 {
            return Err(ConfigError::invalid("solver.storage_cap", "must be at least 2"));
        }
        let newton: NewtonConfig = s.newton.into();
        newton.validate().map_err(|e| ConfigError::invalid("solver.newton", e.to_string()))?;
        let mut cfg = SolverConfig::new(s.scheme, s.lambda, s.eps, s.dt, s.t_end, self.seed, v0);
        cfg.storage_cap = s.storage_cap;
        cfg.newton = newton;
        cfg.steps().map_err(|e| ConfigError::invalid("solver.dt", e.to_string()))?;
        solver::validate(&problem, &cfg).map_err(|e| ConfigError::invalid("solver", e.to_string()))?;

        let x = &self.experiment;
        decreasing("experiment.lambdas", &x.lambdas)?;
        decreasing("experiment.sweep_lambdas", &x.sweep_lambdas)?;
        decreasing("experiment.sweep_epss", &x.sweep_epss)?;
        if c_a > 0.0 && x.sweep_epss[0] >= 1.0 / c_a {
            return Err(ConfigError::invalid("experiment.sweep_epss", "must be < 1/c_alpha"));
        }
        decreasing("experiment.dts", &x.dts)?;
        if !(x.q >= 1.0) {
            return Err(ConfigError::invalid("experiment.q", "must be at least 1"));
        }
        if !(x.range[0] < x.range[1]) || !x.range.iter().all(|r| r.is_finite()) {
            return Err(ConfigError::invalid("experiment.range", "must be a finite interval [lo, hi] with lo < hi"));
        }
        if x.samples < 100 {
            return Err(ConfigError::invalid("experiment.samples", "must be at least 100"));
        }
        if x.calculus_points == 0 || x.triples == 0 {
            return Err(ConfigError::invalid("experiment", "calculus_points and triples must be positive"));
        }
        let u = &x.uniqueness;
        if u.levels == 0 {
            return Err(ConfigError::invalid("experiment.uniqueness.levels", "must be at least 1"));
        }
        for (field, v) in [
            ("experiment.uniqueness.lambda0", u.lambda0),
            ("experiment.uniqueness.eps0", u.eps0),
            ("experiment.uniqueness.dt0", u.dt0),
            ("experiment.uniqueness.t_end", u.t_end),
        ] {
            if let Some(v) = v {
                positive(field, v)?;
            }
        }
        if let Some(e0) = u.eps0 {
            if c_a > 0.0 && e0 >= 1.0 / c_a {
                return Err(ConfigError::invalid("experiment.uniqueness.eps0", "must be < 1/c_alpha"));
            }
        }
        positive("experiment.uniqueness.linear_bound", u.linear_bound)?;
        Mesh1D::new(x.heat.n).map_err(|e| ConfigError::invalid("experiment.heat.n", e.to_string()))?;
        positive("experiment.heat.dt", x.heat.dt)?;
        positive("experiment.heat.t_end", x.heat.t_end)?;

        Ok(Built {
            mesh,
            graph,
            problem,
            solver: cfg,
            newton,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[mesh]
n = 16

[solver]
scheme = "semi_implicit_regularized"
lambda = 0.01
eps = 0.01
dt = 0.001
t_end = 0.01
"#;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_str(MINIMAL).unwrap();
        assert_eq!(cfg.graph, GraphKind::Identity);
        assert_eq!(cfg.paths, 1);
        assert_eq!(cfg.noise, NoiseSpec::default());
        assert_eq!(cfg.experiment.dts, vec![4e-4, 2e-4, 1e-4]);
        cfg.validate().unwrap();
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = parse_str(MINIMAL).unwrap();
        let again = parse_str(&cfg.canonical_text()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn parse_error_reports_line() {
        let text = MINIMAL.replace("eps = 0.01", "epz = 0.01");
        match parse_str(&text).unwrap_err() {
            ConfigError::ParseError { line, key, .. } => {
                assert_eq!(key.as_deref(), Some("epz"));
                assert_eq!(line, Some(8));
            }
            e => panic!("unexpected {e:?}"),
        }
    }
}
