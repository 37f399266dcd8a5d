//! Built-in scenarios, stored as TOML so they go through the same parser as
//! user files.

use crate::config::{parse_str, ConfigError, ExperimentConfig};

pub const NAMES: [&str; 4] = ["stefan", "nonlocal-a", "fractional-b", "stress-stefan"];

/// Two-phase enthalpy relation with a smoothed inverse, `B = R`, bounded
/// multiplicative noise.
pub const STEFAN: &str = r#"# Stefan-type graph with C¹ inverse
seed = 7
paths = 32

[mesh]
n = 64

[graph]
kind = "stefan_smooth"
kappa = 1.0

[noise]
modes = 8
sigma0 = 0.5
decay = 1.0
multiplicative = { kind = "bounded_linear", c = 1.0 }

[v0]
kind = "sine"
k = 1
amplitude = 2.0

[solver]
scheme = "semi_implicit_regularized"
lambda = 0.01
eps = 0.01
dt = 2.5e-4
t_end = 0.05

[experiment]
dts = [4e-4, 2e-4, 1e-4]

[experiment.uniqueness]
lambda0 = 1e-3
eps0 = 1e-3
dt0 = 2.5e-4
t_end = 0.1
levels = 4
"#;

/// `A = c·I + K` with a Gaussian kernel, `B = R`, additive noise.
pub const NONLOCAL_A: &str = r#"# nonlocal A
seed = 7
paths = 8

[mesh]
n = 64

[a]
mode = "nonlocal"
c = 1.0
amplitude = 0.5
length = 0.1

[noise]
modes = 8
sigma0 = 0.5
decay = 1.0

[v0]
kind = "sine"
k = 1
amplitude = 1.0

[solver]
scheme = "semi_implicit_regularized"
lambda = 0.01
eps = 0.01
dt = 2.5e-4
t_end = 0.05

[experiment.uniqueness]
lambda0 = 1e-3
eps0 = 1e-3
dt0 = 2.5e-4
t_end = 0.1
levels = 4
"#;

/// Smoothed Stefan graph plus identity, `B = R^{1/2}`, linear noise.
pub const FRACTIONAL_B: &str = r#"# fractional B
seed = 7
paths = 8

[mesh]
n = 64

[graph]
kind = "sum_with_identity"
c = 1.0
inner = { kind = "stefan_smooth", kappa = 1.0 }

[b]
fractional = 0.5

[noise]
modes = 8
sigma0 = 0.3
decay = 1.0
multiplicative = { kind = "linear" }

[v0]
kind = "sine"
k = 1
amplitude = 2.0

[solver]
scheme = "semi_implicit_regularized"
lambda = 0.01
eps = 0.01
dt = 2.5e-4
t_end = 0.05
"#;

/// Plain Stefan graph: `γ` has corners at `±1`, outside the C¹ hypothesis.
pub const STRESS_STEFAN: &str = r#"# Stefan graph without smoothing
seed = 7
paths = 4

[mesh]
n = 64

[graph]
kind = "stefan"

[noise]
modes = 4
sigma0 = 0.1
decay = 1.0

[v0]
kind = "sine"
k = 1
amplitude = 2.0

[solver]
scheme = "implicit_limit"
lambda = 0.0
eps = 0.01
dt = 1e-3
t_end = 0.05

[experiment.uniqueness]
lambda0 = 1e-3
eps0 = 1e-3
dt0 = 2.5e-4
t_end = 0.1
levels = 4
"#;

pub fn text(name: &str) -> Option<&'static str> {
    match name {
        "stefan" => Some(STEFAN),
        "nonlocal-a" => Some(NONLOCAL_A),
        "fractional-b" => Some(FRACTIONAL_B),
        "stress-stefan" => Some(STRESS_STEFAN),
        _ => None,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    let text = text(name).ok_or_else(|| ConfigError::ValidationError {
        field: "preset".into(),
        reason: format!("unknown preset `{name}`; expected one of {}", NAMES.join(", ")),
    })?;
    let cfg = parse_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in NAMES {
            preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("heat"), Err(ConfigError::ValidationError { .. })));
    }
}
