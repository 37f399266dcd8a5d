//! Truncated cylindrical Wiener noise on `U = ℝ^K` and the coefficient
//! `G(u)eₖ = σₖ·sin(kπx)·m(u)`.

use crate::error::{Error, Result};
use crate::space::{GridFunction, Mesh1D};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The nodewise factor `m(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Multiplicative {
    Additive,
    Linear,
    BoundedLinear { c: f64 },
}

impl Multiplicative {
    pub fn apply(&self, u: f64) -> f64 {
        match *self {
            Multiplicative::Additive => 1.0,
            Multiplicative::Linear => u,
            Multiplicative::BoundedLinear { c } => u / (1.0 + u.abs() / c),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Multiplicative::Additive => 0.0,
            Multiplicative::Linear | Multiplicative::BoundedLinear { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub modes: usize,
    pub sigma0: f64,
    pub decay: f64,
    pub multiplicative: Multiplicative,
}

impl NoiseModel {
    pub fn new(modes: usize, sigma0: f64, decay: f64, multiplicative: Multiplicative) -> Result<Self> {
        let model = Self {
            modes,
            sigma0,
            decay,
            multiplicative,
        };
        model.validate()?;
        Ok(model)
    }

    /// `G = 0`, kept with one mode so that noise records stay well formed.
    pub fn zero() -> Self {
        Self {
            modes: 1,
            sigma0: 0.0,
            decay: 1.0,
            multiplicative: Multiplicative::Additive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::InvalidArgument("noise needs at least one mode".into()));
        }
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma0 must be ≥ 0, got {}", self.sigma0)));
        }
        if !(self.decay > 0.5) {
            return Err(Error::InvalidArgument(format!("decay p must exceed 1/2, got {}", self.decay)));
        }
        if let Multiplicative::BoundedLinear { c } = self.multiplicative {
            if !(c > 0.0) {
                return Err(Error::InvalidArgument(format!("bounded-linear c must be positive, got {c}")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.sigma0 == 0.0
    }

    /// `σₖ = σ₀k^{-p}` for `k = 1..=K`.
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma0 * (k as f64).powf(-self.decay)
    }

    /// `L_G = (Σσₖ²)^{1/2}·max(Lip(m), 1)`; bounds both Lipschitz and growth
    /// constants since `|sin| ≤ 1` and `|m(u)| ≤ 1 + |u|`.
    pub fn lipschitz(&self) -> f64 {
        let s: f64 = (1..=self.modes).map(|k| self.sigma(k).powi(2)).sum();
        s.sqrt() * self.multiplicative.lipschitz().max(1.0)
    }

    /// The columns `Gₖ = G(u)eₖ`.
    pub fn columns(&self, _t: f64, u: &GridFunction) -> Vec<GridFunction> {
        let mesh = u.mesh();
        let m: Vec<f64> = u.values().iter().map(|&x| self.multiplicative.apply(x)).collect();
        (1..=self.modes)
            .map(|k| {
                let s = self.sigma(k);
                let kpi = k as f64 * std::f64::consts::PI;
                let values = (0..mesh.n())
                    .map(|i| s * (kpi * mesh.node(i)).sin() * m[i])
                    .collect();
                GridFunction::from_vec(mesh, values)
            })
            .collect()
    }

    /// `G(u)ξ = Σₖ ξₖσₖφₖm(u)`.
    pub fn apply_g(&self, t: f64, u: &GridFunction, xi: &[f64]) -> Result<GridFunction> {
        if xi.len() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                got: xi.len(),
            });
        }
        let mut out = GridFunction::zeros(u.mesh());
        if self.is_zero() {
            return Ok(out);
        }
        for (g, &x) in self.columns(t, u).iter().zip(xi) {
            out.axpy(x, g);
        }
        Ok(out)
    }

    /// `‖G(u)‖²_{L²(U,H)} = Σₖ σₖ²‖φₖm(u)‖²_h`.
    pub fn hs_norm_sq(&self, t: f64, u: &GridFunction) -> f64 {
        self.columns(t, u).iter().map(|g| g.norm_h().powi(2)).sum()
    }

    /// `Σₖ ‖(G(u₁) − G(u₂))eₖ‖²_h`.
    pub fn hs_distance_sq(&self, t: f64, u1: &GridFunction, u2: &GridFunction) -> f64 {
        self.columns(t, u1)
            .iter()
            .zip(self.columns(t, u2))
            .map(|(a, b)| (a - &b).norm_h().powi(2))
            .sum()
    }
}

/// Counter-based normal stream: the draws at `counter` are a pure function of
/// `(seed, path_index, counter)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    pub seed: u64,
    pub path_index: u64,
    pub counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        Self::at(seed, path_index, 0)
    }

    pub fn at(seed: u64, path_index: u64, counter: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        Self {
            seed,
            path_index,
            counter,
            rng,
        }
    }

    fn uniform_open(&mut self) -> f64 {
        // (0, 1]
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `count` standard normals; advances the counter by `count`.
    pub fn standard_normals(&mut self, count: usize) -> Vec<f64> {
        // two u64 (four 32-bit words) per draw
        self.rng.set_word_pos(u128::from(self.counter) * 4);
        let out = (0..count)
            .map(|_| {
                let u1 = self.uniform_open();
                let u2 = self.uniform_open();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        self.counter += count as u64;
        out
    }

    /// `count` uniforms on `[lo, hi)`; advances the counter by `⌈count/2⌉`.
    pub fn uniforms(&mut self, count: usize, lo: f64, hi: f64) -> Vec<f64> {
        self.rng.set_word_pos(u128::from(self.counter) * 4);
        let out = (0..count)
            .map(|_| lo + (hi - lo) * ((self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)))
            .collect();
        self.counter += count.div_ceil(2) as u64;
        out
    }

    /// `K` independent `N(0, dt)` draws.
    pub fn sample_increment(&mut self, modes: usize, dt: f64) -> Result<Vec<f64>> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let s = dt.sqrt();
        Ok(self.standard_normals(modes).into_iter().map(|z| z * s).collect())
    }
}

/// The full increment record of one path: `steps` vectors of length `modes`.
pub fn noise_record(seed: u64, path_index: u64, modes: usize, dt: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    let mut rng = RngStream::new(seed, path_index);
    (0..steps).map(|_| rng.sample_increment(modes, dt)).collect()
}

/// Sums consecutive groups of `ratio` increments.
pub fn coarsen(record: &[Vec<f64>], ratio: usize) -> Result<Vec<Vec<f64>>> {
    if ratio == 0 || !record.len().is_multiple_of(ratio) {
        return Err(Error::IncompatibleSteps(format!(
            "{} increments cannot be grouped by {ratio}",
            record.len()
        )));
    }
    Ok(record
        .chunks(ratio)
        .map(|chunk| {
            let mut acc = vec![0.0; chunk[0].len()];
            for inc in chunk {
                for (a, b) in acc.iter_mut().zip(inc) {
                    *a += b;
                }
            }
            acc
        })
        .collect())
}

/// Mesh shapes `sin(kπx)` for `k = 1..=K`.
pub fn shapes(mesh: Mesh1D, modes: usize) -> Vec<GridFunction> {
    (1..=modes).map(|k| mesh.eigenvector(k)).collect()
}
