//! The discrete Gelfand triple `V = H¹₀(0,1) ⊂ H = L²(0,1) ⊂ V*` on a uniform
//! mesh with homogeneous Dirichlet conditions.
//!
//! `H` carries the lumped product `h·Σ aᵢbᵢ`; the Riesz map `R` is the
//! second-difference operator, whose spectrum is known in closed form.
//! Elements of `V*` are stored by their `H`-representative.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

/// Uniform mesh of `(0,1)` with `n` interior nodes `xᵢ = i·h`, `h = 1/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    n: usize,
    h: f64,
}

impl Mesh1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("mesh needs n ≥ 2 interior nodes, got {n}")));
        }
        Ok(Self {
            n,
            h: 1.0 / (n + 1) as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interior node `xᵢ`, `i = 0..n` (0-based; the node at `(i+1)·h`).
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    /// `μₖ = (2 − 2cos(kπh))/h²`, `k = 1..=n`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        (2.0 - 2.0 * (k as f64 * PI * self.h).cos()) / (self.h * self.h)
    }

    /// `vₖ,ᵢ = sin(kπxᵢ)`; `‖vₖ‖²_h = 1/2`.
    pub fn eigenvector(&self, k: usize) -> GridFunction {
        GridFunction::from_fn(*self, |x| (k as f64 * PI * x).sin())
    }

    fn check(&self, other: &Mesh1D) -> Result<()> {
        if self.n != other.n {
            Err(Error::MeshMismatch {
                left: self.n,
                right: other.n,
            })
        } else {
            Ok(())
        }
    }
}

macro_rules! grid_vector {
    ($name:ident) => {
        impl $name {
            pub fn new(mesh: Mesh1D, values: Vec<f64>) -> Result<Self> {
                if values.len() != mesh.n() {
                    return Err(Error::DimensionMismatch {
                        expected: mesh.n(),
                        got: values.len(),
                    });
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("non-finite value at node {i}")));
                }
                Ok(Self { mesh, values })
            }

            pub(crate) fn from_vec(mesh: Mesh1D, values: Vec<f64>) -> Self {
                debug_assert_eq!(values.len(), mesh.n());
                Self { mesh, values }
            }

            pub fn zeros(mesh: Mesh1D) -> Self {
                Self {
                    mesh,
                    values: vec![0.0; mesh.n()],
                }
            }

            pub fn from_fn<F: FnMut(f64) -> f64>(mesh: Mesh1D, f: F) -> Self {
                Self {
                    mesh,
                    values: mesh.nodes().map(f).collect(),
                }
            }

            pub fn mesh(&self) -> Mesh1D {
                self.mesh
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
                Self {
                    mesh: self.mesh,
                    values: self.values.iter().map(|&v| f(v)).collect(),
                }
            }

            /// `self += a·x`.
            pub fn axpy(&mut self, a: f64, x: &Self) {
                debug_assert_eq!(self.values.len(), x.values.len());
                for (s, xv) in self.values.iter_mut().zip(&x.values) {
                    *s += a * xv;
                }
            }

            pub fn scaled(&self, a: f64) -> Self {
                self.map(|v| a * v)
            }

            /// `‖·‖_h`, the discrete `L²` norm.
            pub fn norm_h(&self) -> f64 {
                (self.mesh.h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
            }

            pub fn sup_norm(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }

            /// One CSV row preceded by the `# n=<n> h=<h>` header comment.
            pub fn to_csv(&self) -> String {
                let mut s = String::new();
                writeln!(s, "# n={} h={}", self.mesh.n, self.mesh.h).unwrap();
                let row: Vec<String> = self.values.iter().map(|v| format!("{v:e}")).collect();
                s.push_str(&row.join(","));
                s.push('\n');
                s
            }

            pub fn from_csv(text: &str) -> Result<Self> {
                let mut n = None;
                let mut row = None;
                for line in text.lines() {
                    let line = line.trim();
                    if let Some(rest) = line.strip_prefix('#') {
                        for tok in rest.split_whitespace() {
                            if let Some(v) = tok.strip_prefix("n=") {
                                n = Some(v.parse::<usize>().map_err(|e| {
                                    Error::InvalidArgument(format!("bad mesh header: {e}"))
                                })?);
                            }
                        }
                    } else if !line.is_empty() && row.is_none() {
                        row = Some(line.to_owned());
                    }
                }
                let n = n.ok_or_else(|| Error::InvalidArgument("missing `# n=` header".into()))?;
                let row = row.ok_or_else(|| Error::InvalidArgument("missing value row".into()))?;
                let values = row
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidArgument(format!("bad value: {e}")))?;
                Self::new(Mesh1D::new(n)?, values)
            }
        }

        impl Add<&$name> for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                let mut out = self.clone();
                out.axpy(1.0, rhs);
                out
            }
        }

        impl Sub<&$name> for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                let mut out = self.clone();
                out.axpy(-1.0, rhs);
                out
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, a: f64) -> $name {
                self.scaled(a)
            }
        }

        impl Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                self.scaled(-1.0)
            }
        }
    };
}

/// An `H`-valued (or `V`-valued) state: interior nodal values, boundary zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: Mesh1D,
    values: Vec<f64>,
}

/// A `V*` element stored through its `H`-representative.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGridFunction {
    mesh: Mesh1D,
    values: Vec<f64>,
}

grid_vector!(GridFunction);
grid_vector!(DualGridFunction);

impl GridFunction {
    /// Reinterprets the values as an `H`-representative of a `V*` element.
    pub fn into_dual(self) -> DualGridFunction {
        DualGridFunction {
            mesh: self.mesh,
            values: self.values,
        }
    }
}

impl DualGridFunction {
    /// The identification `H* ≅ H`.
    pub fn into_primal(self) -> GridFunction {
        GridFunction {
            mesh: self.mesh,
            values: self.values,
        }
    }

    pub fn as_primal(&self) -> GridFunction {
        self.clone().into_primal()
    }
}

/// `(a, b)_H = h·Σ aᵢbᵢ`.
pub fn inner_h(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    a.mesh.check(&b.mesh)?;
    Ok(dot_h(a.mesh.h, &a.values, &b.values))
}

/// Duality pairing `⟨f, u⟩` through the `H`-representative of `f`.
pub fn pairing(f: &DualGridFunction, u: &GridFunction) -> Result<f64> {
    f.mesh.check(&u.mesh)?;
    Ok(dot_h(f.mesh.h, &f.values, &u.values))
}

pub(crate) fn dot_h(h: f64, a: &[f64], b: &[f64]) -> f64 {
    h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// `(Ru)ᵢ = (2uᵢ − uᵢ₋₁ − uᵢ₊₁)/h²`.
pub fn apply_r(u: &GridFunction) -> DualGridFunction {
    DualGridFunction::from_vec(u.mesh, laplacian(u.mesh.h, &u.values))
}

pub(crate) fn laplacian(h: f64, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let ih2 = 1.0 / (h * h);
    (0..n)
        .map(|i| {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            (2.0 * u[i] - left - right) * ih2
        })
        .collect()
}

/// `R⁻¹f` by tridiagonal factorization.
pub fn solve_r(f: &DualGridFunction) -> GridFunction {
    let mesh = f.mesh;
    let tri = Tridiagonal::riesz(mesh, 1.0, 0.0);
    GridFunction::from_vec(mesh, tri.solve(&f.values))
}

/// `(I + εR)⁻¹f`.
pub fn smooth(eps: f64, f: &DualGridFunction) -> DualGridFunction {
    let tri = Tridiagonal::riesz(f.mesh, eps, 1.0);
    DualGridFunction::from_vec(f.mesh, tri.solve(&f.values))
}

pub fn norm_v(u: &GridFunction) -> f64 {
    dot_h(u.mesh.h, &u.values, &laplacian(u.mesh.h, &u.values)).max(0.0).sqrt()
}

pub fn norm_vstar(f: &DualGridFunction) -> f64 {
    let g = solve_r(f);
    dot_h(f.mesh.h, &f.values, &g.values).max(0.0).sqrt()
}

pub fn norm_h(u: &GridFunction) -> f64 {
    u.norm_h()
}

/// All eigenpairs `(μₖ, vₖ)`, `k = 1..=n`, of the discrete Riesz map.
pub fn eigenpairs(mesh: Mesh1D) -> Vec<(f64, GridFunction)> {
    (1..=mesh.n).map(|k| (mesh.eigenvalue(k), mesh.eigenvector(k))).collect()
}

/// `Σₖ μₖ^s (u, vₖ)_H/‖vₖ‖²_h · vₖ` by direct spectral synthesis.
pub fn fractional_r(s: f64, u: &GridFunction) -> Result<DualGridFunction> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidArgument(format!("fractional order must lie in (0,1], got {s}")));
    }
    let mesh = u.mesh;
    let n = mesh.n;
    let mut out = vec![0.0; n];
    for k in 1..=n {
        let vk: Vec<f64> = mesh.nodes().map(|x| (k as f64 * PI * x).sin()).collect();
        // ‖vₖ‖²_h = 1/2
        let coeff = 2.0 * dot_h(mesh.h, &u.values, &vk) * mesh.eigenvalue(k).powf(s);
        for (o, v) in out.iter_mut().zip(&vk) {
            *o += coeff * v;
        }
    }
    Ok(DualGridFunction::from_vec(mesh, out))
}

/// Dense matrix of `R^s` acting on nodal values.
pub fn fractional_matrix(mesh: Mesh1D, s: f64) -> DMatrix<f64> {
    let n = mesh.n;
    let basis = DMatrix::from_fn(n, n, |i, k| ((k + 1) as f64 * PI * mesh.node(i)).sin());
    let weights = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * mesh.h * mesh.eigenvalue(i + 1).powf(s)
        } else {
            0.0
        }
    });
    &basis * weights * basis.transpose()
}

/// `u = Σ amplitude·sin(kπx)` sampled on the mesh.
pub fn sine_profile(mesh: Mesh1D, k: usize, amplitude: f64) -> GridFunction {
    GridFunction::from_fn(mesh, |x| amplitude * (k as f64 * PI * x).sin())
}

/// General tridiagonal system, solved by the Thomas algorithm. Stable for the
/// row- or column-diagonally-dominant matrices assembled in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// `sub[i]` couples row `i+1` to column `i`.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    /// `sup[i]` couples row `i` to column `i+1`.
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    /// `a·R + b·I`.
    pub fn riesz(mesh: Mesh1D, a: f64, b: f64) -> Self {
        let n = mesh.n;
        let ih2 = 1.0 / (mesh.h * mesh.h);
        Self {
            sub: vec![-a * ih2; n - 1],
            diag: vec![2.0 * a * ih2 + b; n],
            sup: vec![-a * ih2; n - 1],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn add_diag(&mut self, d: &[f64]) {
        for (a, b) in self.diag.iter_mut().zip(d) {
            *a += b;
        }
    }

    /// Right-multiplies by `diag(d)` (scales column `j` by `d[j]`).
    pub fn scale_columns(&mut self, d: &[f64]) {
        for (i, x) in self.diag.iter_mut().enumerate() {
            *x *= d[i];
        }
        for (i, x) in self.sup.iter_mut().enumerate() {
            *x *= d[i + 1];
        }
        for (i, x) in self.sub.iter_mut().enumerate() {
            *x *= d[i];
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        c[0] = if n > 1 { self.sup[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.sub[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = self.sup[i] / denom;
            }
            d[i] = (rhs[i] - self.sub[i - 1] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j == i + 1 {
                self.sup[i]
            } else if i == j + 1 {
                self.sub[j]
            } else {
                0.0
            }
        })
    }
}
