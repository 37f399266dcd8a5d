//! Grid realizations of the operators `A`, `A^ε`, `A_λ^ε = λR + A^ε`, the
//! inverse derivative `D(A⁻¹)`, divergence-form `B` with its resolvent and
//! Yosida approximation, and the trace terms of the Itô formulas.

use crate::error::{Error, Result};
use crate::graph1d::{GraphKind, ScalarGraph};
use crate::space::{
    dot_h, fractional_matrix, laplacian, DualGridFunction, GridFunction, Mesh1D, Tridiagonal,
};
use nalgebra::{DMatrix, DVector};

/// Damped Newton settings shared by every nonlinear solve in this crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol_abs: f64,
    pub max_iter: usize,
    pub backtrack: f64,
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol_abs: 1e-11,
            max_iter: 50,
            backtrack: 0.5,
            max_halvings: 30,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_abs > 0.0) || self.max_iter == 0 || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument(format!("invalid Newton config {self:?}")));
        }
        Ok(())
    }
}

/// A linear map on nodal vectors, tridiagonal where the structure allows.
#[derive(Debug, Clone, PartialEq)]
pub enum Jacobian {
    Tri(Tridiagonal),
    Dense(DMatrix<f64>),
}

impl Jacobian {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Jacobian::Tri(t) => Ok(t.solve(rhs)),
            Jacobian::Dense(m) => m
                .clone()
                .lu()
                .solve(&DVector::from_column_slice(rhs))
                .map(|x| x.as_slice().to_vec())
                .ok_or_else(|| Error::InvalidArgument("singular Jacobian".into())),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Jacobian::Tri(t) => t.mul_vec(x),
            Jacobian::Dense(m) => (m * DVector::from_column_slice(x)).as_slice().to_vec(),
        }
    }

    pub fn add_diag(&mut self, d: &[f64]) {
        match self {
            Jacobian::Tri(t) => t.add_diag(d),
            Jacobian::Dense(m) => {
                for (i, v) in d.iter().enumerate() {
                    m[(i, i)] += v;
                }
            }
        }
    }

    pub fn scale_columns(&mut self, d: &[f64]) {
        match self {
            Jacobian::Tri(t) => t.scale_columns(d),
            Jacobian::Dense(m) => {
                for (j, v) in d.iter().enumerate() {
                    m.column_mut(j).scale_mut(*v);
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Jacobian::Tri(t) => t.to_dense(),
            Jacobian::Dense(m) => m.clone(),
        }
    }
}

/// `Au = c·u + ∫k(·,y)u(y)dy`, realized as `cI + hK`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalKernel {
    pub c: f64,
    kernel: DMatrix<f64>,
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

impl NonlocalKernel {
    /// `kernel[(i,j)] = k(xᵢ, xⱼ)`; must be symmetric, nonnegative, and
    /// positive semidefinite so that `c_A ≥ c`.
    pub fn new(mesh: Mesh1D, c: f64, kernel: DMatrix<f64>) -> Result<Self> {
        let n = mesh.n();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: kernel.nrows(),
            });
        }
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("nonlocal c must be positive, got {c}")));
        }
        let scale = kernel.amax().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (kernel[(i, j)], kernel[(j, i)]);
                if a < 0.0 || (a - b).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "kernel must be symmetric and nonnegative (entry {i},{j})"
                    )));
                }
            }
        }
        let hk = &kernel * mesh.h();
        let eig = hk.clone().symmetric_eigen();
        let kmin = eig.eigenvalues.min();
        if kmin < -1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "kernel is not positive semidefinite (eigenvalue {kmin:e})"
            )));
        }
        let matrix = DMatrix::identity(n, n) * c + hk;
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("nonlocal operator is singular".into()))?;
        Ok(Self {
            c,
            kernel,
            matrix,
            inverse,
            lambda_min: c + kmin.max(0.0),
            lambda_max: c + eig.eigenvalues.max(),
        })
    }

    /// Gaussian kernel `amplitude·exp(−(x−y)²/(2ℓ²))`, which is positive
    /// semidefinite for every length `ℓ`.
    pub fn gaussian(mesh: Mesh1D, c: f64, amplitude: f64, length: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && length > 0.0) {
            return Err(Error::InvalidArgument("gaussian kernel needs amplitude ≥ 0, length > 0".into()));
        }
        let n = mesh.n();
        let k = DMatrix::from_fn(n, n, |i, j| {
            let d = mesh.node(i) - mesh.node(j);
            amplitude * (-d * d / (2.0 * length * length)).exp()
        });
        Self::new(mesh, c, k)
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `(I − (I+εA)⁻¹)/ε`.
    pub fn yosida_matrix(&self, eps: f64) -> DMatrix<f64> {
        let n = self.matrix.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let res = (&id + &self.matrix * eps)
            .try_inverse()
            .expect("I + εA is positive definite");
        (id - res) / eps
    }
}

/// The operator `A`: a Nemytskii map of a scalar graph, or a linear nonlocal
/// operator.
#[derive(Debug, Clone, PartialEq)]
pub enum NemytskiiA {
    Pointwise(ScalarGraph),
    NonlocalKernel(NonlocalKernel),
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).as_slice().to_vec()
}

impl NemytskiiA {
    /// Strong monotonicity constant `c_A`.
    pub fn c_a(&self) -> f64 {
        match self {
            NemytskiiA::Pointwise(g) => g.c_alpha,
            NemytskiiA::NonlocalKernel(k) => k.lambda_min,
        }
    }

    /// Linear growth constant `C_A`.
    pub fn growth(&self) -> f64 {
        match self {
            NemytskiiA::Pointwise(g) => g.growth,
            NemytskiiA::NonlocalKernel(k) => k.lambda_max,
        }
    }

    pub fn graph(&self) -> Option<&ScalarGraph> {
        match self {
            NemytskiiA::Pointwise(g) => Some(g),
            NemytskiiA::NonlocalKernel(_) => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            NemytskiiA::Pointwise(g) => matches!(g.kind(), GraphKind::Identity | GraphKind::ScaledIdentity { .. }),
            NemytskiiA::NonlocalKernel(_) => true,
        }
    }

    /// Checks `ε ∈ (0, 1/c_A)`.
    pub fn check_eps(&self, eps: f64) -> Result<()> {
        let c = self.c_a();
        if !(eps > 0.0) || eps * c >= 1.0 {
            return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1/c_A) with c_A = {c}")));
        }
        Ok(())
    }

    /// `A^ε(u)`.
    pub fn apply_a_eps(&self, eps: f64, u: &GridFunction) -> Result<GridFunction> {
        self.check_eps(eps)?;
        let values = match self {
            NemytskiiA::Pointwise(g) => u
                .values()
                .iter()
                .map(|&x| g.yosida(eps, x))
                .collect::<Result<Vec<_>>>()?,
            NemytskiiA::NonlocalKernel(k) => mat_vec(&k.yosida_matrix(eps), u.values()),
        };
        Ok(GridFunction::from_vec(u.mesh(), values))
    }

    /// `A(u)` with the minimal-norm selection.
    pub fn apply_a(&self, u: &GridFunction) -> DualGridFunction {
        let values = match self {
            NemytskiiA::Pointwise(g) => u.values().iter().map(|&x| g.min_selection(x)).collect(),
            NemytskiiA::NonlocalKernel(k) => mat_vec(&k.matrix, u.values()),
        };
        DualGridFunction::from_vec(u.mesh(), values)
    }

    /// `DA^ε(u)`; diagonal with right derivatives at kinks in pointwise mode.
    pub fn a_eps_jacobian(&self, eps: f64, u: &GridFunction) -> Result<Jacobian> {
        self.check_eps(eps)?;
        match self {
            NemytskiiA::Pointwise(g) => {
                let d = u
                    .values()
                    .iter()
                    .map(|&x| g.yosida_derivative(eps, x))
                    .collect::<Result<Vec<_>>>()?;
                let n = d.len();
                Ok(Jacobian::Tri(Tridiagonal {
                    sub: vec![0.0; n - 1],
                    diag: d,
                    sup: vec![0.0; n - 1],
                }))
            }
            NemytskiiA::NonlocalKernel(k) => Ok(Jacobian::Dense(k.yosida_matrix(eps))),
        }
    }

    /// `λR + DA^ε(u)`.
    pub fn regularized_jacobian(&self, lambda: f64, eps: f64, u: &GridFunction) -> Result<Jacobian> {
        let mesh = u.mesh();
        let riesz = Tridiagonal::riesz(mesh, lambda, 0.0);
        Ok(match self.a_eps_jacobian(eps, u)? {
            Jacobian::Tri(d) => {
                let mut t = riesz;
                t.add_diag(&d.diag);
                Jacobian::Tri(t)
            }
            Jacobian::Dense(m) => Jacobian::Dense(riesz.to_dense() + m),
        })
    }

    /// `(A^ε)⁻¹(y) = εy + A⁻¹(y)`.
    pub fn inverse_a_eps(&self, eps: f64, y: &DualGridFunction) -> GridFunction {
        let mut x = self.gamma_apply(y);
        x.axpy(eps, &y.as_primal());
        x
    }

    /// `A⁻¹(v)`.
    pub fn gamma_apply(&self, v: &DualGridFunction) -> GridFunction {
        let values = match self {
            NemytskiiA::Pointwise(g) => v.values().iter().map(|&x| g.gamma(x)).collect(),
            NemytskiiA::NonlocalKernel(k) => mat_vec(&k.inverse, v.values()),
        };
        GridFunction::from_vec(v.mesh(), values)
    }

    /// `D(A⁻¹)(v)·hdir`.
    pub fn d_ainv_apply(&self, v: &DualGridFunction, hdir: &GridFunction) -> Result<GridFunction> {
        if v.mesh() != hdir.mesh() {
            return Err(Error::MeshMismatch {
                left: v.mesh().n(),
                right: hdir.mesh().n(),
            });
        }
        let values = match self {
            NemytskiiA::Pointwise(g) => v
                .values()
                .iter()
                .zip(hdir.values())
                .map(|(&vi, &hi)| g.gamma_prime(vi) * hi)
                .collect(),
            NemytskiiA::NonlocalKernel(k) => mat_vec(&k.inverse, hdir.values()),
        };
        Ok(GridFunction::from_vec(v.mesh(), values))
    }

    /// `D(A⁻¹)(v)` as a matrix.
    pub fn d_ainv_jacobian(&self, v: &DualGridFunction) -> Jacobian {
        match self {
            NemytskiiA::Pointwise(g) => {
                let d: Vec<f64> = v.values().iter().map(|&x| g.gamma_prime(x)).collect();
                let n = d.len();
                Jacobian::Tri(Tridiagonal {
                    sub: vec![0.0; n - 1],
                    diag: d,
                    sup: vec![0.0; n - 1],
                })
            }
            NemytskiiA::NonlocalKernel(k) => Jacobian::Dense(k.inverse.clone()),
        }
    }

    /// `φ*(v)`: `h·Σ α̂*(vᵢ)` pointwise, `½(A⁻¹v, v)_H` for the linear kernel.
    pub fn phi_star(&self, v: &DualGridFunction) -> f64 {
        let h = v.mesh().h();
        match self {
            NemytskiiA::Pointwise(g) => h * v.values().iter().map(|&x| g.conjugate(x)).sum::<f64>(),
            NemytskiiA::NonlocalKernel(k) => 0.5 * dot_h(h, &mat_vec(&k.inverse, v.values()), v.values()),
        }
    }

    /// `(φ^ε)*(v) = ε‖v‖²_H/2 + φ*(v)`.
    pub fn phi_star_eps(&self, eps: f64, v: &DualGridFunction) -> f64 {
        0.5 * eps * v.norm_h().powi(2) + self.phi_star(v)
    }

    /// Solves `λRx + A^ε(x) = y` by damped Newton, optionally warm-started.
    pub fn invert_a_lambda_eps(
        &self,
        lambda: f64,
        eps: f64,
        y: &DualGridFunction,
        cfg: &NewtonConfig,
        guess: Option<&GridFunction>,
    ) -> Result<GridFunction> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        self.check_eps(eps)?;
        let mesh = y.mesh();
        let residual = |x: &GridFunction| -> Result<Vec<f64>> {
            let ax = self.apply_a_eps(eps, x)?;
            let rx = laplacian(mesh.h(), x.values());
            Ok(rx
                .iter()
                .zip(ax.values())
                .zip(y.values())
                .map(|((r, a), yv)| lambda * r + a - yv)
                .collect())
        };
        let x0 = match guess {
            Some(g) => g.clone(),
            None => GridFunction::zeros(mesh),
        };
        damped_newton(
            "invert_a_lambda_eps",
            x0,
            residual,
            |x| self.regularized_jacobian(lambda, eps, x),
            |r| (mesh.h() * r.iter().map(|v| v * v).sum::<f64>()).sqrt(),
            cfg,
        )
    }

    /// `Σₖ (D(A⁻¹)(v)Gₖ, Gₖ)_H`.
    pub fn trace_limit(&self, v: &DualGridFunction, columns: &[GridFunction]) -> Result<f64> {
        columns.iter().try_fold(0.0, |acc, gk| {
            let d = self.d_ainv_apply(v, gk)?;
            Ok(acc + dot_h(v.mesh().h(), d.values(), gk.values()))
        })
    }

    /// `Σₖ ((λR + DA^ε(u))⁻¹Gₖ, Gₖ)_H`.
    pub fn trace_regularized(
        &self,
        lambda: f64,
        eps: f64,
        u: &GridFunction,
        columns: &[GridFunction],
    ) -> Result<f64> {
        if columns.is_empty() {
            return Ok(0.0);
        }
        let jac = self.regularized_jacobian(lambda, eps, u)?;
        columns.iter().try_fold(0.0, |acc, gk| {
            let k = jac.solve(gk.values())?;
            Ok(acc + dot_h(u.mesh().h(), &k, gk.values()))
        })
    }

    /// Power-iteration estimate of `‖(λR + DA^ε(u))⁻¹‖_{H→H}`, refined by
    /// Rayleigh quotient iteration. Never exceeds the true norm.
    pub fn inverse_jacobian_norm(&self, lambda: f64, eps: f64, u: &GridFunction) -> Result<f64> {
        let jac = self.regularized_jacobian(lambda, eps, u)?;
        let n = u.mesh().n();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nx = norm(&x);
        x.iter_mut().for_each(|a| *a /= nx);
        let mut estimate = 0.0;
        for _ in 0..2000 {
            let y = jac.solve(&x)?;
            let ny = norm(&y);
            if ny == 0.0 {
                return Ok(0.0);
            }
            let done = (ny - estimate).abs() <= 1e-14 * ny;
            estimate = ny;
            x = y.into_iter().map(|a| a / ny).collect();
            if done {
                break;
            }
        }
        // Rayleigh quotient iteration from the power iterate: each converged
        // eigenvalue σ of the Jacobian gives a lower bound 1/σ of the norm.
        let mut best = estimate;
        for _ in 0..30 {
            let mx = jac.mul_vec(&x);
            let sigma: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
            let res = norm(&mx.iter().zip(&x).map(|(m, a)| m - sigma * a).collect::<Vec<_>>());
            if !(sigma > 0.0) {
                break;
            }
            if res <= 1e-13 * sigma {
                best = best.max(1.0 / sigma);
                break;
            }
            let mut shifted = jac.clone();
            shifted.add_diag(&vec![-sigma; n]);
            let y = match shifted.solve(&x) {
                Ok(y) if y.iter().all(|a| a.is_finite()) => y,
                _ => break,
            };
            let ny = norm(&y);
            if !(ny > 0.0) {
                break;
            }
            x = y.into_iter().map(|a| a / ny).collect();
        }
        Ok(best)
    }
}

/// Generic damped Newton with backtracking on the residual norm.
pub(crate) fn damped_newton<T, R, J, N>(
    what: &'static str,
    mut x: GridFunction,
    residual: R,
    jacobian: J,
    norm: N,
    cfg: &NewtonConfig,
) -> Result<GridFunction>
where
    R: Fn(&GridFunction) -> Result<Vec<f64>>,
    J: Fn(&GridFunction) -> Result<T>,
    T: Into<Jacobian>,
    N: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    let mut r = residual(&x)?;
    let mut rn = norm(&r);
    for _ in 0..cfg.max_iter {
        if rn <= cfg.tol_abs {
            return Ok(x);
        }
        let jac: Jacobian = jacobian(&x)?.into();
        let step = jac.solve(&r)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let mut trial = x.clone();
            for (xi, si) in trial.values_mut().iter_mut().zip(&step) {
                *xi -= t * si;
            }
            let rt = residual(&trial)?;
            let nt = norm(&rt);
            if nt.is_finite() && nt <= (1.0 - 1e-4 * t) * rn {
                accepted = Some((trial, rt, nt));
                break;
            }
            t *= cfg.backtrack;
        }
        match accepted {
            Some((xt, rt, nt)) => {
                x = xt;
                r = rt;
                rn = nt;
            }
            None => break,
        }
    }
    if rn <= cfg.tol_abs {
        Ok(x)
    } else {
        Err(Error::NonConvergence {
            what,
            iterations: cfg.max_iter,
            residual: rn,
        })
    }
}

/// Flux `q` of the divergence part `−div q(∇u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flux {
    /// `q(ξ) = c·ξ`.
    Linear { c: f64 },
    /// `q(ξ) = ξ + a·arctan(ξ)`, so `1 ≤ q' ≤ 1 + a`.
    ArctanPerturbed { a: f64 },
}

impl Flux {
    pub fn q(&self, xi: f64) -> f64 {
        match *self {
            Flux::Linear { c } => c * xi,
            Flux::ArctanPerturbed { a } => xi + a * xi.atan(),
        }
    }

    pub fn dq(&self, xi: f64) -> f64 {
        match *self {
            Flux::Linear { c } => c,
            Flux::ArctanPerturbed { a } => 1.0 + a / (1.0 + xi * xi),
        }
    }

    /// Lower bound `c_β` on `q'`.
    pub fn c_beta(&self) -> f64 {
        match *self {
            Flux::Linear { c } => c,
            Flux::ArctanPerturbed { a } => 1.0_f64.min(1.0 + a),
        }
    }

    /// Upper bound `C_β` on `q'`.
    pub fn cap_c_beta(&self) -> f64 {
        match *self {
            Flux::Linear { c } => c,
            Flux::ArctanPerturbed { a } => 1.0_f64.max(1.0 + a),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.c_beta() > 0.0 && self.cap_c_beta().is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("flux {self:?} must satisfy q' ≥ c_β > 0")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Fractional {
    s: f64,
    matrix: DMatrix<f64>,
}

/// `B = −div q(∇u) + β₀(u)`, or `R^s + β₀` in fractional mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceFormB {
    flux: Flux,
    beta0: Option<ScalarGraph>,
    fractional: Option<Fractional>,
    mesh: Mesh1D,
}

impl DivergenceFormB {
    pub fn new(mesh: Mesh1D, flux: Flux, beta0: Option<ScalarGraph>) -> Result<Self> {
        flux.validate()?;
        Ok(Self {
            flux,
            beta0,
            fractional: None,
            mesh,
        })
    }

    /// `B = R`.
    pub fn riesz(mesh: Mesh1D) -> Self {
        Self::new(mesh, Flux::Linear { c: 1.0 }, None).expect("identity flux is valid")
    }

    pub fn fractional(mesh: Mesh1D, s: f64, beta0: Option<ScalarGraph>) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!("fractional order must lie in (0,1), got {s}")));
        }
        Ok(Self {
            flux: Flux::Linear { c: 1.0 },
            beta0,
            fractional: Some(Fractional {
                s,
                matrix: fractional_matrix(mesh, s),
            }),
            mesh,
        })
    }

    pub fn mesh(&self) -> Mesh1D {
        self.mesh
    }

    pub fn flux(&self) -> Flux {
        self.flux
    }

    pub fn beta0(&self) -> Option<&ScalarGraph> {
        self.beta0.as_ref()
    }

    pub fn fractional_order(&self) -> Option<f64> {
        self.fractional.as_ref().map(|f| f.s)
    }

    /// `B = R` exactly.
    pub fn is_riesz(&self) -> bool {
        self.fractional.is_none() && self.beta0.is_none() && self.flux == Flux::Linear { c: 1.0 }
    }

    pub fn is_linear(&self) -> bool {
        self.beta0.is_none() && matches!(self.flux, Flux::Linear { .. })
    }

    /// Coercivity constant `c_B` in `⟨Bu, u⟩ ≥ c_B‖u‖²_V`.
    pub fn coercivity(&self) -> f64 {
        match &self.fractional {
            None => self.flux.c_beta().min(1.0),
            // μ^s ≥ μ_n^{s−1}·μ on the discrete spectrum
            Some(f) => self.mesh.eigenvalue(self.mesh.n()).powf(f.s - 1.0),
        }
    }

    /// Growth constant `C_B` in `‖Bu‖_{V*} ≤ C_B(1 + ‖u‖_V)`.
    pub fn growth(&self) -> f64 {
        let mu1 = self.mesh.eigenvalue(1);
        let main = match &self.fractional {
            None => self.flux.cap_c_beta(),
            Some(f) => mu1.powf(f.s - 1.0),
        };
        match &self.beta0 {
            None => main,
            Some(g) => {
                let c0 = g.growth;
                (main + c0 / mu1).max(c0 / mu1.sqrt())
            }
        }
    }

    fn check_mesh(&self, mesh: Mesh1D) -> Result<()> {
        if mesh != self.mesh {
            return Err(Error::MeshMismatch {
                left: self.mesh.n(),
                right: mesh.n(),
            });
        }
        Ok(())
    }

    /// The main (non-`β₀`) part applied to nodal values.
    fn apply_main(&self, u: &[f64]) -> Vec<f64> {
        match &self.fractional {
            Some(f) => mat_vec(&f.matrix, u),
            None => {
                let h = self.mesh.h();
                let n = u.len();
                let q: Vec<f64> = (0..=n)
                    .map(|e| {
                        let right = if e < n { u[e] } else { 0.0 };
                        let left = if e > 0 { u[e - 1] } else { 0.0 };
                        self.flux.q((right - left) / h)
                    })
                    .collect();
                (0..n).map(|i| (q[i] - q[i + 1]) / h).collect()
            }
        }
    }

    fn main_jacobian(&self, u: &[f64]) -> Jacobian {
        match &self.fractional {
            Some(f) => Jacobian::Dense(f.matrix.clone()),
            None => {
                let h = self.mesh.h();
                let n = u.len();
                let dq: Vec<f64> = (0..=n)
                    .map(|e| {
                        let right = if e < n { u[e] } else { 0.0 };
                        let left = if e > 0 { u[e - 1] } else { 0.0 };
                        self.flux.dq((right - left) / h) / (h * h)
                    })
                    .collect();
                Jacobian::Tri(Tridiagonal {
                    sub: (1..n).map(|i| -dq[i]).collect(),
                    diag: (0..n).map(|i| dq[i] + dq[i + 1]).collect(),
                    sup: (0..n - 1).map(|i| -dq[i + 1]).collect(),
                })
            }
        }
    }

    /// `B(u)` with the minimal-norm selection of `β₀`.
    pub fn apply_b(&self, u: &GridFunction) -> Result<DualGridFunction> {
        self.check_mesh(u.mesh())?;
        let mut out = self.apply_main(u.values());
        if let Some(g) = &self.beta0 {
            for (o, &x) in out.iter_mut().zip(u.values()) {
                *o += g.min_selection(x);
            }
        }
        Ok(DualGridFunction::from_vec(u.mesh(), out))
    }

    /// Jacobian of `B` at `u`; `β₀` enters through its right slope (zero on
    /// vertical segments).
    pub fn jacobian(&self, u: &GridFunction) -> Jacobian {
        let mut jac = self.main_jacobian(u.values());
        if let Some(g) = &self.beta0 {
            let d: Vec<f64> = u
                .values()
                .iter()
                .map(|&x| {
                    let s = g.slope_right(x);
                    if s.is_finite() {
                        s
                    } else {
                        0.0
                    }
                })
                .collect();
            jac.add_diag(&d);
        }
        jac
    }

    /// `J^B_λ u = (R + λB)⁻¹Ru`.
    ///
    /// With `β₀` present the inclusion is rewritten through `z = J^{β₀}_τ(p)`,
    /// `η = β₀^τ(p)` so that multivalued `β₀` is handled exactly.
    pub fn resolvent_b(&self, lambda: f64, u: &GridFunction, cfg: &NewtonConfig) -> Result<GridFunction> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        self.check_mesh(u.mesh())?;
        let mesh = u.mesh();
        let h = mesh.h();
        let ru = laplacian(h, u.values());
        let vstar_norm = |r: &[f64]| {
            let g = Tridiagonal::riesz(mesh, 1.0, 0.0).solve(r);
            dot_h(h, r, &g).max(0.0).sqrt()
        };
        let t_of = |z: &[f64]| -> Vec<f64> {
            let rz = laplacian(h, z);
            let bz = self.apply_main(z);
            rz.iter().zip(&bz).map(|(a, b)| a + lambda * b).collect()
        };
        let t_jac = |z: &[f64]| -> Jacobian {
            let mut jac = self.main_jacobian(z);
            match &mut jac {
                Jacobian::Tri(t) => {
                    for v in t.diag.iter_mut().chain(t.sub.iter_mut()).chain(t.sup.iter_mut()) {
                        *v *= lambda;
                    }
                    let r = Tridiagonal::riesz(mesh, 1.0, 0.0);
                    t.add_diag(&r.diag);
                    for (a, b) in t.sub.iter_mut().zip(&r.sub) {
                        *a += b;
                    }
                    for (a, b) in t.sup.iter_mut().zip(&r.sup) {
                        *a += b;
                    }
                }
                Jacobian::Dense(m) => {
                    *m *= lambda;
                    *m += Tridiagonal::riesz(mesh, 1.0, 0.0).to_dense();
                }
            }
            jac
        };
        match &self.beta0 {
            None => damped_newton(
                "resolvent_b",
                u.clone(),
                |z| {
                    let tz = t_of(z.values());
                    Ok(tz.iter().zip(&ru).map(|(a, b)| a - b).collect())
                },
                |z| Ok(t_jac(z.values())),
                vstar_norm,
                cfg,
            ),
            Some(g) => {
                let tau = lambda * h * h;
                let split = |p: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
                    let z = p.iter().map(|&x| g.resolvent(tau, x)).collect::<Result<Vec<_>>>()?;
                    let eta = p.iter().zip(&z).map(|(x, zi)| (x - zi) / tau).collect();
                    Ok((z, eta))
                };
                let p = damped_newton(
                    "resolvent_b",
                    u.clone(),
                    |p| {
                        let (z, eta) = split(p.values())?;
                        let tz = t_of(&z);
                        Ok(tz
                            .iter()
                            .zip(&eta)
                            .zip(&ru)
                            .map(|((a, e), b)| a + lambda * e - b)
                            .collect())
                    },
                    |p| {
                        let (z, _) = split(p.values())?;
                        let dy = p
                            .values()
                            .iter()
                            .map(|&x| g.yosida_derivative(tau, x))
                            .collect::<Result<Vec<_>>>()?;
                        let dz: Vec<f64> = dy.iter().map(|d| 1.0 - tau * d).collect();
                        let mut jac = t_jac(&z);
                        jac.scale_columns(&dz);
                        jac.add_diag(&dy.iter().map(|d| lambda * d).collect::<Vec<_>>());
                        Ok(jac)
                    },
                    vstar_norm,
                    cfg,
                )?;
                let (z, _) = split(p.values())?;
                Ok(GridFunction::from_vec(mesh, z))
            }
        }
    }

    /// `B_λ u = R(u − J^B_λ u)/λ`.
    pub fn yosida_b(&self, lambda: f64, u: &GridFunction, cfg: &NewtonConfig) -> Result<DualGridFunction> {
        let z = self.resolvent_b(lambda, u, cfg)?;
        let diff: Vec<f64> = u.values().iter().zip(z.values()).map(|(a, b)| a - b).collect();
        let r = laplacian(u.mesh().h(), &diff);
        Ok(DualGridFunction::from_vec(u.mesh(), r.into_iter().map(|v| v / lambda).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{apply_r, inner_h, norm_v, pairing, solve_r};
    use approx::assert_abs_diff_eq;

    fn mesh(n: usize) -> Mesh1D {
        Mesh1D::new(n).unwrap()
    }

    fn pseudo_random(mesh: Mesh1D, seed: u64, amp: f64) -> GridFunction {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        GridFunction::from_fn(mesh, |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            amp * (((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0)
        })
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn a_eps_identity_and_zero() {
        let m = mesh(16);
        let a = NemytskiiA::Pointwise(ScalarGraph::identity());
        let u = pseudo_random(m, 1, 2.0);
        let out = a.apply_a_eps(0.3, &u).unwrap();
        assert!(max_diff(out.values(), u.scaled(1.0 / 1.3).values()) < 1e-15);
        let st = NemytskiiA::Pointwise(ScalarGraph::stefan());
        let z = st.apply_a_eps(0.5, &GridFunction::zeros(m)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert!(st.apply_a_eps(1.5, &u).is_err());
    }

    #[test]
    fn invert_identity_on_eigenvector() {
        let m = mesh(32);
        let a = NemytskiiA::Pointwise(ScalarGraph::identity());
        let (lambda, eps, k) = (0.05, 0.2, 3);
        let y = m.eigenvector(k).into_dual();
        let x = a.invert_a_lambda_eps(lambda, eps, &y, &NewtonConfig::default(), None).unwrap();
        let expected = m.eigenvector(k).scaled(1.0 / (lambda * m.eigenvalue(k) + 1.0 / (1.0 + eps)));
        assert!(max_diff(x.values(), expected.values()) < 1e-12);
        let zero = a
            .invert_a_lambda_eps(lambda, eps, &DualGridFunction::zeros(m), &NewtonConfig::default(), None)
            .unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invert_stefan_matches_fixed_point_oracle() {
        let m = mesh(64);
        let a = NemytskiiA::Pointwise(ScalarGraph::stefan());
        let (lambda, eps) = (1e-2, 1e-1);
        let y = pseudo_random(m, 7, 3.0).into_dual();
        let x = a.invert_a_lambda_eps(lambda, eps, &y, &NewtonConfig::default(), None).unwrap();

        // Preconditioned Richardson: x ← x − ω(λR)⁻¹(λRx + A^ε x − y).
        let omega = 2.0 / (2.0 + 1.0 / (eps * lambda * m.eigenvalue(1)));
        let mut xo = GridFunction::zeros(m);
        for _ in 0..20_000 {
            let ax = a.apply_a_eps(eps, &xo).unwrap();
            let rhs = (&y - &ax.into_dual()).scaled(1.0 / lambda);
            let t = solve_r(&rhs);
            let next = &xo.scaled(1.0 - omega) + &t.scaled(omega);
            let change = max_diff(next.values(), xo.values());
            xo = next;
            if change < 1e-14 {
                break;
            }
        }
        assert!(max_diff(x.values(), xo.values()) < 1e-8);
    }

    #[test]
    fn d_ainv_examples() {
        let m = mesh(8);
        let hdir = pseudo_random(m, 3, 1.0);
        let id = NemytskiiA::Pointwise(ScalarGraph::identity());
        let v = pseudo_random(m, 4, 5.0).into_dual();
        assert_eq!(id.d_ainv_apply(&v, &hdir).unwrap(), hdir);
        let st = NemytskiiA::Pointwise(ScalarGraph::stefan());
        let inside = pseudo_random(m, 5, 0.9).into_dual();
        assert!(st.d_ainv_apply(&inside, &hdir).unwrap().values().iter().all(|&x| x == 0.0));
        let two = GridFunction::from_fn(m, |_| 2.0).into_dual();
        assert_eq!(st.d_ainv_apply(&two, &hdir).unwrap(), hdir);
    }

    #[test]
    fn apply_b_examples() {
        let m = mesh(32);
        let u = pseudo_random(m, 11, 1.0);
        let r = DivergenceFormB::riesz(m);
        assert!(max_diff(r.apply_b(&u).unwrap().values(), apply_r(&u).values()) < 1e-9);
        let two = DivergenceFormB::new(m, Flux::Linear { c: 2.0 }, None).unwrap();
        assert!(max_diff(two.apply_b(&u).unwrap().values(), apply_r(&u).scaled(2.0).values()) < 1e-9);

        // direct edge-loop oracle for q(ξ) = ξ + arctan ξ on v₁
        let b = DivergenceFormB::new(m, Flux::ArctanPerturbed { a: 1.0 }, None).unwrap();
        let v1 = m.eigenvector(1);
        let h = m.h();
        let vals = v1.values();
        let node = |i: isize| if i < 0 || i as usize >= m.n() { 0.0 } else { vals[i as usize] };
        let q = |x: f64| x + x.atan();
        let oracle: Vec<f64> = (0..m.n() as isize)
            .map(|i| (q((node(i) - node(i - 1)) / h) - q((node(i + 1) - node(i)) / h)) / h)
            .collect();
        assert!(max_diff(b.apply_b(&v1).unwrap().values(), &oracle) < 1e-10);
    }

    #[test]
    fn resolvent_b_linear_cases() {
        let m = mesh(24);
        let u = pseudo_random(m, 2, 1.0);
        let cfg = NewtonConfig::default();
        let lambda = 0.3;
        let z = DivergenceFormB::riesz(m).resolvent_b(lambda, &u, &cfg).unwrap();
        assert!(max_diff(z.values(), u.scaled(1.0 / (1.0 + lambda)).values()) < 1e-12);
        let b2 = DivergenceFormB::new(m, Flux::Linear { c: 2.0 }, None).unwrap();
        let z = b2.resolvent_b(lambda, &u, &cfg).unwrap();
        assert!(max_diff(z.values(), u.scaled(1.0 / (1.0 + 2.0 * lambda)).values()) < 1e-12);
        let yb = DivergenceFormB::riesz(m).yosida_b(lambda, &u, &cfg).unwrap();
        assert!(max_diff(yb.values(), apply_r(&u).scaled(1.0 / (1.0 + lambda)).values()) < 1e-8);
        let zero = DivergenceFormB::riesz(m).yosida_b(lambda, &GridFunction::zeros(m), &cfg).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resolvent_b_nonlinear_matches_fixed_point() {
        let m = mesh(24);
        let u = pseudo_random(m, 9, 0.5);
        let cfg = NewtonConfig::default();
        let lambda = 0.1;
        let b = DivergenceFormB::new(m, Flux::ArctanPerturbed { a: 0.5 }, None).unwrap();
        let z = b.resolvent_b(lambda, &u, &cfg).unwrap();
        // z = (1+λ)⁻¹ R⁻¹(Ru − λ(B z − R z)): contraction since B − R has
        // Lipschitz constant a/(1+λ) < 1 relative to R.
        let ru = apply_r(&u);
        let mut zo = u.clone();
        for _ in 0..500 {
            let bz = b.apply_b(&zo).unwrap();
            let rz = apply_r(&zo);
            let mut rhs = ru.clone();
            rhs.axpy(-lambda, &(&bz - &rz));
            zo = solve_r(&rhs).scaled(1.0 / (1.0 + lambda));
        }
        assert!(max_diff(z.values(), zo.values()) < 1e-8);
    }

    #[test]
    fn resolvent_b_with_multivalued_beta0() {
        let m = mesh(16);
        let cfg = NewtonConfig::default();
        let b = DivergenceFormB::new(m, Flux::Linear { c: 1.0 }, Some(ScalarGraph::sign())).unwrap();
        let u = pseudo_random(m, 21, 0.02);
        let lambda = 0.5;
        let z = b.resolvent_b(lambda, &u, &cfg).unwrap();
        // the inclusion Rz + λ(Rz + η) = Ru with η ∈ sign(z)
        let rz = apply_r(&z);
        let ru = apply_r(&u);
        for i in 0..m.n() {
            let eta = (ru.values()[i] - (1.0 + lambda) * rz.values()[i]) / lambda;
            let iv = ScalarGraph::sign().value(z.values()[i]);
            assert!(iv.contains(eta, 1e-6), "node {i}: η = {eta}, z = {}", z.values()[i]);
        }
    }

    #[test]
    fn traces() {
        let m = mesh(16);
        let cols: Vec<GridFunction> = (1..=4).map(|k| m.eigenvector(k).scaled(1.0 / k as f64)).collect();
        let id = NemytskiiA::Pointwise(ScalarGraph::identity());
        let v = pseudo_random(m, 1, 3.0).into_dual();
        let expected: f64 = cols.iter().map(|g| g.norm_h().powi(2)).sum();
        assert_abs_diff_eq!(id.trace_limit(&v, &cols).unwrap(), expected, epsilon = 1e-13);
        let st = NemytskiiA::Pointwise(ScalarGraph::stefan());
        let inside = pseudo_random(m, 2, 0.99).into_dual();
        assert_eq!(st.trace_limit(&inside, &cols).unwrap(), 0.0);

        // mixed plateau: direct nodewise oracle
        let mixed = pseudo_random(m, 3, 2.5).into_dual();
        let mut oracle = 0.0;
        for g in &cols {
            for i in 0..m.n() {
                let vi = mixed.values()[i];
                let gp = if vi.abs() > 1.0 || vi == 1.0 { 1.0 } else { 0.0 };
                oracle += m.h() * gp * g.values()[i] * g.values()[i];
            }
        }
        assert_abs_diff_eq!(st.trace_limit(&mixed, &cols).unwrap(), oracle, epsilon = 1e-13);
    }

    #[test]
    fn trace_regularized_identity_spectral() {
        let m = mesh(20);
        let (lambda, eps) = (0.01, 0.1);
        let id = NemytskiiA::Pointwise(ScalarGraph::identity());
        let cols: Vec<GridFunction> = (1..=3).map(|k| &m.eigenvector(k) + &m.eigenvector(k + 5)).collect();
        let u = pseudo_random(m, 4, 1.0);
        let a = 1.0 / (1.0 + eps);
        let mut expected = 0.0;
        for k in 1..=3 {
            for j in [k, k + 5] {
                // coefficient 1, ‖vⱼ‖²_h = 1/2
                expected += 0.5 / (lambda * m.eigenvalue(j) + a);
            }
        }
        assert_abs_diff_eq!(id.trace_regularized(lambda, eps, &u, &cols).unwrap(), expected, epsilon = 1e-10);
        let zeros = vec![GridFunction::zeros(m); 3];
        assert_eq!(id.trace_regularized(lambda, eps, &u, &zeros).unwrap(), 0.0);
    }

    #[test]
    fn trace_regularized_stefan_dense_oracle() {
        let m = mesh(12);
        let (lambda, eps) = (0.02, 0.3);
        let st = NemytskiiA::Pointwise(ScalarGraph::stefan());
        let u = pseudo_random(m, 8, 0.6);
        let cols: Vec<GridFunction> = (0..3).map(|s| pseudo_random(m, 100 + s, 1.0)).collect();
        let mut dense = Tridiagonal::riesz(m, lambda, 0.0).to_dense();
        for i in 0..m.n() {
            dense[(i, i)] += ScalarGraph::stefan().yosida_derivative(eps, u.values()[i]).unwrap();
        }
        let inv = dense.clone().try_inverse().unwrap();
        // [I + λ·D(A^ε)⁻¹·R]⁻¹·D(A^ε)⁻¹ is the same operator
        let d_inv = DMatrix::from_diagonal(&DVector::from_iterator(
            m.n(),
            (0..m.n()).map(|i| 1.0 / ScalarGraph::stefan().yosida_derivative(eps, u.values()[i]).unwrap()),
        ));
        let r = Tridiagonal::riesz(m, 1.0, 0.0).to_dense();
        let composed = (DMatrix::<f64>::identity(m.n(), m.n()) + &d_inv * &r * lambda).try_inverse().unwrap() * &d_inv;
        assert!((&composed - &inv).amax() <= 1e-10 * inv.amax());
        let mut oracle = 0.0;
        for g in &cols {
            let gv = DVector::from_column_slice(g.values());
            oracle += m.h() * gv.dot(&(&inv * &gv));
        }
        let got = st.trace_regularized(lambda, eps, &u, &cols).unwrap();
        assert!((got - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
    }

    #[test]
    fn nonlocal_kernel_is_linear_and_consistent() {
        let m = mesh(16);
        let k = NonlocalKernel::gaussian(m, 1.0, 0.5, 0.2).unwrap();
        assert!(k.lambda_min >= 1.0 - 1e-12);
        let a = NemytskiiA::NonlocalKernel(k.clone());
        let eps = 0.2;
        let u = pseudo_random(m, 5, 1.0);
        // A^ε(u) = A(J u) with J = (I+εA)⁻¹
        let ae = a.apply_a_eps(eps, &u).unwrap();
        let j = (DMatrix::<f64>::identity(16, 16) + k.matrix() * eps).try_inverse().unwrap();
        let ju = &j * DVector::from_column_slice(u.values());
        let expected = k.matrix() * ju;
        assert!(max_diff(ae.values(), expected.as_slice()) < 1e-12);
        let y = pseudo_random(m, 6, 1.0).into_dual();
        let x = a.invert_a_lambda_eps(0.01, eps, &y, &NewtonConfig::default(), None).unwrap();
        let back = &apply_r(&x).scaled(0.01) + &a.apply_a_eps(eps, &x).unwrap().into_dual();
        assert!(max_diff(back.values(), y.values()) < 1e-10);

        let bad = DMatrix::from_fn(16, 16, |i, j| if i != j { 5.0 } else { 0.0 });
        assert!(NonlocalKernel::new(m, 1.0, bad).is_err());
    }

    #[test]
    fn monotone_b_and_nonexpansive_resolvent() {
        let m = mesh(20);
        let cfg = NewtonConfig::default();
        let b = DivergenceFormB::new(m, Flux::ArctanPerturbed { a: 2.0 }, Some(ScalarGraph::stefan_smooth(1.0).unwrap()))
            .unwrap();
        for s in 0..10 {
            let u1 = pseudo_random(m, 2 * s, 1.0);
            let u2 = pseudo_random(m, 2 * s + 1, 1.0);
            let d = &u1 - &u2;
            let db = &b.apply_b(&u1).unwrap() - &b.apply_b(&u2).unwrap();
            assert!(pairing(&db, &d).unwrap() >= -1e-9);
            let j1 = b.resolvent_b(0.2, &u1, &cfg).unwrap();
            let j2 = b.resolvent_b(0.2, &u2, &cfg).unwrap();
            assert!(norm_v(&(&j1 - &j2)) <= norm_v(&d) * (1.0 + 1e-9));
            let y1 = b.yosida_b(0.2, &u1, &cfg).unwrap();
            let y2 = b.yosida_b(0.2, &u2, &cfg).unwrap();
            assert!(pairing(&(&y1 - &y2), &d).unwrap() >= -1e-9);
            let bu = b.apply_b(&u1).unwrap();
            let coerc = pairing(&bu, &u1).unwrap();
            assert!(coerc >= b.coercivity() * norm_v(&u1).powi(2) - 1e-9);
        }
        let _ = inner_h;
    }

    #[test]
    fn d_ainv_symmetric_and_roundtrip() {
        let m = mesh(24);
        let cfg = NewtonConfig::default();
        for a in [
            NemytskiiA::Pointwise(ScalarGraph::stefan_smooth(0.5).unwrap()),
            NemytskiiA::Pointwise(ScalarGraph::stefan()),
            NemytskiiA::NonlocalKernel(NonlocalKernel::gaussian(m, 1.0, 1.0, 0.1).unwrap()),
        ] {
            for s in 0..5 {
                let v = pseudo_random(m, 40 + s, 3.0).into_dual();
                let h1 = pseudo_random(m, 50 + s, 1.0);
                let h2 = pseudo_random(m, 60 + s, 1.0);
                let l = inner_h(&a.d_ainv_apply(&v, &h1).unwrap(), &h2).unwrap();
                let r = inner_h(&h1, &a.d_ainv_apply(&v, &h2).unwrap()).unwrap();
                assert!((l - r).abs() < 1e-12);

                let x = pseudo_random(m, 70 + s, 2.0);
                let (lambda, eps) = (0.01, 0.2);
                let y = &apply_r(&x).scaled(lambda) + &a.apply_a_eps(eps, &x).unwrap().into_dual();
                let back = a.invert_a_lambda_eps(lambda, eps, &y, &cfg, None).unwrap();
                assert!((&back - &x).norm_h() < 1e-8);
            }
        }
    }

    #[test]
    fn inverse_derivative_forms_agree() {
        // [I + λ D((A^ε)⁻¹)(A^ε u) R]⁻¹ D((A^ε)⁻¹)(A^ε u) = (λR + DA^ε(u))⁻¹
        let m = mesh(10);
        let g = ScalarGraph::stefan_smooth(0.3).unwrap();
        let a = NemytskiiA::Pointwise(g.clone());
        let (lambda, eps) = (0.05, 0.4);
        let u = pseudo_random(m, 3, 1.5);
        let direct = a.regularized_jacobian(lambda, eps, &u).unwrap().to_dense().try_inverse().unwrap();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            m.n(),
            u.values().iter().map(|&x| 1.0 / g.yosida_derivative(eps, x).unwrap()),
        ));
        let r = Tridiagonal::riesz(m, 1.0, 0.0).to_dense();
        let lemma = (DMatrix::identity(m.n(), m.n()) + &d * &r * lambda).try_inverse().unwrap() * &d;
        assert!((direct - lemma).amax() < 1e-9);
    }

    #[test]
    fn operator_norm_bound() {
        let m = mesh(32);
        for (s, g) in [ScalarGraph::identity(), ScalarGraph::stefan(), ScalarGraph::stefan_smooth(1.0).unwrap()]
            .into_iter()
            .enumerate()
        {
            let a = NemytskiiA::Pointwise(g);
            let u = pseudo_random(m, s as u64, 2.0);
            let norm = a.inverse_jacobian_norm(1e-3, 0.5, &u).unwrap();
            assert!(norm <= 2.0 / a.c_a() + 1e-8, "{norm}");
        }
    }
}
