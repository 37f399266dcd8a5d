//! Scalar maximal monotone graphs `α : ℝ → 2^ℝ`.
//!
//! Graphs are described constructively by [`GraphKind`] so that resolvents,
//! inverses and conjugates have closed forms wherever one exists. Where a single
//! value is needed from a multivalued point the minimal-norm selection `α°` is
//! used.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Closed interval `[lo, hi]`; `lo == hi` for single-valued points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Distance from `x` to the interval (0 inside).
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    /// Projection of 0, i.e. the minimal-norm element.
    pub fn min_norm(&self) -> f64 {
        0.0f64.clamp(self.lo, self.hi)
    }

    fn shift(self, d: f64) -> Self {
        Self {
            lo: self.lo + d,
            hi: self.hi + d,
        }
    }
}

/// A breakpoint of a piecewise-linear graph: `α(at) = [left, right]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Breakpoint {
    pub at: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphKind {
    Identity,
    ScaledIdentity { c: f64 },
    /// `sign(r)`, with `sign(0) = [-1, 1]`. Not strongly monotone.
    Sign,
    /// `sign(r) + r`.
    Stefan,
    /// `sign(r) + r + κ sign(r)|r|^{1/3}`; its inverse is C¹ with `γ'(±1) = 0`.
    StefanSmooth { kappa: f64 },
    /// Linear between breakpoints, jumps allowed at breakpoints, extended
    /// linearly with the first/last segment slope.
    PiecewiseLinear { breakpoints: Vec<Breakpoint> },
    /// `inner + c·I`.
    SumWithIdentity { inner: Box<GraphKind>, c: f64 },
}

/// A scalar maximal monotone graph with its declared (H1)/(H2) constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGraph {
    kind: GraphKind,
    /// Strong monotonicity constant.
    pub c_alpha: f64,
    /// Linear growth constant.
    pub growth: f64,
}

const BISECTION_MAX_ITER: usize = 200;
const FD_STEP: f64 = 1e-6;

impl ScalarGraph {
    pub fn identity() -> Self {
        Self::from_kind(GraphKind::Identity).expect("identity graph is valid")
    }

    pub fn scaled_identity(c: f64) -> Result<Self> {
        Self::from_kind(GraphKind::ScaledIdentity { c })
    }

    pub fn sign() -> Self {
        Self::from_kind(GraphKind::Sign).expect("sign graph is valid")
    }

    pub fn stefan() -> Self {
        Self::from_kind(GraphKind::Stefan).expect("stefan graph is valid")
    }

    pub fn stefan_smooth(kappa: f64) -> Result<Self> {
        Self::from_kind(GraphKind::StefanSmooth { kappa })
    }

    pub fn piecewise_linear(breakpoints: Vec<Breakpoint>) -> Result<Self> {
        Self::from_kind(GraphKind::PiecewiseLinear { breakpoints })
    }

    pub fn sum_with_identity(inner: ScalarGraph, c: f64) -> Result<Self> {
        Self::from_kind(GraphKind::SumWithIdentity {
            inner: Box::new(inner.kind),
            c,
        })
    }

    /// Validates the description and derives the constants `(c_α, C_α)`.
    pub fn from_kind(kind: GraphKind) -> Result<Self> {
        let (c_alpha, growth) = declared_constants(&kind)?;
        Ok(Self {
            kind,
            c_alpha,
            growth,
        })
    }

    /// Overrides the derived constants, e.g. with values from a config file.
    pub fn with_constants(mut self, c_alpha: f64, growth: f64) -> Self {
        self.c_alpha = c_alpha;
        self.growth = growth;
        self
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    /// `α(r)` as a closed interval.
    pub fn value(&self, r: f64) -> Interval {
        kind_value(&self.kind, r)
    }

    /// Minimal-norm selection `α°(r)`.
    pub fn min_selection(&self, r: f64) -> f64 {
        self.value(r).min_norm()
    }

    /// Resolvent `(I + εα)⁻¹(x)`.
    pub fn resolvent(&self, eps: f64, x: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        kind_resolvent(&self.kind, eps, x)
    }

    /// Resolvent by guarded bisection on `r ↦ r + εα°(r)`, valid for any graph.
    pub fn resolvent_bisect(&self, eps: f64, x: f64) -> Result<f64> {
        bisect_inclusion(|r| self.value(r), 1.0, eps, x)
    }

    /// Yosida approximation `α^ε(x) = (x − J_ε x)/ε ∈ α(J_ε x)`.
    ///
    /// Where `α` is single-valued at `J_ε x` with slope below `1/ε`, the value
    /// `α(J_ε x)` is returned: it avoids the cancellation in `x − J_ε x`.
    pub fn yosida(&self, eps: f64, x: f64) -> Result<f64> {
        let r = self.resolvent(eps, x)?;
        let iv = self.value(r);
        if iv.is_degenerate() && eps * self.slope_right(r) < 1.0 {
            Ok(iv.lo)
        } else {
            Ok(((x - r) / eps).clamp(iv.lo, iv.hi))
        }
    }

    /// Right derivative of the Yosida approximation: `1/ε` inside a jump of
    /// `α` at `J_ε x`, `s/(1 + εs)` with `s` the right slope of `α` otherwise.
    pub fn yosida_derivative(&self, eps: f64, x: f64) -> Result<f64> {
        let r = self.resolvent(eps, x)?;
        let iv = self.value(r);
        let y = (x - r) / eps;
        if !iv.is_degenerate() && y < iv.hi - 1e-12 * (1.0 + iv.hi.abs()) {
            return Ok(1.0 / eps);
        }
        let s = self.slope_right(r);
        Ok(if s.is_infinite() { 1.0 / eps } else { s / (1.0 + eps * s) })
    }

    /// The full preimage `α⁻¹(v)`. May be unbounded (`±∞` endpoints) for
    /// graphs with horizontal asymptotes, or empty (`lo > hi` encoded as NaN)
    /// outside the range.
    pub fn inverse_value(&self, v: f64) -> Interval {
        kind_inverse_value(&self.kind, v)
    }

    /// `γ(v) = α⁻¹(v)`, minimal-norm element of the preimage.
    pub fn gamma(&self, v: f64) -> f64 {
        kind_gamma(&self.kind, v)
    }

    /// Right derivative of `γ`, in closed form.
    pub fn gamma_prime(&self, v: f64) -> f64 {
        let r = self.gamma(v);
        if !r.is_finite() {
            return f64::INFINITY;
        }
        let iv = self.value(r);
        if iv.lo < iv.hi && v < iv.hi {
            return 0.0;
        }
        let s = self.slope_right(r);
        if s.is_infinite() {
            0.0
        } else {
            1.0 / s
        }
    }

    /// Central finite-difference derivative of `γ` with step `1e-6`.
    pub fn gamma_prime_fd(&self, v: f64) -> f64 {
        (self.gamma(v + FD_STEP) - self.gamma(v - FD_STEP)) / (2.0 * FD_STEP)
    }

    /// Slope of the continuous branch of `α` immediately to the right of `r`.
    pub fn slope_right(&self, r: f64) -> f64 {
        kind_slope_right(&self.kind, r)
    }

    /// Convex primitive `α̂` with `α̂(0) = 0`.
    pub fn potential(&self, r: f64) -> f64 {
        kind_potential(&self.kind, r)
    }

    /// Convex conjugate `α̂*(v) = sup_r (rv − α̂(r))`.
    pub fn conjugate(&self, v: f64) -> f64 {
        match &self.kind {
            GraphKind::Identity => 0.5 * v * v,
            GraphKind::ScaledIdentity { c } => 0.5 * v * v / c,
            GraphKind::Sign => {
                if v.abs() <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            GraphKind::Stefan => {
                let t = (v.abs() - 1.0).max(0.0);
                0.5 * t * t
            }
            _ => {
                // Fenchel–Young holds with equality on the preimage.
                let r = self.gamma(v);
                if r.is_finite() {
                    r * v - self.potential(r)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Moreau envelope `α̂^ε(x) = min_r (|x − r|²/2ε + α̂(r))`.
    pub fn moreau_envelope(&self, eps: f64, x: f64) -> Result<f64> {
        let j = self.resolvent(eps, x)?;
        let y = (x - j) / eps;
        Ok(self.potential(j) + 0.5 * eps * y * y)
    }

    /// Conjugate of the Moreau envelope, `εv²/2 + α̂*(v)`.
    pub fn moreau_conjugate(&self, eps: f64, v: f64) -> f64 {
        0.5 * eps * v * v + self.conjugate(v)
    }

    /// Empirical check of the structural hypotheses on `[range.0, range.1]`.
    pub fn validate_hypotheses(&self, range: (f64, f64), samples: usize) -> Result<HypothesisReport> {
        validate(self, range, samples)
    }
}

/// `sup_r (rv − f(r))` by grid search on `[−10(1+|v|), 10(1+|v|)]` with 2001
/// points followed by ternary refinement around the best grid point.
///
/// `f` must be convex; the result is exact up to the refinement tolerance
/// when the supremum is attained inside the window.
pub fn numeric_conjugate<F: Fn(f64) -> f64>(f: F, v: f64) -> f64 {
    const POINTS: usize = 2001;
    let half = 10.0 * (1.0 + v.abs());
    let step = 2.0 * half / (POINTS - 1) as f64;
    let obj = |r: f64| r * v - f(r);
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..POINTS {
        let val = obj(-half + step * i as f64);
        if val > best_val {
            best_val = val;
            best = i;
        }
    }
    let mut a = -half + step * best.saturating_sub(1) as f64;
    let mut b = -half + step * (best + 1).min(POINTS - 1) as f64;
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if obj(m1) < obj(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    best_val.max(obj(0.5 * (a + b)))
}

/// Solves `t·r + s·α(r) ∋ x` for `r` by bisection, using the full interval
/// `α(r)` so that plateaus are hit exactly. Requires `t > 0`.
fn bisect_inclusion<V: Fn(f64) -> Interval>(value: V, t: f64, s: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    // 0 ∈ α(0) and monotonicity give |r| ≤ |x|/t.
    let bound = x.abs() / t;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let iv = value(mid);
        let (flo, fhi) = (t * mid + s * iv.lo, t * mid + s * iv.hi);
        if fhi < x {
            lo = mid;
        } else if flo > x {
            hi = mid;
        } else {
            return Ok(mid);
        }
        if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::NonConvergence {
        what: "resolvent bisection",
        iterations: BISECTION_MAX_ITER,
        residual: hi - lo,
    })
}

fn stefan_smooth_growth(kappa: f64) -> f64 {
    // sup_{s ≥ 0} s/(1+s³) is attained at s³ = 1/2.
    1.0 + kappa * (2.0 / 3.0) * 2f64.powf(-1.0 / 3.0)
}

fn declared_constants(kind: &GraphKind) -> Result<(f64, f64)> {
    let positive = |name: &str, c: f64| {
        if c > 0.0 && c.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {c}")))
        }
    };
    match kind {
        GraphKind::Identity => Ok((1.0, 1.0)),
        GraphKind::ScaledIdentity { c } => {
            positive("c", *c)?;
            Ok((*c, *c))
        }
        GraphKind::Sign => Ok((0.0, 1.0)),
        GraphKind::Stefan => Ok((1.0, 1.0)),
        GraphKind::StefanSmooth { kappa } => {
            positive("kappa", *kappa)?;
            Ok((1.0, stefan_smooth_growth(*kappa)))
        }
        GraphKind::PiecewiseLinear { breakpoints } => pl_constants(breakpoints),
        GraphKind::SumWithIdentity { inner, c } => {
            positive("c", *c)?;
            let (ci, gi) = declared_constants(inner)?;
            Ok((ci + c, gi + c))
        }
    }
}

fn kind_value(kind: &GraphKind, r: f64) -> Interval {
    match kind {
        GraphKind::Identity => Interval::point(r),
        GraphKind::ScaledIdentity { c } => Interval::point(c * r),
        GraphKind::Sign => sign_interval(r),
        GraphKind::Stefan => sign_interval(r).shift(r),
        GraphKind::StefanSmooth { kappa } => {
            sign_interval(r).shift(r + kappa * r.cbrt())
        }
        GraphKind::PiecewiseLinear { breakpoints } => pl_value(breakpoints, r),
        GraphKind::SumWithIdentity { inner, c } => kind_value(inner, r).shift(c * r),
    }
}

fn sign_interval(r: f64) -> Interval {
    if r > 0.0 {
        Interval::point(1.0)
    } else if r < 0.0 {
        Interval::point(-1.0)
    } else {
        Interval::new(-1.0, 1.0)
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

fn kind_resolvent(kind: &GraphKind, eps: f64, x: f64) -> Result<f64> {
    match kind {
        GraphKind::Identity => Ok(x / (1.0 + eps)),
        GraphKind::ScaledIdentity { c } => Ok(x / (1.0 + eps * c)),
        GraphKind::Sign => Ok(soft_threshold(x, eps)),
        GraphKind::Stefan => Ok(soft_threshold(x, eps) / (1.0 + eps)),
        GraphKind::StefanSmooth { kappa } => {
            if x.abs() <= eps {
                Ok(0.0)
            } else {
                // s = cbrt(r): (1+ε)s³ + εκs = |x| − ε
                let s = depressed_cubic_root(eps * kappa / (1.0 + eps), (x.abs() - eps) / (1.0 + eps));
                Ok(x.signum() * s * s * s)
            }
        }
        GraphKind::PiecewiseLinear { breakpoints } => Ok(pl_solve(breakpoints, 1.0, eps, x)),
        GraphKind::SumWithIdentity { inner, c } => {
            let k = 1.0 + eps * c;
            kind_resolvent(inner, eps / k, x / k)
        }
    }
}

fn kind_inverse_value(kind: &GraphKind, v: f64) -> Interval {
    match kind {
        GraphKind::Sign => {
            if v.abs() < 1.0 {
                Interval::point(0.0)
            } else if v == 1.0 {
                Interval::new(0.0, f64::INFINITY)
            } else if v == -1.0 {
                Interval::new(f64::NEG_INFINITY, 0.0)
            } else {
                Interval {
                    lo: f64::NAN,
                    hi: f64::NAN,
                }
            }
        }
        _ => Interval::point(kind_gamma(kind, v)),
    }
}

fn kind_gamma(kind: &GraphKind, v: f64) -> f64 {
    match kind {
        GraphKind::Identity => v,
        GraphKind::ScaledIdentity { c } => v / c,
        GraphKind::Sign => {
            if v.abs() <= 1.0 {
                0.0
            } else {
                v.signum() * f64::INFINITY
            }
        }
        GraphKind::Stefan => soft_threshold(v, 1.0),
        GraphKind::StefanSmooth { kappa } => {
            let q = v.abs() - 1.0;
            if q <= 0.0 {
                0.0
            } else {
                let s = depressed_cubic_root(*kappa, q);
                v.signum() * s * s * s
            }
        }
        GraphKind::PiecewiseLinear { breakpoints } => pl_solve(breakpoints, 0.0, 1.0, v),
        GraphKind::SumWithIdentity { inner, c } => {
            // α_in(r) + c r ∋ v  ⇔  r + α_in(r)/c ∋ v/c
            kind_resolvent(inner, 1.0 / c, v / c).expect("inner resolvent of a validated graph")
        }
    }
}

/// Real root of `s³ + p s − q = 0` for `p > 0`, `q ≥ 0`, via the hyperbolic
/// form of Cardano's formula plus one Newton polish.
pub(crate) fn depressed_cubic_root(p: f64, q: f64) -> f64 {
    let k = (p / 3.0).sqrt();
    let arg = (1.5 * q / p) / k;
    let mut s = 2.0 * k * (arg.asinh() / 3.0).sinh();
    let f = s * s * s + p * s - q;
    s -= f / (3.0 * s * s + p);
    s
}

fn kind_slope_right(kind: &GraphKind, r: f64) -> f64 {
    match kind {
        GraphKind::Identity => 1.0,
        GraphKind::ScaledIdentity { c } => *c,
        GraphKind::Sign => 0.0,
        GraphKind::Stefan => 1.0,
        GraphKind::StefanSmooth { kappa } => {
            if r == 0.0 {
                f64::INFINITY
            } else {
                1.0 + kappa / (3.0 * r.abs().powf(2.0 / 3.0))
            }
        }
        GraphKind::PiecewiseLinear { breakpoints } => pl_slope_right(breakpoints, r),
        GraphKind::SumWithIdentity { inner, c } => kind_slope_right(inner, r) + c,
    }
}

fn kind_potential(kind: &GraphKind, r: f64) -> f64 {
    match kind {
        GraphKind::Identity => 0.5 * r * r,
        GraphKind::ScaledIdentity { c } => 0.5 * c * r * r,
        GraphKind::Sign => r.abs(),
        GraphKind::Stefan => r.abs() + 0.5 * r * r,
        GraphKind::StefanSmooth { kappa } => {
            let a = r.abs();
            a + 0.5 * r * r + 0.75 * kappa * a * a.cbrt()
        }
        GraphKind::PiecewiseLinear { breakpoints } => pl_potential(breakpoints, r),
        GraphKind::SumWithIdentity { inner, c } => kind_potential(inner, r) + 0.5 * c * r * r,
    }
}

// Piecewise-linear graphs. Breakpoints are validated to be strictly
// increasing in abscissa with positive segment slopes, so every map
// `t·r + s·α(r)` with `s > 0` is strictly increasing apart from jumps.

fn pl_slopes(bp: &[Breakpoint]) -> Vec<f64> {
    bp.windows(2)
        .map(|w| (w[1].left - w[0].right) / (w[1].at - w[0].at))
        .collect()
}

fn pl_constants(bp: &[Breakpoint]) -> Result<(f64, f64)> {
    if bp.len() < 2 {
        return Err(Error::InvalidArgument(
            "piecewise-linear graph needs at least two breakpoints".into(),
        ));
    }
    for (i, b) in bp.iter().enumerate() {
        if !(b.at.is_finite() && b.left.is_finite() && b.right.is_finite()) || b.left > b.right {
            return Err(Error::InvalidArgument(format!(
                "breakpoint {i}: need finite values with left ≤ right"
            )));
        }
    }
    for (i, w) in bp.windows(2).enumerate() {
        if !(w[1].at > w[0].at) {
            return Err(Error::InvalidArgument(format!(
                "breakpoints {i} and {} are not strictly increasing",
                i + 1
            )));
        }
    }
    let slopes = pl_slopes(bp);
    if let Some(i) = slopes.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "segment {i} must have positive slope, got {}",
            slopes[i]
        )));
    }
    if !pl_value(bp, 0.0).contains(0.0, 0.0) {
        return Err(Error::HypothesisViolation {
            hypothesis: "H1",
            sample: 0.0,
            detail: "0 ∉ α(0)".into(),
        });
    }
    let c = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    // |α(r)|/(1+|r|) is monotone on each linear piece away from 0, so its
    // supremum sits at a breakpoint, at 0, or at ±∞.
    let mut growth = slopes[0].max(slopes[slopes.len() - 1]);
    for b in bp {
        growth = growth.max(b.left.abs().max(b.right.abs()) / (1.0 + b.at.abs()));
    }
    let at0 = pl_value(bp, 0.0);
    growth = growth.max(at0.lo.abs().max(at0.hi.abs()));
    Ok((c, growth))
}

/// Linear branch valid on the open piece containing `r` (or bordering it on
/// the right): returns `(anchor, value_at_anchor, slope)`.
fn pl_branch(bp: &[Breakpoint], r: f64) -> (f64, f64, f64) {
    let slopes = pl_slopes(bp);
    let last = bp.len() - 1;
    if r < bp[0].at {
        return (bp[0].at, bp[0].left, slopes[0]);
    }
    if r >= bp[last].at {
        return (bp[last].at, bp[last].right, slopes[last - 1]);
    }
    let j = bp.partition_point(|b| b.at <= r) - 1;
    (bp[j].at, bp[j].right, slopes[j])
}

fn pl_value(bp: &[Breakpoint], r: f64) -> Interval {
    if let Some(b) = bp.iter().find(|b| b.at == r) {
        return Interval::new(b.left, b.right);
    }
    let (a, va, s) = pl_branch(bp, r);
    Interval::point(va + s * (r - a))
}

fn pl_slope_right(bp: &[Breakpoint], r: f64) -> f64 {
    pl_branch(bp, r).2
}

/// Solves `t·r + s·α(r) ∋ x` exactly.
fn pl_solve(bp: &[Breakpoint], t: f64, s: f64, x: f64) -> f64 {
    let map_lo = |b: &Breakpoint| t * b.at + s * b.left;
    let map_hi = |b: &Breakpoint| t * b.at + s * b.right;
    let slopes = pl_slopes(bp);
    let last = bp.len() - 1;
    if x < map_lo(&bp[0]) {
        let m = t + s * slopes[0];
        return bp[0].at + (x - map_lo(&bp[0])) / m;
    }
    for j in 0..=last {
        if x <= map_hi(&bp[j]) {
            return bp[j].at;
        }
        if j < last && x < map_lo(&bp[j + 1]) {
            let m = t + s * slopes[j];
            return bp[j].at + (x - map_hi(&bp[j])) / m;
        }
    }
    let m = t + s * slopes[last - 1];
    bp[last].at + (x - map_hi(&bp[last])) / m
}

fn pl_potential(bp: &[Breakpoint], r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let (a, b) = if r > 0.0 { (0.0, r) } else { (r, 0.0) };
    let mut cuts: Vec<f64> = vec![a];
    cuts.extend(bp.iter().map(|p| p.at).filter(|&x| x > a && x < b));
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let m = 0.5 * (p + q);
        let (anchor, va, s) = pl_branch(bp, m);
        let f = |x: f64| va + s * (x - anchor);
        total += 0.5 * (q - p) * (f(p) + f(q));
    }
    if r > 0.0 {
        total
    } else {
        -total
    }
}

/// Outcome of [`ScalarGraph::validate_hypotheses`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub samples: usize,
    /// Infimum of difference quotients over worst-case selections.
    pub c_alpha_estimate: f64,
    /// Supremum of `max|α(r)|/(1+|r|)`.
    pub growth_estimate: f64,
    pub gamma_is_c1: bool,
    /// Location of a detected jump in `γ'`, if any.
    pub gamma_prime_jump_at: Option<f64>,
    pub declared_c_alpha: f64,
    pub declared_growth: f64,
    pub monotonicity_pass: bool,
    pub growth_pass: bool,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.monotonicity_pass && self.growth_pass && self.gamma_is_c1
    }
}

const C1_POINTS: usize = 1000;
const C1_JUMP_THRESHOLD: f64 = 1e-3;
const C1_REFINE_WIDTH: f64 = 1e-4;

fn validate(g: &ScalarGraph, range: (f64, f64), samples: usize) -> Result<HypothesisReport> {
    let (a, b) = range;
    if samples < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {samples}")));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid sample range [{a}, {b}]")));
    }
    if !g.value(0.0).contains(0.0, 0.0) {
        return Err(Error::HypothesisViolation {
            hypothesis: "H1",
            sample: 0.0,
            detail: "0 ∉ α(0)".into(),
        });
    }
    let step = (b - a) / (samples - 1) as f64;
    let rs: Vec<f64> = (0..samples).map(|i| a + step * i as f64).collect();
    let vals: Vec<Interval> = rs.iter().map(|&r| g.value(r)).collect();

    let mut c_est = f64::INFINITY;
    for i in 1..samples {
        let q = (vals[i].lo - vals[i - 1].hi) / (rs[i] - rs[i - 1]);
        if q < -1e-9 {
            return Err(Error::HypothesisViolation {
                hypothesis: "H2",
                sample: rs[i],
                detail: format!("difference quotient {q} < 0: graph is not monotone"),
            });
        }
        c_est = c_est.min(q);
    }
    let growth_est = rs
        .iter()
        .zip(&vals)
        .map(|(r, v)| v.lo.abs().max(v.hi.abs()) / (1.0 + r.abs()))
        .fold(0.0, f64::max);

    let jump = detect_gamma_prime_jump(g, vals[0].lo, vals[samples - 1].hi);

    Ok(HypothesisReport {
        samples,
        c_alpha_estimate: c_est,
        growth_estimate: growth_est,
        gamma_is_c1: jump.is_none(),
        gamma_prime_jump_at: jump,
        declared_c_alpha: g.c_alpha,
        declared_growth: g.growth,
        monotonicity_pass: c_est >= g.c_alpha - 1e-9,
        growth_pass: growth_est <= g.growth + 1e-9,
    })
}

/// Scans finite-difference `γ'` on a uniform grid and bisects towards any
/// large increment; a jump is reported when the increment survives down to
/// width `1e-4`.
fn detect_gamma_prime_jump(g: &ScalarGraph, lo: f64, hi: f64) -> Option<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    let d = |v: f64| g.gamma_prime_fd(v);
    let step = (hi - lo) / (C1_POINTS - 1) as f64;
    for i in 1..C1_POINTS {
        let (mut p, mut q) = (lo + step * (i - 1) as f64, lo + step * i as f64);
        let (mut dp, mut dq) = (d(p), d(q));
        if !(dp.is_finite() && dq.is_finite()) {
            return Some(0.5 * (p + q));
        }
        if (dq - dp).abs() <= C1_JUMP_THRESHOLD {
            continue;
        }
        while q - p > C1_REFINE_WIDTH {
            let m = 0.5 * (p + q);
            let dm = d(m);
            if (dm - dp).abs() >= (dq - dm).abs() {
                q = m;
                dq = dm;
            } else {
                p = m;
                dp = dm;
            }
        }
        if (dq - dp).abs() > C1_JUMP_THRESHOLD {
            return Some(0.5 * (p + q));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn smooth() -> ScalarGraph {
        ScalarGraph::stefan_smooth(1.0).unwrap()
    }

    #[test]
    fn values_of_builtins() {
        assert_eq!(ScalarGraph::sign().value(0.0), Interval::new(-1.0, 1.0));
        assert_eq!(ScalarGraph::identity().value(3.0), Interval::point(3.0));
        assert_eq!(ScalarGraph::stefan().value(2.0), Interval::point(3.0));
        assert_eq!(ScalarGraph::stefan().value(0.0), Interval::new(-1.0, 1.0));
        assert_abs_diff_eq!(smooth().value(8.0).lo, 1.0 + 8.0 + 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(smooth().value(-8.0).hi, -11.0, epsilon = 1e-14);
    }

    #[test]
    fn resolvent_examples() {
        let id = ScalarGraph::identity();
        assert_abs_diff_eq!(id.resolvent(0.5, 3.0).unwrap(), 2.0, epsilon = 1e-15);
        let st = ScalarGraph::stefan();
        assert_eq!(st.resolvent(0.5, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(st.resolvent(0.5, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(id.resolvent(0.0, 1.0).is_err());
    }

    #[test]
    fn stefan_smooth_resolvent_matches_cardano() {
        // r + 0.1(1 + r + r^{1/3}) = 1 with s = r^{1/3}:
        // 1.1 s³ + 0.1 s − 0.9 = 0.
        let s = depressed_cubic_root(0.1 / 1.1, 0.9 / 1.1);
        let expected = s * s * s;
        let r = smooth().resolvent(0.1, 1.0).unwrap();
        assert_abs_diff_eq!(r, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r + 0.1 * (1.0 + r + r.cbrt()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn yosida_examples() {
        assert_abs_diff_eq!(ScalarGraph::identity().yosida(0.5, 3.0).unwrap(), 2.0, epsilon = 1e-15);
        let st = ScalarGraph::stefan();
        assert_abs_diff_eq!(st.yosida(0.5, 0.3).unwrap(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(st.yosida(0.5, 2.0).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn gamma_examples() {
        let st = ScalarGraph::stefan();
        assert_eq!(st.gamma(0.5), 0.0);
        assert_eq!(st.gamma_prime(0.5), 0.0);
        assert_eq!(st.gamma(2.0), 1.0);
        assert_eq!(st.gamma_prime(2.0), 1.0);
        // right derivatives at the kinks
        assert_eq!(st.gamma_prime(1.0), 1.0);
        assert_eq!(st.gamma_prime(-1.0), 0.0);
        let sm = smooth();
        assert!(sm.gamma_prime(1.0 + 1e-9) < 1e-12);
        assert_eq!(sm.gamma_prime(1.0), 0.0);
        for v in [1.5, 3.0, -2.0, 10.0] {
            assert_abs_diff_eq!(sm.gamma_prime(v), sm.gamma_prime_fd(v), epsilon = 1e-7);
            assert!(sm.gamma_prime(v) >= 0.0 && sm.gamma_prime(v) <= 1.0 / sm.c_alpha);
        }
    }

    #[test]
    fn gamma_inverts_min_selection() {
        for g in [ScalarGraph::stefan(), smooth(), ScalarGraph::scaled_identity(2.5).unwrap()] {
            for r in [-3.0, -0.2, 0.7, 4.0] {
                assert_abs_diff_eq!(g.gamma(g.min_selection(r)), r, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn conjugate_examples() {
        assert_abs_diff_eq!(ScalarGraph::identity().conjugate(2.0), 2.0);
        assert_abs_diff_eq!(ScalarGraph::stefan().conjugate(3.0), 2.0);
        assert_eq!(ScalarGraph::stefan().conjugate(0.5), 0.0);
        assert_eq!(ScalarGraph::sign().conjugate(1.5), f64::INFINITY);
    }

    #[test]
    fn conjugate_matches_grid_oracle() {
        let graphs = [
            ScalarGraph::stefan(),
            smooth(),
            ScalarGraph::sum_with_identity(ScalarGraph::sign(), 2.0).unwrap(),
        ];
        for g in &graphs {
            for v in [-4.0, -0.3, 0.0, 1.7, 6.0] {
                let oracle = numeric_conjugate(|r| g.potential(r), v);
                assert_abs_diff_eq!(g.conjugate(v), oracle, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn moreau_conjugate_examples() {
        assert_abs_diff_eq!(ScalarGraph::identity().moreau_conjugate(0.5, 2.0), 3.0);
        assert_eq!(ScalarGraph::stefan().moreau_conjugate(1.0, 0.0), 0.0);
        let g = smooth();
        let oracle = numeric_conjugate(|x| g.moreau_envelope(0.1, x).unwrap(), 1.5);
        assert_abs_diff_eq!(g.moreau_conjugate(0.1, 1.5), oracle, epsilon = 1e-8);
    }

    #[test]
    fn piecewise_linear_reproduces_stefan() {
        let pl = ScalarGraph::piecewise_linear(vec![
            Breakpoint { at: -1.0, left: -2.0, right: -2.0 },
            Breakpoint { at: 0.0, left: -1.0, right: 1.0 },
            Breakpoint { at: 1.0, left: 2.0, right: 2.0 },
        ])
        .unwrap();
        let st = ScalarGraph::stefan();
        assert_eq!((pl.c_alpha, pl.growth), (1.0, 1.0));
        for x in [-5.0, -1.3, -0.2, 0.0, 0.4, 2.0, 7.5] {
            assert_abs_diff_eq!(pl.resolvent(0.3, x).unwrap(), st.resolvent(0.3, x).unwrap(), epsilon = 1e-14);
            assert_abs_diff_eq!(pl.gamma(x), st.gamma(x), epsilon = 1e-14);
            assert_eq!(pl.gamma_prime(x), st.gamma_prime(x));
            assert_abs_diff_eq!(pl.potential(x), st.potential(x), epsilon = 1e-13);
            assert_abs_diff_eq!(pl.conjugate(x), st.conjugate(x), epsilon = 1e-13);
        }
    }

    #[test]
    fn piecewise_linear_rejects_bad_input() {
        let flat = vec![
            Breakpoint { at: 0.0, left: 0.0, right: 0.0 },
            Breakpoint { at: 1.0, left: 0.0, right: 0.0 },
        ];
        assert!(ScalarGraph::piecewise_linear(flat).is_err());
        let no_zero = vec![
            Breakpoint { at: 0.0, left: 1.0, right: 1.0 },
            Breakpoint { at: 1.0, left: 2.0, right: 2.0 },
        ];
        assert!(matches!(
            ScalarGraph::piecewise_linear(no_zero),
            Err(Error::HypothesisViolation { .. })
        ));
        assert!(ScalarGraph::piecewise_linear(vec![Breakpoint { at: 0.0, left: 0.0, right: 0.0 }]).is_err());
    }

    #[test]
    fn stefan_smooth_resolvent_matches_bisection() {
        for kappa in [0.1, 1.0, 4.0] {
            let g = ScalarGraph::stefan_smooth(kappa).unwrap();
            for eps in [1e-3, 0.1, 0.9] {
                for x in [-50.0, -2.0, -0.3, 0.0, 1e-3, 0.95, 1.2, 7.5] {
                    let closed = g.resolvent(eps, x).unwrap();
                    let bis = g.resolvent_bisect(eps, x).unwrap();
                    assert_abs_diff_eq!(closed, bis, epsilon = 1e-12 * (1.0 + x.abs()));
                }
            }
        }
    }

    #[test]
    fn sum_with_identity_matches_bisection() {
        let g = ScalarGraph::sum_with_identity(smooth(), 0.5).unwrap();
        for x in [-3.0, -0.05, 0.0, 0.4, 2.2] {
            let closed = g.resolvent(0.2, x).unwrap();
            let bis = g.resolvent_bisect(0.2, x).unwrap();
            assert_abs_diff_eq!(closed, bis, epsilon = 1e-12);
        }
    }

    #[test]
    fn validate_identity() {
        let rep = ScalarGraph::identity().validate_hypotheses((-10.0, 10.0), 10_000).unwrap();
        assert_abs_diff_eq!(rep.c_alpha_estimate, 1.0, epsilon = 1e-9);
        assert!(rep.growth_estimate <= 1.0);
        assert!(rep.gamma_is_c1);
        assert!(rep.passes());
    }

    #[test]
    fn validate_stefan_flags_gamma_jump() {
        let rep = ScalarGraph::stefan().validate_hypotheses((-10.0, 10.0), 10_000).unwrap();
        assert_abs_diff_eq!(rep.c_alpha_estimate, 1.0, epsilon = 1e-9);
        assert!(!rep.gamma_is_c1);
        let at = rep.gamma_prime_jump_at.unwrap();
        assert!((at.abs() - 1.0).abs() < 1e-3, "jump located at {at}");
        assert!(!rep.passes());
    }

    #[test]
    fn validate_stefan_smooth() {
        let rep = smooth().validate_hypotheses((-10.0, 10.0), 10_000).unwrap();
        assert!(rep.c_alpha_estimate >= 1.0 - 1e-9);
        assert!(rep.gamma_is_c1);
        assert!(rep.passes());
    }

    #[test]
    fn validate_rejects_small_sample() {
        assert!(matches!(
            ScalarGraph::identity().validate_hypotheses((-1.0, 1.0), 10),
            Err(Error::InvalidArgument(_))
        ));
    }
}
