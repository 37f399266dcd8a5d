//! Numerical toolkit for doubly nonlinear stochastic evolution equations
//!
//! ```text
//! d(Au) + Bu dt ∋ F(u) dt + G(u) dW
//! ```
//!
//! on `(0,1)` with homogeneous Dirichlet conditions, together with the
//! two-parameter regularization (Yosida parameter `ε`, elliptic parameter `λ`)
//! used to construct solutions, and diagnostics that check the associated
//! estimates numerically.

pub mod diagnostics;
pub mod error;
pub mod graph1d;
pub mod noise;
pub mod operators;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
