//! Numerical blow-up and growth analysis for nonlinear Volterra
//! integro-differential equations
//!
//! ```text
//! x'(t) = h(t) + ∫₀ᵗ w(t − s) f(x(s)) ds,   x(0) = x₀ > 0.
//! ```
//!
//! Solutions explode in finite time exactly when `∫^∞ du/√F̄(u)` converges,
//! where `F̄(x) = ∫₀ˣ f`. Near the blow-up time `T` they obey
//! `F_B(x(t)) / (T − t) → √(2w(0))`; global solutions obey
//! `F_U(x(t)) / t → √(2w(0))`.
//!
//! The crate provides
//!
//! * [`nonlinearity`]: `f`, `F̄`, `F_B`, `F_U`, and the Osgood classifier;
//! * [`kernel`] and [`forcing`]: memory kernels `w` and forcing terms `h`;
//! * [`solver`]: an adaptive product-trapezoid solver with blow-up detection;
//! * [`comparison`]: bounded-delay equations, `z'' = f(z)`, and the auxiliary
//!   problem `y' = √F̄(y)`, used as independent cross-checks;
//! * [`asymptotics`]: rate diagnostics that turn trajectories into banded
//!   limit verdicts.
//!
//! ```
//! use volterra_blowup::nonlinearity::{classify_osgood, CutoffLadder, Nonlinearity, OsgoodClass};
//!
//! let f = Nonlinearity::power_plus_one(2.0)?;
//! let verdict = classify_osgood(&f, 1.0, &CutoffLadder::decades(), 1e-2)?;
//! assert_eq!(verdict.classification, OsgoodClass::Finite);
//! # Ok::<(), volterra_blowup::Error>(())
//! ```

// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature nodes and weights are kept as published.
#![allow(clippy::excessive_precision)]

pub mod asymptotics;
pub mod catalog;
pub mod comparison;
mod error;
pub mod extrapolate;
pub mod forcing;
pub mod kernel;
pub mod nonlinearity;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use forcing::Forcing;
pub use kernel::Kernel;
pub use nonlinearity::Nonlinearity;
pub use solver::{solve, SolverConfig, Status, Trajectory};
