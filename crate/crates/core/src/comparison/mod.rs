//! Independent solvers for the comparison objects:
//!
//! * bounded-delay equations `z'(t) = C ∫_{t−δ}^t f(z(s)) ds` and
//!   `z'(t) = ∫_{t−δ}^t w(t − s) f(z(s)) ds` with a positive initial function
//!   on `[−δ, 0]`;
//! * the second-order equation `z'' = f(z)`;
//! * the auxiliary problem `y' = √F̄(y)`, `y(0) = 1`, whose solution is
//!   `F_U⁻¹(t)`.

mod delay;
mod ode;

pub use delay::{fbar_lag_ratios, lag_ratio_test, lag_ratios, solve_delay, solve_delay_kernel, DelayGain, DelayProblem, InitialFunction, LagRatioReport, LAG_RATIO_THRESHOLD};
pub use ode::{energy_drift, solve_aux_ivp, solve_aux_ivp_ln, solve_second_order};
