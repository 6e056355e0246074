//! Adaptive solution of `x'(t) = h(t) + ∫₀ᵗ w(t − s) f(x(s)) ds`.
//!
//! The state is advanced with the trapezoidal rule; the memory integral is
//! the composite trapezoidal rule over the stored (nonuniform) history. The
//! implicit current value is found by damped fixed-point iteration, and the
//! step size is halved or doubled on a step-doubling error estimate.
//!
//! ```
//! use volterra_blowup::{solve, Forcing, Kernel, Nonlinearity, SolverConfig, Status};
//!
//! let w = Kernel::constant(1.0)?;
//! let f = Nonlinearity::power_plus_one(2.0)?;
//! let traj = solve(&w, &f, &Forcing::zero(), 1.0, &SolverConfig::new(5.0))?;
//! assert!(matches!(traj.status, Status::BlowUpDetected { .. }));
//! # Ok::<(), volterra_blowup::Error>(())
//! ```

mod blowup;
pub(crate) mod engine;
mod trajectory;
mod vide;

pub use blowup::{crossings_are_geometric, estimate_blowup_time, estimate_from_crossings, MIN_CROSSINGS};
pub use trajectory::{Crossing, Trajectory};
pub(crate) use trajectory::record_crossings;
pub use vide::{convolution_term, residual_check, solve};

use crate::error::{Error, Result};

/// Step-size and termination settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Accepted local error relative to `|x|`.
    pub rel_tol: f64,
    /// Level above which the run checks whether it is exploding.
    pub blowup_threshold: f64,
    /// Crossing times are recorded at the levels `x₀ Rⁿ`.
    pub crossing_ratio: f64,
    pub t_end: f64,
    /// Uniform steps with no error control (used to measure the order).
    pub fixed_step: Option<f64>,
    /// Upper bound on stored history nodes.
    pub max_nodes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            min_step: 1e-13,
            max_step: 0.25,
            rel_tol: 1e-6,
            blowup_threshold: 1e12,
            crossing_ratio: 2.0,
            t_end: 10.0,
            fixed_step: None,
            max_nodes: 2_000_000,
        }
    }
}

impl SolverConfig {
    pub fn new(t_end: f64) -> Self {
        Self { t_end, ..Self::default() }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_fixed_step(mut self, h: f64) -> Self {
        self.fixed_step = Some(h);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.min_step > 0.0 && self.min_step <= self.initial_step && self.initial_step <= self.max_step) {
            return bad(format!(
                "need 0 < min_step <= initial_step <= max_step, got {} / {} / {}",
                self.min_step, self.initial_step, self.max_step
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return bad(format!("rel_tol must lie in (0, 1e-2], got {}", self.rel_tol));
        }
        if !(self.crossing_ratio > 1.0) {
            return bad(format!("crossing ratio must exceed 1, got {}", self.crossing_ratio));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad(format!("blow-up threshold must be positive, got {}", self.blowup_threshold));
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("fixed step must be positive, got {h}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    ReachedHorizon { t_end: f64 },
    BlowUpDetected { t_est: f64, t_err: f64 },
    Aborted(AbortReason),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AbortReason {
    /// Fixed-point iteration failed even at the minimum step.
    NonConvergentImplicitStep { t: f64 },
    /// `x ≤ 0`; only possible with negative forcing.
    PositivityLoss { t: f64 },
    StepBudgetExhausted { nodes: usize },
    Overflow { t: f64 },
    /// The run exploded but the crossing times gave no usable limit.
    BlowUpTimeUnresolved { reason: String },
    Evaluation { t: f64, reason: String },
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::NonConvergentImplicitStep { t } => write!(f, "NonConvergentImplicitStep at t={t}"),
            AbortReason::PositivityLoss { t } => write!(f, "PositivityLoss at t={t}"),
            AbortReason::StepBudgetExhausted { nodes } => write!(f, "StepBudgetExhausted after {nodes} nodes"),
            AbortReason::Overflow { t } => write!(f, "Overflow at t={t}"),
            AbortReason::BlowUpTimeUnresolved { reason } => write!(f, "BlowUpTimeUnresolved: {reason}"),
            AbortReason::Evaluation { t, reason } => write!(f, "Evaluation failure at t={t}: {reason}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        SolverConfig::default().validate().unwrap();
        assert!(SolverConfig { rel_tol: 0.1, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { min_step: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { crossing_ratio: 1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig::new(-1.0).validate().is_err());
    }
}
