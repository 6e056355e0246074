//! Bounded-delay equations, integrated by the same trapezoidal machinery as
//! the integro-differential solver over a sliding window of length `δ`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::kernel::Kernel;
use crate::nonlinearity::{Nonlinearity, RealMap};
use crate::solver::engine::{run, Memory, Problem};
use crate::solver::{SolverConfig, Trajectory};

/// Nodes used to represent the initial function on `[−δ, 0)`.
const PREHISTORY_NODES: usize = 128;
/// A lag ratio must end below this value.
pub const LAG_RATIO_THRESHOLD: f64 = 1e-3;

#[derive(Clone)]
pub enum InitialFunction {
    Constant(f64),
    /// `ψ(s) = a + b s`.
    Affine { a: f64, b: f64 },
    Custom(RealMap),
}

impl fmt::Debug for InitialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialFunction::Constant(c) => write!(f, "Constant({c})"),
            InitialFunction::Affine { a, b } => write!(f, "Affine({a} + {b}s)"),
            InitialFunction::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl InitialFunction {
    pub fn custom(psi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        InitialFunction::Custom(Arc::new(psi))
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            InitialFunction::Constant(c) => *c,
            InitialFunction::Affine { a, b } => a + b * s,
            InitialFunction::Custom(psi) => psi(s),
        }
    }
}

/// Weight inside the delay window.
#[derive(Debug, Clone)]
pub enum DelayGain {
    /// `C`, constant over the window.
    Constant(f64),
    /// `w(t − s)`.
    Kernel(Kernel),
}

#[derive(Debug, Clone)]
pub struct DelayProblem {
    pub gain: DelayGain,
    pub delta: f64,
    pub psi: InitialFunction,
}

impl DelayProblem {
    pub fn constant_gain(c: f64, delta: f64, psi: InitialFunction) -> Self {
        Self { gain: DelayGain::Constant(c), delta, psi }
    }

    pub fn with_kernel(kernel: Kernel, delta: f64, psi: InitialFunction) -> Self {
        Self { gain: DelayGain::Kernel(kernel), delta, psi }
    }

    /// `δ > 0`, `C > 0`, and `ψ` finite and positive on a sample of `[−δ, 0]`.
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("delay must be positive, got {}", self.delta)));
        }
        if let DelayGain::Constant(c) = self.gain {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidConfig(format!("gain must be positive, got {c}")));
            }
        }
        for i in 0..=256 {
            let s = -self.delta * i as f64 / 256.0;
            let v = self.psi.eval(s);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("initial function is {v} at s = {s}")));
            }
        }
        Ok(())
    }

    fn prehistory(&self) -> Vec<(f64, f64)> {
        (0..PREHISTORY_NODES)
            .map(|i| {
                let s = -self.delta + self.delta * i as f64 / PREHISTORY_NODES as f64;
                (s, self.psi.eval(s))
            })
            .collect()
    }

    fn label(&self, nl: &Nonlinearity) -> String {
        let gain = match &self.gain {
            DelayGain::Constant(c) => format!("C={c}"),
            DelayGain::Kernel(k) => format!("kernel={}", k.label()),
        };
        format!("delay {gain} delta={} psi={:?} f={}", self.delta, self.psi, nl.label())
    }
}

fn solve_problem(problem: &DelayProblem, nl: &Nonlinearity, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    problem.validate()?;
    let zero = Forcing::zero();
    let (weight, weight_sup): (Box<dyn Fn(f64) -> f64 + '_>, Option<f64>) = match &problem.gain {
        DelayGain::Constant(c) => {
            let c = *c;
            (Box::new(move |_| c), Some(c))
        }
        DelayGain::Kernel(k) => (Box::new(|tau| k.eval_unchecked(tau)), k.sup_bound()),
    };
    let p = Problem {
        nl,
        memory: Memory { weight, weight_sup, window: problem.delta },
        forcing: &zero,
        prehistory: problem.prehistory(),
        x0: problem.psi.eval(0.0),
        label: problem.label(nl),
    };
    Ok(run(&p, cfg))
}

/// `z'(t) = C ∫_{t−δ}^t f(z(s)) ds`, `z = ψ` on `[−δ, 0]`.
pub fn solve_delay(problem: &DelayProblem, nl: &Nonlinearity, cfg: &SolverConfig) -> Result<Trajectory> {
    if !matches!(problem.gain, DelayGain::Constant(_)) {
        return Err(Error::InvalidConfig("solve_delay needs a constant gain".into()));
    }
    solve_problem(problem, nl, cfg)
}

/// `z'(t) = ∫_{t−δ}^t w(t − s) f(z(s)) ds`, `z = ψ` on `[−δ, 0]`.
pub fn solve_delay_kernel(problem: &DelayProblem, nl: &Nonlinearity, cfg: &SolverConfig) -> Result<Trajectory> {
    if !matches!(problem.gain, DelayGain::Kernel(_)) {
        return Err(Error::InvalidConfig("solve_delay_kernel needs a kernel gain".into()));
    }
    solve_problem(problem, nl, cfg)
}

/// `(t, z(t − σ)/z(t))` at the trajectory nodes with `t ≥ σ + t_from`.
pub fn lag_ratios(traj: &Trajectory, sigma: f64, t_from: f64) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(&traj.values)
        .filter(|(&t, _)| t - sigma >= t_from.max(0.0))
        .filter_map(|(&t, &z)| traj.value_at(t - sigma).map(|zl| (t, zl / z)))
        .collect()
}

/// `(t, F̄(z(t − σ))/F̄(z(t)))`, formed through `ln F̄`.
pub fn fbar_lag_ratios(traj: &Trajectory, nl: &Nonlinearity, sigma: f64, t_from: f64) -> Result<Vec<(f64, f64)>> {
    lag_ratios(traj, sigma, t_from)
        .into_iter()
        .map(|(t, _)| {
            let z = traj.value_at(t).expect("node lies on the trajectory");
            let zl = traj.value_at(t - sigma).expect("checked by lag_ratios");
            Ok((t, (nl.ln_fbar_at_ln(zl.ln())? - nl.ln_fbar_at_ln(z.ln())?).exp()))
        })
        .collect()
}

/// Outcome of a sampled "ratio tends to zero" check.
#[derive(Debug, Clone, PartialEq)]
pub struct LagRatioReport {
    pub samples: Vec<(f64, f64)>,
    /// Nonincreasing over the second half of the samples.
    pub decreasing_tail: bool,
    pub final_value: f64,
    pub passes: bool,
}

/// The ratio decreases over the tail of the samples and ends below
/// [`LAG_RATIO_THRESHOLD`].
pub fn lag_ratio_test(samples: Vec<(f64, f64)>) -> LagRatioReport {
    let final_value = samples.last().map_or(f64::NAN, |s| s.1);
    let tail = &samples[samples.len() / 2..];
    let decreasing_tail = tail.len() >= 2 && tail.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9));
    let passes = decreasing_tail && final_value < LAG_RATIO_THRESHOLD;
    LagRatioReport { samples, decreasing_tail, final_value, passes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Status;

    fn unit_problem(c: f64) -> DelayProblem {
        DelayProblem::constant_gain(c, 1.0, InitialFunction::Constant(1.0))
    }

    #[test]
    fn log_linear_delay_is_global_and_monotone() {
        let traj = solve_delay(&unit_problem(1.0), &Nonlinearity::log_linear(), &SolverConfig::new(10.0)).unwrap();
        assert_eq!(traj.status, Status::ReachedHorizon { t_end: 10.0 });
        assert!(traj.values.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn power_delay_blows_up() {
        let traj =
            solve_delay(&unit_problem(1.0), &Nonlinearity::power_plus_one(2.0).unwrap(), &SolverConfig::new(10.0))
                .unwrap();
        assert!(matches!(traj.status, Status::BlowUpDetected { .. }), "{:?}", traj.status);
    }

    #[test]
    fn unit_kernel_reduces_to_unit_gain() {
        let cfg = SolverConfig::new(4.0).with_rel_tol(1e-7);
        let nl = Nonlinearity::log_linear();
        let a = solve_delay(&unit_problem(1.0), &nl, &cfg).unwrap();
        let kp = DelayProblem::with_kernel(Kernel::constant(1.0).unwrap(), 1.0, InitialFunction::Constant(1.0));
        let b = solve_delay_kernel(&kp, &nl, &cfg).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn first_interval_matches_closed_form() {
        // f = 1 + 0·x is not superlinear but makes z' = C·δ·... exact: with
        // f ≡ 1, z'(t) = C δ, so z(t) = 1 + C δ t.
        let nl = Nonlinearity::custom("one", |_| 1.0).with_claims(true, false);
        let traj = solve_delay(&unit_problem(2.0), &nl, &SolverConfig::new(3.0)).unwrap();
        assert!((traj.last_value() - 7.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_problems() {
        let nl = Nonlinearity::log_linear();
        let cfg = SolverConfig::new(1.0);
        assert!(solve_delay(&DelayProblem::constant_gain(1.0, 0.0, InitialFunction::Constant(1.0)), &nl, &cfg).is_err());
        assert!(solve_delay(&DelayProblem::constant_gain(1.0, 1.0, InitialFunction::Constant(-1.0)), &nl, &cfg).is_err());
        let kp = DelayProblem::with_kernel(Kernel::constant(1.0).unwrap(), 1.0, InitialFunction::Constant(1.0));
        assert!(solve_delay(&kp, &nl, &cfg).is_err());
    }
}
