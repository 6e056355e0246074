use super::engine::{run, Memory, Problem};
use super::{SolverConfig, Trajectory};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::kernel::Kernel;
use crate::nonlinearity::Nonlinearity;

/// Solve `x' = h + ∫₀ᵗ w(t − s) f(x(s)) ds`, `x(0) = x0`.
///
/// Errors are reserved for invalid inputs; numerical failures end up in
/// [`Status::Aborted`](super::Status::Aborted).
pub fn solve(kernel: &Kernel, nl: &Nonlinearity, forcing: &Forcing, x0: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::InvalidConfig(format!("x0 must be positive, got {x0}")));
    }
    let problem = Problem {
        nl,
        memory: Memory {
            weight: Box::new(|tau| kernel.eval_unchecked(tau)),
            weight_sup: kernel.sup_bound(),
            window: kernel.support().unwrap_or(f64::INFINITY),
        },
        forcing,
        prehistory: Vec::new(),
        x0,
        label: format!("vide kernel={} f={} forcing={} x0={x0}", kernel.label(), nl.label(), forcing.label()),
    };
    Ok(run(&problem, cfg))
}

/// `∫₀ᵗ w(t − s) f(x(s)) ds` by the trapezoidal rule on the trajectory's
/// nodes up to `t`, with `f ∘ x` interpolated linearly inside the cell that
/// contains `t`.
pub fn convolution_term(traj: &Trajectory, kernel: &Kernel, nl: &Nonlinearity, t: f64) -> Result<f64> {
    if traj.is_empty() || t <= traj.times[0] {
        return Ok(0.0);
    }
    if t > traj.last_time() {
        return Err(Error::Domain(format!("t = {t} lies beyond the last node {}", traj.last_time())));
    }
    let fx: Vec<f64> = traj.values.iter().map(|&x| nl.eval(x)).collect::<Result<_>>()?;
    Ok(memory_on_grid(&traj.times, &fx, kernel, t))
}

fn memory_on_grid(times: &[f64], fx: &[f64], kernel: &Kernel, t: f64) -> f64 {
    let window = kernel.support().unwrap_or(f64::INFINITY);
    let g = |tau: f64| kernel.eval_unchecked(tau.min(window));
    let lo = (t - window).max(times[0]);
    let end = times.partition_point(|&s| s <= t);
    // Nodes inside (lo, t], plus interpolated endpoints.
    let interp = |s: f64| -> f64 {
        let i = times.partition_point(|&u| u <= s).clamp(1, times.len() - 1);
        let (a, b) = (times[i - 1], times[i]);
        if b == a {
            fx[i]
        } else {
            fx[i - 1] + (fx[i] - fx[i - 1]) * (s - a) / (b - a)
        }
    };
    let mut pts: Vec<(f64, f64)> = Vec::new();
    pts.push((lo, if lo == times[0] { fx[0] } else { interp(lo) }));
    for k in 0..end {
        if times[k] > lo && times[k] < t {
            pts.push((times[k], fx[k]));
        }
    }
    let last_is_node = end > 0 && times[end - 1] == t;
    pts.push((t, if last_is_node { fx[end - 1] } else { interp(t) }));
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (g(t - w[0].0) * w[0].1 + g(t - w[1].0) * w[1].1)).sum()
}

/// Largest residual of the integrated form
/// `x(t) = x0 + H(t) + ∫₀ᵗ ∫₀ˢ w(s − r) f(x(r)) dr ds`
/// on the trajectory's nodes, with both integrals taken by the trapezoidal
/// rule on the grid.
pub fn residual_check(traj: &Trajectory, kernel: &Kernel, nl: &Nonlinearity, forcing: &Forcing, x0: f64) -> Result<f64> {
    if traj.len() <= 1 {
        return Ok(traj.values.first().map_or(0.0, |&x| (x - x0).abs()));
    }
    let fx: Vec<f64> = traj.values.iter().map(|&x| nl.eval(x)).collect::<Result<_>>()?;
    let memory: Vec<f64> = traj.times.iter().map(|&t| memory_on_grid(&traj.times, &fx, kernel, t)).collect();
    let mut outer = 0.0;
    let mut worst = (traj.values[0] - x0).abs();
    for i in 1..traj.len() {
        outer += 0.5 * (traj.times[i] - traj.times[i - 1]) * (memory[i - 1] + memory[i]);
        let integrated = x0 + forcing.cumulative(traj.times[i])? + outer;
        worst = worst.max((traj.values[i] - integrated).abs());
    }
    Ok(worst)
}
