//! Classical fourth-order Runge–Kutta with step doubling.

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::solver::{crossings_are_geometric, estimate_from_crossings, AbortReason, SolverConfig, Status, Trajectory};
use crate::solver::{record_crossings, Crossing};

/// Tolerance for the `F_B(1)` check that guards the auxiliary problem.
const FB_TOL: f64 = 1e-10;

type Rhs<'a, const N: usize> = dyn Fn(&[f64; N]) -> std::result::Result<[f64; N], String> + 'a;

fn rk4<const N: usize>(rhs: &Rhs<'_, N>, y: &[f64; N], dt: f64) -> std::result::Result<[f64; N], String> {
    let shift = |base: &[f64; N], k: &[f64; N], c: f64| -> [f64; N] {
        let mut out = *base;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    let k1 = rhs(y)?;
    let k2 = rhs(&shift(y, &k1, 0.5 * dt))?;
    let k3 = rhs(&shift(y, &k2, 0.5 * dt))?;
    let k4 = rhs(&shift(y, &k3, dt))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrates an autonomous system; component 0 is reported, and crossings
/// of `y₀(0) Rⁿ` are recorded when `track_crossings` is set.
fn integrate<const N: usize>(
    rhs: &Rhs<'_, N>,
    y0: [f64; N],
    cfg: &SolverConfig,
    track_crossings: bool,
    label: String,
) -> Trajectory {
    let first = match rhs(&y0) {
        Ok(d) => d,
        Err(reason) => {
            let status = Status::Aborted(AbortReason::Evaluation { t: 0.0, reason });
            return finish(vec![0.0], vec![y0[0]], vec![f64::NAN], vec![0.0], Vec::new(), status, label);
        }
    };
    let (mut times, mut values, mut derivs, mut steps) = (vec![0.0], vec![y0[0]], vec![first[0]], vec![0.0]);
    let mut crossings: Vec<Crossing> = Vec::new();
    let mut next_level = if track_crossings { y0[0] * cfg.crossing_ratio } else { f64::INFINITY };
    let (mut t, mut y, mut dy) = (0.0, y0, first);
    let mut dt = cfg.fixed_step.unwrap_or(cfg.initial_step);
    let status = loop {
        if t >= cfg.t_end {
            break Status::ReachedHorizon { t_end: cfg.t_end };
        }
        if times.len() >= cfg.max_nodes {
            break Status::Aborted(AbortReason::StepBudgetExhausted { nodes: times.len() });
        }
        let h = dt.min(cfg.t_end - t);
        let step = (|| -> std::result::Result<([f64; N], f64), String> {
            let full = rk4(rhs, &y, h)?;
            if cfg.fixed_step.is_some() {
                return Ok((full, 0.0));
            }
            let half = rk4(rhs, &rk4(rhs, &y, 0.5 * h)?, 0.5 * h)?;
            let err = (0..N)
                .map(|i| (half[i] - full[i]).abs() / 15.0 / (cfg.rel_tol * half[i].abs().max(y[i].abs()).max(1e-300)))
                .fold(0.0, f64::max);
            let mut extrapolated = half;
            for i in 0..N {
                extrapolated[i] += (half[i] - full[i]) / 15.0;
            }
            Ok((extrapolated, err))
        })();
        let (ynew, err) = match step {
            Ok(s) if s.0.iter().all(|v| v.is_finite()) => s,
            Ok(_) => (y, f64::INFINITY),
            Err(reason) => {
                if h > cfg.min_step {
                    dt = 0.5 * h;
                    continue;
                }
                break Status::Aborted(AbortReason::Evaluation { t, reason });
            }
        };
        if err > 1.0 && h > cfg.min_step {
            dt = (0.5 * h).max(cfg.min_step);
            continue;
        }
        if !err.is_finite() {
            break Status::Aborted(AbortReason::Overflow { t });
        }
        let dnew = match rhs(&ynew) {
            Ok(d) => d,
            Err(reason) => break Status::Aborted(AbortReason::Evaluation { t: t + h, reason }),
        };
        next_level = record_crossings((t, y[0], dy[0]), (t + h, ynew[0], dnew[0]), next_level, cfg.crossing_ratio, &mut crossings);
        t = if cfg.t_end - (t + h) <= 1e-14 * cfg.t_end.max(1.0) { cfg.t_end } else { t + h };
        y = ynew;
        dy = dnew;
        times.push(t);
        values.push(y[0]);
        derivs.push(dy[0]);
        steps.push(h);
        if y[0] > 1e300 {
            break Status::Aborted(AbortReason::Overflow { t });
        }
        if track_crossings && y[0] >= cfg.blowup_threshold {
            let ct: Vec<f64> = crossings.iter().map(|c| c.time).collect();
            if crossings_are_geometric(&ct) {
                break match estimate_from_crossings(&ct) {
                    Ok((t_est, t_err)) if t_est > t => Status::BlowUpDetected { t_est, t_err },
                    Ok(_) => Status::Aborted(AbortReason::BlowUpTimeUnresolved { reason: "limit precedes last node".into() }),
                    Err(e) => Status::Aborted(AbortReason::BlowUpTimeUnresolved { reason: e.to_string() }),
                };
            }
        }
        if cfg.fixed_step.is_none() && err < 1.0 / 32.0 {
            dt = (2.0 * h).min(cfg.max_step);
        } else if cfg.fixed_step.is_none() {
            dt = h;
        }
    };
    finish(times, values, derivs, steps, crossings, status, label)
}

fn finish(
    times: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    steps: Vec<f64>,
    crossings: Vec<Crossing>,
    status: Status,
    label: String,
) -> Trajectory {
    Trajectory { times, values, derivs, steps, crossings, status, label }
}

/// `z'' = f(z)`, `z(0) = z0 > 0`, `z'(0) = v0 ≥ 0`. The trajectory's
/// derivatives are `z'`.
pub fn solve_second_order(nl: &Nonlinearity, z0: f64, v0: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(z0 > 0.0 && z0.is_finite() && v0 >= 0.0 && v0.is_finite()) {
        return Err(Error::InvalidConfig(format!("need z0 > 0 and v0 >= 0, got {z0}, {v0}")));
    }
    let rhs = |y: &[f64; 2]| -> std::result::Result<[f64; 2], String> {
        let f = nl.eval(y[0]).map_err(|e| e.to_string())?;
        Ok([y[1], f])
    };
    Ok(integrate(&rhs, [z0, v0], cfg, true, format!("second_order f={} z0={z0} v0={v0}", nl.label())))
}

/// Largest relative drift of `½ z'² − F̄(z)` from its initial value,
/// measured against `½ z'² + F̄(z)`.
pub fn energy_drift(traj: &Trajectory, nl: &Nonlinearity) -> Result<f64> {
    let energy = |z: f64, v: f64| -> Result<(f64, f64)> {
        let fbar = nl.fbar(z)?;
        Ok((0.5 * v * v - fbar, 0.5 * v * v + fbar))
    };
    let (e0, _) = energy(traj.values[0], traj.derivs[0])?;
    let mut worst: f64 = 0.0;
    for (&z, &v) in traj.values.iter().zip(&traj.derivs) {
        let (e, scale) = energy(z, v)?;
        if scale > 0.0 {
            worst = worst.max((e - e0).abs() / scale);
        }
    }
    Ok(worst)
}

/// `u = ln y` for `y' = √F̄(y)`, `y(0) = 1`, integrated as
/// `u' = exp(½ ln F̄(eᵘ) − u)` so that the solution can be followed past the
/// range of `f64` in `y`.
pub fn solve_aux_ivp_ln(nl: &Nonlinearity, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    nl.validate()?;
    match nl.fb(1.0, FB_TOL) {
        Ok(fb1) if cfg.t_end >= fb1 => {
            return Err(Error::Domain(format!(
                "the solution explodes at t = {fb1} but the horizon is {}",
                cfg.t_end
            )));
        }
        Ok(_) | Err(Error::OsgoodInfinite) => {}
        Err(e) => return Err(e),
    }
    let rhs = |y: &[f64; 1]| -> std::result::Result<[f64; 1], String> {
        let l = nl.ln_fbar_at_ln(y[0]).map_err(|e| e.to_string())?;
        Ok([(0.5 * l - y[0]).exp()])
    };
    Ok(integrate(&rhs, [0.0], cfg, false, format!("aux_ln f={}", nl.label())))
}

/// `y' = √F̄(y)`, `y(0) = 1`, i.e. `y = F_U⁻¹(t)`. The run ends with
/// [`AbortReason::Overflow`] where `y` leaves the range of `f64`.
pub fn solve_aux_ivp(nl: &Nonlinearity, cfg: &SolverConfig) -> Result<Trajectory> {
    let ln = solve_aux_ivp_ln(nl, cfg)?;
    let keep = ln.values.iter().take_while(|u| u.exp().is_finite()).count();
    let status = if keep < ln.len() {
        Status::Aborted(AbortReason::Overflow { t: ln.times[keep] })
    } else {
        ln.status.clone()
    };
    let values: Vec<f64> = ln.values[..keep].iter().map(|u| u.exp()).collect();
    let derivs = values.iter().zip(&ln.derivs).map(|(y, du)| y * du).collect();
    let mut crossings = Vec::new();
    let mut next = cfg.crossing_ratio;
    for i in 1..keep {
        next = record_crossings(
            (ln.times[i - 1], values[i - 1], ln.derivs[i - 1] * values[i - 1]),
            (ln.times[i], values[i], ln.derivs[i] * values[i]),
            next,
            cfg.crossing_ratio,
            &mut crossings,
        );
    }
    Ok(Trajectory {
        times: ln.times[..keep].to_vec(),
        values,
        derivs,
        steps: ln.steps[..keep].to_vec(),
        crossings,
        status,
        label: format!("aux f={}", nl.label()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_second_order_is_cosh() {
        let nl = Nonlinearity::custom("x", |x| x).with_claims(true, false);
        let traj = solve_second_order(&nl, 1.0, 0.0, &SolverConfig::new(2.0).with_rel_tol(1e-8)).unwrap();
        assert!((traj.last_value() - 2f64.cosh()).abs() < 1e-6);
    }

    /// `∫₁^∞ dz / √(2(F̄(z) − F̄(1)))` for `f = (1 + z)²`, from the first
    /// integral `z'² = 2(F̄(z) − F̄(1))`. `z = 1 + v²` removes the
    /// singularity at 1; `z = 1/s²` maps the tail onto `(0, 1/√2]`.
    fn second_order_explosion_time() -> f64 {
        let g = |z: f64| 2.0 * (z - 1.0) * (z * z + 4.0 * z + 7.0) / 3.0;
        let head = crate::quadrature::integrate(
            |v| if v == 0.0 { 0.5f64.sqrt() } else { 2.0 * v / g(1.0 + v * v).sqrt() },
            0.0,
            1.0,
            0.0,
            1e-13,
        )
        .unwrap()
        .value;
        let tail = crate::quadrature::integrate(
            |s| if s == 0.0 { 2.0 * 1.5f64.sqrt() } else { 2.0 / (s * s * s * g(1.0 / (s * s)).sqrt()) },
            0.0,
            0.5f64.sqrt(),
            0.0,
            1e-13,
        )
        .unwrap()
        .value;
        head + tail
    }

    #[test]
    fn power_second_order_blows_up_with_small_drift() {
        let nl = Nonlinearity::power_plus_one(2.0).unwrap();
        let traj = solve_second_order(&nl, 1.0, 0.0, &SolverConfig::new(10.0).with_rel_tol(1e-9)).unwrap();
        match traj.status {
            Status::BlowUpDetected { t_est, .. } => {
                let expected = second_order_explosion_time();
                assert!((t_est - expected).abs() < 1e-5, "{t_est} vs {expected}");
            }
            other => panic!("{other:?}"),
        }
        assert!(energy_drift(&traj, &nl).unwrap() < 1e-4);
    }

    #[test]
    fn aux_matches_inverse_fu() {
        let nl = Nonlinearity::log_linear();
        let cfg = SolverConfig::new(20.0).with_rel_tol(1e-9);
        let traj = solve_aux_ivp(&nl, &cfg).unwrap();
        assert_eq!(traj.status, Status::ReachedHorizon { t_end: 20.0 });
        for (t, y) in traj.times.iter().zip(&traj.values).step_by(50) {
            assert!((nl.fu(*y, 1e-12).unwrap() - t).abs() < 1e-4, "t = {t}");
        }
    }

    #[test]
    fn aux_ln_runs_past_f64_range() {
        let nl = Nonlinearity::log_linear();
        let traj = solve_aux_ivp_ln(&nl, &SolverConfig::new(80.0)).unwrap();
        assert_eq!(traj.status, Status::ReachedHorizon { t_end: 80.0 });
        assert!(traj.last_value() > 709.0);
        let short = solve_aux_ivp(&nl, &SolverConfig::new(80.0)).unwrap();
        assert!(matches!(short.status, Status::Aborted(AbortReason::Overflow { .. })));
    }

    #[test]
    fn aux_rejects_horizon_past_explosion() {
        let nl = Nonlinearity::power_plus_one(2.0).unwrap();
        assert!(matches!(solve_aux_ivp(&nl, &SolverConfig::new(10.0)), Err(Error::Domain(_))));
        assert!(solve_aux_ivp(&nl, &SolverConfig::new(0.5)).is_ok());
    }
}
