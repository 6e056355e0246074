//! Blow-up time from the crossing times of `x₀ Rⁿ`.
//!
//! Near an explosion `x ≈ c (T − t)^{−q}`, so the crossing times approach
//! `T` geometrically with ratio `R^{−1/q}`, which is what Aitken's Δ²
//! process extrapolates exactly. A global solution that merely grows fast
//! produces gaps whose ratio creeps toward 1 instead.

use super::Trajectory;
use crate::error::{Error, Result};
use crate::extrapolate::aitken;

pub const MIN_CROSSINGS: usize = 6;
/// Crossings used for the extrapolation and the geometric test.
const TAIL: usize = 10;
/// Largest mean gap ratio accepted as geometric convergence.
const GEOMETRIC_RATIO: f64 = 0.95;

/// `(T_est, T_err)` from a trajectory's recorded crossings.
pub fn estimate_blowup_time(traj: &Trajectory) -> Result<(f64, f64)> {
    let (t, err) = estimate_from_crossings(&traj.crossing_times())?;
    if t <= traj.last_time() {
        return Err(Error::Domain(format!(
            "extrapolated blow-up time {t} does not exceed the last node {}",
            traj.last_time()
        )));
    }
    Ok((t, err))
}

/// Aitken limit of the last crossing times; the error is the distance
/// between the last two accelerated iterates.
pub fn estimate_from_crossings(times: &[f64]) -> Result<(f64, f64)> {
    if times.len() < MIN_CROSSINGS {
        return Err(Error::InsufficientCrossings { found: times.len(), needed: MIN_CROSSINGS });
    }
    let tail = &times[times.len().saturating_sub(TAIL)..];
    let (t, err) = aitken(tail)?;
    let last = tail[tail.len() - 1];
    if !(t >= last) {
        return Err(Error::DivergentAcceleration);
    }
    Ok((t, err))
}

/// Whether the gaps between the last crossings shrink geometrically.
pub fn crossings_are_geometric(times: &[f64]) -> bool {
    if times.len() < MIN_CROSSINGS + 1 {
        return false;
    }
    let tail = &times[times.len().saturating_sub(TAIL)..];
    let gaps: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.iter().any(|&g| !(g > 0.0)) {
        return false;
    }
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    mean < GEOMETRIC_RATIO && max < 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Status;

    fn synthetic(q: f64) -> Trajectory {
        // x = (1 − t)^{−q} on a grid refined toward t = 1.
        let mut times: Vec<f64> = Vec::new();
        let mut t: f64 = 0.0;
        while 1.0 - t > 1e-9 {
            times.push(t);
            t += 0.01 * (1.0 - t);
        }
        let values = times.iter().map(|t| (1.0 - *t).powf(-q)).collect();
        let derivs = times.iter().map(|t| q * (1.0 - *t).powf(-q - 1.0)).collect();
        let t_end = *times.last().unwrap();
        Trajectory::from_samples(times, values, derivs, 2.0, Status::ReachedHorizon { t_end })
    }

    #[test]
    fn recovers_unit_blowup_time() {
        for q in [1.0, 2.0] {
            let traj = synthetic(q);
            assert!(crossings_are_geometric(&traj.crossing_times()));
            let (t, err) = estimate_blowup_time(&traj).unwrap();
            assert!((t - 1.0).abs() < 1e-6, "q={q}: T = {t}");
            assert!(err < 1e-6);
        }
    }

    #[test]
    fn exact_crossings() {
        let times: Vec<f64> = (1..=30).map(|n| 1.0 - 2f64.powi(-n)).collect();
        let (t, err) = estimate_from_crossings(&times).unwrap();
        assert!((t - 1.0).abs() < 1e-12 && err < 1e-12);
    }

    #[test]
    fn needs_six_crossings() {
        assert!(matches!(
            estimate_from_crossings(&[0.5, 0.75, 0.875]),
            Err(Error::InsufficientCrossings { found: 3, needed: 6 })
        ));
    }

    #[test]
    fn square_root_crossings_are_not_geometric() {
        // x = exp(t²/4) crosses 2ⁿ at 2√(n ln 2).
        let times: Vec<f64> = (1..=40).map(|n| 2.0 * (n as f64 * std::f64::consts::LN_2).sqrt()).collect();
        assert!(!crossings_are_geometric(&times));
    }
}
