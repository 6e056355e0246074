//! Rate diagnostics: banded estimates of
//!
//! * `F_B(x(t)) / (T − t)` as `t → T⁻` for exploding solutions,
//! * `F_U(x(t)) / t` as `t → ∞` for global ones,
//! * `limsup F_U(H(t)) / t` for a forcing term,
//!
//! each compared with `√(2w(0))`.

use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::extrapolate::{aitken, least_squares};
use crate::forcing::Forcing;
use crate::nonlinearity::Nonlinearity;
use crate::solver::{Status, Trajectory};

pub use crate::extrapolate::aitken as aitken_extrapolate;

/// Tolerance for the `F_B` and `F_U` evaluations made by the diagnostics.
const FUNCTIONAL_TOL: f64 = 1e-10;
/// Crossings whose distance to `T` is below this multiple of `T_err` are
/// dominated by the uncertainty in `T`.
const T_ERR_MARGIN: f64 = 1e5;
/// Samples used for the blow-up extrapolation.
const BLOWUP_TAIL: usize = 10;
/// Relative jitter tolerated before samples count as non-monotone.
const MONOTONE_NOISE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    BlowUpRate,
    GrowthRate,
    PerturbationRate,
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Functional::BlowUpRate => "BlowUpRate",
            Functional::GrowthRate => "GrowthRate",
            Functional::PerturbationRate => "PerturbationRate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "CONSISTENT",
            Verdict::Inconsistent => "INCONSISTENT",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Acceptance bands for the verdicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bands {
    /// Relative band around a positive target.
    pub rel_band: f64,
    /// Absolute ceiling for the final sample when the target is 0.
    pub zero_band: f64,
}

impl Default for Bands {
    fn default() -> Self {
        Self { rel_band: 0.05, zero_band: 0.2 * std::f64::consts::SQRT_2 }
    }
}

impl Bands {
    pub fn with_rel_band(rel_band: f64) -> Self {
        Self { rel_band, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateDiagnostic {
    pub functional: Functional,
    pub samples: Vec<(f64, f64)>,
    pub extrapolated_limit: f64,
    pub limit_err: f64,
    pub target: f64,
    pub verdict: Verdict,
    /// Why the verdict is not Consistent, when there is a specific reason.
    pub note: Option<String>,
}

impl RateDiagnostic {
    /// `t,value` rows followed by a summary comment.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in &self.samples {
            let _ = writeln!(out, "{t:.17e},{v:.17e}");
        }
        let _ = writeln!(out, "# {}", self.summary());
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "functional={} limit={} err={} target={} verdict={}",
            self.functional, self.extrapolated_limit, self.limit_err, self.target, self.verdict
        )
    }
}

impl fmt::Display for RateDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} limit≈{:.3} target={:.3} {}",
            self.functional, self.extrapolated_limit, self.target, self.verdict
        )?;
        if let Some(note) = &self.note {
            write!(f, " ({note})")?;
        }
        Ok(())
    }
}

/// Verdict for an estimate `limit ± err` of a positive target.
pub fn banded_verdict(limit: f64, err: f64, target: f64, rel_band: f64) -> Verdict {
    if !(limit.is_finite() && err.is_finite()) {
        return Verdict::Inconclusive;
    }
    let band = rel_band * target;
    let dev = (limit - target).abs();
    if dev <= band && err <= band {
        Verdict::Consistent
    } else if dev > band + err {
        Verdict::Inconsistent
    } else {
        Verdict::Inconclusive
    }
}

fn rate_target(w0: f64) -> Result<f64> {
    if !(w0 >= 0.0 && w0.is_finite()) {
        return Err(Error::Domain(format!("w(0) must be finite and >= 0, got {w0}")));
    }
    Ok((2.0 * w0).sqrt())
}

/// `F_B(x(tₙ)) / (T − tₙ)` on the recorded crossings `x(tₙ) = x₀ Rⁿ`,
/// accelerated by Aitken's process.
///
/// The error combines the acceleration error with the sensitivity
/// `r · T_err / (T − t)` of the last sample used.
pub fn blowup_rate_diagnostic(traj: &Trajectory, nl: &Nonlinearity, w0: f64, bands: Bands) -> Result<RateDiagnostic> {
    let Status::BlowUpDetected { t_est, t_err } = traj.status else {
        return Err(Error::Domain(format!("blow-up diagnostic needs an exploding run, got {:?}", traj.status)));
    };
    if !(w0 > 0.0) {
        return Err(Error::Domain(format!("blow-up diagnostic needs w(0) > 0, got {w0}")));
    }
    let target = rate_target(w0)?;
    let usable: Vec<_> = traj.crossings.iter().filter(|c| t_est - c.time > T_ERR_MARGIN * t_err).collect();
    let samples = usable
        .iter()
        .map(|c| Ok((c.time, nl.fb_at_ln(c.level.ln(), FUNCTIONAL_TOL)? / (t_est - c.time))))
        .collect::<Result<Vec<_>>>()?;
    let Some(&(t_last, r_last)) = samples.last() else {
        return Ok(inconclusive(Functional::BlowUpRate, samples, target, "no crossing is resolved against T_err"));
    };
    let sensitivity = r_last * t_err / (t_est - t_last);
    if t_err / (t_est - t_last) > 0.1 {
        return Ok(inconclusive(Functional::BlowUpRate, samples, target, "T_err is large against T - t"));
    }
    let tail: Vec<f64> = samples[samples.len().saturating_sub(BLOWUP_TAIL)..].iter().map(|s| s.1).collect();
    let (limit, acc_err) = match accelerate(&tail) {
        Some(v) => v,
        None => return Ok(inconclusive(Functional::BlowUpRate, samples, target, "too few or divergent samples")),
    };
    let limit_err = acc_err + sensitivity;
    Ok(RateDiagnostic {
        functional: Functional::BlowUpRate,
        samples,
        extrapolated_limit: limit,
        limit_err,
        target,
        verdict: banded_verdict(limit, limit_err, target, bands.rel_band),
        note: None,
    })
}

/// Aitken limit of the tail, or the tail's midrange when the samples sit at
/// their noise floor and acceleration has nothing better to offer.
fn accelerate(tail: &[f64]) -> Option<(f64, f64)> {
    if tail.is_empty() {
        return None;
    }
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let plateau = (0.5 * (lo + hi), 0.5 * (hi - lo));
    if tail.len() < 3 {
        return Some(plateau);
    }
    match aitken(tail) {
        Ok((limit, err)) if err <= plateau.1 => Some((limit, err)),
        _ if tail.len() >= 5 => Some(plateau),
        _ => None,
    }
}

fn inconclusive(functional: Functional, samples: Vec<(f64, f64)>, target: f64, why: &str) -> RateDiagnostic {
    let last = samples.last().map_or(f64::NAN, |s| s.1);
    RateDiagnostic {
        functional,
        samples,
        extrapolated_limit: last,
        limit_err: f64::INFINITY,
        target,
        verdict: Verdict::Inconclusive,
        note: Some(why.into()),
    }
}

/// Times `t_end · 2^{−k/4}` for `k = k_max, …, 0`.
fn quarter_octaves(t_end: f64, k_max: usize) -> Vec<f64> {
    (0..=k_max).rev().map(|k| t_end * 2f64.powf(-(k as f64) / 4.0)).collect()
}

fn growth_samples(traj: &Trajectory, nl: &Nonlinearity, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    times
        .iter()
        .map(|&t| {
            let x = traj
                .value_at(t)
                .ok_or_else(|| Error::Domain(format!("t = {t} lies outside the trajectory")))?;
            Ok((t, nl.fu(x, FUNCTIONAL_TOL)? / t))
        })
        .collect()
}

fn monotone(samples: &[(f64, f64)], increasing: bool) -> bool {
    samples.windows(2).all(|w| {
        let slack = MONOTONE_NOISE * w[0].1.abs().max(1.0);
        if increasing {
            w[1].1 >= w[0].1 - slack
        } else {
            w[1].1 <= w[0].1 + slack
        }
    })
}

/// Fit `a + b ln t / t + c / t` and return `a`.
fn growth_fit(samples: &[(f64, f64)]) -> Result<f64> {
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let vs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let one = |_: f64| 1.0;
    let log_over = |t: f64| t.ln() / t;
    let inv = |t: f64| 1.0 / t;
    Ok(least_squares(&ts, &vs, &[&one, &log_over, &inv])?[0])
}

/// `F_U(x(t)) / t` at quarter-octave times over the last two octaves of the
/// run.
///
/// For `w(0) > 0` the limit is the constant term of a least-squares fit of
/// `a + b ln t / t + c / t` over `[t_end/4, t_end]`; its error is the change
/// in `a` when the fit window is widened to `[t_end/16, t_end]`. For
/// `w(0) = 0` the samples over the last decade must decrease and end at or
/// below `bands.zero_band`.
pub fn growth_rate_diagnostic(traj: &Trajectory, nl: &Nonlinearity, w0: f64, bands: Bands) -> Result<RateDiagnostic> {
    let Status::ReachedHorizon { t_end } = traj.status else {
        return Err(Error::Domain(format!("growth diagnostic needs a run that reached its horizon, got {:?}", traj.status)));
    };
    if !(t_end > 0.0) {
        return Err(Error::Domain("growth diagnostic needs t_end > 0".into()));
    }
    let target = rate_target(w0)?;
    if target == 0.0 {
        let k_max = (4.0 * 10f64.log2()).floor() as usize;
        let samples = growth_samples(traj, nl, &quarter_octaves(t_end, k_max))?;
        let last = samples[samples.len() - 1].1;
        let decreasing = monotone(&samples, false);
        let (verdict, note) = match (decreasing, last <= bands.zero_band) {
            (true, true) => (Verdict::Consistent, None),
            (true, false) => (Verdict::Inconclusive, Some("decreasing but above the zero band".to_string())),
            (false, _) => (Verdict::Inconsistent, Some("not decreasing over the last decade".to_string())),
        };
        return Ok(RateDiagnostic {
            functional: Functional::GrowthRate,
            samples,
            extrapolated_limit: last,
            limit_err: 0.0,
            target,
            verdict,
            note,
        });
    }
    let samples = growth_samples(traj, nl, &quarter_octaves(t_end, 16))?;
    let near = &samples[8..];
    let a_near = growth_fit(near)?;
    let a_wide = growth_fit(&samples)?;
    let limit_err = (a_near - a_wide).abs();
    let (mut verdict, mut note) = (banded_verdict(a_near, limit_err, target, bands.rel_band), None);
    if !(monotone(near, true) || monotone(near, false)) {
        verdict = Verdict::Inconclusive;
        note = Some("samples are not monotone".to_string());
    }
    Ok(RateDiagnostic {
        functional: Functional::GrowthRate,
        samples: samples[8..].to_vec(),
        extrapolated_limit: a_near,
        limit_err,
        target,
        verdict,
        note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationClass {
    /// `limsup F_U(H(t))/t ≤ √(2w(0))`: the forcing keeps the growth rate.
    Preserving,
    NonPreserving,
    Inconclusive,
}

impl fmt::Display for PerturbationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationClass::Preserving => "PRESERVING",
            PerturbationClass::NonPreserving => "NON-PRESERVING",
            PerturbationClass::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub class: PerturbationClass,
    pub diagnostic: RateDiagnostic,
}

/// `2^k` for `k = 1..=10`.
pub fn default_ladder() -> Vec<f64> {
    (1..=10).map(|k| 2f64.powi(k)).collect()
}

/// `F_U(H(t))/t` on `t_ladder`, reduced to tail suprema
/// `s_k = max_{j ≥ k} v_j` whose limit stands for the limsup.
///
/// Preserving when the extrapolated limit is at most `√(2w0)(1 + band)`,
/// non-preserving when it is at least `√(2w0)(1 + 3 band)`.
pub fn perturbation_criterion(
    forcing: &Forcing,
    nl: &Nonlinearity,
    w0: f64,
    t_ladder: &[f64],
    bands: Bands,
) -> Result<PerturbationReport> {
    let target = rate_target(w0)?;
    let mut ladder = t_ladder.to_vec();
    ladder.retain(|t| *t > 0.0);
    ladder.sort_by(f64::total_cmp);
    ladder.dedup();
    let mut samples = Vec::with_capacity(ladder.len());
    for &t in &ladder {
        let ln_h = forcing.ln_cumulative(t)?;
        if ln_h == f64::NEG_INFINITY {
            samples.push((t, f64::NEG_INFINITY));
            continue;
        }
        let fu = if ln_h.exp() > 0.0 { nl.fu_at_ln(ln_h, FUNCTIONAL_TOL)? } else { f64::NEG_INFINITY };
        samples.push((t, fu / t));
    }
    let mut sups: Vec<f64> = samples.iter().map(|s| s.1).collect();
    for k in (0..sups.len().saturating_sub(1)).rev() {
        sups[k] = sups[k].max(sups[k + 1]);
    }
    let finite: Vec<f64> = sups.iter().copied().filter(|v| v.is_finite()).collect();
    let (limit, err) = if finite.is_empty() {
        // H vanishes on the whole ladder.
        (0.0, 0.0)
    } else {
        let last = finite[finite.len() - 1];
        match accelerate(&finite[finite.len().saturating_sub(BLOWUP_TAIL)..]) {
            // The tail suprema never increase; an acceleration above the
            // last one is noise.
            Some((l, e)) if l <= last => (l.max(0.0), e),
            _ => (last, 0.0),
        }
    };
    let band = bands.rel_band;
    let class = if limit <= target * (1.0 + band) {
        PerturbationClass::Preserving
    } else if limit >= target * (1.0 + 3.0 * band) {
        PerturbationClass::NonPreserving
    } else {
        PerturbationClass::Inconclusive
    };
    let verdict = match class {
        PerturbationClass::Preserving => Verdict::Consistent,
        PerturbationClass::NonPreserving => Verdict::Inconsistent,
        PerturbationClass::Inconclusive => Verdict::Inconclusive,
    };
    Ok(PerturbationReport {
        class,
        diagnostic: RateDiagnostic {
            functional: Functional::PerturbationRate,
            samples: samples.into_iter().filter(|s| s.1.is_finite()).collect(),
            extrapolated_limit: limit,
            limit_err: err,
            target,
            verdict,
            note: None,
        },
    })
}
