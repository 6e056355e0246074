//! Sampled tests for superexponential growth and its preservation.
//!
//! `g` grows superexponentially when `g(x − ε)/g(x) → 0` for every `ε > 0`;
//! `f` preserves superexponential growth when `f(g(x − ε))/f(g(x)) → 0` for
//! every such `g`. Limits are not finitely checkable, so both tests ask that
//! the sampled ratio decreases along the tail of a ladder and ends below
//! [`SUPEREXP_THRESHOLD`]. Ratios are formed in log space.

use std::fmt;
use std::sync::Arc;

use super::{Nonlinearity, RealMap};
use crate::error::{Error, Result};

/// Ratio level a sampled sequence must end below.
pub const SUPEREXP_THRESHOLD: f64 = 1e-3;

/// A positive map sampled on a ladder, with an optional `ln g` evaluator used
/// in place of `g` (so `exp(x²)` can be sampled where it overflows).
#[derive(Clone)]
pub struct SampledMap {
    label: String,
    g: RealMap,
    ln_g: Option<RealMap>,
}

impl fmt::Debug for SampledMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledMap").field("label", &self.label).finish()
    }
}

impl SampledMap {
    pub fn new(label: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), g: Arc::new(g), ln_g: None }
    }

    pub fn with_ln(mut self, ln_g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.ln_g = Some(Arc::new(ln_g));
        self
    }

    /// `exp(x²)`, the default witness.
    pub fn exp_square() -> Self {
        Self::new("exp(x^2)", |x| (x * x).exp()).with_ln(|x| x * x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ln_at(&self, x: f64) -> f64 {
        match &self.ln_g {
            Some(l) => l(x),
            None => (self.g)(x).ln(),
        }
    }
}

/// `ln` of a ratio is nonincreasing across the tail half and finishes below
/// the threshold.
fn decays_below_threshold(log_ratios: &[f64]) -> bool {
    let Some(&last) = log_ratios.last() else { return false };
    if log_ratios.iter().any(|r| r.is_nan()) {
        return false;
    }
    let tail = &log_ratios[log_ratios.len() / 2..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    monotone && last < SUPEREXP_THRESHOLD.ln()
}

/// Sampled test of superexponential growth of `g`.
pub fn test_superexponential(g: &SampledMap, epsilons: &[f64], x_ladder: &[f64]) -> bool {
    if epsilons.is_empty() || x_ladder.len() < 2 {
        return false;
    }
    let first = g.ln_at(x_ladder[0]);
    let last = g.ln_at(x_ladder[x_ladder.len() - 1]);
    if !(last > first) {
        return false;
    }
    epsilons.iter().all(|&eps| {
        let ratios: Vec<f64> = x_ladder
            .iter()
            .filter(|&&x| x - eps > 0.0)
            .map(|&x| g.ln_at(x - eps) - g.ln_at(x))
            .collect();
        ratios.len() >= 2 && decays_below_threshold(&ratios)
    })
}

/// Which structural sufficient condition for preservation was detected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StructuralCondition {
    /// `f(x)/x` eventually increasing.
    RatioEventuallyIncreasing,
    /// `f` increasing and convex.
    IncreasingConvex,
    /// `f` regularly varying at infinity with the given positive index.
    RegularlyVarying { index: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledRatio {
    pub witness: String,
    pub epsilon: f64,
    pub x: f64,
    /// `ln f(g(x − ε)) − ln f(g(x))`.
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreservationReport {
    pub preserves: bool,
    /// Set when a structural condition settled the question.
    pub structural: Option<StructuralCondition>,
    /// Sampled ratios (empty when the structural shortcut applied).
    pub sampled: Vec<SampledRatio>,
}

fn structural_condition(nl: &Nonlinearity) -> Option<StructuralCondition> {
    // Quarter-decade ladder over 10^1..10^12; "eventually" means the upper
    // three quarters of it.
    let ladder: Vec<f64> = (4..=48).map(|j| 10f64.powf(j as f64 / 4.0)).collect();
    let tail = &ladder[ladder.len() / 4..];
    let ln_f: Vec<f64> = tail.iter().map(|&x| nl.ln_eval_at_ln(x.ln()).unwrap_or(f64::NAN)).collect();
    if ln_f.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let ratio_increasing = tail
        .iter()
        .zip(&ln_f)
        .map(|(x, lf)| lf - x.ln())
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] > w[0]);
    if ratio_increasing {
        return Some(StructuralCondition::RatioEventuallyIncreasing);
    }

    if nl.is_increasing {
        let vals: Vec<f64> = tail.iter().map(|&x| nl.eval(x).unwrap_or(f64::NAN)).collect();
        let slopes: Vec<f64> = tail
            .windows(2)
            .zip(vals.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let finite = slopes.iter().all(|s| s.is_finite());
        if finite && slopes.iter().all(|&s| s >= 0.0) && slopes.windows(2).all(|w| w[1] >= w[0]) {
            return Some(StructuralCondition::IncreasingConvex);
        }
    }

    // Regular variation: ln(f(λx)/f(x))/ln λ settles to the same positive index
    // for λ = 2 and λ = 3 along the top of the ladder.
    let index_at = |x: f64, lambda: f64| -> f64 {
        let a = nl.ln_eval_at_ln(x.ln() + lambda.ln()).unwrap_or(f64::NAN);
        let b = nl.ln_eval_at_ln(x.ln()).unwrap_or(f64::NAN);
        (a - b) / lambda.ln()
    };
    let top = &tail[tail.len() - 5..];
    let idx2: Vec<f64> = top.iter().map(|&x| index_at(x, 2.0)).collect();
    let idx3: Vec<f64> = top.iter().map(|&x| index_at(x, 3.0)).collect();
    let alpha = idx2[idx2.len() - 1];
    let settled = idx2.iter().chain(&idx3).all(|a| (a - alpha).abs() < 1e-2 * alpha.abs().max(1e-3));
    if alpha.is_finite() && alpha > 0.0 && settled {
        return Some(StructuralCondition::RegularlyVarying { index: alpha });
    }
    None
}

/// Sampled test of whether `nl` preserves superexponential growth.
///
/// Returns immediately when one of the structural sufficient conditions is
/// detected; otherwise samples `f(g(x − ε))/f(g(x))` for every witness and
/// epsilon.
pub fn test_preserves_superexponential(
    nl: &Nonlinearity,
    witnesses: &[SampledMap],
    epsilons: &[f64],
    x_ladder: &[f64],
) -> Result<PreservationReport> {
    if let Some(cond) = structural_condition(nl) {
        return Ok(PreservationReport { preserves: true, structural: Some(cond), sampled: Vec::new() });
    }
    for w in witnesses {
        if !test_superexponential(w, epsilons, x_ladder) {
            return Err(Error::Domain(format!("witness `{}` does not grow superexponentially", w.label())));
        }
    }
    let mut sampled = Vec::new();
    let mut preserves = !witnesses.is_empty();
    for w in witnesses {
        for &eps in epsilons {
            let mut seq = Vec::new();
            for &x in x_ladder.iter().filter(|&&x| x - eps > 0.0) {
                let lo = nl.ln_eval_at_ln(w.ln_at(x - eps))?;
                let hi = nl.ln_eval_at_ln(w.ln_at(x))?;
                let r = lo - hi;
                seq.push(r);
                sampled.push(SampledRatio { witness: w.label().to_string(), epsilon: eps, x, log_ratio: r });
            }
            preserves &= decays_below_threshold(&seq);
        }
    }
    Ok(PreservationReport { preserves, structural: None, sampled })
}
