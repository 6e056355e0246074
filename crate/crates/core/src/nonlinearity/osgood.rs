//! Numerical Osgood test.
//!
//! Whether `∫^∞ du/√F̄(u)` converges cannot be decided by finite computation.
//! The classifier integrates up to a geometric ladder of cutoffs and looks
//! at how the per-rung increments decay:
//!
//! * geometric decay with fitted ratio `r < 0.9` and a small extrapolated
//!   tail ⇒ [`OsgoodClass::Finite`];
//! * ratio `r ≥ 0.99`, growing increments, or increments better described
//!   by a non-summable power of `ln K` than by a geometric sequence ⇒
//!   [`OsgoodClass::Infinite`];
//! * anything else ⇒ [`OsgoodClass::Undecided`].

use super::Nonlinearity;
use crate::error::{Error, Result};
use crate::extrapolate::fitted_slope;
use crate::quadrature;

const FINITE_RATIO: f64 = 0.9;
const INFINITE_RATIO: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodClass {
    Finite,
    Infinite,
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsgoodVerdict {
    pub classification: OsgoodClass,
    /// `(K, I(K))` with `I(K)` the integral from the lower limit to `K`.
    pub partial_integral_at_cutoffs: Vec<(f64, f64)>,
    /// Geometric remainder beyond the last cutoff, when the increments are
    /// summable.
    pub extrapolated_tail: Option<f64>,
    /// Fitted per-rung ratio of the increments.
    pub fitted_ratio: f64,
    /// Fitted `p` in `increment ∝ (ln K)^{-p}`; `p ≤ 1` is non-summable.
    pub fitted_log_power: f64,
}

/// Geometric sequence of cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffLadder(Vec<f64>);

impl CutoffLadder {
    pub fn new(cutoffs: Vec<f64>) -> Result<Self> {
        if cutoffs.len() < 5 {
            return Err(Error::InvalidConfig("cutoff ladder needs at least 5 rungs".into()));
        }
        if cutoffs.iter().any(|&k| !(k > 1.0) || !k.is_finite()) {
            return Err(Error::InvalidConfig("cutoffs must be finite and > 1".into()));
        }
        let q = cutoffs[1] / cutoffs[0];
        if !(q > 1.0) {
            return Err(Error::InvalidConfig("cutoffs must increase".into()));
        }
        for w in cutoffs.windows(2) {
            if ((w[1] / w[0]) / q - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig("cutoff ladder must be geometric".into()));
            }
        }
        Ok(Self(cutoffs))
    }

    /// `10², 10³, …, 10¹²`.
    pub fn decades() -> Self {
        Self((2..=12).map(|k| 10f64.powi(k)).collect())
    }

    pub fn cutoffs(&self) -> &[f64] {
        &self.0
    }
}

impl Default for CutoffLadder {
    fn default() -> Self {
        Self::decades()
    }
}

/// Classify `head + ∫_{K₀}^{∞} g(ln u) du/u` given `head = ∫` up to the first
/// cutoff and `log_integrand(σ) = u·integrand(u)` at `u = e^σ`.
pub fn classify_ladder(
    head: f64,
    log_integrand: impl Fn(f64) -> f64,
    ladder: &CutoffLadder,
    tol: f64,
) -> Result<OsgoodVerdict> {
    let cutoffs = ladder.cutoffs();
    let quad_tol = (1e-3 * tol).max(1e-13);
    let mut partial = vec![(cutoffs[0], head)];
    let mut increments = Vec::with_capacity(cutoffs.len() - 1);
    let mut running = head;
    for w in cutoffs.windows(2) {
        let inc = quadrature::integrate(&log_integrand, w[0].ln(), w[1].ln(), 0.0, quad_tol)?.value;
        running += inc;
        increments.push(inc);
        partial.push((w[1], running));
    }

    let last = *increments.last().expect("ladder has at least two rungs");
    let tail_start = increments.len() / 2;
    let idx: Vec<f64> = (tail_start..increments.len()).map(|j| j as f64).collect();
    let positive = increments[tail_start..].iter().all(|&d| d > 0.0);

    if last == 0.0 || (positive && last <= 1e-6 * tol * running.abs()) {
        return Ok(OsgoodVerdict {
            classification: OsgoodClass::Finite,
            partial_integral_at_cutoffs: partial,
            extrapolated_tail: Some(0.0),
            fitted_ratio: 0.0,
            fitted_log_power: f64::INFINITY,
        });
    }
    if !positive {
        return Ok(OsgoodVerdict {
            classification: OsgoodClass::Undecided,
            partial_integral_at_cutoffs: partial,
            extrapolated_tail: None,
            fitted_ratio: f64::NAN,
            fitted_log_power: f64::NAN,
        });
    }

    let ln_inc: Vec<f64> = increments[tail_start..].iter().map(|d| d.ln()).collect();
    let (geo_slope, geo_resid) = line_fit(&idx, &ln_inc)?;
    let ratio = geo_slope.exp();
    let ln_ln_k: Vec<f64> = cutoffs[tail_start + 1..].iter().map(|k| k.ln().ln()).collect();
    let (pow_slope, pow_resid) = line_fit(&ln_ln_k, &ln_inc)?;
    let log_power = -pow_slope;
    // A power of ln K only counts when it describes the increments better
    // than a geometric sequence does; x^{1+ε} is geometric with ratio near 1.
    let log_power_fits = pow_resid < geo_resid;

    let (classification, tail) = if ratio < FINITE_RATIO {
        let tail = last * ratio / (1.0 - ratio);
        if tail <= tol * (running + tail).abs() {
            (OsgoodClass::Finite, Some(tail))
        } else {
            (OsgoodClass::Undecided, Some(tail))
        }
    } else if ratio >= INFINITE_RATIO || (log_power_fits && log_power <= 1.0) {
        (OsgoodClass::Infinite, None)
    } else {
        (OsgoodClass::Undecided, None)
    };
    Ok(OsgoodVerdict {
        classification,
        partial_integral_at_cutoffs: partial,
        extrapolated_tail: tail,
        fitted_ratio: ratio,
        fitted_log_power: log_power,
    })
}

/// Slope and residual sum of squares of the least-squares line.
fn line_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let slope = fitted_slope(xs, ys)?;
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let resid = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    Ok((slope, resid))
}

/// Classify `∫_η^∞ du/√F̄(u)` on the given ladder.
pub fn classify_osgood(nl: &Nonlinearity, eta: f64, ladder: &CutoffLadder, tol: f64) -> Result<OsgoodVerdict> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    let k0 = ladder.cutoffs()[0];
    if eta >= k0 {
        return Err(Error::Domain(format!("eta = {eta} must lie below the first cutoff {k0}")));
    }
    let quad_tol = (1e-3 * tol).max(1e-13);
    let head = quadrature::integrate(|v| nl.log_integrand(v), eta.ln(), k0.ln(), 0.0, quad_tol)?.value;
    classify_ladder(head, |v| nl.log_integrand(v), ladder, tol)
}

/// Classify `∫ dx/√(x f(x))` and `∫ dx/√F̄(x)` with the same ladder test and
/// report whether they agree (an undecided side agrees with anything).
pub fn check_osgood_equivalence(nl: &Nonlinearity, ladder: &CutoffLadder, tol: f64) -> Result<bool> {
    if !nl.is_increasing {
        return Err(Error::Domain(format!(
            "{}: the comparison of the two Osgood integrals assumes an increasing f",
            nl.label()
        )));
    }
    let eta = 1.0;
    let k0 = ladder.cutoffs()[0];
    let fbar_side = classify_osgood(nl, eta, ladder, tol)?;

    // u / √(u f(u)) = exp(σ/2 − ln f / 2)
    let xf = |v: f64| match nl.ln_eval_at_ln(v) {
        Ok(lf) => (0.5 * v - 0.5 * lf).exp(),
        Err(_) => f64::NAN,
    };
    let quad_tol = (1e-3 * tol).max(1e-13);
    let head = quadrature::integrate(xf, eta.ln(), k0.ln(), 0.0, quad_tol)?.value;
    let xf_side = classify_ladder(head, xf, ladder, tol)?;

    Ok(match (fbar_side.classification, xf_side.classification) {
        (OsgoodClass::Undecided, _) | (_, OsgoodClass::Undecided) => true,
        (a, b) => a == b,
    })
}
