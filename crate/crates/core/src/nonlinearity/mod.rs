//! Superlinear nonlinearities `f` and the functionals built from them.
//!
//! Every nonlinearity carries three derived integrals:
//!
//! * `F̄(x) = ∫₀ˣ f(s) ds`,
//! * `F_B(x) = ∫ₓ^∞ du / √F̄(u)` (exists only when the Osgood integral converges),
//! * `F_U(x) = ∫₁ˣ du / √F̄(u)`, extended to `(0, 1)` with negative values.
//!
//! Solutions of the unforced equation that explode satisfy
//! `F_B(x(t)) / (T − t) → √(2w(0))`; global solutions satisfy
//! `F_U(x(t)) / t → √(2w(0))`.
//!
//! The integrals are evaluated in the logarithmic variable `σ = ln u`, where
//! the catalog members have closed forms for `ln F̄`. This keeps `F_U` and its
//! inverse usable far beyond the range of `f64` for `x` itself.

mod functionals;
mod osgood;
mod superexp;
mod table;

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature;

pub use osgood::{
    check_osgood_equivalence, classify_osgood, classify_ladder, CutoffLadder, OsgoodClass,
    OsgoodVerdict,
};
pub use superexp::{
    test_preserves_superexponential, test_superexponential, PreservationReport, SampledMap,
    SampledRatio, StructuralCondition, SUPEREXP_THRESHOLD,
};
pub use table::FunctionalTable;

/// Shared real map, used for user-supplied nonlinearities, kernels and forcings.
pub type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied nonlinearity.
#[derive(Clone)]
pub struct CustomFn {
    label: String,
    f: RealMap,
    ln_f: Option<RealMap>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("CustomFn")
            .field("label", &self.label)
            .field("has_ln_eval", &self.ln_f.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum NonlinearityKind {
    /// `f(x) = (1 + x)^β`.
    PowerPlusOne { beta: f64 },
    /// `f(x) = (x + e) ln(x + e)`.
    LogLinear,
    /// `f(x) = x^p`.
    PurePower { p: f64 },
    Custom(CustomFn),
}

/// A nonlinearity together with the structural claims made about it.
///
/// The claims are checked by sampling in [`Nonlinearity::validate`]; they are
/// falsification tests, not proofs.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    /// Claimed monotonicity on `[increasing_from, ∞)`.
    pub is_increasing: bool,
    /// Claimed `f(x)/x → ∞`.
    pub is_superlinear: bool,
    /// Start of the range on which `is_increasing` is claimed.
    pub increasing_from: f64,
}

/// Relative accuracy of the numerical `F̄` used for custom nonlinearities.
const FBAR_QUAD_TOL: f64 = 1e-13;

impl Nonlinearity {
    fn new(kind: NonlinearityKind, is_increasing: bool, is_superlinear: bool) -> Self {
        Self { kind, is_increasing, is_superlinear, increasing_from: 0.0 }
    }

    pub fn power_plus_one(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("power_plus_one needs beta > 0, got {beta}")));
        }
        Ok(Self::new(NonlinearityKind::PowerPlusOne { beta }, true, beta > 1.0))
    }

    pub fn log_linear() -> Self {
        Self::new(NonlinearityKind::LogLinear, true, true)
    }

    pub fn pure_power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidConfig(format!("pure_power needs p > 0, got {p}")));
        }
        Ok(Self::new(NonlinearityKind::PurePower { p }, true, p > 1.0))
    }

    /// A user-supplied nonlinearity; claims default to increasing and
    /// superlinear and can be changed with [`Nonlinearity::with_claims`].
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(
            NonlinearityKind::Custom(CustomFn { label: label.into(), f: Arc::new(f), ln_f: None }),
            true,
            true,
        )
    }

    /// Attach `s ↦ ln f(e^s)`, used where `f(e^s)` itself would overflow.
    pub fn with_ln_eval(mut self, ln_f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        if let NonlinearityKind::Custom(c) = &mut self.kind {
            c.ln_f = Some(Arc::new(ln_f));
        }
        self
    }

    pub fn with_claims(mut self, is_increasing: bool, is_superlinear: bool) -> Self {
        self.is_increasing = is_increasing;
        self.is_superlinear = is_superlinear;
        self
    }

    pub fn increasing_from(mut self, x: f64) -> Self {
        self.increasing_from = x;
        self
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    /// Short human-readable name, e.g. `power_plus_one:beta=2`.
    pub fn label(&self) -> String {
        match &self.kind {
            NonlinearityKind::PowerPlusOne { beta } => format!("power_plus_one:beta={beta}"),
            NonlinearityKind::LogLinear => "log_linear".to_string(),
            NonlinearityKind::PurePower { p } => format!("pure_power:p={p}"),
            NonlinearityKind::Custom(c) => format!("custom:{}", c.label),
        }
    }

    /// `f(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!("f is defined for x >= 0, got {x}")));
        }
        let y = match &self.kind {
            NonlinearityKind::PowerPlusOne { beta } => (1.0 + x).powf(*beta),
            NonlinearityKind::LogLinear => (x + E) * (x + E).ln(),
            NonlinearityKind::PurePower { p } => x.powf(*p),
            NonlinearityKind::Custom(c) => {
                let y = (c.f)(x);
                if !y.is_finite() || (x > 0.0 && y <= 0.0) {
                    return Err(Error::Evaluation {
                        at: x,
                        reason: format!("custom nonlinearity `{}` returned {y}", c.label),
                    });
                }
                y
            }
        };
        Ok(y)
    }

    /// `f` evaluated without error plumbing; NaN marks a failure. Used on hot
    /// paths where the caller checks finiteness.
    pub(crate) fn eval_raw(&self, x: f64) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }

    /// `ln f(e^s)`, finite even where `f(e^s)` overflows (catalog kinds, or a
    /// custom kind with a log-evaluator).
    pub fn ln_eval_at_ln(&self, s: f64) -> Result<f64> {
        let v = match &self.kind {
            NonlinearityKind::PowerPlusOne { beta } => beta * ln_one_plus_exp(s),
            NonlinearityKind::LogLinear => {
                let lx = ln_exp_plus_e(s);
                lx + lx.ln()
            }
            NonlinearityKind::PurePower { p } => p * s,
            NonlinearityKind::Custom(c) => {
                let x = s.exp();
                match &c.ln_f {
                    Some(ln_f) if !x.is_finite() || x > 1e300 => ln_f(s),
                    _ => {
                        if !x.is_finite() {
                            return Err(Error::Overflow(format!(
                                "custom nonlinearity `{}` has no log-evaluator for ln x = {s}",
                                c.label
                            )));
                        }
                        self.eval(x)?.ln()
                    }
                }
            }
        };
        if v.is_nan() {
            return Err(Error::Evaluation { at: s.exp(), reason: "ln f is NaN".into() });
        }
        Ok(v)
    }

    /// `F̄(x) = ∫₀ˣ f(s) ds`; closed form for the catalog, adaptive quadrature
    /// for custom kinds.
    pub fn fbar(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!("F̄ is defined for x >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            NonlinearityKind::PowerPlusOne { beta } => {
                Ok(((beta + 1.0) * x.ln_1p()).exp_m1() / (beta + 1.0))
            }
            NonlinearityKind::LogLinear => {
                if x < 0.1 {
                    return self.fbar_by_quadrature(x);
                }
                let xe = x + E;
                Ok((xe * xe * (2.0 * xe.ln() - 1.0) - E * E) / 4.0)
            }
            NonlinearityKind::PurePower { p } => Ok(x.powf(p + 1.0) / (p + 1.0)),
            NonlinearityKind::Custom(_) => self.fbar_by_quadrature(x),
        }
    }

    /// `F̄(x)` by adaptive quadrature of `f` over dyadic panels of `[0, x]`,
    /// regardless of kind.
    pub fn fbar_by_quadrature(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!("F̄ is defined for x >= 0, got {x}")));
        }
        if !x.is_finite() {
            return Err(Error::Overflow(format!("F̄ at {x}")));
        }
        let mut total = 0.0;
        let mut a = 0.0;
        let mut b = x.min(1.0);
        loop {
            let piece = quadrature::integrate(|s| self.eval_raw(s), a, b, 0.0, FBAR_QUAD_TOL)?;
            total += piece.value;
            if b >= x {
                break;
            }
            a = b;
            b = (2.0 * b).min(x);
        }
        Ok(total)
    }

    /// `ln F̄(e^s)`.
    pub fn ln_fbar_at_ln(&self, s: f64) -> Result<f64> {
        match &self.kind {
            NonlinearityKind::PowerPlusOne { beta } => {
                let y = (beta + 1.0) * ln_one_plus_exp(s);
                Ok(ln_exp_m1(y) - (beta + 1.0).ln())
            }
            NonlinearityKind::LogLinear => {
                if s < 0.0 {
                    return Ok(self.fbar(s.exp())?.ln());
                }
                let lx = ln_exp_plus_e(s);
                let core = 2.0 * lx - 1.0 - (2.0 - 2.0 * lx).exp();
                Ok(2.0 * lx + core.ln() - 4f64.ln())
            }
            NonlinearityKind::PurePower { p } => Ok((p + 1.0) * s - (p + 1.0).ln()),
            NonlinearityKind::Custom(c) => {
                let x = s.exp();
                if !x.is_finite() {
                    return Err(Error::Overflow(format!(
                        "F̄ of custom nonlinearity `{}` at ln x = {s}",
                        c.label
                    )));
                }
                let v = self.fbar(x)?;
                if !v.is_finite() {
                    return Err(Error::Overflow(format!("F̄({x}) overflows")));
                }
                Ok(v.ln())
            }
        }
    }

    /// Falsification checks of the claimed properties on sample ladders:
    /// positivity, monotonicity from `increasing_from`, and unbounded `f(x)/x`
    /// along `x = 10^k, k = 1..12`.
    pub fn validate(&self) -> Result<()> {
        let ladder: Vec<f64> = (-16..=48).map(|j| 10f64.powf(j as f64 / 4.0)).collect();
        let mut prev: Option<(f64, f64)> = None;
        for &x in &ladder {
            let y = self.eval(x)?;
            if y <= 0.0 {
                return Err(Error::InvalidConfig(format!("{}: f({x}) = {y} is not positive", self.label())));
            }
            if self.is_increasing && x >= self.increasing_from {
                if let Some((px, py)) = prev {
                    if px >= self.increasing_from && y < py {
                        return Err(Error::InvalidConfig(format!(
                            "{}: claimed increasing but f({x}) < f({px})",
                            self.label()
                        )));
                    }
                }
            }
            prev = Some((x, y));
        }
        if self.is_superlinear {
            let ratios: Vec<f64> = (1..=12)
                .map(|k| {
                    let x = 10f64.powi(k);
                    self.eval(x).map(|y| y / x)
                })
                .collect::<Result<_>>()?;
            // Falsified when the ratio at the top of the ladder is not its
            // largest value, or has barely moved since the bottom.
            let top = ratios[11];
            if !(ratios[..11].iter().all(|&r| r < top) && top > 1.1 * ratios[0]) {
                return Err(Error::InvalidConfig(format!(
                    "{}: claimed superlinear but f(x)/x does not grow along 10^1..10^12 (last {top:.3e})",
                    self.label()
                )));
            }
        }
        Ok(())
    }
}

/// `ln(1 + e^s)` without overflow.
pub(crate) fn ln_one_plus_exp(s: f64) -> f64 {
    if s > 35.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// `ln(e^s + e)` without overflow.
pub(crate) fn ln_exp_plus_e(s: f64) -> f64 {
    if s > 1.0 {
        s + (1.0 - s).exp().ln_1p()
    } else {
        1.0 + (s - 1.0).exp().ln_1p()
    }
}

/// `ln(e^y − 1)` for `y > 0`, without overflow.
pub(crate) fn ln_exp_m1(y: f64) -> f64 {
    if y > 35.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}
