//! Forcing terms `h` and their running integrals `H(t) = ∫₀ᵗ h`.
//!
//! `h` may be negative; what the theory needs is `H ≥ 0`, so that is what
//! [`Forcing::validate`] checks.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nonlinearity::{Nonlinearity, RealMap};
use crate::quadrature;

/// Tolerance used when `RateScale` inverts `F_U`.
const INVERSION_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct CustomForcing {
    label: String,
    h: RealMap,
    cumulative: Option<RealMap>,
}

impl fmt::Debug for CustomForcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomForcing").field("label", &self.label).finish()
    }
}

#[derive(Debug, Clone)]
pub enum ForcingKind {
    Zero,
    /// `H(t) = t^α`.
    PowerGrowth { alpha: f64 },
    /// `H(t) = F_U⁻¹(K t) − 1`, so that `F_U(H(t) + 1) = K t` and
    /// `F_U(H(t))/t → K`.
    RateScale { k: f64, nonlinearity: Box<Nonlinearity> },
    Custom(CustomForcing),
}

#[derive(Debug, Clone)]
pub struct Forcing {
    kind: ForcingKind,
}

impl Default for Forcing {
    fn default() -> Self {
        Self::zero()
    }
}

impl Forcing {
    pub fn zero() -> Self {
        Self { kind: ForcingKind::Zero }
    }

    pub fn power_growth(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("power_growth needs alpha > 0, got {alpha}")));
        }
        Ok(Self { kind: ForcingKind::PowerGrowth { alpha } })
    }

    pub fn rate_scale(k: f64, nonlinearity: &Nonlinearity) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidConfig(format!("rate_scale needs K > 0, got {k}")));
        }
        Ok(Self { kind: ForcingKind::RateScale { k, nonlinearity: Box::new(nonlinearity.clone()) } })
    }

    /// User-supplied `h`; `H` is obtained by quadrature.
    pub fn custom(label: impl Into<String>, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { kind: ForcingKind::Custom(CustomForcing { label: label.into(), h: Arc::new(h), cumulative: None }) }
    }

    /// User-supplied `h` together with its running integral `H`.
    pub fn custom_with_integral(
        label: impl Into<String>,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cumulative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: ForcingKind::Custom(CustomForcing {
                label: label.into(),
                h: Arc::new(h),
                cumulative: Some(Arc::new(cumulative)),
            }),
        }
    }

    pub fn kind(&self) -> &ForcingKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ForcingKind::Zero)
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ForcingKind::Zero => "zero".to_string(),
            ForcingKind::PowerGrowth { alpha } => format!("power_growth:alpha={alpha}"),
            ForcingKind::RateScale { k, .. } => format!("rate_scale:K={k}"),
            ForcingKind::Custom(c) => format!("custom:{}", c.label),
        }
    }

    /// `h(t)`.
    pub fn h(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let v = match &self.kind {
            ForcingKind::Zero => 0.0,
            ForcingKind::PowerGrowth { alpha } => {
                if t == 0.0 {
                    if *alpha > 1.0 {
                        0.0
                    } else if *alpha == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    alpha * t.powf(alpha - 1.0)
                }
            }
            ForcingKind::RateScale { k, nonlinearity } => {
                // H' = K √F̄(H + 1) since F_U' = 1/√F̄.
                let s = nonlinearity.invert_fu_ln(k * t, INVERSION_TOL)?;
                k * (0.5 * nonlinearity.ln_fbar_at_ln(s)?).exp()
            }
            ForcingKind::Custom(c) => (c.h)(t),
        };
        if v.is_nan() {
            return Err(Error::Evaluation { at: t, reason: format!("forcing `{}` returned NaN", self.label()) });
        }
        Ok(v)
    }

    /// `H(t) = ∫₀ᵗ h`.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match &self.kind {
            ForcingKind::Zero => Ok(0.0),
            ForcingKind::PowerGrowth { alpha } => Ok(t.powf(*alpha)),
            ForcingKind::RateScale { k, nonlinearity } => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let s = nonlinearity.invert_fu_ln(k * t, INVERSION_TOL)?;
                let v = s.exp_m1();
                if !v.is_finite() {
                    return Err(Error::Overflow(format!("H({t}) = exp({s}) - 1")));
                }
                Ok(v)
            }
            ForcingKind::Custom(c) => match &c.cumulative {
                Some(cum) => Ok(cum(t)),
                None => {
                    let mut total = 0.0;
                    let mut a = 0.0;
                    while a < t {
                        let b = (a + 1.0).min(t);
                        total += quadrature::integrate(|s| (c.h)(s), a, b, 1e-300, 1e-13)?.value;
                        a = b;
                    }
                    Ok(total)
                }
            },
        }
    }

    /// `ln H(t)`, finite where `H` itself overflows; `−∞` where `H = 0`.
    pub fn ln_cumulative(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match &self.kind {
            ForcingKind::PowerGrowth { alpha } => Ok(alpha * t.ln()),
            ForcingKind::RateScale { k, nonlinearity } => {
                if t == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let s = nonlinearity.invert_fu_ln(k * t, INVERSION_TOL)?;
                Ok(crate::nonlinearity::ln_exp_m1(s))
            }
            _ => Ok(self.cumulative(t)?.ln()),
        }
    }

    /// Sampled checks on `[0, t_max]`: `H(0) = 0`, `H ≥ 0`, and `H' = h` by
    /// central differences.
    pub fn validate(&self, t_max: f64) -> Result<()> {
        let h0 = self.cumulative(0.0)?;
        if h0.abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("{}: H(0) = {h0}, expected 0", self.label())));
        }
        let n = 64;
        for i in 1..=n {
            let t = t_max * i as f64 / n as f64;
            let big_h = self.cumulative(t)?;
            if big_h < -1e-12 {
                return Err(Error::InvalidConfig(format!("{}: H({t}) = {big_h} is negative", self.label())));
            }
            let h = self.h(t)?;
            // Step small against both t and the e-folding time H/h.
            let efold = if big_h > 0.0 && h > 0.0 { big_h / h } else { f64::INFINITY };
            let d = 1e-4 * t.max(1e-2).min(efold);
            if t - d > 0.0 {
                let fd = (self.cumulative(t + d)? - self.cumulative(t - d)?) / (2.0 * d);
                if (fd - h).abs() > 1e-4 * h.abs().max(1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "{}: H' = {fd} but h = {h} at t = {t}",
                        self.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("forcing is defined for finite t >= 0, got {t}")))
    }
}
