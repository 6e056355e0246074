//! Memory kernels `w`.
//!
//! The theorems key on two numbers: `w(0)`, which fixes the rate constant
//! `√(2w(0))`, and `‖w‖_{L¹}`, which must be finite for the growth-rate
//! theorem. Both are exposed directly.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::{gamma, gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::nonlinearity::{classify_ladder, CutoffLadder, OsgoodClass, RealMap};
use crate::quadrature;

#[derive(Clone)]
pub struct CustomKernel {
    label: String,
    w: RealMap,
    support: Option<f64>,
    sup_bound: Option<f64>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum KernelKind {
    /// `ω (1 + t)^{−α}`.
    PowerDecay { omega: f64, alpha: f64 },
    /// `ω exp(−t^γ)`.
    StretchedExp { omega: f64, gamma: f64 },
    /// `ω / Γ(t + 1)`.
    InverseGamma { omega: f64 },
    /// `ω t e^{−t}`, the member with `w(0) = 0`.
    TimesExpDecay { omega: f64 },
    Custom(CustomKernel),
}

/// `‖w‖_{L¹}`; [`L1Norm::Unknown`] when the tail test cannot decide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum L1Norm {
    Finite(f64),
    Infinite,
    Unknown,
}

impl L1Norm {
    pub fn is_finite(&self) -> bool {
        matches!(self, L1Norm::Finite(_))
    }
}

#[derive(Debug, Clone)]
pub struct Kernel {
    kind: KernelKind,
}

impl Kernel {
    pub fn power_decay(omega: f64, alpha: f64) -> Result<Self> {
        positive("omega", omega)?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("power_decay needs alpha >= 0, got {alpha}")));
        }
        Ok(Self { kind: KernelKind::PowerDecay { omega, alpha } })
    }

    /// `w ≡ ω`.
    pub fn constant(omega: f64) -> Result<Self> {
        Self::power_decay(omega, 0.0)
    }

    pub fn stretched_exp(omega: f64, gamma: f64) -> Result<Self> {
        positive("omega", omega)?;
        positive("gamma", gamma)?;
        Ok(Self { kind: KernelKind::StretchedExp { omega, gamma } })
    }

    pub fn inverse_gamma(omega: f64) -> Result<Self> {
        positive("omega", omega)?;
        Ok(Self { kind: KernelKind::InverseGamma { omega } })
    }

    pub fn times_exp_decay(omega: f64) -> Result<Self> {
        positive("omega", omega)?;
        Ok(Self { kind: KernelKind::TimesExpDecay { omega } })
    }

    /// A user-supplied kernel.
    pub fn custom(label: impl Into<String>, w: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: KernelKind::Custom(CustomKernel {
                label: label.into(),
                w: Arc::new(w),
                support: None,
                sup_bound: None,
            }),
        }
    }

    /// Declare `w(t) = 0` for `t > support` (custom kernels only). The solver
    /// then only integrates over the last `support` units of history.
    pub fn with_support(mut self, support: f64) -> Self {
        if let KernelKind::Custom(c) = &mut self.kind {
            c.support = Some(support);
        }
        self
    }

    /// Declare `sup w ≤ bound` (custom kernels only), which allows the solver
    /// to truncate negligible history.
    pub fn with_sup_bound(mut self, bound: f64) -> Self {
        if let KernelKind::Custom(c) = &mut self.kind {
            c.sup_bound = Some(bound);
        }
        self
    }

    /// `λ w`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        positive("scale", lambda)?;
        let kind = match &self.kind {
            KernelKind::PowerDecay { omega, alpha } => KernelKind::PowerDecay { omega: lambda * omega, alpha: *alpha },
            KernelKind::StretchedExp { omega, gamma } => {
                KernelKind::StretchedExp { omega: lambda * omega, gamma: *gamma }
            }
            KernelKind::InverseGamma { omega } => KernelKind::InverseGamma { omega: lambda * omega },
            KernelKind::TimesExpDecay { omega } => KernelKind::TimesExpDecay { omega: lambda * omega },
            KernelKind::Custom(c) => {
                let w = c.w.clone();
                KernelKind::Custom(CustomKernel {
                    label: format!("{lambda}*{}", c.label),
                    w: Arc::new(move |t| lambda * w(t)),
                    support: c.support,
                    sup_bound: c.sup_bound.map(|b| lambda * b),
                })
            }
        };
        Ok(Self { kind })
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn label(&self) -> String {
        match &self.kind {
            KernelKind::PowerDecay { omega, alpha } => format!("power_decay:omega={omega},alpha={alpha}"),
            KernelKind::StretchedExp { omega, gamma } => format!("stretched_exp:omega={omega},gamma={gamma}"),
            KernelKind::InverseGamma { omega } => format!("inverse_gamma:omega={omega}"),
            KernelKind::TimesExpDecay { omega } => {
                if *omega == 1.0 {
                    "t_exp_decay".to_string()
                } else {
                    format!("t_exp_decay:omega={omega}")
                }
            }
            KernelKind::Custom(c) => format!("custom:{}", c.label),
        }
    }

    /// `w(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("w is defined for t >= 0, got {t}")));
        }
        let v = self.eval_unchecked(t);
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Evaluation { at: t, reason: format!("kernel `{}` returned {v}", self.label()) });
        }
        Ok(v)
    }

    /// `w(t)` for `t ≥ 0` with no checks.
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            KernelKind::PowerDecay { omega, alpha } => {
                if *alpha == 0.0 {
                    *omega
                } else {
                    omega * (-alpha * t.ln_1p()).exp()
                }
            }
            KernelKind::StretchedExp { omega, gamma } => omega * (-t.powf(*gamma)).exp(),
            KernelKind::InverseGamma { omega } => {
                if t < 170.0 {
                    omega / gamma(t + 1.0)
                } else {
                    omega * (-ln_gamma(t + 1.0)).exp()
                }
            }
            KernelKind::TimesExpDecay { omega } => omega * t * (-t).exp(),
            KernelKind::Custom(c) => match c.support {
                Some(s) if t > s => 0.0,
                _ => (c.w)(t),
            },
        }
    }

    /// `w(0)`.
    pub fn value_at_zero(&self) -> f64 {
        self.eval_unchecked(0.0)
    }

    /// Length of the support when it is declared compact.
    pub fn support(&self) -> Option<f64> {
        match &self.kind {
            KernelKind::Custom(c) => c.support,
            _ => None,
        }
    }

    /// An upper bound for `w` on `[0, ∞)`, when known.
    pub fn sup_bound(&self) -> Option<f64> {
        match &self.kind {
            KernelKind::PowerDecay { omega, .. }
            | KernelKind::StretchedExp { omega, .. }
            | KernelKind::InverseGamma { omega } => Some(*omega),
            KernelKind::TimesExpDecay { omega } => Some(omega * (-1f64).exp()),
            KernelKind::Custom(c) => c.sup_bound,
        }
    }

    /// `W(t) = ∫₀ᵗ w`; closed form where one exists.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("W is defined for t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            KernelKind::PowerDecay { omega, alpha } => Ok(if (*alpha - 1.0).abs() < 1e-12 {
                omega * t.ln_1p()
            } else {
                omega * ((1.0 - alpha) * t.ln_1p()).exp_m1() / (1.0 - alpha)
            }),
            KernelKind::StretchedExp { omega, gamma: g } => {
                if *g == 1.0 {
                    Ok(-omega * (-t).exp_m1())
                } else {
                    Ok(omega * gamma(1.0 + 1.0 / g) * gamma_lr(1.0 / g, t.powf(*g)))
                }
            }
            KernelKind::TimesExpDecay { omega } => Ok(omega * (-(-t).exp_m1() - t * (-t).exp())),
            KernelKind::InverseGamma { .. } | KernelKind::Custom(_) => {
                let end = self.support().map_or(t, |s| t.min(s));
                let mut total = 0.0;
                let mut a = 0.0;
                while a < end {
                    let b = (a + 1.0).min(end);
                    total += quadrature::integrate(|s| self.eval_unchecked(s), a, b, 1e-300, 1e-13)?.value;
                    a = b;
                }
                Ok(total)
            }
        }
    }

    /// `‖w‖_{L¹}` by quadrature up to `t = 10` and the decade-ladder tail test
    /// on `10..10¹²`.
    pub fn l1_norm(&self, tol: f64) -> Result<L1Norm> {
        if let Some(s) = self.support() {
            return Ok(L1Norm::Finite(self.cumulative(s)?));
        }
        let ladder = CutoffLadder::new((1..=12).map(|k| 10f64.powi(k)).collect())?;
        let head = self.cumulative(10.0)?;
        let log_integrand = |sigma: f64| {
            let t = sigma.exp();
            t * self.eval_unchecked(t)
        };
        let verdict = classify_ladder(head, log_integrand, &ladder, tol)?;
        Ok(match verdict.classification {
            OsgoodClass::Finite => {
                let (_, partial) = *verdict.partial_integral_at_cutoffs.last().expect("non-empty ladder");
                L1Norm::Finite(partial + verdict.extrapolated_tail.unwrap_or(0.0))
            }
            OsgoodClass::Infinite => L1Norm::Infinite,
            OsgoodClass::Undecided => L1Norm::Unknown,
        })
    }

    /// Sampled checks: finite and nonnegative on `[0, 100]`, no jumps beyond a
    /// refinement-consistent Lipschitz bound.
    pub fn validate(&self) -> Result<()> {
        let n = 4000;
        let dt = 100.0 / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| self.eval(i as f64 * dt)).collect::<Result<_>>()?;
        if self.support().is_some() {
            return Ok(());
        }
        // Jumps that do not shrink when the grid is halved are discontinuities.
        let coarse = vals.iter().step_by(2).copied().collect::<Vec<_>>();
        let jump = |v: &[f64]| v.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        let (fine, coarse) = (jump(&vals), jump(&coarse));
        if fine > 1e-12 && fine > 0.75 * coarse {
            return Err(Error::InvalidConfig(format!("kernel `{}` looks discontinuous", self.label())));
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
    }
}
