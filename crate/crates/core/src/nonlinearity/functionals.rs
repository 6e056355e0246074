//! `F_B`, `F_U` and the inverse of `F_U`.

use super::Nonlinearity;
use crate::error::{Error, Result};
use crate::quadrature;

/// Width of one tail panel in the log variable (one decade).
const PANEL: f64 = std::f64::consts::LN_10;
/// Panels examined before the `F_B` tail is declared undecided.
const MAX_TAIL_PANELS: usize = 400;
/// Panels after which a ratio this close to 1 is taken as divergence.
const DIVERGENCE_PANELS: usize = 20;
const DIVERGENT_RATIO: f64 = 0.99;

/// Quadrature tolerance for an integrand evaluated as `exp(σ − ½ ln F̄)` near
/// `σ = s`: the cancellation in the exponent costs about `|s|·ε` relative.
fn ln_space_tol(tol: f64, s: f64) -> f64 {
    tol.max(1e-14).max(16.0 * f64::EPSILON * s.abs())
}

impl Nonlinearity {
    /// `u / √F̄(u)` at `u = e^σ`: the integrand of `F_B`/`F_U` in the variable
    /// `σ = ln u`. NaN when `F̄` cannot be evaluated.
    pub(crate) fn log_integrand(&self, sigma: f64) -> f64 {
        match self.ln_fbar_at_ln(sigma) {
            Ok(l) => (sigma - 0.5 * l).exp(),
            Err(_) => f64::NAN,
        }
    }

    /// `F_B(x) = ∫ₓ^∞ du/√F̄(u)` to relative tolerance `tol`.
    ///
    /// The tail is summed decade by decade; once consecutive decade
    /// contributions settle into a geometric ratio the remainder is
    /// extrapolated as a geometric series. A ratio pinned near 1 means the
    /// integral diverges and the call fails with [`Error::OsgoodInfinite`].
    pub fn fb(&self, x: f64, tol: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("F_B is defined for x > 0, got {x}")));
        }
        self.fb_at_ln(x.ln(), tol)
    }

    /// `F_B(e^s)`.
    pub fn fb_at_ln(&self, s: f64, tol: f64) -> Result<f64> {
        let mut sum = 0.0;
        let mut prev_inc: Option<f64> = None;
        let mut prev_ratio: Option<f64> = None;
        for k in 0..MAX_TAIL_PANELS {
            let a = s + k as f64 * PANEL;
            let quad_tol = ln_space_tol(0.1 * tol, a + PANEL);
            let inc = quadrature::integrate(|v| self.log_integrand(v), a, a + PANEL, 0.0, quad_tol)?.value;
            sum += inc;
            if inc == 0.0 || inc <= 1e-3 * tol * sum {
                return Ok(sum);
            }
            if let Some(p) = prev_inc {
                let r = inc / p;
                if k >= DIVERGENCE_PANELS && r >= DIVERGENT_RATIO {
                    return Err(Error::OsgoodInfinite);
                }
                if let Some(pr) = prev_ratio {
                    if r < DIVERGENT_RATIO && k >= 3 {
                        let tail = inc * r / (1.0 - r);
                        // Sensitivity of r/(1−r) to the ratio drift.
                        let tail_err = inc * (r - pr).abs() / ((1.0 - r) * (1.0 - r));
                        if tail_err <= tol * (sum + tail) {
                            return Ok(sum + tail);
                        }
                    }
                }
                prev_ratio = Some(r);
            }
            prev_inc = Some(inc);
        }
        Err(Error::UndecidedTail { panels: MAX_TAIL_PANELS })
    }

    /// `F_U(x) = ∫₁ˣ du/√F̄(u)`; negative for `x < 1`.
    pub fn fu(&self, x: f64, tol: f64) -> Result<f64> {
        if !(x > 0.0) {
            if x == 0.0 {
                return self.fu_below_one(0.0, tol);
            }
            return Err(Error::Domain(format!("F_U is defined for x > 0, got {x}")));
        }
        if x < 1.0 {
            return self.fu_below_one(x, tol);
        }
        self.fu_at_ln(x.ln(), tol)
    }

    /// `F_U(e^s)`; usable for `s` far beyond `ln f64::MAX`.
    pub fn fu_at_ln(&self, s: f64, tol: f64) -> Result<f64> {
        if s < 0.0 {
            let x = s.exp();
            return self.fu_below_one(x, tol);
        }
        let quad_tol = ln_space_tol(0.1 * tol, s);
        Ok(quadrature::integrate(|v| self.log_integrand(v), 0.0, s, 0.0, quad_tol)?.value)
    }

    /// `−∫ₓ¹ du/√F̄(u)` via `u = v²`, which removes the `u^{-1/2}` endpoint
    /// behaviour of `F̄(u) ≈ f(0) u`.
    fn fu_below_one(&self, x: f64, tol: f64) -> Result<f64> {
        let quad_tol = (0.1 * tol).max(1e-14);
        let g = |v: f64| {
            if v == 0.0 {
                return match self.eval(0.0) {
                    Ok(f0) if f0 > 0.0 => 2.0 / f0.sqrt(),
                    _ => f64::NAN,
                };
            }
            match self.ln_fbar_at_ln(2.0 * v.ln()) {
                Ok(l) => 2.0 * v * (-0.5 * l).exp(),
                Err(_) => f64::NAN,
            }
        };
        Ok(-quadrature::integrate(g, x.sqrt(), 1.0, 0.0, quad_tol)?.value)
    }

    /// The `x` with `|F_U(x) − target| ≤ tol·max(1, target)`.
    pub fn invert_fu(&self, target: f64, tol: f64) -> Result<f64> {
        let s = self.invert_fu_ln(target, tol)?;
        let x = s.exp();
        if !x.is_finite() {
            return Err(Error::Overflow(format!("F_U^-1({target}) = exp({s}) overflows")));
        }
        Ok(x)
    }

    /// `ln F_U^{-1}(target)`: bracket by doubling in `ln x`, then safeguarded
    /// Newton steps that fall back to bisection whenever they leave the
    /// bracket. `F_U` is monotone, so the bracket always shrinks.
    pub fn invert_fu_ln(&self, target: f64, tol: f64) -> Result<f64> {
        if !(target >= 0.0) || !target.is_finite() {
            return Err(Error::Domain(format!("F_U inversion needs a finite target >= 0, got {target}")));
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        let accept = tol * target.max(1.0);
        let seg = |a: f64, b: f64| -> Result<f64> {
            let quad_tol = ln_space_tol(0.01 * tol, b);
            Ok(quadrature::integrate(|v| self.log_integrand(v), a, b, 0.0, quad_tol)?.value)
        };

        // Bracket [lo, hi] with F_U(e^lo) < target <= F_U(e^hi).
        let (mut lo, mut f_lo) = (0.0, 0.0);
        let mut hi = 1.0;
        let mut f_hi = seg(0.0, hi)?;
        while f_hi < target {
            let next = 2.0 * hi;
            let inc = seg(hi, next)?;
            lo = hi;
            f_lo = f_hi;
            hi = next;
            f_hi += inc;
            let stalled = inc < 1e-3 * accept;
            if stalled || hi > 1e9 {
                let sup = match self.fb_at_ln(hi, tol) {
                    Ok(rest) => f_hi + rest,
                    Err(Error::OsgoodInfinite) => f64::INFINITY,
                    Err(_) => f_hi,
                };
                if sup <= target || hi > 1e9 {
                    return Err(Error::TargetOutOfRange { target, sup });
                }
                if target - f_hi <= accept {
                    return Ok(hi);
                }
            }
        }
        if (f_hi - target).abs() <= accept {
            return Ok(hi);
        }

        let mut s = lo + (hi - lo) * (target - f_lo) / (f_hi - f_lo);
        for _ in 0..200 {
            let f_s = f_lo + seg(lo, s)?;
            let resid = f_s - target;
            if resid.abs() <= accept {
                return Ok(s);
            }
            if resid < 0.0 {
                lo = s;
                f_lo = f_s;
            } else {
                hi = s;
            }
            let slope = self.log_integrand(s);
            let newton = s - resid / slope;
            s = if slope.is_finite() && slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(Error::QuadratureNonConvergence { a: lo, b: hi, err: f64::NAN })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, SQRT_2};

    #[test]
    fn fb_power_tail() {
        // F̄(u) = ((1+u)^4 − 1)/4 so the integrand behaves like 2u^{-2}.
        let f = Nonlinearity::power_plus_one(3.0).unwrap();
        let v = f.fb(1e6, 1e-10).unwrap();
        assert_relative_eq!(v, 2e-6, max_relative = 1e-3);
    }

    #[test]
    fn fb_rejects_osgood_infinite() {
        let f = Nonlinearity::log_linear();
        assert_eq!(f.fb(10.0, 1e-8), Err(Error::OsgoodInfinite));
        let lin = Nonlinearity::custom("x", |x| x).with_claims(true, false);
        assert_eq!(lin.fb(10.0, 1e-8), Err(Error::OsgoodInfinite));
    }

    #[test]
    fn fb_is_decreasing() {
        let f = Nonlinearity::power_plus_one(2.0).unwrap();
        let xs = [0.1, 0.5, 1.0, 3.0, 10.0, 1e3, 1e6];
        let vals: Vec<f64> = xs.iter().map(|&x| f.fb(x, 1e-10).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] > w[1]), "{vals:?}");
    }

    #[test]
    fn fu_basic_values() {
        let f = Nonlinearity::log_linear();
        assert_eq!(f.fu(1.0, 1e-10).unwrap(), 0.0);
        assert!(f.fu(0.5, 1e-10).unwrap() < 0.0);
        let two_y = Nonlinearity::custom("2y", |y| 2.0 * y);
        assert_relative_eq!(two_y.fu(E, 1e-10).unwrap(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(two_y.fu(1.0 / E, 1e-10).unwrap(), -1.0, max_relative = 1e-9);
    }

    #[test]
    fn fu_at_zero_is_finite_when_f0_positive() {
        let f = Nonlinearity::log_linear();
        let v = f.fu(0.0, 1e-10).unwrap();
        let near = f.fu(1e-12, 1e-10).unwrap();
        assert!(v < near && (v - near).abs() < 1e-5);
    }

    #[test]
    fn log_linear_fu_asymptotic() {
        // F_U(x) ~ 2√(2 ln x), approached slowly: F_U(x) − 2√(2 ln x) tends to a
        // constant near −2.5, so the ratio is only 0.75 at x = 10⁶. Check the
        // values against an independent Simpson rule in ln u, then the ratio
        // where ln x is large.
        let f = Nonlinearity::log_linear();
        let fbar = |u: f64| ((u + E).powi(2) * (2.0 * (u + E).ln() - 1.0) - E * E) / 4.0;
        for &x in &[1e6, 1e10] {
            let n = 20_000;
            let h = f64::ln(x) / n as f64;
            let g = |s: f64| s.exp() / fbar(s.exp()).sqrt();
            let mut acc = g(0.0) + g(f64::ln(x));
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            let oracle = acc * h / 3.0;
            assert_relative_eq!(f.fu(x, 1e-10).unwrap(), oracle, max_relative = 1e-9);
        }
        let ratio = |s: f64| f.fu_at_ln(s, 1e-10).unwrap() / (2.0 * SQRT_2 * s.sqrt());
        let (r6, r10) = (ratio(1e6f64.ln()), ratio(1e10f64.ln()));
        assert!(r6 < r10 && r10 < ratio(1e3) && ratio(1e3) < ratio(1e4));
        assert!((ratio(1e3) - 1.0).abs() < 0.05);
        assert!((ratio(1e4) - 1.0).abs() < 0.01);
    }

    #[test]
    fn complement_identity_for_power() {
        let f = Nonlinearity::power_plus_one(2.0).unwrap();
        let tol = 1e-10;
        let fb1 = f.fb(1.0, tol).unwrap();
        for &x in &[0.1, 0.7, 2.0, 55.0, 1e4, 1e6] {
            let s = f.fu(x, tol).unwrap() + f.fb(x, tol).unwrap();
            assert!((s - fb1).abs() <= 10.0 * tol * fb1, "x={x}: {s} vs {fb1}");
        }
    }

    #[test]
    fn invert_fu_examples() {
        let f = Nonlinearity::log_linear();
        assert_eq!(f.invert_fu(0.0, 1e-10).unwrap(), 1.0);
        let two_y = Nonlinearity::custom("2y", |y| 2.0 * y);
        assert_relative_eq!(two_y.invert_fu(1.0, 1e-10).unwrap(), E, max_relative = 1e-8);
        for &t in &[0.5, 3.0, 12.0] {
            let x = f.invert_fu(t, 1e-10).unwrap();
            assert!((f.fu(x, 1e-12).unwrap() - t).abs() <= 1e-9 * t.max(1.0));
        }
    }

    #[test]
    fn invert_fu_log_linear_growth_law() {
        // F_U(x) ~ 2√(2 ln x) ⇒ ln F_U^{-1}(t) ~ t²/8.
        let f = Nonlinearity::log_linear();
        let ratio = |t: f64| f.invert_fu_ln(t, 1e-10).unwrap() / (t * t / 8.0);
        let (r1, r2, r3) = (ratio(20.0), ratio(200.0), ratio(2000.0));
        assert!((r3 - 1.0).abs() < (r2 - 1.0).abs() && (r2 - 1.0).abs() < (r1 - 1.0).abs());
        assert!((r3 - 1.0).abs() < 0.02, "r3 = {r3}");
    }

    #[test]
    fn invert_fu_out_of_range_for_finite_osgood() {
        let f = Nonlinearity::power_plus_one(2.0).unwrap();
        let sup = f.fb(1.0, 1e-10).unwrap();
        let x = f.invert_fu(0.5 * sup, 1e-10).unwrap();
        assert!((f.fu(x, 1e-12).unwrap() - 0.5 * sup).abs() < 1e-9);
        assert!(matches!(f.invert_fu(1.5 * sup, 1e-10), Err(Error::TargetOutOfRange { .. })));
    }
}
