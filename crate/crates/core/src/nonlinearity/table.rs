//! Tabulated `F̄`, `F_B`, `F_U` on a grid, with monotone cubic interpolation
//! in `ln x`.

use super::Nonlinearity;
use crate::error::{Error, Result};

/// Values of the three functionals on an increasing grid.
///
/// Interpolation is Fritsch–Carlson monotone piecewise-cubic Hermite in the
/// coordinates `(ln x, value)`, so monotone data stays monotone between
/// nodes. `F̄` is interpolated through `ln F̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTable {
    grid: Vec<f64>,
    fbar: Vec<f64>,
    fb: Option<Vec<f64>>,
    fu: Vec<f64>,
    ln_grid: Vec<f64>,
    ln_fbar: Vec<f64>,
    d_ln_fbar: Vec<f64>,
    d_fb: Option<Vec<f64>>,
    d_fu: Vec<f64>,
}

impl FunctionalTable {
    /// Tabulate on `grid` (strictly increasing, positive). `F_B` is omitted
    /// when the Osgood integral diverges.
    pub fn build(nl: &Nonlinearity, grid: &[f64], tol: f64) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::Domain("table grid needs at least two points".into()));
        }
        if grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("table grid must be positive and strictly increasing".into()));
        }
        let fbar = grid.iter().map(|&x| nl.fbar(x)).collect::<Result<Vec<_>>>()?;
        let fu = grid.iter().map(|&x| nl.fu(x, tol)).collect::<Result<Vec<_>>>()?;
        let fb = match grid.iter().map(|&x| nl.fb(x, tol)).collect::<Result<Vec<_>>>() {
            Ok(v) => Some(v),
            Err(Error::OsgoodInfinite) => None,
            Err(e) => return Err(e),
        };
        let ln_grid: Vec<f64> = grid.iter().map(|x| x.ln()).collect();
        let ln_fbar: Vec<f64> = fbar.iter().map(|v| v.ln()).collect();
        Ok(Self {
            d_ln_fbar: pchip_slopes(&ln_grid, &ln_fbar),
            d_fb: fb.as_ref().map(|v| pchip_slopes(&ln_grid, v)),
            d_fu: pchip_slopes(&ln_grid, &fu),
            grid: grid.to_vec(),
            fbar,
            fb,
            fu,
            ln_grid,
            ln_fbar,
        })
    }

    /// Log-spaced grid `[lo, hi]` with `per_decade` points per decade.
    pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
        let (a, b) = (lo.log10(), hi.log10());
        let n = ((b - a) * per_decade as f64).ceil().max(1.0) as usize;
        (0..=n).map(|k| 10f64.powf(a + (b - a) * k as f64 / n as f64)).collect()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn fbar_values(&self) -> &[f64] {
        &self.fbar
    }

    pub fn fb_values(&self) -> Option<&[f64]> {
        self.fb.as_deref()
    }

    pub fn fu_values(&self) -> &[f64] {
        &self.fu
    }

    pub fn fbar(&self, x: f64) -> Result<f64> {
        Ok(self.interp(x, &self.ln_fbar, &self.d_ln_fbar)?.exp())
    }

    pub fn fu(&self, x: f64) -> Result<f64> {
        self.interp(x, &self.fu, &self.d_fu)
    }

    pub fn fb(&self, x: f64) -> Result<f64> {
        match (&self.fb, &self.d_fb) {
            (Some(v), Some(d)) => self.interp(x, v, d),
            _ => Err(Error::OsgoodInfinite),
        }
    }

    fn interp(&self, x: f64, ys: &[f64], ds: &[f64]) -> Result<f64> {
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain(format!("{x} lies outside the table range [{lo}, {hi}]")));
        }
        let s = x.ln();
        let i = match self.ln_grid.partition_point(|&g| g <= s) {
            0 => 0,
            k => (k - 1).min(self.ln_grid.len() - 2),
        };
        let h = self.ln_grid[i + 1] - self.ln_grid[i];
        let t = ((s - self.ln_grid[i]) / h).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * ys[i] + h10 * h * ds[i] + h01 * ys[i + 1] + h11 * h * ds[i + 1])
    }
}

/// Fritsch–Carlson slopes for monotone cubic Hermite interpolation.
fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a * b <= 0.0 {
            d[i] = 0.0;
        } else {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = end_slope(xs[1] - xs[0], xs[2] - xs[1], delta[0], delta[1]);
    d[n - 1] = end_slope(xs[n - 1] - xs[n - 2], xs[n - 2] - xs[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_monotone_and_satisfies_the_complement_identity() {
        let nl = Nonlinearity::power_plus_one(2.0).unwrap();
        let tol = 1e-8;
        let t = FunctionalTable::build(&nl, &FunctionalTable::log_grid(0.1, 1e6, 4), tol).unwrap();
        assert!(t.fbar_values().windows(2).all(|w| w[1] > w[0]));
        assert!(t.fu_values().windows(2).all(|w| w[1] > w[0]));
        let fb = t.fb_values().unwrap();
        assert!(fb.windows(2).all(|w| w[1] < w[0]));
        let fb1 = nl.fb(1.0, tol).unwrap();
        for (u, b) in t.fu_values().iter().zip(fb) {
            assert!((u + b - fb1).abs() <= 10.0 * tol * fb1, "{u} + {b} vs {fb1}");
        }
    }

    #[test]
    fn interpolation_tracks_direct_evaluation() {
        let nl = Nonlinearity::log_linear();
        let t = FunctionalTable::build(&nl, &FunctionalTable::log_grid(0.5, 1e4, 8), 1e-10).unwrap();
        assert!(t.fb_values().is_none());
        for &x in &[0.7, 3.3, 41.0, 777.0, 9000.0] {
            let direct = nl.fu(x, 1e-10).unwrap();
            assert!((t.fu(x).unwrap() - direct).abs() < 1e-4 * direct.abs().max(1.0));
            let fbar = nl.fbar(x).unwrap();
            assert!((t.fbar(x).unwrap() / fbar - 1.0).abs() < 1e-4);
        }
        assert!(t.fu(1e5).is_err());
        assert!(matches!(t.fb(2.0), Err(Error::OsgoodInfinite)));
    }

    #[test]
    fn fu_vanishes_at_one() {
        let nl = Nonlinearity::power_plus_one(1.5).unwrap();
        let t = FunctionalTable::build(&nl, &[0.25, 0.5, 1.0, 2.0, 4.0], 1e-10).unwrap();
        assert_eq!(t.fu_values()[2], 0.0);
        assert!(t.fu(1.0).unwrap().abs() < 1e-12);
    }
}
