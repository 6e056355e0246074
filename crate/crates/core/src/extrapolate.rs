//! Sequence acceleration and small least-squares fits used to turn finite
//! samples into limit estimates.

use crate::error::{Error, Result};

/// Aitken Δ² acceleration of a sequence.
///
/// Returns `(limit, err)` where `limit` is the last accelerated iterate and
/// `err` is the size of its last increment. With exactly three samples there
/// is one accelerated iterate and `err` is its distance to the last sample.
///
/// Fails with [`Error::DivergentAcceleration`] when the accelerated
/// increments grow over the tail, which is what a sequence without a finite
/// limit (or one dominated by noise) produces.
pub fn aitken(samples: &[f64]) -> Result<(f64, f64)> {
    let accelerated = aitken_sequence(samples)?;
    let last = *accelerated.last().expect("at least one accelerated iterate");
    if accelerated.len() == 1 {
        return Ok((last, (last - samples[samples.len() - 1]).abs()));
    }
    let n = accelerated.len();
    let incs: Vec<f64> = accelerated.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let floor = 64.0 * f64::EPSILON * last.abs().max(f64::MIN_POSITIVE);
    if incs.len() >= 2 {
        let (prev, cur) = (incs[incs.len() - 2], incs[incs.len() - 1]);
        if cur > floor && cur > 2.0 * prev.max(floor) && cur > incs[0] {
            return Err(Error::DivergentAcceleration);
        }
    }
    Ok((last, (accelerated[n - 1] - accelerated[n - 2]).abs()))
}

/// All Aitken iterates `s_{k+2} − (Δs_{k+1})² / Δ²s_k`.
pub fn aitken_sequence(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < 3 {
        return Err(Error::Domain(format!(
            "Aitken acceleration needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    Ok(samples
        .windows(3)
        .map(|w| {
            let d1 = w[1] - w[0];
            let d2 = w[2] - w[1];
            let dd = d2 - d1;
            if dd == 0.0 || (dd.abs() <= f64::EPSILON * (d1.abs() + d2.abs())) {
                w[2]
            } else {
                w[2] - d2 * d2 / dd
            }
        })
        .collect())
}

/// Ordinary least squares for `y ≈ Σ c_j φ_j(x)` via the normal equations,
/// solved with partial-pivot Gaussian elimination. Intended for 2–4 basis
/// functions and a few dozen samples.
pub fn least_squares(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<Vec<f64>> {
    let m = basis.len();
    if xs.len() != ys.len() || xs.len() < m || m == 0 {
        return Err(Error::Domain(format!(
            "least squares needs at least {m} samples, got {}",
            xs.len()
        )));
    }
    let mut a = vec![vec![0.0; m + 1]; m];
    for (&x, &y) in xs.iter().zip(ys) {
        let phi: Vec<f64> = basis.iter().map(|b| b(x)).collect();
        for i in 0..m {
            for j in 0..m {
                a[i][j] += phi[i] * phi[j];
            }
            a[i][m] += phi[i] * y;
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Domain("singular least-squares system".into()));
        }
        a.swap(col, pivot);
        for row in (col + 1)..m {
            let factor = a[row][col] / a[col][col];
            for k in col..=m {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    let mut c = vec![0.0; m];
    for i in (0..m).rev() {
        let tail: f64 = ((i + 1)..m).map(|j| a[i][j] * c[j]).sum();
        c[i] = (a[i][m] - tail) / a[i][i];
    }
    Ok(c)
}

/// Slope of the least-squares line through `(x, y)`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let one = |_: f64| 1.0;
    let id = |x: f64| x;
    Ok(least_squares(xs, ys, &[&one, &id])?[1])
}
