use std::fmt::Write as _;
use std::io;

use super::Status;

/// First time the solution reached `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub level: f64,
    pub time: f64,
}

/// A computed solution on its adaptive grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
    /// Step that produced each node (0 for the first).
    pub steps: Vec<f64>,
    pub crossings: Vec<Crossing>,
    pub status: Status,
    /// Problem description written into exported headers.
    pub label: String,
}

impl Trajectory {
    /// Build a trajectory from samples, recording crossings of `x₀ Rⁿ` by
    /// Hermite interpolation. Used for synthetic checks.
    pub fn from_samples(times: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>, ratio: f64, status: Status) -> Self {
        let mut steps = vec![0.0];
        steps.extend(times.windows(2).map(|w| w[1] - w[0]));
        let mut crossings = Vec::new();
        let mut next = values[0] * ratio;
        for i in 1..times.len() {
            next = record_crossings(
                (times[i - 1], values[i - 1], derivs[i - 1]),
                (times[i], values[i], derivs[i]),
                next,
                ratio,
                &mut crossings,
            );
        }
        Self { times, values, derivs, steps, crossings, status, label: "samples".into() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has an initial node")
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("trajectory has an initial node")
    }

    pub fn crossing_times(&self) -> Vec<f64> {
        self.crossings.iter().map(|c| c.time).collect()
    }

    /// `x(t)` by cubic Hermite interpolation between nodes.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if self.times.is_empty() || t < self.times[0] || t > self.last_time() {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return Some(self.values[0]);
        }
        if i == self.times.len() {
            return Some(self.last_value());
        }
        Some(hermite(
            (self.times[i - 1], self.values[i - 1], self.derivs[i - 1]),
            (self.times[i], self.values[i], self.derivs[i]),
            t,
        ))
    }

    /// CSV with header `t,x,dx,step`, then `#` comment lines for the status.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * self.times.len());
        let _ = writeln!(s, "# problem={}", self.label);
        s.push_str("t,x,dx,step\n");
        for i in 0..self.times.len() {
            let _ = writeln!(s, "{:e},{:e},{:e},{:e}", self.times[i], self.values[i], self.derivs[i], self.steps[i]);
        }
        match &self.status {
            Status::ReachedHorizon { t_end } => {
                let _ = writeln!(s, "# status=horizon t_end={t_end}");
            }
            Status::BlowUpDetected { t_est, t_err } => {
                let _ = writeln!(s, "# status=blowup T_est={t_est:.15e} T_err={t_err:.3e}");
            }
            Status::Aborted(reason) => {
                let _ = writeln!(s, "# status=aborted reason={reason}");
            }
        }
        s
    }

    pub fn write_csv(&self, mut w: impl io::Write) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    /// CSV `n,level,t` of the crossing times.
    pub fn crossings_csv(&self) -> String {
        let mut s = String::from("n,level,t\n");
        for (n, c) in self.crossings.iter().enumerate() {
            let _ = writeln!(s, "{},{:e},{:.17e}", n + 1, c.level, c.time);
        }
        s
    }
}

/// Cubic Hermite interpolant through `(t, x, x')` at both ends.
pub(crate) fn hermite(a: (f64, f64, f64), b: (f64, f64, f64), t: f64) -> f64 {
    let h = b.0 - a.0;
    if h <= 0.0 {
        return b.1;
    }
    let s = (t - a.0) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * a.1 + (s3 - 2.0 * s2 + s) * h * a.2 + (-2.0 * s3 + 3.0 * s2) * b.1 + (s3 - s2) * h * b.2
}

/// Record every level `next, next·R, …` crossed between the nodes `a` and
/// `b`; returns the next level still to be crossed.
pub(crate) fn record_crossings(
    a: (f64, f64, f64),
    b: (f64, f64, f64),
    mut next: f64,
    ratio: f64,
    out: &mut Vec<Crossing>,
) -> f64 {
    while b.1 >= next && next.is_finite() {
        let time = if a.1 >= next {
            a.0
        } else {
            // The Hermite cubic may overshoot; bisection keeps the first
            // bracketed root.
            let (mut lo, mut hi) = (a.0, b.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if hermite(a, b, mid) >= next {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        out.push(Crossing { level: next, time });
        next *= ratio;
    }
    next
}
