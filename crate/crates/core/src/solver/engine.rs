//! Time stepping shared by the integro-differential and the bounded-delay
//! solvers.
//!
//! Both advance `x' = h(t) + M(t)` with `M(t) = ∫_{lo(t)}^t g(t − s) F(s) ds`,
//! `F = f ∘ x`, and `lo(t) = max(t_first, t − window)`. The state update is
//! trapezoidal in `M` with the forcing increment `H(t_{n+1}) − H(t_n)` taken
//! exactly, and `M` itself is the composite trapezoidal rule over the stored
//! nodes.

use super::blowup::{crossings_are_geometric, estimate_from_crossings};
use super::trajectory::{record_crossings, Crossing, Trajectory};
use super::{AbortReason, SolverConfig, Status};
use crate::forcing::Forcing;
use crate::nonlinearity::Nonlinearity;

const MAX_FIXED_POINT_ITERATIONS: usize = 8;
const UNDAMPED_ITERATIONS: usize = 4;
const DAMPING: f64 = 0.5;
/// Consecutive forced steps at `min_step` that signal an explosion.
const PINNED_STEPS: usize = 10;
/// Values beyond this are treated as overflow.
const OVERFLOW: f64 = 1e300;
/// History whose contribution is provably below this fraction of the sum
/// is skipped.
const TRUNCATION: f64 = 1e-17;

/// The memory weight `g` and the length of the window it acts on.
pub(crate) struct Memory<'a> {
    pub weight: Box<dyn Fn(f64) -> f64 + 'a>,
    /// `sup g`, when known; enables truncation of negligible history.
    pub weight_sup: Option<f64>,
    pub window: f64,
}

pub(crate) struct Problem<'a> {
    pub nl: &'a Nonlinearity,
    pub memory: Memory<'a>,
    pub forcing: &'a Forcing,
    /// `(s, ψ(s))` for `s < 0`, ascending; empty for the VIDE.
    pub prehistory: Vec<(f64, f64)>,
    pub x0: f64,
    pub label: String,
}

/// Stored nodes. Indices below `n_pre` are prehistory.
struct History {
    t: Vec<f64>,
    x: Vec<f64>,
    f: Vec<f64>,
    m: Vec<f64>,
    dx: Vec<f64>,
    big_h: Vec<f64>,
    step: Vec<f64>,
    n_pre: usize,
    /// `x` nondecreasing over all stored nodes.
    monotone: bool,
}

impl History {
    fn last(&self) -> usize {
        self.t.len() - 1
    }

    fn push(&mut self, node: Node, step: f64) {
        let last = self.last();
        if node.x < self.x[last] {
            self.monotone = false;
        }
        self.t.push(node.t);
        self.x.push(node.x);
        self.f.push(node.f);
        self.m.push(node.m);
        self.dx.push(node.dx);
        self.big_h.push(node.big_h);
        self.step.push(step);
    }
}

#[derive(Clone, Copy)]
struct Node {
    t: f64,
    x: f64,
    f: f64,
    m: f64,
    dx: f64,
    big_h: f64,
}

struct Attempt {
    mid: Option<Node>,
    end: Node,
    err: f64,
}

enum StepFailure {
    NonConvergent,
    Evaluation(String),
}

struct Engine<'a, 'p> {
    p: &'p Problem<'a>,
    cfg: &'p SolverConfig,
    hist: History,
    itol: f64,
    /// `f` is nondecreasing over every stored `x`.
    f_monotone: bool,
}

pub(crate) fn run(p: &Problem<'_>, cfg: &SolverConfig) -> Trajectory {
    Engine::new(p, cfg).map(|e| e.integrate()).unwrap_or_else(|reason| Trajectory {
        times: vec![0.0],
        values: vec![p.x0],
        derivs: vec![f64::NAN],
        steps: vec![0.0],
        crossings: Vec::new(),
        status: Status::Aborted(reason),
        label: p.label.clone(),
    })
}

impl<'a, 'p> Engine<'a, 'p> {
    fn new(p: &'p Problem<'a>, cfg: &'p SolverConfig) -> Result<Self, AbortReason> {
        let eval = |x: f64, t: f64| {
            p.nl.eval(x).map_err(|e| AbortReason::Evaluation { t, reason: e.to_string() })
        };
        let mut hist = History {
            t: Vec::new(),
            x: Vec::new(),
            f: Vec::new(),
            m: Vec::new(),
            dx: Vec::new(),
            big_h: Vec::new(),
            step: Vec::new(),
            n_pre: p.prehistory.len(),
            monotone: true,
        };
        for &(s, x) in &p.prehistory {
            if hist.x.last().is_some_and(|&prev| x < prev) {
                hist.monotone = false;
            }
            hist.t.push(s);
            hist.x.push(x);
            hist.f.push(eval(x, s)?);
            hist.m.push(0.0);
            hist.dx.push(0.0);
            hist.big_h.push(0.0);
            hist.step.push(0.0);
        }
        if hist.x.last().is_some_and(|&prev| p.x0 < prev) {
            hist.monotone = false;
        }
        hist.t.push(0.0);
        hist.x.push(p.x0);
        hist.f.push(eval(p.x0, 0.0)?);
        hist.m.push(0.0);
        hist.dx.push(0.0);
        hist.big_h.push(0.0);
        hist.step.push(0.0);

        let x_min = hist.x.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut e = Self {
            p,
            cfg,
            hist,
            itol: if cfg.fixed_step.is_some() { 1e-14 } else { (1e-5 * cfg.rel_tol).max(1e-14) },
            f_monotone: p.nl.is_increasing && x_min >= p.nl.increasing_from,
        };
        let m0 = e.history_sum(0.0);
        let h0 = p.forcing.h(0.0).map_err(|err| AbortReason::Evaluation { t: 0.0, reason: err.to_string() })?;
        let last = e.hist.last();
        e.hist.m[last] = m0;
        e.hist.dx[last] = h0 + m0;
        Ok(e)
    }

    fn g(&self, tau: f64) -> f64 {
        (self.p.memory.weight)(tau.min(self.p.memory.window))
    }

    /// Trapezoidal sum over stored cells inside `[lo(target), t_last]` for
    /// the memory at `target`.
    fn history_sum(&self, target: f64) -> f64 {
        let h = &self.hist;
        let lo = (target - self.p.memory.window).max(h.t[0]);
        let truncate = match self.p.memory.weight_sup {
            Some(sup) if h.monotone && self.f_monotone => Some(sup),
            _ => None,
        };
        let mut sum = 0.0;
        let mut j = h.last();
        while j > 0 {
            let (a, b) = (h.t[j - 1], h.t[j]);
            if b <= lo {
                break;
            }
            if a >= lo {
                sum += 0.5 * (b - a) * (self.g(target - a) * h.f[j - 1] + self.g(target - b) * h.f[j]);
            } else {
                let f_lo = h.f[j - 1] + (h.f[j] - h.f[j - 1]) * (lo - a) / (b - a);
                sum += 0.5 * (b - lo) * (self.g(target - lo) * f_lo + self.g(target - b) * h.f[j]);
                break;
            }
            j -= 1;
            if let Some(sup) = truncate {
                // F is largest at the newest remaining node.
                if sup * h.f[j] * (h.t[j] - lo) <= TRUNCATION * sum {
                    break;
                }
            }
        }
        sum
    }

    fn forcing_at(&self, t: f64) -> Result<(f64, f64), StepFailure> {
        let fail = |e: crate::Error| StepFailure::Evaluation(e.to_string());
        Ok((self.p.forcing.cumulative(t).map_err(fail)?, self.p.forcing.h(t).map_err(fail)?))
    }

    /// Solve `x = base + hh (S + c f(x))` by fixed-point iteration. After
    /// the first few iterations, updates that overshoot (alternate in sign)
    /// or grow are damped.
    fn fixed_point(&self, base: f64, hh: f64, s: f64, c: f64, guess: f64) -> Option<f64> {
        let mut x = if guess.is_finite() && guess > 0.0 { guess } else { base };
        if x <= 0.0 {
            return Some(x);
        }
        let mut prev_delta = 0.0;
        for k in 0..MAX_FIXED_POINT_ITERATIONS {
            let fx = self.p.nl.eval_raw(x);
            let g = base + hh * (s + c * fx);
            if !g.is_finite() {
                return None;
            }
            if g <= 0.0 {
                // Reported as a loss of positivity by the caller.
                return Some(g);
            }
            let delta = g - x;
            let erratic = delta * prev_delta < 0.0 || delta.abs() > prev_delta.abs();
            let next = if k >= UNDAMPED_ITERATIONS && erratic { x + (1.0 - DAMPING) * delta } else { g };
            if (next - x).abs() <= self.itol * next.abs().max(base.abs()).max(f64::MIN_POSITIVE) {
                return Some(next);
            }
            prev_delta = delta;
            x = next;
        }
        None
    }

    fn node(&self, t: f64, x: f64, s: f64, c: f64, big_h: f64, h_t: f64) -> Node {
        let f = self.p.nl.eval_raw(x);
        let m = s + c * f;
        Node { t, x, f, m, dx: h_t + m, big_h }
    }

    fn predict(&self, dt: f64) -> f64 {
        let h = &self.hist;
        let n = h.last();
        let v = h.dx[n];
        let a = if n > h.n_pre && h.t[n] > h.t[n - 1] {
            (h.dx[n] - h.dx[n - 1]) / (h.t[n] - h.t[n - 1])
        } else {
            0.0
        };
        h.x[n] + dt * v + 0.5 * dt * dt * a
    }

    /// One trapezoidal step of size `dt` from the last node, or two half
    /// steps plus the full step when `doubling` is set.
    fn attempt(&self, dt: f64, doubling: bool) -> Result<Attempt, StepFailure> {
        let h = &self.hist;
        let n = h.last();
        let (t_n, x_n, f_n, m_n, big_h_n) = (h.t[n], h.x[n], h.f[n], h.m[n], h.big_h[n]);
        let t_full = t_n + dt;
        let g0 = self.g(0.0);
        let g_full = self.g(dt);
        let s_full = self.history_sum(t_full);
        let (big_h_full, h_full) = self.forcing_at(t_full)?;

        let base = x_n + (big_h_full - big_h_n) + 0.5 * dt * m_n;
        let s = s_full + 0.5 * dt * g_full * f_n;
        let c = 0.5 * dt * g0;
        let x_full =
            self.fixed_point(base, 0.5 * dt, s, c, self.predict(dt)).ok_or(StepFailure::NonConvergent)?;
        if !doubling || x_full <= 0.0 {
            return Ok(Attempt { mid: None, end: self.node(t_full, x_full, s, c, big_h_full, h_full), err: 0.0 });
        }

        let half = 0.5 * dt;
        let t_mid = t_n + half;
        let g_half = self.g(half);
        let (big_h_mid, h_mid) = self.forcing_at(t_mid)?;
        let base1 = x_n + (big_h_mid - big_h_n) + 0.5 * half * m_n;
        let s1 = self.history_sum(t_mid) + 0.5 * half * g_half * f_n;
        let c1 = 0.5 * half * g0;
        let x_mid = self.fixed_point(base1, 0.5 * half, s1, c1, self.predict(half)).ok_or(StepFailure::NonConvergent)?;
        let mid = self.node(t_mid, x_mid, s1, c1, big_h_mid, h_mid);
        if x_mid <= 0.0 {
            return Ok(Attempt { mid: None, end: mid, err: 0.0 });
        }

        let base2 = x_mid + (big_h_full - big_h_mid) + 0.5 * half * mid.m;
        let s2 = s_full + 0.5 * half * g_full * f_n + half * g_half * mid.f;
        let c2 = 0.5 * half * g0;
        let x_new = self.fixed_point(base2, 0.5 * half, s2, c2, x_full).ok_or(StepFailure::NonConvergent)?;
        let end = self.node(t_full, x_new, s2, c2, big_h_full, h_full);
        Ok(Attempt { mid: Some(mid), end, err: (x_new - x_full).abs() / 3.0 })
    }

    fn integrate(mut self) -> Trajectory {
        let cfg = self.cfg;
        let max_step = cfg.max_step.min(0.5 * self.p.memory.window);
        let min_step = cfg.min_step.min(max_step);
        let mut dt = cfg.fixed_step.unwrap_or(cfg.initial_step.min(max_step));
        let mut crossings: Vec<Crossing> = Vec::new();
        let mut next_level = self.p.x0 * cfg.crossing_ratio;
        let mut pins = 0usize;
        let mut checked_crossings = 0usize;

        let status = loop {
            let n = self.hist.last();
            let t_n = self.hist.t[n];
            let remaining = cfg.t_end - t_n;
            if remaining <= 1e-14 * cfg.t_end.max(1.0) {
                break Status::ReachedHorizon { t_end: cfg.t_end };
            }
            if self.hist.t.len() >= cfg.max_nodes {
                break Status::Aborted(AbortReason::StepBudgetExhausted { nodes: self.hist.t.len() });
            }
            let fixed = cfg.fixed_step.is_some();
            let mut step = if fixed { dt } else { dt.min(max_step) };
            let final_step = step >= remaining * (1.0 - 1e-12);
            if final_step {
                step = remaining;
            }

            let outcome = self.attempt(step, !fixed);
            let forced = step <= min_step * (1.0 + 1e-12);
            let attempt = match outcome {
                Err(StepFailure::Evaluation(reason)) => {
                    break Status::Aborted(AbortReason::Evaluation { t: t_n, reason });
                }
                Err(StepFailure::NonConvergent) => {
                    if fixed || forced {
                        break Status::Aborted(AbortReason::NonConvergentImplicitStep { t: t_n });
                    }
                    dt = (0.5 * step).max(min_step);
                    continue;
                }
                Ok(a) => a,
            };
            let tol = cfg.rel_tol * attempt.end.x.abs();
            if !fixed && attempt.err > tol && !forced {
                dt = (0.5 * step).max(min_step);
                continue;
            }
            let pinned = !fixed && attempt.err > tol;

            // Accept.
            let prev = self.hist.last();
            let prev_node = (self.hist.t[prev], self.hist.x[prev], self.hist.dx[prev]);
            let mut last = prev_node;
            for node in attempt.mid.iter().chain(std::iter::once(&attempt.end)) {
                let here = (node.t, node.x, node.dx);
                next_level = record_crossings(last, here, next_level, cfg.crossing_ratio, &mut crossings);
                let sub = node.t - last.0;
                last = here;
                self.hist.push(*node, sub);
            }
            let end = attempt.end;
            if self.f_monotone && end.x < self.p.nl.increasing_from {
                self.f_monotone = false;
            }
            if !(end.x > 0.0) {
                break if end.x.is_nan() {
                    Status::Aborted(AbortReason::Overflow { t: end.t })
                } else {
                    Status::Aborted(AbortReason::PositivityLoss { t: end.t })
                };
            }
            if end.x > OVERFLOW || !end.f.is_finite() || !end.dx.is_finite() {
                break Status::Aborted(AbortReason::Overflow { t: end.t });
            }

            if pinned {
                pins = if end.dx > prev_node.2 { pins + 1 } else { 0 };
            } else {
                pins = 0;
            }
            let exploding = end.x >= cfg.blowup_threshold || pins >= PINNED_STEPS;
            if exploding && crossings.len() > checked_crossings {
                checked_crossings = crossings.len();
                let times: Vec<f64> = crossings.iter().map(|c| c.time).collect();
                if crossings_are_geometric(&times) {
                    match estimate_from_crossings(&times) {
                        Ok((t_est, t_err)) if t_est > end.t => break Status::BlowUpDetected { t_est, t_err },
                        Ok((t_est, _)) => {
                            break Status::Aborted(AbortReason::BlowUpTimeUnresolved {
                                reason: format!("extrapolated T = {t_est} precedes the last node {}", end.t),
                            })
                        }
                        Err(e) => {
                            break Status::Aborted(AbortReason::BlowUpTimeUnresolved { reason: e.to_string() })
                        }
                    }
                }
            }

            if !fixed {
                if final_step {
                    // keep dt
                } else if attempt.err < tol / 16.0 {
                    dt = (2.0 * step).min(max_step);
                } else {
                    dt = step;
                }
            }
        };

        let h = self.hist;
        let k = h.n_pre;
        Trajectory {
            times: h.t[k..].to_vec(),
            values: h.x[k..].to_vec(),
            derivs: h.dx[k..].to_vec(),
            steps: h.step[k..].to_vec(),
            crossings,
            status,
            label: self.p.label.clone(),
        }
    }
}
