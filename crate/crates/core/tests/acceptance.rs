//! One line per acceptance criterion; exits non-zero when any fails.

use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use volterra_blowup::asymptotics::{
    blowup_rate_diagnostic, default_ladder, growth_rate_diagnostic, perturbation_criterion, Bands,
    PerturbationClass, Verdict,
};
use volterra_blowup::comparison::{
    energy_drift, fbar_lag_ratios, lag_ratio_test, lag_ratios, solve_aux_ivp, solve_delay, solve_second_order,
    DelayProblem, InitialFunction,
};
use volterra_blowup::extrapolate::least_squares;
use volterra_blowup::nonlinearity::{check_osgood_equivalence, classify_osgood, CutoffLadder, OsgoodClass};
use volterra_blowup::solver::estimate_blowup_time;
use volterra_blowup::{solve, Forcing, Kernel, Nonlinearity, SolverConfig, Status, Trajectory};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn identity() -> Nonlinearity {
    Nonlinearity::custom("x", |x| x).with_claims(true, false)
}

fn criterion_1() -> Outcome {
    let ladder = CutoffLadder::decades();
    let mut cases: Vec<(Nonlinearity, OsgoodClass)> = [1.5, 2.0, 3.0]
        .iter()
        .map(|&b| (Nonlinearity::power_plus_one(b).unwrap(), OsgoodClass::Finite))
        .collect();
    cases.push((Nonlinearity::log_linear(), OsgoodClass::Infinite));
    cases.push((identity(), OsgoodClass::Infinite));
    let mut pass = true;
    let mut detail = Vec::new();
    for (nl, expected) in cases {
        let start = Instant::now();
        let got = classify_osgood(&nl, 1.0, &ladder, 1e-2).map(|v| v.classification);
        let elapsed = start.elapsed();
        let ok = matches!(got, Ok(c) if c == expected) && elapsed < Duration::from_secs(1);
        pass &= ok;
        detail.push(format!("{}={:?} ({:.0?})", nl.label(), got.map_err(|e| e.to_string()), elapsed));
    }
    outcome(pass, detail.join(", "))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let catalog = vec![
        Nonlinearity::power_plus_one(1.5).unwrap(),
        Nonlinearity::power_plus_one(2.0).unwrap(),
        Nonlinearity::power_plus_one(3.0).unwrap(),
        Nonlinearity::log_linear(),
        Nonlinearity::pure_power(2.0).unwrap(),
        identity(),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for nl in &catalog {
        let agree = check_osgood_equivalence(nl, &CutoffLadder::decades(), 1e-2);
        pass &= matches!(agree, Ok(true));
        detail.push(format!("{}={:?}", nl.label(), agree.map_err(|e| e.to_string())));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1);
    outcome(pass, format!("{} ({elapsed:.0?})", detail.join(", ")))
}

fn blowup_run(kernel: &Kernel, forcing: &Forcing) -> (Trajectory, Duration) {
    let start = Instant::now();
    let nl = Nonlinearity::power_plus_one(2.0).unwrap();
    let traj = solve(kernel, &nl, forcing, 1.0, &SolverConfig::new(10.0)).unwrap();
    (traj, start.elapsed())
}

fn criterion_3() -> Outcome {
    let nl = Nonlinearity::power_plus_one(2.0).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for (kernel, target) in [
        (Kernel::constant(1.0).unwrap(), SQRT_2),
        (Kernel::stretched_exp(4.0, 1.0).unwrap(), 8f64.sqrt()),
    ] {
        let (traj, elapsed) = blowup_run(&kernel, &Forcing::zero());
        let d = blowup_rate_diagnostic(&traj, &nl, kernel.value_at_zero(), Bands::default());
        let ok = match &d {
            Ok(d) => {
                d.verdict == Verdict::Consistent
                    && (d.extrapolated_limit - target).abs() <= 0.05 * target
                    && elapsed < Duration::from_secs(30)
            }
            Err(_) => false,
        };
        pass &= ok;
        detail.push(match d {
            Ok(d) => format!("{}: {d} ±{:.1e} ({elapsed:.1?})", kernel.label(), d.limit_err),
            Err(e) => format!("{}: {e}", kernel.label()),
        });
    }
    outcome(pass, detail.join("; "))
}

/// `F_B(x)·√x` for `f = (1+u)²` by composite Simpson in `u = x/v²`, where
/// the integrand `2x^{3/2} / (v³ √F̄(x/v²))` is smooth on `[0, 1]`.
fn scaled_fb_oracle(x: f64) -> f64 {
    let fbar = |u: f64| ((1.0 + u).powi(3) - 1.0) / 3.0;
    let g = |v: f64| {
        if v == 0.0 {
            2.0 * 3f64.sqrt()
        } else {
            2.0 * x.powf(1.5) / (v.powi(3) * fbar(x / (v * v)).sqrt())
        }
    };
    let n = 20_000;
    let h = 1.0 / n as f64;
    let mut sum = g(0.0) + g(1.0);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    sum * h / 3.0
}

fn criterion_4() -> Outcome {
    let beta: f64 = 2.0;
    // Corrections are O(1/x): Richardson on x = 10⁶, 10⁸.
    let (a6, a8) = (scaled_fb_oracle(1e6), scaled_fb_oracle(1e8));
    let a = a8 + (a8 - a6) / 99.0;
    let derived = 2.0 * (beta + 1.0).sqrt() / (beta - 1.0);
    let printed = 2.0 * (beta - 1.0) / (beta + 1.0).sqrt();
    let matches = if (a - derived).abs() <= 1e-6 * derived {
        "2√(β+1)/(β−1)"
    } else if (a - printed).abs() <= 1e-6 * printed {
        "2(β−1)/√(β+1)"
    } else {
        "neither"
    };

    let (traj, _) = blowup_run(&Kernel::constant(1.0).unwrap(), &Forcing::zero());
    let Status::BlowUpDetected { t_est, t_err } = traj.status else {
        return outcome(false, format!("run did not blow up: {:?}", traj.status));
    };
    let samples: Vec<f64> = traj
        .crossings
        .iter()
        .filter(|c| t_est - c.time > 1e5 * t_err)
        .map(|c| c.level.powf(-0.5) / (t_est - c.time))
        .collect();
    let tail = &samples[samples.len().saturating_sub(10)..];
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let limit = 0.5 * (lo + hi);
    let expected = SQRT_2 / a;
    let converged = (hi - lo) <= 0.01 * expected;
    let pass = matches == "2√(β+1)/(β−1)" && converged && (limit - expected).abs() <= 0.05 * expected;
    outcome(
        pass,
        format!(
            "A={a:.8} matches {matches}; x^-1/2/(T-t) -> {limit:.6} (spread {:.1e}), √2/A = {expected:.6}",
            hi - lo
        ),
    )
}

/// Constant term of `a + b ln t/t + c/t` fitted to `(t, y)`.
fn fitted_constant(points: &[(f64, f64)]) -> f64 {
    let ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    least_squares(&ts, &ys, &[&|_| 1.0, &|t: f64| t.ln() / t, &|t: f64| 1.0 / t]).unwrap()[0]
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let nl = Nonlinearity::log_linear();
    let traj = solve(&Kernel::stretched_exp(1.0, 1.0).unwrap(), &nl, &Forcing::zero(), 1.0, &SolverConfig::new(40.0))
        .unwrap();
    let elapsed = start.elapsed();
    let d = match growth_rate_diagnostic(&traj, &nl, 1.0, Bands::default()) {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let raw = d.samples.last().map_or(f64::NAN, |s| s.1);
    // ln x(t)/t² on the same quarter-octave times, same extrapolation.
    let log_samples: Vec<(f64, f64)> =
        d.samples.iter().map(|&(t, _)| (t, traj.value_at(t).unwrap().ln() / (t * t))).collect();
    let log_limit = fitted_constant(&log_samples);
    let log_raw = log_samples.last().unwrap().1;
    let pass = d.verdict == Verdict::Consistent
        && (d.extrapolated_limit - SQRT_2).abs() <= 0.05 * SQRT_2
        && (log_limit - 0.25).abs() <= 0.05 * 0.25
        && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{d} ±{:.1e} (raw F_U(x)/t at 40: {raw:.4}); ln x/t² -> {log_limit:.4} (raw {log_raw:.4}) ({elapsed:.1?})",
            d.limit_err
        ),
    )
}

fn criterion_6() -> Outcome {
    let nl = Nonlinearity::log_linear();
    // x(t) leaves the f64 range shortly after t = 135.
    let traj = solve(&Kernel::times_exp_decay(1.0).unwrap(), &nl, &Forcing::zero(), 1.0, &SolverConfig::new(130.0))
        .unwrap();
    match growth_rate_diagnostic(&traj, &nl, 0.0, Bands::default()) {
        Ok(d) => {
            let last = d.samples.last().map_or(f64::NAN, |s| s.1);
            let peak = d.samples.iter().cloned().fold((0.0, f64::MIN), |m, s| if s.1 > m.1 { s } else { m });
            outcome(
                d.verdict == Verdict::Consistent,
                format!(
                    "{d}; final F_U(x)/t = {last:.4} (band {:.4}), samples peak {:.4} at t = {:.1}",
                    Bands::default().zero_band,
                    peak.1,
                    peak.0
                ),
            )
        }
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn criterion_7() -> Outcome {
    let nl = Nonlinearity::power_plus_one(2.0).unwrap();
    let w = Kernel::constant(1.0).unwrap();
    let (free, _) = blowup_run(&w, &Forcing::zero());
    let (forced, elapsed) = blowup_run(&w, &Forcing::power_growth(1.0).unwrap());
    let df = blowup_rate_diagnostic(&free, &nl, 1.0, Bands::default());
    let dg = blowup_rate_diagnostic(&forced, &nl, 1.0, Bands::default());
    match (df, dg) {
        (Ok(df), Ok(dg)) => {
            let pass = matches!(forced.status, Status::BlowUpDetected { .. })
                && dg.verdict == Verdict::Consistent
                && dg.verdict == df.verdict
                && dg.target == df.target;
            let t = |s: &Status| match s {
                Status::BlowUpDetected { t_est, .. } => *t_est,
                _ => f64::NAN,
            };
            outcome(
                pass,
                format!("T: {:.6} -> {:.6}; {df} -> {dg} ({elapsed:.1?})", t(&free.status), t(&forced.status)),
            )
        }
        (a, b) => outcome(false, format!("{a:?} / {b:?}")),
    }
}

fn criterion_8() -> Outcome {
    let nl = Nonlinearity::log_linear();
    let ladder = default_ladder();
    let class = |f: &Forcing| perturbation_criterion(f, &nl, 1.0, &ladder, Bands::default()).map(|r| r.class);
    let low = Forcing::rate_scale(0.5 * SQRT_2, &nl).unwrap();
    let cases = [
        ("K=0.5√2", low.clone(), PerturbationClass::Preserving),
        ("K=2√2", Forcing::rate_scale(2.0 * SQRT_2, &nl).unwrap(), PerturbationClass::NonPreserving),
        ("α=1", Forcing::power_growth(1.0).unwrap(), PerturbationClass::Preserving),
        ("α=2", Forcing::power_growth(2.0).unwrap(), PerturbationClass::Preserving),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, f, expected) in cases {
        let got = class(&f);
        pass &= matches!(got, Ok(c) if c == expected);
        detail.push(format!("{name}: {}", got.map_or_else(|e| e.to_string(), |c| c.to_string())));
    }
    let traj =
        solve(&Kernel::stretched_exp(1.0, 1.0).unwrap(), &nl, &low, 1.0, &SolverConfig::new(40.0)).unwrap();
    match growth_rate_diagnostic(&traj, &nl, 1.0, Bands::default()) {
        Ok(d) => {
            pass &= d.verdict == Verdict::Consistent;
            detail.push(format!("forced run {d}"));
        }
        Err(e) => {
            pass = false;
            detail.push(e.to_string());
        }
    }
    outcome(pass, detail.join("; "))
}

fn criterion_9() -> Outcome {
    let nl = Nonlinearity::log_linear();
    let mut pass = true;
    let mut detail = Vec::new();
    for c in [1.0f64, 2.0] {
        let problem = DelayProblem::constant_gain(c, 1.0, InitialFunction::Constant(1.0));
        let traj = solve_delay(&problem, &nl, &SolverConfig::new(30.0 / c.sqrt())).unwrap();
        let target = (2.0 * c).sqrt();
        match growth_rate_diagnostic(&traj, &nl, c, Bands::default()) {
            Ok(d) => {
                pass &= (d.extrapolated_limit - target).abs() <= 0.05 * target && d.verdict == Verdict::Consistent;
                detail.push(format!("C={c}: {d}"));
            }
            Err(e) => {
                pass = false;
                detail.push(format!("C={c}: {e}"));
            }
        }
        let mut worst: f64 = 0.0;
        for sigma in [0.5, 1.0, 2.0] {
            let r = lag_ratio_test(lag_ratios(&traj, sigma, 1.0));
            pass &= r.passes;
            worst = worst.max(r.final_value);
        }
        let fr = lag_ratio_test(fbar_lag_ratios(&traj, &nl, 1.0, 1.0).unwrap());
        pass &= fr.passes;
        detail.push(format!("lag ratios ≤ {worst:.1e}, F̄ ratio {:.1e}", fr.final_value));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_10() -> Outcome {
    let w = Kernel::constant(1.0).unwrap();
    let f = identity();
    let traj = solve(&w, &f, &Forcing::zero(), 1.0, &SolverConfig::new(2.0).with_rel_tol(1e-6)).unwrap();
    let cosh_err = (traj.last_value() - 2f64.cosh()).abs() / 2f64.cosh();

    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let t = solve(&w, &f, &Forcing::zero(), 1.0, &SolverConfig::new(2.0).with_fixed_step(h)).unwrap();
            t.times.iter().zip(&t.values).map(|(t, x)| (x - t.cosh()).abs()).fold(0.0, f64::max)
        })
        .collect();
    let order = errs.windows(2).map(|e| (e[0] / e[1]).log2()).fold(f64::INFINITY, f64::min);

    let power = Nonlinearity::power_plus_one(2.0).unwrap();
    let z = solve_second_order(&power, 1.0, 0.0, &SolverConfig::new(10.0).with_rel_tol(1e-9)).unwrap();
    let drift = energy_drift(&z, &power).unwrap();

    let ll = Nonlinearity::log_linear();
    let y = solve_aux_ivp(&ll, &SolverConfig::new(20.0).with_rel_tol(1e-9)).unwrap();
    let aux_err = y
        .times
        .iter()
        .zip(&y.values)
        .map(|(t, y)| (ll.fu(*y, 1e-12).unwrap() - t).abs())
        .fold(0.0, f64::max);

    // x = (1 − t)^{-2} on a grid refined toward 1.
    let mut times = Vec::new();
    let mut t: f64 = 0.0;
    while 1.0 - t > 1e-9 {
        times.push(t);
        t += 0.01 * (1.0 - t);
    }
    let values = times.iter().map(|t| (1.0 - t).powi(-2)).collect();
    let derivs = times.iter().map(|t| 2.0 * (1.0 - t).powi(-3)).collect();
    let t_end = *times.last().unwrap();
    let synth = Trajectory::from_samples(times, values, derivs, 2.0, Status::ReachedHorizon { t_end });
    let t_rec = estimate_blowup_time(&synth).map(|r| r.0).unwrap_or(f64::NAN);

    let pass = cosh_err <= 1e-4 && order >= 1.8 && drift <= 1e-4 && aux_err <= 1e-4 && (t_rec - 1.0).abs() <= 1e-6;
    outcome(
        pass,
        format!(
            "cosh err {cosh_err:.1e}, order {order:.3}, energy drift {drift:.1e}, aux |F_U(y)-t| {aux_err:.1e}, synthetic T {t_rec:.9}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Osgood classifier", criterion_1),
        ("integral criteria agree", criterion_2),
        ("blow-up rate √(2w(0))", criterion_3),
        ("explosion constant", criterion_4),
        ("growth rate √2", criterion_5),
        ("degenerate kernel rate 0", criterion_6),
        ("forced blow-up rate", criterion_7),
        ("perturbation equivalence", criterion_8),
        ("delay comparison rates", criterion_9),
        ("solver oracles", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {}: {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
