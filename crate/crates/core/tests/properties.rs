use proptest::prelude::*;
use volterra_blowup::asymptotics::{banded_verdict, Verdict};
use volterra_blowup::extrapolate::aitken;
use volterra_blowup::{solve, Forcing, Kernel, Nonlinearity, SolverConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fbar_increases(beta in 1.05f64..4.0, a in 0.01f64..1e3, k in 1.01f64..10.0) {
        let nl = Nonlinearity::power_plus_one(beta).unwrap();
        let (lo, hi) = (nl.fbar(a).unwrap(), nl.fbar(a * k).unwrap());
        prop_assert!(lo > 0.0 && hi > lo);
    }

    #[test]
    fn fu_and_fb_complement(beta in 1.2f64..4.0, x in 1.0f64..1e6) {
        let nl = Nonlinearity::power_plus_one(beta).unwrap();
        let total = nl.fb(1.0, 1e-11).unwrap();
        let sum = nl.fu(x, 1e-11).unwrap() + nl.fb(x, 1e-11).unwrap();
        prop_assert!((sum - total).abs() <= 1e-8 * total.max(1.0));
    }

    #[test]
    fn fu_inverse_round_trip(target in 0.0f64..200.0) {
        let nl = Nonlinearity::log_linear();
        let s = nl.invert_fu_ln(target, 1e-12).unwrap();
        prop_assert!((nl.fu_at_ln(s, 1e-12).unwrap() - target).abs() <= 1e-9 * target.max(1.0));
    }

    #[test]
    fn aitken_is_exact_on_geometric(limit in -10.0f64..10.0, b in 0.1f64..5.0, r in 0.1f64..0.8) {
        let seq: Vec<f64> = (0..8).map(|n| limit + b * r.powi(n)).collect();
        let (l, _) = aitken(&seq).unwrap();
        prop_assert!((l - limit).abs() <= 1e-9 * (1.0 + limit.abs()));
    }

    #[test]
    fn consistent_verdict_is_within_band(limit in 0.0f64..3.0, err in 0.0f64..0.2, target in 0.5f64..3.0) {
        if banded_verdict(limit, err, target, 0.05) == Verdict::Consistent {
            prop_assert!((limit - target).abs() <= (0.05 * target).max(err));
        }
    }

    #[test]
    fn kernel_scaling(omega in 0.1f64..10.0, lambda in 0.1f64..10.0, t in 0.0f64..20.0) {
        let w = Kernel::stretched_exp(omega, 1.0).unwrap();
        let s = w.scaled(lambda).unwrap();
        prop_assert!((s.eval(t).unwrap() - lambda * w.eval(t).unwrap()).abs() <= 1e-12 * (1.0 + lambda * omega));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_are_ordered_and_monotone(omega in 0.2f64..3.0, x0 in 0.1f64..5.0, alpha in 0.0f64..2.0) {
        let w = Kernel::power_decay(omega, alpha).unwrap();
        let traj = solve(&w, &Nonlinearity::log_linear(), &Forcing::zero(), x0, &SolverConfig::new(3.0)).unwrap();
        prop_assert!(traj.times.windows(2).all(|p| p[1] > p[0]));
        prop_assert!(traj.values.windows(2).all(|p| p[1] >= p[0]));
        prop_assert!(traj.crossings.windows(2).all(|c| c[1].time >= c[0].time && c[1].level > c[0].level));
    }
}
