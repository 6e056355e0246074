use volterra_blowup::solver::{residual_check, AbortReason};
use volterra_blowup::{solve, Forcing, Kernel, Nonlinearity, SolverConfig, Status};

#[test]
fn csv_footers() {
    let w = Kernel::constant(1.0).unwrap();
    let blow = solve(&w, &Nonlinearity::power_plus_one(2.0).unwrap(), &Forcing::zero(), 1.0, &SolverConfig::new(5.0)).unwrap();
    let csv = blow.to_csv();
    assert!(csv.starts_with("# problem="));
    assert_eq!(csv.lines().nth(1), Some("t,x,dx,step"));
    assert!(csv.lines().last().unwrap().starts_with("# status=blowup T_est="));
    assert!(blow.crossings_csv().starts_with("n,level,t\n1,"));

    let global = solve(&w, &Nonlinearity::log_linear(), &Forcing::zero(), 1.0, &SolverConfig::new(2.0)).unwrap();
    assert_eq!(global.to_csv().lines().last(), Some("# status=horizon t_end=2"));
}

#[test]
fn log_linear_example_reaches_forty() {
    let traj = solve(
        &Kernel::stretched_exp(1.0, 1.0).unwrap(),
        &Nonlinearity::log_linear(),
        &Forcing::zero(),
        1.0,
        &SolverConfig::new(40.0),
    )
    .unwrap();
    assert_eq!(traj.status, Status::ReachedHorizon { t_end: 40.0 });
    assert!(traj.last_value().is_finite());
}

#[test]
fn residual_of_forced_run() {
    let w = Kernel::stretched_exp(1.0, 1.0).unwrap();
    let nl = Nonlinearity::log_linear();
    let forcing = Forcing::power_growth(1.0).unwrap();
    let cfg = SolverConfig::new(3.0);
    let traj = solve(&w, &nl, &forcing, 1.0, &cfg).unwrap();
    let r = residual_check(&traj, &w, &nl, &forcing, 1.0).unwrap();
    assert!(r <= 10.0 * cfg.rel_tol * traj.last_value(), "residual {r}");
}

#[test]
fn negative_forcing_loses_positivity() {
    let forcing = Forcing::custom("-5", |_| -5.0);
    let traj = solve(&Kernel::constant(1.0).unwrap(), &Nonlinearity::log_linear(), &forcing, 0.1, &SolverConfig::new(2.0))
        .unwrap();
    assert!(matches!(traj.status, Status::Aborted(AbortReason::PositivityLoss { .. })), "{:?}", traj.status);
}

#[test]
fn node_budget_is_enforced() {
    let mut cfg = SolverConfig::new(10.0);
    cfg.max_nodes = 50;
    let traj = solve(&Kernel::constant(1.0).unwrap(), &Nonlinearity::log_linear(), &Forcing::zero(), 1.0, &cfg).unwrap();
    assert!(matches!(traj.status, Status::Aborted(AbortReason::StepBudgetExhausted { .. })));
}
