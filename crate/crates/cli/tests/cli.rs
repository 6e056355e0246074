use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.conf"))
}

fn run(args: &[&str], config: &Path, out: &Path) -> (i32, String) {
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_volterra-blowup"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    let text = String::from_utf8(stdout).unwrap() + &String::from_utf8(stderr).unwrap();
    (status.code().unwrap(), text)
}

#[test]
fn classify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(&["classify"], &scenario("example_5_1"), dir.path());
    assert_eq!(code, 0);
    assert!(text.contains("FINITE → blow-up predicted"), "{text}");
    assert!(text.contains("integral criteria agree: yes"));
    let (code, text) = run(&["classify"], &scenario("example_5_2"), dir.path());
    assert_eq!(code, 0);
    assert!(text.contains("INFINITE → global solution predicted"), "{text}");
    let (_, text) = run(&["classify"], &scenario("linear"), dir.path());
    assert!(text.contains("INFINITE"), "{text}");
}

#[test]
fn solve_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["solve"], &scenario("linear"), dir.path());
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("linear.csv")).unwrap();
    let last = csv.lines().rfind(|l| !l.starts_with('#')).unwrap();
    let x: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((x - 2f64.cosh()).abs() <= 1e-4 * 2f64.cosh(), "{x}");
    assert!(!dir.path().join("linear_crossings.csv").exists());

    let (code, _) = run(&["solve"], &scenario("example_5_1"), dir.path());
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("example_5_1.csv")).unwrap();
    assert!(csv.lines().last().unwrap().starts_with("# status=blowup T_est="));
    assert!(dir.path().join("example_5_1_crossings.csv").exists());
    let gp = std::fs::read_to_string(dir.path().join("example_5_1.gp")).unwrap();
    assert!(gp.contains("plot 'example_5_1.csv'"));

    let (code, text) = run(&["solve", "--t-end", "40"], &scenario("example_5_2"), dir.path());
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.path().join("example_5_2.csv")).unwrap();
    assert_eq!(csv.lines().last(), Some("# status=horizon t_end=40"));
}

#[test]
fn rates_lines_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(&["rates"], &scenario("example_5_1"), dir.path());
    assert_eq!(code, 0);
    assert!(text.contains("BlowUpRate limit≈1.414 target=1.414 CONSISTENT"), "{text}");
    assert!(dir.path().join("example_5_1_rate.csv").exists());
    let (code, text) = run(&["rates"], &scenario("example_5_2"), dir.path());
    assert_eq!(code, 0);
    assert!(text.contains("GrowthRate limit≈1.41"), "{text}");
    assert!(text.contains("target=1.414 CONSISTENT"), "{text}");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["solve"], &dir.path().join("missing.conf"), dir.path());
    assert_eq!(code, 1);

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "name = bad\nx0 = -1\n[kernel]\nid = power_decay\n[nonlinearity]\nid = log_linear\n").unwrap();
    let (code, text) = run(&["solve"], &bad, dir.path());
    assert_eq!(code, 1);
    assert!(text.contains("x0 must be positive"), "{text}");

    let budget = dir.path().join("budget.conf");
    std::fs::write(
        &budget,
        "name = budget\nx0 = 1\n[kernel]\nid = power_decay\n[nonlinearity]\nid = log_linear\n[solver]\nmax_nodes = 40\n",
    )
    .unwrap();
    let (code, text) = run(&["solve"], &budget, dir.path());
    assert_eq!(code, 3);
    assert!(text.contains("StepBudgetExhausted"), "{text}");

    // A growth rate was asked for but the run blew up.
    let mismatch = dir.path().join("mismatch.conf");
    let text = std::fs::read_to_string(scenario("example_5_1"))
        .unwrap()
        .replace("blowup_rate", "growth_rate")
        .replace("power_decay:omega=1,alpha=0", "stretched_exp:omega=1,gamma=1");
    std::fs::write(&mismatch, text).unwrap();
    let (code, text) = run(&["rates"], &mismatch, dir.path());
    assert_eq!(code, 2);
    assert!(text.contains("growth_rate requested but the run blew up"), "{text}");
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["sweep", "--threads", "2"], &scenario("beta_sweep"), dir.path());
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_path(dir.path().join("beta_sweep_sweep.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["cell", "beta", "status", "T_est", "limit", "verdict", "perturbation"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| &r[2] == "blowup" && &r[5] == "CONSISTENT"));

    let (code, _) = run(&["sweep", "--grid", "beta="], &scenario("beta_sweep"), dir.path());
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("beta_sweep_sweep.csv")).unwrap();
    assert_eq!(csv, "cell,beta,status,T_est,limit,verdict,perturbation\n");
}

#[test]
fn rate_scale_sweep_flips() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["sweep", "--t-end", "20"], &scenario("rate_scale_sweep"), dir.path());
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_path(dir.path().join("rate_scale_sweep_sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(&rows[0][6], "PRESERVING");
    assert_ne!(&rows[0][5], "INCONSISTENT");
    assert_eq!(&rows[1][6], "NON-PRESERVING");
    assert_eq!(&rows[1][5], "INCONSISTENT");
}
