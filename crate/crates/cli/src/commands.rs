use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use volterra_blowup::asymptotics::{
    blowup_rate_diagnostic, default_ladder, growth_rate_diagnostic, perturbation_criterion, PerturbationClass,
    RateDiagnostic, Verdict,
};
use volterra_blowup::nonlinearity::{check_osgood_equivalence, classify_osgood, CutoffLadder, OsgoodClass};
use volterra_blowup::{solve, Status, Trajectory};

use crate::scenario::{Diagnostic, Resolved, Scenario};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_UNDECIDED: u8 = 2;
pub const EXIT_ABORT: u8 = 3;

const OSGOOD_TOL: f64 = 1e-2;

pub fn classify(scenario: &Scenario, out: &mut dyn Write) -> Result<u8> {
    let r = scenario.resolve()?;
    let ladder = CutoffLadder::decades();
    let verdict = classify_osgood(&r.nonlinearity, 1.0, &ladder, OSGOOD_TOL)?;
    writeln!(out, "nonlinearity: {}", r.nonlinearity.label())?;
    writeln!(out, "{:>12}  {:>16}", "cutoff", "partial integral")?;
    for (k, i) in &verdict.partial_integral_at_cutoffs {
        writeln!(out, "{k:>12.3e}  {i:>16.10}")?;
    }
    writeln!(out, "fitted increment ratio: {:.4}", verdict.fitted_ratio)?;
    writeln!(out, "fitted log power: {:.4}", verdict.fitted_log_power)?;
    if let Some(tail) = verdict.extrapolated_tail {
        writeln!(out, "extrapolated tail: {tail:.6e}")?;
    }
    match check_osgood_equivalence(&r.nonlinearity, &ladder, OSGOOD_TOL) {
        Ok(true) => writeln!(out, "integral criteria agree: yes")?,
        Ok(false) => writeln!(out, "integral criteria agree: NO")?,
        Err(e) => writeln!(out, "integral criteria agree: not checked ({e})")?,
    }
    let (line, code) = match verdict.classification {
        OsgoodClass::Finite => ("FINITE → blow-up predicted", EXIT_OK),
        OsgoodClass::Infinite => ("INFINITE → global solution predicted", EXIT_OK),
        OsgoodClass::Undecided => ("UNDECIDED", EXIT_UNDECIDED),
    };
    writeln!(out, "{line}")?;
    Ok(code)
}

fn status_word(status: &Status) -> String {
    match status {
        Status::BlowUpDetected { .. } => "blowup".into(),
        Status::ReachedHorizon { .. } => "horizon".into(),
        Status::Aborted(reason) => format!("aborted: {reason}"),
    }
}

fn run(r: &Resolved, x0: f64) -> Result<Trajectory> {
    Ok(solve(&r.kernel, &r.nonlinearity, &r.forcing, x0, &r.config)?)
}

fn gnuplot_script(name: &str, csv_name: &str, status: &Status) -> String {
    let logscale = if matches!(status, Status::ReachedHorizon { .. }) { "" } else { "set logscale y\n" };
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset ylabel 'x(t)'\n{logscale}\
         set title '{name} ({})'\nplot '{csv_name}' using 1:2 with lines\n",
        status_word(status)
    )
}

/// Write the trajectory CSV, the crossing table after a blow-up and a
/// gnuplot script. Returns the trajectory path.
fn write_run(dir: &Path, name: &str, traj: &Trajectory) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_name = format!("{name}.csv");
    let path = dir.join(&csv_name);
    fs::write(&path, traj.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    if matches!(traj.status, Status::BlowUpDetected { .. }) {
        fs::write(dir.join(format!("{name}_crossings.csv")), traj.crossings_csv())?;
    }
    fs::write(dir.join(format!("{name}.gp")), gnuplot_script(name, &csv_name, &traj.status))?;
    Ok(path)
}

pub fn solve_cmd(scenario: &Scenario, dir: &Path, out: &mut dyn Write) -> Result<u8> {
    let r = scenario.resolve()?;
    let traj = run(&r, scenario.x0)?;
    let path = write_run(dir, &scenario.name, &traj)?;
    writeln!(out, "wrote {}", path.display())?;
    match &traj.status {
        Status::BlowUpDetected { t_est, t_err } => {
            writeln!(out, "blowup T≈{t_est:.10} (extrapolation err {t_err:.1e})")?;
            Ok(EXIT_OK)
        }
        Status::ReachedHorizon { t_end } => {
            writeln!(out, "horizon t_end={t_end} x={:.10e}", traj.last_value())?;
            Ok(EXIT_OK)
        }
        Status::Aborted(reason) => {
            writeln!(out, "aborted: {reason}")?;
            Ok(EXIT_ABORT)
        }
    }
}

/// Diagnostics for one run: the rate diagnostic matching the run's outcome
/// (or the requested ones) and the perturbation criterion when requested.
struct Rates {
    rate: Option<RateDiagnostic>,
    perturbation: Option<PerturbationClass>,
    perturbation_diag: Option<RateDiagnostic>,
    /// Requested diagnostics that do not apply to the outcome.
    mismatches: Vec<String>,
}

fn rates_for(scenario: &Scenario, r: &Resolved, traj: &Trajectory) -> Result<Rates> {
    let w0 = r.kernel.value_at_zero();
    let want = |d| scenario.diagnostics.is_empty() || scenario.diagnostics.contains(&d);
    let mut mismatches = Vec::new();
    let rate = match traj.status {
        Status::BlowUpDetected { .. } => {
            if scenario.diagnostics.contains(&Diagnostic::GrowthRate) {
                mismatches.push("growth_rate requested but the run blew up".to_string());
            }
            if want(Diagnostic::BlowupRate) {
                Some(blowup_rate_diagnostic(traj, &r.nonlinearity, w0, r.bands)?)
            } else {
                None
            }
        }
        Status::ReachedHorizon { .. } => {
            if scenario.diagnostics.contains(&Diagnostic::BlowupRate) {
                mismatches.push("blowup_rate requested but the run reached the horizon".to_string());
            }
            if want(Diagnostic::GrowthRate) {
                Some(growth_rate_diagnostic(traj, &r.nonlinearity, w0, r.bands)?)
            } else {
                None
            }
        }
        Status::Aborted(_) => None,
    };
    let (perturbation, perturbation_diag) = if scenario.diagnostics.contains(&Diagnostic::Perturbation) {
        let rep = perturbation_criterion(&r.forcing, &r.nonlinearity, w0, &default_ladder(), r.bands)?;
        (Some(rep.class), Some(rep.diagnostic))
    } else {
        (None, None)
    };
    Ok(Rates { rate, perturbation, perturbation_diag, mismatches })
}

pub fn rates(scenario: &Scenario, dir: &Path, out: &mut dyn Write) -> Result<u8> {
    let r = scenario.resolve()?;
    let traj = run(&r, scenario.x0)?;
    if let Status::Aborted(reason) = &traj.status {
        writeln!(out, "aborted: {reason}")?;
        return Ok(EXIT_ABORT);
    }
    let rates = rates_for(scenario, &r, &traj)?;
    fs::create_dir_all(dir)?;
    let mut code = EXIT_OK;
    for m in &rates.mismatches {
        writeln!(out, "{m}")?;
        code = EXIT_UNDECIDED;
    }
    if let Some(d) = &rates.rate {
        writeln!(out, "{d}")?;
        fs::write(dir.join(format!("{}_rate.csv", scenario.name)), d.to_csv())?;
        if d.verdict != Verdict::Consistent {
            code = EXIT_UNDECIDED;
        }
    }
    if let (Some(class), Some(d)) = (rates.perturbation, &rates.perturbation_diag) {
        writeln!(out, "PerturbationRate limit≈{:.3} target={:.3} {class}", d.extrapolated_limit, d.target)?;
        fs::write(dir.join(format!("{}_perturbation.csv", scenario.name)), d.to_csv())?;
        if class != PerturbationClass::Preserving {
            code = EXIT_UNDECIDED;
        }
    }
    Ok(code)
}

pub struct SweepOptions {
    pub threads: Option<usize>,
    pub emit_configs: bool,
}

struct Row {
    cell: usize,
    coords: Vec<f64>,
    status: String,
    t_est: Option<f64>,
    limit: Option<f64>,
    verdict: String,
    perturbation: String,
    failed: bool,
}

fn sweep_cell(cell: usize, coords: Vec<f64>, scenario: &Scenario, dir: &Path) -> Row {
    let mut row = Row {
        cell,
        coords,
        status: String::new(),
        t_est: None,
        limit: None,
        verdict: String::new(),
        perturbation: String::new(),
        failed: true,
    };
    let outcome = (|| -> Result<()> {
        let r = match scenario.resolve() {
            Ok(r) => r,
            Err(e) => {
                row.status = format!("config error: {e:#}");
                return Ok(());
            }
        };
        let traj = run(&r, scenario.x0)?;
        write_run(dir, &scenario.name, &traj)?;
        row.status = status_word(&traj.status);
        if let Status::BlowUpDetected { t_est, .. } = traj.status {
            row.t_est = Some(t_est);
        }
        if matches!(traj.status, Status::Aborted(_)) {
            return Ok(());
        }
        row.failed = false;
        let rates = rates_for(scenario, &r, &traj)?;
        if let Some(d) = rates.rate {
            row.limit = Some(d.extrapolated_limit);
            row.verdict = d.verdict.to_string();
        }
        if let Some(class) = rates.perturbation {
            row.perturbation = class.to_string();
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = format!("error: {e:#}");
        row.failed = true;
    }
    row
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep(scenario: &Scenario, dir: &Path, opts: &SweepOptions, out: &mut dyn Write) -> Result<u8> {
    let cells = scenario.cells()?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    if opts.emit_configs {
        for (_, cell) in &cells {
            fs::write(dir.join(format!("{}.conf", cell.name)), cell.to_file_string())?;
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let mut rows: Vec<Row> = pool.install(|| {
        cells
            .into_par_iter()
            .enumerate()
            .map(|(i, (coords, cell))| sweep_cell(i + 1, coords, &cell, dir))
            .collect()
    });
    rows.sort_by_key(|r| r.cell);

    let path = dir.join(format!("{}_sweep.csv", scenario.name));
    let mut csv = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["cell".to_string()];
    header.extend(scenario.sweep.iter().map(|(axis, _)| axis.clone()));
    header.extend(["status", "T_est", "limit", "verdict", "perturbation"].map(String::from));
    csv.write_record(&header)?;
    for row in &rows {
        let mut rec = vec![row.cell.to_string()];
        rec.extend(row.coords.iter().map(|c| c.to_string()));
        rec.extend([
            row.status.clone(),
            fmt_opt(row.t_est),
            fmt_opt(row.limit),
            row.verdict.clone(),
            row.perturbation.clone(),
        ]);
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    writeln!(out, "wrote {} ({} cells)", path.display(), rows.len())?;
    for row in &rows {
        writeln!(out, "cell {}: {} {}", row.cell, row.status, row.verdict)?;
    }
    if rows.is_empty() || !rows.iter().all(|r| r.failed) {
        return Ok(EXIT_OK);
    }
    Ok(if rows.iter().all(|r| r.status.starts_with("config error")) { EXIT_CONFIG } else { EXIT_ABORT })
}
