//! Scenario files: flat `key = value` text with section headers.
//!
//! ```text
//! name = example_5_1
//! x0 = 1
//!
//! [kernel]
//! id = power_decay:omega=1,alpha=0
//!
//! [nonlinearity]
//! id = power_plus_one:beta=2
//!
//! [forcing]
//! id = zero
//!
//! [solver]
//! t_end = 10
//! rel_tol = 1e-6
//!
//! [diagnostics]
//! requested = blowup_rate
//! rel_band = 0.05
//!
//! [sweep]
//! beta = 1.5, 2, 3
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ini::Ini;
use volterra_blowup::asymptotics::Bands;
use volterra_blowup::kernel::L1Norm;
use volterra_blowup::{catalog, Forcing, Kernel, Nonlinearity, SolverConfig};

/// Tolerance of the kernel integrability check made at load time.
const L1_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    BlowupRate,
    GrowthRate,
    Perturbation,
}

impl FromStr for Diagnostic {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blowup_rate" => Ok(Diagnostic::BlowupRate),
            "growth_rate" => Ok(Diagnostic::GrowthRate),
            "perturbation" => Ok(Diagnostic::Perturbation),
            other => bail!("unknown diagnostic `{other}` (expected blowup_rate, growth_rate or perturbation)"),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Diagnostic::BlowupRate => "blowup_rate",
            Diagnostic::GrowthRate => "growth_rate",
            Diagnostic::Perturbation => "perturbation",
        })
    }
}

/// Solver settings that override [`SolverConfig::default`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverOverrides {
    pub t_end: Option<f64>,
    pub rel_tol: Option<f64>,
    pub initial_step: Option<f64>,
    pub min_step: Option<f64>,
    pub max_step: Option<f64>,
    pub blowup_threshold: Option<f64>,
    pub crossing_ratio: Option<f64>,
    pub max_nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub kernel: String,
    pub nonlinearity: String,
    pub forcing: String,
    pub x0: f64,
    pub solver: SolverOverrides,
    pub diagnostics: BTreeSet<Diagnostic>,
    pub rel_band: Option<f64>,
    /// Sweep axes in file order.
    pub sweep: Vec<(String, Vec<f64>)>,
}

/// Catalog objects and solver settings of a loaded scenario.
pub struct Resolved {
    pub kernel: Kernel,
    pub nonlinearity: Nonlinearity,
    pub forcing: Forcing,
    pub config: SolverConfig,
    pub bands: Bands,
}

fn number<T: FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| anyhow!("[{section}] {key}: `{value}` is not a valid number"))
}

fn number_list(section: &str, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| number(section, key, v))
        .collect()
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text)?;
        let mut name = None;
        let mut x0 = None;
        let mut kernel = None;
        let mut nonlinearity = None;
        let mut forcing = None;
        let mut solver = SolverOverrides::default();
        let mut diagnostics = BTreeSet::new();
        let mut rel_band = None;
        let mut sweep = Vec::new();
        for (section, props) in ini.iter() {
            let sec = section.unwrap_or("");
            for (key, value) in props.iter() {
                match (sec, key) {
                    ("", "name") => name = Some(value.trim().to_string()),
                    ("", "x0") => x0 = Some(number(sec, key, value)?),
                    ("kernel", "id") => kernel = Some(value.trim().to_string()),
                    ("nonlinearity", "id") => nonlinearity = Some(value.trim().to_string()),
                    ("forcing", "id") => forcing = Some(value.trim().to_string()),
                    ("solver", "t_end") => solver.t_end = Some(number(sec, key, value)?),
                    ("solver", "rel_tol") => solver.rel_tol = Some(number(sec, key, value)?),
                    ("solver", "initial_step") => solver.initial_step = Some(number(sec, key, value)?),
                    ("solver", "min_step") => solver.min_step = Some(number(sec, key, value)?),
                    ("solver", "max_step") => solver.max_step = Some(number(sec, key, value)?),
                    ("solver", "blowup_threshold") => solver.blowup_threshold = Some(number(sec, key, value)?),
                    ("solver", "crossing_ratio") => solver.crossing_ratio = Some(number(sec, key, value)?),
                    ("solver", "max_nodes") => solver.max_nodes = Some(number(sec, key, value)?),
                    ("diagnostics", "requested") => {
                        for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                            diagnostics.insert(item.parse()?);
                        }
                    }
                    ("diagnostics", "rel_band") => rel_band = Some(number(sec, key, value)?),
                    ("sweep", axis) => {
                        axis_target(axis)?;
                        sweep.push((axis.to_string(), number_list(sec, key, value)?));
                    }
                    _ => bail!("unknown key `{key}` in section [{sec}]"),
                }
            }
        }
        let missing = |what: &str| anyhow!("missing {what}");
        Ok(Self {
            name: name.ok_or_else(|| missing("`name`"))?,
            kernel: kernel.ok_or_else(|| missing("[kernel] id"))?,
            nonlinearity: nonlinearity.ok_or_else(|| missing("[nonlinearity] id"))?,
            forcing: forcing.unwrap_or_else(|| "zero".to_string()),
            x0: x0.ok_or_else(|| missing("`x0`"))?,
            solver,
            diagnostics,
            rel_band,
            sweep,
        })
    }

    /// The scenario in file form; [`Scenario::parse`] reads it back unchanged.
    pub fn to_file_string(&self) -> String {
        let mut ini = Ini::new();
        ini.with_general_section().set("name", &self.name).set("x0", self.x0.to_string());
        ini.with_section(Some("kernel")).set("id", &self.kernel);
        ini.with_section(Some("nonlinearity")).set("id", &self.nonlinearity);
        ini.with_section(Some("forcing")).set("id", &self.forcing);
        let s = &self.solver;
        let fields: [(&str, Option<String>); 8] = [
            ("t_end", s.t_end.map(|v| v.to_string())),
            ("rel_tol", s.rel_tol.map(|v| v.to_string())),
            ("initial_step", s.initial_step.map(|v| v.to_string())),
            ("min_step", s.min_step.map(|v| v.to_string())),
            ("max_step", s.max_step.map(|v| v.to_string())),
            ("blowup_threshold", s.blowup_threshold.map(|v| v.to_string())),
            ("crossing_ratio", s.crossing_ratio.map(|v| v.to_string())),
            ("max_nodes", s.max_nodes.map(|v| v.to_string())),
        ];
        if fields.iter().any(|f| f.1.is_some()) {
            let mut sec = ini.with_section(Some("solver"));
            for (k, v) in fields {
                if let Some(v) = v {
                    sec.set(k, v);
                }
            }
        }
        if !self.diagnostics.is_empty() || self.rel_band.is_some() {
            let mut sec = ini.with_section(Some("diagnostics"));
            if !self.diagnostics.is_empty() {
                let list: Vec<String> = self.diagnostics.iter().map(|d| d.to_string()).collect();
                sec.set("requested", list.join(", "));
            }
            if let Some(b) = self.rel_band {
                sec.set("rel_band", b.to_string());
            }
        }
        if !self.sweep.is_empty() {
            let mut sec = ini.with_section(Some("sweep"));
            for (axis, values) in &self.sweep {
                let list: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                sec.set(axis.as_str(), list.join(", "));
            }
        }
        let mut buf = Vec::new();
        ini.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is UTF-8")
    }

    pub fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        let s = &self.solver;
        cfg.t_end = s.t_end.unwrap_or(cfg.t_end);
        cfg.rel_tol = s.rel_tol.unwrap_or(cfg.rel_tol);
        cfg.initial_step = s.initial_step.unwrap_or(cfg.initial_step);
        cfg.min_step = s.min_step.unwrap_or(cfg.min_step);
        cfg.max_step = s.max_step.unwrap_or(cfg.max_step);
        cfg.blowup_threshold = s.blowup_threshold.unwrap_or(cfg.blowup_threshold);
        cfg.crossing_ratio = s.crossing_ratio.unwrap_or(cfg.crossing_ratio);
        cfg.max_nodes = s.max_nodes.unwrap_or(cfg.max_nodes);
        cfg
    }

    /// Resolve ids against the catalogs and check the hypotheses that can be
    /// checked before a run.
    pub fn resolve(&self) -> Result<Resolved> {
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            bail!("x0 must be positive, got {}", self.x0);
        }
        let nonlinearity = catalog::nonlinearity(&self.nonlinearity)?;
        nonlinearity.validate()?;
        let kernel = catalog::kernel(&self.kernel)?;
        kernel.validate()?;
        let forcing = catalog::forcing(&self.forcing, &nonlinearity)?;
        let config = self.config();
        config.validate()?;
        forcing.validate(config.t_end)?;
        if self.diagnostics.contains(&Diagnostic::GrowthRate) {
            match kernel.l1_norm(L1_TOL)? {
                L1Norm::Finite(_) => {}
                other => bail!("growth_rate needs an integrable kernel; {} has L1 norm {other:?}", kernel.label()),
            }
        }
        let bands = self.rel_band.map_or_else(Bands::default, Bands::with_rel_band);
        if !(bands.rel_band > 0.0 && bands.rel_band < 1.0) {
            bail!("rel_band must lie in (0, 1), got {}", bands.rel_band);
        }
        Ok(Resolved { kernel, nonlinearity, forcing, config, bands })
    }
}

/// Which id a sweep axis edits, and under which parameter name.
pub fn axis_target(axis: &str) -> Result<(&'static str, String)> {
    if let Some((section, param)) = axis.split_once('.') {
        let section = match section {
            "kernel" => "kernel",
            "nonlinearity" => "nonlinearity",
            "forcing" => "forcing",
            other => bail!("sweep axis `{axis}`: unknown section `{other}`"),
        };
        return Ok((section, param.to_string()));
    }
    Ok(match axis {
        "beta" | "p" => ("nonlinearity", axis.to_string()),
        "omega" | "gamma" => ("kernel", axis.to_string()),
        "K" | "alpha" => ("forcing", axis.to_string()),
        "x0" => ("", "x0".to_string()),
        other => bail!("unknown sweep axis `{other}` (use beta, p, omega, gamma, K, alpha, x0 or section.param)"),
    })
}

/// `id` with `key` set to `value`, replacing an existing setting.
pub fn with_param(id: &str, key: &str, value: f64) -> String {
    let (name, params) = id.split_once(':').unwrap_or((id, ""));
    let mut pairs: Vec<(String, String)> = params
        .split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').unwrap_or((p, ""));
            (k.trim().to_string(), v.trim().to_string())
        })
        .collect();
    match pairs.iter_mut().find(|(k, _)| k == key) {
        Some(pair) => pair.1 = value.to_string(),
        None => pairs.push((key.to_string(), value.to_string())),
    }
    let joined: Vec<String> = pairs.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{name}:{}", joined.join(","))
}

impl Scenario {
    /// The scenario with one sweep coordinate applied.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self> {
        let mut s = self.clone();
        match axis_target(axis)? {
            ("kernel", p) => s.kernel = with_param(&s.kernel, &p, value),
            ("nonlinearity", p) => s.nonlinearity = with_param(&s.nonlinearity, &p, value),
            ("forcing", p) => s.forcing = with_param(&s.forcing, &p, value),
            _ => s.x0 = value,
        }
        Ok(s)
    }

    /// One scenario per point of the Cartesian product of the sweep axes.
    /// No axes, or an axis without values, gives no cells.
    pub fn cells(&self) -> Result<Vec<(Vec<f64>, Scenario)>> {
        if self.sweep.is_empty() || self.sweep.iter().any(|(_, v)| v.is_empty()) {
            return Ok(Vec::new());
        }
        let mut cells = vec![(Vec::new(), Scenario { sweep: Vec::new(), ..self.clone() })];
        for (axis, values) in &self.sweep {
            let mut next = Vec::with_capacity(cells.len() * values.len());
            for (coords, base) in &cells {
                for &v in values {
                    let mut c = coords.clone();
                    c.push(v);
                    next.push((c, base.with_axis(axis, v)?));
                }
            }
            cells = next;
        }
        for (i, (_, s)) in cells.iter_mut().enumerate() {
            s.name = format!("{}_cell{}", self.name, i + 1);
        }
        Ok(cells)
    }
}
