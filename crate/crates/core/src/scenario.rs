//! Scenario files and the commands behind the `hjb` binary.
//!
//! A scenario is a flat TOML file. Every field is optional except the
//! example id; defaults reproduce the benchmark setups:
//!
//! ```toml
//! example = "II"
//! case = 2                  # Example II preset (1 or 2), or give `lambdas`
//! method = "proposed"       # or "sola"
//! x0 = [2.0, -2.0]
//! gamma = 0.5
//! q0 = [[1.0, 0.0], [0.0, 1.0]]
//! r = [[1.0, 0.0], [0.0, 1.0]]   # augmented (n + 1) x (n + 1)
//! dt = 0.001
//! horizon = 40.0
//!
//! [reference]               # optional, proposed method only
//! preset = "sinusoid"       # "zero", "sinusoid" or "example-one-feasible"
//! amplitude = 1.0
//! frequency = 1.0
//! ```
//!
//! Outputs of `run`: `trajectory.csv` with header
//! `t,x1..xm,tau1..taun,V,stage_cost`, `metrics.toml` with keys
//! `itse, cumulative_cost, convergence_time_s, wall_clock_s, status`, and
//! optionally `plot.svg`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{builtin_example, DynamicsModel, ExampleIIParams, ExampleId, StateVector};
use crate::error::{ControlError, Result};
use crate::metrics::{comparison_table, median_wall_clock, wall_clock, ComparisonTable, MetricsReport, RunOutcome};
use crate::regulation::{verify_gamma_over_grid, ClosedFormRegulator, CostConfig, GammaReport, DEFAULT_DEADZONE_EPS};
use crate::simulation::{
    lyapunov_series, simulate_closed_loop, simulate_tracking, IntegratorConfig, Method as IntegrationMethod,
    Trajectory, DEFAULT_DT, DEFAULT_HORIZON,
};
use crate::sola::{simulate_sola, BasisSet, SolaConfig};
use crate::tracking::ReferenceTrajectory;

/// Horizon for Example II case 2: its first state decays only at the open-loop
/// rate 0.2/s, so 10 s is not enough to settle below 1e-3.
pub const EXAMPLE_II_CASE_2_HORIZON: f64 = 40.0;

/// Process exit codes of the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Usage = 1,
    NotConverged = 2,
    Inadmissible = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ControlMethod {
    #[default]
    Proposed,
    Sola,
}

impl std::str::FromStr for ControlMethod {
    type Err = ControlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(ControlMethod::Proposed),
            "sola" => Ok(ControlMethod::Sola),
            other => Err(ControlError::Config(format!("unknown method `{other}` (proposed, sola)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub preset: String,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub frequency: f64,
}

fn one() -> f64 {
    1.0
}

impl ReferenceConfig {
    pub fn build(&self, state_dim: usize) -> Result<ReferenceTrajectory> {
        if !(self.amplitude.is_finite() && self.frequency.is_finite()) {
            return Err(ControlError::Config("reference amplitude/frequency must be finite".into()));
        }
        match self.preset.as_str() {
            "zero" => Ok(ReferenceTrajectory::zero(state_dim)),
            "sinusoid" => Ok(ReferenceTrajectory::sinusoid(state_dim, self.amplitude, self.frequency)),
            "example-one-feasible" if state_dim == 2 => {
                Ok(ReferenceTrajectory::example_one_feasible(self.amplitude, self.frequency))
            }
            "example-one-feasible" => Err(ControlError::Dimension {
                context: "example-one-feasible reference",
                expected: 2,
                actual: state_dim,
            }),
            other => Err(ControlError::Config(format!(
                "unknown reference preset `{other}` (zero, sinusoid, example-one-feasible)"
            ))),
        }
    }
}

/// Raw scenario as read from a file or assembled from flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub example: Option<String>,
    pub case: Option<u8>,
    pub lambdas: Option<[f64; 4]>,
    pub method: Option<ControlMethod>,
    pub x0: Option<Vec<f64>>,
    pub q0: Option<Vec<Vec<f64>>>,
    pub r: Option<Vec<Vec<f64>>>,
    pub gamma: Option<f64>,
    pub deadzone_eps: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub integrator: Option<IntegrationMethod>,
    pub reference: Option<ReferenceConfig>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ControlError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| ControlError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ControlError::Parse(e.to_string()))
    }

    /// Built-in setup for an example (and Example II case).
    pub fn preset(example: ExampleId, case: Option<u8>) -> Self {
        ScenarioConfig {
            example: Some(example.to_string()),
            case,
            ..Default::default()
        }
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged_with(mut self, other: ScenarioConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(example, case, lambdas, method, x0, q0, r, gamma, deadzone_eps, dt, horizon, integrator, reference);
        self
    }

    /// Validates every dimension and builds a runnable scenario. Nothing is
    /// simulated here.
    pub fn resolve(&self) -> Result<Scenario> {
        let example: ExampleId = self
            .example
            .as_deref()
            .ok_or_else(|| ControlError::Config("scenario needs an `example`".into()))?
            .parse()?;
        let params = match example {
            ExampleId::II => Some(match (self.lambdas, self.case) {
                (Some(l), None) => ExampleIIParams::new(l[0], l[1], l[2], l[3])?,
                (None, Some(c)) => ExampleIIParams::case(c)?,
                (Some(_), Some(_)) => {
                    return Err(ControlError::Config("give either `case` or `lambdas`, not both".into()))
                }
                (None, None) => {
                    return Err(ControlError::Config("Example II needs `case` (1 or 2) or `lambdas`".into()))
                }
            }),
            _ => {
                if self.case.is_some() || self.lambdas.is_some() {
                    return Err(ControlError::Config(format!(
                        "`case`/`lambdas` only apply to Example II, not {example}"
                    )));
                }
                None
            }
        };
        let model = builtin_example(example, params)?;
        let (m, n) = (model.state_dim(), model.input_dim());
        let label = match (example, self.case, self.lambdas) {
            (ExampleId::II, Some(c), _) => format!("II case {c}"),
            (ExampleId::II, None, Some(_)) => "II custom".to_string(),
            _ => example.to_string(),
        };

        let (default_x0, default_gamma) = match example {
            ExampleId::I => (vec![5.0, -5.0], 1.0),
            ExampleId::II => (vec![2.0, -2.0], 0.5),
            ExampleId::III => (vec![4.0, -4.0], 0.1),
        };
        let x0 = self.x0.clone().unwrap_or(default_x0);
        if x0.len() != m {
            return Err(ControlError::Dimension {
                context: "x0",
                expected: m,
                actual: x0.len(),
            });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::Config("x0 must be finite".into()));
        }

        let q0 = match &self.q0 {
            Some(rows) => matrix_from_rows(rows, m, m, "q0")?,
            None => DMatrix::identity(m, m),
        };
        let r = match &self.r {
            Some(rows) => matrix_from_rows(rows, n + 1, n + 1, "r (augmented)")?,
            None => DMatrix::identity(n + 1, n + 1),
        };
        let cost = CostConfig::new(
            q0,
            r,
            self.gamma.unwrap_or(default_gamma),
            self.deadzone_eps.unwrap_or(DEFAULT_DEADZONE_EPS),
        )?;

        let default_horizon = if example == ExampleId::II && params == Some(ExampleIIParams::CASE_2) {
            EXAMPLE_II_CASE_2_HORIZON
        } else {
            DEFAULT_HORIZON
        };
        let integrator = IntegratorConfig::new(
            self.dt.unwrap_or(DEFAULT_DT),
            self.horizon.unwrap_or(default_horizon),
        )?
        .with_method(self.integrator.unwrap_or_default());

        let method = self.method.unwrap_or_default();
        let reference = match &self.reference {
            Some(rc) => {
                if method != ControlMethod::Proposed {
                    return Err(ControlError::Config("tracking is only available for the proposed method".into()));
                }
                let r = rc.build(m)?;
                r.validate(integrator.horizon)?;
                Some(r)
            }
            None => None,
        };
        let baseline = match method {
            ControlMethod::Proposed => None,
            ControlMethod::Sola => Some(match example {
                ExampleId::I | ExampleId::II => (BasisSet::example_one(), SolaConfig::example_one()),
                ExampleId::III => (BasisSet::example_three(), SolaConfig::example_three()),
            }),
        };

        Ok(Scenario {
            example,
            label,
            model,
            method,
            x0: DVector::from_vec(x0),
            cost,
            integrator,
            reference,
            baseline,
        })
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &'static str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(ControlError::Dimension {
            context: what,
            expected: nrows,
            actual: rows.len(),
        });
    }
    for row in rows {
        if row.len() != ncols {
            return Err(ControlError::Dimension {
                context: what,
                expected: ncols,
                actual: row.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// A validated scenario ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub example: ExampleId,
    /// Table label, e.g. `"II case 1"`.
    pub label: String,
    pub model: DynamicsModel,
    pub method: ControlMethod,
    pub x0: StateVector,
    pub cost: CostConfig,
    pub integrator: IntegratorConfig,
    pub reference: Option<ReferenceTrajectory>,
    pub baseline: Option<(BasisSet, SolaConfig)>,
}

impl Scenario {
    /// Method name as printed in tables.
    pub fn method_label(&self) -> &'static str {
        match (self.method, self.example) {
            (ControlMethod::Proposed, _) => "Proposed method",
            (ControlMethod::Sola, ExampleId::III) => "HJI-SOLA",
            (ControlMethod::Sola, _) => "HJB-SOLA",
        }
    }

    pub fn simulate(&self) -> Result<Trajectory> {
        match (&self.baseline, &self.reference) {
            (Some((basis, cfg)), _) => Ok(simulate_sola(&self.model, basis, cfg, &self.x0, &self.integrator)?.trajectory),
            (None, Some(reference)) => simulate_tracking(&self.model, &self.cost, reference, &self.x0, &self.integrator),
            (None, None) => {
                let regulator = ClosedFormRegulator::new(self.model.clone(), self.cost.clone())?;
                let mut traj = simulate_closed_loop(&self.model, &regulator, &self.x0, &self.integrator)?;
                traj.meta.gamma = Some(self.cost.gamma());
                Ok(traj)
            }
        }
    }

    /// Simulates `repeats` times and reports metrics with the median wall time.
    pub fn execute(&self, repeats: usize) -> Result<(Trajectory, MetricsReport)> {
        let (traj, secs) = if repeats <= 1 {
            wall_clock(|| self.simulate())
        } else {
            median_wall_clock(repeats, || self.simulate())
        };
        let traj = traj?;
        let report = MetricsReport::from_trajectory(self.label.clone(), self.method_label(), &traj, secs)?;
        Ok((traj, report))
    }
}

/// `t,x1..xm,tau1..taun,V,stage_cost`, one row per sample. `V` is
/// `|e|^2 / 2` of the error signal.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let m = traj.state_dim();
    let n = traj.input_dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("tau{i}")));
    header.push("V".into());
    header.push("stage_cost".into());

    let lyap = lyapunov_series(traj)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for k in 0..traj.len() {
        let mut row = Vec::with_capacity(header.len());
        row.push(traj.times[k].to_string());
        row.extend(traj.states[k].iter().map(f64::to_string));
        row.extend(traj.controls[k].iter().map(f64::to_string));
        row.push(lyap.values[k].to_string());
        row.push(traj.stage_costs[k].to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ControlError::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ControlError::Parse(e.to_string()))
}

fn csv_err(e: csv::Error) -> ControlError {
    ControlError::Parse(e.to_string())
}

/// Three stacked line charts (states, controls, `V`) as standalone SVG.
pub fn trajectory_svg(traj: &Trajectory) -> Result<String> {
    const WIDTH: f64 = 720.0;
    const PANEL: f64 = 200.0;
    const PAD: f64 = 40.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

    let lyap = lyapunov_series(traj)?;
    let panels: [(&str, Vec<Vec<f64>>); 3] = [
        ("states", (0..traj.state_dim()).map(|i| traj.states.iter().map(|x| x[i]).collect()).collect()),
        ("control", (0..traj.input_dim()).map(|i| traj.controls.iter().map(|u| u[i]).collect()).collect()),
        ("V = |x|^2/2", vec![lyap.values]),
    ];
    let t_end = traj.times.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let height = 3.0 * (PANEL + PAD) + PAD;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, (title, series)) in panels.iter().enumerate() {
        let top = PAD + p as f64 * (PANEL + PAD);
        let (lo, hi) = series
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0) };
        let plot_w = WIDTH - 2.0 * PAD;
        let _ = writeln!(
            svg,
            r##"<rect x="{PAD}" y="{top}" width="{plot_w}" height="{PANEL}" fill="none" stroke="#888"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="12">{title} [{lo:.3e}, {hi:.3e}] over t in [0, {t_end}]</text>"#,
            top - 6.0
        );
        // At most ~2000 points per line.
        let stride = (traj.len() / 2000).max(1);
        for (s, values) in series.iter().enumerate() {
            let mut points = String::new();
            for k in (0..values.len()).step_by(stride) {
                if !values[k].is_finite() {
                    continue;
                }
                let x = PAD + plot_w * traj.times[k] / t_end;
                let y = top + PANEL * (1.0 - (values[k] - lo) / (hi - lo));
                let _ = write!(points, "{x:.2},{y:.2} ");
            }
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                COLORS[s % COLORS.len()],
                points.trim_end()
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| ControlError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    fs::write(path, contents).map_err(|source| ControlError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Where `run` writes its files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub trajectory: PathBuf,
    pub metrics: PathBuf,
    pub plot: Option<PathBuf>,
}

impl RunOutputs {
    pub fn in_dir(dir: &Path, plot: bool) -> Self {
        RunOutputs {
            trajectory: dir.join("trajectory.csv"),
            metrics: dir.join("metrics.toml"),
            plot: plot.then(|| dir.join("plot.svg")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: MetricsReport,
    pub exit: ExitCode,
}

/// Resolves, simulates, and writes trajectory, metrics and (optionally) a plot.
/// A non-converged run still writes every file and exits with
/// [`ExitCode::NotConverged`].
pub fn cmd_run(config: &ScenarioConfig, outputs: &RunOutputs) -> Result<RunSummary> {
    let scenario = config.resolve()?;
    let (traj, report) = scenario.execute(1)?;
    write_file(&outputs.trajectory, &trajectory_csv(&traj)?)?;
    write_file(&outputs.metrics, &report.to_key_values())?;
    if let Some(plot) = &outputs.plot {
        write_file(plot, &trajectory_svg(&traj)?)?;
    }
    let exit = if report.status.is_converged() {
        ExitCode::Ok
    } else {
        ExitCode::NotConverged
    };
    Ok(RunSummary { report, exit })
}

/// One benchmark row selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchCase {
    pub example: ExampleId,
    pub case: Option<u8>,
}

impl BenchCase {
    /// All benchmark setups: I, II case 1, II case 2, III.
    pub fn all() -> Vec<BenchCase> {
        ExampleId::ALL.iter().flat_map(|e| Self::for_example(*e)).collect()
    }

    pub fn for_example(example: ExampleId) -> Vec<BenchCase> {
        match example {
            ExampleId::II => vec![
                BenchCase { example, case: Some(1) },
                BenchCase { example, case: Some(2) },
            ],
            _ => vec![BenchCase { example, case: None }],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub header: String,
    pub tables: Vec<ComparisonTable>,
    /// Rows whose scenario failed outright, with the error text.
    pub failures: Vec<(String, String)>,
}

impl BenchResult {
    pub fn render_text(&self) -> String {
        let mut out = format!("{}\n\n", self.header);
        for table in &self.tables {
            out.push_str(&table.render_text());
            out.push('\n');
        }
        for (row, err) in &self.failures {
            let _ = writeln!(out, "failed: {row}: {err}");
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (i, table) in self.tables.iter().enumerate() {
            let csv = table.to_csv()?;
            // Keep a single header line.
            let body = if i == 0 { csv.as_str() } else { csv.split_once('\n').map_or("", |(_, b)| b) };
            out.push_str(body);
        }
        Ok(out)
    }
}

/// Runs the selected setups with each method, baseline first as in the
/// comparison tables. Failures become annotated `N/C` rows.
pub fn cmd_bench(cases: &[BenchCase], methods: &[ControlMethod], repeats: usize) -> Result<BenchResult> {
    if cases.is_empty() || methods.is_empty() {
        return Err(ControlError::Config("bench needs at least one example and method".into()));
    }
    let mut by_example: Vec<(ExampleId, Vec<MetricsReport>)> = Vec::new();
    let mut failures = Vec::new();
    let mut horizons = Vec::new();
    for case in cases {
        for method in [ControlMethod::Sola, ControlMethod::Proposed] {
            if !methods.contains(&method) {
                continue;
            }
            let mut cfg = ScenarioConfig::preset(case.example, case.case);
            cfg.method = Some(method);
            let report = match cfg.resolve() {
                Ok(s) => {
                    let h = (s.label.clone(), s.integrator.horizon);
                    if !horizons.contains(&h) {
                        horizons.push(h);
                    }
                    match s.execute(repeats) {
                        Ok((_, r)) => r,
                        Err(e) => {
                            failures.push((format!("{} / {}", s.label, s.method_label()), e.to_string()));
                            failed_report(&s.label, s.method_label())
                        }
                    }
                }
                Err(e) => {
                    failures.push((format!("{} / {method:?}", case.example), e.to_string()));
                    failed_report(&case.example.to_string(), "?")
                }
            };
            match by_example.iter_mut().find(|(e, _)| *e == case.example) {
                Some((_, rows)) => rows.push(report),
                None => by_example.push((case.example, vec![report])),
            }
        }
    }
    let tables = by_example
        .iter()
        .map(|(example, rows)| {
            comparison_table(format!("Performance comparison for Example {example}"), rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let horizon_text = horizons
        .iter()
        .map(|(label, t)| format!("{label}: T = {t} s"))
        .collect::<Vec<_>>()
        .join(", ");
    let header = format!(
        "RK4, dt = {DEFAULT_DT} s; horizons: {horizon_text}; wall clock = median of {} run(s); convergence threshold |e| < 1e-3",
        repeats.max(1)
    );
    Ok(BenchResult {
        header,
        tables,
        failures,
    })
}

fn failed_report(example: &str, method: &str) -> MetricsReport {
    MetricsReport {
        example: example.to_string(),
        method: method.to_string(),
        itse: f64::NAN,
        cumulative_cost: f64::NAN,
        convergence_time_s: None,
        wall_clock_s: 0.0,
        status: RunOutcome::Diverged,
    }
}

/// Writes `bench.txt` and `bench.csv` into `dir`.
pub fn write_bench(result: &BenchResult, dir: &Path) -> Result<()> {
    write_file(&dir.join("bench.txt"), &result.render_text())?;
    write_file(&dir.join("bench.csv"), &result.to_csv()?)
}

/// Parses `"a,b;c,d"` (one `min,max` pair per axis) or a single `"a,b"`
/// applied to every axis.
pub fn parse_box(text: &str, state_dim: usize) -> Result<Vec<(f64, f64)>> {
    let axes: Vec<(f64, f64)> = text
        .split(';')
        .map(|axis| {
            let v = parse_vector(axis)?;
            match v.as_slice() {
                [lo, hi] if lo <= hi => Ok((*lo, *hi)),
                _ => Err(ControlError::Parse(format!("box axis `{axis}` must be `min,max` with min <= max"))),
            }
        })
        .collect::<Result<_>>()?;
    match axes.len() {
        1 => Ok(vec![axes[0]; state_dim]),
        k if k == state_dim => Ok(axes),
        k => Err(ControlError::Dimension {
            context: "box axes",
            expected: state_dim,
            actual: k,
        }),
    }
}

/// Parses `"1,-2.5,3"`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ControlError::Parse(format!("`{}` is not a number", s.trim())))
        })
        .collect()
}

/// Parses `"1,0;0,1"` into rows.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';').map(parse_vector).collect()
}

/// Sweeps `Q(x)` over the box for the scenario's model and weights.
pub fn cmd_verify_gamma(config: &ScenarioConfig, bounds: &[(f64, f64)], points_per_axis: usize) -> Result<(GammaReport, ExitCode)> {
    let scenario = config.resolve()?;
    let report = verify_gamma_over_grid(&scenario.model, &scenario.cost, bounds, points_per_axis)?;
    let exit = if report.admissible {
        ExitCode::Ok
    } else {
        ExitCode::Inadmissible
    };
    Ok((report, exit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_with_defaults() {
        let s = ScenarioConfig::preset(ExampleId::I, None).resolve().unwrap();
        assert_eq!(s.x0.as_slice(), &[5.0, -5.0]);
        assert_eq!(s.cost.gamma(), 1.0);
        assert_eq!(s.integrator.horizon, 10.0);
        let s = ScenarioConfig::preset(ExampleId::II, Some(2)).resolve().unwrap();
        assert_eq!(s.label, "II case 2");
        assert_eq!(s.integrator.horizon, EXAMPLE_II_CASE_2_HORIZON);
        assert_eq!(s.cost.gamma(), 0.5);
        let s = ScenarioConfig::preset(ExampleId::III, None).resolve().unwrap();
        assert_eq!(s.cost.r().nrows(), 4);
        assert_eq!(s.cost.gamma(), 0.1);
    }

    #[test]
    fn toml_round_trip_and_merge() {
        let text = r#"
            example = "II"
            case = 1
            method = "sola"
            x0 = [1.0, -1.0]
            dt = 0.01
            horizon = 2.0

            [reference]
            preset = "zero"
        "#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.method, Some(ControlMethod::Sola));
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let merged = cfg.merged_with(ScenarioConfig {
            gamma: Some(3.0),
            method: Some(ControlMethod::Proposed),
            ..Default::default()
        });
        assert_eq!(merged.gamma, Some(3.0));
        assert_eq!(merged.method, Some(ControlMethod::Proposed));
        assert_eq!(merged.case, Some(1));
        assert!(ScenarioConfig::from_toml_str("exampel = \"I\"").is_err());
    }

    #[test]
    fn validation_rejects_mismatches() {
        let base = ScenarioConfig::preset(ExampleId::I, None);
        let bad = [
            ScenarioConfig { x0: Some(vec![1.0]), ..base.clone() },
            ScenarioConfig { q0: Some(vec![vec![1.0]]), ..base.clone() },
            ScenarioConfig { r: Some(vec![vec![1.0, 0.0, 0.0]; 3]), ..base.clone() },
            ScenarioConfig { case: Some(1), ..base.clone() },
            ScenarioConfig { dt: Some(0.3), horizon: Some(1.0), ..base.clone() },
            ScenarioConfig { gamma: Some(f64::NAN), ..base.clone() },
            ScenarioConfig::preset(ExampleId::II, None),
            ScenarioConfig::preset(ExampleId::II, Some(3)),
            ScenarioConfig { example: Some("IV".into()), ..Default::default() },
            ScenarioConfig::default(),
            ScenarioConfig {
                method: Some(ControlMethod::Sola),
                reference: Some(ReferenceConfig { preset: "zero".into(), amplitude: 1.0, frequency: 1.0 }),
                ..base.clone()
            },
            ScenarioConfig {
                reference: Some(ReferenceConfig { preset: "spiral".into(), amplitude: 1.0, frequency: 1.0 }),
                ..base.clone()
            },
        ];
        for cfg in bad {
            assert!(cfg.resolve().is_err(), "accepted {cfg:?}");
        }
    }

    #[test]
    fn parsing_helpers() {
        assert_eq!(parse_vector("5,-5").unwrap(), vec![5.0, -5.0]);
        assert!(parse_vector("5,x").is_err());
        assert_eq!(parse_rows("1,0;0,1").unwrap(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(parse_box("-5,5", 2).unwrap(), vec![(-5.0, 5.0); 2]);
        assert_eq!(parse_box("-1,1;-2,2", 2).unwrap(), vec![(-1.0, 1.0), (-2.0, 2.0)]);
        assert!(parse_box("5,-5", 2).is_err());
        assert!(parse_box("-1,1;-2,2;0,1", 2).is_err());
        assert!(parse_box("1", 2).is_err());
    }

    #[test]
    fn csv_header_layout() {
        let mut cfg = ScenarioConfig::preset(ExampleId::III, None);
        cfg.horizon = Some(0.01);
        let traj = cfg.resolve().unwrap().simulate().unwrap();
        let csv = trajectory_csv(&traj).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,x2,tau1,tau2,tau3,V,stage_cost");
        assert_eq!(lines.count(), traj.len());
        let svg = trajectory_svg(&traj).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2 + 3 + 1);
    }
}
