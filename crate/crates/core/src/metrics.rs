//! Performance indices computed from sampled trajectories and the
//! comparison tables built from them.
//!
//! * ITSE: `int_0^T t e^T e dt`.
//! * Cumulative cost: `int_0^T (e^T e + tau^T tau + tau'^T tau') dt`, always
//!   with identity weights so controllers tuned differently compare fairly.
//! * Convergence time: first simulated time after which `|e| < 1e-3` holds
//!   through the end of the run.
//! * Wall clock: elapsed real time of the simulation call. Reported, never
//!   asserted against reference hardware.

use std::fmt::{self, Write as _};
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{ControlError, Result};
use crate::simulation::Trajectory;
use crate::tracking::ReferenceTrajectory;

pub const CONVERGENCE_THRESHOLD: f64 = 1e-3;

/// Composite trapezoidal rule on a (possibly non-uniform) grid.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

/// Composite Simpson rule on a uniform grid. With an even sample count the
/// last interval falls back to the trapezoid.
pub fn simpson(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len().min(values.len());
    if n < 3 {
        return trapezoid(&times[..n], &values[..n]);
    }
    let end = if n % 2 == 1 { n } else { n - 1 };
    let mut total = 0.0;
    for i in (0..end - 2).step_by(2) {
        let h = times[i + 2] - times[i];
        total += h / 6.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
    }
    if end < n {
        total += trapezoid(&times[end - 1..n], &values[end - 1..n]);
    }
    total
}

fn errors_of(traj: &Trajectory, reference: Option<&ReferenceTrajectory>) -> Vec<DVector<f64>> {
    match reference {
        Some(r) => traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(t, x)| x - r.desired(*t))
            .collect(),
        None => traj.error_signal().to_vec(),
    }
}

fn itse_integrand(traj: &Trajectory, reference: Option<&ReferenceTrajectory>) -> Vec<f64> {
    errors_of(traj, reference)
        .iter()
        .zip(&traj.times)
        .map(|(e, t)| t * e.norm_squared())
        .collect()
}

/// ITSE against `reference`, or against the trajectory's own error signal
/// (the state itself for regulation) when `reference` is `None`.
pub fn itse(traj: &Trajectory, reference: Option<&ReferenceTrajectory>) -> f64 {
    trapezoid(&traj.times, &itse_integrand(traj, reference))
}

/// ITSE by Simpson's rule, used to cross-check the trapezoid value.
pub fn itse_simpson(traj: &Trajectory, reference: Option<&ReferenceTrajectory>) -> f64 {
    simpson(&traj.times, &itse_integrand(traj, reference))
}

/// Time derivative of the control samples: central differences inside,
/// one-sided at the ends.
pub fn control_rate(times: &[f64], controls: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let n = controls.len();
    (0..n)
        .map(|k| {
            let (lo, hi) = match k {
                0 => (0, 1),
                k if k == n - 1 => (n - 2, n - 1),
                k => (k - 1, k + 1),
            };
            (&controls[hi] - &controls[lo]) / (times[hi] - times[lo])
        })
        .collect()
}

fn cost_integrand(traj: &Trajectory) -> Vec<f64> {
    let rates = control_rate(&traj.times, &traj.controls);
    traj.error_signal()
        .iter()
        .zip(&traj.controls)
        .zip(&rates)
        .map(|((e, u), du)| e.norm_squared() + u.norm_squared() + du.norm_squared())
        .collect()
}

/// Identity-weighted cumulative cost including the control-rate term.
pub fn cumulative_cost(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(ControlError::Config(
            "cumulative cost needs at least two samples".into(),
        ));
    }
    Ok(trapezoid(&traj.times, &cost_integrand(traj)))
}

pub fn cumulative_cost_simpson(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(ControlError::Config(
            "cumulative cost needs at least two samples".into(),
        ));
    }
    Ok(simpson(&traj.times, &cost_integrand(traj)))
}

/// First sample time from which `|e| < threshold` holds to the end of the
/// run. `None` if that never happens or the run diverged.
pub fn convergence_time(traj: &Trajectory, threshold: f64) -> Option<f64> {
    if traj.diverged() || traj.is_empty() {
        return None;
    }
    let errors = traj.error_signal();
    let mut first_inside = None;
    for k in (0..errors.len()).rev() {
        if errors[k].norm() < threshold {
            first_inside = Some(k);
        } else {
            break;
        }
    }
    first_inside.map(|k| traj.times[k])
}

/// Runs `f` once and returns its output with the elapsed seconds.
pub fn wall_clock<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Runs `f` `repeats` times and returns the last output with the median
/// elapsed seconds.
pub fn median_wall_clock<T>(repeats: usize, mut f: impl FnMut() -> T) -> (T, f64) {
    let repeats = repeats.max(1);
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let (out, secs) = wall_clock(&mut f);
        times.push(secs);
        last = Some(out);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let median = if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    };
    (last.expect("at least one run"), median)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Converged,
    /// Error never settled below the threshold.
    NotConverged,
    /// Integration blew up or the baseline weights diverged.
    Diverged,
}

impl RunOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunOutcome::Converged => "converged",
            RunOutcome::NotConverged => "not_converged",
            RunOutcome::Diverged => "diverged",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(RunOutcome::Converged),
            "not_converged" => Ok(RunOutcome::NotConverged),
            "diverged" => Ok(RunOutcome::Diverged),
            other => Err(ControlError::Parse(format!("unknown status `{other}`"))),
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, RunOutcome::Converged)
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Grouping key, e.g. `"I"` or `"II case 2"`.
    pub example: String,
    pub method: String,
    pub itse: f64,
    pub cumulative_cost: f64,
    pub convergence_time_s: Option<f64>,
    pub wall_clock_s: f64,
    pub status: RunOutcome,
}

impl MetricsReport {
    /// Computes all indices from a finished run.
    pub fn from_trajectory(
        example: impl Into<String>,
        method: impl Into<String>,
        traj: &Trajectory,
        wall_clock_s: f64,
    ) -> Result<Self> {
        let itse = itse(traj, None);
        let cumulative_cost = cumulative_cost(traj)?;
        let convergence_time_s = convergence_time(traj, CONVERGENCE_THRESHOLD);
        let finite = itse.is_finite() && cumulative_cost.is_finite();
        let status = if traj.diverged() || !finite {
            RunOutcome::Diverged
        } else if convergence_time_s.is_some() {
            RunOutcome::Converged
        } else {
            RunOutcome::NotConverged
        };
        Ok(MetricsReport {
            example: example.into(),
            method: method.into(),
            itse,
            cumulative_cost,
            convergence_time_s,
            wall_clock_s,
            status,
        })
    }

    /// Serialises as flat `key = value` lines (valid TOML).
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "example = {:?}", self.example);
        let _ = writeln!(out, "method = {:?}", self.method);
        let _ = writeln!(out, "itse = {}", toml_float(self.itse));
        let _ = writeln!(out, "cumulative_cost = {}", toml_float(self.cumulative_cost));
        match self.convergence_time_s {
            Some(t) => {
                let _ = writeln!(out, "convergence_time_s = {}", toml_float(t));
            }
            None => {
                let _ = writeln!(out, "convergence_time_s = \"N/C\"");
            }
        }
        let _ = writeln!(out, "wall_clock_s = {}", toml_float(self.wall_clock_s));
        let _ = writeln!(out, "status = {:?}", self.status.as_str());
        out
    }

    /// Parses the output of [`MetricsReport::to_key_values`].
    pub fn from_key_values(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| ControlError::Parse(format!("{e}")))?;
        let string = |key: &str| -> Result<String> {
            table
                .get(key)
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .ok_or_else(|| ControlError::Parse(format!("missing string `{key}`")))
        };
        let float = |key: &str| -> Result<f64> {
            match table.get(key) {
                Some(toml::Value::Float(f)) => Ok(*f),
                Some(toml::Value::Integer(i)) => Ok(*i as f64),
                _ => Err(ControlError::Parse(format!("missing number `{key}`"))),
            }
        };
        let convergence_time_s = match table.get("convergence_time_s") {
            Some(toml::Value::String(s)) if s == "N/C" => None,
            _ => Some(float("convergence_time_s")?),
        };
        Ok(MetricsReport {
            example: string("example")?,
            method: string("method")?,
            itse: float("itse")?,
            cumulative_cost: float("cumulative_cost")?,
            convergence_time_s,
            wall_clock_s: float("wall_clock_s")?,
            status: RunOutcome::parse(&string("status")?)?,
        })
    }
}

fn toml_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // Debug prints the shortest round-tripping form and always marks floats.
        format!("{v:?}")
    }
}

const NOT_CONVERGED: &str = "N/C";

/// Rows grouped by example, in first-seen order of examples and insertion
/// order within each example.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub title: String,
    pub rows: Vec<MetricsReport>,
}

pub fn comparison_table(title: impl Into<String>, reports: &[MetricsReport]) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(ControlError::Config("comparison table needs at least one report".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    for r in reports {
        if !order.contains(&r.example.as_str()) {
            order.push(&r.example);
        }
    }
    let mut rows = Vec::with_capacity(reports.len());
    for ex in order {
        rows.extend(reports.iter().filter(|r| r.example == ex).cloned());
    }
    Ok(ComparisonTable {
        title: title.into(),
        rows,
    })
}

const HEADERS: [&str; 7] = [
    "Example",
    "Method",
    "ITSE",
    "Cumulative Cost",
    "Convergence (sim s)",
    "Wall clock (s)",
    "Status",
];

impl ComparisonTable {
    fn cells(row: &MetricsReport) -> [String; 7] {
        let value = |v: f64| {
            if row.status == RunOutcome::Diverged {
                NOT_CONVERGED.to_string()
            } else {
                format!("{v:.3}")
            }
        };
        [
            row.example.clone(),
            row.method.clone(),
            value(row.itse),
            value(row.cumulative_cost),
            row.convergence_time_s
                .map_or_else(|| NOT_CONVERGED.to_string(), |t| format!("{t:.3}")),
            format!("{:.4}", row.wall_clock_s),
            row.status.to_string(),
        ]
    }

    /// Aligned plain-text rendering. Non-converged cells read `N/C`.
    pub fn render_text(&self) -> String {
        let body: Vec<[String; 7]> = self.rows.iter().map(Self::cells).collect();
        let mut widths = HEADERS.map(str::len);
        for cells in &body {
            for (w, c) in widths.iter_mut().zip(cells) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::from("|");
            for (c, w) in cells.iter().zip(widths) {
                let _ = write!(s, " {c:<w$} |");
            }
            s.push('\n');
            s
        };
        let rule = {
            let mut s = String::from("+");
            for w in widths {
                s.push_str(&"-".repeat(w + 2));
                s.push('+');
            }
            s.push('\n');
            s
        };
        let mut out = format!("{}\n", self.title);
        out.push_str(&rule);
        out.push_str(&line(&HEADERS.map(String::from)));
        out.push_str(&rule);
        for cells in &body {
            out.push_str(&line(cells));
        }
        out.push_str(&rule);
        out.push_str("N/C: Not Converged\n");
        out
    }

    /// Comma-separated rows with full-precision values.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "example",
            "method",
            "itse",
            "cumulative_cost",
            "convergence_time_s",
            "wall_clock_s",
            "status",
        ])
        .map_err(|e| ControlError::Parse(e.to_string()))?;
        for r in &self.rows {
            w.write_record([
                r.example.clone(),
                r.method.clone(),
                toml_float(r.itse),
                toml_float(r.cumulative_cost),
                r.convergence_time_s
                    .map_or_else(|| NOT_CONVERGED.to_string(), toml_float),
                toml_float(r.wall_clock_s),
                r.status.to_string(),
            ])
            .map_err(|e| ControlError::Parse(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| ControlError::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| ControlError::Parse(e.to_string()))
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{RunStatus, TrajectoryMeta};
    use approx::assert_relative_eq;

    fn scalar_traj(horizon: f64, steps: usize, e: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> Trajectory {
        let dt = horizon / steps as f64;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        Trajectory {
            states: times.iter().map(|t| DVector::from_element(1, e(*t))).collect(),
            controls: times.iter().map(|t| DVector::from_element(1, u(*t))).collect(),
            stage_costs: vec![0.0; times.len()],
            errors: None,
            status: RunStatus::Completed,
            meta: TrajectoryMeta::default(),
            times,
        }
    }

    #[test]
    fn itse_closed_forms() {
        let zero = scalar_traj(4.0, 400, |_| 0.0, |_| 0.0);
        assert_eq!(itse(&zero, None), 0.0);
        let one = scalar_traj(4.0, 400, |_| 1.0, |_| 0.0);
        assert_relative_eq!(itse(&one, None), 8.0, max_relative = 1e-9);
    }

    #[test]
    fn cumulative_cost_closed_forms() {
        let zero = scalar_traj(3.0, 30, |_| 0.0, |_| 0.0);
        assert_eq!(cumulative_cost(&zero).unwrap(), 0.0);
        let constant = scalar_traj(3.0, 30, |_| 0.0, |_| 2.0);
        assert_relative_eq!(cumulative_cost(&constant).unwrap(), 12.0, max_relative = 1e-12);
        assert!(cumulative_cost(&zero.truncated(1)).is_err());
    }

    #[test]
    fn control_rate_is_exact_for_lines() {
        let traj = scalar_traj(1.0, 10, |_| 0.0, |t| 3.0 * t - 1.0);
        for r in control_rate(&traj.times, &traj.controls) {
            assert_relative_eq!(r[0], 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn simpson_matches_trapezoid_on_smooth_data() {
        let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 1e-3).collect();
        let y: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let exact = 1.0 - (-1.0f64).exp();
        assert_relative_eq!(simpson(&t, &y), exact, max_relative = 1e-12);
        assert_relative_eq!(trapezoid(&t, &y), exact, max_relative = 1e-6);
        // Even sample count falls back to a trapezoid on the last interval.
        assert_relative_eq!(simpson(&t[..1000], &y[..1000]), trapezoid(&t[..1000], &y[..1000]), max_relative = 1e-6);
    }

    #[test]
    fn convergence_time_cases() {
        let inside = scalar_traj(1.0, 10, |_| 1e-4, |_| 0.0);
        assert_eq!(convergence_time(&inside, 1e-3), Some(0.0));
        let decay = scalar_traj(10.0, 1000, |t| (-t).exp(), |_| 0.0);
        let tc = convergence_time(&decay, 1e-3).unwrap();
        assert!((tc - 1000f64.ln()).abs() <= 0.01);
        let grow = scalar_traj(1.0, 10, |t| t, |_| 0.0);
        assert_eq!(convergence_time(&grow, 1e-3), None);
        // Leaving the band again resets the clock.
        let bounce = scalar_traj(1.0, 10, |t| if (0.3..0.5).contains(&t) { 1.0 } else { 0.0 }, |_| 0.0);
        assert_relative_eq!(convergence_time(&bounce, 1e-3).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn wall_clock_of_noop() {
        let ((), secs) = wall_clock(|| ());
        assert!((0.0..1e-2).contains(&secs));
        let (v, med) = median_wall_clock(5, || 7);
        assert_eq!(v, 7);
        assert!(med >= 0.0);
    }

    fn report(example: &str, method: &str, status: RunOutcome) -> MetricsReport {
        MetricsReport {
            example: example.into(),
            method: method.into(),
            itse: 35.0,
            cumulative_cost: 1.0 / 3.0,
            convergence_time_s: status.is_converged().then_some(4.25),
            wall_clock_s: 0.012,
            status,
        }
    }

    #[test]
    fn key_value_round_trip() {
        for status in [RunOutcome::Converged, RunOutcome::NotConverged, RunOutcome::Diverged] {
            let r = report("II case 2", "sola", status);
            let back = MetricsReport::from_key_values(&r.to_key_values()).unwrap();
            assert_eq!(back, r);
        }
        assert!(MetricsReport::from_key_values("itse = 1.0").is_err());
    }

    #[test]
    fn table_layout() {
        let single = comparison_table("t", &[report("I", "proposed", RunOutcome::Converged)]).unwrap();
        assert_eq!(single.rows.len(), 1);
        assert!(comparison_table("t", &[]).is_err());

        let rows = [
            report("I", "sola", RunOutcome::Converged),
            report("II case 2", "sola", RunOutcome::Diverged),
            report("I", "proposed", RunOutcome::Converged),
        ];
        let table = comparison_table("bench", &rows).unwrap();
        let order: Vec<_> = table.rows.iter().map(|r| (r.example.as_str(), r.method.as_str())).collect();
        assert_eq!(order, [("I", "sola"), ("I", "proposed"), ("II case 2", "sola")]);
        let text = table.render_text();
        let nc_line = text.lines().find(|l| l.contains("II case 2")).unwrap();
        assert_eq!(nc_line.matches("N/C").count(), 3);
        assert!(text.ends_with("N/C: Not Converged\n"));
        let csv = table.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 4);
    }
}
