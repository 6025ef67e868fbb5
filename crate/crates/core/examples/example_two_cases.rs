// Example II under both parameter presets.
//
// Case 2 has a slow open-loop mode in `x1`: once `x2` reaches zero the
// control vanishes and `x1` decays at 0.2/s, so it needs a longer horizon.

use hjb_core::scenario::{ScenarioConfig, EXAMPLE_II_CASE_2_HORIZON};
use hjb_core::{ExampleId, MetricsReport};

pub fn run_example() -> hjb_core::Result<Vec<MetricsReport>> {
    let mut reports = Vec::new();
    for case in [1, 2] {
        let scenario = ScenarioConfig::preset(ExampleId::II, Some(case)).resolve()?;
        let (traj, report) = scenario.execute(1)?;
        let x_end = traj.final_state().expect("non-empty run");
        println!(
            "case {case}: T = {} s, x(T) = [{:.2e}, {:.2e}], status {}",
            scenario.integrator.horizon, x_end[0], x_end[1], report.status
        );
        reports.push(report);
    }

    // The same case cut at 10 s is still above the threshold.
    let mut short = ScenarioConfig::preset(ExampleId::II, Some(2));
    short.horizon = Some(10.0);
    let (_, report) = short.resolve()?.execute(1)?;
    println!(
        "case 2 at T = 10 s: {} (default horizon is {EXAMPLE_II_CASE_2_HORIZON} s)",
        report.status
    );
    Ok(reports)
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
