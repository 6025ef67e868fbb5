// Driving a run from a TOML scenario, as `hjb run --config` does.

use std::path::PathBuf;

use hjb_core::scenario::{cmd_run, RunOutputs, RunSummary, ScenarioConfig};

const SCENARIO: &str = r#"
example = "I"
method = "proposed"
x0 = [5.0, -5.0]
gamma = 1.0
dt = 0.001
horizon = 10.0
"#;

pub fn run_example() -> hjb_core::Result<(RunSummary, PathBuf)> {
    let config = ScenarioConfig::from_toml_str(SCENARIO)?;
    let dir = std::env::temp_dir().join(format!("hjb-scenario-example-{}", std::process::id()));
    let summary = cmd_run(&config, &RunOutputs::in_dir(&dir, true))?;
    println!("wrote {} (exit code {:?})", dir.display(), summary.exit);
    print!("{}", summary.report.to_key_values());
    Ok((summary, dir))
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
