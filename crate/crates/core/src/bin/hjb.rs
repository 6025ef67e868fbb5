use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hjb_core::dynamics::ExampleId;
use hjb_core::scenario::{
    cmd_bench, cmd_run, cmd_verify_gamma, parse_box, parse_rows, parse_vector, write_bench, BenchCase,
    ControlMethod, ReferenceConfig, RunOutputs, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "hjb", version, about = "Closed-form optimal control runs, benchmarks and gamma checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write trajectory, metrics and plot.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Also write plot.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Reproduce the comparison tables for the built-in examples.
    Bench {
        /// Restrict to one example (I, II, III).
        #[arg(long)]
        example: Option<ExampleId>,
        /// Restrict Example II to one case.
        #[arg(long)]
        case: Option<u8>,
        /// Restrict to one method.
        #[arg(long)]
        method: Option<ControlMethod>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value = "bench_out")]
        out_dir: PathBuf,
    },
    /// Check that gamma keeps Q(x) >= 0 over a box.
    VerifyGamma {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `min,max` for every axis, or `min,max;min,max` per axis.
        #[arg(long = "box", allow_hyphen_values = true)]
        bounds: String,
        /// Grid points per axis.
        #[arg(long, default_value_t = 51)]
        grid: usize,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML scenario file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    case: Option<u8>,
    #[arg(long)]
    method: Option<ControlMethod>,
    /// Comma separated initial state.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// State weight rows, e.g. `1,0;0,1`.
    #[arg(long, allow_hyphen_values = true)]
    q0: Option<String>,
    /// Augmented input weight rows.
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    #[arg(long)]
    deadzone_eps: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// zero, sinusoid or example-one-feasible.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    frequency: f64,
}

impl ScenarioArgs {
    fn into_config(self) -> hjb_core::Result<ScenarioConfig> {
        let base = match &self.config {
            Some(path) => ScenarioConfig::from_file(path)?,
            None => ScenarioConfig::default(),
        };
        let flags = ScenarioConfig {
            example: self.example,
            case: self.case,
            method: self.method,
            x0: self.x0.as_deref().map(parse_vector).transpose()?,
            q0: self.q0.as_deref().map(parse_rows).transpose()?,
            r: self.r.as_deref().map(parse_rows).transpose()?,
            gamma: self.gamma,
            deadzone_eps: self.deadzone_eps,
            dt: self.dt,
            horizon: self.horizon,
            reference: self.reference.map(|preset| ReferenceConfig {
                preset,
                amplitude: self.amplitude,
                frequency: self.frequency,
            }),
            ..Default::default()
        };
        Ok(base.merged_with(flags))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(hjb_core::scenario::ExitCode::Usage as u8)
        }
    }
}

fn dispatch(command: Command) -> hjb_core::Result<hjb_core::scenario::ExitCode> {
    match command {
        Command::Run { scenario, out_dir, plot } => {
            let summary = cmd_run(&scenario.into_config()?, &RunOutputs::in_dir(&out_dir, plot))?;
            print!("{}", summary.report.to_key_values());
            Ok(summary.exit)
        }
        Command::Bench { example, case, method, repeats, out_dir } => {
            let mut cases = match example {
                Some(e) => BenchCase::for_example(e),
                None => BenchCase::all(),
            };
            if let Some(c) = case {
                cases.retain(|b| b.case == Some(c));
            }
            let methods = match method {
                Some(m) => vec![m],
                None => vec![ControlMethod::Sola, ControlMethod::Proposed],
            };
            let result = cmd_bench(&cases, &methods, repeats)?;
            print!("{}", result.render_text());
            write_bench(&result, &out_dir)?;
            Ok(hjb_core::scenario::ExitCode::Ok)
        }
        Command::VerifyGamma { scenario, bounds, grid } => {
            let config = scenario.into_config()?;
            let dim = config.resolve()?.model.state_dim();
            let (report, code) = cmd_verify_gamma(&config, &parse_box(&bounds, dim)?, grid)?;
            println!("admissible = {}", report.admissible);
            println!("points_evaluated = {}", report.points_evaluated);
            println!("worst_margin = {:e}", report.worst_margin);
            println!("worst_x = {:?}", report.worst_x);
            Ok(code)
        }
    }
}
