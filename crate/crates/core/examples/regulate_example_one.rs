// Regulate the scalar-input Example I plant from `[5, -5]` to the origin.
//
// `cargo run --example regulate_example_one`

use hjb_core::metrics::{convergence_time, CONVERGENCE_THRESHOLD};
use hjb_core::simulation::lyapunov_series;
use hjb_core::{
    builtin_example, simulate_closed_loop, ClosedFormRegulator, CostConfig, ExampleId, IntegratorConfig,
    MetricsReport,
};
use nalgebra::DVector;

pub fn run_example() -> hjb_core::Result<MetricsReport> {
    let model = builtin_example(ExampleId::I, None)?;
    let cost = CostConfig::identity(2, 1, 1.0)?;
    let regulator = ClosedFormRegulator::new(model.clone(), cost)?;

    let x0 = DVector::from_vec(vec![5.0, -5.0]);
    let traj = simulate_closed_loop(&model, &regulator, &x0, &IntegratorConfig::default())?;

    // V = |x|^2 / 2 should never rise between samples.
    let lyap = lyapunov_series(&traj)?;
    println!("max step increase of V: {:.3e}", lyap.max_increase());
    println!("final state: {:?}", traj.final_state().map(|x| x.as_slice().to_vec()));
    println!(
        "settled below {CONVERGENCE_THRESHOLD} at t = {:?} s",
        convergence_time(&traj, CONVERGENCE_THRESHOLD)
    );

    let report = MetricsReport::from_trajectory("I", "Proposed method", &traj, 0.0)?;
    print!("{}", report.to_key_values());
    Ok(report)
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
