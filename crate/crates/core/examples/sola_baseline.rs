// The adaptive-critic baseline next to the closed-form law on Example I.

use hjb_core::metrics::wall_clock;
use hjb_core::{
    builtin_example, simulate_closed_loop, simulate_sola, BasisSet, ClosedFormRegulator, CostConfig, ExampleId,
    IntegratorConfig, MetricsReport, SolaConfig,
};
use nalgebra::DVector;

pub fn run_example() -> hjb_core::Result<[MetricsReport; 2]> {
    let model = builtin_example(ExampleId::I, None)?;
    let x0 = DVector::from_vec(vec![5.0, -5.0]);
    let icfg = IntegratorConfig::default();

    let basis = BasisSet::example_one();
    let (run, secs) = wall_clock(|| simulate_sola(&model, &basis, &SolaConfig::example_one(), &x0, &icfg));
    let run = run?;
    println!(
        "critic weight norm: start {:.3}, end {:.3}",
        run.weight_norms.first().copied().unwrap_or(0.0),
        run.final_weights.norm()
    );
    let baseline = MetricsReport::from_trajectory("I", "HJB-SOLA", &run.trajectory, secs)?;

    let regulator = ClosedFormRegulator::new(model.clone(), CostConfig::identity(2, 1, 1.0)?)?;
    let (traj, secs) = wall_clock(|| simulate_closed_loop(&model, &regulator, &x0, &icfg));
    let proposed = MetricsReport::from_trajectory("I", "Proposed method", &traj?, secs)?;

    for r in [&baseline, &proposed] {
        println!("{:<16} ITSE {:>10.3}  cost {:>10.3}  {}", r.method, r.itse, r.cumulative_cost, r.status);
    }
    Ok([baseline, proposed])
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
