// Tracking with feedforward.
//
// On Example III any smooth reference can be produced by the inputs. On
// Example I only references with `x1' = x2` are reachable, so the feasible
// preset is used there and an infeasible one is shown for contrast.

use hjb_core::metrics::itse;
use hjb_core::tracking::feedforward_residual;
use hjb_core::{builtin_example, simulate_tracking, CostConfig, ExampleId, IntegratorConfig, ReferenceTrajectory};
use nalgebra::DVector;

pub fn run_example() -> hjb_core::Result<(f64, f64)> {
    let icfg = IntegratorConfig::default();

    let model = builtin_example(ExampleId::III, None)?;
    let cost = CostConfig::identity(2, 3, 0.1)?;
    let reference = ReferenceTrajectory::sinusoid(2, 1.0, 1.0);
    let traj = simulate_tracking(&model, &cost, &reference, &DVector::from_vec(vec![4.0, -4.0]), &icfg)?;
    let e3 = traj.error_signal().last().map_or(f64::NAN, |e| e.norm());
    println!("Example III sinusoid: |e(T)| = {e3:.2e}, ITSE = {:.4}", itse(&traj, Some(&reference)));

    let model = builtin_example(ExampleId::I, None)?;
    let cost = CostConfig::identity(2, 1, 1.0)?;
    let feasible = ReferenceTrajectory::example_one_feasible(1.0, 1.0);
    let traj = simulate_tracking(&model, &cost, &feasible, &DVector::from_vec(vec![5.0, -5.0]), &icfg)?;
    let e1 = traj.error_signal().last().map_or(f64::NAN, |e| e.norm());
    println!("Example I feasible reference: |e(T)| = {e1:.2e}");

    let infeasible = ReferenceTrajectory::sinusoid(2, 1.0, 1.0);
    let t = 0.7;
    let x_d = infeasible.desired(t);
    let gap = feedforward_residual(&model, &x_d, &x_d, &infeasible.derivative(t))?;
    println!("Example I [sin t, cos t]: unreachable part at t = {t}: {gap:.4}");
    Ok((e3, e1))
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
