// Example III: three physical inputs on a two-state plant.
//
// The input matrix has more columns than rows. The augmented weight is
// 4x4 because the drift column takes the first slot.

use hjb_core::regulation::regulation_control;
use hjb_core::{builtin_example, simulate_closed_loop, ClosedFormRegulator, CostConfig, ExampleId, IntegratorConfig};
use nalgebra::DVector;

pub fn run_example() -> hjb_core::Result<f64> {
    let model = builtin_example(ExampleId::III, None)?;
    let cost = CostConfig::identity(model.state_dim(), model.input_dim(), 0.1)?;

    let x0 = DVector::from_vec(vec![4.0, -4.0]);
    let first = regulation_control(&model, &cost, &x0)?;
    println!("u_aug(x0) = {:.4?}", first.u_aug.as_slice());
    println!("tau(x0)   = {:.4?}", first.tau.as_slice());

    let regulator = ClosedFormRegulator::new(model.clone(), cost)?;
    let traj = simulate_closed_loop(&model, &regulator, &x0, &IntegratorConfig::default())?;
    let final_norm = traj.final_state().map_or(f64::NAN, |x| x.norm());
    println!("|x(T)| = {final_norm:.3e} after {} samples", traj.len());
    Ok(final_norm)
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
