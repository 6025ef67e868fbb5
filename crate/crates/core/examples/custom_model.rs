// Plugging in a user-defined plant.
//
// `x1' = -x1 + x2`, `x2' = -sin(x1) - 0.5 x2 + (1 + x1^2) tau`.
// The open loop settles on its own; the law shortens the transient.

use hjb_core::metrics::itse;
use hjb_core::simulation::FnController;
use hjb_core::{simulate_closed_loop, ClosedFormRegulator, CostConfig, DynamicsModel, IntegratorConfig};
use nalgebra::{DMatrix, DVector};

pub fn plant() -> hjb_core::Result<DynamicsModel> {
    DynamicsModel::new(
        "damped-coupled",
        2,
        1,
        |x: &DVector<f64>| Ok(DVector::from_vec(vec![-x[0] + x[1], -x[0].sin() - 0.5 * x[1]])),
        |x: &DVector<f64>| Ok(DMatrix::from_vec(2, 1, vec![0.0, 1.0 + x[0] * x[0]])),
    )
}

/// Returns `(closed-loop ITSE, open-loop ITSE)`.
pub fn run_example() -> hjb_core::Result<(f64, f64)> {
    let model = plant()?;
    let icfg = IntegratorConfig::new(1e-3, 15.0)?;
    let x0 = DVector::from_vec(vec![3.0, 3.0]);

    let regulator = ClosedFormRegulator::new(model.clone(), CostConfig::identity(2, 1, 1.0)?)?;
    let closed = simulate_closed_loop(&model, &regulator, &x0, &icfg)?;
    let open = FnController::new("open-loop", |_t: f64, _x: &DVector<f64>| Ok(DVector::zeros(1)));
    let free = simulate_closed_loop(&model, &open, &x0, &icfg)?;

    let (a, b) = (itse(&closed, None), itse(&free, None));
    println!("ITSE closed loop {a:.4}, open loop {b:.4}");
    println!("|x(15)| closed {:.2e}, open {:.2e}", closed.final_state().unwrap().norm(), free.final_state().unwrap().norm());
    Ok((a, b))
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
