// Checking that gamma keeps the state penalty non-negative.
//
// With `Q0 = 0` the penalty is `gamma |P^T x|^2`, so any negative gamma is
// inadmissible and the sweep names the worst state.

use hjb_core::regulation::{gamma_lower_bound, verify_gamma_over_grid, GammaReport};
use hjb_core::{builtin_example, CostConfig, ExampleId};
use nalgebra::{DMatrix, DVector};

pub fn run_example() -> hjb_core::Result<(GammaReport, GammaReport)> {
    let model = builtin_example(ExampleId::I, None)?;
    let bounds = [(-5.0, 5.0), (-5.0, 5.0)];

    let cost = CostConfig::identity(2, 1, 1.0)?;
    let ok = verify_gamma_over_grid(&model, &cost, &bounds, 41)?;
    println!("gamma = 1: admissible = {}, min Q = {:.3e}", ok.admissible, ok.worst_margin);

    let x = DVector::from_vec(vec![1.0, 2.0]);
    println!("lower bound for gamma at {:?}: {:?}", x.as_slice(), gamma_lower_bound(&model, &cost, &x)?);

    let bad_cost = CostConfig::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2), -50.0, 1e-10)?;
    let bad = verify_gamma_over_grid(&model, &bad_cost, &bounds, 41)?;
    println!(
        "gamma = -50, Q0 = 0: admissible = {}, worst x = {:?}, Q = {:.3e}",
        bad.admissible, bad.worst_x, bad.worst_margin
    );
    Ok((ok, bad))
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
