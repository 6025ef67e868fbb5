// Regenerate the comparison tables for every built-in example.
//
// The `hjb bench` subcommand does the same and also writes text and CSV.

use hjb_core::scenario::{cmd_bench, BenchCase, BenchResult, ControlMethod};

pub fn run_example() -> hjb_core::Result<BenchResult> {
    let result = cmd_bench(&BenchCase::all(), &[ControlMethod::Sola, ControlMethod::Proposed], 1)?;
    print!("{}", result.render_text());
    Ok(result)
}

fn main() -> hjb_core::Result<()> {
    run_example().map(|_| ())
}
