//! Sweeps the initial smoothing parameter and ranks the runs.

use ipalm::bench::{compare, RunConfig, BETA0_SWEEP};

fn main() -> ipalm::Result<()> {
    let cfg = RunConfig::from_text(
        "problem.synthetic = bp\nproblem.m = 20\nproblem.n = 50\nproblem.sparsity = 5\n\
         outer.max_outer = 40\nouter.target_eps = 1e-8\n",
    )?;
    let report = compare(&[cfg], &BETA0_SWEEP, None)?;
    print!("{}", report.to_csv());
    let best = &report.rows[report.best[0]];
    println!("best beta0 {} with relative error {:.2e}", best.beta0, best.rel_error);
    Ok(())
}
