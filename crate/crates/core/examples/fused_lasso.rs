//! Fused lasso regression with a strongly convex regularizer.

use ipalm::ipalm::{ipalm_solve, OuterParams};
use ipalm::problems::synthetic::fused_lasso_data;
use ipalm::problems::{build_problem, BenchmarkKind};
use ipalm::smoothing::DualPoint;
use ipalm::solvers::{InnerSolverConfig, SolverKind};

fn main() -> ipalm::Result<()> {
    let data = fused_lasso_data(80, 40, 5)?;
    let kind = BenchmarkKind::FusedLasso {
        lambda_r: 0.01,
        lambda_1mr: 0.05,
        mu: 0.1,
    };
    let p = build_problem(kind, &data)?;
    let params = OuterParams {
        target_eps: 1e-6,
        max_outer: 150,
        ..OuterParams::default()
    };
    let cfg = InnerSolverConfig::new(SolverKind::Apg);
    let (x, _, trace) = ipalm_solve(&p, &cfg, &params, &vec![0.0; p.n()], &DualPoint::zeros(p.h_spec()))?;
    for r in trace.records.iter().step_by(10) {
        println!(
            "s={:3} beta={:.2e} F={:.10} inner={}",
            r.s, r.beta_s, r.objective, r.inner_cum
        );
    }
    let jumps = x.windows(2).filter(|w| (w[1] - w[0]).abs() > 1e-6).count();
    let nonzeros = x.iter().filter(|v| v.abs() > 1e-6).count();
    println!(
        "status {} F={:.10} nonzeros={nonzeros} jumps={jumps}",
        trace.status.name(),
        p.objective(&x)?
    );
    Ok(())
}
