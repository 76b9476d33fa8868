//! Least absolute deviations with an l1 penalty on a small planted instance.

use ipalm::ipalm::{ipalm_solve, OuterParams};
use ipalm::problems::synthetic::lad_instance;
use ipalm::smoothing::DualPoint;
use ipalm::solvers::{InnerSolverConfig, SolverKind};

fn main() -> ipalm::Result<()> {
    let lad = lad_instance(12, 5, 0.1, 2)?;
    let p = &lad.problem;
    let params = OuterParams {
        target_eps: 1e-8,
        max_outer: 200,
        ..OuterParams::default()
    };
    for kind in [SolverKind::Apg, SolverKind::Approx] {
        let cfg = InnerSolverConfig::new(kind).with_seed(1);
        let (x, _, trace) = ipalm_solve(p, &cfg, &params, &vec![0.0; p.n()], &DualPoint::zeros(p.h_spec()))?;
        let f = p.objective(&x)?;
        println!(
            "{:8} F={f:.10} ref={:.10} rel={:.2e} inner={} {}",
            kind.name(),
            lad.f_star,
            (f - lad.f_star).abs() / lad.f_star.abs().max(1.0),
            trace.last().map_or(0, |r| r.inner_cum),
            trace.status.name()
        );
    }
    Ok(())
}
