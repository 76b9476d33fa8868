//! KKT mode: certified primal and dual residual bounds per outer step.

use ipalm::ipalm::{ipalm_kkt_solve, OuterParams};
use ipalm::problems::synthetic::equality_qp;
use ipalm::smoothing::DualPoint;
use ipalm::solvers::{InnerSolverConfig, SolverKind};

fn main() -> ipalm::Result<()> {
    let qp = equality_qp(20, 5, 1)?;
    let p = &qp.problem;
    let params = OuterParams {
        max_outer: 30,
        target_eps: 0.0,
        eps0: Some(1.0),
        ..OuterParams::kkt()
    };
    let cfg = InnerSolverConfig::new(SolverKind::Apg);
    let (_, _, trace) = ipalm_kkt_solve(p, &cfg, &params, &vec![0.0; p.n()], &DualPoint::zeros(p.h_spec()))?;
    println!("rho={} eta={}", params.rho, params.eta);
    for r in trace.records.iter().skip(1) {
        println!(
            "s={:3} beta={:.2e} x-bound={:.3e} lam-bound={:.3e} infeas={:.3e}",
            r.s, r.beta_s, r.kkt_x_bound, r.kkt_lam_bound, r.infeasibility
        );
    }
    Ok(())
}
