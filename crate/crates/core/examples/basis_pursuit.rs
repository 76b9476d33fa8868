//! Recovers a planted sparse vector from 20 random measurements.

use ipalm::ipalm::{ipalm_solve, OuterParams};
use ipalm::linalg::norm;
use ipalm::problems::synthetic::planted_basis_pursuit;
use ipalm::smoothing::DualPoint;
use ipalm::solvers::{InnerSolverConfig, SolverKind};

fn main() -> ipalm::Result<()> {
    let bp = planted_basis_pursuit(20, 50, 5, 3)?;
    let p = &bp.problem;
    let params = OuterParams {
        max_outer: 60,
        target_eps: 1e-9,
        ..OuterParams::default()
    };
    let cfg = InnerSolverConfig::new(SolverKind::Apg);
    let lam0 = DualPoint::zeros(p.h_spec());
    let (x, _, trace) = ipalm_solve(p, &cfg, &params, &vec![0.0; p.n()], &lam0)?;

    for r in &trace.records {
        println!(
            "s={:3} beta={:.2e} eps={:.2e} m={:6} F={:.10} infeas={:.2e}",
            r.s, r.beta_s, r.eps_s, r.m_s, r.objective, r.infeasibility
        );
    }
    let f = p.objective(&x)?;
    let err: Vec<f64> = x.iter().zip(&bp.x_star).map(|(a, b)| a - b).collect();
    println!("status        {}", trace.status.name());
    println!("F             {f:.12}  (planted {:.12})", bp.f_star);
    println!("rel error     {:.3e}", (f - bp.f_star).abs() / bp.f_star);
    println!("||Ax - b||    {:.3e}", p.infeasibility(&x)?);
    println!("||x - x*||    {:.3e}", norm(&err));
    println!("inner iters   {}", trace.last().map_or(0, |r| r.inner_cum));
    Ok(())
}
