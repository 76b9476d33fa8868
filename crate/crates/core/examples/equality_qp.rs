//! Projects a point onto an affine subspace and compares with the closed form.

use ipalm::ipalm::{ipalm_solve, OuterParams};
use ipalm::problems::synthetic::equality_qp;
use ipalm::smoothing::DualPoint;
use ipalm::solvers::{InnerSolverConfig, SolverKind};

fn main() -> ipalm::Result<()> {
    let qp = equality_qp(30, 8, 7)?;
    let p = &qp.problem;
    let params = OuterParams {
        target_eps: 1e-10,
        max_outer: 200,
        ..OuterParams::default()
    };
    let cfg = InnerSolverConfig::new(SolverKind::Apg);
    let (x, lam, trace) = ipalm_solve(p, &cfg, &params, &vec![0.0; p.n()], &DualPoint::zeros(p.h_spec()))?;

    let dx: f64 = x
        .iter()
        .zip(&qp.x_star)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let dl: f64 = lam
        .lambda2
        .iter()
        .zip(&qp.lam_star)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    println!("status          {}", trace.status.name());
    println!("outer steps     {}", trace.completed_outer());
    println!("||x - x*||      {dx:.3e}");
    println!("||lam - lam*||  {dl:.3e}");
    println!("||Ax - b||      {:.3e}", p.infeasibility(&x)?);
    Ok(())
}
