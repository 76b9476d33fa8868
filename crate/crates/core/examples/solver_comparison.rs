//! Inner-solver work on an LAD problem with many more rows than columns.

use ipalm::ipalm::{ipalm_solve, OuterParams};
use ipalm::problem::{CompositeProblem, RowBlock};
use ipalm::problems::synthetic::unit_row_data;
use ipalm::prox::SimpleFunction;
use ipalm::smoothing::DualPoint;
use ipalm::solvers::{InnerSolverConfig, SolverKind};

fn main() -> ipalm::Result<()> {
    let n = 20;
    let data = unit_row_data(n, 20, 1)?;
    let m = data.n_samples();
    let p = CompositeProblem::new(
        n,
        vec![RowBlock::nonsmooth(
            data.x.clone(),
            SimpleFunction::abs_sum_centered(1.0, data.labels.clone())?,
        )],
        SimpleFunction::l1(0.01)?.with_mu(0.1)?,
    )?;
    let params = OuterParams {
        max_outer: 60,
        target_eps: 1e-7,
        ..OuterParams::default()
    };
    let tau = (m as f64).sqrt() as usize;
    println!("m={m} n={n}");
    for kind in SolverKind::ALL {
        let mut cfg = InnerSolverConfig::new(kind).with_seed(0);
        if kind == SolverKind::LKatyusha {
            cfg = cfg.with_tau(tau);
        }
        let (x, _, trace) = ipalm_solve(&p, &cfg, &params, &vec![0.0; n], &DualPoint::zeros(p.h_spec()))?;
        let last = trace.last().expect("initial record");
        println!(
            "{:10} F={:.10} component gradients={:.3e} outer={} {}",
            kind.name(),
            p.objective(&x)?,
            last.work_cum * m as f64,
            trace.completed_outer(),
            trace.status.name()
        );
    }
    Ok(())
}
