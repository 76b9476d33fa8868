//! Soft-margin SVM on a separable-ish synthetic classification set.

use ipalm::ipalm::{ipalm_solve, OuterParams};
use ipalm::problems::synthetic::classification_data;
use ipalm::problems::{build_problem, BenchmarkKind};
use ipalm::smoothing::DualPoint;
use ipalm::solvers::{InnerSolverConfig, SolverKind};

fn main() -> ipalm::Result<()> {
    let data = classification_data(200, 10, 4)?;
    let p = build_problem(BenchmarkKind::SoftMarginSvm { lambda: 0.01 }, &data)?;
    let tau = (p.n_components() as f64).sqrt() as usize;
    let cfg = InnerSolverConfig::new(SolverKind::LKatyusha).with_seed(3).with_tau(tau);
    let params = OuterParams {
        target_eps: 1e-6,
        max_outer: 80,
        ..OuterParams::default()
    };
    let (w, _, trace) = ipalm_solve(&p, &cfg, &params, &vec![0.0; p.n()], &DualPoint::zeros(p.h_spec()))?;
    let (weights, bias) = w.split_at(data.n_features());
    let scores = data.x.apply(weights, false)?;
    let correct = scores
        .iter()
        .zip(&data.labels)
        .filter(|(s, y)| (*s - bias[0]) * *y > 0.0)
        .count();
    println!("status {} outer {}", trace.status.name(), trace.completed_outer());
    println!("objective {:.8}", p.objective(&w)?);
    println!("training accuracy {:.3}", correct as f64 / data.labels.len() as f64);
    println!("gradient passes {:.1}", trace.last().map_or(0.0, |r| r.work_cum));
    Ok(())
}
