//! Smoothed value and multiplier map of an l1 term plus a box constraint.

use ipalm::prox::{SimpleFunction, SimpleSet};
use ipalm::smoothing::{DualPoint, HSpec};

fn main() -> ipalm::Result<()> {
    let h = HSpec::simple(
        Some((2, SimpleFunction::l1(1.0)?)),
        Some((2, SimpleSet::boxed(vec![-1.0, 0.0], vec![1.0, 0.5])?)),
    )?;
    let lam = DualPoint::zeros(&h);
    let u = [0.3, -2.0, 1.5, 0.2];
    for beta in [1.0, 0.1, 0.01] {
        let value = h.smoothed_value(&u, &lam, beta)?;
        let big = h.lambda_map(&u, &lam, beta)?;
        println!(
            "beta={beta:<5} value={value:.6} lambda1={:?} lambda2={:?}",
            big.lambda1, big.lambda2
        );
    }
    println!(
        "h1(u1) = {:.6}, dist(u2, K) = {:.6}",
        h.h1_value(&u[..2]),
        h.infeasibility(&u[2..])
    );
    Ok(())
}
