//! Bregman proximal gradient with a diagonal quadratic reference.
//!
//! With `ζ = ½‖·‖² + ξ`, `ξ = ½ Σ q_i x_i²`, each step solves
//! `min_y P_s(y) + ⟨∇φ_s(x), y⟩ + L̃ D_ζ(y; x)`, which separates into
//! coordinate prox steps of length `1/(L̃(1 + q_i))`.

use crate::problem::SubproblemOracle;

use super::{BregmanReference, InnerOutcome, StopCheck};

pub(crate) fn run(
    o: &SubproblemOracle<'_>,
    reference: Option<&BregmanReference>,
    x0: &[f64],
    budget: u64,
    early_stop: Option<f64>,
) -> InnerOutcome {
    let n = o.n();
    let steps: Vec<f64> = match reference {
        Some(r) => {
            let lt = (o.problem().norm_a().powi(2) / o.beta()).max(r.l);
            r.q.iter().map(|q| 1.0 / (lt * (1.0 + q))).collect()
        }
        None => vec![1.0 / o.l_s(); n],
    };

    let mut work = 0.0;
    let mut stop = StopCheck::new(early_stop, 5.0);
    if stop.certify(o, x0, &mut work) {
        return InnerOutcome {
            x: x0.to_vec(),
            iterations: 0,
            work,
            stopped_early: true,
            gap: stop.last_gap,
        };
    }
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut iters = 0;
    let mut stopped = false;
    while iters < budget {
        o.phi_grad_into(&x, &mut grad);
        for i in 0..n {
            let t = steps[i];
            x[i] = o.prox_p_coord(i, x[i] - t * grad[i], t);
        }
        work += 1.0;
        iters += 1;
        if stop.tick(1.0) && stop.certify(o, &x, &mut work) {
            stopped = true;
            break;
        }
    }
    InnerOutcome {
        x,
        iterations: iters,
        work,
        stopped_early: stopped,
        gap: stop.last_gap,
    }
}
