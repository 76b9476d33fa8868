//! Monotone FISTA with fixed-interval restart.

use crate::linalg::axpy;
use crate::problem::SubproblemOracle;

use super::{InnerOutcome, StopCheck};

pub(crate) fn run(o: &SubproblemOracle<'_>, x0: &[f64], budget: u64, early_stop: Option<f64>) -> InnerOutcome {
    let n = o.n();
    let l = o.l_s();
    let mu = o.mu_s();
    let step = 1.0 / l;
    let restart = (2.0 * (2.0 * l / mu).sqrt()).ceil().max(1.0) as u64;

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
    let mut x_prev = x0.to_vec();
    let mut y = x0.to_vec();
    let mut hx = o.eval_h_unchecked(&x);
    work += 0.5;
    let mut theta = 1.0_f64;
    let mut grad = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut iters = 0;
    let mut stopped = false;

    while iters < budget {
        if iters % restart == 0 {
            y.copy_from_slice(&x);
            x_prev.copy_from_slice(&x);
            theta = 1.0;
        }
        o.phi_grad_into(&y, &mut grad);
        let mut v = y.clone();
        axpy(-step, &grad, &mut v);
        o.prox_p_into(&v, step, &mut z);
        let hz = o.eval_h_unchecked(&z);
        work += 1.5;
        iters += 1;

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        x_prev.copy_from_slice(&x);
        if hz <= hx {
            x.copy_from_slice(&z);
            hx = hz;
        }
        // y = x + (θ/θ')(z − x) + ((θ − 1)/θ')(x − x_prev)
        let a = theta / theta_next;
        let b = (theta - 1.0) / theta_next;
        for i in 0..n {
            y[i] = x[i] + a * (z[i] - x[i]) + b * (x[i] - x_prev[i]);
        }
        theta = theta_next;

        if stop.tick(1.5) && stop.certify(o, &x, &mut work) {
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
