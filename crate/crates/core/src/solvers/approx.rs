//! Serial accelerated proximal coordinate descent (APPROX) with restarts.
//!
//! Iterates are kept in the `x = θ²u + z` representation so each step touches
//! one coordinate and the rows of one column.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::problem::SubproblemOracle;

use super::{InnerOutcome, StopCheck};

pub(crate) fn run(
    o: &SubproblemOracle<'_>,
    x0: &[f64],
    budget: u64,
    early_stop: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> InnerOutcome {
    let p = o.problem();
    let n = o.n();
    let nf = n as f64;
    let a = p.stacked();
    let at = p.stacked_transpose();
    let mu = o.mu_s();
    let mut v = o.coordinate_lipschitz();
    let max_v = v.iter().copied().fold(0.0, f64::max);
    let floor = 1e-12 * (max_v + mu);
    v.iter_mut().for_each(|vi| *vi = vi.max(floor));
    let epoch = (2.0 * nf * (2.0 * max_v / mu + 2.0).sqrt()).ceil().max(1.0) as u64;
    // one coordinate step costs about a 1/n share of a full pass
    let coord_work = 1.0 / nf;

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

    let rows = a.n_rows();
    let mut best = x0.to_vec();
    let mut h_best = o.eval_h_unchecked(x0);
    work += 0.5;

    let mut z = x0.to_vec();
    let mut az = vec![0.0; rows];
    a.apply_into(&z, &mut az);
    let mut u = vec![0.0; n];
    let mut au = vec![0.0; rows];
    let mut theta = 1.0 / nf;
    let mut in_epoch = 0u64;
    let mut updates = 0usize;
    let mut iters = 0u64;
    let mut stopped = false;
    let mut x = vec![0.0; n];

    let assemble = |theta: f64, u: &[f64], z: &[f64], out: &mut [f64]| {
        let t2 = theta * theta;
        for i in 0..out.len() {
            out[i] = t2 * u[i] + z[i];
        }
    };

    while iters < budget {
        let i = rng.random_range(0..n);
        let t2 = theta * theta;
        let g = o.coordinate_grad_with(i, |r| t2 * au[r] + az[r]);
        let step = 1.0 / (nf * theta * v[i]);
        let zi_new = o.prox_p_coord(i, z[i] - step * g, step);
        let dz = zi_new - z[i];
        if dz != 0.0 {
            z[i] = zi_new;
            at.add_row_scaled(i, dz, &mut az);
            let du = -(1.0 - nf * theta) / t2 * dz;
            u[i] += du;
            at.add_row_scaled(i, du, &mut au);
            updates += 1;
        }
        iters += 1;
        in_epoch += 1;
        let theta_used = theta;
        theta = 0.5 * ((t2 * t2 + 4.0 * t2).sqrt() - t2);

        work += coord_work;
        let epoch_done = in_epoch >= epoch || iters == budget;
        let check = stop.tick(coord_work);
        if epoch_done || check {
            assemble(theta_used, &u, &z, &mut x);
            let hx = o.eval_h_unchecked(&x);
            work += 0.5;
            if hx <= h_best {
                best.copy_from_slice(&x);
                h_best = hx;
            }
            if check && stop.certify(o, &x, &mut work) {
                best.copy_from_slice(&x);
                stopped = true;
                break;
            }
        }
        if epoch_done {
            // restart from the best point seen
            z.copy_from_slice(&best);
            a.apply_into(&z, &mut az);
            u.iter_mut().for_each(|v| *v = 0.0);
            au.iter_mut().for_each(|v| *v = 0.0);
            theta = 1.0 / nf;
            in_epoch = 0;
            updates = 0;
            work += 0.5;
        } else if updates >= 10 * n {
            a.apply_into(&z, &mut az);
            a.apply_into(&u, &mut au);
            updates = 0;
            work += 1.0;
        }
    }
    InnerOutcome {
        x: best,
        iterations: iters,
        work,
        stopped_early: stopped,
        gap: stop.last_gap,
    }
}
