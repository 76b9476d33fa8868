//! Loopless Katyusha with minibatches and importance sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::problem::SubproblemOracle;

use super::{InnerOutcome, StopCheck};

pub(crate) fn run(
    o: &SubproblemOracle<'_>,
    tau: usize,
    x0: &[f64],
    budget: u64,
    early_stop: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> InnerOutcome {
    let n = o.n();
    let m = o.problem().n_components();
    let mf = m as f64;
    let tf = tau as f64;
    let lj: Vec<f64> = (0..m).map(|j| o.component_lipschitz(j)).collect();
    let sum_l: f64 = lj.iter().sum();
    let mu = o.mu_s();

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
    if sum_l == 0.0 {
        // φ_s is constant, so the minimizer of P_s is exact
        let mut x = vec![0.0; n];
        o.problem().g().prox_into(o.anchor(), 1.0 / o.beta(), &mut x);
        return InnerOutcome {
            x,
            iterations: 1,
            work,
            stopped_early: false,
            gap: None,
        };
    }

    let probs: Vec<f64> = lj.iter().map(|l| l / sum_l).collect();
    let sampler = WeightedIndex::new(&lj).expect("positive total weight");
    let l_bar = sum_l / mf;
    let big_l = l_bar;
    let theta2 = 1.0 / (2.0 * tf);
    let theta1 = (mu * mf / l_bar).sqrt().min(1.0) * theta2;
    let alpha = 1.0 / (3.0 * theta1 * big_l);
    let p_refresh = (tf / mf).min(1.0);
    let sample_work = 2.0 * tf / mf;

    let h0 = o.eval_h_unchecked(x0);
    work += 0.5;

    let mut y = x0.to_vec();
    let mut z = x0.to_vec();
    let mut w = x0.to_vec();
    let mut grad_w = vec![0.0; n];
    o.phi_grad_into(&w, &mut grad_w);
    work += 1.0;
    let mut x = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut z_new = vec![0.0; n];
    let mut iters = 0u64;
    let mut stopped = false;

    while iters < budget {
        for i in 0..n {
            x[i] = theta1 * z[i] + theta2 * w[i] + (1.0 - theta1 - theta2) * y[i];
        }
        g.copy_from_slice(&grad_w);
        for _ in 0..tau {
            let j = sampler.sample(rng);
            let s = 1.0 / (tf * mf * probs[j]);
            o.component_grad_add(j, &x, s, &mut g);
            o.component_grad_add(j, &w, -s, &mut g);
        }
        for i in 0..n {
            v[i] = z[i] - alpha * g[i];
        }
        o.prox_p_into(&v, alpha, &mut z_new);
        let refresh = rng.random::<f64>() < p_refresh;
        if refresh {
            w.copy_from_slice(&y);
        }
        for i in 0..n {
            y[i] = x[i] + theta1 * (z_new[i] - z[i]);
        }
        std::mem::swap(&mut z, &mut z_new);
        work += sample_work;
        if refresh {
            o.phi_grad_into(&w, &mut grad_w);
            work += 1.0;
        }
        iters += 1;
        if stop.tick(sample_work) && stop.certify(o, &y, &mut work) {
            stopped = true;
            break;
        }
    }
    if !stopped {
        let hy = o.eval_h_unchecked(&y);
        work += 0.5;
        if hy > h0 {
            y.copy_from_slice(x0);
        }
    }
    InnerOutcome {
        x: y,
        iterations: iters,
        work,
        stopped_early: stopped,
        gap: stop.last_gap,
    }
}
