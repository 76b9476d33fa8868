#![allow(dead_code)]

use ipalm::linalg::SparseMatrix;
use ipalm::problem::{CompositeProblem, RowBlock, SubproblemOracle};
use ipalm::prox::{SimpleFunction, SimpleSet};
use ipalm::smoothing::DualPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gauss_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gauss(rng)).collect()
}

pub fn dense_rows(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m).map(|_| gauss_vec(rng, n)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| dot(r, x)).collect()
}

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_max_eigenvalue(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
}

/// `‖A‖₂²` as the top eigenvalue of `AᵀA`.
pub fn spectral_norm_sq(rows: &[Vec<f64>], n: usize) -> f64 {
    let mut g = vec![vec![0.0; n]; n];
    for r in rows {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    jacobi_max_eigenvalue(g)
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-11 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Minimizes `H_s` with restarted FISTA until the gradient mapping vanishes
/// or the value stalls at roundoff; returns `(x, H(x))`.
pub fn reference_minimum(o: &SubproblemOracle<'_>, x0: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let l = o.l_s();
    let mu = o.mu_s();
    let mut x = x0.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut hx = o.eval_h(&x).unwrap();
    let mut best = (x.clone(), hx);
    let mut stalled = 0;
    for _ in 0..max_iter {
        let g = o.grad_phi(&y).unwrap();
        let v: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b / l).collect();
        let xn = o.prox_p(&v, 1.0 / l).unwrap();
        let hn = o.eval_h(&xn).unwrap();
        let gm_sq = l * l * y.iter().zip(&xn).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        if hn < best.1 - 4.0 * f64::EPSILON * hn.abs() {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if hn < best.1 {
            best = (xn.clone(), hn);
        }
        if gm_sq / mu <= 1e-26 * hn.abs().max(1.0) || stalled >= 2_000 {
            break;
        }
        if hn > hx {
            t = 1.0;
            y = x.clone();
            continue;
        }
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = xn.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / tn * (a - b)).collect();
        x = xn;
        hx = hn;
        t = tn;
    }
    best
}

/// A random subproblem with every row type: smooth rows, Lipschitz rows and
/// constraint rows.
pub struct RandomInstance {
    pub problem: CompositeProblem,
    pub lam: DualPoint,
    pub beta: f64,
    pub anchor: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

pub fn random_instance(seed: u64, max_dim: usize, with_ball: bool) -> RandomInstance {
    let mut r = rng(seed);
    let n = r.random_range(2..=max_dim);
    let m_s = r.random_range(0..=max_dim / 4);
    let m_1 = r.random_range(1..=max_dim / 4);
    let m_h = r.random_range(0..=max_dim / 4);
    let m_2 = r.random_range(0..=max_dim / 4);
    let m_b = if with_ball { r.random_range(0..=3usize) } else { 0 };
    let mut all_rows = Vec::new();
    let mut block = |r: &mut ChaCha8Rng, m: usize| {
        let rows = dense_rows(r, m, n);
        all_rows.extend(rows.iter().cloned());
        SparseMatrix::from_dense(&rows).unwrap()
    };
    let mut blocks = Vec::new();
    if m_s > 0 {
        let b = block(&mut r, m_s);
        let c = gauss_vec(&mut r, m_s);
        blocks.push(RowBlock::smooth(b, c));
    }
    let b1 = block(&mut r, m_1);
    let c1 = gauss_vec(&mut r, m_1);
    blocks.push(RowBlock::nonsmooth(
        b1,
        SimpleFunction::abs_sum_centered(r.random_range(0.1..2.0), c1).unwrap(),
    ));
    if m_h > 0 {
        let bh = block(&mut r, m_h);
        let margins = gauss_vec(&mut r, m_h);
        blocks.push(RowBlock::nonsmooth(
            bh,
            SimpleFunction::hinge(r.random_range(0.1..2.0), margins).unwrap(),
        ));
    }
    if m_2 > 0 {
        let b2 = block(&mut r, m_2);
        let lo: Vec<f64> = (0..m_2).map(|_| -r.random_range(0.0..1.0)).collect();
        let hi: Vec<f64> = (0..m_2).map(|_| r.random_range(0.0..1.0)).collect();
        blocks.push(RowBlock::constraint(b2, SimpleSet::boxed(lo, hi).unwrap()));
    }
    if m_b > 0 {
        let bb = block(&mut r, m_b);
        let center = gauss_vec(&mut r, m_b);
        blocks.push(RowBlock::constraint(
            bb,
            SimpleSet::ball(center, r.random_range(0.5..2.0)).unwrap(),
        ));
    }
    let mu_g = if r.random::<f64>() < 0.5 {
        0.0
    } else {
        r.random_range(0.01..0.5)
    };
    let g = SimpleFunction::l1(r.random_range(0.01..0.5))
        .unwrap()
        .with_mu(mu_g)
        .unwrap();
    let problem = CompositeProblem::new(n, blocks, g).unwrap();
    let h = problem.h_spec();
    let mut flat: Vec<f64> = gauss_vec(&mut r, h.d());
    h.project_dual_domain(&mut flat);
    let lam = DualPoint::from_flat(h, &flat).unwrap();
    let beta = r.random_range(0.05..1.0);
    let anchor = gauss_vec(&mut r, n);
    RandomInstance {
        problem,
        lam,
        beta,
        anchor,
        rows: all_rows,
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Minimum of `Σ|a_iᵀx − b_i| + λ‖x‖₁` over all vertices of the arrangement
/// `{a_iᵀx = b_i} ∪ {x_j = 0}`.
pub fn lad_vertex_enumeration(a: &[Vec<f64>], b: &[f64], lambda: f64) -> f64 {
    let n = a[0].len();
    let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }
    let objective = |x: &[f64]| -> f64 {
        a.iter().zip(b).map(|(r, bi)| (dot(r, x) - bi).abs()).sum::<f64>()
            + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let m: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve(m, rhs) {
            best = best.min(objective(&x));
        }
        let total = planes.len();
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < total - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}
