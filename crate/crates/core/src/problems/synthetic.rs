//! Seeded desk-scale instances, several with a certified optimum.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{IpalmError, Result};
use crate::linalg::{dot, SparseMatrix};
use crate::problem::{CompositeProblem, RowBlock};
use crate::prox::{SimpleFunction, SimpleSet};

use super::{build_problem, normalize_rows, BenchmarkKind, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticFamily {
    EqualityQp,
    BasisPursuit,
    Lad,
    FusedLasso,
    Svm,
}

impl FromStr for SyntheticFamily {
    type Err = IpalmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qp" | "equality_qp" | "eqp" => Ok(SyntheticFamily::EqualityQp),
            "bp" | "basis_pursuit" => Ok(SyntheticFamily::BasisPursuit),
            "lad" => Ok(SyntheticFamily::Lad),
            "fused_lasso" | "fused-lasso" => Ok(SyntheticFamily::FusedLasso),
            "svm" => Ok(SyntheticFamily::Svm),
            other => Err(IpalmError::Config(format!("unknown synthetic family '{other}'"))),
        }
    }
}

impl fmt::Display for SyntheticFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticFamily::EqualityQp => "equality_qp",
            SyntheticFamily::BasisPursuit => "basis_pursuit",
            SyntheticFamily::Lad => "lad",
            SyntheticFamily::FusedLasso => "fused_lasso",
            SyntheticFamily::Svm => "svm",
        })
    }
}

/// A generated problem with whatever optimality information is known.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub problem: CompositeProblem,
    pub data: Option<LabeledDataset>,
    pub x_star: Option<Vec<f64>>,
    pub lam_star: Option<Vec<f64>>,
    pub f_star: Option<f64>,
}

/// Builds an instance of `family` with `m` rows, `n` variables and, for basis
/// pursuit, `sparsity` planted nonzeros.
pub fn synthetic_instance(
    family: SyntheticFamily,
    m: usize,
    n: usize,
    sparsity: usize,
    seed: u64,
) -> Result<SyntheticInstance> {
    if n == 0 || n > 200 {
        return Err(IpalmError::InvalidParameter(format!(
            "synthetic n must lie in 1..=200, got {n}"
        )));
    }
    match family {
        SyntheticFamily::EqualityQp => {
            let q = equality_qp(n, m, seed)?;
            let f_star = 0.5
                * q.x_star
                    .iter()
                    .zip(&q.center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            Ok(SyntheticInstance {
                problem: q.problem,
                data: None,
                x_star: Some(q.x_star),
                lam_star: Some(q.lam_star),
                f_star: Some(f_star),
            })
        }
        SyntheticFamily::BasisPursuit => {
            let bp = planted_basis_pursuit(m, n, sparsity, seed)?;
            Ok(SyntheticInstance {
                problem: bp.problem,
                data: Some(bp.data),
                x_star: Some(bp.x_star),
                lam_star: None,
                f_star: Some(bp.f_star),
            })
        }
        SyntheticFamily::Lad => {
            let lad = lad_instance(m, n, 0.01, seed)?;
            Ok(SyntheticInstance {
                problem: lad.problem,
                data: Some(lad.data),
                x_star: Some(lad.x_star),
                lam_star: None,
                f_star: Some(lad.f_star),
            })
        }
        SyntheticFamily::FusedLasso => {
            let data = fused_lasso_data(m, n, seed)?;
            let kind = BenchmarkKind::FusedLasso {
                lambda_r: 0.01,
                lambda_1mr: 0.01,
                mu: 0.0,
            };
            Ok(SyntheticInstance {
                problem: build_problem(kind, &data)?,
                data: Some(data),
                x_star: None,
                lam_star: None,
                f_star: None,
            })
        }
        SyntheticFamily::Svm => {
            let data = classification_data(m, n, seed)?;
            Ok(SyntheticInstance {
                problem: build_problem(BenchmarkKind::SoftMarginSvm { lambda: 0.01 }, &data)?,
                data: Some(data),
                x_star: None,
                lam_star: None,
                f_star: None,
            })
        }
    }
}

fn gaussian_rows(rng: &mut ChaCha8Rng, m: usize, n: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// Gaussian elimination with partial pivoting; `None` if numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// `min ½‖x − c‖²  s.t.  Ax = b` with its closed-form primal-dual solution.
#[derive(Debug, Clone)]
pub struct EqualityQp {
    pub problem: CompositeProblem,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub center: Vec<f64>,
    pub x_star: Vec<f64>,
    /// Satisfies `x* − c + Aᵀλ* = 0`.
    pub lam_star: Vec<f64>,
}

/// `min ½‖x‖² s.t. ⟨1, x⟩ = n`, solved by `x* = 1`, `λ* = −1`.
pub fn simple_equality_qp(n: usize) -> Result<EqualityQp> {
    let a = vec![vec![1.0; n]];
    qp_from_parts(a, vec![n as f64], vec![0.0; n])
}

/// Random `k × n` equality QP (`k = 0` picks `max(1, n/4)` rows).
pub fn equality_qp(n: usize, k: usize, seed: u64) -> Result<EqualityQp> {
    let k = if k == 0 { (n / 4).max(1) } else { k };
    if k > n {
        return Err(IpalmError::InvalidParameter(format!("need k <= n, got {k} > {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_rows(&mut rng, k, n, 1.0 / (n as f64).sqrt());
    let center: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    qp_from_parts(a, b, center)
}

fn qp_from_parts(a: Vec<Vec<f64>>, b: Vec<f64>, center: Vec<f64>) -> Result<EqualityQp> {
    let n = center.len();
    let k = a.len();
    // (A Aᵀ) λ = A c − b, x = c − Aᵀλ
    let gram: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| dot(&a[i], &a[j])).collect()).collect();
    let rhs: Vec<f64> = (0..k).map(|i| dot(&a[i], &center) - b[i]).collect();
    let lam_star = solve_dense(gram, rhs)
        .ok_or_else(|| IpalmError::InvalidParameter("constraint rows are linearly dependent".into()))?;
    let mut x_star = center.clone();
    for (i, row) in a.iter().enumerate() {
        for j in 0..n {
            x_star[j] -= row[j] * lam_star[i];
        }
    }
    let problem = CompositeProblem::new(
        n,
        vec![
            RowBlock::smooth(SparseMatrix::identity(n), center.clone()),
            RowBlock::constraint(SparseMatrix::from_dense(&a)?, SimpleSet::point(b.clone())?),
        ],
        SimpleFunction::zero(),
    )?;
    Ok(EqualityQp {
        problem,
        a,
        b,
        center,
        x_star,
        lam_star,
    })
}

/// Basis pursuit with a planted sparse solution and a dual certificate.
#[derive(Debug, Clone)]
pub struct PlantedBasisPursuit {
    pub problem: CompositeProblem,
    pub data: LabeledDataset,
    pub x_star: Vec<f64>,
    pub support: Vec<usize>,
    /// `y` with `A_Sᵀy = sign(x*_S)` and `‖A_{S^c}ᵀy‖∞ < 1`.
    pub certificate: Vec<f64>,
    pub f_star: f64,
}

impl PlantedBasisPursuit {
    /// Returns `(max_S |a_jᵀy − sign_j|, max_{S^c} |a_jᵀy|)`.
    pub fn certificate_residuals(&self) -> (f64, f64) {
        let aty = self.data.x.apply(&self.certificate, true).expect("matching dimensions");
        let mut on = 0.0f64;
        let mut off = 0.0f64;
        for (j, v) in aty.iter().enumerate() {
            if self.support.contains(&j) {
                on = on.max((v - self.x_star[j].signum()).abs());
            } else {
                off = off.max(v.abs());
            }
        }
        (on, off)
    }

    pub fn certificate_holds(&self, tol: f64) -> bool {
        let (on, off) = self.certificate_residuals();
        on <= tol && off < 1.0
    }
}

/// Plants a `sparsity`-sparse `x*` in an `m × n` Gaussian system. Off-support
/// columns are bent so the least-norm certificate satisfies `|a_jᵀy| ≤ ½`,
/// which makes `x*` the unique minimizer.
pub fn planted_basis_pursuit(m: usize, n: usize, sparsity: usize, seed: u64) -> Result<PlantedBasisPursuit> {
    if sparsity == 0 || sparsity > m || m > n {
        return Err(IpalmError::InvalidParameter(format!(
            "need 0 < sparsity <= m <= n, got sparsity={sparsity}, m={m}, n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = gaussian_rows(&mut rng, n, m, 1.0 / (m as f64).sqrt());
    let mut support = sample(&mut rng, n, sparsity).into_vec();
    support.sort_unstable();
    let signs: Vec<f64> = (0..sparsity)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();

    let gram: Vec<Vec<f64>> = support
        .iter()
        .map(|&i| support.iter().map(|&j| dot(&cols[i], &cols[j])).collect())
        .collect();
    let w = solve_dense(gram, signs.clone())
        .ok_or_else(|| IpalmError::InvalidParameter("support columns are dependent".into()))?;
    let mut y = vec![0.0; m];
    for (k, &j) in support.iter().enumerate() {
        for r in 0..m {
            y[r] += w[k] * cols[j][r];
        }
    }
    let yy = dot(&y, &y);
    let mut cols = cols;
    for (j, col) in cols.iter_mut().enumerate() {
        if support.contains(&j) {
            continue;
        }
        let c = dot(col, &y);
        let t = c.clamp(-0.5, 0.5);
        if t != c {
            let shift = (t - c) / yy;
            for r in 0..m {
                col[r] += shift * y[r];
            }
        }
    }

    let mut x_star = vec![0.0; n];
    for (k, &j) in support.iter().enumerate() {
        x_star[j] = signs[k] * (1.0 + rng.random::<f64>());
    }
    let rows: Vec<Vec<f64>> = (0..m).map(|r| (0..n).map(|j| cols[j][r]).collect()).collect();
    let b: Vec<f64> = rows.iter().map(|row| dot(row, &x_star)).collect();
    let data = LabeledDataset::new(SparseMatrix::from_dense(&rows)?, b)?;
    let problem = build_problem(BenchmarkKind::BasisPursuit, &data)?;
    let f_star = x_star.iter().map(|v| v.abs()).sum();
    let out = PlantedBasisPursuit {
        problem,
        data,
        x_star,
        support,
        certificate: y,
        f_star,
    };
    debug_assert!(out.certificate_holds(1e-8));
    Ok(out)
}

/// LAD instance small enough for exhaustive vertex enumeration.
#[derive(Debug, Clone)]
pub struct LadInstance {
    pub problem: CompositeProblem,
    pub data: LabeledDataset,
    pub lambda: f64,
    pub x_star: Vec<f64>,
    pub f_star: f64,
}

pub fn lad_instance(m: usize, n: usize, lambda: f64, seed: u64) -> Result<LadInstance> {
    if n == 0 || n > 6 || m == 0 || m > 16 {
        return Err(IpalmError::InvalidParameter(format!(
            "vertex enumeration needs n <= 6 and m <= 16, got n={n}, m={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = gaussian_rows(&mut rng, m, n, 1.0);
    let x_true: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let b: Vec<f64> = rows
        .iter()
        .map(|r| dot(r, &x_true) + 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let (f_star, x_star) = lad_vertex_optimum(&rows, &b, lambda);
    let data = LabeledDataset::new(SparseMatrix::from_dense(&rows)?, b)?;
    let problem = build_problem(BenchmarkKind::Lad { lambda }, &data)?;
    Ok(LadInstance {
        problem,
        data,
        lambda,
        x_star,
        f_star,
    })
}

/// Minimizes `Σ|a_iᵀx − b_i| + λ‖x‖₁` by evaluating every vertex of the
/// hyperplane arrangement `{a_iᵀx = b_i} ∪ {x_j = 0}`.
pub fn lad_vertex_optimum(a: &[Vec<f64>], b: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let n = a.first().map_or(0, Vec::len);
    let mut planes: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }
    let value = |x: &[f64]| {
        a.iter().zip(b).map(|(r, bi)| (dot(r, x) - bi).abs()).sum::<f64>()
            + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut best = (value(&vec![0.0; n]), vec![0.0; n]);
    let mut idx: Vec<usize> = (0..n).collect();
    let p = planes.len();
    loop {
        let m: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let r: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_dense(m, r) {
            let v = value(&x);
            if v < best.0 {
                best = (v, x);
            }
        }
        // next n-subset in lexicographic order
        let mut k = n;
        while k > 0 && idx[k - 1] == p - n + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for t in k..n {
            idx[t] = idx[t - 1] + 1;
        }
    }
    best
}

/// Piecewise-constant signal observed through unit-norm Gaussian rows.
pub fn fused_lasso_data(m: usize, n: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = gaussian_rows(&mut rng, m, n, 1.0);
    let x = normalize_rows(&SparseMatrix::from_dense(&rows)?);
    let mut signal = vec![0.0; n];
    let mut level = 0.0;
    for (i, v) in signal.iter_mut().enumerate() {
        if i % (n / 4).max(1) == 0 {
            level = if rng.random::<f64>() < 0.5 {
                0.0
            } else {
                rng.sample::<f64, _>(StandardNormal)
            };
        }
        *v = level;
    }
    let clean = x.apply(&signal, false)?;
    let labels = clean
        .iter()
        .map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    LabeledDataset::new(x, labels)
}

/// Linearly separable-ish ±1 data with unit-norm rows.
pub fn classification_data(m: usize, n: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let rows = gaussian_rows(&mut rng, m, n, 1.0);
    let x = normalize_rows(&SparseMatrix::from_dense(&rows)?);
    let scores = x.apply(&w, false)?;
    let labels = scores
        .iter()
        .map(|s| {
            let flip = rng.random::<f64>() < 0.05;
            if (*s >= 0.0) != flip {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    LabeledDataset::new(x, labels)
}

/// `ratio·n` unit-norm Gaussian rows with a noisy linear response.
pub fn unit_row_data(n: usize, ratio: usize, seed: u64) -> Result<LabeledDataset> {
    let m = ratio * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = gaussian_rows(&mut rng, m, n, 1.0);
    let x = normalize_rows(&SparseMatrix::from_dense(&rows)?);
    let w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let clean = x.apply(&w, false)?;
    let labels = clean
        .iter()
        .map(|v| v + 0.1 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    LabeledDataset::new(x, labels)
}
