//! Data ingestion, preprocessing and builders for the benchmark families.

mod libsvm;
pub mod synthetic;

pub use libsvm::{parse_libsvm, read_libsvm, write_libsvm};

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, check_finite, IpalmError, Result};
use crate::linalg::SparseMatrix;
use crate::problem::{CompositeProblem, RowBlock};
use crate::prox::{SimpleFunction, SimpleSet};

/// Samples as rows of `x`, one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: SparseMatrix,
    pub labels: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(x: SparseMatrix, labels: Vec<f64>) -> Result<Self> {
        check_dim(x.n_rows(), labels.len(), "labels")?;
        check_finite(&labels, "labels")?;
        Ok(Self { x, labels })
    }

    pub fn n_samples(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    /// Same labels, rows scaled to unit norm.
    pub fn normalized(&self) -> Self {
        Self {
            x: normalize_rows(&self.x),
            labels: self.labels.clone(),
        }
    }
}

/// Scales every nonzero row to unit Euclidean norm.
pub fn normalize_rows(x: &SparseMatrix) -> SparseMatrix {
    let scales: Vec<f64> = x
        .row_squared_norms()
        .into_iter()
        .map(|s| if s > 0.0 { 1.0 / s.sqrt() } else { 1.0 })
        .collect();
    x.scale_rows(&scales).expect("one scale per row")
}

/// The benchmark formulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchmarkKind {
    /// `‖Ax − b‖₁ + λ‖x‖₁`.
    Lad { lambda: f64 },
    /// `‖x‖₁` s.t. `Ax = b`.
    BasisPursuit,
    /// `½‖Ax − b‖² + λr‖x‖₁ + λ(1−r) Σ|x_i − x_{i+1}| + (μ/2)‖x‖²`.
    FusedLasso { lambda_r: f64, lambda_1mr: f64, mu: f64 },
    /// `(1/m) Σ max(0, 1 − b_i(a_iᵀx − ω)) + λ‖x‖₁` over `(x, ω)`.
    SoftMarginSvm { lambda: f64 },
}

impl BenchmarkKind {
    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkKind::Lad { .. } => "lad",
            BenchmarkKind::BasisPursuit => "basis_pursuit",
            BenchmarkKind::FusedLasso { .. } => "fused_lasso",
            BenchmarkKind::SoftMarginSvm { .. } => "svm",
        }
    }

    /// The formulation with its default weights (`λ = 0.01`).
    pub fn default_for(name: &str) -> Result<Self> {
        name.parse()
    }

    fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(IpalmError::InvalidParameter(format!(
                    "{what} must be positive, got {v}"
                )))
            }
        };
        match *self {
            BenchmarkKind::Lad { lambda } | BenchmarkKind::SoftMarginSvm { lambda } => pos(lambda, "lambda"),
            BenchmarkKind::BasisPursuit => Ok(()),
            BenchmarkKind::FusedLasso {
                lambda_r,
                lambda_1mr,
                mu,
            } => {
                pos(lambda_r, "lambda_r")?;
                pos(lambda_1mr, "lambda_1mr")?;
                if mu >= 0.0 && mu.is_finite() {
                    Ok(())
                } else {
                    Err(IpalmError::InvalidParameter(format!(
                        "mu must be nonnegative, got {mu}"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = IpalmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lad" => Ok(BenchmarkKind::Lad { lambda: 0.01 }),
            "bp" | "basis_pursuit" | "basis-pursuit" => Ok(BenchmarkKind::BasisPursuit),
            "fused_lasso" | "fused-lasso" | "fusedlasso" => Ok(BenchmarkKind::FusedLasso {
                lambda_r: 0.01,
                lambda_1mr: 0.01,
                mu: 0.0,
            }),
            "svm" => Ok(BenchmarkKind::SoftMarginSvm { lambda: 0.01 }),
            other => Err(IpalmError::Config(format!("unknown problem kind '{other}'"))),
        }
    }
}

/// `(n−1) × n` first-difference matrix, rows `x_i − x_{i+1}`.
pub fn difference_matrix(n: usize) -> SparseMatrix {
    let rows = n.saturating_sub(1);
    let mut t = Vec::with_capacity(2 * rows);
    for i in 0..rows {
        t.push((i, i, 1.0));
        t.push((i, i + 1, -1.0));
    }
    SparseMatrix::from_triplets(rows, n, &t).expect("indices in range")
}

/// Assembles the composite problem of `kind` on `data`.
pub fn build_problem(kind: BenchmarkKind, data: &LabeledDataset) -> Result<CompositeProblem> {
    kind.validate()?;
    let m = data.n_samples();
    let n = data.n_features();
    if m == 0 || n == 0 {
        return Err(IpalmError::InvalidParameter(format!(
            "dataset must be nonempty, got {m}x{n}"
        )));
    }
    let a = data.x.clone();
    let b = data.labels.clone();
    match kind {
        BenchmarkKind::Lad { lambda } => CompositeProblem::new(
            n,
            vec![RowBlock::nonsmooth(a, SimpleFunction::abs_sum_centered(1.0, b)?)],
            SimpleFunction::l1(lambda)?,
        ),
        BenchmarkKind::BasisPursuit => CompositeProblem::new(
            n,
            vec![RowBlock::constraint(a, SimpleSet::point(b)?)],
            SimpleFunction::l1(1.0)?,
        ),
        BenchmarkKind::FusedLasso {
            lambda_r,
            lambda_1mr,
            mu,
        } => {
            let mut blocks = vec![RowBlock::smooth(a, b)];
            if n > 1 {
                blocks.push(RowBlock::nonsmooth(
                    difference_matrix(n),
                    SimpleFunction::abs_sum(lambda_1mr)?,
                ));
            }
            CompositeProblem::new(n, blocks, SimpleFunction::l1(lambda_r)?.with_mu(mu)?)
        }
        BenchmarkKind::SoftMarginSvm { lambda } => {
            if let Some(bad) = b.iter().find(|v| v.abs() != 1.0) {
                return Err(IpalmError::InvalidParameter(format!(
                    "svm labels must be ±1, found {bad}"
                )));
            }
            let mut t = Vec::with_capacity(a.nnz() + m);
            for (i, &bi) in b.iter().enumerate() {
                for (j, v) in a.row(i) {
                    t.push((i, j, bi * v));
                }
                t.push((i, n, -bi));
            }
            let rows = SparseMatrix::from_triplets(m, n + 1, &t)?;
            let mut w = vec![lambda; n + 1];
            w[n] = 0.0;
            CompositeProblem::new(
                n + 1,
                vec![RowBlock::nonsmooth(
                    rows,
                    SimpleFunction::hinge(1.0 / m as f64, vec![1.0])?,
                )],
                SimpleFunction::weighted_l1(w)?,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident_data() -> LabeledDataset {
        LabeledDataset::new(SparseMatrix::identity(2), vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let x = SparseMatrix::from_dense(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        let y = normalize_rows(&x).to_dense();
        assert!((y[0][0] - 0.6).abs() < 1e-15 && (y[0][1] - 0.8).abs() < 1e-15);
        assert_eq!(y[1], vec![0.0, 0.0]);
    }

    #[test]
    fn lad_value_by_hand() {
        let p = build_problem(BenchmarkKind::Lad { lambda: 0.01 }, &ident_data()).unwrap();
        assert!((p.objective(&[1.0, 1.0]).unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn basis_pursuit_tie() {
        let data = LabeledDataset::new(SparseMatrix::from_dense(&[vec![1.0, 1.0]]).unwrap(), vec![1.0]).unwrap();
        let p = build_problem(BenchmarkKind::BasisPursuit, &data).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert!((p.objective(&[t, 1.0 - t]).unwrap() - 1.0).abs() < 1e-15);
            assert!(p.infeasibility(&[t, 1.0 - t]).unwrap() < 1e-15);
        }
    }

    #[test]
    fn fused_lasso_defaults() {
        match "fused_lasso".parse::<BenchmarkKind>().unwrap() {
            BenchmarkKind::FusedLasso {
                lambda_r, lambda_1mr, ..
            } => {
                assert_eq!(lambda_r, 0.01);
                assert_eq!(lambda_1mr, 0.01);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn svm_requires_signed_labels() {
        let data = LabeledDataset::new(SparseMatrix::identity(2), vec![1.0, 2.0]).unwrap();
        assert!(build_problem(BenchmarkKind::SoftMarginSvm { lambda: 0.1 }, &data).is_err());
        assert!(build_problem(BenchmarkKind::Lad { lambda: 0.0 }, &ident_data()).is_err());
    }

    #[test]
    fn difference_matrix_shape() {
        let d = difference_matrix(3).to_dense();
        assert_eq!(d, vec![vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]]);
        assert_eq!(difference_matrix(1).n_rows(), 0);
    }
}
