//! Compressed sparse row matrices and the dense kernels the solvers share.
//!
//! Dense vectors are plain `Vec<f64>` / `&[f64]`. Every reduction sums left to
//! right in storage order so results are bit-identical run to run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, check_finite, IpalmError, Result};

pub const DEFAULT_POWER_REL_TOL: f64 = 1e-6;
pub const DEFAULT_POWER_MAX_ITER: usize = 200;
pub const DEFAULT_POWER_SEED: u64 = 0x5eed;

/// Row-major compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating every structural invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_dim(n_rows + 1, row_offsets.len(), "row_offsets length")?;
        check_dim(values.len(), col_indices.len(), "col_indices length")?;
        if row_offsets[0] != 0 || row_offsets[n_rows] != values.len() {
            return Err(IpalmError::InvalidParameter(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(IpalmError::InvalidParameter(format!(
                    "row_offsets decreases at row {r}"
                )));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(IpalmError::InvalidParameter(format!(
                    "column indices of row {r} are not strictly increasing"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(IpalmError::InvalidParameter(format!(
                        "column index {c} out of range in row {r}"
                    )));
                }
            }
        }
        check_finite(&values, "sparse matrix values")?;
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed,
    /// explicit zeros are kept out of the structure.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= n_rows || c >= n_cols {
                return Err(IpalmError::InvalidParameter(format!(
                    "triplet ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        let m = Self::from_csr(n_rows, n_cols, row_offsets, col_indices, values)?;
        Ok(m.pruned())
    }

    /// Builds a matrix from dense rows; zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in rows {
            check_dim(n_cols, row.len(), "dense row length")?;
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(values.len());
        }
        Self::from_csr(n_rows, n_cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let triplets: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(n, n, &triplets)
    }

    fn pruned(self) -> Self {
        if self.values.iter().all(|&v| v != 0.0) {
            return self;
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(values.len());
        }
        Self {
            row_offsets,
            col_indices,
            values,
            ..self
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates the stored `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_offsets[r + 1] - self.row_offsets[r]
    }

    /// `⟨row r, x⟩` summed in storage order.
    #[inline]
    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        let mut acc = 0.0;
        for k in lo..hi {
            acc += self.values[k] * x[self.col_indices[k]];
        }
        acc
    }

    /// `out += scale * row r`.
    #[inline]
    pub fn add_row_scaled(&self, r: usize, scale: f64, out: &mut [f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        for k in lo..hi {
            out[self.col_indices[k]] += scale * self.values[k];
        }
    }

    /// Sparse matrix-vector product, `A x` or `Aᵀ x`.
    pub fn apply(&self, x: &[f64], transposed: bool) -> Result<Vec<f64>> {
        if transposed {
            check_dim(self.n_rows, x.len(), "apply (transposed)")?;
            let mut out = vec![0.0; self.n_cols];
            self.apply_transpose_into(x, &mut out);
            Ok(out)
        } else {
            check_dim(self.n_cols, x.len(), "apply")?;
            let mut out = vec![0.0; self.n_rows];
            self.apply_into(x, &mut out);
            Ok(out)
        }
    }

    /// `out = A x` without dimension checks.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(r, x);
        }
    }

    /// `out = Aᵀ y` without dimension checks. Accumulates row by row.
    pub fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.n_rows);
        debug_assert_eq!(out.len(), self.n_cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                self.add_row_scaled(r, yr, out);
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let slot = next[c];
                col_indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Stacks matrices vertically. All parts must share the column count.
    pub fn vstack(parts: &[&SparseMatrix]) -> Result<Self> {
        let n_cols = parts.first().map_or(0, |p| p.n_cols);
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut n_rows = 0;
        for p in parts {
            check_dim(n_cols, p.n_cols, "vstack column count")?;
            let base = values.len();
            col_indices.extend_from_slice(&p.col_indices);
            values.extend_from_slice(&p.values);
            row_offsets.extend(p.row_offsets[1..].iter().map(|o| o + base));
            n_rows += p.n_rows;
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Copy of rows `lo..hi`.
    pub fn row_slice(&self, lo: usize, hi: usize) -> Self {
        let base = self.row_offsets[lo];
        let end = self.row_offsets[hi];
        Self {
            n_rows: hi - lo,
            n_cols: self.n_cols,
            row_offsets: self.row_offsets[lo..=hi].iter().map(|o| o - base).collect(),
            col_indices: self.col_indices[base..end].to_vec(),
            values: self.values[base..end].to_vec(),
        }
    }

    /// Multiplies row `r` by `scales[r]`.
    pub fn scale_rows(&self, scales: &[f64]) -> Result<Self> {
        check_dim(self.n_rows, scales.len(), "row scales")?;
        let mut out = self.clone();
        for (r, &s) in scales.iter().enumerate() {
            let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
            out.values[lo..hi].iter_mut().for_each(|v| *v *= s);
        }
        check_finite(&out.values, "scaled matrix")?;
        Ok(out)
    }

    pub fn row_squared_norms(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(_, v)| v * v).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }
}

/// Squared Euclidean norm of every column.
pub fn column_squared_norms(a: &SparseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; a.n_cols()];
    for r in 0..a.n_rows() {
        for (c, v) in a.row(r) {
            out[c] += v * v;
        }
    }
    out
}

/// Power iteration on `AᵀA` from a seeded random start.
///
/// The returned value is `‖A v‖` for a unit vector `v`, so it never exceeds
/// the true spectral norm. See [`spectral_norm_upper_bound`] for the inflated
/// value used wherever an upper bound is required.
pub fn estimate_spectral_norm(a: &SparseMatrix, rel_tol: f64, max_iter: usize, seed: u64) -> f64 {
    assert!(rel_tol > 0.0, "rel_tol must be positive");
    if a.nnz() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // start from the heaviest column direction plus seeded noise; ‖A e_i‖ is
    // itself a lower bound, so the estimate never drops below it
    let colsq = column_squared_norms(a);
    let (heavy, heavy_sq) = colsq
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, c)| if c > best.1 { (i, c) } else { best });
    let mut v: Vec<f64> = (0..a.n_cols()).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm(&v);
    if nv > 0.0 {
        scale(&mut v, 0.5 / nv);
    }
    v[heavy] += 1.0;
    let nv = norm(&v);
    scale(&mut v, 1.0 / nv);
    let mut w = vec![0.0; a.n_rows()];
    let mut sigma = heavy_sq.sqrt();
    let mut last_step: Option<f64> = None;
    for iter in 0..max_iter.max(1) {
        a.apply_into(&v, &mut w);
        let sigma_new = norm(&w);
        if sigma_new == 0.0 {
            v.iter_mut().for_each(|x| *x = 0.0);
            v[heavy] = 1.0;
            continue;
        }
        // the increments shrink geometrically; bound the remaining tail by
        // extrapolating the observed contraction ratio
        if iter > 0 {
            let step = (sigma_new - sigma).abs();
            if let Some(prev) = last_step {
                let q: f64 = if prev > 0.0 { (step / prev).min(0.999) } else { 0.0 };
                let tail = step * q / (1.0 - q);
                let s = sigma_new.max(sigma);
                if step <= rel_tol * s && tail <= rel_tol * s {
                    sigma = s;
                    break;
                }
            }
            last_step = Some(step);
        }
        sigma = sigma_new.max(sigma);
        a.apply_transpose_into(&w, &mut v);
        let nv = norm(&v);
        if nv == 0.0 {
            break;
        }
        scale(&mut v, 1.0 / nv);
    }
    sigma
}

/// `estimate_spectral_norm` inflated by `1 + 10·rel_tol`.
pub fn spectral_norm_upper_bound(a: &SparseMatrix) -> f64 {
    let sigma = estimate_spectral_norm(a, DEFAULT_POWER_REL_TOL, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_SEED);
    sigma * (1.0 + 10.0 * DEFAULT_POWER_REL_TOL)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `‖a − b‖²`.
#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(x: &mut [f64], alpha: f64) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// `a − b` as a new vector.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_by_two() -> SparseMatrix {
        SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap()
    }

    #[test]
    fn apply_hand_examples() {
        let a = two_by_two();
        assert_eq!(a.apply(&[1.0, 1.0], false).unwrap(), vec![3.0, 3.0]);
        assert_eq!(a.apply(&[1.0, 1.0], true).unwrap(), vec![1.0, 5.0]);
        let id = SparseMatrix::identity(3);
        assert_eq!(id.apply(&[4.0, 5.0, 6.0], false).unwrap(), vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn apply_rejects_bad_dims() {
        let a = two_by_two();
        assert!(matches!(
            a.apply(&[1.0, 2.0, 3.0], false),
            Err(IpalmError::DimensionMismatch { .. })
        ));
        assert!(a.apply(&[1.0], true).is_err());
    }

    #[test]
    fn from_csr_validates_structure() {
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![0], vec![f64::NAN]).is_err());
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let a = SparseMatrix::from_triplets(2, 2, &[(1, 1, 2.0), (0, 0, 1.0), (1, 1, -2.0), (0, 1, 4.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.to_dense(), vec![vec![1.0, 4.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn column_norms_hand_examples() {
        assert_eq!(column_squared_norms(&two_by_two()), vec![1.0, 13.0]);
        assert_eq!(column_squared_norms(&SparseMatrix::identity(4)), vec![1.0; 4]);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = SparseMatrix::diagonal(&[3.0, 4.0]).unwrap();
        let s = estimate_spectral_norm(&a, 1e-6, 200, 1);
        assert!((s - 4.0).abs() <= 4e-5, "{s}");
        assert!(s <= 4.0 + 1e-12);
        let up = spectral_norm_upper_bound(&a);
        assert!(up >= 4.0 && up <= 4.0 * (1.0 + 2e-5));
    }

    #[test]
    fn spectral_norm_of_zero_matrix() {
        assert_eq!(estimate_spectral_norm(&SparseMatrix::zeros(2, 2), 1e-6, 200, 1), 0.0);
    }

    #[test]
    fn transpose_and_vstack_roundtrip() {
        let a = two_by_two();
        assert_eq!(a.transpose().transpose(), a);
        let s = SparseMatrix::vstack(&[&a, &SparseMatrix::identity(2)]).unwrap();
        assert_eq!(s.n_rows(), 4);
        assert_eq!(s.row_slice(2, 4), SparseMatrix::identity(2));
        assert_eq!(s.row_slice(0, 2), a);
    }

    fn arb_matrix() -> impl Strategy<Value = SparseMatrix> {
        (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
            proptest::collection::vec(prop_oneof![3 => Just(0.0), 2 => -3.0f64..3.0], r * c).prop_map(move |vals| {
                let rows: Vec<Vec<f64>> = vals.chunks(c).map(|ch| ch.to_vec()).collect();
                SparseMatrix::from_dense(&rows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn adjoint_identity(a in arb_matrix(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..a.n_cols()).map(|_| rng.random::<f64>() - 0.5).collect();
            let y: Vec<f64> = (0..a.n_rows()).map(|_| rng.random::<f64>() - 0.5).collect();
            let lhs = dot(&a.apply(&x, false).unwrap(), &y);
            let rhs = dot(&x, &a.apply(&y, true).unwrap());
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn spectral_norm_dominates_columns(a in arb_matrix()) {
            let s = estimate_spectral_norm(&a, 1e-6, 2000, 3);
            let max_col = column_squared_norms(&a).into_iter().fold(0.0, f64::max).sqrt();
            prop_assert!(s >= max_col * (1.0 - 1e-4) - 1e-9, "{} < {}", s, max_col);
        }
    }
}
