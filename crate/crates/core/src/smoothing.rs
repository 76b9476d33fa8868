//! Moreau smoothing of `h(u) = h1(u1) + δ_K(u2)` and the multiplier map.
//!
//! For `β > 0` and multiplier `λ`,
//!
//! ```text
//! Λ(u; λ, β)  = λ + (u − prox_{βh}(u + βλ)) / β
//! h(u; λ, β)  = h(w) + (β/2)‖Λ‖² − (β/2)‖λ‖²,   w = u − β(Λ − λ) = prox_{βh}(u + βλ)
//! ```
//!
//! Both blocks may be split into several pieces, each with its own catalog
//! function or set. Pieces are laid out contiguously, block 1 first.

use crate::error::{check_dim, IpalmError, Result};
use crate::linalg::{dist_sq, norm_sq};
use crate::prox::{SimpleFunction, SimpleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct H1Piece {
    pub len: usize,
    pub func: SimpleFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetPiece {
    pub len: usize,
    pub set: SimpleSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowOwner {
    H1 { piece: usize, local: usize },
    Set { piece: usize, local: usize },
}

/// The nonsmooth map `h = h1 + δ_K` over `R^{d1} × R^{d2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSpec {
    h1: Vec<H1Piece>,
    k: Vec<SetPiece>,
    h1_offsets: Vec<usize>,
    k_offsets: Vec<usize>,
    d1: usize,
    d2: usize,
    l_h1: f64,
    owners: Vec<RowOwner>,
}

/// Multipliers for the two blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualPoint {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

impl DualPoint {
    pub fn zeros(h: &HSpec) -> Self {
        Self {
            lambda1: vec![0.0; h.d1()],
            lambda2: vec![0.0; h.d2()],
        }
    }

    pub fn from_flat(h: &HSpec, flat: &[f64]) -> Result<Self> {
        check_dim(h.d(), flat.len(), "dual point")?;
        Ok(Self {
            lambda1: flat[..h.d1()].to_vec(),
            lambda2: flat[h.d1()..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.lambda1);
        v.extend_from_slice(&self.lambda2);
        v
    }

    pub fn len(&self) -> usize {
        self.lambda1.len() + self.lambda2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.lambda1) + norm_sq(&self.lambda2)
    }

    pub fn dist_sq(&self, other: &DualPoint) -> f64 {
        dist_sq(&self.lambda1, &other.lambda1) + dist_sq(&self.lambda2, &other.lambda2)
    }

    pub fn dist(&self, other: &DualPoint) -> f64 {
        self.dist_sq(other).sqrt()
    }

    fn check(&self, h: &HSpec) -> Result<()> {
        check_dim(h.d1(), self.lambda1.len(), "lambda1")?;
        check_dim(h.d2(), self.lambda2.len(), "lambda2")
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(IpalmError::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )))
    }
}

impl HSpec {
    /// Builds the map from its pieces. Every `h1` piece must be Lipschitz.
    pub fn new(h1: Vec<H1Piece>, k: Vec<SetPiece>) -> Result<Self> {
        let mut l_sq = 0.0;
        let mut owners = Vec::new();
        let mut h1_offsets = vec![0];
        for (p, piece) in h1.iter().enumerate() {
            piece.func.check_dim(piece.len)?;
            let l = piece.func.lipschitz_constant(piece.len)?;
            l_sq += l * l;
            owners.extend((0..piece.len).map(|local| RowOwner::H1 { piece: p, local }));
            h1_offsets.push(h1_offsets[p] + piece.len);
        }
        let d1 = owners.len();
        let mut k_offsets = vec![0];
        for (p, piece) in k.iter().enumerate() {
            piece.set.check_dim(piece.len)?;
            owners.extend((0..piece.len).map(|local| RowOwner::Set { piece: p, local }));
            k_offsets.push(k_offsets[p] + piece.len);
        }
        let d2 = owners.len() - d1;
        Ok(Self {
            h1,
            k,
            h1_offsets,
            k_offsets,
            d1,
            d2,
            l_h1: l_sq.sqrt(),
            owners,
        })
    }

    /// One `h1` function on `d1` coordinates and one set on `d2` coordinates.
    pub fn simple(h1: Option<(usize, SimpleFunction)>, k: Option<(usize, SimpleSet)>) -> Result<Self> {
        Self::new(
            h1.map(|(len, func)| H1Piece { len, func }).into_iter().collect(),
            k.map(|(len, set)| SetPiece { len, set }).into_iter().collect(),
        )
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new()).expect("empty spec is valid")
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn d(&self) -> usize {
        self.d1 + self.d2
    }

    pub fn l_h1(&self) -> f64 {
        self.l_h1
    }

    pub fn h1_pieces(&self) -> &[H1Piece] {
        &self.h1
    }

    pub fn set_pieces(&self) -> &[SetPiece] {
        &self.k
    }

    /// Row range of `h1` piece `p` in the stacked `(u1; u2)` layout.
    pub fn h1_range(&self, p: usize) -> std::ops::Range<usize> {
        self.h1_offsets[p]..self.h1_offsets[p + 1]
    }

    /// Row range of set piece `p` in the stacked `(u1; u2)` layout.
    pub fn set_range(&self, p: usize) -> std::ops::Range<usize> {
        self.d1 + self.k_offsets[p]..self.d1 + self.k_offsets[p + 1]
    }

    /// True when the constraint block consists of equality constraints only.
    pub fn constraints_are_points(&self) -> bool {
        self.k.iter().all(|p| matches!(p.set, SimpleSet::Point { .. }))
    }

    /// True when row `r` of `(u1; u2)` can be smoothed on its own.
    #[inline]
    pub fn row_is_separable(&self, r: usize) -> bool {
        match self.owners[r] {
            RowOwner::H1 { .. } => true,
            RowOwner::Set { piece, .. } => self.k[piece].set.is_separable(),
        }
    }

    /// Range of rows that must be smoothed together with row `r`.
    pub fn coupled_rows(&self, r: usize) -> std::ops::Range<usize> {
        match self.owners[r] {
            RowOwner::H1 { .. } => r..r + 1,
            RowOwner::Set { piece, .. } => {
                if self.k[piece].set.is_separable() {
                    r..r + 1
                } else {
                    self.set_range(piece)
                }
            }
        }
    }

    /// `Λ_r` for a separable row. `prox` is the recovered point `w_r`.
    #[inline]
    pub fn lambda_coord(&self, r: usize, u: f64, lam: f64, beta: f64) -> (f64, f64) {
        let z = u + beta * lam;
        let w = match self.owners[r] {
            RowOwner::H1 { piece, local } => self.h1[piece].func.prox_coord(local, z, beta),
            RowOwner::Set { piece, local } => self.k[piece].set.project_coord(local, z),
        };
        ((z - w) / beta, w)
    }

    /// Flat multiplier map without checks. Returns the smoothed value.
    pub fn lambda_map_flat(&self, u: &[f64], lam: &[f64], beta: f64, out: &mut [f64]) -> f64 {
        debug_assert_eq!(u.len(), self.d());
        let mut h_val = 0.0;
        for (p, piece) in self.h1.iter().enumerate() {
            let base = self.h1_offsets[p];
            for local in 0..piece.len {
                let r = base + local;
                let z = u[r] + beta * lam[r];
                let w = piece.func.prox_coord(local, z, beta);
                out[r] = (z - w) / beta;
                h_val += piece.func.value_coord(local, w);
            }
        }
        for (p, piece) in self.k.iter().enumerate() {
            let range = self.set_range(p);
            match &piece.set {
                SimpleSet::Ball { .. } => {
                    let z: Vec<f64> = range.clone().map(|r| u[r] + beta * lam[r]).collect();
                    let mut w = vec![0.0; z.len()];
                    piece.set.project_into(&z, &mut w);
                    for (k, r) in range.enumerate() {
                        out[r] = (z[k] - w[k]) / beta;
                    }
                }
                set => {
                    for (local, r) in range.enumerate() {
                        let z = u[r] + beta * lam[r];
                        out[r] = (z - set.project_coord(local, z)) / beta;
                    }
                }
            }
        }
        h_val + 0.5 * beta * (norm_sq(out) - norm_sq(lam))
    }

    /// `Λ(u; λ, β)`.
    pub fn lambda_map(&self, u: &[f64], lam: &DualPoint, beta: f64) -> Result<DualPoint> {
        check_beta(beta)?;
        check_dim(self.d(), u.len(), "smoothing argument")?;
        lam.check(self)?;
        let mut out = vec![0.0; self.d()];
        self.lambda_map_flat(u, &lam.to_flat(), beta, &mut out);
        DualPoint::from_flat(self, &out)
    }

    /// `h(u; λ, β)`.
    pub fn smoothed_value(&self, u: &[f64], lam: &DualPoint, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        check_dim(self.d(), u.len(), "smoothing argument")?;
        lam.check(self)?;
        let mut out = vec![0.0; self.d()];
        Ok(self.lambda_map_flat(u, &lam.to_flat(), beta, &mut out))
    }

    /// Unsmoothed `h1(u1)`.
    pub fn h1_value(&self, u1: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (p, piece) in self.h1.iter().enumerate() {
            acc += piece.func.value(&u1[self.h1_range(p)]);
        }
        acc
    }

    /// `dist(u2, K)`.
    pub fn infeasibility(&self, u2: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (p, piece) in self.k.iter().enumerate() {
            let r = self.k_offsets[p]..self.k_offsets[p + 1];
            let d = piece.set.distance(&u2[r]).expect("piece dimension checked at build");
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Clips a flat multiplier into `dom(h*)`.
    pub fn project_dual_domain(&self, lam: &mut [f64]) {
        for (p, piece) in self.h1.iter().enumerate() {
            piece.func.project_conjugate_domain(&mut lam[self.h1_range(p)]);
        }
        for (p, piece) in self.k.iter().enumerate() {
            let r = self.set_range(p);
            piece.set.project_support_domain(&mut lam[r]);
        }
    }

    /// `h*(y)` for `y` already inside `dom(h*)`.
    pub fn conjugate(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (p, piece) in self.h1.iter().enumerate() {
            for (local, r) in self.h1_range(p).enumerate() {
                acc += piece.func.conjugate_coord(local, y[r]);
            }
        }
        for (p, piece) in self.k.iter().enumerate() {
            acc += piece.set.support(&y[self.set_range(p)]);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs1() -> HSpec {
        HSpec::simple(Some((1, SimpleFunction::abs_sum(1.0).unwrap())), None).unwrap()
    }

    fn point1() -> HSpec {
        HSpec::simple(None, Some((1, SimpleSet::point(vec![1.0]).unwrap()))).unwrap()
    }

    #[test]
    fn lambda_map_examples() {
        let h = abs1();
        let lam = DualPoint::zeros(&h);
        assert_eq!(h.lambda_map(&[2.0], &lam, 1.0).unwrap().lambda1, vec![1.0]);

        let k = point1();
        let lam = DualPoint::zeros(&k);
        assert_eq!(k.lambda_map(&[3.0], &lam, 2.0).unwrap().lambda2, vec![1.0]);
        assert_eq!(k.lambda_map(&[1.0], &lam, 2.0).unwrap().lambda2, vec![0.0]);
    }

    #[test]
    fn smoothed_value_examples() {
        let h = abs1();
        let lam = DualPoint::zeros(&h);
        assert!((h.smoothed_value(&[2.0], &lam, 1.0).unwrap() - 1.5).abs() < 1e-15);
        for beta in [0.1, 1.0, 7.0] {
            assert_eq!(h.smoothed_value(&[0.0], &lam, beta).unwrap(), 0.0);
        }
        let k = point1();
        let lam = DualPoint::zeros(&k);
        assert!((k.smoothed_value(&[3.0], &lam, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_beta_and_dims() {
        let h = abs1();
        let lam = DualPoint::zeros(&h);
        assert!(h.lambda_map(&[1.0], &lam, 0.0).is_err());
        assert!(h.smoothed_value(&[1.0, 2.0], &lam, 1.0).is_err());
    }

    #[test]
    fn lipschitz_constant_aggregates_pieces() {
        let h = HSpec::new(
            vec![
                H1Piece {
                    len: 4,
                    func: SimpleFunction::abs_sum(2.0).unwrap(),
                },
                H1Piece {
                    len: 9,
                    func: SimpleFunction::abs_sum(1.0).unwrap(),
                },
            ],
            vec![],
        )
        .unwrap();
        assert!((h.l_h1() - 5.0).abs() < 1e-15);
        assert!(HSpec::simple(Some((1, SimpleFunction::half_squared(1.0, None).unwrap())), None).is_err());
    }
}
