//! The affine composition model and the per-outer-iteration subproblem.
//!
//! ```text
//! F(x)   = Σ_j ½‖B_j x − c_j‖² + g(x) + h1(A1 x)      s.t.  A2 x ∈ K
//! H_s(x) = φ_s(x) + P_s(x)
//! φ_s(x) = f(x) + h(Ax; λ^s, β_s)
//! P_s(x) = g(x) + (β_s/2)‖x − x^{s−1}‖²
//! ```
//!
//! Internally all rows are stacked as `[S; A1; A2]` where `S` holds the smooth
//! blocks. Rows of separable blocks are finite-sum components of their own;
//! a ball constraint block is a single component.

use std::ops::Range;

use crate::error::{check_dim, check_finite, IpalmError, Result};
use crate::linalg::{column_squared_norms, dist_sq, spectral_norm_upper_bound, SparseMatrix};
use crate::prox::{prox_shifted_quadratic_into, SimpleFunction, SimpleSet};
use crate::smoothing::{DualPoint, H1Piece, HSpec, SetPiece};

#[derive(Debug, Clone, PartialEq)]
pub enum BlockRole {
    /// `½‖B x − c‖²`.
    SmoothHalfSquared { c: Vec<f64> },
    /// `psi(B x)` with `psi` Lipschitz.
    NonsmoothPiece { psi: SimpleFunction },
    /// `B x ∈ set`.
    Constraint { set: SimpleSet },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowBlock {
    pub b: SparseMatrix,
    pub role: BlockRole,
}

impl RowBlock {
    pub fn smooth(b: SparseMatrix, c: Vec<f64>) -> Self {
        Self {
            b,
            role: BlockRole::SmoothHalfSquared { c },
        }
    }

    pub fn nonsmooth(b: SparseMatrix, psi: SimpleFunction) -> Self {
        Self {
            b,
            role: BlockRole::NonsmoothPiece { psi },
        }
    }

    pub fn constraint(b: SparseMatrix, set: SimpleSet) -> Self {
        Self {
            b,
            role: BlockRole::Constraint { set },
        }
    }
}

/// One term of the finite-sum view of `φ_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Rows of the stacked operator.
    pub rows: Range<usize>,
    pub smooth: bool,
    /// `‖B_j‖²` (an upper bound for multi-row components).
    pub norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct CompositeProblem {
    n: usize,
    blocks: Vec<RowBlock>,
    g: SimpleFunction,
    mu_g: f64,
    a: SparseMatrix,
    at: SparseMatrix,
    n_smooth: usize,
    c: Vec<f64>,
    h: HSpec,
    l_f: f64,
    norm_a_h: f64,
    colsq_smooth: Vec<f64>,
    colsq_h: Vec<f64>,
    components: Vec<Component>,
}

impl CompositeProblem {
    pub fn new(n: usize, blocks: Vec<RowBlock>, g: SimpleFunction) -> Result<Self> {
        if n == 0 {
            return Err(IpalmError::InvalidParameter(
                "problem dimension must be positive".into(),
            ));
        }
        g.check_dim(n)?;
        let mut smooth = Vec::new();
        let mut c = Vec::new();
        let mut a1 = Vec::new();
        let mut h1 = Vec::new();
        let mut a2 = Vec::new();
        let mut k = Vec::new();
        for blk in &blocks {
            check_dim(n, blk.b.n_cols(), "block column count")?;
            let rows = blk.b.n_rows();
            match &blk.role {
                BlockRole::SmoothHalfSquared { c: cj } => {
                    check_dim(rows, cj.len(), "smooth block center")?;
                    check_finite(cj, "smooth block center")?;
                    smooth.push(&blk.b);
                    c.extend_from_slice(cj);
                }
                BlockRole::NonsmoothPiece { psi } => {
                    a1.push(&blk.b);
                    h1.push(H1Piece {
                        len: rows,
                        func: psi.clone(),
                    });
                }
                BlockRole::Constraint { set } => {
                    a2.push(&blk.b);
                    k.push(SetPiece {
                        len: rows,
                        set: set.clone(),
                    });
                }
            }
        }
        let h = HSpec::new(h1, k)?;
        let s_mat = SparseMatrix::vstack(&smooth).map(|m| fix_cols(m, n))?;
        let ah_parts: Vec<&SparseMatrix> = a1.iter().chain(a2.iter()).copied().collect();
        let ah_mat = SparseMatrix::vstack(&ah_parts).map(|m| fix_cols(m, n))?;
        let l_f = spectral_norm_upper_bound(&s_mat).powi(2);
        let norm_a_h = spectral_norm_upper_bound(&ah_mat);
        let colsq_smooth = column_squared_norms(&s_mat);
        let colsq_h = column_squared_norms(&ah_mat);
        let a = SparseMatrix::vstack(&[&s_mat, &ah_mat])?;
        let at = a.transpose();
        let n_smooth = s_mat.n_rows();

        let row_sq = a.row_squared_norms();
        let mut components = Vec::new();
        for r in 0..n_smooth {
            components.push(Component {
                rows: r..r + 1,
                smooth: true,
                norm_sq: row_sq[r],
            });
        }
        let mut hr = 0;
        while hr < h.d() {
            let coupled = h.coupled_rows(hr);
            let rows = n_smooth + coupled.start..n_smooth + coupled.end;
            let norm_sq = if coupled.len() == 1 {
                row_sq[rows.start]
            } else {
                spectral_norm_upper_bound(&a.row_slice(rows.start, rows.end)).powi(2)
            };
            components.push(Component {
                rows,
                smooth: false,
                norm_sq,
            });
            hr = coupled.end;
        }
        let mu_g = g.strong_convexity();
        Ok(Self {
            n,
            blocks,
            g,
            mu_g,
            a,
            at,
            n_smooth,
            c,
            h,
            l_f,
            norm_a_h,
            colsq_smooth,
            colsq_h,
            components,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[RowBlock] {
        &self.blocks
    }

    pub fn g(&self) -> &SimpleFunction {
        &self.g
    }

    pub fn mu_g(&self) -> f64 {
        self.mu_g
    }

    pub fn h_spec(&self) -> &HSpec {
        &self.h
    }

    /// Stacked operator `[S; A1; A2]`.
    pub fn stacked(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn stacked_transpose(&self) -> &SparseMatrix {
        &self.at
    }

    pub fn n_smooth_rows(&self) -> usize {
        self.n_smooth
    }

    pub fn smooth_centers(&self) -> &[f64] {
        &self.c
    }

    /// Smoothness constant of `f`.
    pub fn l_f(&self) -> f64 {
        self.l_f
    }

    /// Upper bound on `‖(A1; A2)‖`.
    pub fn norm_a(&self) -> f64 {
        self.norm_a_h
    }

    pub fn colsq_smooth(&self) -> &[f64] {
        &self.colsq_smooth
    }

    pub fn colsq_h(&self) -> &[f64] {
        &self.colsq_h
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// `F(x)`, ignoring the constraint block.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n, x.len(), "objective")?;
        let u = self.a.apply(x, false)?;
        Ok(self.objective_from_residual(x, &u))
    }

    pub(crate) fn objective_from_residual(&self, x: &[f64], u: &[f64]) -> f64 {
        let ns = self.n_smooth;
        0.5 * dist_sq(&u[..ns], &self.c) + self.g.value(x) + self.h.h1_value(&u[ns..ns + self.h.d1()])
    }

    /// `dist(A2 x, K)`.
    pub fn infeasibility(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n, x.len(), "infeasibility")?;
        let u = self.a.apply(x, false)?;
        Ok(self.h.infeasibility(&u[self.n_smooth + self.h.d1()..]))
    }

    /// `(A1 x; A2 x)`.
    pub fn h_residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len(), "h residual")?;
        let u = self.a.apply(x, false)?;
        Ok(u[self.n_smooth..].to_vec())
    }
}

// vstack of an empty list yields zero columns; pin it to n.
fn fix_cols(m: SparseMatrix, n: usize) -> SparseMatrix {
    if m.n_rows() == 0 {
        SparseMatrix::zeros(0, n)
    } else {
        m
    }
}

/// Residual-backed iterate for coordinate methods: keeps `u = A x` in sync.
#[derive(Debug, Clone)]
pub struct ResidualState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    updates: usize,
}

impl ResidualState {
    pub fn new(problem: &CompositeProblem, x: Vec<f64>) -> Result<Self> {
        let u = problem.stacked().apply(&x, false)?;
        Ok(Self { x, u, updates: 0 })
    }

    /// `x_i += delta`, updating the residual in `O(nnz(column i))`.
    pub fn update_coordinate(&mut self, problem: &CompositeProblem, i: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[i] += delta;
        problem.stacked_transpose().add_row_scaled(i, delta, &mut self.u);
        self.updates += 1;
        if self.updates >= 10 * problem.n() {
            self.refresh(problem);
        }
    }

    /// Replaces the iterate and recomputes the residual.
    pub fn set(&mut self, problem: &CompositeProblem, x: &[f64]) {
        self.x.copy_from_slice(x);
        self.refresh(problem);
    }

    pub fn refresh(&mut self, problem: &CompositeProblem) {
        problem.stacked().apply_into(&self.x, &mut self.u);
        self.updates = 0;
    }
}

/// `H_s` for fixed `(λ^s, β_s, x^{s−1})`.
#[derive(Debug, Clone)]
pub struct SubproblemOracle<'a> {
    problem: &'a CompositeProblem,
    lam: Vec<f64>,
    beta: f64,
    anchor: Vec<f64>,
}

impl<'a> SubproblemOracle<'a> {
    pub fn new(problem: &'a CompositeProblem, lam: &DualPoint, beta: f64, anchor: &[f64]) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(IpalmError::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        check_dim(problem.h.d1(), lam.lambda1.len(), "lambda1")?;
        check_dim(problem.h.d2(), lam.lambda2.len(), "lambda2")?;
        check_dim(problem.n, anchor.len(), "anchor")?;
        check_finite(anchor, "anchor")?;
        Ok(Self {
            problem,
            lam: lam.to_flat(),
            beta,
            anchor: anchor.to_vec(),
        })
    }

    pub fn problem(&self) -> &'a CompositeProblem {
        self.problem
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn lam_flat(&self) -> &[f64] {
        &self.lam
    }

    pub fn n(&self) -> usize {
        self.problem.n
    }

    /// Smoothness of `φ_s`: `L_f + ‖A‖²/β_s`.
    pub fn l_s(&self) -> f64 {
        self.problem.l_f + self.problem.norm_a_h.powi(2) / self.beta
    }

    /// Strong convexity of `H_s`: `μ_g + β_s`.
    pub fn mu_s(&self) -> f64 {
        self.problem.mu_g + self.beta
    }

    /// Coordinate smoothness `v_i = (SᵀS)_ii + (AᵀA)_ii / β_s`.
    pub fn coordinate_lipschitz(&self) -> Vec<f64> {
        self.problem
            .colsq_smooth
            .iter()
            .zip(&self.problem.colsq_h)
            .map(|(s, h)| s + h / self.beta)
            .collect()
    }

    /// `L_j` of the `j`-th scaled component.
    pub fn component_lipschitz(&self, j: usize) -> f64 {
        let comp = &self.problem.components[j];
        let m = self.problem.components.len() as f64;
        if comp.smooth {
            m * comp.norm_sq
        } else {
            m * comp.norm_sq / self.beta
        }
    }

    /// Fills `y` with the natural dual vector at residual `u` and returns `φ_s`.
    pub fn dual_from_residual(&self, u: &[f64], y: &mut [f64]) -> f64 {
        let ns = self.problem.n_smooth;
        let mut f = 0.0;
        for r in 0..ns {
            let d = u[r] - self.problem.c[r];
            y[r] = d;
            f += 0.5 * d * d;
        }
        f + self
            .problem
            .h
            .lambda_map_flat(&u[ns..], &self.lam, self.beta, &mut y[ns..])
    }

    /// `φ_s(x)`, writing `∇φ_s(x)` into `grad`.
    pub fn phi_grad_into(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let a = &self.problem.a;
        let mut u = vec![0.0; a.n_rows()];
        a.apply_into(x, &mut u);
        let mut y = vec![0.0; a.n_rows()];
        let phi = self.dual_from_residual(&u, &mut y);
        a.apply_transpose_into(&y, grad);
        phi
    }

    pub fn phi_value(&self, x: &[f64]) -> f64 {
        let a = &self.problem.a;
        let mut u = vec![0.0; a.n_rows()];
        a.apply_into(x, &mut u);
        let mut y = vec![0.0; a.n_rows()];
        self.dual_from_residual(&u, &mut y)
    }

    /// `P_s(x)`.
    pub fn p_value(&self, x: &[f64]) -> f64 {
        self.problem.g.value(x) + 0.5 * self.beta * dist_sq(x, &self.anchor)
    }

    pub(crate) fn eval_h_unchecked(&self, x: &[f64]) -> f64 {
        self.phi_value(x) + self.p_value(x)
    }

    /// `H_s(x)`.
    pub fn eval_h(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n(), x.len(), "eval_h")?;
        Ok(self.eval_h_unchecked(x))
    }

    /// `∇φ_s(x)`.
    pub fn grad_phi(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n(), x.len(), "grad_phi")?;
        let mut g = vec![0.0; self.n()];
        self.phi_grad_into(x, &mut g);
        Ok(g)
    }

    /// `prox_{t P_s}(v)`.
    pub fn prox_p(&self, v: &[f64], t: f64) -> Result<Vec<f64>> {
        check_dim(self.n(), v.len(), "prox_p")?;
        crate::prox::prox_shifted_quadratic(&self.problem.g, v, t, &self.anchor, self.beta)
    }

    pub fn prox_p_into(&self, v: &[f64], t: f64, out: &mut [f64]) {
        prox_shifted_quadratic_into(&self.problem.g, v, t, &self.anchor, self.beta, out);
    }

    /// Scalar `prox_{t P_s}` at coordinate `i`.
    #[inline]
    pub fn prox_p_coord(&self, i: usize, v: f64, t: f64) -> f64 {
        let denom = 1.0 / t + self.beta;
        let t_eff = 1.0 / denom;
        self.problem
            .g
            .prox_coord(i, (v / t + self.beta * self.anchor[i]) * t_eff, t_eff)
    }

    /// `∂φ_s/∂x_i` where `resid(r)` returns row `r` of `A x`.
    pub fn coordinate_grad_with(&self, i: usize, resid: impl Fn(usize) -> f64) -> f64 {
        let ns = self.problem.n_smooth;
        let h = &self.problem.h;
        let mut acc = 0.0;
        for (r, a_ri) in self.problem.at.row(i) {
            let y = if r < ns {
                resid(r) - self.problem.c[r]
            } else {
                let hr = r - ns;
                if h.row_is_separable(hr) {
                    h.lambda_coord(hr, resid(r), self.lam[hr], self.beta).0
                } else {
                    self.coupled_lambda(hr, &resid)
                }
            };
            acc += a_ri * y;
        }
        acc
    }

    // Λ over the whole non-separable block containing h-row `hr`.
    fn coupled_block_lambda(&self, hr: usize, resid: &impl Fn(usize) -> f64) -> (Range<usize>, Vec<f64>) {
        let ns = self.problem.n_smooth;
        let h = &self.problem.h;
        let range = h.coupled_rows(hr);
        let z: Vec<f64> = range.clone().map(|q| resid(q + ns) + self.beta * self.lam[q]).collect();
        let piece = (0..h.set_pieces().len())
            .find(|&p| h.set_range(p) == range)
            .map(|p| &h.set_pieces()[p])
            .expect("coupled rows belong to a set piece");
        let mut w = vec![0.0; z.len()];
        piece.set.project_into(&z, &mut w);
        let lam = z.iter().zip(&w).map(|(z, w)| (z - w) / self.beta).collect();
        (range, lam)
    }

    fn coupled_lambda(&self, hr: usize, resid: &impl Fn(usize) -> f64) -> f64 {
        let (range, lam) = self.coupled_block_lambda(hr, resid);
        lam[hr - range.start]
    }

    /// `∂φ_s/∂x_i` at a residual-backed iterate.
    pub fn coordinate_grad_phi(&self, state: &ResidualState, i: usize) -> f64 {
        self.coordinate_grad_with(i, |r| state.u[r])
    }

    /// `out += scale · ∇φ_s^j(x)` where `φ_s = (1/m) Σ_j φ_s^j`.
    pub fn component_grad_add(&self, j: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let comp = &self.problem.components[j];
        let a = &self.problem.a;
        let m = self.problem.components.len() as f64;
        let ns = self.problem.n_smooth;
        if comp.smooth || self.problem.h.row_is_separable(comp.rows.start - ns) {
            let r = comp.rows.start;
            let u = a.row_dot(r, x);
            let y = if comp.smooth {
                u - self.problem.c[r]
            } else {
                let hr = r - ns;
                self.problem.h.lambda_coord(hr, u, self.lam[hr], self.beta).0
            };
            a.add_row_scaled(r, scale * m * y, out);
        } else {
            let u: Vec<f64> = comp.rows.clone().map(|r| a.row_dot(r, x)).collect();
            let start = comp.rows.start;
            let resid = |r: usize| u[r - start];
            let (_, lam) = self.coupled_block_lambda(start - ns, &resid);
            for (k, r) in comp.rows.clone().enumerate() {
                a.add_row_scaled(r, scale * m * lam[k], out);
            }
        }
    }

    /// `∇φ_s^j(x)`.
    pub fn component_grad_phi(&self, x: &[f64], j: usize) -> Result<Vec<f64>> {
        check_dim(self.n(), x.len(), "component_grad_phi")?;
        if j >= self.problem.components.len() {
            return Err(IpalmError::InvalidParameter(format!(
                "component index {j} out of range ({} components)",
                self.problem.components.len()
            )));
        }
        let mut out = vec![0.0; self.n()];
        self.component_grad_add(j, x, 1.0, &mut out);
        Ok(out)
    }
}
