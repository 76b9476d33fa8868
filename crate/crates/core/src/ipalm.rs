//! The outer loop: inexact proximal ALM with a self-adaptive inner budget.
//!
//! Each outer step updates the multiplier with the smoothing map, shrinks
//! `β` by `ρ` and the accuracy target `ε` by `η`, and sizes the next inner
//! call from quantities that are all known at runtime.

use std::io::Write;
use std::time::Instant;

use log::{debug, error, warn};

use crate::diagnostics::{duality_gap_bound, kkt_bounds};
use crate::error::{check_dim, check_finite, IpalmError, Result};
use crate::linalg::{dist_sq, norm_sq};
use crate::problem::{CompositeProblem, SubproblemOracle};
use crate::prox::SimpleSet;
use crate::smoothing::{DualPoint, HSpec};
use crate::solvers::{InnerSolver, InnerSolverConfig, RateConstant};

/// Schedule and termination parameters of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterParams {
    pub beta0: f64,
    pub rho: f64,
    pub eta: f64,
    /// Iterations of the warm-start inner call.
    pub m0: u64,
    /// Initial accuracy; estimated from the warm start when `None`.
    pub eps0: Option<f64>,
    pub max_outer: usize,
    /// Bound on `β_s‖Δλ‖`, the relative objective change and `ε_s / max(1, |F|)`
    /// that ends the run.
    pub target_eps: f64,
    /// Adds a proximal-gradient step after every inner call.
    pub kkt_mode: bool,
    /// Allows `eta == rho`.
    pub bounded_domain: bool,
    /// Stops inner calls once the duality gap certifies `ε_{s+1}`.
    pub early_stop: bool,
    /// Doubles `ε_0` when a certified gap exceeds the current target.
    pub certify_eps: bool,
    /// When false the `wall_ms` column is zero, making traces reproducible byte for byte.
    pub record_wall_clock: bool,
}

impl Default for OuterParams {
    fn default() -> Self {
        Self {
            beta0: 1.0,
            rho: 0.9,
            eta: 0.8,
            m0: 10,
            eps0: None,
            max_outer: 100,
            target_eps: 1e-6,
            kkt_mode: false,
            bounded_domain: false,
            early_stop: true,
            certify_eps: true,
            record_wall_clock: true,
        }
    }
}

impl OuterParams {
    /// Defaults for the KKT variant (`η = 0.7 ≤ ρ³`).
    pub fn kkt() -> Self {
        Self {
            eta: 0.7,
            kkt_mode: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IpalmError::Config(msg));
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return bad(format!("beta0 must be positive, got {}", self.beta0));
        }
        if !(self.rho > 0.5 && self.rho < 1.0) {
            return bad(format!("rho must lie in (1/2, 1), got {}", self.rho));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if self.bounded_domain {
            if self.eta > self.rho {
                return bad(format!("eta = {} must not exceed rho = {}", self.eta, self.rho));
            }
        } else if self.eta >= self.rho {
            return bad(format!(
                "eta = {} must be below rho = {} unless the bounded-domain flag is set",
                self.eta, self.rho
            ));
        }
        if self.kkt_mode {
            let cube = self.rho.powi(3);
            if self.eta > cube * (1.0 + 1e-12) {
                return bad(format!(
                    "kkt mode requires eta <= rho^3 = {cube}, got eta = {}",
                    self.eta
                ));
            }
        }
        if self.m0 < 1 {
            return bad("m0 must be at least 1".into());
        }
        if let Some(e) = self.eps0 {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("eps0 must be positive, got {e}"));
            }
        }
        if !(self.target_eps >= 0.0) {
            return bad(format!("target_eps must be nonnegative, got {}", self.target_eps));
        }
        Ok(())
    }
}

/// Iterates and schedules at the start of outer step `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterState {
    pub s: usize,
    /// `x^{s−1}`.
    pub x_prev: Vec<f64>,
    /// `x^s`.
    pub x_cur: Vec<f64>,
    /// `λ^s`.
    pub lam: DualPoint,
    pub beta_s: f64,
    pub eps_s: f64,
    pub last_m: f64,
    pub cumulative_inner: u64,
}

/// One row of the convergence trace, describing `x^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub s: usize,
    pub beta_s: f64,
    pub eps_s: f64,
    /// Rate constant of the inner call that produced `x^s`.
    pub k_s: f64,
    /// Budget of the inner call that produced `x^s`.
    pub m_s: u64,
    /// Carry-over term `M_s` used to size the next call.
    pub carry: f64,
    /// `F(x^s)`.
    pub objective: f64,
    /// `dist(A2 x^s, K)`.
    pub infeasibility: f64,
    /// `β_s‖λ2^{s+1} − λ2^s‖`, which bounds the infeasibility.
    pub feasibility_bound: f64,
    /// `NaN` outside KKT mode.
    pub kkt_x_bound: f64,
    pub kkt_lam_bound: f64,
    pub inner_cum: u64,
    /// Cumulative inner work in full passes over the data.
    pub work_cum: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Converged,
    MaxOuter,
    SafetyCapExhausted,
}

impl TraceStatus {
    pub fn name(self) -> &'static str {
        match self {
            TraceStatus::Converged => "converged",
            TraceStatus::MaxOuter => "max_outer",
            TraceStatus::SafetyCapExhausted => "safety_cap_exhausted",
        }
    }
}

pub const TRACE_COLUMNS: [&str; 12] = [
    "s",
    "beta_s",
    "eps_s",
    "K_s",
    "m_s",
    "M_s",
    "F",
    "infeas",
    "kkt_x_bound",
    "kkt_lam_bound",
    "inner_cum",
    "wall_ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub status: TraceStatus,
    /// `ε_0` after any doublings.
    pub eps0: f64,
    pub eps_doublings: u32,
    /// Outer steps where the infeasibility exceeded its multiplier bound.
    pub surrogate_violations: usize,
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn completed_outer(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// CSV with the fixed column order of [`TRACE_COLUMNS`].
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", TRACE_COLUMNS.join(","))?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{},{:e},{:e},{:e},{:e},{:e},{},{:.3}",
                r.s,
                r.beta_s,
                r.eps_s,
                r.k_s,
                r.m_s,
                r.carry,
                r.objective,
                r.infeasibility,
                r.kkt_x_bound,
                r.kkt_lam_bound,
                r.inner_cum,
                r.wall_ms
            )?;
        }
        Ok(())
    }
}

/// What the observer of [`ipalm_solve_observed`] sees after `x^s` is formed.
pub struct StepView<'a, 'p> {
    pub s: usize,
    /// `H_s`.
    pub oracle: &'a SubproblemOracle<'p>,
    /// `x^s`.
    pub x: &'a [f64],
    /// Inner output `x̃^s` (equal to `x` outside KKT mode).
    pub x_inner: &'a [f64],
    pub eps_s: f64,
}

/// `M_s` from the multipliers at steps `s`, `s+1` and the probe
/// `Λ(A x^s; λ^{s+1}, β_{s+1})`. Rows of equality pieces contribute nothing
/// to the square-root term.
pub fn compute_m(
    h: &HSpec,
    beta_s: f64,
    beta_next: f64,
    lam: &DualPoint,
    lam_next: &DualPoint,
    lam_probe: &DualPoint,
    dx_sq: f64,
) -> Result<f64> {
    if !(beta_next > 0.0 && beta_next <= beta_s && 2.0 * beta_next > beta_s) {
        return Err(IpalmError::InvalidParameter(format!(
            "need beta_s >= beta_next > beta_s/2, got {beta_s} and {beta_next}"
        )));
    }
    for d in [lam, lam_next, lam_probe] {
        check_dim(h.d1(), d.lambda1.len(), "lambda1")?;
        check_dim(h.d2(), d.lambda2.len(), "lambda2")?;
    }
    let dlam_sq = lam_next.dist_sq(lam);
    let mut m = beta_s * dlam_sq
        + 0.5 * (beta_s - beta_next) * lam_probe.dist_sq(lam_next)
        + beta_s * beta_s / (2.0 * beta_next - beta_s) * dx_sq;

    let mut l1 = 0.0;
    for (a, b) in lam.lambda1.iter().zip(&lam_next.lambda1) {
        let d = beta_s * a - beta_next * b;
        l1 += d * d;
    }
    let mut l2 = 0.0;
    for (p, piece) in h.set_pieces().iter().enumerate() {
        if matches!(piece.set, SimpleSet::Point { .. }) {
            continue;
        }
        let r = h.set_range(p);
        for i in (r.start - h.d1())..(r.end - h.d1()) {
            let d = beta_s * lam.lambda2[i] - beta_next * lam_next.lambda2[i];
            l2 += d * d;
        }
    }
    let first = if h.d1() > 0 {
        (beta_s + beta_next) * h.l_h1() + l1.sqrt()
    } else {
        0.0
    };
    m += dlam_sq.sqrt() * (first * first + l2).sqrt();
    Ok(m)
}

/// Smallest `t ≥ 0` with `2^t · ε_{s+1}/2 ≥ 2ε_s + M_s`, or `None` if unbounded.
fn halvings_needed(eps_s: f64, eps_next: f64, carry: f64) -> Option<u32> {
    let rhs = 2.0 * eps_s + carry;
    let ratio = 2.0 * rhs / eps_next;
    if !ratio.is_finite() {
        return None;
    }
    if ratio <= 1.0 {
        return Some(0);
    }
    let mut t = ratio.log2().ceil().max(0.0) as i32;
    let holds = |t: i32| 2f64.powi(t) * eps_next / 2.0 >= rhs;
    while !holds(t) {
        t += 1;
    }
    while t > 0 && holds(t - 1) {
        t -= 1;
    }
    Some(t as u32)
}

/// Smallest `m` with `⌊m/K⌋ ≥ t`, or `None` beyond `u64`.
fn smallest_budget(t: u32, k: f64) -> Option<u64> {
    let guess = (k * t as f64).ceil();
    if !(guess < 1e18) {
        return None;
    }
    let mut m = guess as u64;
    let ok = |m: u64| (m as f64 / k).floor() >= t as f64;
    while m > 0 && ok(m - 1) {
        m -= 1;
    }
    while !ok(m) {
        m += 1;
    }
    Some(m)
}

/// Inner iterations required by the budget rule before clamping.
/// `None` when the requirement does not fit in `u64`.
pub fn required_budget(eps_s: f64, eps_next: f64, carry: f64, k_next: RateConstant) -> Option<u64> {
    let t = halvings_needed(eps_s, eps_next, carry)?;
    smallest_budget(t, k_next.value()).map(|m| m.max(1))
}

/// The smallest `m` with `2^{⌊m/K⌋}·ε_{s+1}/2 ≥ 2ε_s + M_s`, clamped to `[1, cap]`.
pub fn inner_budget(eps_s: f64, eps_next: f64, carry: f64, k_next: RateConstant, cap: u64) -> u64 {
    required_budget(eps_s, eps_next, carry, k_next)
        .unwrap_or(u64::MAX)
        .clamp(1, cap.max(1))
}

/// `λ^{s+1} = Λ(A x^s; λ^s, β_s)`.
pub fn multiplier_update(problem: &CompositeProblem, x: &[f64], lam: &DualPoint, beta: f64) -> Result<DualPoint> {
    let u = problem.h_residual(x)?;
    problem.h_spec().lambda_map(&u, lam, beta)
}

/// One proximal-gradient step on `H_s` with step `1/L_s`.
pub fn prox_grad_step(o: &SubproblemOracle<'_>, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(o.n(), x.len(), "prox_grad_step")?;
    let l = o.l_s();
    let mut out = vec![0.0; o.n()];
    if l == 0.0 {
        // φ_s is constant: the step lands on the minimizer of P_s
        o.problem().g().prox_into(o.anchor(), 1.0 / o.beta(), &mut out);
        return Ok(out);
    }
    let mut v = vec![0.0; o.n()];
    o.phi_grad_into(x, &mut v);
    for (vi, xi) in v.iter_mut().zip(x) {
        *vi = xi - *vi / l;
    }
    o.prox_p_into(&v, 1.0 / l, &mut out);
    Ok(out)
}

/// Upper bound on `H_s(x) − H_s*` from one proximal-gradient step:
/// `H(x) − H(x⁺) + ‖s‖²/(2μ_s)` with `s = ∇φ(x⁺) − ∇φ(x) + L_s(x − x⁺) ∈ ∂H(x⁺)`.
pub fn descent_gap_bound(o: &SubproblemOracle<'_>, x: &[f64]) -> Result<f64> {
    let xp = prox_grad_step(o, x)?;
    let l = o.l_s();
    let mut gx = vec![0.0; o.n()];
    let mut gp = vec![0.0; o.n()];
    let phi_x = o.phi_grad_into(x, &mut gx);
    let phi_p = o.phi_grad_into(&xp, &mut gp);
    let mut s_sq = 0.0;
    for i in 0..o.n() {
        let s = gp[i] - gx[i] + l * (x[i] - xp[i]);
        s_sq += s * s;
    }
    let h_x = phi_x + o.p_value(x);
    let h_p = phi_p + o.p_value(&xp);
    let b = (h_x - h_p).max(0.0) + s_sq / (2.0 * o.mu_s());
    if b.is_finite() {
        Ok(b)
    } else {
        Err(IpalmError::NonFinite("descent gap bound"))
    }
}

/// A certified upper bound on `H_0(x0) − H_0*`, kept strictly positive.
pub fn estimate_eps0(o: &SubproblemOracle<'_>, x0: &[f64]) -> Result<f64> {
    check_dim(o.n(), x0.len(), "estimate_eps0")?;
    let gap = duality_gap_bound(o, x0).ok().map(|c| c.gap.max(0.0));
    let descent = descent_gap_bound(o, x0).ok();
    let bound = match (gap, descent) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(IpalmError::NonFinite("initial gap estimate")),
    };
    let h = o.eval_h_unchecked(x0);
    Ok(bound.max(1e-12 * h.abs().max(1.0)))
}

/// Algorithm with the self-adaptive inner budget. Runs the KKT variant when
/// `params.kkt_mode` is set.
pub fn ipalm_solve(
    problem: &CompositeProblem,
    cfg: &InnerSolverConfig,
    params: &OuterParams,
    x_init: &[f64],
    lam_init: &DualPoint,
) -> Result<(Vec<f64>, DualPoint, ConvergenceTrace)> {
    ipalm_solve_observed(problem, cfg, params, x_init, lam_init, |_| {})
}

/// The KKT variant: every inner output is followed by one proximal-gradient
/// step, and the trace carries both residual bounds.
pub fn ipalm_kkt_solve(
    problem: &CompositeProblem,
    cfg: &InnerSolverConfig,
    params: &OuterParams,
    x_init: &[f64],
    lam_init: &DualPoint,
) -> Result<(Vec<f64>, DualPoint, ConvergenceTrace)> {
    let params = OuterParams {
        kkt_mode: true,
        ..params.clone()
    };
    ipalm_solve_observed(problem, cfg, &params, x_init, lam_init, |_| {})
}

/// [`ipalm_solve`] with a callback invoked once per outer iterate.
pub fn ipalm_solve_observed<F>(
    problem: &CompositeProblem,
    cfg: &InnerSolverConfig,
    params: &OuterParams,
    x_init: &[f64],
    lam_init: &DualPoint,
    mut observer: F,
) -> Result<(Vec<f64>, DualPoint, ConvergenceTrace)>
where
    F: FnMut(&StepView<'_, '_>),
{
    params.validate()?;
    cfg.validate_for(problem.n_components())?;
    check_dim(problem.n(), x_init.len(), "x_init")?;
    check_finite(x_init, "x_init")?;
    let h = problem.h_spec();
    check_dim(h.d1(), lam_init.lambda1.len(), "lambda1")?;
    check_dim(h.d2(), lam_init.lambda2.len(), "lambda2")?;
    check_finite(&lam_init.to_flat(), "lam_init")?;

    let start = Instant::now();
    let wall = |p: &OuterParams| {
        if p.record_wall_clock {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    };

    let mut lam_flat = lam_init.to_flat();
    h.project_dual_domain(&mut lam_flat);
    let mut lam = DualPoint::from_flat(h, &lam_flat)?;
    let mut solver = InnerSolver::new(cfg.clone())?;
    let cap = cfg.safety_cap;

    // warm start on H_0
    let beta0 = params.beta0;
    let mut beta = beta0;
    let o0 = SubproblemOracle::new(problem, &lam, beta, x_init)?;
    let mut k_cur = solver.estimate_k(&o0)?.value();
    let mut m_cur = params.m0;
    let warm_stop = if params.early_stop { params.eps0 } else { None };
    let out = solver.run(&o0, x_init, m_cur, warm_stop)?;
    let mut inner_cum = out.iterations;
    let mut work_cum = out.work;
    let x_tilde = out.x;
    let mut x_cur = if params.kkt_mode {
        let xp = prox_grad_step(&o0, &x_tilde)?;
        check_monotone(&o0, &x_tilde, &xp);
        xp
    } else {
        x_tilde.clone()
    };
    let mut eps0 = match params.eps0 {
        Some(e) => e,
        None => {
            work_cum += 2.0;
            estimate_eps0(&o0, &x_tilde)?
        }
    };
    let mut doublings = 0u32;
    if params.certify_eps && params.eps0.is_some() {
        if let Some(g) = certified_gap(&o0, &x_tilde, out.gap.filter(|_| out.stopped_early)) {
            while g > eps0 {
                eps0 *= 2.0;
                doublings += 1;
            }
        }
    }
    let mut eps = eps0;
    let mut l_s = o0.l_s();
    observer(&StepView {
        s: 0,
        oracle: &o0,
        x: &x_cur,
        x_inner: &x_tilde,
        eps_s: eps,
    });
    drop(o0);

    let mut x_prev = x_init.to_vec();
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut f_prev: Option<f64> = None;
    let mut truncations = 0u32;
    let mut violations = 0usize;
    let mut status = TraceStatus::MaxOuter;
    let mut s = 0usize;
    let mut y = vec![0.0; h.d()];

    loop {
        let u_h = problem.h_residual(&x_cur)?;
        let mut next_flat = vec![0.0; h.d()];
        h.lambda_map_flat(&u_h, &lam.to_flat(), beta, &mut next_flat);
        let lam_next = DualPoint::from_flat(h, &next_flat)?;
        let beta_next = beta * params.rho;
        let eps_next = eps * params.eta;
        debug_assert!(rel_close(beta, beta0 * params.rho.powi(s as i32)));
        debug_assert!(rel_close(eps, eps0 * params.eta.powi(s as i32)));

        h.lambda_map_flat(&u_h, &next_flat, beta_next, &mut y);
        let probe = DualPoint::from_flat(h, &y)?;
        let dx_sq = dist_sq(&x_cur, &x_prev);
        let carry = compute_m(h, beta, beta_next, &lam, &lam_next, &probe, dx_sq)?;

        let dlam = lam_next.dist(&lam);
        let dlam2_sq: f64 = lam_next
            .lambda2
            .iter()
            .zip(&lam.lambda2)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let feas_bound = beta * dlam2_sq.sqrt();
        let objective = problem.objective(&x_cur)?;
        let infeas = h.infeasibility(&u_h[h.d1()..]);
        if infeas > feas_bound * (1.0 + 1e-9) + 1e-12 * (1.0 + norm_sq(&u_h).sqrt()) {
            violations += 1;
            error!("step {s}: infeasibility {infeas:e} exceeds multiplier bound {feas_bound:e}");
        }
        let (kx, kl) = kkt_bounds(eps, l_s, beta, dx_sq.sqrt(), dlam);
        records.push(TraceRecord {
            s,
            beta_s: beta,
            eps_s: eps,
            k_s: k_cur,
            m_s: m_cur,
            carry,
            objective,
            infeasibility: infeas,
            feasibility_bound: feas_bound,
            kkt_x_bound: if params.kkt_mode { kx } else { f64::NAN },
            kkt_lam_bound: kl,
            inner_cum,
            work_cum,
            wall_ms: wall(params),
        });
        debug!("outer {s}: F={objective:e} infeas={infeas:e} M={carry:e} m={m_cur}");

        let rel_change = f_prev
            .map(|fp| (objective - fp).abs() / objective.abs().max(1.0))
            .unwrap_or(f64::INFINITY);
        let scale = objective.abs().max(1.0);
        if s > 0
            && beta * dlam <= params.target_eps
            && rel_change <= params.target_eps
            && eps <= params.target_eps * scale
        {
            status = TraceStatus::Converged;
            lam = lam_next;
            break;
        }
        if s >= params.max_outer {
            lam = lam_next;
            break;
        }

        let o = SubproblemOracle::new(problem, &lam_next, beta_next, &x_cur)?;
        let k = solver.estimate_k(&o)?;
        let required = required_budget(eps, eps_next, carry, k);
        let m = required.unwrap_or(u64::MAX).clamp(1, cap.max(1));
        if required.map_or(true, |r| r > cap) {
            truncations += 1;
            if truncations >= 3 {
                warn!("inner budget exceeded the safety cap {cap} three times in a row; aborting");
                status = TraceStatus::SafetyCapExhausted;
                lam = lam_next;
                break;
            }
        } else {
            truncations = 0;
        }
        let thr = if params.early_stop { Some(eps_next) } else { None };
        let out = solver.run(&o, &x_cur, m, thr)?;
        inner_cum += out.iterations;
        work_cum += out.work;
        let x_tilde = out.x;
        let x_new = if params.kkt_mode {
            work_cum += 1.0;
            let xp = prox_grad_step(&o, &x_tilde)?;
            check_monotone(&o, &x_tilde, &xp);
            xp
        } else {
            x_tilde.clone()
        };

        let mut eps_new = eps_next;
        if params.certify_eps {
            let known = out.gap.filter(|_| out.stopped_early);
            if known.is_none() {
                work_cum += 1.0;
            }
            if let Some(g) = certified_gap(&o, &x_tilde, known) {
                while g > eps_new {
                    eps_new *= 2.0;
                    eps0 *= 2.0;
                    doublings += 1;
                }
            }
        }

        s += 1;
        observer(&StepView {
            s,
            oracle: &o,
            x: &x_new,
            x_inner: &x_tilde,
            eps_s: eps_new,
        });
        l_s = o.l_s();
        k_cur = k.value();
        m_cur = m;
        f_prev = Some(objective);
        x_prev = std::mem::replace(&mut x_cur, x_new);
        lam = lam_next;
        beta = beta_next;
        eps = eps_new;
    }

    let trace = ConvergenceTrace {
        records,
        status,
        eps0,
        eps_doublings: doublings,
        surrogate_violations: violations,
    };
    Ok((x_cur, lam, trace))
}

fn certified_gap(o: &SubproblemOracle<'_>, x: &[f64], known: Option<f64>) -> Option<f64> {
    known.or_else(|| duality_gap_bound(o, x).ok().map(|c| c.certified()))
}

fn check_monotone(o: &SubproblemOracle<'_>, before: &[f64], after: &[f64]) {
    let hb = o.eval_h_unchecked(before);
    let ha = o.eval_h_unchecked(after);
    if ha > hb + 1e-12 * hb.abs().max(1.0) {
        error!("proximal-gradient step increased H from {hb:e} to {ha:e}");
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::problem::RowBlock;
    use crate::prox::SimpleFunction;
    use crate::solvers::SolverKind;

    fn k(v: f64) -> RateConstant {
        RateConstant::new(v).unwrap()
    }

    #[test]
    fn inner_budget_examples() {
        assert_eq!(inner_budget(1.0, 0.5, 0.0, k(10.0), 1_000), 30);
        assert_eq!(inner_budget(1.0, 1e9, 0.0, k(10.0), 1_000), 1);
        assert_eq!(inner_budget(1.0, 1.0, 1.0, k(3.5), 1_000), 11);
        assert_eq!(inner_budget(1.0, 1e-300, 1.0, k(3.5), 77), 77);
    }

    #[test]
    fn inner_budget_matches_brute_force() {
        let cases = [
            (1.0, 0.8, 0.3, 2.7),
            (0.1, 0.07, 5.0, 13.2),
            (3.0, 2.9, 0.0, 1.0),
            (1e-3, 8e-4, 1e-2, 40.5),
        ];
        for (es, en, m, kk) in cases {
            let rhs = 2.0 * es + m;
            let brute = (1..100_000u64)
                .find(|&mm| 2f64.powf((mm as f64 / kk).floor()) * en / 2.0 >= rhs)
                .unwrap();
            assert_eq!(inner_budget(es, en, m, k(kk), u64::MAX), brute);
        }
    }

    fn eq_spec() -> HSpec {
        HSpec::simple(None, Some((2, SimpleSet::point(vec![1.0, 2.0]).unwrap()))).unwrap()
    }

    #[test]
    fn carry_term_examples() {
        let h = eq_spec();
        let z = DualPoint::zeros(&h);
        assert_eq!(compute_m(&h, 1.0, 0.9, &z, &z, &z, 0.0).unwrap(), 0.0);

        let lam = DualPoint {
            lambda1: vec![],
            lambda2: vec![0.0, 0.0],
        };
        let next = DualPoint {
            lambda1: vec![],
            lambda2: vec![1.0, 0.0],
        };
        let probe = DualPoint {
            lambda1: vec![],
            lambda2: vec![1.0, 2.0],
        };
        let m = compute_m(&h, 1.0, 0.9, &lam, &next, &probe, 0.25).unwrap();
        assert!((m - 1.5125).abs() < 1e-12);

        assert!(compute_m(&h, 1.0, 0.4, &z, &z, &z, 0.0).is_err());
        assert!(compute_m(&h, 1.0, 1.1, &z, &z, &z, 0.0).is_err());
    }

    #[test]
    fn carry_term_keeps_inequality_rows() {
        let h = HSpec::simple(None, Some((1, SimpleSet::NonNegativeOrthant))).unwrap();
        let lam = DualPoint {
            lambda1: vec![],
            lambda2: vec![-1.0],
        };
        let next = DualPoint {
            lambda1: vec![],
            lambda2: vec![-2.0],
        };
        let m = compute_m(&h, 1.0, 0.75, &lam, &next, &next, 0.0).unwrap();
        // 1·1 + 0 + 0 + 1·|−1 + 1.5|
        assert!((m - 1.5).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(OuterParams::default().validate().is_ok());
        assert!(OuterParams::kkt().validate().is_ok());
        let p = OuterParams {
            eta: 0.9,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = OuterParams {
            eta: 0.9,
            bounded_domain: true,
            ..Default::default()
        };
        assert!(p.validate().is_ok());
        let p = OuterParams {
            kkt_mode: true,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = OuterParams {
            rho: 0.5,
            eta: 0.3,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = OuterParams {
            beta0: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    fn scalar_problem() -> CompositeProblem {
        CompositeProblem::new(
            1,
            vec![RowBlock::smooth(SparseMatrix::identity(1), vec![1.0])],
            SimpleFunction::zero(),
        )
        .unwrap()
    }

    #[test]
    fn eps0_on_scalar_quadratic() {
        // no blocks: H(x) = ½(x − 1)² comes from the proximal term alone
        let p = CompositeProblem::new(1, vec![], SimpleFunction::zero()).unwrap();
        let lam = DualPoint::zeros(p.h_spec());
        let o = SubproblemOracle::new(&p, &lam, 1.0, &[1.0]).unwrap();
        let e = estimate_eps0(&o, &[0.0]).unwrap();
        assert!((0.5..=1.0).contains(&e), "{e}");
        assert!(descent_gap_bound(&o, &[0.0]).unwrap() >= 0.5 - 1e-12);

        let p = scalar_problem();
        let lam = DualPoint::zeros(p.h_spec());
        let o = SubproblemOracle::new(&p, &lam, 1.0, &[0.0]).unwrap();
        assert!(estimate_eps0(&o, &[0.5]).unwrap() <= 1e-8);
    }

    #[test]
    fn prox_grad_fixed_point() {
        let p = scalar_problem();
        let lam = DualPoint::zeros(p.h_spec());
        let o = SubproblemOracle::new(&p, &lam, 1.0, &[0.0]).unwrap();
        let x = prox_grad_step(&o, &[0.5]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn equality_constrained_scalar() {
        // min ½x² s.t. x = 1
        let p = CompositeProblem::new(
            1,
            vec![
                RowBlock::smooth(SparseMatrix::identity(1), vec![0.0]),
                RowBlock::constraint(SparseMatrix::identity(1), SimpleSet::point(vec![1.0]).unwrap()),
            ],
            SimpleFunction::zero(),
        )
        .unwrap();
        let cfg = InnerSolverConfig::new(SolverKind::Apg);
        let params = OuterParams {
            max_outer: 200,
            target_eps: 1e-9,
            ..Default::default()
        };
        let lam0 = DualPoint::zeros(p.h_spec());
        let (x, lam, trace) = ipalm_solve(&p, &cfg, &params, &[0.0], &lam0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-6, "{x:?}");
        assert!((lam.lambda2[0] + 1.0).abs() < 1e-4, "{lam:?}");
        assert_eq!(trace.surrogate_violations, 0);
        assert_eq!(trace.records.len(), trace.completed_outer() + 1);
        for w in trace.records.windows(2) {
            assert!(rel_close(w[1].beta_s, w[0].beta_s * 0.9));
        }
    }

    #[test]
    fn unconstrained_converges_to_center() {
        let c = vec![1.0, -2.0, 3.0];
        let p = CompositeProblem::new(
            3,
            vec![RowBlock::smooth(SparseMatrix::identity(3), c.clone())],
            SimpleFunction::zero(),
        )
        .unwrap();
        let lam0 = DualPoint::zeros(p.h_spec());
        let params = OuterParams {
            max_outer: 300,
            target_eps: 1e-12,
            ..Default::default()
        };
        let (x, lam, _) = ipalm_solve(&p, &InnerSolverConfig::new(SolverKind::Apg), &params, &[0.0; 3], &lam0).unwrap();
        assert!(lam.is_empty());
        for (a, b) in x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-6, "{x:?}");
        }
    }
}
