//! Linearly convergent inner solvers for `min_x H_s(x)`.
//!
//! Every solver exposes a rate constant `K_s` such that `⌈K_s⌉` iterations
//! halve the optimality gap (surely for the deterministic methods, in
//! expectation for the randomized ones).

mod apg;
mod approx;
mod bregman;
mod katyusha;

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::duality_gap_bound;
use crate::error::{check_dim, IpalmError, Result};
use crate::problem::SubproblemOracle;

pub const DEFAULT_SAFETY_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Apg,
    Approx,
    LKatyusha,
    BregmanPg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Apg,
        SolverKind::Approx,
        SolverKind::LKatyusha,
        SolverKind::BregmanPg,
    ];

    pub fn is_randomized(self) -> bool {
        matches!(self, SolverKind::Approx | SolverKind::LKatyusha)
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Apg => "apg",
            SolverKind::Approx => "approx",
            SolverKind::LKatyusha => "katyusha",
            SolverKind::BregmanPg => "bpg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = IpalmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "apg" | "fista" => Ok(SolverKind::Apg),
            "approx" => Ok(SolverKind::Approx),
            "katyusha" | "l-katyusha" | "lkatyusha" => Ok(SolverKind::LKatyusha),
            "bpg" | "bregman" | "bregmanpg" => Ok(SolverKind::BregmanPg),
            other => Err(IpalmError::Config(format!("unknown solver '{other}'"))),
        }
    }
}

/// Diagonal reference `ξ(x) = ½ Σ q_i x_i²` with `μ D_ξ ≤ D_f ≤ L D_ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanReference {
    pub q: Vec<f64>,
    pub l: f64,
    pub mu: f64,
}

impl BregmanReference {
    pub fn new(q: Vec<f64>, l: f64, mu: f64) -> Result<Self> {
        if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(IpalmError::InvalidParameter(
                "reference weights must be nonnegative".into(),
            ));
        }
        if !(l >= 0.0 && mu >= 0.0 && l.is_finite()) {
            return Err(IpalmError::InvalidParameter(
                "reference constants must be nonnegative".into(),
            ));
        }
        Ok(Self { q, l, mu })
    }

    /// `ξ = ½‖x‖²` with the given relative constants.
    pub fn euclidean(n: usize, l: f64, mu: f64) -> Result<Self> {
        Self::new(vec![1.0; n], l, mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolverConfig {
    pub kind: SolverKind,
    /// Minibatch size for L-Katyusha.
    pub tau: usize,
    pub seed: u64,
    /// Hard maximum of iterations per inner call.
    pub safety_cap: u64,
    /// Reference function for the Bregman method; `None` treats `f` as Euclidean-smooth.
    pub bregman: Option<BregmanReference>,
}

impl InnerSolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind,
            tau: 1,
            seed: 0,
            safety_cap: DEFAULT_SAFETY_CAP,
            bregman: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tau(mut self, tau: usize) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau < 1 {
            return Err(IpalmError::Config("tau must be at least 1".into()));
        }
        if self.safety_cap < 1 {
            return Err(IpalmError::Config("safety_cap must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks `tau ≤ ⌊√m⌋` for the finite-sum solver.
    pub fn validate_for(&self, n_components: usize) -> Result<()> {
        self.validate()?;
        if self.kind == SolverKind::LKatyusha && n_components > 0 {
            let cap = (n_components as f64).sqrt().floor() as usize;
            if self.tau > cap.max(1) {
                return Err(IpalmError::Config(format!(
                    "tau = {} exceeds floor(sqrt(m)) = {} for m = {n_components} components",
                    self.tau,
                    cap.max(1)
                )));
            }
        }
        Ok(())
    }
}

/// `K_s ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RateConstant(f64);

impl RateConstant {
    pub fn new(k: f64) -> Result<Self> {
        if k >= 1.0 && k.is_finite() {
            Ok(Self(k))
        } else {
            Err(IpalmError::InvalidParameter(format!(
                "rate constant must be finite and ≥ 1, got {k}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Problem constants entering the rate constants.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateInputs {
    pub n: usize,
    pub l_f: f64,
    pub norm_a_sq: f64,
    pub beta: f64,
    pub mu_g: f64,
    /// `max_i v_i`, coordinate smoothness.
    pub max_v: f64,
    /// Number of finite-sum components.
    pub m: usize,
    /// `Σ_j L_j`.
    pub sum_l: f64,
    pub tau: usize,
    /// `(L, μ, max_i q_i)` of a Bregman reference.
    pub bregman: Option<(f64, f64, f64)>,
}

/// The closed-form rate constant of each solver.
pub fn rate_constant(kind: SolverKind, r: &RateInputs) -> f64 {
    let mu_s = r.mu_g + r.beta;
    match kind {
        SolverKind::Apg => {
            let l_s = r.l_f + r.norm_a_sq / r.beta;
            2.0 * (2.0 * l_s / mu_s).sqrt() + 1.0
        }
        SolverKind::Approx => 2.0 * r.n as f64 * (2.0 * r.max_v / mu_s + 2.0).sqrt() + 1.0,
        SolverKind::LKatyusha => {
            let m = r.m as f64;
            10.0 * m.max((r.sum_l / mu_s).sqrt()) / r.tau.max(1) as f64 + 1.0
        }
        SolverKind::BregmanPg => match r.bregman {
            Some((l, mu, max_q)) => {
                let lt = (r.norm_a_sq / r.beta).max(l);
                let mt = mu.min(mu_s).max(mu_s / (1.0 + max_q));
                2.0 * lt / mt + 1.0
            }
            None => {
                let l_s = r.l_f + r.norm_a_sq / r.beta;
                2.0 * l_s / mu_s + 1.0
            }
        },
    }
}

/// Gathers the constants of `o` for `kind`.
pub fn rate_inputs(cfg: &InnerSolverConfig, o: &SubproblemOracle<'_>) -> RateInputs {
    let p = o.problem();
    let m = p.n_components();
    let (max_v, sum_l) = match cfg.kind {
        SolverKind::Approx => (o.coordinate_lipschitz().into_iter().fold(0.0, f64::max), 0.0),
        SolverKind::LKatyusha => (0.0, (0..m).map(|j| o.component_lipschitz(j)).sum()),
        _ => (0.0, 0.0),
    };
    RateInputs {
        n: p.n(),
        l_f: p.l_f(),
        norm_a_sq: p.norm_a().powi(2),
        beta: o.beta(),
        mu_g: p.mu_g(),
        max_v,
        m,
        sum_l,
        tau: cfg.tau,
        bregman: cfg
            .bregman
            .as_ref()
            .map(|b| (b.l, b.mu, b.q.iter().copied().fold(0.0, f64::max))),
    }
}

/// `K_s` of the configured solver on `o`.
pub fn estimate_k(cfg: &InnerSolverConfig, o: &SubproblemOracle<'_>) -> Result<RateConstant> {
    cfg.validate_for(o.problem().n_components())?;
    if let Some(b) = &cfg.bregman {
        check_dim(o.n(), b.q.len(), "bregman reference weights")?;
    }
    let r = rate_inputs(cfg, o);
    if cfg.kind == SolverKind::LKatyusha && r.m == 0 {
        // no finite sum: the solver falls back to its full-gradient path
        return RateConstant::new(rate_constant(SolverKind::Apg, &r));
    }
    RateConstant::new(rate_constant(cfg.kind, &r))
}

/// Result of one inner call.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    pub x: Vec<f64>,
    pub iterations: u64,
    /// Passes over the data, in full-gradient equivalents.
    pub work: f64,
    pub stopped_early: bool,
    /// Last certified gap, when one was computed.
    pub gap: Option<f64>,
}

/// Stateful runner: the random stream persists across calls.
#[derive(Debug, Clone)]
pub struct InnerSolver {
    cfg: InnerSolverConfig,
    rng: ChaCha8Rng,
}

/// Early-stop bookkeeping shared by the solvers.
pub(crate) struct StopCheck {
    threshold: Option<f64>,
    every: f64,
    since: f64,
    pub(crate) last_gap: Option<f64>,
}

impl StopCheck {
    fn new(threshold: Option<f64>, every: f64) -> Self {
        Self {
            threshold,
            every: every.max(1.0),
            since: 0.0,
            last_gap: None,
        }
    }

    /// Adds `work`; true when a gap check is due.
    pub(crate) fn tick(&mut self, work: f64) -> bool {
        if self.threshold.is_none() {
            return false;
        }
        self.since += work;
        if self.since < self.every {
            return false;
        }
        self.since = 0.0;
        true
    }

    /// Evaluates the gap at `x` (charged to `total`); true if it is certified
    /// below the threshold.
    pub(crate) fn certify(&mut self, o: &SubproblemOracle<'_>, x: &[f64], total: &mut f64) -> bool {
        let Some(th) = self.threshold else { return false };
        *total += 1.0;
        match duality_gap_bound(o, x) {
            Ok(c) => {
                self.last_gap = Some(c.certified());
                c.certified() <= th
            }
            Err(_) => false,
        }
    }
}

impl InnerSolver {
    pub fn new(cfg: InnerSolverConfig) -> Result<Self> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self { cfg, rng })
    }

    pub fn config(&self) -> &InnerSolverConfig {
        &self.cfg
    }

    pub fn estimate_k(&self, o: &SubproblemOracle<'_>) -> Result<RateConstant> {
        estimate_k(&self.cfg, o)
    }

    /// Runs at most `min(budget, safety_cap)` iterations from `x0`. With
    /// `early_stop = Some(t)` the call returns as soon as the duality gap is
    /// certified `≤ t`.
    pub fn run(
        &mut self,
        o: &SubproblemOracle<'_>,
        x0: &[f64],
        budget: u64,
        early_stop: Option<f64>,
    ) -> Result<InnerOutcome> {
        check_dim(o.n(), x0.len(), "inner solver start")?;
        self.cfg.validate_for(o.problem().n_components())?;
        let mut budget = budget;
        if budget > self.cfg.safety_cap {
            warn!(
                "inner budget {budget} exceeds safety cap {}; truncating",
                self.cfg.safety_cap
            );
            budget = self.cfg.safety_cap;
        }
        if budget == 0 {
            return Ok(InnerOutcome {
                x: x0.to_vec(),
                iterations: 0,
                work: 0.0,
                stopped_early: false,
                gap: None,
            });
        }
        match self.cfg.kind {
            SolverKind::Apg => Ok(apg::run(o, x0, budget, early_stop)),
            SolverKind::BregmanPg => Ok(bregman::run(o, self.cfg.bregman.as_ref(), x0, budget, early_stop)),
            SolverKind::Approx => Ok(approx::run(o, x0, budget, early_stop, &mut self.rng)),
            SolverKind::LKatyusha => {
                if o.problem().n_components() == 0 {
                    Ok(apg::run(o, x0, budget, early_stop))
                } else {
                    Ok(katyusha::run(o, self.cfg.tau, x0, budget, early_stop, &mut self.rng))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_constant_examples() {
        let apg = RateInputs {
            l_f: 1.0,
            norm_a_sq: 1.0,
            beta: 1.0,
            mu_g: 0.0,
            ..Default::default()
        };
        assert!((rate_constant(SolverKind::Apg, &apg) - 5.0).abs() < 1e-12);

        let kat = RateInputs {
            m: 100,
            tau: 10,
            sum_l: 100.0,
            beta: 1.0,
            mu_g: 0.0,
            ..Default::default()
        };
        assert!((rate_constant(SolverKind::LKatyusha, &kat) - 101.0).abs() < 1e-12);

        let apx = RateInputs {
            n: 2,
            max_v: 2.0,
            beta: 1.0,
            mu_g: 1.0,
            ..Default::default()
        };
        assert!((rate_constant(SolverKind::Approx, &apx) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn bregman_rate_uses_relative_constants() {
        let r = RateInputs {
            norm_a_sq: 2.0,
            beta: 1.0,
            mu_g: 0.0,
            bregman: Some((3.0, 0.5, 0.0)),
            ..Default::default()
        };
        // max(2, 3) / max(min(1, 0.5), 1/(1+0)) = 3
        assert!((rate_constant(SolverKind::BregmanPg, &r) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn solver_names_roundtrip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("newton".parse::<SolverKind>().is_err());
    }

    #[test]
    fn rate_constant_rejects_small_values() {
        assert!(RateConstant::new(0.5).is_err());
        assert!(RateConstant::new(f64::INFINITY).is_err());
        assert_eq!(RateConstant::new(1.0).unwrap().value(), 1.0);
    }
}
