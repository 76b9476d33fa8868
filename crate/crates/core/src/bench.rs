//! Benchmark harness: run configurations, traces, summaries and β₀ sweeps.
//!
//! Configuration files are flat `key = value` lines with dotted sections:
//!
//! ```text
//! # comment
//! problem.kind = lad
//! problem.data = data/a9a.gz
//! solver.kind = katyusha
//! solver.tau = 4
//! outer.beta0 = 10
//! output.trace = trace.csv
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::diagnostics::error_report;
use crate::error::{IpalmError, Result};
use crate::ipalm::{ipalm_solve, ConvergenceTrace, OuterParams, TraceStatus};
use crate::problem::CompositeProblem;
use crate::problems::synthetic::{synthetic_instance, SyntheticFamily};
use crate::problems::{build_problem, read_libsvm, BenchmarkKind};
use crate::smoothing::DualPoint;
use crate::solvers::{InnerSolverConfig, SolverKind};

/// The β₀ grid of the comparison sweep.
pub const BETA0_SWEEP: [f64; 5] = [1e-2, 1e-1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// A benchmark formulation over a libsvm file.
    Dataset {
        kind: BenchmarkKind,
        path: PathBuf,
        normalize: bool,
    },
    Synthetic {
        family: SyntheticFamily,
        m: usize,
        n: usize,
        sparsity: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: InnerSolverConfig,
    pub outer: OuterParams,
    pub trace_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
    /// Log one progress line every `report_every` outer steps (0 disables).
    pub report_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::Synthetic {
                family: SyntheticFamily::EqualityQp,
                m: 0,
                n: 10,
                sparsity: 0,
                seed: 0,
            },
            solver: InnerSolverConfig::new(SolverKind::Apg),
            outer: OuterParams::default(),
            trace_path: None,
            summary_path: None,
            report_every: 0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| IpalmError::Config(format!("invalid value '{v}' for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(IpalmError::Config(format!("invalid boolean '{v}' for {key}"))),
    }
}

/// Reads `key = value` lines into an ordered map. Later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| IpalmError::Parse {
            line: k + 1,
            message: format!("expected key = value, got '{body}'"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(IpalmError::Parse {
                line: k + 1,
                message: "empty key".into(),
            });
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    /// Builds a configuration from dotted keys on top of the defaults.
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(kv)?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_key_values(&parse_key_values(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Applies dotted-key overrides.
    pub fn apply(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        let get = |k: &str| kv.get(k).map(String::as_str);

        // problem
        let mut kind: Option<BenchmarkKind> = match &self.problem {
            ProblemSpec::Dataset { kind, .. } => Some(*kind),
            _ => None,
        };
        if let Some(v) = get("problem.kind") {
            kind = Some(v.parse()?);
        }
        if let Some(k) = kind.as_mut() {
            if let Some(v) = get("problem.lambda") {
                let l: f64 = parse_value("problem.lambda", v)?;
                match k {
                    BenchmarkKind::Lad { lambda } | BenchmarkKind::SoftMarginSvm { lambda } => *lambda = l,
                    BenchmarkKind::FusedLasso {
                        lambda_r, lambda_1mr, ..
                    } => {
                        *lambda_r = l;
                        *lambda_1mr = l;
                    }
                    BenchmarkKind::BasisPursuit => {}
                }
            }
            if let (Some(v), BenchmarkKind::FusedLasso { mu, .. }) = (get("problem.mu"), &mut *k) {
                *mu = parse_value("problem.mu", v)?;
            }
        }
        if let Some(family) = get("problem.synthetic") {
            let family: SyntheticFamily = family.parse()?;
            let (m0, n0, s0, seed0) = match &self.problem {
                ProblemSpec::Synthetic {
                    m, n, sparsity, seed, ..
                } => (*m, *n, *sparsity, *seed),
                _ => (0, 10, 0, 0),
            };
            self.problem = ProblemSpec::Synthetic {
                family,
                m: m0,
                n: n0,
                sparsity: s0,
                seed: seed0,
            };
        } else if let Some(path) = get("problem.data") {
            let kind = kind.ok_or_else(|| IpalmError::Config("problem.data requires problem.kind".into()))?;
            self.problem = ProblemSpec::Dataset {
                kind,
                path: PathBuf::from(path),
                normalize: true,
            };
        } else if let (Some(k), ProblemSpec::Dataset { kind, .. }) = (kind, &mut self.problem) {
            *kind = k;
        } else if get("problem.kind").is_some() {
            return Err(IpalmError::Config(
                "problem.kind needs problem.data (use problem.synthetic for generated instances)".into(),
            ));
        }
        match &mut self.problem {
            ProblemSpec::Synthetic {
                m, n, sparsity, seed, ..
            } => {
                if let Some(v) = get("problem.m") {
                    *m = parse_value("problem.m", v)?;
                }
                if let Some(v) = get("problem.n") {
                    *n = parse_value("problem.n", v)?;
                }
                if let Some(v) = get("problem.sparsity") {
                    *sparsity = parse_value("problem.sparsity", v)?;
                }
                if let Some(v) = get("problem.seed") {
                    *seed = parse_value("problem.seed", v)?;
                }
            }
            ProblemSpec::Dataset { normalize, .. } => {
                if let Some(v) = get("problem.normalize") {
                    *normalize = parse_bool("problem.normalize", v)?;
                }
            }
        }

        // solver
        if let Some(v) = get("solver.kind") {
            self.solver.kind = v.parse()?;
        }
        if let Some(v) = get("solver.tau") {
            self.solver.tau = parse_value("solver.tau", v)?;
        }
        if let Some(v) = get("solver.seed") {
            self.solver.seed = parse_value("solver.seed", v)?;
        }
        if let Some(v) = get("solver.safety_cap") {
            self.solver.safety_cap = parse_value("solver.safety_cap", v)?;
        }

        // outer loop
        let o = &mut self.outer;
        if let Some(v) = get("outer.kkt") {
            let on = parse_bool("outer.kkt", v)?;
            if on && !o.kkt_mode && get("outer.eta").is_none() {
                o.eta = OuterParams::kkt().eta;
            }
            o.kkt_mode = on;
        }
        for (key, slot) in [
            ("outer.beta0", &mut o.beta0),
            ("outer.rho", &mut o.rho),
            ("outer.eta", &mut o.eta),
            ("outer.target_eps", &mut o.target_eps),
        ] {
            if let Some(v) = get(key) {
                *slot = parse_value(key, v)?;
            }
        }
        if let Some(v) = get("outer.m0") {
            o.m0 = parse_value("outer.m0", v)?;
        }
        if let Some(v) = get("outer.eps0") {
            o.eps0 = if v.eq_ignore_ascii_case("auto") {
                None
            } else {
                Some(parse_value("outer.eps0", v)?)
            };
        }
        if let Some(v) = get("outer.max_outer") {
            o.max_outer = parse_value("outer.max_outer", v)?;
        }
        for (key, slot) in [
            ("outer.bounded_domain", &mut o.bounded_domain),
            ("outer.early_stop", &mut o.early_stop),
            ("outer.certify_eps", &mut o.certify_eps),
            ("output.wall_clock", &mut o.record_wall_clock),
        ] {
            if let Some(v) = get(key) {
                *slot = parse_bool(key, v)?;
            }
        }

        // output
        if let Some(v) = get("output.trace") {
            self.trace_path = Some(PathBuf::from(v));
        }
        if let Some(v) = get("output.summary") {
            self.summary_path = Some(PathBuf::from(v));
        }
        if let Some(v) = get("output.report_every") {
            self.report_every = parse_value("output.report_every", v)?;
        }

        for key in kv.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(IpalmError::Config(format!("unknown configuration key '{key}'")));
            }
        }
        Ok(())
    }

    /// Checks every parameter invariant that does not need the problem data.
    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        self.solver.validate()?;
        if let ProblemSpec::Synthetic {
            family, m, n, sparsity, ..
        } = &self.problem
        {
            if *n == 0 {
                return Err(IpalmError::Config("problem.n must be positive".into()));
            }
            if *family == SyntheticFamily::BasisPursuit && (*sparsity == 0 || *m == 0) {
                return Err(IpalmError::Config(
                    "basis pursuit needs problem.m and problem.sparsity".into(),
                ));
            }
        }
        Ok(())
    }
}

const KNOWN_KEYS: [&str; 29] = [
    "problem.kind",
    "problem.data",
    "problem.synthetic",
    "problem.lambda",
    "problem.mu",
    "problem.m",
    "problem.n",
    "problem.sparsity",
    "problem.seed",
    "problem.normalize",
    "solver.kind",
    "solver.tau",
    "solver.seed",
    "solver.safety_cap",
    "outer.beta0",
    "outer.rho",
    "outer.eta",
    "outer.m0",
    "outer.eps0",
    "outer.max_outer",
    "outer.target_eps",
    "outer.kkt",
    "outer.bounded_domain",
    "outer.early_stop",
    "outer.certify_eps",
    "output.trace",
    "output.summary",
    "output.wall_clock",
    "output.report_every",
];

/// A loaded problem with the reference value when one is known.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: CompositeProblem,
    pub f_star: Option<f64>,
}

pub fn load_problem(spec: &ProblemSpec) -> Result<LoadedProblem> {
    match spec {
        ProblemSpec::Dataset { kind, path, normalize } => {
            let data = read_libsvm(path, None)?;
            let data = if *normalize { data.normalized() } else { data };
            Ok(LoadedProblem {
                problem: build_problem(*kind, &data)?,
                f_star: None,
            })
        }
        ProblemSpec::Synthetic {
            family,
            m,
            n,
            sparsity,
            seed,
        } => {
            let m = if *m == 0 { default_rows(*family, *n) } else { *m };
            let inst = synthetic_instance(*family, m, *n, *sparsity, *seed)?;
            Ok(LoadedProblem {
                problem: inst.problem,
                f_star: inst.f_star,
            })
        }
    }
}

fn default_rows(family: SyntheticFamily, n: usize) -> usize {
    match family {
        SyntheticFamily::EqualityQp => 0,
        SyntheticFamily::BasisPursuit => (2 * n / 5).max(1),
        SyntheticFamily::Lad => 2 * n,
        SyntheticFamily::FusedLasso | SyntheticFamily::Svm => 4 * n,
    }
}

/// Final numbers of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: TraceStatus,
    pub objective: f64,
    pub infeasibility: f64,
    pub kkt_x_bound: f64,
    pub kkt_lam_bound: f64,
    pub inner_iterations: u64,
    pub outer_iterations: usize,
    pub work: f64,
    pub wall_ms: f64,
    pub x: Vec<f64>,
}

impl RunSummary {
    /// Exit code of the CLI: 0 converged, 2 stopped by a limit.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            TraceStatus::Converged => 0,
            TraceStatus::MaxOuter | TraceStatus::SafetyCapExhausted => 2,
        }
    }

    /// Human-readable `key: value` lines; floats print with round-trip precision.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "status: {}", self.status.name());
        let _ = writeln!(s, "objective: {:e}", self.objective);
        let _ = writeln!(s, "infeasibility: {:e}", self.infeasibility);
        let _ = writeln!(s, "kkt_x_bound: {:e}", self.kkt_x_bound);
        let _ = writeln!(s, "kkt_lam_bound: {:e}", self.kkt_lam_bound);
        let _ = writeln!(s, "inner_iterations: {}", self.inner_iterations);
        let _ = writeln!(s, "outer_iterations: {}", self.outer_iterations);
        let _ = writeln!(s, "work_passes: {:e}", self.work);
        let _ = writeln!(s, "wall_ms: {:.3}", self.wall_ms);
        s
    }
}

/// Solves `problem` under `cfg` without touching the file system.
pub fn solve(problem: &CompositeProblem, cfg: &RunConfig) -> Result<(RunSummary, ConvergenceTrace)> {
    cfg.validate()?;
    let lam0 = DualPoint::zeros(problem.h_spec());
    let x0 = vec![0.0; problem.n()];
    let (x, _, trace) = ipalm_solve(problem, &cfg.solver, &cfg.outer, &x0, &lam0)?;
    if cfg.report_every > 0 {
        for r in trace.records.iter().filter(|r| r.s % cfg.report_every == 0) {
            log::info!(
                "s={} beta={:.3e} F={:.10e} infeas={:.3e} inner={}",
                r.s,
                r.beta_s,
                r.objective,
                r.infeasibility,
                r.inner_cum
            );
        }
    }
    let last = trace.last().expect("trace has the initial record");
    let summary = RunSummary {
        status: trace.status,
        objective: problem.objective(&x)?,
        infeasibility: problem.infeasibility(&x)?,
        kkt_x_bound: last.kkt_x_bound,
        kkt_lam_bound: last.kkt_lam_bound,
        inner_iterations: last.inner_cum,
        outer_iterations: trace.completed_outer(),
        work: last.work_cum,
        wall_ms: last.wall_ms,
        x,
    };
    Ok((summary, trace))
}

/// Loads the problem, solves it and writes the trace and summary files.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let loaded = load_problem(&cfg.problem)?;
    cfg.solver.validate_for(loaded.problem.n_components())?;
    let (summary, trace) = solve(&loaded.problem, cfg)?;
    if let Some(path) = &cfg.trace_path {
        trace.write_csv(BufWriter::new(File::create(path)?))?;
    }
    if let Some(path) = &cfg.summary_path {
        fs::write(path, summary.to_text())?;
    }
    Ok(summary)
}

/// One member of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub config: usize,
    pub beta0: f64,
    pub status: TraceStatus,
    pub objective: f64,
    pub infeasibility: f64,
    pub inner_iterations: u64,
    pub log_rel_error: Option<f64>,
    pub rel_error: f64,
    /// `(inner_cum, log10 relative error)` per outer step.
    pub curve: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Index into `rows` of the best run per configuration.
    pub best: Vec<usize>,
    pub f_lower: f64,
    pub f_upper: f64,
}

impl CompareReport {
    /// CSV table with a `best` flag column.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("config,beta0,status,F,infeas,inner_cum,rel_error,log_rel_error,best\n");
        for (i, r) in self.rows.iter().enumerate() {
            let lre = r
                .log_rel_error
                .map_or_else(|| "below_confidence".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(
                s,
                "{},{},{},{:e},{:e},{},{:e},{},{}",
                r.config,
                r.beta0,
                r.status.name(),
                r.objective,
                r.infeasibility,
                r.inner_iterations,
                r.rel_error,
                lre,
                u8::from(self.best.contains(&i))
            );
        }
        s
    }

    /// Writes the table and one `iteration,log_rel_error` file per run into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("compare.csv"), self.to_csv())?;
        for r in &self.rows {
            let mut w = BufWriter::new(File::create(
                dir.join(format!("curve_c{}_beta{}.csv", r.config, r.beta0)),
            )?);
            writeln!(w, "inner_cum,log_rel_error")?;
            for (it, e) in &r.curve {
                writeln!(w, "{it},{e:.6}")?;
            }
        }
        Ok(())
    }
}

fn rank_key(r: &CompareRow) -> f64 {
    // below the confidence level counts as the best possible error
    r.log_rel_error.unwrap_or(f64::NEG_INFINITY)
}

/// Runs each configuration for every β₀ in `betas` on a worker pool and
/// picks the run with the smallest relative error per configuration.
/// The bracket `[f_lower, f_upper]` defaults to the known optimum when the
/// problem supplies one.
pub fn compare(configs: &[RunConfig], betas: &[f64], bracket: Option<(f64, f64)>) -> Result<CompareReport> {
    if configs.is_empty() {
        return Err(IpalmError::Config("compare needs at least one configuration".into()));
    }
    if betas.is_empty() {
        return Err(IpalmError::Config("compare needs at least one beta0".into()));
    }
    let mut loaded = Vec::with_capacity(configs.len());
    for c in configs {
        c.validate()?;
        let l = load_problem(&c.problem)?;
        c.solver.validate_for(l.problem.n_components())?;
        loaded.push(l);
    }
    let (f_lower, f_upper) = match bracket {
        Some(b) => b,
        None => {
            let f = loaded
                .iter()
                .find_map(|l| l.f_star)
                .ok_or_else(|| IpalmError::Config("compare needs a reference bracket (--f-lower/--f-upper)".into()))?;
            (f, f)
        }
    };
    error_report(f_upper, f_lower, f_upper)?;

    let jobs: Vec<(usize, f64)> = (0..configs.len())
        .flat_map(|i| betas.iter().map(move |&b| (i, b)))
        .collect();
    let results: Vec<Result<CompareRow>> = jobs
        .par_iter()
        .map(|&(i, beta0)| {
            let mut cfg = configs[i].clone();
            cfg.outer.beta0 = beta0;
            cfg.trace_path = None;
            cfg.summary_path = None;
            let (summary, trace) = solve(&loaded[i].problem, &cfg)?;
            let rep = error_report(summary.objective, f_lower, f_upper)?;
            let curve = trace
                .records
                .iter()
                .map(|r| {
                    let e = ((r.objective - f_upper).abs() / f_upper).max(1e-300).log10();
                    (r.inner_cum, e)
                })
                .collect();
            Ok(CompareRow {
                config: i,
                beta0,
                status: summary.status,
                objective: summary.objective,
                infeasibility: summary.infeasibility,
                inner_iterations: summary.inner_iterations,
                log_rel_error: rep.log_rel_error,
                rel_error: rep.rel_error,
                curve,
            })
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = Vec::new();
    for i in 0..configs.len() {
        let pick = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.config == i)
            .min_by(|a, b| {
                rank_key(a.1)
                    .total_cmp(&rank_key(b.1))
                    .then(a.1.infeasibility.total_cmp(&b.1.infeasibility))
            })
            .map(|(k, _)| k)
            .expect("one row per beta0");
        best.push(pick);
    }
    Ok(CompareReport {
        rows,
        best,
        f_lower,
        f_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_dotted_keys() {
        let cfg = RunConfig::from_text(
            "# qp\nproblem.synthetic = qp\nproblem.n = 8\nsolver.kind = approx\nouter.rho = 0.8\nouter.eta=0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.solver.kind, SolverKind::Approx);
        assert_eq!(cfg.outer.rho, 0.8);
        assert_eq!(cfg.outer.eta, 0.5);
        assert!(matches!(
            cfg.problem,
            ProblemSpec::Synthetic {
                family: SyntheticFamily::EqualityQp,
                n: 8,
                ..
            }
        ));
    }

    #[test]
    fn rejects_unknown_and_malformed_keys() {
        assert!(RunConfig::from_text("outer.rhoo = 0.8\n").is_err());
        assert!(matches!(
            RunConfig::from_text("outer.rho\n"),
            Err(IpalmError::Parse { line: 1, .. })
        ));
        assert!(RunConfig::from_text("outer.rho = fast\n").is_err());
        assert!(RunConfig::from_text("problem.kind = lad\n").is_err());
    }

    #[test]
    fn kkt_flag_switches_eta_default() {
        let cfg = RunConfig::from_text("outer.kkt = true\n").unwrap();
        assert!(cfg.outer.kkt_mode);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn summary_exit_codes() {
        let cfg = RunConfig::from_text("problem.synthetic = qp\nproblem.n = 4\nouter.max_outer = 2\n").unwrap();
        let s = run(&cfg).unwrap();
        assert_eq!(s.exit_code(), 2);
        assert!(s.to_text().starts_with("status: max_outer\n"));
    }
}
