use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ipalm::bench::{compare, parse_key_values, run, RunConfig, BETA0_SWEEP};
use ipalm::ipalm::TraceStatus;

#[derive(Parser)]
#[command(name = "ipalm-bench", version, about = "Run and compare inexact proximal ALM solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration, writing a CSV trace and a summary.
    Run {
        #[command(flatten)]
        opts: Overrides,
        /// Trace output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary output path (the summary is always printed).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Sweep beta0 over one or more configurations and rank the runs.
    Compare {
        #[command(flatten)]
        opts: Overrides,
        /// Extra configuration files, each swept on its own.
        #[arg(long = "also")]
        also: Vec<PathBuf>,
        /// Comma-separated beta0 values.
        #[arg(long, value_delimiter = ',')]
        betas: Vec<f64>,
        #[arg(long, requires = "f_upper")]
        f_lower: Option<f64>,
        #[arg(long, requires = "f_lower")]
        f_upper: Option<f64>,
        /// Directory for the table and per-run curves.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    /// Configuration file of dotted `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark kind with --data, otherwise a synthetic family.
    #[arg(long)]
    problem: Option<String>,
    /// libsvm file, optionally gzip-compressed.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long)]
    instance_seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    beta0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Termination tolerance.
    #[arg(long)]
    eps: Option<f64>,
    /// Initial accuracy (estimated when omitted).
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    m0: Option<u64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kkt: bool,
    #[arg(long)]
    bounded_domain: bool,
    #[arg(long)]
    no_early_stop: bool,
    /// Write zeros in the wall_ms column.
    #[arg(long)]
    no_wall_clock: bool,
}

impl Overrides {
    fn key_values(&self, base: Option<&PathBuf>) -> ipalm::Result<BTreeMap<String, String>> {
        let mut kv = match base.or(self.config.as_ref()) {
            Some(p) => parse_key_values(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let mut set = |k: &str, v: String| {
            kv.insert(k.to_string(), v);
        };
        if let Some(d) = &self.data {
            set("problem.data", d.display().to_string());
        }
        let opt = |v: Option<String>| v;
        for (k, v) in [
            ("problem.m", opt(self.m.map(|v| v.to_string()))),
            ("problem.n", self.n.map(|v| v.to_string())),
            ("problem.sparsity", self.sparsity.map(|v| v.to_string())),
            ("problem.seed", self.instance_seed.map(|v| v.to_string())),
            ("problem.lambda", self.lambda.map(|v| v.to_string())),
            ("solver.kind", self.solver.clone()),
            ("solver.tau", self.tau.map(|v| v.to_string())),
            ("solver.seed", self.seed.map(|v| v.to_string())),
            ("outer.beta0", self.beta0.map(|v| v.to_string())),
            ("outer.rho", self.rho.map(|v| v.to_string())),
            ("outer.eta", self.eta.map(|v| v.to_string())),
            ("outer.target_eps", self.eps.map(|v| v.to_string())),
            ("outer.eps0", self.eps0.map(|v| v.to_string())),
            ("outer.m0", self.m0.map(|v| v.to_string())),
            ("outer.max_outer", self.max_outer.map(|v| v.to_string())),
        ] {
            if let Some(v) = v {
                set(k, v);
            }
        }
        for (k, on) in [("outer.kkt", self.kkt), ("outer.bounded_domain", self.bounded_domain)] {
            if on {
                set(k, "true".into());
            }
        }
        if self.no_early_stop {
            set("outer.early_stop", "false".into());
        }
        if self.no_wall_clock {
            set("output.wall_clock", "false".into());
        }
        if let Some(p) = &self.problem {
            if kv.contains_key("problem.data") {
                kv.remove("problem.synthetic");
                kv.insert("problem.kind".into(), p.clone());
            } else {
                kv.insert("problem.synthetic".into(), p.clone());
            }
        } else if self.data.is_some() {
            kv.remove("problem.synthetic");
        }
        Ok(kv)
    }

    fn config(&self, base: Option<&PathBuf>) -> ipalm::Result<RunConfig> {
        let cfg = RunConfig::from_key_values(&self.key_values(base)?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(cmd: Command) -> ipalm::Result<u8> {
    match cmd {
        Command::Run { opts, out, summary } => {
            let mut cfg = opts.config(None)?;
            if out.is_some() {
                cfg.trace_path = out;
            }
            if summary.is_some() {
                cfg.summary_path = summary;
            }
            let s = run(&cfg)?;
            print!("{}", s.to_text());
            Ok(s.exit_code() as u8)
        }
        Command::Compare {
            opts,
            also,
            betas,
            f_lower,
            f_upper,
            out,
        } => {
            let mut configs = vec![opts.config(None)?];
            for path in &also {
                configs.push(opts.config(Some(path))?);
            }
            let betas = if betas.is_empty() { BETA0_SWEEP.to_vec() } else { betas };
            let bracket = f_lower.zip(f_upper);
            let report = compare(&configs, &betas, bracket)?;
            print!("{}", report.to_csv());
            if let Some(dir) = out {
                report.write_to(dir)?;
            }
            let all_converged = report
                .best
                .iter()
                .all(|&i| report.rows[i].status == TraceStatus::Converged);
            Ok(if all_converged { 0 } else { 2 })
        }
    }
}
