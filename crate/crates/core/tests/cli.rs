use std::path::Path;
use std::process::{Command, Output};

use ipalm::bench::{solve, RunConfig};
use ipalm::ipalm::TRACE_COLUMNS;
use ipalm::problems::synthetic::{lad_instance, SyntheticFamily};
use ipalm::problems::{build_problem, read_libsvm, write_libsvm, BenchmarkKind};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipalm-bench"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary_value(stdout: &[u8], key: &str) -> String {
    let text = String::from_utf8_lossy(stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in summary:\n{text}"))
        .to_string()
}

fn run_to(dir: &Path, name: &str, extra: &[&str]) -> (Output, String) {
    let path = dir.join(name);
    let mut args = vec!["run", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = bench(&args);
    let trace = std::fs::read_to_string(&path).unwrap_or_default();
    (out, trace)
}

#[test]
fn trace_header_has_fixed_column_order() {
    let dir = tempfile::tempdir().unwrap();
    let (out, trace) = run_to(
        dir.path(),
        "t.csv",
        &["--problem", "qp", "--n", "6", "--max-outer", "5"],
    );
    assert!(out.status.code().is_some());
    let header = trace.lines().next().unwrap();
    assert_eq!(header, TRACE_COLUMNS.join(","));
    assert_eq!(
        header,
        "s,beta_s,eps_s,K_s,m_s,M_s,F,infeas,kkt_x_bound,kkt_lam_bound,inner_cum,wall_ms"
    );
    assert_eq!(trace.lines().count(), 1 + 6);
    for line in trace.lines().skip(1) {
        assert_eq!(line.split(',').count(), TRACE_COLUMNS.len());
    }
}

#[test]
fn fixed_seed_gives_identical_trace_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--problem",
        "svm",
        "--n",
        "6",
        "--m",
        "30",
        "--solver",
        "katyusha",
        "--tau",
        "3",
        "--seed",
        "11",
        "--max-outer",
        "12",
        "--no-wall-clock",
    ];
    let (_, a) = run_to(dir.path(), "a.csv", &args);
    let (_, b) = run_to(dir.path(), "b.csv", &args);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let mut other = args.to_vec();
    other[10] = "12";
    let (_, c) = run_to(dir.path(), "c.csv", &other);
    assert_ne!(a, c);
}

#[test]
fn exit_codes_follow_status() {
    let ok = bench(&[
        "run",
        "--problem",
        "qp",
        "--n",
        "5",
        "--eps",
        "1e-6",
        "--max-outer",
        "200",
    ]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert_eq!(summary_value(&ok.stdout, "status"), "converged");

    let limited = bench(&[
        "run",
        "--problem",
        "qp",
        "--n",
        "5",
        "--eps",
        "1e-14",
        "--max-outer",
        "2",
    ]);
    assert_eq!(limited.status.code(), Some(2));
    assert_eq!(summary_value(&limited.stdout, "status"), "max_outer");

    let bad = bench(&["run", "--rho", "2"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).starts_with("error: "));
}

#[test]
fn each_invariant_class_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "solver.kind = apg\nouter.speed = 3\n").unwrap();
    let missing = dir.path().join("missing.svm");
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["--rho", "0.3"], "rho"),
        (vec!["--rho", "1.0"], "rho"),
        (vec!["--eta", "0"], "eta"),
        (vec!["--rho", "0.7", "--eta", "0.7"], "rho"),
        (vec!["--kkt", "--rho", "0.9", "--eta", "0.8"], "rho^3"),
        (vec!["--beta0=-1"], "beta0"),
        (vec!["--m0", "0"], "m0"),
        (vec!["--solver", "katyusha", "--tau", "0"], "tau"),
        (
            vec!["--problem", "lad", "--n", "4", "--solver", "katyusha", "--tau", "9"],
            "tau",
        ),
        (vec!["--solver", "sgd"], "sgd"),
        (vec!["--problem", "knapsack"], "knapsack"),
        (vec!["--config", cfg.to_str().unwrap()], "outer.speed"),
        (
            vec!["--data", missing.to_str().unwrap(), "--problem", "lad"],
            "missing.svm",
        ),
        (vec!["--problem", "bp", "--n", "10", "--m", "4"], "sparsity"),
    ];
    for (extra, needle) in cases {
        let mut args = vec!["run"];
        args.extend_from_slice(&extra);
        let out = bench(&args);
        let err = stderr(&out);
        assert_eq!(out.status.code(), Some(1), "{extra:?}: {err}");
        assert!(err.contains(needle), "{extra:?}: expected '{needle}' in {err}");
    }
}

#[test]
fn dataset_run_matches_library_solve() {
    let lad = lad_instance(12, 5, 0.05, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lad.svm");
    write_libsvm(&lad.data, std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_libsvm(&path, Some(5)).unwrap();
    assert_eq!(back, lad.data);

    let out = bench(&[
        "run",
        "--data",
        path.to_str().unwrap(),
        "--problem",
        "lad",
        "--lambda",
        "0.05",
        "--max-outer",
        "30",
        "--eps",
        "0",
    ]);
    assert!(out.status.code().is_some(), "{}", stderr(&out));

    let cfg = RunConfig::from_text(&format!(
        "problem.kind = lad\nproblem.data = {}\nproblem.lambda = 0.05\nouter.max_outer = 30\nouter.target_eps = 0\n",
        path.display()
    ))
    .unwrap();
    let p = build_problem(BenchmarkKind::Lad { lambda: 0.05 }, &back.normalized()).unwrap();
    let (summary, _) = solve(&p, &cfg).unwrap();
    assert_eq!(
        summary_value(&out.stdout, "objective"),
        format!("{:e}", summary.objective)
    );
    assert_eq!(
        summary_value(&out.stdout, "inner_iterations"),
        summary.inner_iterations.to_string()
    );
}

#[test]
fn compare_ranks_every_beta() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = bench(&[
        "compare",
        "--problem",
        "qp",
        "--n",
        "6",
        "--betas",
        "0.1,1,10",
        "--max-outer",
        "40",
        "--eps",
        "1e-8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.code().is_some(), "{}", stderr(&out));
    let table = String::from_utf8_lossy(&out.stdout).into_owned();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "config,beta0,status,F,infeas,inner_cum,rel_error,log_rel_error,best"
    );
    assert_eq!(lines.len(), 4);
    assert_eq!(lines.iter().skip(1).filter(|l| l.ends_with(",1")).count(), 1);
    assert_eq!(std::fs::read_to_string(out_dir.join("compare.csv")).unwrap(), table);
    for b in ["0.1", "1", "10"] {
        let curve = std::fs::read_to_string(out_dir.join(format!("curve_c0_beta{b}.csv"))).unwrap();
        assert!(curve.starts_with("inner_cum,log_rel_error\n"));
    }
}

#[test]
fn synthetic_family_names_parse() {
    for name in ["qp", "bp", "lad", "fused_lasso", "svm"] {
        assert!(name.parse::<SyntheticFamily>().is_ok());
    }
    assert!("nope".parse::<SyntheticFamily>().is_err());
}
