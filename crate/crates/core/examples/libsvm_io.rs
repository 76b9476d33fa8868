//! Writes a dataset in libsvm format, gzips it, reads it back and solves LAD on it.

use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use ipalm::bench::{solve, RunConfig};
use ipalm::problems::synthetic::classification_data;
use ipalm::problems::{build_problem, read_libsvm, write_libsvm, BenchmarkKind};

fn main() -> ipalm::Result<()> {
    let data = classification_data(40, 6, 9)?;
    let mut text = Vec::new();
    write_libsvm(&data, &mut text)?;
    println!(
        "{}",
        String::from_utf8_lossy(&text)
            .lines()
            .take(3)
            .collect::<Vec<_>>()
            .join("\n")
    );

    let path = std::env::temp_dir().join(format!("ipalm-example-{}.svm.gz", std::process::id()));
    let mut enc = GzEncoder::new(std::fs::File::create(&path)?, Compression::default());
    enc.write_all(&text)?;
    enc.finish()?;
    let back = read_libsvm(&path, Some(6))?;
    println!("round trip exact: {}", back == data);

    let cfg = RunConfig::from_text(&format!("problem.kind = lad\nproblem.data = {}\n", path.display()))?;
    let p = build_problem(BenchmarkKind::Lad { lambda: 0.01 }, &back.normalized())?;
    let (summary, _) = solve(&p, &cfg)?;
    print!("{}", summary.to_text());
    std::fs::remove_file(&path)?;
    Ok(())
}
