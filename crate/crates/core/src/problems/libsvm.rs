//! The libsvm text format: one sample per line, `label idx:val idx:val …`
//! with 1-based, strictly increasing feature indices.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{IpalmError, Result};
use crate::linalg::SparseMatrix;

use super::LabeledDataset;

/// Parses libsvm text. The feature count is the largest index seen unless
/// `n_features` overrides it.
pub fn parse_libsvm<R: BufRead>(reader: R, n_features: Option<usize>) -> Result<LabeledDataset> {
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    let mut max_index = 0usize;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| IpalmError::Parse { line: lineno, message };
        let mut tokens = body.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("invalid label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(err(format!("non-finite label '{label_tok}'")));
        }
        let row = labels.len();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:val, got '{tok}'")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("invalid feature index '{idx}'")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(err(format!("feature index {idx} does not increase after {last}")));
            }
            let v: f64 = val.parse().map_err(|_| err(format!("invalid feature value '{val}'")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite feature value '{val}'")));
            }
            last = idx;
            max_index = max_index.max(idx);
            triplets.push((row, idx - 1, v));
        }
        labels.push(label);
    }
    let n = match n_features {
        Some(n) if n < max_index => {
            return Err(IpalmError::InvalidParameter(format!(
                "feature count {n} is below the largest index {max_index}"
            )))
        }
        Some(n) => n,
        None => max_index,
    };
    let x = SparseMatrix::from_triplets(labels.len(), n, &triplets)?;
    LabeledDataset::new(x, labels)
}

/// Reads a libsvm file, decompressing gzip input transparently.
pub fn read_libsvm(path: impl AsRef<Path>, n_features: Option<usize>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let open = || File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())));
    let mut file = open()?;
    let mut magic = [0u8; 2];
    let got = file.read(&mut magic)?;
    let file = open()?;
    if got == 2 && magic == [0x1f, 0x8b] {
        parse_libsvm(BufReader::new(GzDecoder::new(file)), n_features)
    } else {
        parse_libsvm(BufReader::new(file), n_features)
    }
}

/// Writes `data` in libsvm format; values round-trip exactly.
pub fn write_libsvm<W: Write>(data: &LabeledDataset, mut w: W) -> Result<()> {
    for (r, label) in data.labels.iter().enumerate() {
        write!(w, "{label}")?;
        for (c, v) in data.x.row(r) {
            write!(w, " {}:{v}", c + 1)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_line() {
        let d = parse_libsvm("1 1:0.5 3:-2\n".as_bytes(), None).unwrap();
        assert_eq!(d.labels, vec![1.0]);
        assert_eq!(d.n_features(), 3);
        assert_eq!(d.x.row(0).collect::<Vec<_>>(), vec![(0, 0.5), (2, -2.0)]);
    }

    #[test]
    fn empty_input() {
        let d = parse_libsvm("".as_bytes(), None).unwrap();
        assert_eq!((d.n_samples(), d.n_features()), (0, 0));
    }

    #[test]
    fn rejects_malformed_lines() {
        for (text, line) in [
            ("1 1:0.5\n-1 2:1 2:3\n", 2),
            ("x 1:1\n", 1),
            ("1 0:1\n", 1),
            ("1 1:1\n\n1 3\n", 3),
            ("1 2:nan\n", 1),
        ] {
            match parse_libsvm(text.as_bytes(), None) {
                Err(IpalmError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(parse_libsvm("1 5:1\n".as_bytes(), Some(3)).is_err());
    }

    #[test]
    fn feature_override_and_comments() {
        let d = parse_libsvm("+1 2:1 # note\n-1\n".as_bytes(), Some(10)).unwrap();
        assert_eq!(d.n_features(), 10);
        assert_eq!(d.labels, vec![1.0, -1.0]);
        assert_eq!(d.x.row_nnz(1), 0);
    }
}
