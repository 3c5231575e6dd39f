//! LibSVM / svmlight text format.
//!
//! One sample per line: `label idx:val idx:val ...` with 1-based, strictly
//! increasing feature indices. Anything after a `#` is a comment.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use super::csr::{CsrMatrix, Dataset};
use crate::error::{Error, Result};

/// Parses a LibSVM stream. The column dimension is the largest index seen,
/// unless `n_cols` is given, in which case it must cover every index.
pub fn parse_libsvm<R: BufRead>(reader: R, n_cols: Option<usize>) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut row_offsets = vec![0usize];
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    let mut max_col = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_ascii_whitespace();
        let Some(label_token) = tokens.next() else {
            continue;
        };
        let label: f64 = label_token.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid label {label_token:?}"),
        })?;
        if !label.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite label {label_token:?}"),
            });
        }

        let row_start = col_indices.len();
        for token in tokens {
            let (idx, val) = token.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("expected idx:val, found {token:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid feature index in {token:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid feature value in {token:?}"),
            })?;
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite feature value in {token:?}"),
                });
            }
            let col = idx - 1;
            if col_indices.len() > row_start && col <= *col_indices.last().unwrap() {
                return Err(Error::NonIncreasingIndex { line: lineno });
            }
            max_col = max_col.max(idx);
            col_indices.push(col);
            values.push(val);
        }
        labels.push(label);
        row_offsets.push(col_indices.len());
    }

    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n_cols = match n_cols {
        Some(p) if p < max_col => {
            return Err(Error::InvalidArgument(format!(
                "dimension override {p} is smaller than the largest feature index {max_col}"
            )))
        }
        Some(p) => p,
        None => max_col,
    };
    let features = CsrMatrix::new(n_cols, row_offsets, col_indices, values)?;
    Dataset::new(features, labels)
}

/// Reads a LibSVM file from disk; files ending in `.gz` are decompressed.
pub fn read_libsvm_file(path: impl AsRef<Path>, n_cols: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let is_gzip = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("gz"));
    if is_gzip {
        parse_libsvm(BufReader::new(GzDecoder::new(file)), n_cols)
    } else {
        parse_libsvm(BufReader::new(file), n_cols)
    }
}

/// Writes a dataset in LibSVM format. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    for (row, label) in data.features().rows().zip(data.labels()) {
        write!(out, "{label}")?;
        for (j, v) in row.iter() {
            write!(out, " {}:{v:?}", j + 1)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_libsvm(text.as_bytes(), None)
    }

    #[test]
    fn reads_two_rows() {
        let d = parse("+1 1:0.5 3:2.0\n-1 2:1.0\n").unwrap();
        assert_eq!(d.n_samples(), 2);
        assert_eq!(d.n_features(), 3);
        assert_eq!(d.labels(), &[1.0, -1.0]);
        let r0 = d.features().row(0);
        assert_eq!(r0.indices, &[0, 2]);
        assert_eq!(r0.values, &[0.5, 2.0]);
        let r1 = d.features().row(1);
        assert_eq!(r1.indices, &[1]);
        assert_eq!(r1.values, &[1.0]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse(""), Err(Error::EmptyInput)));
        assert!(matches!(
            parse("\n  \n# only a comment\n"),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn non_increasing_index_reports_line() {
        assert!(matches!(
            parse("+1 3:1 2:1\n"),
            Err(Error::NonIncreasingIndex { line: 1 })
        ));
        assert!(matches!(
            parse("+1 1:1\n-1 2:1 2:3\n"),
            Err(Error::NonIncreasingIndex { line: 2 })
        ));
    }

    #[test]
    fn malformed_tokens() {
        assert!(matches!(
            parse("abc 1:1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("1 1:x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("1 0:1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("1\n1 5\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn dimension_override() {
        let d = parse_libsvm("1 2:1\n".as_bytes(), Some(10)).unwrap();
        assert_eq!(d.n_features(), 10);
        assert!(parse_libsvm("1 20:1\n".as_bytes(), Some(10)).is_err());
    }

    #[test]
    fn empty_row_and_comments() {
        let d = parse("-1\n+1 4:1.5 # trailing\n").unwrap();
        assert_eq!(d.n_samples(), 2);
        assert!(d.features().row(0).is_empty());
        assert_eq!(d.n_features(), 4);
    }

    #[test]
    fn gzip_files_are_sniffed_by_extension() {
        use flate2::write::GzEncoder;
        use flate2::Compression;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.svm.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::default());
        enc.write_all(b"+1 1:0.5 3:2.0\n-1 2:1.0\n").unwrap();
        enc.finish().unwrap();
        let d = read_libsvm_file(&path, None).unwrap();
        assert_eq!(d, parse("+1 1:0.5 3:2.0\n-1 2:1.0\n").unwrap());
    }
}
