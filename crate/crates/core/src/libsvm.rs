//! Libsvm text format.
//!
//! Each line is `<label> <idx>:<val> ...` with 1-based indices on disk.
//! Labels `0`/`-1` map to the negative class and `1`/`+1` to the positive
//! class. Files written here start with a `# d=<int> n=<int>` metadata line so
//! the feature count survives trailing all-zero features; other libsvm
//! readers skip it as a comment.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{Label, SparseDataset, SparseExample};

/// Values from the `# d=<int> n=<int>` line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Header {
    pub num_features: Option<usize>,
    pub num_examples: Option<usize>,
}

fn parse_header(line: &str) -> Header {
    let mut header = Header::default();
    for tok in line.trim_start_matches('#').split_whitespace() {
        if let Some(v) = tok.strip_prefix("d=") {
            header.num_features = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("n=") {
            header.num_examples = v.parse().ok();
        }
    }
    header
}

fn parse_label(tok: &str, line: usize) -> Result<Label> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad label {tok:?}"),
    })?;
    if v == 1.0 {
        Ok(Label::Pos)
    } else if v == -1.0 || v == 0.0 {
        Ok(Label::Neg)
    } else {
        Err(Error::Parse {
            line,
            msg: format!("label {tok} not in {{-1, 0, 1, +1}}"),
        })
    }
}

fn parse_line(text: &str, line: usize) -> Result<SparseExample> {
    let mut toks = text.split_whitespace();
    let label = parse_label(toks.next().unwrap_or_default(), line)?;
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut last: Option<u32> = None;
    for tok in toks {
        let (i, v) = tok.split_once(':').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected idx:val, got {tok:?}"),
        })?;
        let idx: u64 = i.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad index {i:?}"),
        })?;
        if idx == 0 || idx > u32::MAX as u64 {
            return Err(Error::Parse {
                line,
                msg: format!("index {idx} out of range (indices are 1-based)"),
            });
        }
        let val: f64 = v.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad value {v:?}"),
        })?;
        if !val.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite value {v}"),
            });
        }
        let j = (idx - 1) as u32;
        if let Some(prev) = last {
            if j == prev {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate index {idx}"),
                });
            }
            if j < prev {
                return Err(Error::Parse {
                    line,
                    msg: format!("index {idx} out of order"),
                });
            }
        }
        last = Some(j);
        // explicit zeros are legal on disk but never stored
        if val != 0.0 {
            indices.push(j);
            values.push(val);
        }
    }
    SparseExample::new(indices, values, label).map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })
}

/// Parses libsvm text from a reader. See [`load_libsvm`].
pub fn read_libsvm<R: BufRead>(reader: R, expected_d: Option<usize>) -> Result<SparseDataset> {
    let mut header = Header::default();
    let mut examples = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line_no = no + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if text.starts_with('#') {
            if examples.is_empty() && header == Header::default() {
                header = parse_header(text);
            }
            continue;
        }
        let ex = parse_line(text, line_no)?;
        if let Some(d) = expected_d {
            if ex.max_index_bound() > d {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("index {} exceeds expected d = {d}", ex.max_index_bound()),
                });
            }
        }
        examples.push(ex);
    }
    if examples.is_empty() {
        return Err(Error::InvalidData("no examples".into()));
    }
    if let Some(n) = header.num_examples {
        if n != examples.len() {
            return Err(Error::InvalidData(format!(
                "header declares n={n} but file has {} examples",
                examples.len()
            )));
        }
    }
    let observed = examples
        .iter()
        .map(SparseExample::max_index_bound)
        .max()
        .unwrap_or(0)
        .max(1);
    let d = match (expected_d, header.num_features) {
        (Some(d), _) => d,
        (None, Some(d)) => d,
        (None, None) => observed,
    };
    SparseDataset::new(examples, d)
}

/// Loads a libsvm file. `d` is `expected_d` when given, otherwise the value in
/// the metadata line, otherwise one past the largest index seen.
pub fn load_libsvm(path: impl AsRef<Path>, expected_d: Option<usize>) -> Result<SparseDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_libsvm(BufReader::new(file), expected_d)
}

/// Writes libsvm text. Values use the shortest representation that parses
/// back to the same bits.
pub fn write_libsvm<W: Write>(dataset: &SparseDataset, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "# d={} n={}",
        dataset.num_features(),
        dataset.num_examples()
    )?;
    for ex in dataset.examples() {
        out.write_all(match ex.label() {
            Label::Pos => b"+1",
            Label::Neg => b"-1",
        })?;
        for (&j, &v) in ex.indices().iter().zip(ex.values()) {
            write!(out, " {}:{}", j + 1, v)?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_libsvm(dataset: &SparseDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_libsvm(dataset, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn parse(text: &str, d: Option<usize>) -> Result<SparseDataset> {
        read_libsvm(text.as_bytes(), d)
    }

    fn random_dataset(n: usize, d: usize, seed: u64) -> SparseDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let examples = (0..n)
            .map(|_| {
                let mut idx: Vec<u32> = (0..d as u32).filter(|_| rng.random_bool(0.2)).collect();
                idx.dedup();
                let vals = idx
                    .iter()
                    .map(|_| rng.random_range(-1e3..1e3) * 10f64.powi(rng.random_range(-8..8)))
                    .collect();
                let label = if rng.random_bool(0.5) { Label::Pos } else { Label::Neg };
                SparseExample::new(idx, vals, label).unwrap()
            })
            .collect();
        SparseDataset::new(examples, d).unwrap()
    }

    #[test]
    fn parses_single_line() {
        let ds = parse("+1 1:0.5 3:2.0\n", Some(4)).unwrap();
        assert_eq!(ds.num_features(), 4);
        let ex = ds.example(0);
        assert_eq!(ex.indices(), &[0, 2]);
        assert_eq!(ex.values(), &[0.5, 2.0]);
        assert_eq!(ex.label(), Label::Pos);
    }

    #[test]
    fn label_mapping() {
        let ds = parse("0 1:1\n-1 1:1\n1 1:1\n+1 1:1\n", None).unwrap();
        let labels: Vec<_> = ds.examples().iter().map(|e| e.label()).collect();
        assert_eq!(labels, vec![Label::Neg, Label::Neg, Label::Pos, Label::Pos]);
        assert!(matches!(parse("2 1:1\n", None), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_file_is_an_error() {
        let err = parse("", None).unwrap_err();
        assert!(err.to_string().contains("no examples"));
        assert!(parse("# d=3 n=0\n\n", None).is_err());
    }

    #[test]
    fn rejects_bad_lines_with_line_numbers() {
        let cases = [
            ("+1 1:1\n+1 2:1 2:3\n", 2),
            ("+1 1:1\n+1 3:1 2:3\n", 2),
            ("+1 0:1\n", 1),
            ("+1 1:nan\n", 1),
            ("+1 1:inf\n", 1),
            ("+1 1:x\n", 1),
            ("+1 1\n", 1),
        ];
        for (text, line) in cases {
            match parse(text, None) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
        assert!(matches!(parse("+1 5:1\n", Some(4)), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn explicit_zeros_are_dropped() {
        let ds = parse("+1 1:0 2:3\n", None).unwrap();
        assert_eq!(ds.example(0).indices(), &[1]);
    }

    #[test]
    fn writes_one_based_shortest_values() {
        let ds = parse("+1 1:0.5 3:2.0\n", Some(4)).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&ds, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# d=4 n=1\n+1 1:0.5 3:2\n");
    }

    #[test]
    fn trailing_zero_features_survive_via_header() {
        let ds = parse("-1 1:1 3:1\n", Some(5)).unwrap();
        let mut buf = Vec::new();
        write_libsvm(&ds, &mut buf).unwrap();
        assert_eq!(read_libsvm(&buf[..], None).unwrap().num_features(), 5);
        assert_eq!(read_libsvm(&buf[..], Some(5)).unwrap(), ds);
    }

    #[test]
    fn header_count_mismatch_is_an_error() {
        assert!(parse("# d=3 n=2\n+1 1:1\n", None).is_err());
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (n, seed) in [(100, 1), (1000, 2)] {
            let ds = random_dataset(n, 40, seed);
            let path = dir.path().join(format!("ds{n}.libsvm"));
            save_libsvm(&ds, &path).unwrap();
            let back = load_libsvm(&path, None).unwrap();
            assert_eq!(back.num_examples(), n);
            for (a, b) in ds.examples().iter().zip(back.examples()) {
                assert_eq!(a.indices(), b.indices());
                let bits_a: Vec<u64> = a.values().iter().map(|v| v.to_bits()).collect();
                let bits_b: Vec<u64> = b.values().iter().map(|v| v.to_bits()).collect();
                assert_eq!(bits_a, bits_b);
                assert_eq!(a.label(), b.label());
            }
            assert_eq!(back, ds);
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_libsvm("/nonexistent/file.libsvm", None),
            Err(Error::Io { .. })
        ));
    }
}
