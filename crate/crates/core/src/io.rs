//! Matrix Market coordinate files (real symmetric, lower triangle) and plain
//! one-value-per-line vector files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SparseSymMatrix;

const HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseSymMatrix> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file), path)
}

/// Parses Matrix Market text. `path` is used only in error messages.
pub fn parse_matrix_market<R: BufRead>(reader: R, path: &Path) -> Result<SparseSymMatrix> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(parse_err(path, 1, "empty file")),
    };
    let got: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    let want: Vec<String> = HEADER.split_whitespace().map(str::to_lowercase).collect();
    if got != want {
        return Err(parse_err(
            path,
            1,
            format!("expected header '{HEADER}', found '{}'", header.trim()),
        ));
    }

    let mut size: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(path, lineno, "size line needs 'rows cols nnz'"));
                }
                let nums: Vec<usize> = fields
                    .iter()
                    .map(|f| f.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(path, lineno, format!("bad size line: {e}")))?;
                if nums[0] != nums[1] {
                    return Err(parse_err(path, lineno, "matrix must be square"));
                }
                size = Some((nums[0], nums[2]));
                entries.reserve(nums[2]);
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(path, lineno, "entry line needs 'i j value'"));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|e| parse_err(path, lineno, format!("bad row index: {e}")))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|e| parse_err(path, lineno, format!("bad column index: {e}")))?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|e| parse_err(path, lineno, format!("bad value: {e}")))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(path, lineno, format!("index ({i}, {j}) out of range")));
                }
                if i < j {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("entry ({i}, {j}) is above the diagonal; symmetric files store the lower triangle"),
                    ));
                }
                if !v.is_finite() {
                    return Err(parse_err(path, lineno, "non-finite value"));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    if entries.len() != nnz {
        return Err(parse_err(
            path,
            0,
            format!("header declares {nnz} entries, found {}", entries.len()),
        ));
    }
    SparseSymMatrix::from_triplets(n, entries)
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &SparseSymMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market_to(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_to<W: Write>(w: &mut W, a: &SparseSymMatrix) -> Result<()> {
    let lower: Vec<_> = a.lower_triangle().collect();
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|e| parse_err(path, idx + 1, format!("bad value '{t}': {e}")))?;
        if !v.is_finite() {
            return Err(parse_err(path, idx + 1, "non-finite value"));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(w, "{x:.16e}")?;
    }
    w.flush()?;
    Ok(())
}
