//! Matrix-market coordinate import/export for systems and Gramians.
//!
//! A system is stored as a directory of plain-text files `E.mtx`,
//! `A0.mtx` .. `AP.mtx`, `B.mtx`, `C.mtx`, so externally assembled systems
//! can be benchmarked and computed matrices cross-checked with other tools.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::system::AffineLTISystem;

/// Serializes a dense matrix in matrix-market coordinate format
/// (1-based indices, only structural nonzeros, column-major order).
pub fn matrix_to_string(m: &DMatrix<f64>) -> String {
    let mut entries = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                entries.push((i + 1, j + 1, v));
            }
        }
    }
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", m.nrows(), m.ncols(), entries.len()));
    for (i, j, v) in entries {
        out.push_str(&format!("{i} {j} {v:e}\n"));
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(matrix_to_string(m).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

fn parse_matrix(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let fail = |line: usize, reason: &str| Error::MatrixFormat {
        path: path.to_path_buf(),
        line,
        reason: reason.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (lno, header) = lines.next().ok_or_else(|| fail(0, "missing size header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| fail(lno + 1, "size header must be `rows cols nnz`"))?;
    if dims.len() != 3 {
        return Err(fail(lno + 1, "size header must be `rows cols nnz`"));
    }
    let (rows, cols, nnz) = (dims[0], dims[1], dims[2]);
    let mut m = DMatrix::zeros(rows, cols);
    let mut seen = 0usize;
    for (lno, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(fail(lno + 1, "entry must be `i j value`"));
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|_| fail(lno + 1, "bad row index"))?;
        let j: usize = toks[1]
            .parse()
            .map_err(|_| fail(lno + 1, "bad column index"))?;
        let v: f64 = toks[2].parse().map_err(|_| fail(lno + 1, "bad value"))?;
        if i < 1 || i > rows || j < 1 || j > cols {
            return Err(fail(lno + 1, "index out of bounds"));
        }
        m[(i - 1, j - 1)] += v;
        seen += 1;
    }
    if seen != nnz {
        return Err(fail(0, "entry count does not match header"));
    }
    Ok(m)
}

/// Writes `E.mtx`, `A0.mtx`..`AP.mtx`, `B.mtx`, `C.mtx` into `dir`.
pub fn export_system(sys: &AffineLTISystem, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, m: &DMatrix<f64>| -> Result<()> {
        let path = dir.join(name);
        write_matrix(&path, m)?;
        written.push(path);
        Ok(())
    };
    put("E.mtx".into(), sys.mass())?;
    for (p, a) in sys.a_terms().iter().enumerate() {
        put(format!("A{p}.mtx"), a)?;
    }
    put("B.mtx".into(), sys.input_map())?;
    put("C.mtx".into(), sys.output_map())?;
    Ok(written)
}

/// Reads a system from a directory written by [`export_system`]. The
/// parameter dimension is discovered from the contiguous `A0..AP` files.
pub fn import_system(dir: &Path) -> Result<AffineLTISystem> {
    let e = read_matrix(&dir.join("E.mtx"))?;
    let mut a_terms = Vec::new();
    loop {
        let path = dir.join(format!("A{}.mtx", a_terms.len()));
        if !path.exists() {
            break;
        }
        a_terms.push(read_matrix(&path)?);
    }
    if a_terms.is_empty() {
        return Err(Error::Config {
            reason: format!("{}: no A0.mtx found", dir.display()),
        });
    }
    let b = read_matrix(&dir.join("B.mtx"))?;
    let c = read_matrix(&dir.join("C.mtx"))?;
    AffineLTISystem::new(e, a_terms, b, c)
}
