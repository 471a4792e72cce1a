use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::problems::{EdmcProblem, SparseSymmetric};
use crate::solver::RunTrace;

pub const TRACE_HEADER: &str = "iter,objective,step_size,elapsed_s,residual,halvings";

fn parse_err<T>(path: &Path, line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Numbered, non-blank lines of a text file.
fn lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push((k + 1, line));
        }
    }
    Ok(out)
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    match tok.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => parse_err(path, line, format!("non-finite value '{}'", tok.trim())),
        Err(_) => parse_err(path, line, format!("not a number: '{}'", tok.trim())),
    }
}

fn parse_usize(path: &Path, line: usize, tok: &str) -> Result<usize> {
    tok.trim()
        .parse::<usize>()
        .or_else(|_| parse_err(path, line, format!("not a nonnegative integer: '{}'", tok.trim())))
}

/// Reads a square coordinate Matrix Market file (`real`, `integer` or
/// `pattern`; `general` or `symmetric`). General files must be symmetric.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseSymmetric> {
    let path = path.as_ref();
    let all = lines(path)?;
    let Some((hline, header)) = all.first() else {
        return parse_err(path, 1, "empty file");
    };
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return parse_err(path, *hline, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'");
    }
    let pattern = match h[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return parse_err(path, *hline, format!("unsupported field '{other}'")),
    };
    let symmetric = match h[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return parse_err(path, *hline, format!("unsupported symmetry '{other}'")),
    };
    let mut body = all[1..].iter().filter(|(_, l)| !l.trim_start().starts_with('%'));
    let Some((sline, size)) = body.next() else {
        return parse_err(path, *hline, "missing size line");
    };
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 3 {
        return parse_err(path, *sline, "size line must be 'rows cols nnz'");
    }
    let (rows, cols) = (parse_usize(path, *sline, dims[0])?, parse_usize(path, *sline, dims[1])?);
    let nnz = parse_usize(path, *sline, dims[2])?;
    if rows != cols {
        return parse_err(path, *sline, format!("matrix must be square, got {rows}x{cols}"));
    }
    let mut entries = Vec::with_capacity(nnz);
    for (ln, l) in body {
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != if pattern { 2 } else { 3 } {
            return parse_err(path, *ln, "wrong number of fields");
        }
        let i = parse_usize(path, *ln, tok[0])?;
        let j = parse_usize(path, *ln, tok[1])?;
        if i == 0 || j == 0 || i > rows || j > rows {
            return parse_err(path, *ln, format!("index ({i}, {j}) out of range 1..={rows}"));
        }
        let v = if pattern { 1.0 } else { parse_f64(path, *ln, tok[2])? };
        if v < 0.0 {
            return parse_err(path, *ln, format!("negative entry {v}"));
        }
        entries.push((i - 1, j - 1, v));
    }
    if entries.len() != nnz {
        return parse_err(path, *sline, format!("declared {nnz} entries, found {}", entries.len()));
    }
    if !symmetric {
        let mut seen = std::collections::HashMap::new();
        for &(i, j, v) in &entries {
            seen.insert((i, j), v);
        }
        for &(i, j, v) in &entries {
            if seen.get(&(j, i)) != Some(&v) {
                return parse_err(path, *sline, format!("general matrix is not symmetric at ({}, {})", i + 1, j + 1));
            }
        }
    }
    SparseSymmetric::from_triplets(rows, entries).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: *sline,
        msg: e.to_string(),
    })
}

/// Writes the lower triangle in `symmetric` coordinate form.
pub fn write_matrix_market(m: &SparseSymmetric, path: impl AsRef<Path>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    let lower: Vec<_> = m.lower_triangle().collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", m.n(), m.n(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(trace: &RunTrace, mut w: impl Write) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.records {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.iter, r.objective, r.step_size, r.elapsed_s, r.residual, r.halvings
        )?;
    }
    Ok(())
}

pub fn write_trace_csv(trace: &RunTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_trace(trace, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Comma-separated rows without a header.
pub fn write_dense_csv(x: ArrayView2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    for row in x.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads comma-separated rows of equal length. A first line that does not
/// parse as numbers is taken as a header and skipped.
pub fn read_dense_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let mut all = lines(path)?;
    if let Some((_, first)) = all.first() {
        if first.split(',').any(|t| t.trim().parse::<f64>().is_err()) {
            all.remove(0);
        }
    }
    let Some((_, first)) = all.first() else {
        return parse_err(path, 1, "no data rows");
    };
    let cols = first.split(',').count();
    let mut data = Vec::with_capacity(all.len() * cols);
    for (ln, l) in &all {
        let before = data.len();
        for tok in l.split(',') {
            data.push(parse_f64(path, *ln, tok)?);
        }
        if data.len() - before != cols {
            return parse_err(path, *ln, format!("expected {cols} fields, found {}", data.len() - before));
        }
    }
    Ok(Array2::from_shape_vec((all.len(), cols), data).expect("row lengths checked"))
}

/// Observed squared distances as `i,j,d` rows (0-based) under a header line.
pub fn write_distance_csv(p: &EdmcProblem, path: impl AsRef<Path>) -> Result<()> {
    let mut w = create(path.as_ref())?;
    writeln!(w, "i,j,d")?;
    for (&(i, j), d) in p.pairs().iter().zip(p.distances()) {
        writeln!(w, "{i},{j},{d:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_distance_csv`]. `n` defaults to one past the largest
/// index seen.
pub fn read_distance_csv(path: impl AsRef<Path>, n: Option<usize>, rank: usize) -> Result<EdmcProblem> {
    let path = path.as_ref();
    let mut all = lines(path)?;
    if all.first().is_some_and(|(_, l)| l.trim().starts_with(|c: char| c.is_alphabetic())) {
        all.remove(0);
    }
    let mut obs = Vec::with_capacity(all.len());
    let mut max_index = 0;
    for (ln, l) in &all {
        let tok: Vec<&str> = l.split(',').collect();
        if tok.len() != 3 {
            return parse_err(path, *ln, "expected 'i,j,d'");
        }
        let i = parse_usize(path, *ln, tok[0])?;
        let j = parse_usize(path, *ln, tok[1])?;
        let d = parse_f64(path, *ln, tok[2])?;
        max_index = max_index.max(i).max(j);
        obs.push((i, j, d));
    }
    if obs.is_empty() {
        return parse_err(path, 1, "no observations");
    }
    EdmcProblem::new(n.unwrap_or(max_index + 1), rank, obs)
}
