//! Matrix file formats.
//!
//! * Matrix Market, `coordinate real general|symmetric` only; read as sparse.
//! * CSV: dense rows, comma separated, no header.
//! * Binary: `b"ATSP"`, `u32` version 1, `u64` rows and columns, then the
//!   entries row-major; everything little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use atsp_core::matcore::{DenseMatrix, MatrixData, SparseMatrix};

use crate::error::{CliError, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"ATSP";
pub const BINARY_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[value(name = "mm")]
    MatrixMarket,
    Csv,
    #[value(name = "bin")]
    Binary,
}

impl Format {
    /// `.mtx`/`.mm` and `.csv` by extension, binary otherwise.
    pub fn from_path(path: &Path) -> Format {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("mtx" | "mm") => Format::MatrixMarket,
            Some("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }

    pub fn resolve(explicit: Option<Format>, path: &Path) -> Format {
        explicit.unwrap_or_else(|| Format::from_path(path))
    }
}

pub fn read_matrix(path: &Path, format: Format) -> Result<MatrixData> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    match format {
        Format::Binary => decode_binary(&bytes, path).map(MatrixData::Dense),
        Format::Csv => decode_csv(&bytes, path).map(MatrixData::Dense),
        Format::MatrixMarket => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| CliError::parse(path, format!("byte {}", e.valid_up_to()), "invalid UTF-8"))?;
            decode_matrix_market(text, path).map(MatrixData::Sparse)
        }
    }
}

pub fn write_matrix(path: &Path, m: &MatrixData, format: Format) -> Result<()> {
    let bytes = match format {
        Format::Binary => encode_binary(&m.to_dense()),
        Format::Csv => encode_csv(&m.to_dense())?,
        Format::MatrixMarket => encode_matrix_market(m).into_bytes(),
    };
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| CliError::io(path, e))
}

pub fn encode_binary(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8], path: &Path) -> Result<DenseMatrix> {
    let err = |at: usize, msg: &str| CliError::parse(path, format!("byte {at}"), msg);
    if bytes.len() < HEADER_LEN {
        return Err(err(bytes.len(), "truncated header"));
    }
    if &bytes[0..4] != BINARY_MAGIC {
        return Err(err(0, "bad magic, expected \"ATSP\""));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(err(4, &format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| err(8, "dimensions overflow"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count {
        return Err(err(
            HEADER_LEN + body.len().min(count),
            &format!("expected {count} payload bytes, found {}", body.len()),
        ));
    }
    let mut data = Vec::with_capacity(count / 8);
    for (k, chunk) in body.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(err(HEADER_LEN + 8 * k, "non-finite value"));
        }
        data.push(v);
    }
    DenseMatrix::from_row_major(rows as usize, cols as usize, data).map_err(|e| err(HEADER_LEN, &e.to_string()))
}

pub fn encode_csv(m: &DenseMatrix) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:e}")))
            .map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))
}

pub fn decode_csv(bytes: &[u8], path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let at = e
                .position()
                .map(|p| format!("line {}", p.line()))
                .unwrap_or_else(|| "unknown position".into());
            CliError::parse(path, at, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record
            .iter()
            .enumerate()
            .map(|(k, field)| {
                let v: f64 = field.trim().parse().map_err(|_| {
                    CliError::parse(
                        path,
                        format!("line {line}, field {}", k + 1),
                        format!("not a number: {field:?}"),
                    )
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CliError::parse(
                        path,
                        format!("line {line}, field {}", k + 1),
                        "non-finite value",
                    ))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, "line 1", "no rows"));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| CliError::parse(path, "line 1", e.to_string()))
}

pub fn encode_matrix_market(m: &MatrixData) -> String {
    let mut entries = Vec::new();
    for i in 0..m.rows() {
        m.for_each_in_row(i, |j, v| {
            if v != 0.0 {
                entries.push((i, j, v));
            }
        });
    }
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", m.rows(), m.cols(), entries.len()));
    for (i, j, v) in entries {
        out.push_str(&format!("{} {} {v:e}\n", i + 1, j + 1));
    }
    out
}

pub fn decode_matrix_market(text: &str, path: &Path) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::parse(path, "line 1", "empty file"))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let symmetric = match fields.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["%%matrixmarket", "matrix", "coordinate", "real", "general"] => false,
        ["%%matrixmarket", "matrix", "coordinate", "real", "symmetric"] => true,
        _ => {
            return Err(CliError::parse(
                path,
                "line 1",
                "expected \"%%MatrixMarket matrix coordinate real general|symmetric\"",
            ))
        }
    };
    let mut body = lines.filter(|(_, l)| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let (size_line, size) = body
        .next()
        .ok_or_else(|| CliError::parse(path, "end of file", "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::parse(path, format!("line {size_line}"), "size line must hold three integers"))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(CliError::parse(
            path,
            format!("line {size_line}"),
            "size line must hold three integers",
        ));
    };
    if symmetric && rows != cols {
        return Err(CliError::parse(
            path,
            format!("line {size_line}"),
            "symmetric matrix must be square",
        ));
    }

    let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    let mut seen = 0;
    for (line, l) in body {
        let at = || format!("line {line}");
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(CliError::parse(path, at(), "entry must be \"row col value\""));
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|_| CliError::parse(path, at(), "bad row index"))?;
        let j: usize = toks[1]
            .parse()
            .map_err(|_| CliError::parse(path, at(), "bad column index"))?;
        let v: f64 = toks[2].parse().map_err(|_| CliError::parse(path, at(), "bad value"))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(CliError::parse(
                path,
                at(),
                format!("index ({i}, {j}) outside {rows}x{cols}"),
            ));
        }
        if !v.is_finite() {
            return Err(CliError::parse(path, at(), "non-finite value"));
        }
        if symmetric && j > i {
            return Err(CliError::parse(
                path,
                at(),
                "symmetric storage must list the lower triangle",
            ));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(CliError::parse(
            path,
            "end of file",
            format!("expected {nnz} entries, found {seen}"),
        ));
    }
    SparseMatrix::from_triplets(rows, cols, &triplets).map_err(|e| CliError::parse(path, "entries", e.to_string()))
}
