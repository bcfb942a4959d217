//! Binary embedding files and tab-separated label files.
//!
//! Embedding layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "NUDG"
//! 4       4     version (u32) = 1
//! 8       1     dtype (1 = f32, 2 = f64)
//! 9       3     zero padding
//! 12      8     n (u64)
//! 20      8     d (u64)
//! 28      ...   n·d values, row-major
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{NudgeError, Result};
use crate::labels::{Label, LabelSet};
use crate::matrix::EmbeddingMatrix;

pub const MAGIC: [u8; 4] = *b"NUDG";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 1,
            Dtype::F64 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Dtype::F32),
            2 => Some(Dtype::F64),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> NudgeError {
    NudgeError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NudgeError + '_ {
    move |source| NudgeError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serializes a matrix. Values are narrowed to f32 for [`Dtype::F32`]; a
/// value that overflows f32 is an error rather than an infinity on disk.
pub fn encode_embeddings(m: &EmbeddingMatrix, dtype: Dtype) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * dtype.size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dtype.code());
    out.extend_from_slice(&[0; 3]);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    for (k, &v) in m.as_slice().iter().enumerate() {
        match dtype {
            Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
            Dtype::F32 => {
                let x = v as f32;
                if !x.is_finite() {
                    return Err(NudgeError::NonFinite {
                        row: k / m.dim(),
                        col: k % m.dim(),
                    });
                }
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Parses an embedding file image. `path` is only used in diagnostics.
pub fn decode_embeddings(bytes: &[u8], path: &Path) -> Result<(EmbeddingMatrix, Dtype)> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(path, format!("truncated header ({} bytes)", bytes.len())));
    }
    if bytes[0..4] != MAGIC {
        return Err(format_err(path, "bad magic (expected \"NUDG\")"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let dtype = Dtype::from_code(bytes[8])
        .ok_or_else(|| format_err(path, format!("unknown dtype code {}", bytes[8])))?;
    if bytes[9..12] != [0; 3] {
        return Err(format_err(path, "nonzero header padding"));
    }
    let n = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let d = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(dtype.size() as u64))
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| format_err(path, format!("shape {n}x{d} too large")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < expected {
        return Err(format_err(
            path,
            format!("truncated body: {} bytes, expected {expected}", body.len()),
        ));
    }
    if body.len() > expected {
        return Err(format_err(
            path,
            format!("{} trailing bytes after body", body.len() - expected),
        ));
    }
    let values: Vec<f64> = match dtype {
        Dtype::F32 => body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    let m = EmbeddingMatrix::new(n as usize, d as usize, values).map_err(|e| format_err(path, e.to_string()))?;
    Ok((m, dtype))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<(EmbeddingMatrix, Dtype)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_embeddings(&bytes, path)
}

pub fn write_embeddings(path: impl AsRef<Path>, m: &EmbeddingMatrix, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_embeddings(m, dtype)?;
    fs::write(path, bytes).map_err(io_err(path))
}

/// Parses label lines `query<TAB>record[<TAB>relevance]`. Blank lines and
/// lines starting with `#` are skipped. Coverage (every query labeled) is
/// checked later against the query matrix, not here.
pub fn parse_labels(text: &str, path: &Path) -> Result<LabelSet> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| format_err(path, format!("line {}: {what}", lineno + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(bad("expected query<TAB>record[<TAB>relevance]"));
        }
        let query: usize = fields[0].trim().parse().map_err(|_| bad("bad query index"))?;
        let record: usize = fields[1].trim().parse().map_err(|_| bad("bad record index"))?;
        let relevance = match fields.get(2) {
            Some(r) => r.trim().parse::<f64>().map_err(|_| bad("bad relevance"))?,
            None => 1.0,
        };
        entries.push(Label::with_relevance(query, record, relevance));
    }
    LabelSet::new(entries).map_err(|e| format_err(path, e.to_string()))
}

pub fn format_labels(labels: &LabelSet) -> String {
    let mut out = String::new();
    for l in labels.entries() {
        if l.relevance == 1.0 {
            writeln!(out, "{}\t{}", l.query, l.record).unwrap();
        } else {
            writeln!(out, "{}\t{}\t{}", l.query, l.record, l.relevance).unwrap();
        }
    }
    out
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_labels(&text, path)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelSet) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_labels(labels)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn one_by_one_f32_layout() {
        let m = EmbeddingMatrix::from_rows(&[vec![0.5]]).unwrap();
        let bytes = encode_embeddings(&m, Dtype::F32).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 4);
        assert_eq!(&bytes[..4], b"NUDG");
        assert_eq!(bytes[8], 1);
        assert_eq!(&bytes[28..], &0.5f32.to_le_bytes());
        let (back, dtype) = decode_embeddings(&bytes, p()).unwrap();
        assert_eq!((back, dtype), (m, Dtype::F32));
    }

    #[test]
    fn rejects_malformed() {
        let m = EmbeddingMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let good = encode_embeddings(&m, Dtype::F64).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode_embeddings(&bad, p()).unwrap_err().to_string().contains("magic"));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(decode_embeddings(&bad, p()).unwrap_err().to_string().contains("version"));
        let mut bad = good.clone();
        bad[8] = 3;
        assert!(decode_embeddings(&bad, p()).is_err());
        assert!(decode_embeddings(&good[..good.len() - 1], p()).unwrap_err().to_string().contains("truncated"));
        assert!(decode_embeddings(&good[..10], p()).is_err());
        let mut bad = good.clone();
        bad.push(0);
        assert!(decode_embeddings(&bad, p()).unwrap_err().to_string().contains("trailing"));
        let mut bad = good.clone();
        bad[28..36].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_embeddings(&bad, p()).unwrap_err().to_string().contains("non-finite"));
        let mut bad = good;
        bad[28..36].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(decode_embeddings(&bad, p()).is_err());
    }

    #[test]
    fn f32_overflow_is_rejected_on_write() {
        let m = EmbeddingMatrix::from_rows(&[vec![1e300]]).unwrap();
        assert!(encode_embeddings(&m, Dtype::F32).is_err());
    }

    #[test]
    fn labels_parse_and_format() {
        let text = "# header comment\n0\t3\n1\t2\t2.5\n\n2\t0\t1\n";
        let set = parse_labels(text, p()).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.entries()[1].relevance, 2.5);
        assert_eq!(format_labels(&set), "0\t3\n1\t2\t2.5\n2\t0\n");
        assert_eq!(parse_labels(&format_labels(&set), p()).unwrap(), set);
    }

    #[test]
    fn labels_reject_bad_lines() {
        assert!(parse_labels("0 1\n", p()).is_err());
        assert!(parse_labels("0\tx\n", p()).is_err());
        assert!(parse_labels("0\t1\t0\n", p()).is_err());
        assert!(parse_labels("0\t1\t-2\n", p()).is_err());
        assert!(parse_labels("-1\t1\n", p()).is_err());
        assert!(parse_labels("0\t1\t1\t1\n", p()).unwrap_err().to_string().contains("line 1"));
        assert!(parse_labels("", p()).unwrap().is_empty());
    }
}
