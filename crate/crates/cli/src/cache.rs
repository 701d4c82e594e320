//! Binary cache of sampled dense operators.
//!
//! Layout, little-endian: the 8-byte magic `SPARCOP\0`, `u32` version,
//! `u8` operator kind, `u8` flags (bit 0: eigenvectors present), two
//! reserved bytes, then `u64` L, B, M and seed. The payload is packed `f64`:
//! the row-major `M × N` matrix, the `M` eigenvalues of `AAᵀ`, and the
//! row-major `M × M` eigenvectors when flagged.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sparc_core::operators::{DenseOperator, DenseParts};
use sparc_core::{EnsembleSpec, OperatorKind};

use crate::error::CliError;

const MAGIC: &[u8; 8] = b"SPARCOP\0";
const VERSION: u32 = 1;
const HAS_U: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub kind: OperatorKind,
    pub sections: u64,
    pub section_size: u64,
    pub rows: u64,
    pub seed: u64,
}

impl Header {
    pub fn of(spec: &EnsembleSpec) -> Self {
        Self {
            kind: spec.kind,
            sections: spec.params.sections as u64,
            section_size: spec.params.section_size as u64,
            rows: spec.params.rows() as u64,
            seed: spec.seed,
        }
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}-L{}-B{}-M{}-s{}.sparcop",
            self.kind.name(),
            self.sections,
            self.section_size,
            self.rows,
            self.seed
        )
    }
}

fn cache_error(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::Cache {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn save(path: &Path, header: &Header, op: &DenseOperator) -> Result<(), CliError> {
    let parts = op.to_parts();
    let file = fs::File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    let mut head = Vec::with_capacity(48);
    head.extend_from_slice(MAGIC);
    head.extend_from_slice(&VERSION.to_le_bytes());
    head.push(header.kind.code());
    head.push(if parts.u.is_some() { HAS_U } else { 0 });
    head.extend_from_slice(&[0, 0]);
    for v in [header.sections, header.section_size, header.rows, header.seed] {
        head.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&head).map_err(CliError::io(path))?;
    let payload = parts.a.iter().chain(&parts.d).chain(parts.u.iter().flatten());
    for v in payload {
        w.write_all(&v.to_le_bytes()).map_err(CliError::io(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn load(path: &Path, expected: &Header) -> Result<DenseOperator, CliError> {
    let file = fs::File::open(path).map_err(CliError::io(path))?;
    let mut r = BufReader::new(file);
    let mut head = [0u8; 48];
    r.read_exact(&mut head).map_err(|_| cache_error(path, "truncated header"))?;
    if &head[..8] != MAGIC {
        return Err(cache_error(path, "bad magic"));
    }
    let version = u32::from_le_bytes(head[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(cache_error(path, format!("unsupported version {version}")));
    }
    let kind = OperatorKind::from_code(head[12]).ok_or_else(|| cache_error(path, "unknown operator kind"))?;
    let has_u = head[13] & HAS_U != 0;
    let word = |k: usize| u64::from_le_bytes(head[16 + 8 * k..24 + 8 * k].try_into().unwrap());
    let found = Header {
        kind,
        sections: word(0),
        section_size: word(1),
        rows: word(2),
        seed: word(3),
    };
    if found != *expected {
        return Err(cache_error(path, format!("header {found:?} does not match {expected:?}")));
    }
    let (m, n) = (found.rows as usize, (found.sections * found.section_size) as usize);
    let mut read_floats = |count: usize| -> Result<Vec<f64>, CliError> {
        let mut bytes = vec![0u8; 8 * count];
        r.read_exact(&mut bytes).map_err(|_| cache_error(path, "truncated payload"))?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let a = read_floats(m * n)?;
    let d = read_floats(m)?;
    let u = if has_u { Some(read_floats(m * m)?) } else { None };
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(CliError::io(path))? != 0 {
        return Err(cache_error(path, "trailing bytes"));
    }
    Ok(DenseOperator::from_parts(DenseParts {
        kind,
        section_size: found.section_size as usize,
        rows: m,
        cols: n,
        a,
        d,
        u,
    })?)
}

/// Samples a dense operator, or reads it from `dir` when cached.
pub fn dense_cached(spec: &EnsembleSpec, dir: &Path) -> Result<(DenseOperator, PathBuf, bool), CliError> {
    let header = Header::of(spec);
    let path = dir.join(header.file_name());
    if path.exists() {
        return Ok((load(&path, &header)?, path, true));
    }
    let op = match spec.kind {
        OperatorKind::Gaussian => DenseOperator::sample_gaussian(spec)?,
        OperatorKind::RowOrthogonal => DenseOperator::sample_row_orthogonal(spec)?,
        OperatorKind::DiscreteTri => DenseOperator::sample_discrete(spec)?,
        OperatorKind::DctProxy => return Err(CliError::Config("the DCT proxy is not cached".into())),
    };
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    save(&path, &header, &op)?;
    Ok((op, path, false))
}
