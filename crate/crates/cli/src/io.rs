//! Dataset files and atomic output writing.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};
use ssam_core::data::{parse_ucr, LabeledDataset};

use crate::error::{CliError, Result};

/// Reads a UCR-style file: one series per line, label first, comma, tab or
/// whitespace separated.
pub fn load_ucr(path: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_ucr(&text, &name).map_err(|e| match e {
        ssam_core::Error::Parse { line, msg } => {
            CliError::format(path, format!("line {line}: {msg}"))
        }
        other => CliError::Core(other),
    })
}

/// Comma-separated, labels as stored (0-based), values in shortest
/// round-trip notation.
pub fn ucr_text(ds: &LabeledDataset) -> String {
    let mut out = String::with_capacity(ds.len() * ds.series_len() * 12);
    for (row, label) in ds.rows().zip(ds.labels()) {
        write!(out, "{label}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_ucr(path: &Path, ds: &LabeledDataset) -> Result<()> {
    write_atomic(path, ucr_text(ds).as_bytes())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io(path))?;
    tmp.write_all(bytes).map_err(CliError::io(path))?;
    tmp.as_file().sync_all().map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::io(path)(e.error))?;
    Ok(())
}

/// `sha256:<hex>` of the file contents.
pub fn fingerprint(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}
