use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::io::write_atomic;

/// Record of one run. Written last, once every output it lists exists.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub dataset: String,
    pub dataset_fingerprint: String,
    pub started_at: String,
    pub finished_at: String,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or(Path::new("."));
        if let Some(missing) = self.outputs.iter().find(|f| !dir.join(f).is_file()) {
            return Err(CliError::format(
                path,
                format!("listed output {missing} does not exist"),
            ));
        }
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}
