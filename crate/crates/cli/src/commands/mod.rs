pub mod dataset;
pub mod evaluate;
pub mod export;
pub mod fixtures;
pub mod ingest;
pub mod reconstruct;
pub mod tools;

use std::path::Path;

use crate::error::{CliError, CliResult};

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn parse_states(text: Option<&str>) -> CliResult<Vec<f64>> {
    match text {
        None => Ok(Vec::new()),
        Some(t) if t.trim().is_empty() => Ok(Vec::new()),
        Some(t) => t
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Input(format!("[InvalidValue] bad joint state `{s}`")))
            })
            .collect(),
    }
}
