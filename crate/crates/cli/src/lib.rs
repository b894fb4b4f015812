//! Pipeline commands behind the `vacuumq` binary.
//!
//! Every command returns its outputs in memory; [`write_outputs`] then writes them in
//! one pass, so a failing command leaves no files behind.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{run, Command, Outcome, OutputFile};
pub use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] vacuumq::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 4,
            CliError::Core(vacuumq::Error::Io(_)) => 4,
            CliError::Core(_) => 2,
        }
    }
}

/// Exit status for a successful run that may not have converged.
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Writes every file via a temporary sibling and a rename; on failure removes what it wrote.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    let result = (|| {
        for f in files {
            let target = dir.join(&f.name);
            let tmp = dir.join(format!(".{}.partial", f.name));
            std::fs::write(&tmp, &f.contents).map_err(|e| io(&tmp, e))?;
            staged.push((tmp, target));
        }
        for (tmp, target) in &staged {
            std::fs::rename(tmp, target).map_err(|e| io(target, e))?;
        }
        Ok(staged.iter().map(|(_, t)| t.clone()).collect())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = std::fs::remove_file(tmp);
        }
    }
    result
}
