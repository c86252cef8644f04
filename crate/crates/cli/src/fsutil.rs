//! Outputs are staged next to their destination and renamed into place, so
//! a failed run leaves nothing behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::{NamedTempFile, TempDir};

use crate::error::{CliError, CliResult};

fn parent_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn write_file_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = parent_of(path);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Staging directory for a dataset destined for `out`, which must not
/// exist or be an empty directory.
pub struct StagedDir {
    tmp: TempDir,
    out: PathBuf,
}

impl StagedDir {
    pub fn new(out: &Path) -> CliResult<Self> {
        if out.exists() {
            let empty = out.is_dir() && fs::read_dir(out).map_err(|e| CliError::io(out, e))?.next().is_none();
            if !empty {
                return Err(CliError::Usage(format!(
                    "{}: output already exists and is not an empty directory",
                    out.display()
                )));
            }
        }
        let dir = parent_of(out);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let tmp = tempfile::Builder::new()
            .prefix(".stormbench-")
            .tempdir_in(&dir)
            .map_err(|e| CliError::io(&dir, e))?;
        Ok(StagedDir {
            tmp,
            out: out.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.tmp.path()
    }

    pub fn commit(self) -> CliResult<()> {
        if self.out.is_dir() {
            fs::remove_dir(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        }
        let staged = self.tmp.keep();
        fs::rename(&staged, &self.out).map_err(|e| {
            let _ = fs::remove_dir_all(&staged);
            CliError::io(&self.out, e)
        })
    }
}
