//! On-disk corpus stores: a directory holding canonical `weak.csv` and/or
//! `strong.tsv` plus a `stats.json` sidecar.

use std::path::{Path, PathBuf};

use framelab::corpus::{parse_strong_tsv, parse_weak_csv, Corpus};

use crate::errors::{CliError, CliResult};

pub const WEAK_FILE: &str = "weak.csv";
pub const STRONG_FILE: &str = "strong.tsv";
pub const STATS_FILE: &str = "stats.json";

pub struct Store {
    pub dir: PathBuf,
    pub weak: Option<Corpus>,
    pub strong: Option<Corpus>,
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Load whichever corpus files exist in a store directory; at least one
/// must be present.
pub fn read_store(dir: &Path) -> CliResult<Store> {
    if !dir.is_dir() {
        return Err(CliError {
            code: crate::errors::EXIT_IO,
            message: format!("store {} is not a directory", dir.display()),
        });
    }
    let weak_path = dir.join(WEAK_FILE);
    let strong_path = dir.join(STRONG_FILE);
    let weak = if weak_path.exists() {
        Some(parse_weak_csv(&read_to_string(&weak_path)?).map_err(|e| CliError::in_file(&weak_path, e))?)
    } else {
        None
    };
    let strong = if strong_path.exists() {
        Some(
            parse_strong_tsv(&read_to_string(&strong_path)?)
                .map_err(|e| CliError::in_file(&strong_path, e))?,
        )
    } else {
        None
    };
    if weak.is_none() && strong.is_none() {
        return Err(CliError {
            code: crate::errors::EXIT_IO,
            message: format!(
                "store {} contains neither {WEAK_FILE} nor {STRONG_FILE}",
                dir.display()
            ),
        });
    }
    Ok(Store {
        dir: dir.to_path_buf(),
        weak,
        strong,
    })
}

/// Seconds since the Unix epoch, or `None` when timestamps are suppressed.
pub fn timestamp(no_timestamp: bool) -> Option<u64> {
    if no_timestamp {
        return None;
    }
    Some(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    )
}
