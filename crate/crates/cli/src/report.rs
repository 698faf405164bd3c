//! Report files, written atomically through a sibling temporary file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, Result};

/// Common header of every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    /// The property the report certifies.
    pub anchor: &'a str,
    pub entry: Option<&'a str>,
    pub seed: u64,
    pub pass: bool,
    pub report: T,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes `contents` to `dir/name` by renaming a finished temporary file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io(&tmp))?;
    fs::rename(&tmp, &path).map_err(io(&path))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

pub fn write_csv(dir: &Path, name: &str, csv: &str) -> Result<PathBuf> {
    write_atomic(dir, name, csv.as_bytes())
}

/// Sample table `slot names..., value` at the given points.
pub fn samples_csv(header: &[String], rows: &[(Vec<f64>, f64)]) -> String {
    let mut s = header.join(",");
    s.push_str(",value\n");
    for (p, v) in rows {
        let cols: Vec<String> = p.iter().map(|x| format!("{x:e}")).collect();
        s.push_str(&format!("{},{v:e}\n", cols.join(",")));
    }
    s
}
