//! Result files. Every write goes to a temporary sibling first and is then
//! renamed into place, so a failed run never leaves a partial file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentSpec;
use crate::error::{LabError, Result};
use crate::rate_lab::{RateResult, Verdicts};

/// Column order of the rate CSV.
pub const CSV_COLUMNS: [&str; 6] = ["n", "mean", "bias", "var", "mse", "stderr"];

/// One line per grid point; floats use the shortest round-trip form.
pub fn rate_csv(result: &RateResult) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for row in &result.rows {
        let s = &row.summary;
        writeln!(out, "{},{},{},{},{},{}", row.n, s.mean, s.bias, s.var, s.mse, s.stderr).expect("string write");
    }
    out
}

/// Everything a run produced, as written to the JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub spec: ExperimentSpec,
    pub result: RateResult,
    pub verdicts: Verdicts,
    pub pass: bool,
}

impl ExperimentRecord {
    pub fn new(spec: ExperimentSpec, result: RateResult, verdicts: Verdicts) -> Self {
        let pass = verdicts.pass();
        Self { spec, result, verdicts, pass }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("record serializes");
        text.push('\n');
        text
    }
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name =
        path.file_name().ok_or_else(|| LabError::InvalidSpec(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        LabError::io(path, e)
    })
}

/// Paths of the two result files for `name` in `dir`.
pub fn output_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.csv")), dir.join(format!("{name}.json")))
}

/// Writes `<name>.csv` and `<name>.json` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, record: &ExperimentRecord) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let (csv, json) = output_paths(dir, &record.spec.name);
    write_atomic(&csv, rate_csv(&record.result).as_bytes())?;
    write_atomic(&json, record.to_json().as_bytes())?;
    Ok((csv, json))
}
