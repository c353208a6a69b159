//! File formats shared by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use otlab::measures::{DiscreteMeasure, MeasureFile, PlanFile, TransportPlan};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn read_measure(path: &Path) -> CliResult<DiscreteMeasure<f64>> {
    let file: MeasureFile<f64> = read_json(path)?;
    DiscreteMeasure::from_file(file).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn read_plan(path: &Path, mu: &DiscreteMeasure<f64>, nu: &DiscreteMeasure<f64>) -> CliResult<TransportPlan<f64>> {
    let file: PlanFile<f64> = read_json(path)?;
    TransportPlan::from_file(mu, nu, &file).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline. Struct fields keep declaration order
/// and floats use the shortest representation that round-trips.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &to_json(value))
}

/// `report.json` -> `report.meta.json`.
pub fn meta_path(primary: &Path) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    primary.with_file_name(format!("{stem}.meta.json"))
}

/// `field.json` -> `field.csv`.
pub fn csv_path(json: &Path) -> PathBuf {
    json.with_extension("csv")
}
