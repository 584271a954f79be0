//! JSON files.

use crate::CliError;
use rcsched::model::{Instance, Schedule};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::Path;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_instance(path: &Path) -> Result<Instance, CliError> {
    read_json(path)
}

pub fn read_schedule(path: &Path) -> Result<Schedule, CliError> {
    read_json(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Every `*.json` file of `dir`, sorted by file name, named by its stem.
pub fn read_dir_instances(dir: &Path) -> Result<Vec<(String, Instance)>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e?.path();
        if p.extension().is_some_and(|x| x == "json") {
            paths.push(p);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            read_instance(&p).map(|i| (name, i))
        })
        .collect()
}
