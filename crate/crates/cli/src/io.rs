//! JSON and file plumbing: sorted keys, shortest round-trip floats, atomic
//! writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use spirallax::{Coords, LiftedSpiral, Seed};

use crate::CliError;

/// Pretty JSON with keys sorted at every level and a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let value = serde_json::to_value(v).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Validation(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Write to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(path: Option<&Path>, body: &str) -> Result<(), CliError> {
    let Some(path) = path else {
        print!("{body}");
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e| CliError::Io(path.to_path_buf(), e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(body.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Any of the three structured inputs.
pub enum Input {
    Seed(Seed),
    Lifted(LiftedSpiral),
    Coords(Coords),
}

impl Input {
    pub fn kind(&self) -> &'static str {
        match self {
            Input::Seed(_) => "seed",
            Input::Lifted(_) => "lifted spiral",
            Input::Coords(_) => "coords",
        }
    }
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, path: &Path) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Read a JSON file and classify it by its keys.
pub fn read_input(path: &Path) -> Result<Input, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let n = v.get("n").and_then(Value::as_u64);
    if let Some(n) = n {
        check_n(n as usize)?;
    }
    let has = |k: &str| v.get(k).is_some();
    if has("vectors") {
        Ok(Input::Lifted(parse(v, path)?))
    } else if has("points") {
        Ok(Input::Seed(parse(v, path)?))
    } else if has("a") && has("b") {
        Ok(Input::Coords(parse(v, path)?))
    } else {
        Err(CliError::Validation(format!(
            "{}: not a seed, lifted spiral or coords document",
            path.display()
        )))
    }
}

/// N ≥ 5 and N ≠ 3s+1.
pub fn check_n(n: usize) -> Result<(), CliError> {
    if n < 5 || n % 3 == 1 {
        Err(CliError::Validation(format!(
            "N = {n} is not supported: need N >= 5 and N != 3s+1 (no unique canonical lift)"
        )))
    } else {
        Ok(())
    }
}
