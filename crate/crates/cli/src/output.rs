use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First line of every CSV file.
pub fn header(sha256: &str) -> String {
    format!("# squeezelab {VERSION} config_sha256={sha256} workers=1")
}

/// Metadata block embedded in every JSON document.
pub fn metadata(sha256: &str) -> Value {
    json!({ "squeezelab_version": VERSION, "config_sha256": sha256, "workers": 1 })
}

/// Shortest round-trip decimal, switching to exponent form for very large or
/// small magnitudes; `nan` for non-finite values.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        "nan".into()
    } else if x == 0.0 || (1e-4..1e6).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            }
            let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub struct Csv {
    out: Box<dyn Write>,
    columns: usize,
}

impl Csv {
    pub fn create(path: Option<&Path>, sha256: &str, columns: &[&str]) -> Result<Self, CliError> {
        let mut out = open(path)?;
        writeln!(out, "{}", header(sha256))?;
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self { out, columns: columns.len() })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        debug_assert_eq!(fields.len(), self.columns);
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_json(path: Option<&Path>, value: &Value) -> Result<(), CliError> {
    let mut out = open(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}
