//! CSV and text outputs. Every file opens with `#` metadata lines naming the
//! tool version, the seed and the invocation, so a run can be repeated exactly.

use std::fs;
use std::path::Path;

use crate::error::{io, CliResult};

#[derive(Debug, Clone)]
pub struct Meta {
    pub seed: Option<u64>,
    pub invocation: String,
}

impl Meta {
    pub fn header(&self) -> String {
        let mut s = format!("# mlkfhe {}\n", env!("CARGO_PKG_VERSION"));
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        s.push_str(&format!("# invocation: {}\n", self.invocation));
        s
    }
}

/// Quotes an argument when the shell would split or expand it.
fn shell_word(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg.chars().all(|c| c.is_ascii_alphanumeric() || "-_./=:,+@%".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}

/// The command line with the program path normalised to `mlkfhe`.
pub fn invocation<I: IntoIterator<Item = String>>(args: I) -> String {
    let mut words = vec!["mlkfhe".to_string()];
    words.extend(args.into_iter().skip(1).map(|a| shell_word(&a)));
    words.join(" ")
}

/// Shortest round-trip representation; NaN becomes an empty field.
pub fn real(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn write_csv(path: &Path, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut body = csv::Writer::from_writer(Vec::new());
    body.write_record(header)?;
    for r in rows {
        body.write_record(r)?;
    }
    let bytes = body.into_inner().map_err(|e| crate::error::CliError::Failed(e.to_string()))?;
    let mut out = meta.header().into_bytes();
    out.extend(bytes);
    fs::write(path, out).map_err(|e| io(path, e))
}

pub fn write_text(path: &Path, meta: &Meta, text: &str) -> CliResult<()> {
    fs::write(path, format!("{}{text}", meta.header())).map_err(|e| io(path, e))
}
