//! JSON Lines helpers shared by the label, detection, trial and episode files.

use std::io::{BufRead, Write};

use serde::{de::DeserializeOwned, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads one value per non-blank line. Line numbers in errors are 1-based.
pub fn read<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| JsonlError::Parse {
            line: idx + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Like [`read`] but also returns each value's 1-based line number.
pub fn read_numbered<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<(usize, T)>, JsonlError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| JsonlError::Parse {
            line: idx + 1,
            source,
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

pub fn write<'a, T: Serialize + 'a>(
    mut writer: impl Write,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), JsonlError> {
    for item in items {
        serde_json::to_writer(&mut writer, item).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
