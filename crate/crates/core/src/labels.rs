//! Two-column label files: `commit_id,label` with `label ∈ {0, 1}`.
//!
//! Lines starting with `#` are comments. A header row is optional.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Labels = BTreeMap<String, bool>;

pub fn read_labels<R: Read>(reader: R) -> Result<Labels, LabelFileError> {
    let mut out = Labels::new();
    let mut first_row = true;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, label) = trimmed.split_once(',').ok_or_else(|| LabelFileError::Parse {
            line: i + 1,
            message: "expected two columns".to_string(),
        })?;
        let (id, label) = (id.trim(), label.trim());
        let header_allowed = std::mem::replace(&mut first_row, false);
        let value = match label.to_ascii_lowercase().as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            _ if header_allowed => continue, // header row
            _ => {
                return Err(LabelFileError::Parse {
                    line: i + 1,
                    message: format!("label must be 0 or 1, got {label:?}"),
                })
            }
        };
        out.insert(id.to_string(), value);
    }
    Ok(out)
}

pub fn write_labels<W: Write>(
    mut writer: W,
    labels: impl IntoIterator<Item = (impl AsRef<str>, bool)>,
    comment: Option<&str>,
) -> std::io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(writer, "# {line}")?;
        }
    }
    writeln!(writer, "commit_id,label")?;
    for (id, label) in labels {
        writeln!(writer, "{},{}", id.as_ref(), u8::from(label))?;
    }
    Ok(())
}
