//! Append-only JSONL session journal.
//!
//! The first line is a header; every later line is a label or an undo record.
//! Sequence numbers are shared by both record kinds and run 1, 2, 3, ... with
//! no gaps. Each append is fsynced before it returns. A final line without a
//! trailing newline is a torn write that was never acknowledged: it is ignored
//! on read and cut off when the journal is reopened for appending.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use emblem_core::EmblemParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal {path}: line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("journal {0} has no header")]
    MissingHeader(PathBuf),
    #[error("nothing to undo")]
    NothingToUndo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub session_id: String,
    pub corpus_id: String,
    pub params: EmblemParams,
    pub created_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Header(Header),
    Label { seq: u64, commit_id: String, label: bool, wall_ms: u64 },
    Undo { seq: u64, cancels: u64, wall_ms: u64 },
}

/// A label still in force after undo resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveLabel {
    pub seq: u64,
    pub commit_id: String,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JournalState {
    pub header: Header,
    /// Labels in the order they were entered.
    pub active: Vec<ActiveLabel>,
    pub last_seq: u64,
}

impl JournalState {
    fn apply(&mut self, record: Record) -> Result<(), String> {
        match record {
            Record::Header(_) => Err("second header".to_string()),
            Record::Label { seq, commit_id, label, .. } => {
                self.check_seq(seq)?;
                self.active.push(ActiveLabel { seq, commit_id, label });
                Ok(())
            }
            Record::Undo { seq, cancels, .. } => {
                self.check_seq(seq)?;
                match self.active.last() {
                    Some(last) if last.seq == cancels => {
                        self.active.pop();
                        Ok(())
                    }
                    _ => Err(format!("undo {seq} cancels {cancels}, which is not the latest active label")),
                }
            }
        }
    }

    fn check_seq(&mut self, seq: u64) -> Result<(), String> {
        if seq != self.last_seq + 1 {
            return Err(format!("expected seq {}, found {seq}", self.last_seq + 1));
        }
        self.last_seq = seq;
        Ok(())
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
    state: JournalState,
}

impl Journal {
    /// Creates a new journal holding only `header`.
    pub fn create(path: impl AsRef<Path>, header: Header) -> Result<Self, JournalError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().create_new(true).append(true).open(&path)?;
        write_record(&mut file, &Record::Header(header.clone()))?;
        if let Some(dir) = path.parent() {
            File::open(dir)?.sync_all()?;
        }
        let state = JournalState { header, active: Vec::new(), last_seq: 0 };
        Ok(Self { path, file, state })
    }

    /// Opens an existing journal for appending, cutting off a torn last line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, JournalError> {
        let path = path.as_ref().to_path_buf();
        let (state, complete_len) = read_state(&path)?;
        let mut file = OpenOptions::new().read(true).write(true).open(&path)?;
        if file.metadata()?.len() != complete_len {
            file.set_len(complete_len)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok(Self { path, file, state })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn state(&self) -> &JournalState {
        &self.state
    }

    pub fn append_label(&mut self, commit_id: &str, label: bool) -> Result<u64, JournalError> {
        let seq = self.state.last_seq + 1;
        let record = Record::Label { seq, commit_id: commit_id.to_string(), label, wall_ms: now_ms() };
        write_record(&mut self.file, &record)?;
        self.state.apply(record).expect("seq is next by construction");
        Ok(seq)
    }

    /// Appends an undo of the latest active label; returns `(seq, cancelled)`.
    pub fn append_undo(&mut self) -> Result<(u64, ActiveLabel), JournalError> {
        let cancelled = self.state.active.last().cloned().ok_or(JournalError::NothingToUndo)?;
        let seq = self.state.last_seq + 1;
        let record = Record::Undo { seq, cancels: cancelled.seq, wall_ms: now_ms() };
        write_record(&mut self.file, &record)?;
        self.state.apply(record).expect("undo targets the latest label");
        Ok((seq, cancelled))
    }
}

fn write_record(file: &mut File, record: &Record) -> Result<(), JournalError> {
    let mut line = serde_json::to_vec(record).map_err(std::io::Error::from)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.sync_data()?;
    Ok(())
}

/// Replays a journal file. Returns the state and the byte length of the
/// complete (newline-terminated) prefix.
pub fn read_state(path: &Path) -> Result<(JournalState, u64), JournalError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let complete_len = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let corrupt = |line: usize, message: String| JournalError::Corrupt { path: path.to_path_buf(), line, message };
    let mut state: Option<JournalState> = None;
    for (i, line) in BufReader::new(&bytes[..complete_len]).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| corrupt(i + 1, e.to_string()))?;
        match (&mut state, record) {
            (None, Record::Header(header)) => {
                state = Some(JournalState { header, active: Vec::new(), last_seq: 0 });
            }
            (None, _) => return Err(JournalError::MissingHeader(path.to_path_buf())),
            (Some(s), record) => s.apply(record).map_err(|m| corrupt(i + 1, m))?,
        }
    }
    let state = state.ok_or_else(|| JournalError::MissingHeader(path.to_path_buf()))?;
    Ok((state, complete_len as u64))
}
