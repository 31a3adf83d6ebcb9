//! On-disk corpora and live sessions.
//!
//! Layout under the data directory:
//! `corpora/<id>.json` holds an ingested corpus, where `<id>` is a hash of the
//! uploaded bytes and schema; `sessions/<id>.jsonl` is a session journal.
//! Sessions are rebuilt from their journal on first access.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use emblem_core::corpus::{ingest_csv, ColumnSchema, CorpusError, CorpusOptions, RowError};
use emblem_core::emblem::{Candidates, LabelOutcome, SessionError};
use emblem_core::{Corpus, EmblemParams, Session};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::journal::{now_ms, ActiveLabel, Header, Journal, JournalError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("corpus {0} not found")]
    CorpusNotFound(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("ingest failed: {0}")]
    Ingest(CorpusError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus error: {0}")]
    Corpus(CorpusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub corpus_id: String,
    pub n_commits: usize,
    pub n_releases: usize,
    /// Rows dropped during ingest.
    pub skipped: Vec<RowError>,
}

/// A session together with its journal.
#[derive(Debug)]
pub struct LiveSession {
    pub journal: Journal,
    pub session: Session,
}

impl LiveSession {
    pub fn id(&self) -> &str {
        &self.journal.state().header.session_id
    }

    pub fn corpus_id(&self) -> &str {
        &self.journal.state().header.corpus_id
    }

    pub fn next(&self, n: usize) -> Result<Candidates, SessionError> {
        match self.session.next_candidates(n) {
            Err(SessionError::Stopped) => Ok(Candidates { ids: Vec::new(), exhausted: false }),
            other => other,
        }
    }

    /// Applies a label, journaling it before the new state is installed.
    pub fn label(&mut self, commit_id: &str, is_fixing: bool) -> Result<LabelOutcome, StoreError> {
        let mut next = self.session.clone();
        let mut outcome = next.apply_label(commit_id, is_fixing)?;
        outcome.seq = self.journal.append_label(commit_id, is_fixing)?;
        self.session = next;
        Ok(outcome)
    }

    /// Cancels the latest label and rebuilds the session by replay.
    pub fn undo(&mut self) -> Result<(u64, ActiveLabel), StoreError> {
        let remaining: Vec<(String, bool)> = {
            let active = &self.journal.state().active;
            if active.is_empty() {
                return Err(JournalError::NothingToUndo.into());
            }
            active[..active.len() - 1].iter().map(|a| (a.commit_id.clone(), a.label)).collect()
        };
        let rebuilt = Session::replay(self.session.corpus().clone(), self.session.params().clone(), remaining)?;
        let result = self.journal.append_undo()?;
        self.session = rebuilt;
        Ok(result)
    }

    /// Labels in force, in entry order.
    pub fn labels(&self) -> &[ActiveLabel] {
        &self.journal.state().active
    }
}

pub type SessionHandle = Arc<RwLock<LiveSession>>;

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    corpora: RwLock<HashMap<String, Arc<Corpus>>>,
    sessions: Mutex<HashMap<String, SessionHandle>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
}

impl Store {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("corpora"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Self { root, corpora: RwLock::default(), sessions: Mutex::default() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn corpus_path(&self, id: &str) -> PathBuf {
        self.root.join("corpora").join(format!("{id}.json"))
    }

    fn journal_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.jsonl"))
    }

    /// Ingests a CSV upload. Identical bytes and schema give the same id.
    pub fn add_corpus(&self, csv: &[u8], schema: &ColumnSchema) -> Result<CorpusInfo, StoreError> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(schema).expect("schema serializes"));
        hasher.update([0u8]);
        hasher.update(csv);
        let id = hex::encode(&hasher.finalize()[..16]);
        let report = ingest_csv(csv, schema, CorpusOptions::default()).map_err(StoreError::Ingest)?;
        let path = self.corpus_path(&id);
        if !path.exists() {
            let tmp = path.with_extension("json.tmp");
            report.corpus.save(&tmp).map_err(StoreError::Corpus)?;
            fs::File::open(&tmp)?.sync_all()?;
            fs::rename(&tmp, &path)?;
        }
        let info = CorpusInfo {
            corpus_id: id.clone(),
            n_commits: report.corpus.len(),
            n_releases: report.corpus.releases().len(),
            skipped: report.skipped,
        };
        self.corpora.write().expect("corpus lock").insert(id, Arc::new(report.corpus));
        Ok(info)
    }

    pub fn corpus(&self, id: &str) -> Result<Arc<Corpus>, StoreError> {
        if let Some(c) = self.corpora.read().expect("corpus lock").get(id) {
            return Ok(c.clone());
        }
        let path = self.corpus_path(id);
        if !valid_id(id) || !path.exists() {
            return Err(StoreError::CorpusNotFound(id.to_string()));
        }
        let corpus = Arc::new(Corpus::load(&path).map_err(StoreError::Corpus)?);
        self.corpora.write().expect("corpus lock").insert(id.to_string(), corpus.clone());
        Ok(corpus)
    }

    pub fn create_session(&self, corpus_id: &str, params: EmblemParams) -> Result<SessionHandle, StoreError> {
        let corpus = self.corpus(corpus_id)?;
        let session = Session::start(corpus, params.clone())?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let header = Header { session_id: id.clone(), corpus_id: corpus_id.to_string(), params, created_ms: now_ms() };
        let journal = Journal::create(self.journal_path(&id), header)?;
        let handle = Arc::new(RwLock::new(LiveSession { journal, session }));
        self.sessions.lock().expect("session map lock").insert(id, handle.clone());
        Ok(handle)
    }

    pub fn session(&self, id: &str) -> Result<SessionHandle, StoreError> {
        let mut map = self.sessions.lock().expect("session map lock");
        if let Some(h) = map.get(id) {
            return Ok(h.clone());
        }
        let path = self.journal_path(id);
        if !valid_id(id) || !path.exists() {
            return Err(StoreError::SessionNotFound(id.to_string()));
        }
        let journal = Journal::open(&path)?;
        let header = &journal.state().header;
        let corpus = self.corpus(&header.corpus_id)?;
        let labels = journal.state().active.iter().map(|a| (a.commit_id.clone(), a.label)).collect::<Vec<_>>();
        let session = Session::replay(corpus, header.params.clone(), labels)?;
        let handle = Arc::new(RwLock::new(LiveSession { journal, session }));
        map.insert(id.to_string(), handle.clone());
        Ok(handle)
    }
}
