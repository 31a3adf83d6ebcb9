#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use emblem_core::corpus::write_csv;
use emblem_core::{CommitRecord, FEATURE_COUNT};
use serde_json::Value;

pub const SAMPLE_MESSAGES: [(&str, bool); 12] = [
    ("fixes #143: alignto() now checks the 2 selections describe the same atom", true),
    ("Correct bugs due to merge (rhotoxc)", true),
    ("Convert tsmear to tphysel in vtorhotf.F90", false),
    ("Universe can load multiple trajectories from positional args", false),
    ("NetCDFWriter working (closes Issue 109)", false),
    ("Correction in magnetization rotation (DFPT+PAW)", false),
    ("Add missing module dependency", false),
    ("findSubgraphIsomorphisms works if you pass it a complete mapping", false),
    ("documentation updates and fixes", true),
    ("Removed unused expected error from Selections", true),
    ("Test for HOLE changed form error to warning when HOLE binary is not there", true),
    ("Added CHANGELOG entry for fix of Issue #550.", true),
];

pub fn emblem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emblem"))
}

pub fn run(args: &[&str]) -> Output {
    emblem().args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn record(id: &str, release: u32, message: &str) -> CommitRecord {
    CommitRecord {
        id: id.to_string(),
        project: "p".to_string(),
        release_index: release,
        timestamp: 0,
        message: message.to_string(),
        features: [1.0; FEATURE_COUNT],
        truth_fixing: None,
        truth_inducing: None,
    }
}

pub fn write_records(path: &Path, records: &[CommitRecord]) {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).unwrap();
    std::fs::write(path, buf).unwrap();
}

pub fn write_labels(path: &Path, labels: &BTreeMap<String, bool>) {
    let mut buf = Vec::new();
    emblem_core::labels::write_labels(&mut buf, labels.iter().map(|(k, v)| (k, *v)), None).unwrap();
    std::fs::write(path, buf).unwrap();
}

pub fn sample_message_records() -> Vec<CommitRecord> {
    SAMPLE_MESSAGES.iter().enumerate().map(|(i, (m, _))| record(&format!("t{i:02}"), 0, m)).collect()
}

/// A running `emblem serve` child, killed on drop.
pub struct Server {
    pub child: Child,
    pub addr: String,
    pub data_dir: PathBuf,
}

impl Server {
    pub fn start(data_dir: &Path) -> Self {
        let mut child = emblem()
            .args(["serve", "--addr", "127.0.0.1:0", "--data-dir"])
            .arg(data_dir)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("server starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected: {line:?}"));
        Self { addr: addr.to_string(), child, data_dir: data_dir.to_path_buf() }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        match ureq::get(&self.url(path)).call() {
            Ok(r) => (r.status(), r.into_string().unwrap()),
            Err(ureq::Error::Status(code, r)) => (code, r.into_string().unwrap()),
            Err(e) => panic!("{e}"),
        }
    }

    pub fn get_json(&self, path: &str) -> (u16, Value) {
        let (s, b) = self.get(path);
        (s, serde_json::from_str(&b).unwrap_or(Value::Null))
    }

    pub fn post_json(&self, path: &str, body: Value) -> (u16, Value) {
        match ureq::post(&self.url(path)).send_json(body) {
            Ok(r) => (r.status(), r.into_json().unwrap()),
            Err(ureq::Error::Status(code, r)) => (code, r.into_json().unwrap_or(Value::Null)),
            Err(e) => panic!("{e}"),
        }
    }

    pub fn upload(&self, csv: &str) -> Value {
        let r = ureq::post(&self.url("/corpora")).set("content-type", "text/csv").send_string(csv).unwrap();
        r.into_json().unwrap()
    }

    /// SIGKILL, no chance to clean up.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }

    /// SIGTERM and wait; returns whether the process exited successfully.
    pub fn terminate(mut self) -> bool {
        let pid = self.child.id().to_string();
        assert!(Command::new("kill").args(["-TERM", &pid]).status().unwrap().success());
        self.child.wait().unwrap().success()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
