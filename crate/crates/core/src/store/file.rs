//! Durable store: a JSON snapshot plus an append-only journal of commits.
//!
//! Layout inside the store directory:
//!
//! * `snapshot.json` holds every table as of commit `seq`;
//! * `journal.log` holds one JSON line per later commit.
//!
//! A commit is durable once its journal line and trailing newline are on
//! disk. On open the snapshot is loaded, journal lines past its `seq` are
//! replayed, and a torn final line (a crash mid-append) is cut off. The
//! journal is then folded into a fresh snapshot.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Engine, Journal, Mutation, Storage, StorageError, Tables, Transaction};

const SNAPSHOT: &str = "snapshot.json";
const JOURNAL: &str = "journal.log";

#[derive(Clone, Debug)]
pub struct FileOptions {
    /// fsync after every commit. Disable only for throwaway stores.
    pub sync: bool,
    /// Fold the journal into a new snapshot once it grows past this size.
    pub compact_after_bytes: u64,
}

impl Default for FileOptions {
    fn default() -> Self {
        Self {
            sync: true,
            compact_after_bytes: 8 * 1024 * 1024,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JournalLine {
    seq: u64,
    mutations: Vec<Mutation>,
}

struct FileJournal {
    dir: PathBuf,
    file: File,
    len: u64,
    options: FileOptions,
    /// Set when a failed append could not be undone; the journal tail is
    /// then unknown and further commits are refused.
    poisoned: bool,
}

impl FileJournal {
    fn sync_dir(&self) -> std::io::Result<()> {
        if self.options.sync {
            File::open(&self.dir)?.sync_all()?;
        }
        Ok(())
    }

    fn compact(&mut self, state: &Tables) -> Result<(), StorageError> {
        write_snapshot(&self.dir, state, self.options.sync)?;
        self.sync_dir()?;
        self.file.set_len(0)?;
        if self.options.sync {
            self.file.sync_all()?;
        }
        self.len = 0;
        Ok(())
    }
}

impl Journal for FileJournal {
    fn append(&mut self, seq: u64, mutations: &[Mutation]) -> Result<(), StorageError> {
        if self.poisoned {
            return Err(StorageError::Unavailable(
                "journal is in an unknown state after a failed write".into(),
            ));
        }
        let mut line = serde_json::to_vec(&JournalLine {
            seq,
            mutations: mutations.to_vec(),
        })
        .map_err(|e| StorageError::Unavailable(e.to_string()))?;
        line.push(b'\n');
        let result = self.file.write_all(&line).and_then(|()| {
            if self.options.sync {
                self.file.sync_data()
            } else {
                Ok(())
            }
        });
        match result {
            Ok(()) => {
                self.len += line.len() as u64;
                Ok(())
            }
            Err(err) => {
                if self.file.set_len(self.len).is_err() {
                    self.poisoned = true;
                }
                Err(err.into())
            }
        }
    }

    fn committed(&mut self, state: &Tables) -> Result<(), StorageError> {
        if self.len > self.options.compact_after_bytes {
            self.compact(state)?;
        }
        Ok(())
    }
}

/// File-backed store rooted at a directory, created if missing.
pub struct FileStore {
    engine: Engine<FileJournal>,
    dir: PathBuf,
}

impl FileStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StorageError> {
        Self::open_with(dir, FileOptions::default())
    }

    pub fn open_with(dir: impl AsRef<Path>, options: FileOptions) -> Result<Self, StorageError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut state = read_snapshot(&dir)?;
        let journal_path = dir.join(JOURNAL);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&journal_path)?;
        let replayed = replay(&mut file, &mut state)?;
        let len = file.metadata()?.len();
        let mut journal = FileJournal {
            dir: dir.clone(),
            file,
            len,
            options,
            poisoned: false,
        };
        if replayed.torn_tail_at.is_some() || len > 0 {
            if let Some(at) = replayed.torn_tail_at {
                tracing::warn!(offset = at, "discarded torn journal tail");
            }
            journal.compact(&state)?;
        }
        Ok(Self {
            engine: Engine::new(state, journal),
            dir,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl Storage for FileStore {
    fn begin(&self) -> Transaction {
        self.engine.begin()
    }

    fn commit(&self, tx: Transaction) -> Result<(), StorageError> {
        self.engine.commit(tx)
    }
}

fn read_snapshot(dir: &Path) -> Result<Tables, StorageError> {
    let path = dir.join(SNAPSHOT);
    let bytes = match fs::read(&path) {
        Ok(bytes) => bytes,
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => return Ok(Tables::default()),
        Err(err) => return Err(err.into()),
    };
    let mut tables: Tables = serde_json::from_slice(&bytes)
        .map_err(|e| StorageError::Corrupt(format!("{}: {e}", path.display())))?;
    tables
        .reindex()
        .map_err(|e| StorageError::Corrupt(format!("{}: {e}", path.display())))?;
    Ok(tables)
}

fn write_snapshot(dir: &Path, state: &Tables, sync: bool) -> Result<(), StorageError> {
    let tmp = dir.join(format!("{SNAPSHOT}.tmp"));
    let bytes = serde_json::to_vec(state).map_err(|e| StorageError::Unavailable(e.to_string()))?;
    let mut file = File::create(&tmp)?;
    file.write_all(&bytes)?;
    if sync {
        file.sync_all()?;
    }
    fs::rename(&tmp, dir.join(SNAPSHOT))?;
    Ok(())
}

struct Replay {
    torn_tail_at: Option<u64>,
}

fn replay(file: &mut File, state: &mut Tables) -> Result<Replay, StorageError> {
    let mut raw = Vec::new();
    file.read_to_end(&mut raw)?;
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < raw.len() {
        line_no += 1;
        let Some(newline) = raw[offset..].iter().position(|&b| b == b'\n') else {
            // No terminating newline: the append never finished.
            file.set_len(offset as u64)?;
            return Ok(Replay {
                torn_tail_at: Some(offset as u64),
            });
        };
        let end = offset + newline;
        let line: JournalLine = match serde_json::from_slice(&raw[offset..end]) {
            Ok(line) => line,
            Err(err) if end + 1 == raw.len() => {
                tracing::warn!(error = %err, "unreadable final journal line");
                file.set_len(offset as u64)?;
                return Ok(Replay {
                    torn_tail_at: Some(offset as u64),
                });
            }
            Err(err) => {
                return Err(StorageError::Corrupt(format!("journal line {line_no}: {err}")));
            }
        };
        offset = end + 1;
        if line.seq <= state.seq {
            // Already folded into the snapshot.
            continue;
        }
        if line.seq != state.seq + 1 {
            return Err(StorageError::Corrupt(format!(
                "journal line {line_no}: expected commit {}, found {}",
                state.seq + 1,
                line.seq
            )));
        }
        for mutation in line.mutations {
            match mutation {
                Mutation::Put(record) => state
                    .put(record)
                    .map_err(|e| StorageError::Corrupt(format!("journal line {line_no}: {e}")))?,
                Mutation::Delete(key) => state.delete(&key),
            }
        }
        state.seq = line.seq;
    }
    Ok(Replay { torn_tail_at: None })
}
