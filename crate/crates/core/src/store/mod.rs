//! Transactional storage for every entity set.
//!
//! A [`Transaction`] reads from an immutable snapshot taken at
//! [`Storage::begin`] and stages its writes. [`Storage::commit`] replays the
//! staged writes against the latest committed state under a single commit
//! lock, checking:
//!
//! * row versions: a row updated or deleted by the transaction must not have
//!   been changed by anyone else since it was read (else [`StorageError::Conflict`]);
//! * guarded sets: a set marked with [`Transaction::guard`] must not have been
//!   written at all since `begin` (else [`StorageError::Conflict`]);
//! * uniqueness: no two rows may hold the same [`UniqueKey`]
//!   (else [`StorageError::ConstraintViolation`]).
//!
//! A failed commit leaves the store untouched. The first transaction to
//! commit wins; [`transact`] retries the losers of version races.

mod file;
mod memory;
mod tables;

use std::collections::BTreeSet;
use std::io;

use parking_lot::{Mutex, RwLock};
use thiserror::Error;

pub use file::{FileOptions, FileStore};
pub use memory::MemoryStore;
pub use tables::{Entity, EntityKind, Record, RecordKey, Row, Tables, UniqueKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StorageError {
    #[error("constraint violated: {0} is already taken")]
    ConstraintViolation(UniqueKey),
    #[error("transaction conflicts with a concurrent commit")]
    Conflict,
    #[error("storage unavailable: {0}")]
    Unavailable(String),
    #[error("store is corrupt: {0}")]
    Corrupt(String),
}

impl From<io::Error> for StorageError {
    fn from(err: io::Error) -> Self {
        StorageError::Unavailable(err.to_string())
    }
}

/// The storage contract shared by the in-memory and file-backed stores.
pub trait Storage: Send + Sync {
    /// Opens a transaction over a consistent snapshot of the store.
    fn begin(&self) -> Transaction;

    /// Atomically applies the transaction's writes, or none of them.
    fn commit(&self, tx: Transaction) -> Result<(), StorageError>;
}

/// Runs `body` in a fresh transaction and commits it, retrying on
/// [`StorageError::Conflict`]. Errors from `body` abort without committing.
pub fn transact<S, T, E>(store: &S, mut body: impl FnMut(&mut Transaction) -> Result<T, E>) -> Result<T, E>
where
    S: Storage + ?Sized,
    E: From<StorageError>,
{
    const ATTEMPTS: usize = 64;
    let mut attempt = 0;
    loop {
        attempt += 1;
        let mut tx = store.begin();
        let out = body(&mut tx)?;
        match store.commit(tx) {
            Ok(()) => return Ok(out),
            Err(StorageError::Conflict) if attempt < ATTEMPTS => {
                tracing::debug!(attempt, "retrying conflicted transaction");
                std::thread::yield_now();
            }
            Err(err) => return Err(err.into()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Expect {
    Absent,
    Version(u64),
}

#[derive(Clone, Debug)]
enum Op {
    Put(Record),
    Delete,
}

#[derive(Clone, Debug)]
struct Write {
    key: RecordKey,
    expect: Expect,
    op: Op,
}

/// A unit of work. Dropping it without committing rolls it back.
pub struct Transaction {
    view: Tables,
    changes_at_begin: [u64; EntityKind::ALL.len()],
    guards: BTreeSet<EntityKind>,
    writes: Vec<Write>,
}

impl Transaction {
    fn new(snapshot: Tables) -> Self {
        Self {
            changes_at_begin: snapshot.changes,
            view: snapshot,
            guards: BTreeSet::new(),
            writes: Vec::new(),
        }
    }

    pub fn get<E: Entity>(&self, id: &E::Id) -> Option<&E> {
        self.view.get::<E>(id).map(|row| &row.value)
    }

    /// Every row of one entity set, in id order.
    pub fn all<E: Entity>(&self) -> impl Iterator<Item = &E> + '_ {
        E::table(&self.view).values().map(|row| &row.value)
    }

    pub fn count<E: Entity>(&self) -> usize {
        E::table(&self.view).len()
    }

    /// The row of type `E` currently holding `key`, if any.
    pub fn find_unique<E: Entity>(&self, key: &UniqueKey) -> Option<&E> {
        let id = E::id_of(self.view.owner(key)?)?;
        self.get::<E>(id)
    }

    /// Inserts a new row. Fails if the id exists or a unique key is taken in
    /// this transaction's view; commit re-checks against the latest state.
    pub fn insert<E: Entity>(&mut self, value: E) -> Result<(), StorageError> {
        let key = E::key(value.id());
        if self.view.version_of(&key).is_some() {
            return Err(StorageError::Conflict);
        }
        self.stage(key, Expect::Absent, E::record(Row { version: 0, value }))
    }

    /// Replaces an existing row. The commit fails with a conflict if the row
    /// changed after this transaction read it.
    pub fn update<E: Entity>(&mut self, value: E) -> Result<(), StorageError> {
        let key = E::key(value.id());
        let Some(version) = self.view.version_of(&key) else {
            return Err(StorageError::Conflict);
        };
        self.stage(key, Expect::Version(version), E::record(Row { version, value }))
    }

    pub fn delete<E: Entity>(&mut self, id: &E::Id) {
        let key = E::key(id.clone());
        let Some(version) = self.view.version_of(&key) else {
            return;
        };
        self.view.delete(&key);
        match self.writes.iter_mut().find(|w| w.key == key) {
            Some(existing) => existing.op = Op::Delete,
            None => self.writes.push(Write {
                key,
                expect: Expect::Version(version),
                op: Op::Delete,
            }),
        }
    }

    /// Makes the commit fail if any row of `E` was written by another
    /// transaction since this one began. Use when a decision depends on the
    /// absence of rows (a predicate read) that no unique key can protect.
    pub fn guard<E: Entity>(&mut self) {
        self.guards.insert(E::KIND);
    }

    pub fn is_read_only(&self) -> bool {
        self.writes.is_empty()
    }

    /// Discards all staged writes.
    pub fn rollback(self) {}

    fn stage(&mut self, key: RecordKey, expect: Expect, record: Record) -> Result<(), StorageError> {
        self.view.put(record.clone())?;
        match self.writes.iter_mut().find(|w| w.key == key) {
            Some(existing) => existing.op = Op::Put(record),
            None => self.writes.push(Write {
                key,
                expect,
                op: Op::Put(record),
            }),
        }
        Ok(())
    }
}

/// Where committed mutations go before they become visible.
pub(crate) trait Journal: Send {
    fn append(&mut self, seq: u64, mutations: &[Mutation]) -> Result<(), StorageError>;

    /// Called with the new state after every successful commit.
    fn committed(&mut self, _state: &Tables) -> Result<(), StorageError> {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub(crate) enum Mutation {
    Put(Record),
    Delete(RecordKey),
}

/// Snapshot isolation with first-committer-wins validation; shared by both
/// store implementations.
pub(crate) struct Engine<J> {
    state: RwLock<Tables>,
    journal: Mutex<J>,
}

impl<J: Journal> Engine<J> {
    pub(crate) fn new(state: Tables, journal: J) -> Self {
        Self {
            state: RwLock::new(state),
            journal: Mutex::new(journal),
        }
    }

    pub(crate) fn snapshot(&self) -> Tables {
        self.state.read().clone()
    }

    pub(crate) fn begin(&self) -> Transaction {
        Transaction::new(self.snapshot())
    }

    pub(crate) fn commit(&self, tx: Transaction) -> Result<(), StorageError> {
        if tx.writes.is_empty() {
            return Ok(());
        }
        let mut journal = self.journal.lock();
        let mut next = self.snapshot();
        for kind in &tx.guards {
            let i = *kind as usize;
            if next.changes[i] != tx.changes_at_begin[i] {
                return Err(StorageError::Conflict);
            }
        }
        let mut mutations = Vec::with_capacity(tx.writes.len());
        for write in tx.writes {
            let current = next.version_of(&write.key);
            match (write.expect, current) {
                (Expect::Absent, None) => {}
                (Expect::Version(v), Some(c)) if v == c => {}
                _ => return Err(StorageError::Conflict),
            }
            match write.op {
                Op::Put(mut record) => {
                    record.set_version(current.unwrap_or(0) + 1);
                    next.put(record.clone())?;
                    mutations.push(Mutation::Put(record));
                }
                Op::Delete => {
                    next.delete(&write.key);
                    mutations.push(Mutation::Delete(write.key));
                }
            }
        }
        next.seq += 1;
        journal.append(next.seq, &mutations)?;
        *self.state.write() = next.clone();
        if let Err(err) = journal.committed(&next) {
            // The commit is durable; failure here only affects housekeeping.
            tracing::warn!(error = %err, "post-commit journal maintenance failed");
        }
        Ok(())
    }
}

/// Entity counts, handy for assertions and diagnostics.
pub fn entity_counts(store: &dyn Storage) -> Vec<(EntityKind, usize)> {
    let tx = store.begin();
    EntityKind::ALL
        .iter()
        .map(|&kind| (kind, tx.view.len_of(kind)))
        .collect()
}

/// Every committed row as JSON, keyed by entity set. Two stores holding the
/// same data export equal values.
pub fn export(store: &dyn Storage) -> serde_json::Value {
    serde_json::to_value(&store.begin().view).expect("tables serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AdminAccount, AdminId};

    fn admin(name: &str) -> AdminAccount {
        AdminAccount {
            id: AdminId::new(),
            username: name.into(),
            password_digest: "x".into(),
        }
    }

    #[test]
    fn own_writes_are_visible_and_rollback_discards() {
        let store = MemoryStore::new();
        let mut tx = store.begin();
        let a = admin("root");
        tx.insert(a.clone()).unwrap();
        assert_eq!(tx.get::<AdminAccount>(&a.id), Some(&a));
        tx.rollback();
        assert!(store.begin().get::<AdminAccount>(&a.id).is_none());
    }

    #[test]
    fn update_then_delete_in_one_transaction() {
        let store = MemoryStore::new();
        let a = admin("root");
        transact(&store, |tx| tx.insert(a.clone())).unwrap();
        let mut tx = store.begin();
        let mut renamed = a.clone();
        renamed.username = "boss".into();
        tx.update(renamed).unwrap();
        tx.delete::<AdminAccount>(&a.id);
        store.commit(tx).unwrap();
        let tx = store.begin();
        assert_eq!(tx.count::<AdminAccount>(), 0);
        assert!(tx
            .find_unique::<AdminAccount>(&UniqueKey::AdminUsername("root".into()))
            .is_none());
    }

    #[test]
    fn guarded_set_detects_concurrent_insert() {
        let store = MemoryStore::new();
        let mut reader = store.begin();
        reader.guard::<AdminAccount>();
        reader.insert(admin("one")).unwrap();
        transact(&store, |tx| tx.insert(admin("two"))).unwrap();
        assert_eq!(store.commit(reader), Err(StorageError::Conflict));
    }

    #[test]
    fn stale_update_conflicts() {
        let store = MemoryStore::new();
        let a = admin("root");
        transact(&store, |tx| tx.insert(a.clone())).unwrap();
        let mut first = store.begin();
        let mut second = store.begin();
        let mut x = a.clone();
        x.password_digest = "1".into();
        first.update(x.clone()).unwrap();
        x.password_digest = "2".into();
        second.update(x).unwrap();
        store.commit(first).unwrap();
        assert_eq!(store.commit(second), Err(StorageError::Conflict));
        assert_eq!(
            store.begin().get::<AdminAccount>(&a.id).unwrap().password_digest,
            "1"
        );
    }
}
