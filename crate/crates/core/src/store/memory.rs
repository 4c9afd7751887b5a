use super::{Engine, Journal, Mutation, Storage, StorageError, Tables, Transaction};

struct Volatile;

impl Journal for Volatile {
    fn append(&mut self, _seq: u64, _mutations: &[Mutation]) -> Result<(), StorageError> {
        Ok(())
    }
}

/// Process-local store; contents vanish with the process.
pub struct MemoryStore {
    engine: Engine<Volatile>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self {
            engine: Engine::new(Tables::default(), Volatile),
        }
    }
}

impl Default for MemoryStore {
    fn default() -> Self {
        Self::new()
    }
}

impl Storage for MemoryStore {
    fn begin(&self) -> Transaction {
        self.engine.begin()
    }

    fn commit(&self, tx: Transaction) -> Result<(), StorageError> {
        self.engine.commit(tx)
    }
}
