use std::fmt;

use chrono::NaiveDate;
use im::OrdMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::StorageError;
use crate::calendar::TimeOfDay;
use crate::domain::{
    AdminAccount, AdminId, AgeGroup, Appointment, AppointmentId, Doctor, DoctorId, HealthSchedule,
    Hospital, HospitalId, Notification, NotificationId, Patient, PatientId, Session,
};

/// A stored value together with its commit-assigned version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row<T> {
    pub version: u64,
    pub value: T,
}

pub type Table<E> = OrdMap<<E as Entity>::Id, Row<E>>;

/// Keys that at most one stored entity may hold at a time.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniqueKey {
    PatientUsername(String),
    /// Lower-cased.
    PatientEmail(String),
    AdminUsername(String),
    /// Only held by appointments in the reserved state.
    ReservedSlot {
        doctor: DoctorId,
        date: NaiveDate,
        start: TimeOfDay,
    },
}

impl fmt::Display for UniqueKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UniqueKey::PatientUsername(u) => write!(f, "patient username {u:?}"),
            UniqueKey::PatientEmail(e) => write!(f, "patient email {e:?}"),
            UniqueKey::AdminUsername(u) => write!(f, "admin username {u:?}"),
            UniqueKey::ReservedSlot { doctor, date, start } => {
                write!(f, "reserved slot {doctor} {date} {start}")
            }
        }
    }
}

/// A type that lives in one of the store's entity sets.
pub trait Entity: Clone + fmt::Debug + Serialize + DeserializeOwned + Send + Sync + 'static {
    type Id: Clone + Ord + fmt::Debug + Serialize + DeserializeOwned + Send + Sync + 'static;
    const KIND: EntityKind;

    fn id(&self) -> Self::Id;

    fn unique_keys(&self) -> Vec<UniqueKey> {
        Vec::new()
    }

    #[doc(hidden)]
    fn table(tables: &Tables) -> &Table<Self>;
    #[doc(hidden)]
    fn table_mut(tables: &mut Tables) -> &mut Table<Self>;
    #[doc(hidden)]
    fn record(row: Row<Self>) -> Record;
    #[doc(hidden)]
    fn key(id: Self::Id) -> RecordKey;
    #[doc(hidden)]
    fn id_of(key: &RecordKey) -> Option<&Self::Id>;
}

macro_rules! entities {
    ($( $variant:ident : $ty:ty, $id:ty, $field:ident; )*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum EntityKind {
            $( $variant, )*
        }

        impl EntityKind {
            pub const ALL: &'static [EntityKind] = &[$( EntityKind::$variant, )*];
        }

        /// A full row, as written to the journal.
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum Record {
            $( $variant(Row<$ty>), )*
        }

        /// Identifies one row in one entity set.
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum RecordKey {
            $( $variant($id), )*
        }

        /// Every entity set plus the derived uniqueness index.
        #[derive(Clone, Default, Serialize, Deserialize)]
        pub struct Tables {
            $( pub(crate) $field: Table<$ty>, )*
            /// Sequence number of the last commit folded into these tables.
            pub(crate) seq: u64,
            #[serde(skip)]
            pub(crate) unique: OrdMap<UniqueKey, RecordKey>,
            /// Per-set change counters, bumped whenever a set is written.
            #[serde(skip)]
            pub(crate) changes: [u64; EntityKind::ALL.len()],
        }

        $(
            impl Entity for $ty {
                type Id = $id;
                const KIND: EntityKind = EntityKind::$variant;

                fn id(&self) -> $id {
                    entity_id!($variant, self)
                }

                fn unique_keys(&self) -> Vec<UniqueKey> {
                    unique_keys!($variant, self)
                }

                fn table(tables: &Tables) -> &Table<Self> {
                    &tables.$field
                }

                fn table_mut(tables: &mut Tables) -> &mut Table<Self> {
                    &mut tables.$field
                }

                fn record(row: Row<Self>) -> Record {
                    Record::$variant(row)
                }

                fn key(id: $id) -> RecordKey {
                    RecordKey::$variant(id)
                }

                fn id_of(key: &RecordKey) -> Option<&$id> {
                    match key {
                        RecordKey::$variant(id) => Some(id),
                        #[allow(unreachable_patterns)]
                        _ => None,
                    }
                }
            }
        )*

        impl Record {
            pub fn key(&self) -> RecordKey {
                match self {
                    $( Record::$variant(row) => RecordKey::$variant(row.value.id()), )*
                }
            }

            pub(crate) fn set_version(&mut self, version: u64) {
                match self {
                    $( Record::$variant(row) => row.version = version, )*
                }
            }
        }

        impl Tables {
            pub(crate) fn version_of(&self, key: &RecordKey) -> Option<u64> {
                match key {
                    $( RecordKey::$variant(id) => self.$field.get(id).map(|r| r.version), )*
                }
            }

            pub(crate) fn put(&mut self, record: Record) -> Result<(), StorageError> {
                match record {
                    $( Record::$variant(row) => self.put_row::<$ty>(row), )*
                }
            }

            pub(crate) fn delete(&mut self, key: &RecordKey) {
                match key {
                    $( RecordKey::$variant(id) => self.delete_row::<$ty>(id), )*
                }
            }

            /// Recomputes the uniqueness index from scratch, failing if the
            /// loaded rows violate it.
            pub(crate) fn reindex(&mut self) -> Result<(), StorageError> {
                self.unique = OrdMap::new();
                $(
                    let rows: Vec<Row<$ty>> = self.$field.values().cloned().collect();
                    for row in rows {
                        self.put_row::<$ty>(row)?;
                    }
                )*
                self.changes = Default::default();
                Ok(())
            }

            pub(crate) fn len_of(&self, kind: EntityKind) -> usize {
                match kind {
                    $( EntityKind::$variant => self.$field.len(), )*
                }
            }
        }
    };
}

macro_rules! entity_id {
    (Session, $s:expr) => {
        $s.token_digest.clone()
    };
    (HealthSchedule, $s:expr) => {
        $s.group
    };
    ($other:ident, $s:expr) => {
        $s.id
    };
}

macro_rules! unique_keys {
    (Patient, $s:expr) => {
        vec![
            UniqueKey::PatientUsername($s.username.clone()),
            UniqueKey::PatientEmail($s.email.to_lowercase()),
        ]
    };
    (Admin, $s:expr) => {
        vec![UniqueKey::AdminUsername($s.username.clone())]
    };
    (Appointment, $s:expr) => {
        if $s.is_reserved() {
            vec![UniqueKey::ReservedSlot {
                doctor: $s.slot.doctor_id,
                date: $s.slot.date,
                start: $s.slot.start,
            }]
        } else {
            Vec::new()
        }
    };
    ($other:ident, $s:expr) => {
        Vec::new()
    };
}

entities! {
    Patient: Patient, PatientId, patients;
    Admin: AdminAccount, AdminId, admins;
    Hospital: Hospital, HospitalId, hospitals;
    Doctor: Doctor, DoctorId, doctors;
    Appointment: Appointment, AppointmentId, appointments;
    Notification: Notification, NotificationId, notifications;
    Session: Session, String, sessions;
    HealthSchedule: HealthSchedule, AgeGroup, health_schedules;
}

impl Tables {
    pub(crate) fn get<E: Entity>(&self, id: &E::Id) -> Option<&Row<E>> {
        E::table(self).get(id)
    }

    pub(crate) fn owner(&self, key: &UniqueKey) -> Option<&RecordKey> {
        self.unique.get(key)
    }

    fn put_row<E: Entity>(&mut self, row: Row<E>) -> Result<(), StorageError> {
        let id = row.value.id();
        let owner = E::key(id.clone());
        let new_keys = row.value.unique_keys();
        for key in &new_keys {
            match self.unique.get(key) {
                Some(holder) if *holder != owner => {
                    return Err(StorageError::ConstraintViolation(key.clone()))
                }
                _ => {}
            }
        }
        let old_keys = E::table(self)
            .get(&id)
            .map(|r| r.value.unique_keys())
            .unwrap_or_default();
        for key in old_keys {
            if !new_keys.contains(&key) {
                self.unique.remove(&key);
            }
        }
        for key in new_keys {
            self.unique.insert(key, owner.clone());
        }
        E::table_mut(self).insert(id, row);
        self.changes[E::KIND as usize] += 1;
        Ok(())
    }

    fn delete_row<E: Entity>(&mut self, id: &E::Id) {
        if let Some(row) = E::table_mut(self).remove(id) {
            let owner = E::key(id.clone());
            for key in row.value.unique_keys() {
                if self.unique.get(&key) == Some(&owner) {
                    self.unique.remove(&key);
                }
            }
            self.changes[E::KIND as usize] += 1;
        }
    }
}
