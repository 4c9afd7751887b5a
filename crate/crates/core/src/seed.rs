//! Loading a seed fixture into the store.
//!
//! A fixture is a single TOML document:
//!
//! ```toml
//! [admin]                      # optional bootstrap admin
//! username = "admin"
//! password = "at-least-8-chars"
//!
//! [[hospitals]]
//! name = "City Care"
//! address = "Blue Area, Islamabad"
//! phone = "+92511234567"
//! latitude = 33.71
//! longitude = 73.06
//! description = "..."
//! timezone = "Asia/Karachi"    # IANA name, defaults to UTC
//!
//! [[doctors]]
//! hospital = "City Care"       # refers to a hospital by name
//! name = "Dr. Ayesha Khan"
//! specialty = "Cardiology"
//! phone = "0511234567"
//! email = "ayesha.khan@citycare.pk"
//! working_hours = { monday = [{ start = "09:00", end = "13:00" }] }
//!
//! [[health_schedules]]
//! group = "Childhood"          # Childhood | Adolescent | Adult | Senior
//! entries = [{ title = "...", guidance = "..." }]
//! ```
//!
//! Problems are reported with the path of the offending record, e.g.
//! `doctors[3].email`.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::WorkingHours;
use crate::catalog::{build_doctor, check_hospital, NewDoctor, NewHospital};
use crate::domain::{AdminAccount, AdminId, Doctor, HealthSchedule, Hospital, HospitalId};
use crate::error::Error;
use crate::store::{transact, StorageError, UniqueKey};
use crate::validation::MIN_PASSWORD_CHARS;
use crate::Medbook;

/// Name looked up inside a fixture directory.
pub const FIXTURE_FILE: &str = "fixture.toml";

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedFixture {
    #[serde(default)]
    pub admin: Option<FixtureAdmin>,
    #[serde(default)]
    pub hospitals: Vec<NewHospital>,
    #[serde(default)]
    pub doctors: Vec<FixtureDoctor>,
    #[serde(default)]
    pub health_schedules: Vec<HealthSchedule>,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureAdmin {
    pub username: String,
    pub password: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureDoctor {
    pub hospital: String,
    pub name: String,
    #[serde(default)]
    pub specialty: String,
    pub phone: String,
    pub email: String,
    #[serde(default)]
    pub working_hours: WorkingHours,
}

/// Rows written by one seeding run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SeedSummary {
    pub hospitals: usize,
    pub doctors: usize,
    pub schedules: usize,
    pub admins: usize,
}

#[derive(Debug, Error)]
pub enum SeedError {
    #[error("fixture invalid at {path}: {reason}")]
    FixtureInvalid { path: String, reason: String },
    #[error("store is already seeded; pass --force to merge the fixture into it")]
    AlreadySeeded,
    #[error("cannot read fixture {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Storage(#[from] StorageError),
}

fn invalid(path: impl Into<String>, reason: impl ToString) -> SeedError {
    SeedError::FixtureInvalid {
        path: path.into(),
        reason: reason.to_string(),
    }
}

impl From<Error> for SeedError {
    fn from(err: Error) -> Self {
        match err {
            Error::Storage(e) => SeedError::Storage(e),
            other => invalid("<store>", other),
        }
    }
}

impl SeedFixture {
    /// Reads a fixture file, or `fixture.toml` inside a directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SeedError> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path.push(FIXTURE_FILE);
        }
        let text = std::fs::read_to_string(&path).map_err(|source| SeedError::Io {
            path: path.clone(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, SeedError> {
        let value: toml::Value = toml::from_str(text).map_err(|e| invalid("<document>", e.message()))?;
        let fixture: SeedFixture = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            invalid(path, e.into_inner())
        })?;
        fixture.validate()?;
        Ok(fixture)
    }

    /// Record-level checks that need no store.
    pub fn validate(&self) -> Result<(), SeedError> {
        if let Some(admin) = &self.admin {
            if admin.username.trim().is_empty() {
                return Err(invalid("admin.username", "must not be empty"));
            }
            if admin.password.chars().count() < MIN_PASSWORD_CHARS {
                return Err(invalid(
                    "admin.password",
                    format!("must be at least {MIN_PASSWORD_CHARS} characters"),
                ));
            }
        }
        let mut names = HashSet::new();
        for (i, hospital) in self.hospitals.iter().enumerate() {
            check_hospital(hospital).map_err(|e| invalid(field_path("hospitals", i, &e), e))?;
            if !names.insert(hospital.name.as_str()) {
                return Err(invalid(format!("hospitals[{i}].name"), "duplicate hospital name"));
            }
        }
        for (i, doctor) in self.doctors.iter().enumerate() {
            if !names.contains(doctor.hospital.as_str()) {
                return Err(invalid(
                    format!("doctors[{i}].hospital"),
                    format!("no hospital named {:?} in this fixture", doctor.hospital),
                ));
            }
            build_doctor(doctor.to_new(HospitalId::new()))
                .map_err(|e| invalid(field_path("doctors", i, &e), e))?;
        }
        let mut groups = BTreeSet::new();
        for (i, schedule) in self.health_schedules.iter().enumerate() {
            if !groups.insert(schedule.group) {
                return Err(invalid(format!("health_schedules[{i}].group"), "duplicate group"));
            }
            if schedule.entries.is_empty() {
                return Err(invalid(format!("health_schedules[{i}].entries"), "must not be empty"));
            }
        }
        Ok(())
    }
}

impl FixtureDoctor {
    fn to_new(&self, hospital_id: HospitalId) -> NewDoctor {
        NewDoctor {
            hospital_id,
            name: self.name.clone(),
            specialty: self.specialty.clone(),
            phone: self.phone.clone(),
            email: self.email.clone(),
            working_hours: self.working_hours.clone(),
        }
    }
}

fn field_path(list: &str, index: usize, err: &Error) -> String {
    let field = match err {
        Error::InvalidField { field, .. } => field,
        Error::InvalidCoordinates => "latitude",
        Error::InvalidEmail => "email",
        Error::InvalidWorkingHours(_) => "working_hours",
        _ => return format!("{list}[{index}]"),
    };
    format!("{list}[{index}].{field}")
}

impl Medbook {
    /// Loads `fixture` in one transaction. An empty store is seeded as is;
    /// a store that already holds catalog data is refused unless `force`, in
    /// which case only records missing from the store are added (hospitals
    /// by name, doctors by hospital and name, admins by username) and
    /// schedules are replaced by group.
    pub fn seed(&self, fixture: &SeedFixture, force: bool) -> Result<SeedSummary, SeedError> {
        fixture.validate()?;
        let admin = fixture.admin.as_ref().map(|a| AdminAccount {
            id: AdminId::new(),
            username: a.username.clone(),
            password_digest: self.hash_password(&a.password),
        });
        let summary = transact(self.store(), |tx| {
            let seeded = tx.count::<Hospital>() + tx.count::<Doctor>() + tx.count::<HealthSchedule>() > 0;
            if seeded && !force {
                return Err(SeedError::AlreadySeeded);
            }
            let mut summary = SeedSummary::default();

            if let Some(admin) = &admin {
                let key = UniqueKey::AdminUsername(admin.username.clone());
                if tx.find_unique::<AdminAccount>(&key).is_none() {
                    tx.insert(admin.clone())?;
                    summary.admins += 1;
                }
            }

            let mut hospital_ids = Vec::with_capacity(fixture.hospitals.len());
            for new in &fixture.hospitals {
                let existing = tx.all::<Hospital>().find(|h| h.name == new.name).map(|h| h.id);
                let id = match existing {
                    Some(id) => id,
                    None => {
                        let hospital = Hospital {
                            id: HospitalId::new(),
                            name: new.name.clone(),
                            address: new.address.clone(),
                            phone: new.phone.clone(),
                            latitude: new.latitude,
                            longitude: new.longitude,
                            description: new.description.clone(),
                            timezone: new.timezone.clone(),
                        };
                        tx.insert(hospital.clone())?;
                        summary.hospitals += 1;
                        hospital.id
                    }
                };
                hospital_ids.push((new.name.as_str(), id));
            }

            for (i, doc) in fixture.doctors.iter().enumerate() {
                let hospital_id = hospital_ids
                    .iter()
                    .find(|(name, _)| *name == doc.hospital)
                    .map(|(_, id)| *id)
                    .ok_or_else(|| invalid(format!("doctors[{i}].hospital"), "unknown hospital"))?;
                let exists = tx
                    .all::<Doctor>()
                    .any(|d| d.hospital_id == hospital_id && d.name == doc.name);
                if !exists {
                    let doctor = build_doctor(doc.to_new(hospital_id))
                        .map_err(|e| invalid(field_path("doctors", i, &e), e))?;
                    tx.insert(doctor)?;
                    summary.doctors += 1;
                }
            }

            for schedule in &fixture.health_schedules {
                match tx.get::<HealthSchedule>(&schedule.group) {
                    None => tx.insert(schedule.clone())?,
                    Some(current) if current != schedule => tx.update(schedule.clone())?,
                    Some(_) => continue,
                }
                summary.schedules += 1;
            }
            Ok(summary)
        })?;
        tracing::info!(?summary, force, "seed fixture loaded");
        Ok(summary)
    }
}
