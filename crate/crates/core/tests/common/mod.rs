#![allow(dead_code)]

use std::sync::Arc;

use chrono::{NaiveDate, TimeZone, Utc};
use medbook_core::calendar::{TimeOfDay, WorkInterval, Weekday, WorkingHours};
use medbook_core::catalog::{NewDoctor, NewHospital};
use medbook_core::domain::{DoctorId, HospitalId, Principal};
use medbook_core::store::{FileOptions, FileStore, MemoryStore, Storage};
use medbook_core::{HashCost, ManualClock, Medbook, Settings};

pub const PASSWORD: &str = "correct-horse-battery";

pub enum Backend {
    Memory,
    File(tempfile::TempDir),
}

impl Backend {
    pub fn memory() -> Self {
        Backend::Memory
    }

    pub fn file() -> Self {
        Backend::File(tempfile::tempdir().unwrap())
    }

    pub fn open(&self) -> Arc<dyn Storage> {
        match self {
            Backend::Memory => Arc::new(MemoryStore::new()),
            Backend::File(dir) => Arc::new(
                FileStore::open_with(dir.path(), FileOptions { sync: false, ..FileOptions::default() }).unwrap(),
            ),
        }
    }
}

pub fn t(s: &str) -> TimeOfDay {
    s.parse().unwrap()
}

/// Friday 2026-10-16, 08:00 UTC.
pub fn start_instant() -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 10, 16, 8, 0, 0).unwrap()
}

pub fn monday() -> NaiveDate {
    NaiveDate::from_ymd_opt(2026, 10, 19).unwrap()
}

pub fn settings() -> Settings {
    Settings {
        hash_cost: HashCost::MINIMAL,
        ..Settings::default()
    }
}

pub struct World {
    pub app: Medbook,
    pub clock: Arc<ManualClock>,
    pub admin: Principal,
    pub hospital: HospitalId,
    pub doctor: DoctorId,
}

pub fn app_on(store: Arc<dyn Storage>) -> (Medbook, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(start_instant()));
    (Medbook::new(store, clock.clone(), settings()), clock)
}

/// One hospital in Karachi with one doctor working 09:00-11:00 and
/// 14:00-15:00 every day.
pub fn world(store: Arc<dyn Storage>) -> World {
    let (app, clock) = app_on(store);
    app.ensure_admin("root", PASSWORD).unwrap();
    let admin = app.admin_login("root", PASSWORD).unwrap().principal;
    let hospital = app
        .add_hospital(
            &admin,
            NewHospital {
                name: "City Care".into(),
                address: "Blue Area".into(),
                phone: "+92511234567".into(),
                latitude: 33.6,
                longitude: 73.0,
                description: String::new(),
                timezone: "Asia/Karachi".into(),
            },
        )
        .unwrap();
    let doctor = app.add_doctor(&admin, new_doctor(hospital, "Dr. Khan")).unwrap();
    World {
        app,
        clock,
        admin,
        hospital,
        doctor,
    }
}

pub fn new_doctor(hospital: HospitalId, name: &str) -> NewDoctor {
    let hours = WorkingHours::new(Weekday::ALL.iter().map(|&d| {
        (
            d,
            vec![WorkInterval::new(t("09:00"), t("11:00")), WorkInterval::new(t("14:00"), t("15:00"))],
        )
    }))
    .unwrap();
    NewDoctor {
        hospital_id: hospital,
        name: name.into(),
        specialty: "General practice".into(),
        phone: "0511234567".into(),
        email: "doctor@clinic.pk".into(),
        working_hours: hours,
    }
}

pub fn register(app: &Medbook, name: &str) -> Principal {
    let reg = app
        .register_patient(name, &format!("{name}@mail.com"), PASSWORD, PASSWORD)
        .unwrap();
    Principal::Patient(reg.patient_id)
}
