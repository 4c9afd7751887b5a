//! Service behaviour, run against both store implementations.

mod common;

use std::collections::HashMap;

use common::*;
use medbook_core::booking::{AppointmentFilter, SlotStatus};
use medbook_core::catalog::NewHospital;
use medbook_core::domain::{
    Appointment, AppointmentState, NotificationKind, Principal,
};
use medbook_core::error::{BOOKED, REGISTERED, SIGNIN_FAILED};
use medbook_core::store::{export, Storage};
use medbook_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn signup_and_login(backend: Backend) {
    let w = world(backend.open());
    let reg = w.app.register_patient("sara", "sara@mail.com", PASSWORD, PASSWORD).unwrap();
    assert_eq!(reg.message, REGISTERED);

    let err = w.app.register_patient("omar", "omar@mail.com", PASSWORD, "different1").unwrap_err();
    assert_eq!(err.to_string(), "passwords didn't match");
    let err = w.app.register_patient("omar", "omar@mail", PASSWORD, PASSWORD).unwrap_err();
    assert_eq!(err.to_string(), "email is not valid");
    assert_eq!(
        w.app.register_patient("sara", "other@mail.com", PASSWORD, PASSWORD).unwrap_err(),
        Error::DuplicateUsername
    );
    assert_eq!(
        w.app.register_patient("sarah", "SARA@mail.com", PASSWORD, PASSWORD).unwrap_err(),
        Error::DuplicateEmail
    );

    assert_eq!(w.app.login("sara", "wrong-password").unwrap_err().to_string(), SIGNIN_FAILED);
    assert_eq!(w.app.login("nobody", PASSWORD).unwrap_err().to_string(), SIGNIN_FAILED);
    let session = w.app.login("sara", PASSWORD).unwrap();
    assert_eq!(session.principal, Principal::Patient(reg.patient_id));
    assert_eq!(w.app.authenticate(&session.token).unwrap(), session.principal);
    w.app.logout(&session.token).unwrap();
    assert_eq!(w.app.authenticate(&session.token).unwrap_err(), Error::UnknownToken);
}

fn session_expiry(backend: Backend) {
    let w = world(backend.open());
    register(&w.app, "sara");
    let session = w.app.login("sara", PASSWORD).unwrap();
    w.clock.advance(chrono::Duration::hours(24) + chrono::Duration::seconds(1));
    assert_eq!(w.app.authenticate(&session.token).unwrap_err(), Error::ExpiredToken);
    // The admin session opened while building the world expired as well.
    assert_eq!(w.app.purge_expired_sessions().unwrap(), 2);
}

fn booking_flow(backend: Backend) {
    let w = world(backend.open());
    let sara = register(&w.app, "sara");
    let omar = register(&w.app, "omar");

    let hospitals = w.app.list_hospitals(&sara);
    assert_eq!(hospitals.len(), 1);
    let doctors = w.app.list_doctors(&sara, hospitals[0].id).unwrap();
    assert_eq!(doctors[0].id, w.doctor);
    let details = w.app.get_doctor(&sara, w.doctor).unwrap();
    assert_eq!(details.hospital_name, "City Care");

    let booked = w.app.book_appointment(&sara, w.doctor, monday(), t("10:00")).unwrap();
    assert_eq!(booked.message, BOOKED);
    assert_eq!(
        w.app.book_appointment(&omar, w.doctor, monday(), t("10:00")).unwrap_err(),
        Error::SlotTaken
    );
    let avail = w.app.get_availability(&omar, w.doctor, monday()).unwrap();
    let taken: Vec<String> = avail
        .slots
        .iter()
        .filter(|s| s.status == SlotStatus::Taken)
        .map(|s| s.start.to_string())
        .collect();
    assert_eq!(taken, ["10:00"]);

    assert_eq!(
        w.app.cancel_appointment(&omar, booked.appointment.id).unwrap_err(),
        Error::Forbidden
    );
    let cancelled = w.app.cancel_appointment(&sara, booked.appointment.id).unwrap();
    assert_eq!(cancelled.state, AppointmentState::CancelledByPatient);
    assert_eq!(
        w.app.cancel_appointment(&sara, booked.appointment.id).unwrap_err(),
        Error::AlreadyCancelled
    );
    w.app.book_appointment(&omar, w.doctor, monday(), t("10:00")).unwrap();

    let mine = w.app.list_patient_appointments(&sara).unwrap();
    assert_eq!(mine.len(), 1);
    assert_eq!(mine[0].appointment.state, AppointmentState::CancelledByPatient);
    let all = w.app.list_all_appointments(&w.admin, &AppointmentFilter::default()).unwrap();
    assert_eq!(all.len(), 2);
}

fn staff_cancellation_notifies(backend: Backend) {
    let w = world(backend.open());
    let sara = register(&w.app, "sara");
    let booked = w.app.book_appointment(&sara, w.doctor, monday(), t("14:30")).unwrap();
    w.app.cancel_appointment(&w.admin, booked.appointment.id).unwrap();

    let feed = w.app.list_notifications(&sara, false).unwrap();
    let kinds: Vec<_> = feed.iter().map(|n| n.kind).collect();
    assert!(kinds.contains(&NotificationKind::AppointmentCancelled));
    assert!(kinds.contains(&NotificationKind::BookingConfirmed));
    let cancel_note = feed
        .iter()
        .find(|n| n.kind == NotificationKind::AppointmentCancelled)
        .unwrap();
    assert!(cancel_note.message.contains("Dr. Khan"));
    w.app.mark_notification_read(&sara, cancel_note.id).unwrap();
    assert_eq!(w.app.list_notifications(&sara, true).unwrap().len(), 1);
}

/// Every reservation yields one confirmation and every staff cancellation
/// one cancellation notice; patient cancellations yield none.
fn notification_completeness(backend: Backend) {
    let w = world(backend.open());
    let patients: Vec<Principal> = (0..5).map(|i| register(&w.app, &format!("p{i}"))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let starts = ["09:00", "09:30", "10:00", "10:30", "14:00", "14:30"];
    for _ in 0..120 {
        let who = patients[rng.gen_range(0..patients.len())];
        let day = monday() + chrono::Duration::days(rng.gen_range(0..4));
        match rng.gen_range(0..3) {
            0 | 1 => {
                let _ = w.app.book_appointment(&who, w.doctor, day, t(starts[rng.gen_range(0..starts.len())]));
            }
            _ => {
                let tx = w.app.store().begin();
                let live: Vec<_> = tx.all::<Appointment>().filter(|a| a.is_reserved()).map(|a| a.id).collect();
                drop(tx);
                if let Some(&id) = live.get(rng.gen_range(0..live.len().max(1))) {
                    let by = if rng.gen_bool(0.5) { w.admin } else { Principal::Patient(w.app.store().begin().get::<Appointment>(&id).unwrap().patient_id) };
                    w.app.cancel_appointment(&by, id).unwrap();
                }
            }
        }
    }

    let tx = w.app.store().begin();
    let mut confirmations: HashMap<_, usize> = HashMap::new();
    let mut cancellations: HashMap<_, usize> = HashMap::new();
    for n in tx.all::<medbook_core::domain::Notification>() {
        let a = tx.get::<Appointment>(&n.appointment_id).expect("notification points at an appointment");
        assert_eq!(n.patient_id, a.patient_id);
        match n.kind {
            NotificationKind::BookingConfirmed => *confirmations.entry(a.id).or_default() += 1,
            NotificationKind::AppointmentCancelled => *cancellations.entry(a.id).or_default() += 1,
        }
    }
    for a in tx.all::<Appointment>() {
        assert_eq!(confirmations.get(&a.id), Some(&1));
        let expected = usize::from(a.state == AppointmentState::CancelledByStaff);
        assert_eq!(cancellations.get(&a.id).copied().unwrap_or(0), expected);
    }
    assert!(tx.count::<Appointment>() > 10);
}

/// At most one reserved appointment per slot, whatever the history.
fn reserved_slots_unique(store: &dyn Storage) {
    let tx = store.begin();
    let mut seen = std::collections::HashSet::new();
    for a in tx.all::<Appointment>().filter(|a| a.is_reserved()) {
        assert!(seen.insert(a.slot_key()), "double booking of {:?}", a.slot);
    }
}

fn past_and_horizon(backend: Backend) {
    let w = world(backend.open());
    let sara = register(&w.app, "sara");
    // 13:00 in Karachi on Friday: the morning has passed, 14:00 has not.
    let today = chrono::NaiveDate::from_ymd_opt(2026, 10, 16).unwrap();
    assert_eq!(w.app.book_appointment(&sara, w.doctor, today, t("10:00")).unwrap_err(), Error::PastSlot);
    w.app.book_appointment(&sara, w.doctor, today, t("14:00")).unwrap();
    let yesterday = today.pred_opt().unwrap();
    assert_eq!(w.app.book_appointment(&sara, w.doctor, yesterday, t("14:00")).unwrap_err(), Error::PastSlot);
    let far = today + chrono::Duration::days(91);
    assert_eq!(w.app.book_appointment(&sara, w.doctor, far, t("14:00")).unwrap_err(), Error::DateOutOfRange);
    assert_eq!(w.app.book_appointment(&sara, w.doctor, monday(), t("09:10")).unwrap_err(), Error::InvalidSlot);
    reserved_slots_unique(w.app.store());
}

macro_rules! service_suite {
    ($module:ident, $backend:expr) => {
        mod $module {
            use super::*;

            #[test]
            fn signup_and_login() {
                super::signup_and_login($backend);
            }

            #[test]
            fn session_expiry() {
                super::session_expiry($backend);
            }

            #[test]
            fn booking_flow() {
                super::booking_flow($backend);
            }

            #[test]
            fn staff_cancellation_notifies() {
                super::staff_cancellation_notifies($backend);
            }

            #[test]
            fn notification_completeness() {
                super::notification_completeness($backend);
            }

            #[test]
            fn past_and_horizon() {
                super::past_and_horizon($backend);
            }
        }
    };
}

service_suite!(memory, Backend::memory());
service_suite!(file, Backend::file());

#[test]
fn file_store_survives_reopen() {
    let backend = Backend::file();
    let (before, appointment) = {
        let w = world(backend.open());
        let sara = register(&w.app, "sara");
        let booked = w.app.book_appointment(&sara, w.doctor, monday(), t("09:00")).unwrap();
        (export(w.app.store()), booked.appointment)
    };
    let store = backend.open();
    assert_eq!(export(store.as_ref()), before);
    let (app, _clock) = app_on(store);
    let sara = app.login("sara", PASSWORD).unwrap().principal;
    let mine = app.list_patient_appointments(&sara).unwrap();
    assert_eq!(mine[0].appointment, appointment);
    assert_eq!(
        app.book_appointment(&register(&app, "omar"), appointment.slot.doctor_id, monday(), t("09:00"))
            .unwrap_err(),
        Error::SlotTaken
    );
}

#[test]
fn store_files_hold_no_plaintext_password() {
    let backend = Backend::file();
    {
        let w = world(backend.open());
        register(&w.app, "sara");
        w.app.login("sara", PASSWORD).unwrap();
    }
    let Backend::File(dir) = &backend else { unreachable!() };
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let bytes = std::fs::read(entry.unwrap().path()).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(!text.contains(PASSWORD));
    }
}

#[test]
fn memory_and_file_agree_on_outcomes() {
    fn run(backend: Backend) -> Vec<String> {
        let w = world(backend.open());
        let patients: Vec<_> = (0..3).map(|i| register(&w.app, &format!("p{i}"))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut log = Vec::new();
        for _ in 0..60 {
            let who = patients[rng.gen_range(0..3)];
            let start = ["09:00", "09:30", "14:00"][rng.gen_range(0..3)];
            let outcome = w.app.book_appointment(&who, w.doctor, monday(), t(start));
            log.push(match outcome {
                Ok(b) => {
                    if rng.gen_bool(0.4) {
                        w.app.cancel_appointment(&w.admin, b.appointment.id).unwrap();
                    }
                    "ok".to_owned()
                }
                Err(e) => e.code().to_owned(),
            });
        }
        log
    }
    assert_eq!(run(Backend::memory()), run(Backend::file()));
}

#[derive(Clone, Debug)]
enum AdminAction {
    AddHospital,
    AddDoctor,
    Deactivate,
    ListDoctors,
    ListPatients,
    ListAppointments,
    CancelOthers,
}

fn admin_action() -> impl Strategy<Value = AdminAction> {
    prop_oneof![
        Just(AdminAction::AddHospital),
        Just(AdminAction::AddDoctor),
        Just(AdminAction::Deactivate),
        Just(AdminAction::ListDoctors),
        Just(AdminAction::ListPatients),
        Just(AdminAction::ListAppointments),
        Just(AdminAction::CancelOthers),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Patients are refused every staff operation and the store is left
    /// exactly as it was.
    #[test]
    fn patients_cannot_act_as_staff(actions in proptest::collection::vec(admin_action(), 1..12)) {
        let w = world(Backend::memory().open());
        let sara = register(&w.app, "sara");
        let omar = register(&w.app, "omar");
        let theirs = w.app.book_appointment(&omar, w.doctor, monday(), t("09:00")).unwrap().appointment.id;
        let before = export(w.app.store());
        for action in actions {
            let err = match action {
                AdminAction::AddHospital => w.app.add_hospital(&sara, NewHospital {
                    name: "Rogue".into(), address: String::new(), phone: "123".into(),
                    latitude: 0.0, longitude: 0.0, description: String::new(), timezone: "UTC".into(),
                }).map(|_| ()),
                AdminAction::AddDoctor => w.app.add_doctor(&sara, new_doctor(w.hospital, "Dr. Rogue")).map(|_| ()),
                AdminAction::Deactivate => w.app.set_doctor_active(&sara, w.doctor, false).map(|_| ()),
                AdminAction::ListDoctors => w.app.list_all_doctors(&sara).map(|_| ()),
                AdminAction::ListPatients => w.app.list_patients(&sara).map(|_| ()),
                AdminAction::ListAppointments => w.app.list_all_appointments(&sara, &AppointmentFilter::default()).map(|_| ()),
                AdminAction::CancelOthers => w.app.cancel_appointment(&sara, theirs).map(|_| ()),
            }.unwrap_err();
            prop_assert_eq!(err, Error::Forbidden);
        }
        prop_assert_eq!(export(w.app.store()), before);
    }
}
