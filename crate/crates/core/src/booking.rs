//! Availability, reservation, cancellation and the notification feed.
//!
//! A reservation is a single transaction that inserts the appointment and
//! its confirmation notice together. Reserved appointments hold a unique key
//! on `(doctor, date, start)`, so when several patients race for one slot
//! the store lets exactly one commit through and the rest get
//! [`Error::SlotTaken`].
//!
//! Working hours and slots are wall-clock times in the hospital's zone;
//! "today" and "already started" are judged in that zone too.

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::calendar::{generate_slots, TimeOfDay, TimeSlot};
use crate::catalog::require_admin;
use crate::domain::{
    Appointment, AppointmentId, AppointmentState, Doctor, DoctorId, Hospital, Notification,
    NotificationId, NotificationKind, Patient, PatientId, Principal,
};
use crate::error::{Error, Result, BOOKED};
use crate::store::{transact, Transaction, UniqueKey};
use crate::Medbook;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotStatus {
    Free,
    Taken,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlotView {
    pub start: TimeOfDay,
    pub end: TimeOfDay,
    pub status: SlotStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Availability {
    pub doctor_id: DoctorId,
    pub date: NaiveDate,
    pub slot_minutes: u32,
    pub timezone: String,
    pub slots: Vec<SlotView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Booked {
    pub appointment: Appointment,
    pub message: &'static str,
}

/// An appointment with the names a listing needs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AppointmentView {
    #[serde(flatten)]
    pub appointment: Appointment,
    pub doctor_name: String,
    pub hospital_name: String,
    pub patient_username: String,
}

/// Optional filters for the admin appointment listing. Date bounds are
/// inclusive.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppointmentFilter {
    pub doctor_id: Option<DoctorId>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

fn require_patient(principal: &Principal) -> Result<PatientId> {
    match principal {
        Principal::Patient(id) => Ok(*id),
        Principal::Admin(_) => Err(Error::Forbidden),
    }
}

fn zone_of(hospital: &Hospital) -> Tz {
    // Validated on insert; fall back rather than fail on legacy rows.
    hospital.timezone.parse().unwrap_or(Tz::UTC)
}

fn slot_start(slot: &TimeSlot) -> NaiveDateTime {
    slot.date.and_time(slot.start.to_naive().expect("slot starts before 24:00"))
}

fn fmt_slot(slot: &TimeSlot) -> String {
    format!("{} at {}", slot.date, slot.start)
}

struct DoctorContext<'t> {
    doctor: &'t Doctor,
    hospital: &'t Hospital,
    now_local: NaiveDateTime,
}

impl Medbook {
    fn doctor_context<'t>(&self, tx: &'t Transaction, doctor_id: DoctorId) -> Result<DoctorContext<'t>> {
        let doctor = tx
            .get::<Doctor>(&doctor_id)
            .filter(|d| d.active)
            .ok_or(Error::NotFound("doctor"))?;
        let hospital = tx
            .get::<Hospital>(&doctor.hospital_id)
            .ok_or(Error::NotFound("hospital"))?;
        let now_local = self.clock.now().with_timezone(&zone_of(hospital)).naive_local();
        Ok(DoctorContext {
            doctor,
            hospital,
            now_local,
        })
    }

    fn last_bookable_date(&self, today: NaiveDate) -> NaiveDate {
        today + chrono::Duration::days(i64::from(self.settings.booking_horizon_days))
    }

    /// Slots for one doctor on one date, each marked free or taken. Slots
    /// that have already started are left out.
    pub fn get_availability(&self, _viewer: &Principal, doctor_id: DoctorId, date: NaiveDate) -> Result<Availability> {
        let tx = self.store().begin();
        let ctx = self.doctor_context(&tx, doctor_id)?;
        let today = ctx.now_local.date();
        if date < today || date > self.last_bookable_date(today) {
            return Err(Error::DateOutOfRange);
        }
        let slots = generate_slots(doctor_id, &ctx.doctor.working_hours, date, self.settings.slot_minutes)
            .into_iter()
            .filter(|slot| slot_start(slot) > ctx.now_local)
            .map(|slot| {
                let key = UniqueKey::ReservedSlot {
                    doctor: doctor_id,
                    date,
                    start: slot.start,
                };
                let status = if tx.find_unique::<Appointment>(&key).is_some() {
                    SlotStatus::Taken
                } else {
                    SlotStatus::Free
                };
                SlotView {
                    start: slot.start,
                    end: slot.end(),
                    status,
                }
            })
            .collect();
        Ok(Availability {
            doctor_id,
            date,
            slot_minutes: self.settings.slot_minutes.get(),
            timezone: ctx.hospital.timezone.clone(),
            slots,
        })
    }

    /// Reserves a slot for the calling patient and posts a confirmation to
    /// their feed.
    pub fn book_appointment(
        &self,
        principal: &Principal,
        doctor_id: DoctorId,
        date: NaiveDate,
        start: TimeOfDay,
    ) -> Result<Booked> {
        let patient_id = require_patient(principal)?;
        let appointment = transact(self.store(), |tx| {
            tx.get::<Patient>(&patient_id).ok_or(Error::NotFound("patient"))?;
            let ctx = self.doctor_context(tx, doctor_id)?;
            let doctor_name = ctx.doctor.name.clone();
            let now_local = ctx.now_local;
            let today = now_local.date();
            if date > self.last_bookable_date(today) {
                return Err(Error::DateOutOfRange);
            }
            let slot = generate_slots(doctor_id, &ctx.doctor.working_hours, date, self.settings.slot_minutes)
                .into_iter()
                .find(|slot| slot.start == start)
                .ok_or(Error::InvalidSlot)?;
            if slot_start(&slot) <= now_local {
                return Err(Error::PastSlot);
            }
            let key = UniqueKey::ReservedSlot {
                doctor: doctor_id,
                date,
                start,
            };
            if tx.find_unique::<Appointment>(&key).is_some() {
                return Err(Error::SlotTaken);
            }
            if let Some(cap) = self.settings.daily_cap {
                // The count below is a predicate read; make any concurrent
                // appointment write force a retry.
                tx.guard::<Appointment>();
                let held = tx
                    .all::<Appointment>()
                    .filter(|a| a.patient_id == patient_id && a.is_reserved() && a.slot.date == date)
                    .count();
                if held >= cap as usize {
                    return Err(Error::DailyLimitReached);
                }
            }
            let now = self.clock.now();
            let appointment = Appointment {
                id: AppointmentId::new(),
                patient_id,
                slot,
                state: AppointmentState::Reserved,
                created_at: now,
                cancelled_at: None,
            };
            let notice = Notification {
                id: NotificationId::new(),
                patient_id,
                kind: NotificationKind::BookingConfirmed,
                appointment_id: appointment.id,
                message: format!("{BOOKED}: {} with {doctor_name}", fmt_slot(&appointment.slot)),
                created_at: now,
                read: false,
            };
            tx.insert(appointment.clone())?;
            tx.insert(notice)?;
            Ok(appointment)
        })?;
        tracing::info!(appointment = %appointment.id, doctor = %doctor_id, %date, %start, "appointment reserved");
        Ok(Booked {
            appointment,
            message: BOOKED,
        })
    }

    /// Cancels a reserved appointment. The owning patient cancels as
    /// themselves; an admin cancels on behalf of the clinic, which notifies
    /// the patient.
    pub fn cancel_appointment(&self, principal: &Principal, appointment_id: AppointmentId) -> Result<Appointment> {
        let cancelled = transact(self.store(), |tx| {
            let mut appointment = tx
                .get::<Appointment>(&appointment_id)
                .ok_or(Error::NotFound("appointment"))?
                .clone();
            let state = match principal {
                Principal::Patient(id) if *id == appointment.patient_id => AppointmentState::CancelledByPatient,
                Principal::Patient(_) => return Err(Error::Forbidden),
                Principal::Admin(_) => AppointmentState::CancelledByStaff,
            };
            if !appointment.is_reserved() {
                return Err(Error::AlreadyCancelled);
            }
            let now = self.clock.now();
            appointment.state = state;
            appointment.cancelled_at = Some(now);
            tx.update(appointment.clone())?;
            if state == AppointmentState::CancelledByStaff {
                let doctor_name = tx
                    .get::<Doctor>(&appointment.slot.doctor_id)
                    .map_or_else(|| "your doctor".to_owned(), |d| d.name.clone());
                tx.insert(Notification {
                    id: NotificationId::new(),
                    patient_id: appointment.patient_id,
                    kind: NotificationKind::AppointmentCancelled,
                    appointment_id: appointment.id,
                    message: format!(
                        "Your appointment with {doctor_name} on {} was cancelled by the clinic",
                        fmt_slot(&appointment.slot)
                    ),
                    created_at: now,
                    read: false,
                })?;
            }
            Ok(appointment)
        })?;
        tracing::info!(appointment = %cancelled.id, state = ?cancelled.state, "appointment cancelled");
        Ok(cancelled)
    }

    fn view(tx: &Transaction, appointment: &Appointment) -> AppointmentView {
        let doctor = tx.get::<Doctor>(&appointment.slot.doctor_id);
        let hospital = doctor.and_then(|d| tx.get::<Hospital>(&d.hospital_id));
        let patient = tx.get::<Patient>(&appointment.patient_id);
        AppointmentView {
            appointment: appointment.clone(),
            doctor_name: doctor.map(|d| d.name.clone()).unwrap_or_default(),
            hospital_name: hospital.map(|h| h.name.clone()).unwrap_or_default(),
            patient_username: patient.map(|p| p.username.clone()).unwrap_or_default(),
        }
    }

    /// The caller's appointments, cancelled ones included, newest first.
    pub fn list_patient_appointments(&self, principal: &Principal) -> Result<Vec<AppointmentView>> {
        let patient_id = require_patient(principal)?;
        let tx = self.store().begin();
        let mut list: Vec<AppointmentView> = tx
            .all::<Appointment>()
            .filter(|a| a.patient_id == patient_id)
            .map(|a| Self::view(&tx, a))
            .collect();
        list.sort_by(|a, b| {
            let (a, b) = (&a.appointment, &b.appointment);
            (b.created_at, b.slot.date, b.slot.start, b.id).cmp(&(a.created_at, a.slot.date, a.slot.start, a.id))
        });
        Ok(list)
    }

    /// Admin listing across all patients, in slot order.
    pub fn list_all_appointments(&self, principal: &Principal, filter: &AppointmentFilter) -> Result<Vec<AppointmentView>> {
        require_admin(principal)?;
        let tx = self.store().begin();
        let mut list: Vec<AppointmentView> = tx
            .all::<Appointment>()
            .filter(|a| filter.doctor_id.is_none_or(|d| a.slot.doctor_id == d))
            .filter(|a| filter.from.is_none_or(|from| a.slot.date >= from))
            .filter(|a| filter.to.is_none_or(|to| a.slot.date <= to))
            .map(|a| Self::view(&tx, a))
            .collect();
        list.sort_by(|a, b| {
            let key = |v: &AppointmentView| {
                (
                    v.appointment.slot.date,
                    v.appointment.slot.start,
                    v.doctor_name.clone(),
                    v.appointment.created_at,
                    v.appointment.id,
                )
            };
            key(a).cmp(&key(b))
        });
        Ok(list)
    }

    /// The caller's notifications, newest first.
    pub fn list_notifications(&self, principal: &Principal, unread_only: bool) -> Result<Vec<Notification>> {
        let patient_id = require_patient(principal)?;
        let tx = self.store().begin();
        let mut list: Vec<Notification> = tx
            .all::<Notification>()
            .filter(|n| n.patient_id == patient_id && (!unread_only || !n.read))
            .cloned()
            .collect();
        list.sort_by(|a, b| (b.created_at, b.id).cmp(&(a.created_at, a.id)));
        Ok(list)
    }

    pub fn mark_notification_read(&self, principal: &Principal, id: NotificationId) -> Result<Notification> {
        let patient_id = require_patient(principal)?;
        transact(self.store(), |tx| {
            let mut notice = tx
                .get::<Notification>(&id)
                .ok_or(Error::NotFound("notification"))?
                .clone();
            if notice.patient_id != patient_id {
                return Err(Error::Forbidden);
            }
            if !notice.read {
                notice.read = true;
                tx.update(notice.clone())?;
            }
            Ok(notice)
        })
    }

    /// Local "now" at a hospital; exposed for clients that need to decide
    /// which date to query first.
    pub fn hospital_now(&self, hospital: &Hospital) -> DateTime<Tz> {
        let now: DateTime<Utc> = self.clock.now();
        now.with_timezone(&zone_of(hospital))
    }
}
