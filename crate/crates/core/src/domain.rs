//! Entities stored by the service.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::calendar::{TimeOfDay, TimeSlot, WorkingHours};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Uuid);

        impl $name {
            #[allow(clippy::new_without_default)]
            pub fn new() -> Self {
                Self(Uuid::new_v4())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }

        impl FromStr for $name {
            type Err = uuid::Error;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Uuid::parse_str(s).map(Self)
            }
        }
    };
}

id_type!(PatientId);
id_type!(AdminId);
id_type!(HospitalId);
id_type!(DoctorId);
id_type!(AppointmentId);
id_type!(NotificationId);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patient {
    pub id: PatientId,
    pub username: String,
    pub email: String,
    /// PHC-formatted salted hash.
    pub password_digest: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminAccount {
    pub id: AdminId,
    pub username: String,
    pub password_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hospital {
    pub id: HospitalId,
    pub name: String,
    pub address: String,
    pub phone: String,
    pub latitude: f64,
    pub longitude: f64,
    pub description: String,
    /// IANA zone name; working hours of the hospital's doctors are local to it.
    pub timezone: String,
}

impl Hospital {
    pub fn contact_uri(&self) -> String {
        format!("tel:{}", self.phone)
    }

    pub fn map_url(&self) -> String {
        format!(
            "https://www.google.com/maps?q={},{}",
            coordinate(self.latitude),
            coordinate(self.longitude)
        )
    }
}

/// Decimal degrees, always with a fractional part (`73.0`, not `73`).
fn coordinate(value: f64) -> String {
    let text = value.to_string();
    if text.contains('.') {
        text
    } else {
        text + ".0"
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Doctor {
    pub id: DoctorId,
    pub hospital_id: HospitalId,
    pub name: String,
    pub specialty: String,
    pub phone: String,
    pub email: String,
    pub working_hours: WorkingHours,
    pub active: bool,
}

impl Doctor {
    pub fn phone_uri(&self) -> String {
        format!("tel:{}", self.phone)
    }

    pub fn email_uri(&self) -> String {
        format!("mailto:{}", self.email)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppointmentState {
    Reserved,
    CancelledByPatient,
    CancelledByStaff,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Appointment {
    pub id: AppointmentId,
    pub patient_id: PatientId,
    pub slot: TimeSlot,
    pub state: AppointmentState,
    pub created_at: DateTime<Utc>,
    pub cancelled_at: Option<DateTime<Utc>>,
}

impl Appointment {
    pub fn is_reserved(&self) -> bool {
        self.state == AppointmentState::Reserved
    }

    /// Key under which at most one reserved appointment may exist.
    pub fn slot_key(&self) -> (DoctorId, NaiveDate, TimeOfDay) {
        (self.slot.doctor_id, self.slot.date, self.slot.start)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotificationKind {
    BookingConfirmed,
    AppointmentCancelled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub id: NotificationId,
    pub patient_id: PatientId,
    pub kind: NotificationKind,
    pub appointment_id: AppointmentId,
    pub message: String,
    pub created_at: DateTime<Utc>,
    pub read: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    Childhood,
    Adolescent,
    Adult,
    Senior,
}

impl AgeGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            AgeGroup::Childhood => "Childhood",
            AgeGroup::Adolescent => "Adolescent",
            AgeGroup::Adult => "Adult",
            AgeGroup::Senior => "Senior",
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact, case-sensitive match on the group name.
impl FromStr for AgeGroup {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            AgeGroup::Childhood,
            AgeGroup::Adolescent,
            AgeGroup::Adult,
            AgeGroup::Senior,
        ]
        .into_iter()
        .find(|g| g.as_str() == s)
        .ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub title: String,
    pub guidance: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthSchedule {
    pub group: AgeGroup,
    pub entries: Vec<ScheduleEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Patient,
    Admin,
}

/// An authenticated identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "role", content = "id", rename_all = "snake_case")]
pub enum Principal {
    Patient(PatientId),
    Admin(AdminId),
}

impl Principal {
    pub fn role(&self) -> Role {
        match self {
            Principal::Patient(_) => Role::Patient,
            Principal::Admin(_) => Role::Admin,
        }
    }

    pub fn id(&self) -> Uuid {
        match self {
            Principal::Patient(id) => id.0,
            Principal::Admin(id) => id.0,
        }
    }
}

/// Stored session. The bearer token itself is never persisted, only its
/// SHA-256 digest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token_digest: String,
    pub principal: Principal,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}
