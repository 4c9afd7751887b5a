//! Hospital and doctor catalog plus static content.
//!
//! Reads are open to any authenticated principal; every mutation requires an
//! admin. Doctors cannot sign themselves up: the only way in is
//! [`Medbook::add_doctor`] with an admin principal.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::calendar::WorkingHours;
use crate::domain::{
    AdminId, AgeGroup, Doctor, DoctorId, HealthSchedule, Hospital, HospitalId, Patient, PatientId,
    Principal,
};
use crate::error::{Error, Result};
use crate::store::{transact, Transaction};
use crate::validation::{validate_email, validate_phone};
use crate::{About, Medbook};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewHospital {
    pub name: String,
    #[serde(default)]
    pub address: String,
    pub phone: String,
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_timezone")]
    pub timezone: String,
}

pub fn default_timezone() -> String {
    "UTC".to_owned()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewDoctor {
    pub hospital_id: HospitalId,
    pub name: String,
    #[serde(default)]
    pub specialty: String,
    pub phone: String,
    pub email: String,
    #[serde(default)]
    pub working_hours: WorkingHours,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HospitalSummary {
    pub id: HospitalId,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HospitalDetails {
    #[serde(flatten)]
    pub hospital: Hospital,
    pub contact_uri: String,
    pub map_url: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoctorSummary {
    pub id: DoctorId,
    pub name: String,
    pub specialty: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DoctorDetails {
    #[serde(flatten)]
    pub doctor: Doctor,
    pub hospital_name: String,
    pub phone_uri: String,
    pub email_uri: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatientSummary {
    pub id: PatientId,
    pub username: String,
    pub email: String,
    pub created_at: chrono::DateTime<chrono::Utc>,
}

pub(crate) fn require_admin(principal: &Principal) -> Result<AdminId> {
    match principal {
        Principal::Admin(id) => Ok(*id),
        Principal::Patient(_) => Err(Error::Forbidden),
    }
}

fn by_name_then_id<K: Ord>(a: (&str, K), b: (&str, K)) -> Ordering {
    a.0.cmp(b.0).then(a.1.cmp(&b.1))
}

pub(crate) fn check_hospital(new: &NewHospital) -> Result<()> {
    if new.name.trim().is_empty() {
        return Err(Error::invalid("name", "must not be empty"));
    }
    if !validate_phone(&new.phone) {
        return Err(Error::invalid("phone", "must be digits with an optional leading +"));
    }
    let lat_ok = new.latitude.is_finite() && (-90.0..=90.0).contains(&new.latitude);
    let lon_ok = new.longitude.is_finite() && (-180.0..=180.0).contains(&new.longitude);
    if !lat_ok || !lon_ok {
        return Err(Error::InvalidCoordinates);
    }
    if new.timezone.parse::<chrono_tz::Tz>().is_err() {
        return Err(Error::invalid("timezone", "is not a known IANA time zone"));
    }
    Ok(())
}

pub(crate) fn build_doctor(new: NewDoctor) -> Result<Doctor> {
    if new.name.trim().is_empty() {
        return Err(Error::invalid("name", "must not be empty"));
    }
    if !validate_phone(&new.phone) {
        return Err(Error::invalid("phone", "must be digits with an optional leading +"));
    }
    if !validate_email(&new.email) {
        return Err(Error::InvalidEmail);
    }
    Ok(Doctor {
        id: DoctorId::new(),
        hospital_id: new.hospital_id,
        name: new.name,
        specialty: new.specialty,
        phone: new.phone,
        email: new.email,
        working_hours: new.working_hours.normalized()?,
        active: true,
    })
}

fn hospital_of<'t>(tx: &'t Transaction, id: &HospitalId) -> Result<&'t Hospital> {
    tx.get::<Hospital>(id).ok_or(Error::NotFound("hospital"))
}

impl Medbook {
    pub fn add_hospital(&self, principal: &Principal, new: NewHospital) -> Result<HospitalId> {
        require_admin(principal)?;
        check_hospital(&new)?;
        let hospital = Hospital {
            id: HospitalId::new(),
            name: new.name,
            address: new.address,
            phone: new.phone,
            latitude: new.latitude,
            longitude: new.longitude,
            description: new.description,
            timezone: new.timezone,
        };
        transact(self.store(), |tx| tx.insert(hospital.clone()))?;
        tracing::info!(hospital = %hospital.id, "hospital added");
        Ok(hospital.id)
    }

    /// All hospitals, by name then id.
    pub fn list_hospitals(&self, _viewer: &Principal) -> Vec<HospitalSummary> {
        let tx = self.store().begin();
        let mut list: Vec<HospitalSummary> = tx
            .all::<Hospital>()
            .map(|h| HospitalSummary {
                id: h.id,
                name: h.name.clone(),
            })
            .collect();
        list.sort_by(|a, b| by_name_then_id((&a.name, a.id), (&b.name, b.id)));
        list
    }

    pub fn get_hospital(&self, _viewer: &Principal, id: HospitalId) -> Result<HospitalDetails> {
        let tx = self.store().begin();
        let hospital = hospital_of(&tx, &id)?.clone();
        Ok(HospitalDetails {
            contact_uri: hospital.contact_uri(),
            map_url: hospital.map_url(),
            hospital,
        })
    }

    pub fn add_doctor(&self, principal: &Principal, new: NewDoctor) -> Result<DoctorId> {
        require_admin(principal)?;
        let doctor = build_doctor(new)?;
        transact(self.store(), |tx| {
            hospital_of(tx, &doctor.hospital_id)?;
            tx.insert(doctor.clone())?;
            Ok::<_, Error>(())
        })?;
        tracing::info!(doctor = %doctor.id, hospital = %doctor.hospital_id, "doctor added");
        Ok(doctor.id)
    }

    /// Deactivated doctors disappear from patient listings and cannot be
    /// booked; their existing appointments are left alone.
    pub fn set_doctor_active(&self, principal: &Principal, id: DoctorId, active: bool) -> Result<Doctor> {
        require_admin(principal)?;
        transact(self.store(), |tx| {
            let mut doctor = tx.get::<Doctor>(&id).ok_or(Error::NotFound("doctor"))?.clone();
            doctor.active = active;
            tx.update(doctor.clone())?;
            Ok(doctor)
        })
    }

    /// Active doctors of one hospital, by name then id.
    pub fn list_doctors(&self, _viewer: &Principal, hospital_id: HospitalId) -> Result<Vec<DoctorSummary>> {
        let tx = self.store().begin();
        hospital_of(&tx, &hospital_id)?;
        let mut list: Vec<DoctorSummary> = tx
            .all::<Doctor>()
            .filter(|d| d.hospital_id == hospital_id && d.active)
            .map(|d| DoctorSummary {
                id: d.id,
                name: d.name.clone(),
                specialty: d.specialty.clone(),
            })
            .collect();
        list.sort_by(|a, b| by_name_then_id((&a.name, a.id), (&b.name, b.id)));
        Ok(list)
    }

    pub fn get_doctor(&self, _viewer: &Principal, id: DoctorId) -> Result<DoctorDetails> {
        let tx = self.store().begin();
        let doctor = tx.get::<Doctor>(&id).ok_or(Error::NotFound("doctor"))?.clone();
        let hospital_name = hospital_of(&tx, &doctor.hospital_id)?.name.clone();
        Ok(DoctorDetails {
            phone_uri: doctor.phone_uri(),
            email_uri: doctor.email_uri(),
            hospital_name,
            doctor,
        })
    }

    /// Admin view: every doctor, active or not, by name then id.
    pub fn list_all_doctors(&self, principal: &Principal) -> Result<Vec<Doctor>> {
        require_admin(principal)?;
        let tx = self.store().begin();
        let mut list: Vec<Doctor> = tx.all::<Doctor>().cloned().collect();
        list.sort_by(|a, b| by_name_then_id((&a.name, a.id), (&b.name, b.id)));
        Ok(list)
    }

    /// Admin view of registered patients, by username. Digests stay inside.
    pub fn list_patients(&self, principal: &Principal) -> Result<Vec<PatientSummary>> {
        require_admin(principal)?;
        let tx = self.store().begin();
        let mut list: Vec<PatientSummary> = tx
            .all::<Patient>()
            .map(|p| PatientSummary {
                id: p.id,
                username: p.username.clone(),
                email: p.email.clone(),
                created_at: p.created_at,
            })
            .collect();
        list.sort_by(|a, b| by_name_then_id((&a.username, a.id), (&b.username, b.id)));
        Ok(list)
    }

    pub fn list_health_schedule_groups(&self, _viewer: &Principal) -> Vec<AgeGroup> {
        // Table is keyed by group, so iteration order is the enum order.
        self.store()
            .begin()
            .all::<HealthSchedule>()
            .map(|s| s.group)
            .collect()
    }

    /// `group` must match a group name exactly, including case.
    pub fn get_health_schedule(&self, _viewer: &Principal, group: &str) -> Result<HealthSchedule> {
        let group: AgeGroup = group.parse().map_err(|()| Error::NotFound("health schedule"))?;
        self.store()
            .begin()
            .get::<HealthSchedule>(&group)
            .cloned()
            .ok_or(Error::NotFound("health schedule"))
    }

    pub fn get_about(&self) -> About {
        self.settings.about.clone()
    }
}
