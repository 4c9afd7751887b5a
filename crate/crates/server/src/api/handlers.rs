use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::IntoResponse;
use chrono::NaiveDate;
use medbook_core::auth::{IssuedSession, Registered};
use medbook_core::booking::{AppointmentFilter, AppointmentView, Availability, Booked};
use medbook_core::calendar::TimeOfDay;
use medbook_core::catalog::{
    DoctorDetails, DoctorSummary, HospitalDetails, HospitalSummary, NewDoctor, NewHospital, PatientSummary,
};
use medbook_core::domain::{
    AgeGroup, Appointment, AppointmentId, Doctor, DoctorId, HealthSchedule, HospitalId, Notification, NotificationId,
};
use medbook_core::{About, Medbook};
use serde::Deserialize;
use serde_json::{json, Value};

use super::error::ApiError;
use super::extract::{bearer, AdminCaller, Caller, Json, Path, Query};
use super::AppState;

type ApiResult<T> = Result<T, ApiError>;
type Reply<T> = ApiResult<axum::Json<T>>;
type Created<T> = ApiResult<(StatusCode, axum::Json<T>)>;

/// Runs a service call off the async workers; password hashing and store
/// commits both block.
async fn blocking<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Medbook) -> medbook_core::Result<T> + Send + 'static,
{
    let app = state.app.clone();
    match tokio::task::spawn_blocking(move || f(&app)).await {
        Ok(result) => result.map_err(ApiError::from),
        Err(err) => {
            tracing::error!(error = %err, "service task failed");
            Err(ApiError::internal())
        }
    }
}

async fn reply<T, F>(state: &AppState, f: F) -> Reply<T>
where
    T: Send + 'static,
    F: FnOnce(&Medbook) -> medbook_core::Result<T> + Send + 'static,
{
    blocking(state, f).await.map(axum::Json)
}

async fn created<T, F>(state: &AppState, f: F) -> Created<T>
where
    T: Send + 'static,
    F: FnOnce(&Medbook) -> medbook_core::Result<T> + Send + 'static,
{
    blocking(state, f).await.map(|v| (StatusCode::CREATED, axum::Json(v)))
}

// Signup and login bodies default missing fields to empty strings so the
// usual validation message is returned instead of a parse error.

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct SignupRequest {
    pub username: String,
    pub email: String,
    pub password: String,
    pub confirm_password: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct LoginRequest {
    pub username: String,
    pub password: String,
}

pub async fn signup(State(state): State<AppState>, Json(req): Json<SignupRequest>) -> Created<Registered> {
    created(&state, move |app| {
        app.register_patient(&req.username, &req.email, &req.password, &req.confirm_password)
    })
    .await
}

pub async fn login(State(state): State<AppState>, Json(req): Json<LoginRequest>) -> Reply<IssuedSession> {
    reply(&state, move |app| app.login(&req.username, &req.password)).await
}

pub async fn admin_login(State(state): State<AppState>, Json(req): Json<LoginRequest>) -> Reply<IssuedSession> {
    reply(&state, move |app| app.admin_login(&req.username, &req.password)).await
}

/// Always 204: an unknown or missing token is already signed out.
pub async fn logout(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<StatusCode> {
    if let Some(token) = bearer(&headers).map(str::to_owned) {
        blocking(&state, move |app| app.logout(&token)).await?;
    }
    Ok(StatusCode::NO_CONTENT)
}

pub async fn list_hospitals(State(state): State<AppState>, Caller(who): Caller) -> Reply<Vec<HospitalSummary>> {
    reply(&state, move |app| Ok(app.list_hospitals(&who))).await
}

pub async fn get_hospital(
    State(state): State<AppState>,
    Caller(who): Caller,
    Path(id): Path<HospitalId>,
) -> Reply<HospitalDetails> {
    reply(&state, move |app| app.get_hospital(&who, id)).await
}

pub async fn hospital_doctors(
    State(state): State<AppState>,
    Caller(who): Caller,
    Path(id): Path<HospitalId>,
) -> Reply<Vec<DoctorSummary>> {
    reply(&state, move |app| app.list_doctors(&who, id)).await
}

pub async fn get_doctor(
    State(state): State<AppState>,
    Caller(who): Caller,
    Path(id): Path<DoctorId>,
) -> Reply<DoctorDetails> {
    reply(&state, move |app| app.get_doctor(&who, id)).await
}

#[derive(Debug, Deserialize)]
pub struct AvailabilityQuery {
    pub date: NaiveDate,
}

pub async fn availability(
    State(state): State<AppState>,
    Caller(who): Caller,
    Path(id): Path<DoctorId>,
    Query(q): Query<AvailabilityQuery>,
) -> Reply<Availability> {
    reply(&state, move |app| app.get_availability(&who, id, q.date)).await
}

#[derive(Debug, Deserialize)]
pub struct BookRequest {
    pub doctor_id: DoctorId,
    pub date: NaiveDate,
    pub start: TimeOfDay,
}

pub async fn book(State(state): State<AppState>, Caller(who): Caller, Json(req): Json<BookRequest>) -> Created<Booked> {
    created(&state, move |app| app.book_appointment(&who, req.doctor_id, req.date, req.start)).await
}

/// A patient cancels their own appointment; an admin cancels any, on
/// behalf of the clinic.
pub async fn cancel(
    State(state): State<AppState>,
    Caller(who): Caller,
    Path(id): Path<AppointmentId>,
) -> Reply<Appointment> {
    reply(&state, move |app| app.cancel_appointment(&who, id)).await
}

pub async fn my_appointments(State(state): State<AppState>, Caller(who): Caller) -> Reply<Vec<AppointmentView>> {
    reply(&state, move |app| app.list_patient_appointments(&who)).await
}

#[derive(Debug, Default, Deserialize)]
pub struct NotificationsQuery {
    #[serde(default)]
    pub unread_only: bool,
}

pub async fn notifications(
    State(state): State<AppState>,
    Caller(who): Caller,
    Query(q): Query<NotificationsQuery>,
) -> Reply<Vec<Notification>> {
    reply(&state, move |app| app.list_notifications(&who, q.unread_only)).await
}

pub async fn mark_read(
    State(state): State<AppState>,
    Caller(who): Caller,
    Path(id): Path<NotificationId>,
) -> Reply<Notification> {
    reply(&state, move |app| app.mark_notification_read(&who, id)).await
}

pub async fn health_schedule_groups(State(state): State<AppState>, Caller(who): Caller) -> Reply<Vec<AgeGroup>> {
    reply(&state, move |app| Ok(app.list_health_schedule_groups(&who))).await
}

pub async fn health_schedule(
    State(state): State<AppState>,
    Caller(who): Caller,
    Path(group): Path<String>,
) -> Reply<HealthSchedule> {
    reply(&state, move |app| app.get_health_schedule(&who, &group)).await
}

pub async fn about(State(state): State<AppState>) -> axum::Json<About> {
    axum::Json(state.app.get_about())
}

pub async fn add_hospital(
    State(state): State<AppState>,
    AdminCaller(who): AdminCaller,
    Json(new): Json<NewHospital>,
) -> Created<HospitalDetails> {
    created(&state, move |app| {
        let id = app.add_hospital(&who, new)?;
        app.get_hospital(&who, id)
    })
    .await
}

pub async fn add_doctor(
    State(state): State<AppState>,
    AdminCaller(who): AdminCaller,
    Json(new): Json<NewDoctor>,
) -> Created<DoctorDetails> {
    created(&state, move |app| {
        let id = app.add_doctor(&who, new)?;
        app.get_doctor(&who, id)
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct SetActiveRequest {
    pub active: bool,
}

pub async fn set_doctor_active(
    State(state): State<AppState>,
    AdminCaller(who): AdminCaller,
    Path(id): Path<DoctorId>,
    Json(req): Json<SetActiveRequest>,
) -> Reply<Doctor> {
    reply(&state, move |app| app.set_doctor_active(&who, id, req.active)).await
}

pub async fn admin_patients(State(state): State<AppState>, AdminCaller(who): AdminCaller) -> Reply<Vec<PatientSummary>> {
    reply(&state, move |app| app.list_patients(&who)).await
}

pub async fn admin_doctors(State(state): State<AppState>, AdminCaller(who): AdminCaller) -> Reply<Vec<Doctor>> {
    reply(&state, move |app| app.list_all_doctors(&who)).await
}

pub async fn admin_appointments(
    State(state): State<AppState>,
    AdminCaller(who): AdminCaller,
    Query(filter): Query<AppointmentFilter>,
) -> Reply<Vec<AppointmentView>> {
    reply(&state, move |app| app.list_all_appointments(&who, &filter)).await
}

pub async fn health() -> axum::Json<Value> {
    axum::Json(json!({ "status": "ok" }))
}

pub async fn openapi(State(state): State<AppState>) -> impl IntoResponse {
    axum::Json(state.openapi.as_ref().clone())
}

pub async fn fallback() -> ApiError {
    ApiError::route_not_found()
}

pub async fn method_not_allowed() -> ApiError {
    ApiError::method_not_allowed()
}
