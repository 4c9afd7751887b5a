use thiserror::Error;

use crate::calendar::WorkingHoursError;
use crate::store::{StorageError, UniqueKey};
use crate::validation::RegistrationIssue;

/// The single credential-failure text. Unknown user and wrong password must
/// produce exactly the same bytes.
pub const SIGNIN_FAILED: &str = "Signin failed check your connection or contact support";
pub const REGISTERED: &str = "successfully registered";
pub const BOOKED: &str = "successfully added";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// All violated signup rules, in field order; never empty.
    #[error("{}", .0.first().map_or("invalid registration", |i| i.message()))]
    Registration(Vec<RegistrationIssue>),
    #[error("username is already taken")]
    DuplicateUsername,
    #[error("email is already registered")]
    DuplicateEmail,
    #[error("{}", SIGNIN_FAILED)]
    SigninFailed,
    #[error("session token is not recognised")]
    UnknownToken,
    #[error("session has expired, sign in again")]
    ExpiredToken,
    #[error("not permitted for this account")]
    Forbidden,
    #[error("{0} not found")]
    NotFound(&'static str),
    #[error("latitude must be within [-90, 90] and longitude within [-180, 180]")]
    InvalidCoordinates,
    #[error("invalid working hours: {0}")]
    InvalidWorkingHours(#[from] WorkingHoursError),
    #[error("email is not valid")]
    InvalidEmail,
    #[error("{field} {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("date is outside the booking window")]
    DateOutOfRange,
    #[error("requested time is not a bookable slot for this doctor")]
    InvalidSlot,
    #[error("this slot is in the past")]
    PastSlot,
    #[error("this slot has already been taken")]
    SlotTaken,
    #[error("appointment is already cancelled")]
    AlreadyCancelled,
    #[error("daily appointment limit reached")]
    DailyLimitReached,
    #[error(transparent)]
    Storage(StorageError),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field,
            reason: reason.into(),
        }
    }

    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Registration(issues) => issues.first().map_or("invalid_registration", |i| i.code()),
            Error::DuplicateUsername => "duplicate_username",
            Error::DuplicateEmail => "duplicate_email",
            Error::SigninFailed => "signin_failed",
            Error::UnknownToken => "unknown_token",
            Error::ExpiredToken => "expired_token",
            Error::Forbidden => "forbidden",
            Error::NotFound(_) => "not_found",
            Error::InvalidCoordinates => "invalid_coordinates",
            Error::InvalidWorkingHours(_) => "invalid_working_hours",
            Error::InvalidEmail => "invalid_email",
            Error::InvalidField { .. } => "invalid_field",
            Error::DateOutOfRange => "date_out_of_range",
            Error::InvalidSlot => "invalid_slot",
            Error::PastSlot => "past_slot",
            Error::SlotTaken => "slot_taken",
            Error::AlreadyCancelled => "already_cancelled",
            Error::DailyLimitReached => "daily_limit_reached",
            Error::Storage(StorageError::Unavailable(_)) => "storage_unavailable",
            Error::Storage(_) => "storage_error",
        }
    }
}

impl From<StorageError> for Error {
    fn from(err: StorageError) -> Self {
        match err {
            StorageError::ConstraintViolation(UniqueKey::PatientUsername(_))
            | StorageError::ConstraintViolation(UniqueKey::AdminUsername(_)) => Error::DuplicateUsername,
            StorageError::ConstraintViolation(UniqueKey::PatientEmail(_)) => Error::DuplicateEmail,
            StorageError::ConstraintViolation(UniqueKey::ReservedSlot { .. }) => Error::SlotTaken,
            other => Error::Storage(other),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
