//! Field validation for signup and catalog input.

use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

pub const MIN_PASSWORD_CHARS: usize = 8;

// local "@" label ("." label)* "." tld, tld at least two characters.
static EMAIL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[^\s@]+@[^\s@.]+(\.[^\s@.]+)*\.[^\s@.]{2,}$").expect("valid email pattern")
});

/// Structural e-mail check: non-empty local part, exactly one `@`, a dotted
/// domain with non-empty labels, a top-level label of two or more
/// characters, and no whitespace anywhere.
pub fn validate_email(candidate: &str) -> bool {
    EMAIL.is_match(candidate)
}

/// Phone numbers are digits with an optional leading `+`.
pub fn validate_phone(candidate: &str) -> bool {
    let digits = candidate.strip_prefix('+').unwrap_or(candidate);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// A single failed signup rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegistrationIssue {
    EmptyUsername,
    InvalidEmail,
    WeakPassword,
    PasswordMismatch,
}

impl RegistrationIssue {
    pub fn field(self) -> &'static str {
        match self {
            RegistrationIssue::EmptyUsername => "username",
            RegistrationIssue::InvalidEmail => "email",
            RegistrationIssue::WeakPassword => "password",
            RegistrationIssue::PasswordMismatch => "confirm_password",
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            RegistrationIssue::EmptyUsername => "empty_username",
            RegistrationIssue::InvalidEmail => "invalid_email",
            RegistrationIssue::WeakPassword => "weak_password",
            RegistrationIssue::PasswordMismatch => "password_mismatch",
        }
    }

    /// User-facing text. The mismatch and e-mail strings are the ones the
    /// mobile client has always displayed; keep them byte-exact.
    pub fn message(self) -> &'static str {
        match self {
            RegistrationIssue::EmptyUsername => "username is required",
            RegistrationIssue::InvalidEmail => "email is not valid",
            RegistrationIssue::WeakPassword => "password must be at least 8 characters",
            RegistrationIssue::PasswordMismatch => "passwords didn't match",
        }
    }
}

/// Checks every signup rule and reports all violations, in field order.
pub fn validate_registration(
    username: &str,
    email: &str,
    password: &str,
    confirm: &str,
) -> Result<(), Vec<RegistrationIssue>> {
    let mut issues = Vec::new();
    if username.trim().is_empty() {
        issues.push(RegistrationIssue::EmptyUsername);
    }
    if !validate_email(email) {
        issues.push(RegistrationIssue::InvalidEmail);
    }
    if password.chars().count() < MIN_PASSWORD_CHARS {
        issues.push(RegistrationIssue::WeakPassword);
    }
    if password != confirm {
        issues.push(RegistrationIssue::PasswordMismatch);
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}
