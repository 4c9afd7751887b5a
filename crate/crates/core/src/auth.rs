//! Patient signup, login for both roles, and bearer sessions.

use argon2::password_hash::rand_core::OsRng as SaltRng;
use argon2::password_hash::{PasswordHash, SaltString};
use argon2::{Algorithm, Argon2, Params, PasswordHasher as _, PasswordVerifier as _, Version};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use chrono::{DateTime, Utc};
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use crate::domain::{AdminAccount, AdminId, Patient, PatientId, Principal, Session};
use crate::error::{Error, Result, REGISTERED};
use crate::store::{transact, UniqueKey};
use crate::validation::validate_registration;
use crate::Medbook;

/// Argon2id cost parameters. Existing digests carry their own parameters,
/// so raising the cost only affects new hashes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashCost {
    pub memory_kib: u32,
    pub iterations: u32,
    pub parallelism: u32,
}

impl Default for HashCost {
    fn default() -> Self {
        Self {
            memory_kib: 19 * 1024,
            iterations: 2,
            parallelism: 1,
        }
    }
}

impl HashCost {
    /// Cheapest accepted setting; for tests and throwaway demos only.
    pub const MINIMAL: HashCost = HashCost {
        memory_kib: 64,
        iterations: 1,
        parallelism: 1,
    };

    pub fn validate(&self) -> std::result::Result<(), String> {
        Params::new(self.memory_kib, self.iterations, self.parallelism, None)
            .map(|_| ())
            .map_err(|e| e.to_string())
    }
}

pub(crate) struct PasswordHasher {
    argon: Argon2<'static>,
    /// Verified against when the username is unknown, so both failure paths
    /// cost the same.
    decoy: String,
}

impl PasswordHasher {
    pub(crate) fn new(cost: HashCost) -> Self {
        let params = Params::new(cost.memory_kib, cost.iterations, cost.parallelism, None)
            .unwrap_or_else(|_| Params::default());
        let argon = Argon2::new(Algorithm::Argon2id, Version::V0x13, params);
        let mut decoy_password = [0u8; 16];
        OsRng.fill_bytes(&mut decoy_password);
        let mut hasher = Self {
            argon,
            decoy: String::new(),
        };
        hasher.decoy = hasher.hash(&hex::encode(decoy_password));
        hasher
    }

    pub(crate) fn hash(&self, password: &str) -> String {
        let salt = SaltString::generate(&mut SaltRng);
        self.argon
            .hash_password(password.as_bytes(), &salt)
            .expect("argon2 accepts any password length we allow")
            .to_string()
    }

    pub(crate) fn verify(&self, password: &str, digest: &str) -> bool {
        PasswordHash::new(digest)
            .map(|parsed| self.argon.verify_password(password.as_bytes(), &parsed).is_ok())
            .unwrap_or(false)
    }

    fn burn(&self, password: &str) {
        let _ = self.verify(password, &self.decoy);
    }
}

/// A freshly issued session. `token` is only ever shown to the client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IssuedSession {
    pub token: String,
    pub principal: Principal,
    pub issued_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Registered {
    pub patient_id: PatientId,
    pub message: &'static str,
}

fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn new_token() -> String {
    let mut bytes = [0u8; 32];
    OsRng.fill_bytes(&mut bytes);
    URL_SAFE_NO_PAD.encode(bytes)
}

impl Medbook {
    /// Creates a patient account. Nothing is stored unless every rule holds
    /// and both username and email are unused.
    pub fn register_patient(
        &self,
        username: &str,
        email: &str,
        password: &str,
        confirm: &str,
    ) -> Result<Registered> {
        validate_registration(username, email, password, confirm).map_err(Error::Registration)?;
        let patient = Patient {
            id: PatientId::new(),
            username: username.to_owned(),
            email: email.to_owned(),
            password_digest: self.passwords.hash(password),
            created_at: self.clock.now(),
        };
        transact(self.store(), |tx| {
            if tx
                .find_unique::<Patient>(&UniqueKey::PatientUsername(patient.username.clone()))
                .is_some()
            {
                return Err(Error::DuplicateUsername);
            }
            if tx
                .find_unique::<Patient>(&UniqueKey::PatientEmail(patient.email.to_lowercase()))
                .is_some()
            {
                return Err(Error::DuplicateEmail);
            }
            tx.insert(patient.clone())?;
            Ok(())
        })?;
        tracing::info!(patient = %patient.id, "patient registered");
        Ok(Registered {
            patient_id: patient.id,
            message: REGISTERED,
        })
    }

    pub fn login(&self, username: &str, password: &str) -> Result<IssuedSession> {
        let patient = self
            .store()
            .begin()
            .find_unique::<Patient>(&UniqueKey::PatientUsername(username.to_owned()))
            .cloned();
        match patient {
            Some(p) if self.passwords.verify(password, &p.password_digest) => {
                self.issue_session(Principal::Patient(p.id))
            }
            Some(_) => Err(Error::SigninFailed),
            None => {
                self.passwords.burn(password);
                Err(Error::SigninFailed)
            }
        }
    }

    pub fn admin_login(&self, username: &str, password: &str) -> Result<IssuedSession> {
        let admin = self
            .store()
            .begin()
            .find_unique::<AdminAccount>(&UniqueKey::AdminUsername(username.to_owned()))
            .cloned();
        match admin {
            Some(a) if self.passwords.verify(password, &a.password_digest) => {
                self.issue_session(Principal::Admin(a.id))
            }
            Some(_) => Err(Error::SigninFailed),
            None => {
                self.passwords.burn(password);
                Err(Error::SigninFailed)
            }
        }
    }

    fn issue_session(&self, principal: Principal) -> Result<IssuedSession> {
        let token = new_token();
        let issued_at = self.clock.now();
        let session = Session {
            token_digest: token_digest(&token),
            principal,
            issued_at,
            expires_at: issued_at + self.settings.session_ttl,
        };
        let expires_at = session.expires_at;
        transact(self.store(), |tx| tx.insert(session.clone()))?;
        Ok(IssuedSession {
            token,
            principal,
            issued_at,
            expires_at,
        })
    }

    /// Resolves a bearer token to the principal it was issued for.
    pub fn authenticate(&self, token: &str) -> Result<Principal> {
        let digest = token_digest(token);
        let tx = self.store().begin();
        let session = tx.get::<Session>(&digest).ok_or(Error::UnknownToken)?;
        if !bool::from(session.token_digest.as_bytes().ct_eq(digest.as_bytes())) {
            return Err(Error::UnknownToken);
        }
        if self.clock.now() >= session.expires_at {
            return Err(Error::ExpiredToken);
        }
        Ok(session.principal)
    }

    /// Invalidates the session if it exists. Always succeeds.
    pub fn logout(&self, token: &str) -> Result<()> {
        let digest = token_digest(token);
        transact(self.store(), |tx| {
            tx.delete::<Session>(&digest);
            Ok::<_, Error>(())
        })
    }

    /// Drops every session whose expiry has passed; returns how many.
    pub fn purge_expired_sessions(&self) -> Result<usize> {
        let now = self.clock.now();
        transact(self.store(), |tx| {
            let expired: Vec<String> = tx
                .all::<Session>()
                .filter(|s| s.expires_at <= now)
                .map(|s| s.token_digest.clone())
                .collect();
            for digest in &expired {
                tx.delete::<Session>(digest);
            }
            Ok::<_, Error>(expired.len())
        })
    }

    /// Creates an admin account with the given credentials unless an admin
    /// already exists. Returns whether one was created.
    pub fn ensure_admin(&self, username: &str, password: &str) -> Result<bool> {
        if self.store().begin().count::<AdminAccount>() > 0 {
            return Ok(false);
        }
        self.create_admin(username, password)?;
        Ok(true)
    }

    pub(crate) fn create_admin(&self, username: &str, password: &str) -> Result<AdminId> {
        if username.trim().is_empty() {
            return Err(Error::invalid("username", "must not be empty"));
        }
        if password.chars().count() < crate::validation::MIN_PASSWORD_CHARS {
            return Err(Error::invalid(
                "password",
                format!("must be at least {} characters", crate::validation::MIN_PASSWORD_CHARS),
            ));
        }
        let admin = AdminAccount {
            id: AdminId::new(),
            username: username.to_owned(),
            password_digest: self.passwords.hash(password),
        };
        transact(self.store(), |tx| tx.insert(admin.clone()))?;
        tracing::info!(admin = %admin.id, "admin account created");
        Ok(admin.id)
    }

    pub(crate) fn hash_password(&self, password: &str) -> String {
        self.passwords.hash(password)
    }
}
