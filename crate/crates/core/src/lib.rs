//! Core of the medbook appointment service.
//!
//! [`Medbook`] bundles a [`store::Storage`] backend, a [`clock::Clock`] and
//! the service [`Settings`]; the patient, catalog and booking operations are
//! methods on it, grouped by module:
//!
//! * [`auth`]: signup, login, sessions;
//! * [`catalog`]: hospitals, doctors, health schedules, about text;
//! * [`booking`]: availability, reservations, cancellations, notifications;
//! * [`seed`]: loading a fixture into an empty store.

pub mod auth;
pub mod booking;
pub mod calendar;
pub mod catalog;
pub mod clock;
pub mod domain;
pub mod error;
pub mod seed;
pub mod store;
pub mod validation;

use std::num::NonZeroU32;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use auth::{HashCost, IssuedSession};
pub use clock::{Clock, ManualClock, SystemClock};
pub use error::{Error, Result};

/// Static content served on the About screen.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct About {
    pub objectives: String,
    pub developers: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Settings {
    pub slot_minutes: NonZeroU32,
    /// Availability and booking accept dates up to this many days ahead.
    pub booking_horizon_days: u32,
    pub session_ttl: chrono::Duration,
    /// Reserved appointments one patient may hold on a single date.
    pub daily_cap: Option<u32>,
    pub hash_cost: HashCost,
    pub about: About,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            slot_minutes: NonZeroU32::new(30).expect("non-zero"),
            booking_horizon_days: 90,
            session_ttl: chrono::Duration::hours(24),
            daily_cap: None,
            hash_cost: HashCost::default(),
            about: About::default(),
        }
    }
}

/// The service facade shared by every request handler.
pub struct Medbook {
    store: Arc<dyn store::Storage>,
    clock: Arc<dyn Clock>,
    settings: Settings,
    passwords: auth::PasswordHasher,
}

impl Medbook {
    pub fn new(store: Arc<dyn store::Storage>, clock: Arc<dyn Clock>, settings: Settings) -> Self {
        let passwords = auth::PasswordHasher::new(settings.hash_cost);
        Self {
            store,
            clock,
            settings,
            passwords,
        }
    }

    pub fn store(&self) -> &dyn store::Storage {
        self.store.as_ref()
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn now(&self) -> chrono::DateTime<chrono::Utc> {
        self.clock.now()
    }
}
