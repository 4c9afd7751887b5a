#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use chrono::{NaiveDate, TimeZone, Utc};
use medbook_core::calendar::{TimeOfDay, WorkInterval, Weekday, WorkingHours};
use medbook_core::store::{MemoryStore, Storage};
use medbook_core::{HashCost, ManualClock, Medbook, Settings};
use medbook_server::api::{ApiError, ROUTES};
use medbook_server::{serve_app, Config, ServerHandle};
use reqwest::{Method, StatusCode};
use serde_json::{json, Value};

pub const ADMIN_USER: &str = "root";
pub const ADMIN_PASSWORD: &str = "root-password-1";
pub const PATIENT_PASSWORD: &str = "patient-password-1";

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

pub fn test_config() -> Config {
    Config {
        port: 0,
        hash: HashCost::MINIMAL,
        ..Config::default()
    }
}

pub struct TestServer {
    pub handle: ServerHandle,
    pub clock: Arc<ManualClock>,
    pub base: String,
    pub client: reqwest::Client,
    /// (method, path, status) of every request made through this server.
    pub seen: Arc<Mutex<Vec<(Method, String, u16)>>>,
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Value,
}

impl Reply {
    pub fn error(&self) -> ApiError {
        serde_json::from_value(self.body.clone()).expect("error body is an ApiError")
    }
}

impl TestServer {
    pub async fn start() -> Self {
        Self::start_on(Arc::new(MemoryStore::new())).await
    }

    pub async fn start_on(store: Arc<dyn Storage>) -> Self {
        let clock = Arc::new(ManualClock::new(start_instant()));
        let app = Arc::new(Medbook::new(store, clock.clone(), settings()));
        let bootstrap = app.clone();
        tokio::task::spawn_blocking(move || bootstrap.ensure_admin(ADMIN_USER, ADMIN_PASSWORD).unwrap())
            .await
            .unwrap();
        let handle = serve_app(&test_config(), app).await.unwrap();
        let base = format!("http://{}", handle.local_addr());
        Self {
            handle,
            clock,
            base,
            client: reqwest::Client::new(),
            seen: Arc::default(),
        }
    }

    pub fn app(&self) -> &Arc<Medbook> {
        self.handle.app()
    }

    pub async fn request(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut req = self.client.request(method.clone(), format!("{}{}", self.base, path));
        if let Some(token) = token {
            req = req.bearer_auth(token);
        }
        if let Some(body) = body {
            req = req.json(&body);
        }
        let resp = req.send().await.expect("request sent");
        let status = resp.status();
        let text = resp.text().await.unwrap();
        let body = if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or_else(|e| panic!("{method} {path}: body is not JSON ({e}): {text}"))
        };
        if !status.is_success() {
            let err: ApiError = serde_json::from_value(body.clone())
                .unwrap_or_else(|e| panic!("{method} {path}: error body is not an ApiError ({e}): {text}"));
            assert_eq!(err.status, status.as_u16(), "{method} {path}");
        }
        let bare = path.split('?').next().unwrap().to_owned();
        self.seen.lock().unwrap().push((method, bare, status.as_u16()));
        Reply { status, body }
    }

    pub async fn get(&self, path: &str, token: Option<&str>) -> Reply {
        self.request(Method::GET, path, token, None).await
    }

    pub async fn post(&self, path: &str, token: Option<&str>, body: Value) -> Reply {
        self.request(Method::POST, path, token, Some(body)).await
    }

    pub async fn delete(&self, path: &str, token: Option<&str>) -> Reply {
        self.request(Method::DELETE, path, token, None).await
    }

    pub async fn admin_token(&self) -> String {
        let r = self
            .post("/api/v1/admin/login", None, json!({ "username": ADMIN_USER, "password": ADMIN_PASSWORD }))
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.body);
        r.body["token"].as_str().unwrap().to_owned()
    }

    pub async fn signup(&self, username: &str) -> Reply {
        self.post(
            "/api/v1/auth/signup",
            None,
            json!({
                "username": username,
                "email": format!("{username}@mail.example"),
                "password": PATIENT_PASSWORD,
                "confirm_password": PATIENT_PASSWORD,
            }),
        )
        .await
    }

    /// Signs up and logs in; returns the token.
    pub async fn patient(&self, username: &str) -> String {
        let r = self.signup(username).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
        let r = self
            .post("/api/v1/auth/login", None, json!({ "username": username, "password": PATIENT_PASSWORD }))
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.body);
        r.body["token"].as_str().unwrap().to_owned()
    }

    /// Adds a Karachi hospital with one doctor working 09:00-12:00 and
    /// 14:00-16:00 every day. Returns (hospital id, doctor id).
    pub async fn catalog(&self, admin: &str) -> (String, String) {
        let r = self
            .post(
                "/api/v1/admin/hospitals",
                Some(admin),
                json!({
                    "name": "City Care",
                    "address": "Blue Area",
                    "phone": "+92511234567",
                    "latitude": 33.6,
                    "longitude": 73.0,
                    "timezone": "Asia/Karachi",
                }),
            )
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
        let hospital = r.body["id"].as_str().unwrap().to_owned();
        let r = self
            .post("/api/v1/admin/doctors", Some(admin), doctor_body(&hospital, "Dr. Khan"))
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
        (hospital, r.body["id"].as_str().unwrap().to_owned())
    }

    /// Fails if any observed status is missing from the OpenAPI document.
    pub async fn assert_statuses_documented(&self) {
        let doc = self.get("/api/v1/openapi", None).await.body;
        for (method, path, status) in self.seen.lock().unwrap().iter() {
            let Some(route) = ROUTES.iter().find(|r| r.method == method.as_str() && matches_template(r.path, path))
            else {
                // Unknown routes are answered by the fallback.
                assert!(matches!(status, 404 | 405), "{method} {path} -> {status}");
                continue;
            };
            let responses = &doc["paths"][route.path][method.as_str().to_ascii_lowercase()]["responses"];
            let documented = responses.get(status.to_string()).is_some() || (*status >= 500 && responses.get("default").is_some());
            assert!(documented, "{method} {path} returned undocumented {status}");
        }
    }
}

pub fn doctor_body(hospital: &str, name: &str) -> Value {
    json!({
        "hospital_id": hospital,
        "name": name,
        "specialty": "General practice",
        "phone": "0511234567",
        "email": "doctor@clinic.example",
        "working_hours": every_day(&[("09:00", "12:00"), ("14:00", "16:00")]),
    })
}

pub fn every_day(intervals: &[(&str, &str)]) -> Value {
    let t = |s: &str| s.parse::<TimeOfDay>().unwrap();
    let hours = WorkingHours::new(
        Weekday::ALL
            .iter()
            .map(|&d| (d, intervals.iter().map(|&(a, b)| WorkInterval::new(t(a), t(b))).collect())),
    )
    .unwrap();
    serde_json::to_value(hours).unwrap()
}

/// Whether a concrete path fits a `{param}` template.
pub fn matches_template(template: &str, path: &str) -> bool {
    let a: Vec<&str> = template.split('/').collect();
    let b: Vec<&str> = path.split('/').collect();
    a.len() == b.len()
        && a.iter()
            .zip(&b)
            .all(|(t, p)| (t.starts_with('{') && !p.is_empty()) || t == p)
}

/// A concrete path for a template, with every parameter filled in.
pub fn fill(template: &str, id: &str) -> String {
    template
        .split('/')
        .map(|seg| match seg {
            "{group}" => "Adult",
            s if s.starts_with('{') => id,
            s => s,
        })
        .collect::<Vec<_>>()
        .join("/")
}
