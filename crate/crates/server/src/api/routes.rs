//! The route table. The router and the OpenAPI document are both built from
//! it, so the published description cannot drift from what is served.

use axum::routing::{delete, get, post, MethodRouter};
use serde_json::{json, Map, Value};

use super::handlers as h;
use super::AppState;

pub const ADMIN_PREFIX: &str = "/api/v1/admin/";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Public,
    /// Any valid session token.
    Session,
    /// An admin session token; patient tokens get 403.
    Admin,
}

#[derive(Clone, Copy, Debug)]
pub struct QueryParam {
    pub name: &'static str,
    pub format: &'static str,
    pub required: bool,
}

pub struct Route {
    pub method: &'static str,
    pub path: &'static str,
    pub access: Access,
    pub summary: &'static str,
    pub success: u16,
    /// Statuses besides the success status and those implied by `access`.
    pub errors: &'static [u16],
    pub request: Option<&'static str>,
    pub response: &'static str,
    pub query: &'static [QueryParam],
    handler: fn() -> MethodRouter<AppState>,
}

impl Route {
    pub fn handler(&self) -> MethodRouter<AppState> {
        (self.handler)()
    }

    /// Every status this route is documented to return.
    pub fn statuses(&self) -> Vec<u16> {
        let mut out = vec![self.success];
        match self.access {
            Access::Public => {}
            Access::Session => out.push(401),
            Access::Admin => out.extend([401, 403]),
        }
        out.extend_from_slice(self.errors);
        if self.request.is_some() {
            out.extend([400, 415, 422]);
        }
        if !self.query.is_empty() {
            out.push(422);
        }
        if self.path.contains('{') {
            out.push(404);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn path_params(&self) -> impl Iterator<Item = &'static str> {
        self.path
            .split('/')
            .filter_map(|seg| seg.strip_prefix('{').and_then(|s| s.strip_suffix('}')))
    }
}

const DATE: &str = "date";
const UUID: &str = "uuid";

pub static ROUTES: &[Route] = &[
    Route {
        method: "POST",
        path: "/api/v1/auth/signup",
        access: Access::Public,
        summary: "Register a patient account",
        success: 201,
        errors: &[409, 422],
        request: Some("SignupRequest"),
        response: "Registered",
        query: &[],
        handler: || post(h::signup),
    },
    Route {
        method: "POST",
        path: "/api/v1/auth/login",
        access: Access::Public,
        summary: "Sign in as a patient",
        success: 200,
        errors: &[401],
        request: Some("LoginRequest"),
        response: "Session",
        query: &[],
        handler: || post(h::login),
    },
    Route {
        method: "POST",
        path: "/api/v1/auth/logout",
        access: Access::Public,
        summary: "End the session named by the bearer token",
        success: 204,
        errors: &[],
        request: None,
        response: "",
        query: &[],
        handler: || post(h::logout),
    },
    Route {
        method: "GET",
        path: "/api/v1/hospitals",
        access: Access::Session,
        summary: "List hospitals",
        success: 200,
        errors: &[],
        request: None,
        response: "HospitalSummary[]",
        query: &[],
        handler: || get(h::list_hospitals),
    },
    Route {
        method: "GET",
        path: "/api/v1/hospitals/{id}",
        access: Access::Session,
        summary: "Hospital details with contact and map links",
        success: 200,
        errors: &[],
        request: None,
        response: "HospitalDetails",
        query: &[],
        handler: || get(h::get_hospital),
    },
    Route {
        method: "GET",
        path: "/api/v1/hospitals/{id}/doctors",
        access: Access::Session,
        summary: "Active doctors of a hospital",
        success: 200,
        errors: &[],
        request: None,
        response: "DoctorSummary[]",
        query: &[],
        handler: || get(h::hospital_doctors),
    },
    Route {
        method: "GET",
        path: "/api/v1/doctors/{id}",
        access: Access::Session,
        summary: "Doctor details with contact links",
        success: 200,
        errors: &[],
        request: None,
        response: "DoctorDetails",
        query: &[],
        handler: || get(h::get_doctor),
    },
    Route {
        method: "GET",
        path: "/api/v1/doctors/{id}/availability",
        access: Access::Session,
        summary: "Free and taken slots of a doctor on one date",
        success: 200,
        errors: &[],
        request: None,
        response: "Availability",
        query: &[QueryParam {
            name: "date",
            format: DATE,
            required: true,
        }],
        handler: || get(h::availability),
    },
    Route {
        method: "POST",
        path: "/api/v1/appointments",
        access: Access::Session,
        summary: "Reserve a slot for the calling patient",
        success: 201,
        errors: &[403, 404, 409],
        request: Some("BookRequest"),
        response: "Booked",
        query: &[],
        handler: || post(h::book),
    },
    Route {
        method: "DELETE",
        path: "/api/v1/appointments/{id}",
        access: Access::Session,
        summary: "Cancel an appointment (own as patient, any as admin)",
        success: 200,
        errors: &[403, 409],
        request: None,
        response: "Appointment",
        query: &[],
        handler: || delete(h::cancel),
    },
    Route {
        method: "GET",
        path: "/api/v1/appointments",
        access: Access::Session,
        summary: "The calling patient's appointments, newest first",
        success: 200,
        errors: &[403],
        request: None,
        response: "AppointmentView[]",
        query: &[],
        handler: || get(h::my_appointments),
    },
    Route {
        method: "GET",
        path: "/api/v1/notifications",
        access: Access::Session,
        summary: "The calling patient's notification feed",
        success: 200,
        errors: &[403],
        request: None,
        response: "Notification[]",
        query: &[QueryParam {
            name: "unread_only",
            format: "boolean",
            required: false,
        }],
        handler: || get(h::notifications),
    },
    Route {
        method: "POST",
        path: "/api/v1/notifications/{id}/read",
        access: Access::Session,
        summary: "Mark a notification as read",
        success: 200,
        errors: &[403],
        request: None,
        response: "Notification",
        query: &[],
        handler: || post(h::mark_read),
    },
    Route {
        method: "GET",
        path: "/api/v1/health-schedules",
        access: Access::Session,
        summary: "Age groups that have a health schedule",
        success: 200,
        errors: &[],
        request: None,
        response: "AgeGroup[]",
        query: &[],
        handler: || get(h::health_schedule_groups),
    },
    Route {
        method: "GET",
        path: "/api/v1/health-schedules/{group}",
        access: Access::Session,
        summary: "Health schedule of one age group",
        success: 200,
        errors: &[],
        request: None,
        response: "HealthSchedule",
        query: &[],
        handler: || get(h::health_schedule),
    },
    Route {
        method: "GET",
        path: "/api/v1/about",
        access: Access::Public,
        summary: "Objectives and developers of the service",
        success: 200,
        errors: &[],
        request: None,
        response: "About",
        query: &[],
        handler: || get(h::about),
    },
    Route {
        method: "POST",
        path: "/api/v1/admin/login",
        access: Access::Public,
        summary: "Sign in as an admin; refused while presenting a patient token",
        success: 200,
        errors: &[401, 403],
        request: Some("LoginRequest"),
        response: "Session",
        query: &[],
        handler: || post(h::admin_login),
    },
    Route {
        method: "POST",
        path: "/api/v1/admin/hospitals",
        access: Access::Admin,
        summary: "Add a hospital",
        success: 201,
        errors: &[],
        request: Some("NewHospital"),
        response: "HospitalDetails",
        query: &[],
        handler: || post(h::add_hospital),
    },
    Route {
        method: "POST",
        path: "/api/v1/admin/doctors",
        access: Access::Admin,
        summary: "Register a doctor at a hospital",
        success: 201,
        errors: &[404],
        request: Some("NewDoctor"),
        response: "DoctorDetails",
        query: &[],
        handler: || post(h::add_doctor),
    },
    Route {
        method: "POST",
        path: "/api/v1/admin/doctors/{id}/active",
        access: Access::Admin,
        summary: "Activate or deactivate a doctor",
        success: 200,
        errors: &[],
        request: Some("SetActiveRequest"),
        response: "Doctor",
        query: &[],
        handler: || post(h::set_doctor_active),
    },
    Route {
        method: "GET",
        path: "/api/v1/admin/patients",
        access: Access::Admin,
        summary: "All registered patients",
        success: 200,
        errors: &[],
        request: None,
        response: "PatientSummary[]",
        query: &[],
        handler: || get(h::admin_patients),
    },
    Route {
        method: "GET",
        path: "/api/v1/admin/doctors",
        access: Access::Admin,
        summary: "All doctors, inactive included",
        success: 200,
        errors: &[],
        request: None,
        response: "Doctor[]",
        query: &[],
        handler: || get(h::admin_doctors),
    },
    Route {
        method: "GET",
        path: "/api/v1/admin/appointments",
        access: Access::Admin,
        summary: "All appointments, optionally filtered",
        success: 200,
        errors: &[],
        request: None,
        response: "AppointmentView[]",
        query: &[
            QueryParam {
                name: "doctor_id",
                format: UUID,
                required: false,
            },
            QueryParam {
                name: "from",
                format: DATE,
                required: false,
            },
            QueryParam {
                name: "to",
                format: DATE,
                required: false,
            },
        ],
        handler: || get(h::admin_appointments),
    },
    Route {
        method: "GET",
        path: "/api/v1/health",
        access: Access::Public,
        summary: "Liveness probe",
        success: 200,
        errors: &[],
        request: None,
        response: "Health",
        query: &[],
        handler: || get(h::health),
    },
    Route {
        method: "GET",
        path: "/api/v1/openapi",
        access: Access::Public,
        summary: "This document",
        success: 200,
        errors: &[],
        request: None,
        response: "OpenApi",
        query: &[],
        handler: || get(h::openapi),
    },
];

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        201 => "Created",
        204 => "No Content",
        400 => "Malformed request body",
        401 => "Missing, unknown or expired credentials",
        403 => "Not permitted for this account",
        404 => "No such resource",
        409 => "Conflicts with the current state",
        415 => "Body is not JSON",
        422 => "Validation failed",
        _ => "Error",
    }
}

fn schema_ref(name: &str) -> Value {
    match name.strip_suffix("[]") {
        Some(item) => json!({ "type": "array", "items": schema_ref(item) }),
        None => json!({ "$ref": format!("#/components/schemas/{name}") }),
    }
}

fn json_content(schema: Value) -> Value {
    json!({ "application/json": { "schema": schema } })
}

fn string(format: &str) -> Value {
    json!({ "type": "string", "format": format })
}

fn object(required: &[&str], properties: Value) -> Value {
    json!({ "type": "object", "required": required, "properties": properties })
}

/// Schemas of request bodies and the error envelope. Response bodies are
/// named for reference only.
fn schemas() -> Value {
    let s = || json!({ "type": "string" });
    let hours = json!({
        "type": "object",
        "description": "Lowercase weekday names mapped to lists of {start, end} \"HH:MM\" intervals",
        "additionalProperties": {
            "type": "array",
            "items": object(&["start", "end"], json!({ "start": s(), "end": s() })),
        },
    });
    let mut out = Map::new();
    out.insert(
        "ApiError".into(),
        object(
            &["status", "code", "message"],
            json!({
                "status": { "type": "integer" },
                "code": s(),
                "message": s(),
                "errors": {
                    "type": "array",
                    "items": object(&["field", "code", "message"], json!({ "field": s(), "code": s(), "message": s() })),
                },
            }),
        ),
    );
    out.insert(
        "SignupRequest".into(),
        object(
            &["username", "email", "password", "confirm_password"],
            json!({ "username": s(), "email": s(), "password": s(), "confirm_password": s() }),
        ),
    );
    out.insert(
        "LoginRequest".into(),
        object(&["username", "password"], json!({ "username": s(), "password": s() })),
    );
    out.insert(
        "BookRequest".into(),
        object(
            &["doctor_id", "date", "start"],
            json!({ "doctor_id": string(UUID), "date": string(DATE), "start": { "type": "string", "pattern": "^\\d{2}:\\d{2}$" } }),
        ),
    );
    out.insert(
        "NewHospital".into(),
        object(
            &["name", "phone", "latitude", "longitude"],
            json!({
                "name": s(), "address": s(), "phone": s(),
                "latitude": { "type": "number" }, "longitude": { "type": "number" },
                "description": s(), "timezone": { "type": "string", "default": "UTC" },
            }),
        ),
    );
    out.insert(
        "NewDoctor".into(),
        object(
            &["hospital_id", "name", "phone", "email"],
            json!({
                "hospital_id": string(UUID), "name": s(), "specialty": s(),
                "phone": s(), "email": s(), "working_hours": hours,
            }),
        ),
    );
    out.insert(
        "SetActiveRequest".into(),
        object(&["active"], json!({ "active": { "type": "boolean" } })),
    );
    for route in ROUTES {
        let name = route.response.trim_end_matches("[]");
        if !name.is_empty() && !out.contains_key(name) {
            out.insert(name.into(), json!({ "type": "object" }));
        }
    }
    Value::Object(out)
}

fn operation(route: &Route) -> Value {
    let mut params: Vec<Value> = route
        .path_params()
        .map(|name| {
            let schema = if name == "group" {
                json!({ "type": "string", "enum": ["Childhood", "Adolescent", "Adult", "Senior"] })
            } else {
                string(UUID)
            };
            json!({ "name": name, "in": "path", "required": true, "schema": schema })
        })
        .collect();
    params.extend(route.query.iter().map(|q| {
        let schema = match q.format {
            "boolean" => json!({ "type": "boolean" }),
            other => string(other),
        };
        json!({ "name": q.name, "in": "query", "required": q.required, "schema": schema })
    }));

    let mut responses = Map::new();
    for status in route.statuses() {
        let mut response = json!({ "description": reason(status) });
        if status == route.success {
            if !route.response.is_empty() {
                response["content"] = json_content(schema_ref(route.response));
            }
        } else {
            response["content"] = json_content(schema_ref("ApiError"));
        }
        responses.insert(status.to_string(), response);
    }
    responses.insert(
        "default".into(),
        json!({ "description": "Unexpected or storage failure", "content": json_content(schema_ref("ApiError")) }),
    );

    let mut op = json!({
        "summary": route.summary,
        "parameters": params,
        "responses": responses,
    });
    op["security"] = match route.access {
        Access::Public => json!([]),
        Access::Session | Access::Admin => json!([{ "bearer": [] }]),
    };
    if let Some(body) = route.request {
        op["requestBody"] = json!({ "required": true, "content": json_content(schema_ref(body)) });
    }
    op
}

/// The OpenAPI 3.1 description of [`ROUTES`].
pub fn openapi_document() -> Value {
    let mut paths = Map::new();
    for route in ROUTES {
        let entry = paths.entry(route.path).or_insert_with(|| json!({}));
        entry[route.method.to_ascii_lowercase()] = operation(route);
    }
    json!({
        "openapi": "3.1.0",
        "info": {
            "title": "medbook API",
            "version": env!("CARGO_PKG_VERSION"),
        },
        "paths": paths,
        "components": {
            "securitySchemes": { "bearer": { "type": "http", "scheme": "bearer" } },
            "schemas": schemas(),
        },
    })
}
