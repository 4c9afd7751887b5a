//! Drives the `medbook` binary as an operator would.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use serde_json::{json, Value};

fn demo_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo")
}

fn medbook() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_medbook"));
    cmd.env("MEDBOOK_HASH__MEMORY_KIB", "64")
        .env("MEDBOOK_HASH__ITERATIONS", "1")
        .env("MEDBOOK_LOG", "warn")
        .env_remove("MEDBOOK_CONFIG");
    cmd
}

fn seed(db: &Path, fixture: &Path, force: bool) -> Output {
    let mut cmd = medbook();
    cmd.arg("seed").arg(fixture).arg("--db").arg(db);
    if force {
        cmd.arg("--force");
    }
    cmd.output().unwrap()
}

fn counts(out: &Output) -> Vec<(String, usize)> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| {
            let (k, v) = l.split_once(": ")?;
            Some((k.to_owned(), v.parse().ok()?))
        })
        .collect()
}

/// Counts read straight from the fixture text, independent of the loader.
fn fixture_oracle(path: &Path) -> Vec<(String, usize)> {
    let doc: toml::Table = std::fs::read_to_string(path.join("fixture.toml")).unwrap().parse().unwrap();
    let len = |key: &str| doc.get(key).and_then(|v| v.as_array()).map_or(0, Vec::len);
    vec![
        ("hospitals".into(), len("hospitals")),
        ("doctors".into(), len("doctors")),
        ("schedules".into(), len("health_schedules")),
        ("admins".into(), usize::from(doc.contains_key("admin"))),
    ]
}

#[test]
fn seeding_the_demo_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db");

    let first = seed(&db, &demo_fixture(), false);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let oracle = fixture_oracle(&demo_fixture());
    assert_eq!(counts(&first), oracle);
    assert_eq!(&oracle[..3], &[("hospitals".into(), 3), ("doctors".into(), 6), ("schedules".into(), 4)]);

    let again = seed(&db, &demo_fixture(), false);
    assert_eq!(again.status.code(), Some(3));

    let forced = seed(&db, &demo_fixture(), true);
    assert!(forced.status.success());
    assert!(counts(&forced).iter().all(|(_, n)| *n == 0), "merge adds nothing new");
}

#[test]
fn empty_fixture_seeds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("empty.toml");
    std::fs::write(&fixture, "").unwrap();
    let out = seed(&dir.path().join("db"), &fixture, false);
    assert!(out.status.success());
    assert!(counts(&out).iter().all(|(_, n)| *n == 0));
}

#[test]
fn invalid_fixture_exits_2_with_record_path() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("bad.toml");
    std::fs::write(
        &fixture,
        r#"
[[hospitals]]
name = "Only Hospital"
phone = "123"
latitude = 1.0
longitude = 2.0

[[doctors]]
hospital = "Missing Hospital"
name = "Dr. Nobody"
phone = "123"
email = "nobody@example.com"
"#,
    )
    .unwrap();
    let out = seed(&dir.path().join("db"), &fixture, false);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("doctors[0]"), "{stderr}");

    std::fs::write(&fixture, "[[hospitals]]\nname = ").unwrap();
    assert_eq!(seed(&dir.path().join("db"), &fixture, false).status.code(), Some(2));
}

struct Served {
    child: Child,
    base: String,
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(db: &Path, extra: &[&str]) -> Served {
    let mut child = medbook()
        .args(["serve", "--port", "0", "--db"])
        .arg(db)
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let stdout = child.stdout.take().unwrap();
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stdout).lines().map_while(Result::ok) {
            if let Some(addr) = line.strip_prefix("medbook listening on ") {
                let _ = tx.send(addr.to_owned());
            }
        }
    });
    let base = rx.recv_timeout(Duration::from_secs(20)).expect("server announced its address");
    Served { child, base }
}

async fn call(client: &reqwest::Client, method: reqwest::Method, url: String, token: Option<&str>, body: Option<Value>) -> (u16, Value) {
    let mut req = client.request(method, url);
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    if let Some(b) = body {
        req = req.json(&b);
    }
    let resp = req.send().await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.json().await.unwrap_or(Value::Null))
}

#[tokio::test]
async fn seeded_store_serves_the_patient_flow() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db");
    assert!(seed(&db, &demo_fixture(), false).status.success());
    let server = serve(&db, &[]);
    let c = reqwest::Client::new();
    let url = |p: &str| format!("{}{p}", server.base);
    use reqwest::Method as M;

    let (status, _) = call(&c, M::GET, url("/api/v1/health"), None, None).await;
    assert_eq!(status, 200);
    let (status, body) = call(
        &c,
        M::POST,
        url("/api/v1/auth/signup"),
        None,
        Some(json!({ "username": "amna", "email": "amna@mail.example", "password": "amna-password", "confirm_password": "amna-password" })),
    )
    .await;
    assert_eq!((status, body["message"].as_str()), (201, Some("successfully registered")));
    let (status, body) = call(
        &c,
        M::POST,
        url("/api/v1/auth/login"),
        None,
        Some(json!({ "username": "amna", "password": "amna-password" })),
    )
    .await;
    assert_eq!(status, 200);
    let token = body["token"].as_str().unwrap().to_owned();

    let (_, hospitals) = call(&c, M::GET, url("/api/v1/hospitals"), Some(&token), None).await;
    let rawal = hospitals
        .as_array()
        .unwrap()
        .iter()
        .find(|h| h["name"] == "Rawal Family Clinic")
        .unwrap();
    let (_, doctors) = call(&c, M::GET, url(&format!("/api/v1/hospitals/{}/doctors", rawal["id"].as_str().unwrap())), Some(&token), None).await;
    let kamran = doctors.as_array().unwrap().iter().find(|d| d["name"] == "Dr. Kamran Iqbal").unwrap();
    let doctor = kamran["id"].as_str().unwrap();

    // Works every day, so any date two days out has free slots.
    let date = (chrono::Utc::now() + chrono::Duration::days(2)).date_naive();
    let (status, avail) = call(&c, M::GET, url(&format!("/api/v1/doctors/{doctor}/availability?date={date}")), Some(&token), None).await;
    assert_eq!(status, 200);
    let free = avail["slots"].as_array().unwrap().iter().find(|s| s["status"] == "free").unwrap();
    let (status, booked) = call(
        &c,
        M::POST,
        url("/api/v1/appointments"),
        Some(&token),
        Some(json!({ "doctor_id": doctor, "date": date, "start": free["start"] })),
    )
    .await;
    assert_eq!(status, 201);
    assert_eq!(booked["message"], "successfully added");

    // The fixture admin can sign in.
    let (status, _) = call(
        &c,
        M::POST,
        url("/api/v1/admin/login"),
        None,
        Some(json!({ "username": "admin", "password": "demo-admin-password" })),
    )
    .await;
    assert_eq!(status, 200);
}

#[test]
fn missing_store_directory_is_created() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("nested/store");
    let _server = serve(&db, &[]);
    assert!(db.is_dir());
}

#[test]
fn occupied_port_fails_naming_the_port() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let dir = tempfile::tempdir().unwrap();
    let out = medbook()
        .args(["serve", "--port", &port, "--db"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(&port), "{stderr}");
    assert_eq!(stderr.trim().lines().count(), 1, "one-line cause: {stderr}");
}

#[test]
fn invalid_config_fails_with_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = medbook()
        .env("MEDBOOK_SLOT_MINUTES", "0")
        .args(["serve", "--db"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("slot_minutes"));
}

#[tokio::test]
async fn about_text_follows_config_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db");
    let config = dir.path().join("medbook.toml");
    let about = |text: &str| format!("[about]\nobjectives = \"{text}\"\ndevelopers = [\"Ops\"]\n");
    let c = reqwest::Client::new();

    std::fs::write(&config, about("first edition")).unwrap();
    let server = serve(&db, &["--config", config.to_str().unwrap()]);
    let (_, body) = call(&c, reqwest::Method::GET, format!("{}/api/v1/about", server.base), None, None).await;
    assert_eq!(body["objectives"], "first edition");
    drop(server);

    std::fs::write(&config, about("second edition")).unwrap();
    let server = serve(&db, &["--config", config.to_str().unwrap()]);
    let (_, body) = call(&c, reqwest::Method::GET, format!("{}/api/v1/about", server.base), None, None).await;
    assert_eq!(body["objectives"], "second edition");
}

#[test]
fn logs_are_json_lines_with_request_ids() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = medbook()
        .env("MEDBOOK_LOG", "info")
        .args(["serve", "--port", "0", "--db"])
        .arg(dir.path())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let stdout = child.stdout.take().unwrap();
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stdout).lines().map_while(Result::ok) {
            let _ = tx.send(line);
        }
    });
    let mut base = None;
    let mut lines = Vec::new();
    while base.is_none() {
        let line = rx.recv_timeout(Duration::from_secs(20)).unwrap();
        base = line.strip_prefix("medbook listening on ").map(str::to_owned);
        lines.push(line);
    }
    let base = base.unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(async { reqwest::get(format!("{base}/api/v1/health")).await.unwrap() });
    let deadline = std::time::Instant::now() + Duration::from_secs(10);
    let mut request_line = None;
    while request_line.is_none() && std::time::Instant::now() < deadline {
        if let Ok(line) = rx.recv_timeout(Duration::from_millis(200)) {
            if line.contains("\"request_id\"") {
                request_line = Some(line.clone());
            }
            lines.push(line);
        }
    }
    let _ = child.kill();
    let _ = child.wait();
    let line = request_line.expect("a request log line");
    let v: Value = serde_json::from_str(&line).unwrap();
    assert!(v["timestamp"].is_string());
    assert!(v["level"].is_string());
    for l in lines.iter().filter(|l| !l.starts_with("medbook listening")) {
        serde_json::from_str::<Value>(l).unwrap_or_else(|e| panic!("not JSON ({e}): {l}"));
    }
}
