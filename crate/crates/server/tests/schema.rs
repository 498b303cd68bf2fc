//! Published JSON schemas against real payloads.

use std::collections::HashMap;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use jsonschema::{Retrieve, Uri, Validator};
use resched_core::metrics::{sweep, SweepConfig, SweepGrid};
use resched_core::model::DisruptionKind;
use resched_core::scenario::{generate_scenario, GeneratorParams, FIG2_JSON};
use resched_server::{router, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

const BASE: &str = "https://resched.invalid/schema/";

struct Local(HashMap<String, Value>);

impl Retrieve for Local {
    fn retrieve(&self, uri: &Uri<String>) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        self.0.get(uri.as_str()).cloned().ok_or_else(|| format!("no schema at {uri}").into())
    }
}

fn load(name: &str) -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/");
    serde_json::from_str(&std::fs::read_to_string(format!("{path}{name}")).unwrap()).unwrap()
}

fn validator(file: &str, def: Option<&str>) -> Validator {
    let docs = ["scenario.schema.json", "api.schema.json"].map(|n| (format!("{BASE}{n}"), load(n)));
    let target = match def {
        Some(d) => json!({ "$ref": format!("{BASE}{file}#/$defs/{d}") }),
        None => json!({ "$ref": format!("{BASE}{file}") }),
    };
    jsonschema::options().with_retriever(Local(docs.into_iter().collect())).build(&target).unwrap()
}

fn api(def: &str) -> Validator {
    validator("api.schema.json", Some(def))
}

#[track_caller]
fn assert_valid(v: &Validator, value: &Value) {
    let errors: Vec<String> = v.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn schemas_are_valid_draft_2020_12() {
    let meta = jsonschema::draft202012::meta::validator();
    for name in ["scenario.schema.json", "api.schema.json"] {
        assert_valid(&meta, &load(name));
    }
}

#[test]
fn scenarios_match_scenario_schema() {
    let v = validator("scenario.schema.json", None);
    assert_valid(&v, &serde_json::from_str(FIG2_JSON).unwrap());
    for seed in 0..4 {
        let file = generate_scenario(&GeneratorParams { seed, ..Default::default() }).unwrap();
        assert_valid(&v, &serde_json::from_str(&file.to_canonical_json()).unwrap());
    }
    let mut bad: Value = serde_json::from_str(FIG2_JSON).unwrap();
    bad["capacities"][0]["daily"] = json!(-1);
    assert!(!v.is_valid(&bad));
    bad = serde_json::from_str(FIG2_JSON).unwrap();
    bad["orders"][0]["demand"] = json!({"day3": 1});
    assert!(!v.is_valid(&bad));
    bad = serde_json::from_str(FIG2_JSON).unwrap();
    bad["extra"] = json!(true);
    assert!(!v.is_valid(&bad));
}

#[test]
fn sweep_report_matches_schema() {
    let grid = SweepGrid {
        kinds: DisruptionKind::ALL.to_vec(),
        durations: vec![2],
        days_on_hand: vec![3.8],
        seeds: vec![0, 1],
    };
    let config = SweepConfig::default();
    let report = sweep(&grid, &config);
    assert_valid(&api("SweepReport"), &serde_json::to_value(&report).unwrap());
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() })
}

#[tokio::test]
async fn api_payloads_match_schema() {
    let app = router(ServerConfig::default());
    let (_, health) = call(&app, Method::GET, "/health", None).await;
    assert_valid(&api("Health"), &health);

    let (status, created) = call(&app, Method::POST, "/sessions", Some(serde_json::from_str(FIG2_JSON).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_valid(&api("SessionCreated"), &created);
    let s = format!("/sessions/{}", created["id"].as_str().unwrap());

    let event = json!({"kind": "raw_material_delay", "target": "RM1", "start_day": 4, "duration_days": 2});
    assert_valid(&api("DisruptionRequest"), &event);
    let (status, run) = call(&app, Method::POST, &format!("{s}/disruptions"), Some(event)).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid(&api("RunSummary"), &run);

    let expedite = json!({"type": "expedite_arrival", "material": "RM1", "from_day": 8, "to_day": 7});
    assert_valid(&api("Intervention"), &expedite);
    let (status, run) = call(&app, Method::POST, &format!("{s}/interventions?sandbox=true"), Some(expedite)).await;
    assert_eq!(status, StatusCode::OK, "{run}");
    assert_valid(&api("RunSummary"), &run);

    let stop = json!({"events": [{"kind": "line_stoppage", "target": "CAP1", "start_day": 2, "duration_days": 2}]});
    assert_valid(&api("StepRequest"), &stop);
    let (status, step) = call(&app, Method::POST, &format!("{s}/step"), Some(stop)).await;
    assert_eq!(status, StatusCode::OK, "{step}");
    assert_valid(&api("StepResponse"), &step);
    let mut finished = step["finished"] == true;
    while !finished {
        let (status, step) = call(&app, Method::POST, &format!("{s}/step"), None).await;
        assert_eq!(status, StatusCode::OK, "{step}");
        assert_valid(&api("StepResponse"), &step);
        finished = step["finished"] == true;
    }

    for (path, def) in [
        ("", "SessionInfo"),
        ("/world", "WorldView"),
        ("/kpis", "KpiReport"),
        ("/trace", "Trace"),
        ("/diff", "ScheduleDiff"),
        ("/history", "History"),
    ] {
        let (status, body) = call(&app, Method::GET, &format!("{s}{path}"), None).await;
        assert_eq!(status, StatusCode::OK, "{path}");
        assert_valid(&api(def), &body);
    }

    let (status, err) = call(&app, Method::POST, &format!("{s}/disruptions"), Some(json!({"kind": "flood"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_valid(&api("Error"), &err);
    let (_, err) = call(&app, Method::GET, "/sessions/nope/kpis", None).await;
    assert_valid(&api("Error"), &err);
}
