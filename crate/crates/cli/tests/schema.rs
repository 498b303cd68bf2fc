//! `run --out` artifacts against the published schemas.

use std::collections::HashMap;
use std::process::Command;

use jsonschema::{Retrieve, Uri};
use serde_json::{json, Value};

const FIG2: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/scenarios/fig2.json");
const BASE: &str = "https://resched.invalid/schema/";

struct Local(HashMap<String, Value>);

impl Retrieve for Local {
    fn retrieve(&self, uri: &Uri<String>) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        self.0.get(uri.as_str()).cloned().ok_or_else(|| format!("no schema at {uri}").into())
    }
}

fn check(def: &str, value: &Value) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/");
    let docs = ["scenario.schema.json", "api.schema.json"]
        .map(|n| (format!("{BASE}{n}"), serde_json::from_str(&std::fs::read_to_string(format!("{dir}{n}")).unwrap()).unwrap()));
    let v = jsonschema::options()
        .with_retriever(Local(docs.into_iter().collect()))
        .build(&json!({ "$ref": format!("{BASE}api.schema.json#/$defs/{def}") }))
        .unwrap();
    let errors: Vec<String> = v.iter_errors(value).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{def}: {errors:#?}");
}

#[test]
fn run_artifacts_match_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = Command::new(env!("CARGO_BIN_EXE_resched"))
        .args(["run", "--scenario", FIG2, "--event", "stoppage:CAP1:2:3", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let read = |f: &str| std::fs::read_to_string(out.join(f)).unwrap();
    check("CliRunResult", &serde_json::from_str(&read("result.json")).unwrap());
    check("KpiReport", &serde_json::from_str(&read("kpis.json")).unwrap());
    check("World", &serde_json::from_str(&read("world.json")).unwrap());
    let trace = read("trace.jsonl");
    assert!(!trace.is_empty());
    for line in trace.lines() {
        check("TraceRecord", &serde_json::from_str(line).unwrap());
    }
}
