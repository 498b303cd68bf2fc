use std::process::{Command, Output};

const FIG2: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/scenarios/fig2.json");

fn resched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resched")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = resched(&["run", "--scenario", FIG2, "--event", "rm-delay:RM1:2:4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["result.json", "kpis.json", "world.json", "trace.jsonl"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let result: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["stabilized"], true);
    assert!(stdout(&o).starts_with("stabilized"));
}

#[test]
fn run_without_events_is_identity() {
    let o = resched(&["run", "--scenario", FIG2, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["iterations"], 0);
    assert_eq!(
        v["kpis"],
        serde_json::json!({
            "iterations": 0, "rescheduled_material_agents": 0, "rescheduled_capacity_agents": 0,
            "rescheduled_finished_goods": 0, "fg_fulfillment_by_orders": 1.0, "fg_fulfillment_by_volume": 1.0,
            "max_delay_days": 0
        })
    );
}

#[test]
fn exit_codes() {
    assert_eq!(resched(&["run", "--scenario", "/definitely/missing.json"]).status.code(), Some(1));
    assert_eq!(resched(&["run", "--scenario", FIG2, "--event", "stoppage:CAP2"]).status.code(), Some(1));
    assert_eq!(resched(&["run", "--scenario", FIG2, "--event", "stoppage:NOPE:1:2"]).status.code(), Some(1));
    let capped = resched(&["run", "--scenario", FIG2, "--event", "stoppage:CAP2:1:9", "--max-iterations", "1"]);
    assert_eq!(capped.status.code(), Some(2));
    assert_eq!(resched(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn gen_is_reproducible_and_loadable() {
    let a = resched(&["gen", "--seed", "7"]);
    let b = resched(&["gen", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, resched(&["gen", "--seed", "8"]).stdout);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let o = resched(&["gen", "--seed", "7", "--out", path.to_str().unwrap(), "--json"]);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["materials"], 39);
    assert_eq!(summary["capacities"], 18);
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
    assert_eq!(resched(&["run", "--scenario", path.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn sweep_table_has_documented_header() {
    let o = resched(&["sweep", "--durations", "1,3", "--kinds", "line_stoppage,sfg_quarantine"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "disruption_type,days_on_hand,disruption_duration,seed,iterations,rescheduled_material_agents,\
         rescheduled_capacity_agents,rescheduled_fgs,fg_fulfillment_by_orders,fg_fulfillment_by_volume,\
         max_delay_days,stabilized,error"
    );
    assert_eq!(lines.count(), 8);
    let json = resched(&["sweep", "--durations", "2", "--kinds", "all", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_over_fixed_scenario() {
    let o = resched(&["sweep", "--scenario", FIG2, "--kinds", "stoppage", "--durations", "2", "--doh", "14.8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn solve_reports_oracle_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    std::fs::write(
        &p,
        r#"{"problem": {"horizon": 3, "supply": [2, 0, 3], "mode": "partial",
            "orders": [{"id": "A", "demand": {"1": 4}, "priority": 2}, {"id": "B", "demand": {"2": 3}}]}}"#,
    )
    .unwrap();
    let o = resched(&["solve", "--input", p.to_str().unwrap(), "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["matches_oracle"], true);

    let aon = resched(&["solve", "--input", p.to_str().unwrap(), "--mode", "all-or-nothing", "--check"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&aon)).unwrap();
    assert_eq!(v["mode"], "all_or_nothing");
    assert_eq!(v["matches_oracle"], true);

    let r = dir.path().join("r.json");
    std::fs::write(&r, r#"{"horizon": 2, "requests": {"S1": {"0": 2}, "S2": {"1": 1}}}"#).unwrap();
    let o = resched(&["solve", "--input", r.to_str().unwrap(), "--mode", "consolidation", "--check"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["matches_oracle"], true);
    // cumulative reduction is the larger of the two cumulative requests
    assert_eq!(v["plan"]["r"], serde_json::json!([2, 0]));
}

#[test]
fn help_documents_every_flag() {
    for cmd in ["gen", "run", "sweep", "solve", "serve"] {
        let text = stdout(&resched(&[cmd, "--help"]));
        let lines: Vec<&str> = text.lines().skip_while(|l| *l != "Options:").skip(1).collect();
        for (i, line) in lines.iter().enumerate() {
            let t = line.trim_start();
            if !t.starts_with('-') {
                continue;
            }
            // flag, optional <VALUE>, then the description on this line or the next
            let rest = t.split_once("  ").map(|(_, r)| r.trim()).unwrap_or("");
            let described = if rest.is_empty() {
                lines.get(i + 1).is_some_and(|n| !n.trim_start().starts_with('-') && !n.trim().is_empty())
            } else {
                !rest.starts_with('[')
            };
            assert!(described, "{cmd}: `{t}` has no help text");
        }
    }
    let text = stdout(&resched(&["serve", "--help"]));
    assert!(text.contains("RESCHED_PORT") && text.contains("RESCHED_TOKEN"));
}

#[test]
fn serve_rejects_unbindable_address() {
    let o = Command::new(env!("CARGO_BIN_EXE_resched"))
        .args(["serve", "--host", "203.0.113.1", "--port", "1"])
        .env_remove("RESCHED_PORT")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
