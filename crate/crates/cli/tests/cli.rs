use std::path::PathBuf;
use std::process::{Command, Output};

fn toposwitch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toposwitch")).args(args).output().unwrap()
}

fn data(rel: &str) -> String {
    format!("{}/../../data/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("toposwitch-{}-{name}", std::process::id()))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_lists_radial_buses() {
    let o = toposwitch(&["validate", &data("ieee118.json")]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    let buses: Vec<&str> = out.lines().collect();
    assert_eq!(buses, ["10", "73", "87", "111", "112", "116", "117"]);
}

#[test]
fn paradox_emit_writes_case() {
    let path = scratch("emit.json");
    let o = toposwitch(&["paradox", "consistency-b", "--emit", path.to_str().unwrap()]);
    assert!(o.status.success());
    let cert: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert!(cert.get("case").is_some());
}

#[test]
fn opf_json_reports_cost() {
    let o = toposwitch(&["opf", &data("ieee118.json"), "--json"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["feasible"], true);
    let free = toposwitch(&["opf", &data("ieee118.json"), "--unconstrained", "--json"]);
    let free: serde_json::Value = serde_json::from_slice(&free.stdout).unwrap();
    assert!(free["total_cost"].as_f64().unwrap() <= doc["total_cost"].as_f64().unwrap() + 1e-6);
}

#[test]
fn reduce_verify_worked_instance() {
    let o = toposwitch(&["reduce", "--set", "-1,-2,-3,4,8", "--verify"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("subset sum: yes"));
    assert!(out.contains("topology feasible: yes"));
    assert!(out.contains("witness subset {-3, -1, 4}"));
    assert!(out.contains("agree: true"));
}

#[test]
fn reduce_rejects_zero() {
    let o = toposwitch(&["reduce", "--set", "1,0,-1"]);
    assert!(!o.status.success());
}

#[test]
fn paradox_bundled_kinds() {
    for kind in ["commutativity", "monotonicity", "consistency-a", "consistency-b"] {
        let o = toposwitch(&["paradox", kind]);
        assert!(o.status.success(), "{kind}");
        assert!(stdout(&o).starts_with("kind "));
    }
}

#[test]
fn switch_trace_columns() {
    let case = scratch("case.json");
    let cert = toposwitch(&["paradox", "commutativity", "--emit", case.to_str().unwrap()]);
    assert!(cert.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&case).unwrap()).unwrap();
    std::fs::write(&case, serde_json::to_string(&doc["case"]).unwrap()).unwrap();

    let trace = scratch("trace.csv");
    let o = toposwitch(&[
        "switch",
        case.to_str().unwrap(),
        "--family",
        "greedy",
        "--k",
        "2",
        "--connected-only",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("final cost 150.0000"));
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("iteration,action_kind,line_ids,cost_before,cost_after,solves_so_far"));
    let first: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(&first[..3], ["1", "remove", "3 4"]);
}

#[test]
fn laws_small_corpus() {
    let o = toposwitch(&["laws", "--trials", "20", "--seed", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("circuits 20"));
}

#[test]
fn missing_case_is_an_error() {
    let o = toposwitch(&["opf", "/nonexistent/case.json"]);
    assert_eq!(o.status.code(), Some(1));
}
