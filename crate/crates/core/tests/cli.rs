use std::process::{Command, Output};

fn adlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adlab")).args(args).env_remove("ADLAB_BUDGET").output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = adlab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn dim_of_small_interval() {
    let text = stdout(&["dim", "--set", "1,2,3,4"]);
    assert!(text.starts_with("dim_1 = 3\n"), "{text}");
    let text = stdout(&["dim", "--set", "1,2,3,4", "--k", "2"]);
    assert!(text.starts_with("dim_2 = 2\n"), "{text}");
}

#[test]
fn json_output_parses() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&["energy", "--set", "0,1", "--k", "3", "--json"])).unwrap();
    assert_eq!(v["value_dec"], "20");
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&["dirichlet", "--set", "1,2,4", "--mod", "7", "--no-dim", "--json"])).unwrap();
    assert_eq!(v["value"], "2/7");
}

#[test]
fn gen_writes_a_set_file() {
    let text = stdout(&["gen", r#"{"generator":"es_product","s":2,"h":2}"#]);
    let set = adlab::setfile::parse_set(&text).unwrap();
    assert_eq!(set, adlab::GroundSet::integers([6, 12, 18, 36]));
}

#[test]
fn decompose_trace_replays() {
    let dir = std::env::temp_dir().join(format!("adlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace = dir.join("trace.json");
    let trace_s = trace.to_str().unwrap();
    stdout(&["decompose", "--set", "1,2,4,8,16,32,64,128", "--trace", trace_s]);
    let text = stdout(&["decompose", "--replay", trace_s]);
    assert!(text.starts_with("trace replays"), "{text}");

    let mut bad = std::fs::read_to_string(&trace).unwrap();
    bad = bad.replacen("\"t_add_q_b\": \"", "\"t_add_q_b\": \"9", 1);
    std::fs::write(&trace, bad).unwrap();
    assert_eq!(adlab(&["decompose", "--replay", trace_s]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn errors_exit_with_two() {
    assert_eq!(adlab(&["gen", r#"{"generator":"nope"}"#]).status.code(), Some(2));
    assert_eq!(adlab(&["dim", "--set", "1,x"]).status.code(), Some(2));
    assert_eq!(adlab(&["verify", "--suite", "core", "--claims", "no_such_claim"]).status.code(), Some(2));
    assert_eq!(adlab(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_restricted_suite() {
    let dir = std::env::temp_dir().join(format!("adlab-verify-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("r.json");
    let text = stdout(&["verify", "--suite", "core", "--claims", "plunnecke,rudin", "--out", out.to_str().unwrap()]);
    assert!(text.contains("hard_violations=0"), "{text}");
    let report: adlab::harness::SuiteReport = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report.schema, 1);
    assert_eq!(report.claims.len(), 2);
    assert!(report.summary.iter().any(|s| s.claim == "rudin" && s.fit.is_some()));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn huge_parameters_fail_cleanly() {
    for args in [
        &["dim", "--set", "1,2", "--k", "4000000000"][..],
        &["span", "--set", "1,2", "--k", "4000000000"],
        &["energy", "--set", "1,2,3", "--k", "100000"],
        &["sumset", "--set", "1,2", "--n", "4000000000"],
        &["subgroup", "--p", "2147483647", "--t", "2147483646"],
    ] {
        let out = adlab(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("adlab: "), "{args:?}");
    }
}
