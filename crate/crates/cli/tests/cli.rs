use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breuilkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

#[test]
fn rank1_list_and_char() {
    assert_eq!(json(&["rank1", "--l", "3", "--list"])["result"]["count"], 20);
    assert_eq!(json(&["rank1", "--l", "5", "--list"])["result"]["count"], 112);
    let r = json(&["rank1", "--l", "3", "--char", "0", "1", "1"]);
    assert_eq!(r["result"]["trivial"], true);
    assert_eq!(r["command"]["name"], "rank1");
    assert_eq!(r["tower"]["l"], 3);
    assert_eq!(code(&["rank1", "--l", "3", "--char", "1", "1", "1"]), 2);
    assert_eq!(code(&["rank1", "--l", "9", "--list"]), 2);
    assert_eq!(code(&["rank1", "--l", "3"]), 2);
}

#[test]
fn csv_for_lists_only() {
    let out = run(&["rank1", "--l", "3", "--list", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.starts_with("r,r_prime,a,c,unit,cyclo_exp"));
    assert_eq!(code(&["rank1", "--l", "3", "--char", "0", "1", "1", "--format", "csv"]), 2);
}

#[test]
fn lattice_reports() {
    let r = json(&["lattice", "--l", "3", "--k", "1", "--plot"]);
    assert_eq!(r["result"]["count"], 9);
    assert_eq!(r["result"]["maximal"], "M(4,1,0;8,2,1;6,1)");
    assert_eq!(r["result"]["minimal"], "M(0,1,0;4,2,1;2,1)");
    assert!(r["result"]["plot"]["svg"].as_str().unwrap().starts_with("<svg"));
    assert_eq!(r["result"]["plot"]["ascii"].as_array().unwrap().len(), 7);
    let r = json(&["lattice", "--l", "3", "--k", "3"]);
    let pts = r["result"]["report"]["points"].as_array().unwrap();
    assert!(pts.iter().all(|p| p["r_prime"] == 0));
    let r = json(&["lattice", "--l", "3", "--k", "0"]);
    let pts = r["result"]["report"]["points"].as_array().unwrap();
    assert!(!pts.is_empty() && pts.iter().all(|p| p["r_prime"].as_u64() > p["s_prime"].as_u64()));
    assert_eq!(code(&["lattice", "--l", "3", "--k", "7"]), 2);
    assert_eq!(code(&["lattice", "--l", "3", "--k", "1", "--d", "0"]), 2);
}

#[test]
fn admissible_reports() {
    let r = json(&["admissible", "--l", "3", "--m", "1", "--brute"]);
    let mods = r["result"]["modules"].as_array().unwrap();
    assert_eq!(mods.len(), 2);
    for m in mods {
        assert_eq!(
            (m["inertia"]["top_exp"].as_u64(), m["inertia"]["bottom_exp"].as_u64()),
            (Some(1), Some(1))
        );
        assert_ne!(m["rho_bar"]["top"]["unit"], m["rho_bar"]["bottom"]["unit"]);
    }
    assert_eq!(r["result"]["brute_force"]["agrees"], true);
    let r = json(&["admissible", "--l", "3", "--m", "2"]);
    let forms = r["result"]["forms"].as_array().unwrap();
    assert_eq!(forms.len(), 2);
    assert!(forms.iter().all(|f| f["peu_ramifie"] == true));
    assert_eq!(code(&["admissible", "--l", "3", "--m", "4"]), 3);
}

#[test]
fn ext4_reports() {
    let r = json(&["ext4", "--l", "3", "--i", "1", "--j", "0", "--a", "1", "--b", "2", "--oracle"]);
    assert_eq!(r["result"]["normal_form_dim"], 2);
    assert_eq!(r["result"]["constrained"]["dim"], 1);
    assert_eq!(r["result"]["oracle"]["dim"], 2);
    assert_eq!(r["result"]["base"], "M(2,1,0;6,2,0;0,1)");
    assert_eq!(code(&["ext4", "--l", "3", "--i", "1", "--j", "0", "--a", "1", "--b", "1"]), 3);
}

#[test]
fn cohom_and_guard() {
    let r = json(&["cohom", "--l", "3", "--e", "2", "--n", "2"]);
    assert_eq!(r["result"]["sizes"]["additive"]["h1"], 1);
    assert_eq!(r["result"]["sizes"]["multiplicative"]["h1"], 2);
    assert_eq!(r["result"]["multiplicative_representatives"].as_array().unwrap().len(), 2);
    assert_eq!(code(&["cohom", "--l", "3", "--e", "4", "--f", "2", "--n", "4"]), 4);
    let out = Command::new(env!("CARGO_BIN_EXE_breuilkit"))
        .args(["cohom", "--l", "3", "--e", "4", "--f", "2", "--n", "3"])
        .env("BREUILKIT_GUARD", "100000000")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn faults_are_seeded() {
    let a = json(&["faults", "--count", "100", "--seed", "5"]);
    let b = json(&["faults", "--count", "100", "--seed", "5"]);
    assert_eq!(a, b);
    assert_eq!(a["result"]["caught"], 100);
    assert_eq!(a["result"]["missed"].as_array().unwrap().len(), 0);
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let args = ["admissible", "--l", "3", "--m", "2"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("{\n  \"command\""));
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["command", "result", "tower"]);
    let t = json(&["rank1", "--l", "3", "--char", "0", "1", "1", "--timing"]);
    assert!(t["timing"]["elapsed_ms"].as_f64().is_some());
}

#[test]
fn out_writes_file() {
    let dir = std::env::temp_dir().join(format!("breuilkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("r.json");
    let out = run(&["rank1", "--l", "3", "--list", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["count"], 20);
    std::fs::remove_dir_all(&dir).unwrap();
}
