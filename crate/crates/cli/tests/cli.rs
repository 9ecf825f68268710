use std::process::{Command, Output};

fn gpk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpk")).args(args).env_remove("GPK_BUDGET_MS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eval_examples() {
    let o = gpk(&["eval", "--graph", "k2", "--poly", "potts", "--engine", "recursive"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "q^2 + q*v\n");
    let o = gpk(&["eval", "--graph", "e1", "--poly", "tutte", "--engine", "oracle"]);
    assert_eq!(stdout(&o), "1\n");
    let o = gpk(&["eval", "--graph", "loop1", "--poly", "cover", "--engine", "recursive"]);
    assert_eq!(stdout(&o), "X + Y\n");
}

#[test]
fn every_engine_agrees_on_k4() {
    let outs: Vec<String> = ["recursive", "expansion", "oracle", "synthesized"]
        .iter()
        .map(|e| stdout(&gpk(&["eval", "-g", "k4", "-p", "tutte", "-e", e])))
        .collect();
    assert!(outs.iter().all(|o| o == &outs[0]), "{outs:?}");
}

#[test]
fn exit_codes() {
    assert_eq!(gpk(&["eval", "--graph", "k2"]).status.code(), Some(1));
    assert_eq!(gpk(&["eval", "-g", "e2", "-p", "noble-welsh", "-e", "recursive"]).status.code(), Some(1));
    assert_eq!(gpk(&["eval", "-g", "nonsense", "-p", "potts"]).status.code(), Some(1));
    assert_eq!(gpk(&["eval", "-g", "k4", "-p", "xi", "--budget-ms", "0"]).status.code(), Some(3));
    assert_eq!(gpk(&["eval", "-g", "k4", "-p", "xi", "--max-universe", "3"]).status.code(), Some(3));
    assert_eq!(gpk(&["--help"]).status.code(), Some(0));
}

#[test]
fn budget_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_gpk"))
        .args(["eval", "-g", "k4", "-p", "xi", "-e", "synthesized"])
        .env("GPK_BUDGET_MS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn order_file_violating_the_order_formula_is_infeasible() {
    let dir = std::env::temp_dir().join(format!("gpk-order-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("order.txt");
    std::fs::write(&path, "v1 e1 v2\n").unwrap();
    let o = gpk(&["eval", "-g", "k2", "-p", "potts", "--order", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("order"));
    // The oracle does not walk a deconstruction tree, so any order is accepted.
    let o = gpk(&["eval", "-g", "k2", "-p", "potts", "-e", "oracle", "--order", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    std::fs::write(&path, "e1 v2 v1\n").unwrap();
    let o = gpk(&["eval", "-g", "k2", "-p", "potts", "--order", path.to_str().unwrap()]);
    assert_eq!(stdout(&o), "q^2 + q*v\n");
}

#[test]
fn stuck_definition_exits_infeasible() {
    let dir = std::env::temp_dir().join(format!("gpk-def-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("edges-only.sexp");
    std::fs::write(
        &path,
        "(recursive-definition edges-only (order (forall (a b) (implies (and (PE a) (PV b)) (rel O a b))))
           (rule drop (guard (PE x)) (scheme-ref delete) (coeff (const t))))",
    )
    .unwrap();
    let o = gpk(&["eval", "-g", "k2", "--def", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = gpk(&["eval", "-g", "empty", "--def", path.to_str().unwrap()]);
    assert_eq!(stdout(&o), "1\n");
}

#[test]
fn check_invariance_and_fundamental() {
    let o = gpk(&["check", "--poly", "matching", "--corpus", "small", "--engines", "recursive,expansion,oracle"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("0 mismatches\n"), "{}", stdout(&o));
    let o = gpk(&["invariance", "--poly", "potts", "--graph", "k3", "--orders", "all"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("k3: 36 orders, 1 distinct polynomial\n"), "{}", stdout(&o));
    let o = gpk(&["fundamental", "--trials", "200", "--max-size", "4", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "200/200 agree\n");
}

#[test]
fn renaming_reports_the_witness() {
    let o = gpk(&["renaming", "-p", "noble-welsh", "-g", "e3", "--shift"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("not invariant"));
    let o = gpk(&["renaming", "-p", "potts", "-g", "k3", "--map", "q=v,v=q"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn machine_output_is_deterministic_json() {
    let args = ["--format", "machine", "check", "-p", "cover", "-g", "d2cycle", "-g", "loop1"];
    let a = stdout(&gpk(&args));
    let b = stdout(&gpk(&args));
    assert_eq!(a, b);
    let doc: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(doc["command"], "check");
    assert_eq!(doc["results"]["mismatches"], 0);
    assert_eq!(doc["results"]["instances"][1]["values"][0]["polynomial"], "X + Y");
}

#[test]
fn graph_files_are_read() {
    let dir = std::env::temp_dir().join(format!("gpk-graph-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("p3.graph");
    std::fs::write(&path, "directed: false\nvertex a\nvertex b\nvertex c\nedge ab a b\nedge bc b c\n").unwrap();
    let o = gpk(&["eval", "-g", path.to_str().unwrap(), "-p", "matching"]);
    assert_eq!(stdout(&o), "X^3 + 2*X*Y\n");
}
