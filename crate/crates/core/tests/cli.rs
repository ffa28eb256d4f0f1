use std::process::Command;

fn bisect(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bisect")).args(args).output().unwrap()
}

#[test]
fn solve_pappus_csv() {
    let out = bisect(&["solve", "--generate", "pappus", "--m", "10,8", "--relaxation", "new", "--cuts", "--out", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["instance,n,m1,m2,basic,new,new+cuts,ub", "pappus,18,10,8,,6,7,8"]);
}

#[test]
fn solve_johnson_json() {
    let out = bisect(&["solve", "--generate", "johnson:7,2", "--m", "11,10", "--ub", "none"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["relaxations"][0]["ceiled_bound"], 37.0);
    assert!(v["upper_bound"].is_null());
}

#[test]
fn missing_file_fails() {
    let out = bisect(&["solve", "--instance", "missing.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
}

#[test]
fn bad_combinations_fail() {
    let out = bisect(&["solve", "--generate", "pappus", "--m", "10,8", "--relaxation", "wz", "--cuts"]);
    assert!(!out.status.success());
    let out = bisect(&["solve", "--generate", "pappus", "--m", "10;8"]);
    assert!(!out.status.success());
    let out = bisect(&["solve"]);
    assert!(!out.status.success());
}

#[test]
fn compare_reports_checks() {
    let out = bisect(&["compare", "--generate", "gnp:8,0.5,1", "--m", "5,3", "--ub", "brute"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 3);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}
