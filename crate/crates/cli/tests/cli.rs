use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bbt_lab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbt-lab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn bbt-lab")
}

fn summary(o: &Output) -> Value {
    let stdout = String::from_utf8_lossy(&o.stdout);
    let last = stdout.lines().last().expect("summary line");
    serde_json::from_str(last).expect("summary is JSON")
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn run_pipeline(out: &Path, threads: &str) {
    let steps: [&[&str]; 8] = [
        &["scaling", "--n-values", "3,5,7"],
        &["census", "--n", "3"],
        &["npn", "--n", "3"],
        &["synth", "--n", "3", "--all"],
        &["synth", "--n", "4", "--sample", "300", "--seed", "11", "--sample-mode", "stratified"],
        &["minsupport", "--n", "3", "--all"],
        &["minsupport", "--n", "4", "--sample", "200", "--seed", "5", "--certs"],
        &["correlate", "--certs"],
    ];
    let certs4 = out.join("certs4.jsonl");
    let certs3 = out.join("certs_n3.jsonl");
    for step in steps {
        let mut args: Vec<&str> = vec!["--threads", threads];
        args.extend_from_slice(step);
        let extra;
        if step[0] == "minsupport" && step.last() == Some(&"--certs") {
            extra = certs4.to_str().unwrap().to_string();
            args.push(&extra);
        } else if step[0] == "correlate" {
            extra = certs3.to_str().unwrap().to_string();
            args.push(&extra);
        }
        let o = bbt_lab(out, &args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let s = summary(&o);
        assert_eq!(s["ok"], true);
        assert_eq!(s["command"], step[0]);
    }
}

#[test]
fn artifacts_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path(), "4");
    run_pipeline(b.path(), "1");
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    assert!(fa.len() >= 12, "{:?}", fa.keys());
    for (name, bytes) in &fa {
        assert_eq!(bytes, &fb[name], "{name} differs between runs");
    }
}

#[test]
fn existing_outputs_are_not_overwritten_without_force() {
    let d = tempfile::tempdir().unwrap();
    assert!(bbt_lab(d.path(), &["census", "--n", "3"]).status.success());
    let again = bbt_lab(d.path(), &["census", "--n", "3"]);
    assert_eq!(again.status.code(), Some(2));
    assert_eq!(summary(&again)["ok"], false);
    let forced = bbt_lab(d.path(), &["--force", "census", "--n", "3"]);
    assert!(forced.status.success());
}

#[test]
fn usage_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["synth", "--n", "9", "--all"][..],
        &["minsupport", "--n", "5", "--all"][..],
        &["analyze", "--n", "3"][..],
        &["synth", "--n", "3", "--fid", "0x1ff"][..],
    ] {
        let o = bbt_lab(d.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn fault_injected_certificates_are_rejected_with_the_fid() {
    let d = tempfile::tempdir().unwrap();
    assert!(bbt_lab(d.path(), &["minsupport", "--n", "3", "--all"]).status.success());
    let path = d.path().join("certs_n3.jsonl");
    let clean = bbt_lab(d.path(), &["verify", "--certs", path.to_str().unwrap()]);
    assert!(clean.status.success());
    assert_eq!(summary(&clean)["passed"], 256);

    let text = std::fs::read_to_string(&path).unwrap();
    let bad: Vec<String> = text
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            if v["fid"] == "0xe8" {
                let mask = v["mask"].as_array_mut().unwrap();
                let i = mask.iter().position(|e| e != 0).unwrap();
                mask[i] = (-mask[i].as_i64().unwrap()).into();
            }
            serde_json::to_string(&v).unwrap()
        })
        .collect();
    let bad_path = d.path().join("bad.jsonl");
    std::fs::write(&bad_path, bad.join("\n") + "\n").unwrap();

    let o = bbt_lab(d.path(), &["verify", "--certs", bad_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let s = summary(&o);
    assert_eq!(s["passed"], 255);
    assert_eq!(s["failures"][0]["fid"], "0xe8");
    assert!(String::from_utf8_lossy(&o.stdout).contains("fid 0xe8"));

    let o = bbt_lab(d.path(), &["correlate", "--certs", bad_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0xe8"));
}

#[test]
fn budget_exhaustion_is_reported_separately() {
    let d = tempfile::tempdir().unwrap();
    let o = bbt_lab(
        d.path(),
        &["minsupport", "--n", "4", "--fid", "0x6996", "--fid", "0x1", "--budget-nodes", "5"],
    );
    assert_eq!(o.status.code(), Some(4));
    let s = summary(&o);
    // Parity is a single character, so only the other function runs out.
    assert_eq!(s["exhausted"], serde_json::json!(["0x1"]));
    assert_eq!(s["solved"], 1);
    let certs = std::fs::read_to_string(d.path().join("certs_n4.jsonl")).unwrap();
    assert_eq!(certs.lines().count(), 2);
}

#[test]
fn analyze_reports_exact_values() {
    let d = tempfile::tempdir().unwrap();
    let o = bbt_lab(d.path(), &["analyze", "--n", "5", "--family", "parity"]);
    assert!(o.status.success());
    assert_eq!(summary(&o)["log2_mu"], "-5/2");
    let o = bbt_lab(d.path(), &["analyze", "--n", "3", "--fid", "0x3"]);
    assert_eq!(summary(&o)["log2_mu"], "-2/3");
}
