use std::fs;
use std::process::Command;

fn fogverse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fogverse"))
}

fn write_config(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, body).unwrap();
    p
}

const SHORT: &str = "[world]\nusers = 60\n[experiment]\nhorizon_s = 15.0\nwarmup_s = 2.0\n";

#[test]
fn run_writes_records_and_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SHORT}[workload]\ntx_rate_per_user_s = 0.5\n"));
    let out = dir.path().join("out");
    let st = fogverse()
        .args(["run", "--policy", "fogedge", "--seed", "5", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success());
    for f in ["records.csv", "chain.txt", "results.csv", "scenarios.csv", "run_metadata.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let results = fogverse::emit::read_results(&out).unwrap();
    assert_eq!(results.len(), 1);
    let records = fs::read_to_string(out.join("records.csv")).unwrap().lines().count() as u64 - 1;
    assert_eq!(records, results[0].counts.completed);
    let blocks = fs::read_to_string(out.join("chain.txt")).unwrap().lines().count() as u64 - 1;
    assert_eq!(blocks, results[0].counts.blocks);
    assert!(blocks > 0);
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let out = dir.path().join("sweep");
    let st = fogverse()
        .args(["sweep", "--param", "user_count", "--values", "20,40", "--reps", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success());
    assert_eq!(fogverse::emit::read_results(&out).unwrap().len(), 8);
    let rep = fogverse().arg("report").arg("--in").arg(&out).output().unwrap();
    assert!(rep.status.success());
    let text = String::from_utf8(rep.stdout).unwrap();
    assert!(text.contains("reduction"), "{text}");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn invalid_inputs_fail_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[world]\nradius = 80.0\n");
    let o = fogverse()
        .args(["run", "--policy", "cloud", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("world.radius"));

    let unknown = write_config(dir.path(), "[world]\nspeeed = 1.0\n");
    let o = fogverse()
        .args(["run", "--policy", "cloud", "--config"])
        .arg(&unknown)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("speeed"));

    let o =
        fogverse().args(["sweep", "--param", "tx_rate", "--values", "5,2", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("strictly increasing"));

    let o = fogverse().args(["run", "--policy", "edge", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!o.status.success());

    let o = fogverse().args(["report", "--in"]).arg(dir.path().join("missing")).output().unwrap();
    assert!(!o.status.success());
}
