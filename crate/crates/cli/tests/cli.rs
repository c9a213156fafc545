use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_roughreg"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("roughreg-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let cfg = configs().join("young_default.toml");
    let (a, b) = (scratch("a"), scratch("b"));
    for out in [&a, &b] {
        let st = bin().args(["solve", "--seed", "1", "--config"]).arg(&cfg).arg("--out").arg(out).status().unwrap();
        assert!(st.success());
    }
    let read = |d: &PathBuf, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "solve_seed1.csv"), read(&b, "solve_seed1.csv"));
    assert_eq!(read(&a, "solve_seed1.csv.meta"), read(&b, "solve_seed1.csv.meta"));
    let meta = String::from_utf8(read(&a, "solve_seed1.csv.meta")).unwrap();
    assert!(meta.contains("config_sha256=") && meta.contains("seeds=1") && meta.contains("version="));
}

#[test]
fn worker_count_does_not_change_results() {
    let (a, b) = (scratch("w1"), scratch("w3"));
    for (out, w) in [(&a, "1"), (&b, "3")] {
        let st = bin()
            .args(["experiment", "semiflow", "--preset", "young", "--seeds", "1..3", "--out"])
            .arg(out)
            .env("ROUGHREG_WORKERS", w)
            .status()
            .unwrap();
        assert!(st.success());
    }
    for f in ["semiflow.csv", "semiflow_summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn chen_check_passes_on_the_rough_default() {
    let out = bin().args(["check", "chen", "--config"]).arg(configs().join("rough_default.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("chen: PASS"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(bin().arg("frobnicate").status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["experiment", "nonsense", "--preset", "young"]).status().unwrap().code(), Some(2));
    let bad = scratch("bad");
    std::fs::create_dir_all(&bad).unwrap();
    let cfg = bad.join("bad.toml");
    std::fs::write(&cfg, "[model]\nhurst = 0.7\n").unwrap();
    assert_eq!(bin().args(["solve", "--config"]).arg(&cfg).status().unwrap().code(), Some(2));
}

#[test]
fn failing_experiment_exits_with_one_and_still_writes() {
    let dir = scratch("broken");
    std::fs::create_dir_all(&dir).unwrap();
    let text = std::fs::read_to_string(configs().join("young_default.toml")).unwrap();
    let text = text.replacen("[solver]", "[solver]\nbroken = true", 1);
    let cfg = dir.join("broken.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    let st = bin().args(["experiment", "mollified", "--seeds", "1..2", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(1));
    assert!(out.join("mollified.csv").exists() && out.join("mollified_summary.csv").exists());
}
