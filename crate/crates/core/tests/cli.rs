use std::path::Path;
use std::process::{Command, Output};

fn choquard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_choquard")).args(args).env("CHOQUARD_THREADS", "1").output().unwrap()
}

fn tempdir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("choquard-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn report_without_clock(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock");
    v
}

const SMALL: &[&str] = &["--dim", "2", "--alpha", "1", "--M", "64", "--L", "10", "--restarts", "2"];

#[test]
fn solve_writes_artifacts_and_is_deterministic() {
    let dir = tempdir("solve");
    let run = |sub: &str| {
        let out = dir.join(sub);
        let mut args = vec!["solve", "--group", "A1", "--out", out.to_str().unwrap()];
        args.extend_from_slice(SMALL);
        let o = choquard(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["field.chqf", "radial.csv", "report.json", "run.cfg"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let ra = report_without_clock(&a.join("report.json"));
    assert_eq!(ra, report_without_clock(&b.join("report.json")));
    assert_eq!(ra["nodal_count"], 2);
    assert_eq!(ra["group"], "A1");
    assert_eq!(std::fs::read(a.join("field.chqf")).unwrap(), std::fs::read(b.join("field.chqf")).unwrap());
    let csv = std::fs::read_to_string(a.join("radial.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,abs_u,sign"));

    // The stored config reproduces the run.
    let c = dir.join("c");
    let cfg = a.join("run.cfg");
    let o = choquard(&["solve", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(ra, report_without_clock(&c.join("report.json")));

    let field = a.join("field.chqf");
    let o = choquard(&["verify", field.to_str().unwrap(), "--alpha", "1", "--group", "A1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["nodal"]["count"], 2);

    // A different exponent makes the stored field a non-solution.
    let o = choquard(&["verify", field.to_str().unwrap(), "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = choquard(&["verify", field.to_str().unwrap(), "--alpha", "1", "--M", "128"]);
    assert_eq!(o.status.code(), Some(64));

    let o = choquard(&["convert", field.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,u"));
    assert_eq!(text.lines().count(), 1 + 64 * 64);
    let radial = dir.join("r.csv");
    let o = choquard(&["convert", field.to_str().unwrap(), "--radial", "--out", radial.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(radial).unwrap(), csv);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn hierarchy_exit_codes() {
    let mut args = vec!["hierarchy", "--groups", "trivial,A1"];
    args.extend_from_slice(SMALL);
    let o = choquard(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("c_A1 = ") && text.contains("< 2 c0 = "), "{text}");

    let mut args = vec!["hierarchy", "--groups", "A1"];
    args.extend_from_slice(SMALL);
    let o = choquard(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(!String::from_utf8(o.stdout).unwrap().contains('<'));

    let mut args = vec!["hierarchy", "--groups", "A1;I2:2"];
    args.extend_from_slice(SMALL);
    assert_eq!(choquard(&args).status.code(), Some(64));
}

#[test]
fn usage_and_validation_exit_codes() {
    assert_eq!(choquard(&["solve", "--dim", "3"]).status.code(), Some(64));
    assert_eq!(choquard(&["solve", "--dim", "2", "--alpha", "3"]).status.code(), Some(64));
    assert_eq!(choquard(&["solve", "--dim", "2", "--alpha", "1", "--M", "48"]).status.code(), Some(64));
    assert_eq!(choquard(&["coxeter", "I2:1"]).status.code(), Some(64));
    assert_eq!(choquard(&[]).status.code(), Some(64));
    assert_eq!(choquard(&["--help"]).status.code(), Some(0));
    let o = choquard(&["solve", "--dim", "3", "--alpha", "2", "--nl", "power:p=6", "--M", "8", "--L", "4"]);
    assert_eq!(o.status.code(), Some(3));
    let o = choquard(&["solve", "--dim", "3", "--alpha", "2", "--nl", "power:p=6", "--M", "8", "--L", "4", "--override-hypotheses", "--max-iters", "1", "--restarts", "1", "--out"]);
    assert_eq!(o.status.code(), Some(64));
    let o = choquard(&["solve", "--dim", "2", "--alpha", "1", "--M", "16", "--L", "6", "--step", "1000", "--restarts", "1", "--out", std::env::temp_dir().join("choquard-cli-nd").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let o = choquard(&["coxeter", "B3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["order"], 48);
    assert_eq!(v["grid_exact"], true);
}
