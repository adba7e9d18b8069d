use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use srx::session::{Session, SessionConfig};
use srx_cli::repl::run_script;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

#[test]
fn scripted_stdin_matches_golden_output() {
    let script = std::fs::read(golden("script.in")).unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_srx"))
        .args(["--dataset", "data.csv", "--calculate-dl"])
        .current_dir(golden(""))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&script).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let want = std::fs::read_to_string(golden("script.out")).unwrap();
    let got = String::from_utf8(out.stdout).unwrap();
    assert_eq!(got, want);
    // one output block per command, in order
    assert_eq!(got.trim_end().split("\n\n").count(), 5);
}

#[test]
fn empty_top_and_errors_keep_the_loop_going() {
    let mut s = Session::new(SessionConfig::default());
    let mut out = Vec::new();
    run_script(&mut s, "top 0\n\n# comment\nfrobnicate\ntop 3 with size <\ncount-pattern v0\nquit\ntop 1\n".as_bytes(), &mut out)
        .unwrap();
    let text = String::from_utf8(out).unwrap();
    let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
    assert_eq!(blocks.len(), 4, "{text}");
    assert!(blocks[0].starts_with("Id  Expression"));
    assert_eq!(blocks[1], "error: position 0: unknown command `frobnicate`\n  frobnicate\n  ^");
    assert!(blocks[2].ends_with(&format!("\n  {}^", " ".repeat(17))), "{}", blocks[2]);
    assert_eq!(blocks[3], "0");
}

#[test]
fn load_accepts_snapshots_and_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("models.csv");
    std::fs::write(&csv, "expression,parameters,fitness\nx0 * t0,2.0,-0.5\nsin(x1),,-3\n").unwrap();
    let bin = env!("CARGO_BIN_EXE_srx");
    let snap = dir.path().join("lib.bin");
    let run = |load: &PathBuf, script: String| {
        let mut child = Command::new(bin)
            .arg("--load")
            .arg(load)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
        let out = child.wait_with_output().unwrap();
        assert!(out.status.success());
        (String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
    };
    let (first, notes) = run(&csv, format!("top 5\nsave {}\n", snap.display()));
    assert!(notes.contains("imported 2"), "{notes}");
    let (second, notes) = run(&snap, "top 5\n".into());
    assert!(notes.contains("loaded 2"), "{notes}");
    assert_eq!(first.split("\n\n").next(), second.split("\n\n").next());
}

#[test]
fn bad_launch_options_fail() {
    let out = Command::new(env!("CARGO_BIN_EXE_srx"))
        .args(["--loss", "hinge"])
        .stdin(Stdio::null())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown loss"));
}
