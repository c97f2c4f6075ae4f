use std::process::{Command, Output};

fn conhist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conhist")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn lists_ten_demos() {
    let o = conhist(&["demos"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().any(|l| l.starts_with("singlet ")));
}

#[test]
fn demo_machine_mode_is_one_record_per_query() {
    let o = conhist(&["demo", "singlet", "--machine"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("\"conditional_b_given_a\""));
}

#[test]
fn unknown_demo_is_a_usage_error() {
    let o = conhist(&["demo", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("available"));
}

#[test]
fn check_reports_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "name = \"bad\"\n[[pds]]\nname = \"p\"\nkind = \"projectors\"\nprojectors = [\"missing\"]\n",
    )
    .unwrap();
    let o = conhist(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pds[0]") && err.contains("missing"), "{err}");

    let missing = dir.path().join("absent.toml");
    assert_eq!(conhist(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn query_error_gives_exit_one_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.toml");
    std::fs::write(
        &file,
        "name = \"s\"\n[[queries]]\nkind = \"preparation\"\nsystem_dim = 2\namplitudes = [\"1\", \"1\"]\n\n[[queries]]\nkind = \"singlet\"\naxis_a = \"x\"\naxis_b = \"z\"\n",
    )
    .unwrap();
    let out = dir.path().join("report.jsonl");
    let o = conhist(&[
        "run",
        file.to_str().unwrap(),
        "--machine",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("\"status\":\"error\""));
    assert!(lines[1].contains("\"status\":\"ok\""));
}

#[test]
fn tolerance_override_changes_the_verdict() {
    // With a huge consistency tolerance the triple passes, so the expected
    // refusals no longer happen.
    let o = conhist(&[
        "demo",
        "inconsistent-triple",
        "--machine",
        "--tolerance",
        "consistency=10",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("expected to be refused"));
    let bad = conhist(&["demo", "singlet", "--tolerance", "bogus=1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seed_flag_controls_sampling() {
    let a = stdout(&conhist(&["demo", "three-toss", "--machine", "--seed", "1"]));
    let b = stdout(&conhist(&["demo", "three-toss", "--machine", "--seed", "1"]));
    let c = stdout(&conhist(&["demo", "three-toss", "--machine", "--seed", "2"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
