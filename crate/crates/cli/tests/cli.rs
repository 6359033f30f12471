use std::path::Path;
use std::process::{Command, Output};

fn assoc2x2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_assoc2x2"))
        .args(args)
        .output()
        .expect("spawn assoc2x2")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn test_subcommand_prints_four_outcomes() {
    let out = assoc2x2(&["test", "--table", "10,20,30,40", "--alpha", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for (label, value) in [("Z1", "-0.888"), ("Z2", "-0.910"), ("Z3", "-0.911"), ("Z4", "-0.890")] {
        let line = text.lines().find(|l| l.starts_with(label)).unwrap();
        assert!(line.contains(value), "{line}");
        assert!(line.contains("do not reject"), "{line}");
    }
}

#[test]
fn zero_cell_policies() {
    let haldane = stdout(&assoc2x2(&["test", "--table", "50,0,0,50"]));
    let z1 = haldane.lines().find(|l| l.starts_with("Z1")).unwrap();
    assert!(z1.contains("4.592") && z1.contains("reject") && z1.contains("+0.5"), "{z1}");

    let never = stdout(&assoc2x2(&["test", "--table", "50,0,0,50", "--zero-cell-policy", "never-reject"]));
    let z1 = never.lines().find(|l| l.starts_with("Z1")).unwrap();
    assert!(z1.contains("undefined") && z1.contains("do not reject"), "{z1}");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["test", "--table", "1,2,3"],
        vec!["test", "--table", "1,2,3,x"],
        vec!["test", "--table", "1,2,3,4", "--alpha", "1.5"],
        vec!["test", "--table", "1,2,3,4", "--zero-cell-policy", "drop"],
        vec!["study", "--replicates", "0"],
        vec!["study", "--config", "/nonexistent/config.txt"],
        vec!["figures", "--results", "/nonexistent/results.csv"],
        vec!["frobnicate"],
        vec![],
    ] {
        let out = assoc2x2(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn study_writes_outputs_and_figures_regenerate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = assoc2x2(&[
        "study",
        "--distributions",
        "30",
        "--replicates",
        "200",
        "--seed",
        "7",
        "--null-calibration",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    for name in [
        "results.csv",
        "null_calibration.csv",
        "fig_wald.svg",
        "fig_rao.svg",
        "fig_corr_panel.svg",
        "dominance.txt",
        "config_echo.txt",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 31);
    let echo = std::fs::read_to_string(out.join("config_echo.txt")).unwrap();
    assert!(echo.contains("distributions = 30") && echo.contains("null-calibration = true"));

    let again = dir.path().join("figs");
    let status = assoc2x2(&[
        "figures",
        "--results",
        path_str(&out.join("results.csv")),
        "--out",
        path_str(&again),
    ]);
    assert_eq!(status.status.code(), Some(0));
    for name in ["fig_wald.svg", "fig_rao.svg", "fig_corr_panel.svg", "dominance.txt"] {
        assert_eq!(
            std::fs::read(out.join(name)).unwrap(),
            std::fs::read(again.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    std::fs::write(&cfg, "# small run\ndistributions = 5\nreplicates = 50\nseed = 3\nalpha = 0.1\n").unwrap();
    let out = dir.path().join("out");
    let status = assoc2x2(&[
        "study",
        "--config",
        path_str(&cfg),
        "--seed",
        "9",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(status.status.code(), Some(0));
    let echo = std::fs::read_to_string(out.join("config_echo.txt")).unwrap();
    assert!(echo.contains("distributions = 5"));
    assert!(echo.contains("seed = 9"));
    assert!(echo.contains("alpha = 0.1"));

    // the echo is itself a valid config file
    let replay = dir.path().join("replay");
    let status = assoc2x2(&[
        "study",
        "--config",
        path_str(&out.join("config_echo.txt")),
        "--out",
        path_str(&replay),
    ]);
    assert_eq!(status.status.code(), Some(0));
    assert_eq!(
        std::fs::read(out.join("results.csv")).unwrap(),
        std::fs::read(replay.join("results.csv")).unwrap()
    );
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "replicates: 10\n").unwrap();
    let out = assoc2x2(&["study", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passes() {
    let out = assoc2x2(&["validate"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6, "{text}");
}
