use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tiny() -> PathBuf {
    repo().join("scenarios/tiny.toml")
}

fn schedsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schedsim"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn schedsim")
}

fn run_verb(verb: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        verb,
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "2",
    ];
    args.extend(extra);
    schedsim(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const GOLDEN: [(&str, &str); 10] = [
    ("sweep-lookahead", "sweep_runs.csv"),
    ("sweep-lookahead", "sweep_summary.csv"),
    ("sweep-lookahead", "sweep_near_max.csv"),
    ("sweep-lookahead", "sweep_trajectories_seed0.csv"),
    ("sweep-returns", "regimes_summary.csv"),
    ("sweep-returns", "regimes_near_max.csv"),
    ("run-interventions", "interventions_runs.csv"),
    ("run-interventions", "interventions_summary.csv"),
    ("run-interventions", "interventions_pairs.csv"),
    ("theory-gap", "theory_gap.csv"),
];

/// Compares every output of the tiny scenario with the checked-in copy.
/// Set `UPDATE_GOLDEN=1` to rewrite the copies.
#[test]
fn tiny_scenario_matches_golden_files() {
    let out = tempfile::tempdir().unwrap();
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut verbs: Vec<&str> = GOLDEN.iter().map(|g| g.0).collect();
    verbs.dedup();
    for verb in verbs {
        let o = run_verb(verb, &tiny(), out.path(), &[]);
        assert!(o.status.success(), "{verb}: {}", stderr(&o));
    }
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (_, name) in GOLDEN {
        let got = std::fs::read_to_string(out.path().join(name)).unwrap();
        let path = golden.join(name);
        if update {
            std::fs::create_dir_all(&golden).unwrap();
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want =
            std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(got, want, "{name} differs from golden copy");
    }
}

#[test]
fn stdout_lists_written_files() {
    let out = tempfile::tempdir().unwrap();
    let o = run_verb("run-interventions", &tiny(), out.path(), &[]);
    assert!(o.status.success());
    let listed: Vec<String> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(listed.len(), 3);
    for p in listed {
        assert!(Path::new(&p).is_file(), "{p}");
    }
}

#[test]
fn build_table_writes_one_dump_per_cohort() {
    let out = tempfile::tempdir().unwrap();
    let o = run_verb("build-table", &tiny(), out.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for cohort in ["low", "low-middle", "high-middle", "high"] {
        let text =
            std::fs::read_to_string(out.path().join(format!("value_table_{cohort}.txt"))).unwrap();
        assert!(text.starts_with("# schedsim value table v1\nhorizon = 6\n"));
        let rows = text
            .lines()
            .skip_while(|l| !l.starts_with("asset,"))
            .count();
        assert_eq!(rows, 1 + 48);
    }
}

#[test]
fn seed_flag_changes_sampled_cells_only() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert!(
        run_verb("sweep-lookahead", &tiny(), a.path(), &["--seed", "7"])
            .status
            .success()
    );
    assert!(run_verb("sweep-lookahead", &tiny(), b.path(), &[])
        .status
        .success());
    assert!(
        run_verb("sweep-lookahead", &tiny(), c.path(), &["--seed", "8"])
            .status
            .success()
    );
    let read = |d: &Path| std::fs::read(d.join("sweep_runs.csv")).unwrap();
    // tiny.toml's own seed is 7
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn thread_count_does_not_change_output() {
    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    for (dir, n) in [(&one, "1"), (&four, "4")] {
        let o = schedsim(&[
            "run-interventions",
            "--scenario",
            tiny().to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--threads",
            n,
        ]);
        assert!(o.status.success());
    }
    for name in ["interventions_runs.csv", "interventions_pairs.csv"] {
        assert_eq!(
            std::fs::read(one.path().join(name)).unwrap(),
            std::fs::read(four.path().join(name)).unwrap()
        );
    }
}

#[test]
fn validate_config_prints_round_trippable_toml() {
    let o = schedsim(&["validate-config", "--scenario", tiny().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("copy.toml");
    std::fs::write(&copy, &text).unwrap();
    let again = schedsim(&["validate-config", "--scenario", copy.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn shipped_baseline_validates() {
    let o = schedsim(&[
        "validate-config",
        "--scenario",
        repo().join("scenarios/baseline.toml").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("s.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "schema_version = 1\n\n[model]\nhorizon = \"long\"\n",
    );
    let o = run_verb("sweep-lookahead", &path, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let path = write_scenario(dir.path(), "schema_version = 9\n");
    assert_eq!(
        run_verb("validate-config", &path, dir.path(), &[])
            .status
            .code(),
        Some(2)
    );

    let path = write_scenario(
        dir.path(),
        "schema_version = 1\n[shocks]\nprobability = 1.5\n",
    );
    let o = run_verb("validate-config", &path, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("probability"));

    let missing = dir.path().join("missing.toml");
    assert_eq!(
        run_verb("validate-config", &missing, dir.path(), &[])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(schedsim(&["no-such-verb"]).status.code(), Some(2));
    assert_eq!(schedsim(&["sweep-lookahead"]).status.code(), Some(2));
    let o = schedsim(&[
        "sweep-lookahead",
        "--scenario",
        tiny().to_str().unwrap(),
        "--threads",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn undersized_grid_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(tiny())
        .unwrap()
        .replace("points = 48", "points = 48\nmax = 100.0");
    let path = write_scenario(dir.path(), &text);
    let o = run_verb("build-table", &path, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("grid too small"), "{}", stderr(&o));
}
