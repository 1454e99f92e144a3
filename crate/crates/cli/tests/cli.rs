use std::path::Path;
use std::process::{Command, Output};

fn wpadam(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpadam"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_quad_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("quad.toml");
    std::fs::write(
        &path,
        "[problem]\nkind = \"quadratic\"\ndim = 5\nsteps_per_epoch = 20\n\n\
         [optimizer]\ngamma = 0.05\n\n[training]\nepochs = 3\n",
    )
    .unwrap();
    path
}

#[test]
fn train_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_quad_config(dir.path());
    let out = dir.path().join("run");
    let o = wpadam(
        &[
            "train",
            "--config",
            config.to_str().unwrap(),
            "--set",
            "optimizer.s=2",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("predictive-s2,1,1,"));
    assert!(stdout(&o).contains("final train loss"));
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpadam(&["train", "--config", "/no/such/quad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/quad.toml"));
}

#[test]
fn unknown_override_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpadam(&["train", "--set", "optimizer.momentum=0.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("optimizer.momentum"));
}

#[test]
fn divergence_exits_3_with_step() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_quad_config(dir.path());
    let o = wpadam(
        &[
            "train",
            "--config",
            config.to_str().unwrap(),
            "--set",
            "optimizer.gamma=1e6",
            "--set",
            "training.epochs=50",
        ],
        &dir.path().join("run"),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged at step"));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = wpadam(
        &["train", "--set", "problem.kind=linear"],
        &blocker.join("sub"),
    );
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn compare_table_has_a_row_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_quad_config(dir.path());
    let o = wpadam(
        &[
            "compare",
            "--config",
            config.to_str().unwrap(),
            "--seeds",
            "1,2",
            "--set",
            r#"experiment.modes=["baseline","predictive-s0","predictive-s1","predictive-s2","predictive-s3"]"#,
        ],
        &dir.path().join("cmp"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row = |mode: &str| -> Vec<String> {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("{mode} ")))
            .unwrap();
        line.split_whitespace()
            .skip(1)
            .map(str::to_string)
            .collect()
    };
    for mode in [
        "baseline",
        "predictive-s1",
        "predictive-s2",
        "predictive-s3",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(mode)),
            "{mode} missing:\n{text}"
        );
    }
    assert_eq!(row("baseline"), row("predictive-s0"));
    let rows = std::fs::read_to_string(dir.path().join("cmp/metrics.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 5 * 2 * 3);
}

#[test]
fn compare_survives_a_diverging_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_quad_config(dir.path());
    let o = wpadam(
        &[
            "compare",
            "--config",
            config.to_str().unwrap(),
            "--set",
            "optimizer.gamma=1e6",
            "--set",
            "training.epochs=50",
            "--set",
            r#"experiment.modes=["baseline"]"#,
        ],
        &dir.path().join("cmp"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("diverged at step"));
}

#[test]
fn verify_passes_and_catches_the_eps_fault() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpadam(&["verify"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let checks = stdout(&o)
        .lines()
        .filter(|l| l.starts_with("PASS "))
        .count();
    assert!(checks >= 4);

    let o = wpadam(&["verify", "--fault", "eps-inside-sqrt"], dir.path());
    assert_ne!(o.status.code(), Some(0));
    assert!(stdout(&o)
        .lines()
        .any(|l| l.starts_with("FAIL adamw-closed-form")));
}

#[test]
fn probe_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("probe");
    let o = wpadam(
        &[
            "probe",
            "--set",
            "experiment.horizon=30",
            "--set",
            "experiment.s_max=2",
            "--set",
            "problem.per_class=20",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("probe.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2);
}

#[test]
fn quiet_suppresses_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = wpadam(&["verify", "--quiet"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}
