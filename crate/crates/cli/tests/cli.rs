use std::process::{Command, Output};

fn twin_isle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twin-isle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = twin_isle(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn field_at_the_origin_is_zero() {
    assert_eq!(
        stdout(&[
            "field",
            "--nu",
            "0.7",
            "--q",
            "0.4",
            "--regime",
            "globalized",
            "--at",
            "0,0"
        ]),
        "0,0\n"
    );
}

#[test]
fn field_json() {
    let out = stdout(&[
        "field", "--nu", "0.7", "--q", "0.4", "--at", "0.5,0.5", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let f = 0.7 * 0.5 * 0.5 * 0.1;
    assert!((v["v_a"].as_f64().unwrap() - f).abs() < 1e-15);
    assert!((v["v_b"].as_f64().unwrap() - f).abs() < 1e-15);
}

#[test]
fn eta_sweep_has_seven_increasing_rows() {
    let out = stdout(&[
        "sweep",
        "--metric",
        "eta",
        "--nu",
        "0.7",
        "--q-range",
        "0.05:0.35:0.05",
    ]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("q,nu,value"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[2][0], 0.15);
    assert!(rows.windows(2).all(|w| w[1][2] > w[0][2]));
    assert!(rows.iter().all(|r| r[2] > r[0]));
}

#[test]
fn shocks_grid_summary() {
    let out = stdout(&[
        "shocks", "--nu", "0.7", "--q", "0.4", "--grid", "101", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let both = v["BothRecover"].as_f64().unwrap();
    assert!((both - 0.16).abs() <= 2.0 / 101.0, "{both}");
}

#[test]
fn equilibria_json_lists_three_points() {
    let out = stdout(&["equilibria", "--nu", "0.7", "--q", "0.4"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 3);
    assert_eq!(list[1]["class"], "Saddle");
}

#[test]
fn separatrix_csv_and_exit() {
    let out = twin_isle(&["separatrix", "--nu", "0.7", "--q", "0.2"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("x_a,x_b\n"));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("exit: eta=0.43681"));

    let linear = stdout(&["separatrix", "--nu", "0.7", "--q", "0.2", "--linear"]);
    assert_eq!(linear.lines().count(), 4);
}

#[test]
fn output_dir_gets_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    stdout(&[
        "basins",
        "--nu",
        "0.7",
        "--q",
        "0.4",
        "--resolution",
        "20",
        "--output-dir",
        d,
    ]);
    let csv = std::fs::read_to_string(dir.path().join("basins.csv")).unwrap();
    assert_eq!(csv.lines().count(), 20);
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("area_report.json")).unwrap(),
    )
    .unwrap();
    let sum = report["area_to_origin"].as_f64().unwrap()
        + report["area_to_one"].as_f64().unwrap()
        + report["unresolved_fraction"].as_f64().unwrap();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn integrate_writes_a_trajectory() {
    let out = stdout(&[
        "integrate",
        "--nu",
        "0.7",
        "--q",
        "0.4",
        "--x0",
        "0.9,0.1",
        "--t-max",
        "5",
    ]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("t,x_a,x_b"));
    assert_eq!(lines.next(), Some("0,0.9,0.1"));
    let last: Vec<f64> = out
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(last[0], 5.0);
}

#[test]
fn invalid_arguments_exit_with_two() {
    for args in [
        &["field", "--nu", "1.5", "--q", "0.4", "--at", "0,0"][..],
        &["field", "--nu", "0.7", "--q", "0.4", "--at", "0"][..],
        &["basins", "--nu", "0.7", "--q", "0.4", "--resolution", "1"][..],
        &[
            "sweep",
            "--metric",
            "eta",
            "--nu",
            "0.7",
            "--q-range",
            "0.3:0.1:0.1",
        ][..],
        &["shocks", "--nu", "0.7", "--q", "0.4"][..],
        &["separatrix", "--nu", "0.7", "--q", "0.4", "--offset", "0.1"][..],
        &["no-such-command"][..],
    ] {
        assert_eq!(twin_isle(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bad_start_is_a_usage_error_and_io_failure_is_not() {
    // Forward runs must start inside the unit square.
    let out = twin_isle(&["integrate", "--nu", "0.7", "--q", "0.4", "--x0", "1.5,0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = twin_isle(&[
        "separatrix",
        "--nu",
        "0.7",
        "--q",
        "0.4",
        "--linear",
        "--format",
        "json",
        "--output-dir",
        "/proc/forbidden",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_twin-isle"))
            .args([
                "shocks",
                "--nu",
                "0.7",
                "--q",
                "0.4",
                "--samples",
                "2000",
                "--seed",
                "42",
            ])
            .env("TWIN_ISLE_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let first = run("1");
    for threads in ["1", "2", "4", "0"] {
        assert_eq!(run(threads), first, "threads={threads}");
    }
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_twin-isle"))
        .args(["field", "--nu", "0.7", "--q", "0.4", "--at", "0,0"])
        .env("TWIN_ISLE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
