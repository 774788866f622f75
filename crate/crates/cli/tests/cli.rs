//! End-to-end command tests: exit codes, output formats, and the curve
//! cross-checks the inspect contract promises.

use std::path::Path;
use std::process::Output;

use pricelab::hard_instances::two_regular_25_member;

fn pricelab_cmd(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_pricelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to_file(args: &[&str], out: &Path) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap();
    all.extend_from_slice(&["--out", out_str]);
    pricelab_cmd(&all)
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn validate_family_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let res = run_to_file(&["validate", "--family", "two-regular-25", "--eps", "1e-4"], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["all_passed"], serde_json::json!(true));
    assert_eq!(report["check"], serde_json::json!("regular"));
    assert_eq!(report["grid_points"], serde_json::json!(10_000));
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for r in reports {
        assert_eq!(r["report"]["passed"], serde_json::json!(true));
    }
}

#[test]
fn validate_rejects_a_kinked_spec_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("kinked.json");
    std::fs::write(
        &spec,
        r#"{
  "label": "kinked",
  "segments": [
    {"lo": 0.0, "hi": 0.5, "form": "linear", "params": {"intercept": 0.0, "slope": 1.8}},
    {"lo": 0.5, "hi": 1.0, "form": "linear", "params": {"intercept": 0.8, "slope": 0.2}}
  ],
  "atoms": []
}"#,
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let res = run_to_file(
        &["validate", "--spec", spec.to_str().unwrap(), "--check", "regular"],
        &out,
    );
    assert_eq!(res.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("kinked"), "stderr names the distribution: {stderr}");
    assert!(stderr.contains("0.5"), "stderr names the violation site: {stderr}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["all_passed"], serde_json::json!(false));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["validate", "--family", "no-such-family", "--eps", "0.01"],
        // eps beyond the family's feasibility bound is a config error.
        vec!["validate", "--family", "two-regular-25", "--eps", "1e-3"],
        vec!["validate", "--spec", garbage.to_str().unwrap(), "--check", "regular"],
        vec!["validate"],
        vec!["run", "regret", "--instance", "two-regular-base", "--horizons", "100..300x2"],
        vec!["run", "regret", "--instance", "two-regular-base", "--learner", "ucb"],
        vec!["run", "regret", "--instance", "no-such-instance"],
        vec!["run", "findbest", "--instance", "uniform", "--arms", "0"],
        vec!["run", "findbest", "--instance", "uniform", "--arms", "1.5,0.2"],
        vec!["inspect", "--family", "two-regular-25", "--eps", "1e-4", "--member", "9"],
    ];
    for args in cases {
        let res = pricelab_cmd(&args);
        assert_eq!(
            res.status.code(),
            Some(2),
            "expected config error for {args:?}, stderr: {}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
}

#[test]
fn spec_files_without_an_explicit_check_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("uniform.json");
    std::fs::write(
        &spec,
        r#"{
  "label": "uniform",
  "segments": [{"lo": 0.0, "hi": 1.0, "form": "linear", "params": {"intercept": 0.0, "slope": 1.0}}],
  "atoms": []
}"#,
    )
    .unwrap();
    let res = pricelab_cmd(&["validate", "--spec", spec.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = pricelab_cmd(&["validate", "--spec", spec.to_str().unwrap(), "--check", "mhr"]);
    assert_eq!(res.status.code(), Some(0), "uniform is MHR");
}

#[test]
fn inspect_member_curves_carry_the_dent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curves.csv");
    let res = run_to_file(
        &["inspect", "--family", "two-regular-25", "--eps", "1e-4", "--member", "1"],
        &out,
    );
    assert_eq!(res.status.code(), Some(0));
    let (header, rows) = parse_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header, ["x", "F1", "F2", "product_F", "revenue", "delta_F", "delta_r"]);
    assert_eq!(rows.len(), 1001);

    let (x_col, revenue_col, delta_f_col) = (0, 4, 5);
    let peak = rows
        .iter()
        .max_by(|a, b| a[delta_f_col].total_cmp(&b[delta_f_col]))
        .unwrap();
    assert_eq!(peak[x_col], 0.47, "dent peak off-center");
    assert!((peak[delta_f_col] - 1e-4).abs() <= 1e-9, "dent depth {}", peak[delta_f_col]);

    // Cross-check against the grid-search optimum.
    let member = two_regular_25_member(0.9, 1e-4).unwrap();
    let (_, monopoly_revenue) = member.monopoly_price();
    let max_revenue = rows.iter().map(|r| r[revenue_col]).fold(f64::NEG_INFINITY, f64::max);
    assert!(
        (max_revenue - monopoly_revenue).abs() <= 1e-6,
        "curve max {max_revenue} vs monopoly {monopoly_revenue}"
    );
}

#[test]
fn inspect_base_has_zero_difference_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("base.csv");
    let res = run_to_file(
        &["inspect", "--family", "two-regular-25", "--eps", "1e-4", "--member", "0"],
        &out,
    );
    assert_eq!(res.status.code(), Some(0));
    let (_, rows) = parse_csv(&std::fs::read_to_string(&out).unwrap());
    for row in &rows {
        assert_eq!(row[5], 0.0);
        assert_eq!(row[6], 0.0);
    }
}

#[test]
fn export_family_serializes_base_and_members() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("family.json");
    let res = run_to_file(&["export-family", "--family", "three-regular-3", "--eps", "0.05"], &out);
    assert_eq!(res.status.code(), Some(0));
    let family: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(family["members"].as_array().unwrap().len(), 2);
    assert!(family["base"].is_object());
}

#[test]
fn episode_transcripts_have_the_pinned_header_and_length() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("episode.csv");
    let res = run_to_file(
        &["run", "episode", "--instance", "uniform", "--learner", "constant:0.5",
          "--horizon", "64"],
        &out,
    );
    assert_eq!(res.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,price,sold,revenue"));
    assert_eq!(lines.count(), 64);
}

#[test]
fn regret_fit_reports_the_requested_horizons() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let res = run_to_file(
        &["run", "regret", "--instance", "two-regular-base", "--learner", "ucb:4",
          "--horizons", "64,128,256", "--seeds", "2"],
        &out,
    );
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(fit["horizons"], serde_json::json!([64, 128, 256]));
    assert!(fit["slope"].as_f64().unwrap().is_finite());
    assert_eq!(fit["means"].as_array().unwrap().len(), 3);
}

#[test]
fn findbest_reports_epsilon_optimal_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fb.json");
    let res = run_to_file(
        &["run", "findbest", "--instance", "two-mhr-base", "--arms", "0.6,0.7,0.9",
          "--horizon", "400", "--trials", "25", "--epsilon", "0.05"],
        &out,
    );
    assert_eq!(res.status.code(), Some(0));
    let fb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(fb["arm_prices"], serde_json::json!([0.6, 0.7, 0.9]));
    let counts: u64 = fb["chosen_counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 25);
    let rate = fb["epsilon_optimal_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
    assert!((fb["monopoly_revenue"].as_f64().unwrap() - 0.7).abs() <= 1e-6);
}

#[test]
fn identify_reports_every_member() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("id.json");
    let res = run_to_file(
        &["run", "identify", "--family", "three-regular-3", "--eps", "0.05",
          "--budget", "2000", "--trials", "2"],
        &out,
    );
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let id: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(id["members"].as_array().unwrap().len(), 2);
    assert_eq!(id["strategy"], serde_json::json!("find-best-ucb"));
}

#[test]
fn results_default_to_stdout() {
    let res = pricelab_cmd(&["validate", "--family", "three-mhr-3", "--eps", "0.05"]);
    assert_eq!(res.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&res.stdout).expect("stdout is the JSON report");
    assert_eq!(report["all_passed"], serde_json::json!(true));
}
