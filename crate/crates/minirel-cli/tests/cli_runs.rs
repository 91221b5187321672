//! End-to-end checks of the `minirel` binary and its support modules:
//! exit codes, grid shape, deterministic re-emission, CSV ingestion rules,
//! summary statistics, and solution-file round-trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use minirel::metrics::fairness_metrics;
use minirel::model::{compute_beta, Alpha, ClusteringProblem, ClusteringSolution, FairnessSpec};
use minirel_cli::config::{cardinality_window, resolve_policy, ExperimentConfig, SchemaConfig};
use minirel_cli::data::{load, load_csv};
use minirel_cli::report::{load_solution, Report, RunRow, TimingRow, REPORT_COLUMNS};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minirel"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap_or_else(|e| panic!("write {}: {e}", path.display()));
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn binary");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().expect("spawn binary");
    (out.status.code().expect("exit code"), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// A small two-strategy grid over tiny blobs, used by several tests.
fn grid_config(baselines: bool) -> String {
    format!(
        r#"
[dataset]
source = "blobs"
blobs = 2
per_blob = 14
dim = 2
n_groups = 2
skew = 0.8
separation = 8.0
spread = 0.7
synth_seed = 5

[grid]
strategies = ["two-stage-ip", "two-stage-flow"]
k = [2, 3]
alpha = [0.51]
seeds = [1, 2]
baselines = {baselines}

[fairness]
beta_policy = "statistical-parity"

[limits]
max_iter = 40
"#
    )
}

#[test]
fn malformed_and_over_specified_configs_exit_with_the_config_code() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    write(&bad, "not toml [[[");
    let (code, err) = exit_code(
        bin().args(["experiment", "--config"]).arg(&bad).arg("--out").arg(dir.path()),
    );
    assert_eq!(code, 3, "parse failure: {err}");

    // Unknown keys are rejected rather than silently ignored.
    let unknown = dir.path().join("unknown.toml");
    write(
        &unknown,
        "[dataset]\nsource = \"six-line\"\n\n[grid]\nstrategies = [\"full-ip\"]\nk = [2]\nalpha = [0.51]\nseeds = [0]\nbogus = 1\n",
    );
    let (code, err) = exit_code(bin().args(["cluster", "--config"]).arg(&unknown));
    assert_eq!(code, 3, "unknown key: {err}");
    assert!(err.contains("bogus"), "message should name the key: {err}");

    // A CSV dataset without a schema cannot be loaded.
    let no_schema = dir.path().join("noschema.toml");
    write(
        &no_schema,
        "[dataset]\nsource = \"csv\"\npath = \"x.csv\"\n\n[grid]\nstrategies = [\"full-ip\"]\nk = [2]\nalpha = [0.51]\nseeds = [0]\n",
    );
    let (code, _) = exit_code(bin().args(["cluster", "--config"]).arg(&no_schema));
    assert_eq!(code, 3);

    // Flag overrides go through the same validation.
    let (code, err) =
        exit_code(bin().args(["cluster", "--data", "six-line", "--strategy", "warp-drive"]));
    assert_eq!(code, 3, "bad strategy name: {err}");
    let (code, _) = exit_code(bin().args(["cluster", "--data", "six-line", "--alpha", "1.5"]));
    assert_eq!(code, 3);
}

#[test]
fn provably_unreachable_targets_exit_with_the_infeasible_code() {
    // Six points, two groups of three, K = 2: demanding both groups hold a
    // majority of both clusters cannot be met, and the model reports a
    // certificate rather than a best effort.
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("infeasible.toml");
    write(
        &config,
        r#"
[dataset]
source = "six-line"

[grid]
strategies = ["full-ip"]
k = [2]
alpha = [0.51]
seeds = [0]

[fairness]
beta_policy = "custom"
beta = [2, 2]
"#,
    );
    let (code, err) = exit_code(bin().args(["cluster", "--config"]).arg(&config));
    assert_eq!(code, 2, "stderr: {err}");
    assert!(err.contains("K=2"), "certificate should describe the instance: {err}");
}

#[test]
fn the_grid_produces_one_row_per_cell_plus_baseline_selections() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("grid.toml");
    write(&config, &grid_config(true));
    let out = dir.path().join("out");
    run_ok(bin().args(["experiment", "--config"]).arg(&config).arg("--out").arg(&out));

    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    // 2 strategies × 2 K × 1 α × 2 seeds, plus two selection rows for each
    // of the 2 (K, α) cells.
    assert_eq!(rows.len(), 8 + 4, "report rows:\n{report}");
    assert_eq!(rows.iter().filter(|r| r.contains(",lloyd-best-cost,")).count(), 2);
    assert_eq!(rows.iter().filter(|r| r.contains(",lloyd-fairest,")).count(), 2);
    for row in &rows {
        assert!(row.split(',').count() >= REPORT_COLUMNS.len(), "short row: {row}");
        assert!(row.contains(",ok,"), "tiny blobs grid should succeed: {row}");
    }

    // Every grid row has a timing line and a stored solution.
    let timings = fs::read_to_string(out.join("timings.csv")).unwrap();
    assert_eq!(timings.lines().count(), 1 + 8 + 4, "header plus one line per row");
    let solutions = fs::read_dir(out.join("assignments")).unwrap().count();
    assert_eq!(solutions, 12);
    assert!(out.join("summary.json").exists());
}

#[test]
fn rerunning_an_experiment_reproduces_every_deterministic_byte() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("grid.toml");
    write(&config, &grid_config(false));
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_ok(bin().args(["experiment", "--config"]).arg(&config).arg("--out").arg(&out_a));
    run_ok(bin().args(["experiment", "--config"]).arg(&config).arg("--out").arg(&out_b));

    for file in ["report.csv", "summary.json"] {
        let a = fs::read(out_a.join(file)).unwrap();
        let b = fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    let mut names: Vec<PathBuf> = fs::read_dir(out_a.join("assignments"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for path in names {
        let name = path.file_name().unwrap();
        let a = fs::read(&path).unwrap();
        let b = fs::read(out_b.join("assignments").join(name)).unwrap();
        assert_eq!(a, b, "assignment file {name:?} differs");
    }
    // Timings are the one nondeterministic artifact; they still cover the
    // same runs in the same order.
    let ids = |dir: &Path| -> Vec<String> {
        fs::read_to_string(dir.join("timings.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().to_string())
            .collect()
    };
    assert_eq!(ids(&out_a), ids(&out_b));
}

#[test]
fn csv_features_are_scaled_encoded_and_free_of_sensitive_columns() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("data.csv");
    // x spans {2, 4, 6} → {0, 0.5, 1}; color one-hot over sorted labels
    // (blue, red); c is constant and scales to zero; grp is sensitive only.
    write(&csv, "x,color,c,grp\n2,red,5,a\n4,blue,5,a\n6,red,5,b\n");
    let schema = SchemaConfig {
        features: vec!["x".into(), "color".into(), "c".into()],
        sensitive: vec!["grp".into()],
        drop: vec![],
    };
    let (dataset, groups) = load_csv(&csv, &schema, None, 0).unwrap();
    assert_eq!(dataset.n(), 3);
    assert_eq!(dataset.dim(), 4, "x + 2 one-hot colors + constant");
    let expect = [
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.5, 1.0, 0.0, 0.0],
        vec![1.0, 0.0, 1.0, 0.0],
    ];
    for (i, want) in expect.iter().enumerate() {
        assert_eq!(dataset.point(i), want.as_slice(), "row {i}");
    }
    assert_eq!(groups.n_features(), 1);
    assert_eq!(groups.n_groups(), 2);

    // End to end: a single-cluster run centers on the scaled means.
    let config = dir.path().join("csv.toml");
    write(
        &config,
        &format!(
            r#"
[dataset]
source = "csv"
path = "{}"
name = "tiny"

[schema]
features = ["x", "color", "c"]
sensitive = ["grp"]

[grid]
strategies = ["full-ip"]
k = [1]
alpha = [0.3]
seeds = [0]
"#,
            csv.display()
        ),
    );
    let sol = dir.path().join("sol.json");
    run_ok(bin().args(["cluster", "--config"]).arg(&config).arg("--out").arg(&sol));
    let record = load_solution(&sol).unwrap();
    assert_eq!(record.assignment, vec![0, 0, 0]);
    let center = &record.centers[0];
    let mean = [0.5, 1.0 / 3.0, 2.0 / 3.0, 0.0];
    for (got, want) in center.iter().zip(mean) {
        assert!((got - want).abs() < 1e-12, "center {center:?} vs {mean:?}");
    }
}

#[test]
fn csv_parse_errors_name_the_file_and_line() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("broken.csv");
    // `x` is numeric on every other row, so the stray text is a data bug:
    // rejected, pointing at file line 3 (header is line 1).
    write(&csv, "x,grp\n2,a\noops,b\n6,a\n");
    let schema = SchemaConfig {
        features: vec!["x".into()],
        sensitive: vec!["grp".into()],
        drop: vec![],
    };
    let err = load_csv(&csv, &schema, None, 0).unwrap_err();
    let message = err.to_string();
    assert!(
        message.contains("broken.csv:3") && message.contains("oops"),
        "want file:line and the offending value, got: {message}"
    );

    // A schema naming a missing column fails fast the same way.
    let schema = SchemaConfig {
        features: vec!["y".into()],
        sensitive: vec!["grp".into()],
        drop: vec![],
    };
    let err = load_csv(&csv, &schema, None, 0).unwrap_err().to_string();
    assert!(err.contains('y'), "missing column should be named: {err}");
}

#[test]
fn subsampling_keeps_file_order_and_scales_the_kept_rows() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("many.csv");
    let mut text = String::from("x,grp\n");
    for i in 0..20 {
        text.push_str(&format!("{},{}\n", 10 * i, if i % 2 == 0 { "a" } else { "b" }));
    }
    write(&csv, &text);
    let schema = SchemaConfig {
        features: vec!["x".into()],
        sensitive: vec!["grp".into()],
        drop: vec![],
    };
    let (once, groups_once) = load_csv(&csv, &schema, Some(8), 42).unwrap();
    let (again, groups_again) = load_csv(&csv, &schema, Some(8), 42).unwrap();
    assert_eq!(once, again, "same seed, same subsample");
    assert_eq!(groups_once, groups_again);
    assert_eq!(once.n(), 8);
    // Scaling happens after row selection, so the kept rows span [0, 1]
    // exactly and stay in ascending file order.
    let xs: Vec<f64> = (0..8).map(|i| once.point(i)[0]).collect();
    assert_eq!(xs[0], 0.0);
    assert_eq!(xs[7], 1.0);
    assert!(xs.windows(2).all(|w| w[0] < w[1]), "file order preserved: {xs:?}");

    let (other, _) = load_csv(&csv, &schema, Some(8), 43).unwrap();
    assert_ne!(once, other, "a different seed should usually pick other rows");
}

#[test]
fn summary_statistics_are_sample_statistics() {
    let row = |seed: u64, cost: f64| RunRow {
        run_id: format!("d-s-k2-a0.5-s{seed}"),
        dataset: "d".into(),
        strategy: "s".into(),
        k: 2,
        alpha: 0.5,
        seed,
        status: "ok".into(),
        cost: Some(cost),
        max_deviation: Some(0),
        additive_sum: Some(0.0),
        additive_max: Some(0.0),
        normalized_additive_sum: Some(0.0),
        normalized_additive_max: Some(0.0),
        iterations: Some(3),
        error: String::new(),
    };
    let report = Report {
        rows: vec![row(1, 2.0), row(2, 4.0)],
        timings: vec![TimingRow {
            run_id: "d-s-k2-a0.5-s1".into(),
            assign_secs: 0.0,
            center_secs: 0.0,
            wall_secs: 0.0,
        }],
        solutions: vec![],
    };
    let summary = report.summarize();
    assert_eq!(summary.len(), 1);
    let entry = &summary[0];
    assert_eq!(entry.runs, 2);
    assert_eq!(entry.ok_runs, 2);
    assert!((entry.mean_cost.unwrap() - 3.0).abs() < 1e-12);
    assert!(
        (entry.stddev_cost.unwrap() - 2.0_f64.sqrt()).abs() < 1e-12,
        "costs {{2, 4}} have sample standard deviation √2, got {:?}",
        entry.stddev_cost
    );

    // A single data point has no sample deviation.
    let single = Report { rows: vec![row(1, 2.0)], timings: vec![], solutions: vec![] };
    assert_eq!(single.summarize()[0].stddev_cost, None);
}

#[test]
fn stored_solutions_round_trip_to_the_reported_cost_and_metrics() {
    let dir = TempDir::new().unwrap();
    let config_path = dir.path().join("grid.toml");
    write(&config_path, &grid_config(false));
    let out = dir.path().join("out");
    run_ok(bin().args(["experiment", "--config"]).arg(&config_path).arg("--out").arg(&out));

    let config = ExperimentConfig::from_path(&config_path).unwrap();
    let loaded = load(&config.dataset, config.schema.as_ref()).unwrap();
    let mode = config.parse_mode().unwrap();

    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let mut checked = 0;
    for line in report.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let (run_id, status) = (fields[0], fields[6]);
        if status != "ok" {
            continue;
        }
        let row_cost: f64 = fields[7].parse().unwrap();
        let row_dev: usize = fields[8].parse().unwrap();

        let record = load_solution(&out.join("assignments").join(format!("{run_id}.json"))).unwrap();
        let problem = ClusteringProblem::new(
            loaded.dataset.clone(),
            loaded.groups.clone(),
            record.k,
            mode,
        )
        .unwrap();
        let cost =
            minirel::metrics::clustering_cost(&record.assignment, &record.centers, &problem);
        assert!(
            (cost - row_cost).abs() < 1e-9,
            "{run_id}: recomputed {cost} vs reported {row_cost}"
        );
        assert!((record.cost - row_cost).abs() < 1e-9);

        let policy = resolve_policy(&config.fairness, &loaded.groups).unwrap();
        let alpha = Alpha::Uniform(record.alpha);
        let beta = compute_beta(&policy, &alpha, record.k, &loaded.groups);
        let (lower, upper) =
            cardinality_window(&config.fairness, loaded.dataset.n(), record.k).unwrap();
        let spec = FairnessSpec::new(alpha, beta, lower, upper).unwrap();
        let solution = ClusteringSolution {
            assignment: record.assignment.clone(),
            centers: record.centers.clone(),
            y: record.y.clone(),
            cost,
        };
        let metrics = fairness_metrics(&solution, &spec, &loaded.groups);
        assert_eq!(metrics.max_deviation, row_dev, "{run_id}");
        checked += 1;
    }
    assert!(checked >= 8, "expected at least the 8 grid rows, checked {checked}");
}

#[test]
fn the_balanced_flag_enforces_the_cluster_size_floor() {
    let dir = TempDir::new().unwrap();
    let sol = dir.path().join("sol.json");
    // Default blobs: n = 180, K = 3 ⇒ every cluster must reach ⌈0.8·180/3⌉ = 48.
    run_ok(bin().args([
        "cluster",
        "--data",
        "blobs",
        "--strategy",
        "two-stage-ip",
        "--k",
        "3",
        "--alpha",
        "0.51",
        "--seed",
        "4",
        "--balanced",
        "--out",
    ]).arg(&sol));
    let record = load_solution(&sol).unwrap();
    let mut sizes = vec![0usize; record.k];
    for &c in &record.assignment {
        sizes[c] += 1;
    }
    assert!(sizes.iter().all(|&s| s >= 48), "sizes {sizes:?} under the 48-point floor");
}

#[test]
fn rounding_accepts_a_fractional_file_and_reports_the_bound() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("frac.json");
    write(
        &input,
        r#"{
  "alpha": 0.51,
  "beta": [1, 1],
  "centers": [[1.0], [11.0]],
  "y": [[true, false], [false, true]],
  "z": [[1.0, 0.0], [1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]
}"#,
    );
    let out = dir.path().join("rounded.json");
    let output = run_ok(
        bin()
            .args(["round", "--data", "six-line", "--input"])
            .arg(&input)
            .arg("--out")
            .arg(&out),
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("rounded cost: 4"), "{stdout}");
    assert!(stdout.contains("violation bound: 1"), "{stdout}");
    let text = fs::read_to_string(&out).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["assignment"], serde_json::json!([0, 0, 0, 1, 1, 1]));
    assert_eq!(value["max_violation"], serde_json::json!(0.0));

    // Wrong shape is a config error.
    let short = dir.path().join("short.json");
    write(
        &short,
        r#"{"alpha": 0.5, "beta": [1, 1], "centers": [[1.0]], "y": [[true], [true]], "z": [[1.0]]}"#,
    );
    let (code, err) =
        exit_code(bin().args(["round", "--data", "six-line", "--input"]).arg(&short));
    assert_eq!(code, 3, "{err}");
}

#[test]
fn prefix_prints_the_designation_pattern() {
    let output = run_ok(bin().args([
        "prefix",
        "--data",
        "six-line",
        "--k",
        "2",
        "--alpha",
        "0.51",
        "--seed",
        "0",
    ]));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("objective:"), "{stdout}");
    // Both groups must appear with at least one designated cluster.
    let lines: Vec<&str> = stdout.lines().collect();
    let designated = lines
        .iter()
        .filter(|l| l.contains("group=") && !l.trim_end().ends_with(": -"))
        .count();
    assert_eq!(designated, 2, "{stdout}");
}
