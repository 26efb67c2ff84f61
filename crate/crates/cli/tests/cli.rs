use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use repcap_cli::render::{parse_csv, DetailCsvRow, SummaryCsvRow};

fn repcap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repcap"))
        .args(args)
        .current_dir(cwd)
        .env_remove("REPCAP_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn gen_writes_all_problems_and_a_stable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = repcap(&["gen", "--size", "A", "--seeds", "15", "--out", "o"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let problems = dir.path().join("o/problems");
    let json = fs::read_dir(&problems)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "json"))
        .count();
    assert_eq!(json, 45);
    let manifest = fs::read_to_string(problems.join("manifest.sha256")).unwrap();
    assert_eq!(manifest.lines().count(), 45);

    let o = repcap(&["gen", "--size", "A", "--seeds", "15", "--out", "again"], dir.path());
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("again/problems/manifest.sha256")).unwrap(), manifest);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_repcap"))
        .args(["gen", "--size", "A", "--seeds", "1", "--no-arrays"])
        .current_dir(dir.path())
        .env("REPCAP_OUT", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env/problems/A_5_seed1.json").exists());
}

#[test]
fn invalid_size_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = repcap(&["gen", "--size", "D"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("size"));
}

#[test]
fn fit_respects_budget_and_checks_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    assert!(repcap(&["gen", "--size", "A", "--seeds", "3,4", "--out", "."], dir.path()).status.success());
    let problem = "problems/A_3_seed3.json";

    let o = repcap(&["fit", "--problem", problem, "--network", "A_1", "--method", "sgd", "--budget", "1"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert_eq!(field(&stdout(&o), "gradient calls"), 1.0);

    let o = repcap(&["fit", "--problem", problem, "--network", "B_3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("300-49x3-150") && err.contains("100-16x3-50"), "{err}");

    let o = repcap(&["fit", "--problem", "problems/missing.json", "--network", "A_1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn cg_fit_of_shallow_self_problem_reduces_objective() {
    let dir = tempfile::tempdir().unwrap();
    assert!(repcap(&["gen", "--size", "A", "--seeds", "1", "--master-seed", "7", "--out", "."], dir.path())
        .status
        .success());
    let o = repcap(
        &["fit", "--problem", "problems/A_1_seed7.json", "--network", "A_1", "--method", "cg", "--budget", "2000", "--out", "trace.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let (f_init, f_opt) = (field(&text, "f_init"), field(&text, "f_opt"));
    assert!(f_opt < 1e-3 * f_init, "f_init {f_init} f_opt {f_opt}");
    let trace: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("trace.json")).unwrap()).unwrap();
    let stored = trace["f_opt"].as_f64().unwrap();
    assert!((stored - f_opt).abs() <= 1e-6 * f_opt, "{stored} vs {f_opt}");
    assert_eq!(trace["gradient_calls_used"].as_u64(), Some(field(&text, "gradient calls") as u64));
}

#[test]
fn crosscheck_tables_and_report_agree() {
    let dir = tempfile::tempdir().unwrap();
    let o = repcap(
        &["crosscheck", "--size", "A", "--seeds", "2", "--budget", "5", "--workers", "2", "--out", "run"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let printed = stdout(&o);
    let run = dir.path().join("run");

    let detail: Vec<DetailCsvRow> = parse_csv(&fs::read_to_string(run.join("table_detail.csv")).unwrap()).unwrap();
    assert_eq!(detail.len(), 28);
    assert!(detail.iter().all(|r| r.seeds == 2 && r.failed_seeds == 0));
    let summary: Vec<SummaryCsvRow> = parse_csv(&fs::read_to_string(run.join("table_summary.csv")).unwrap()).unwrap();
    assert_eq!(summary.len(), 2);
    assert!(summary.iter().all(|s| s.method == "rmsprop"));

    let md = fs::read_to_string(run.join("table_detail.md")).unwrap();
    assert_eq!(md.lines().count(), 30);
    assert!(md.lines().all(|l| l.matches('|').count() == 9));
    assert_eq!(fs::read_to_string(run.join("table_detail.txt")).unwrap().lines().count(), 30);

    let o = repcap(&["report", "--store", "run/results.jsonl"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), printed);

    let o = repcap(&["report", "--store", "run/results.jsonl", "--format", "csv", "--table", "detail"], dir.path());
    assert_eq!(stdout(&o), fs::read_to_string(run.join("table_detail.csv")).unwrap());

    let o = repcap(
        &["report", "--store", "run/results.jsonl", "--format", "csv", "--table", "summary", "--summary-method", "cg"],
        dir.path(),
    );
    let cg: Vec<SummaryCsvRow> = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(cg.len(), 2);
    assert!(cg.iter().all(|s| s.method == "cg"));
}

#[test]
fn report_rejects_empty_or_missing_store() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    assert_ne!(repcap(&["report", "--store", "empty.jsonl"], dir.path()).status.code(), Some(0));
    assert_eq!(repcap(&["report", "--store", "nope.jsonl"], dir.path()).status.code(), Some(3));
}

#[test]
fn all_runs_failing_exits_with_total_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = repcap(
        &["crosscheck", "--size", "A", "--seeds", "1", "--budget", "2", "--methods", "sgd", "--wf", "1e300", "--out", "bad"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(5), "{o:?}");
    assert!(dir.path().join("bad/results.jsonl").exists());
}

#[test]
fn config_file_values_are_used_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "size = \"A\"\nseeds = [5]\nmethods = [\"rmsprop\"]\nbudget = 3\nout = \"from-file\"\n\n[optimizer.rmsprop]\nlearning_rate = 0.002\n",
    )
    .unwrap();
    let o = repcap(&["crosscheck", "--config", "run.toml", "--budget", "4"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let detail: Vec<DetailCsvRow> =
        parse_csv(&fs::read_to_string(dir.path().join("from-file/table_detail.csv")).unwrap()).unwrap();
    assert_eq!(detail.len(), 7);
    assert!(detail.iter().all(|r| r.gradient_calls == Some(4.0) && r.method == "rmsprop"));
    let store = fs::read_to_string(dir.path().join("from-file/results.jsonl")).unwrap();
    assert!(store.lines().next().unwrap().contains("0.002"));
}
