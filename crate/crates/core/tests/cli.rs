use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rulemonoid::bench::stats::RunLine;
use rulemonoid::run::TraceRow;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rulemonoid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_is_deterministic_and_refuses_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&[
        "--seed",
        "5",
        "--out",
        s(&a),
        "generate",
        "--scenario",
        "synthetic-mixed",
    ]);
    ok(&[
        "--seed",
        "5",
        "--out",
        s(&b),
        "generate",
        "--scenario",
        "synthetic-mixed",
    ]);
    let files = read_dir_bytes(&a);
    let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(
        names,
        ["cohort.csv", "ground_truth.json", "schema.toml", "universe.txt"]
    );
    assert_eq!(files, read_dir_bytes(&b));

    let again = bin(&["--seed", "6", "--out", s(&a), "generate"]);
    assert_eq!(code(&again), 2);
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    assert_eq!(files, read_dir_bytes(&a));
    ok(&["--seed", "6", "--out", s(&a), "--force", "generate"]);
    assert_ne!(files, read_dir_bytes(&a));
}

#[test]
fn generate_rejects_a_cohort_without_healthy_volunteers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["--out", s(&tmp.path().join("d")), "generate", "--hv-fraction", "0"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hv_fraction"));
}

#[test]
fn exhaustive_run_needs_an_explicit_cap_at_twenty_atoms() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    ok(&[
        "--seed",
        "2",
        "--out",
        s(&d),
        "generate",
        "--scenario",
        "synthetic-mixed",
        "--bins",
        "4",
    ]);
    // trim the grid universe to exactly twenty atoms
    let text = fs::read_to_string(d.join("universe.txt")).unwrap();
    let kept: Vec<&str> = text
        .lines()
        .filter(|l| {
            l.starts_with('#') || l.starts_with("id\t") || l.split('\t').next().unwrap().parse::<usize>().unwrap() < 20
        })
        .collect();
    fs::write(d.join("universe.txt"), kept.join("\n") + "\n").unwrap();

    let out_dir = tmp.path().join("r");
    let refused = bin(&[
        "--out",
        s(&out_dir),
        "run",
        "--method",
        "exhaustive",
        "--dataset",
        s(&d),
        "--mixed",
    ]);
    assert_eq!(code(&refused), 2);
    assert!(String::from_utf8_lossy(&refused.stderr).contains("20 atoms"));
    assert!(!out_dir.exists());

    let line = ok(&[
        "--out",
        s(&out_dir),
        "run",
        "--method",
        "exhaustive",
        "--dataset",
        s(&d),
        "--mixed",
        "--exhaustive-cap",
        "20",
    ]);
    assert!(line.starts_with("exhaustive\t"));
    let csv = fs::read_to_string(out_dir.join("run.csv")).unwrap();
    let runs: Vec<&str> = csv.lines().collect();
    assert_eq!(runs.len(), 2);
    assert!(runs[1].starts_with("exhaustive,file-mixed,10,0,0,0,"));
}

#[test]
fn quotient_run_logs_detections_on_schedule() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    ok(&["--seed", "4", "--out", s(&d), "generate"]);
    let r = tmp.path().join("r");
    ok(&[
        "--seed",
        "9",
        "--out",
        s(&r),
        "run",
        "--method",
        "ga-quotient",
        "--dataset",
        s(&d),
        "--generations",
        "35",
        "--tau",
        "10",
        "--no-timing",
    ]);
    let text = fs::read_to_string(r.join("run.jsonl")).unwrap();
    let line: RunLine = serde_json::from_str(text.trim()).unwrap();
    let record = line.record.unwrap();
    assert_eq!(record.seed, 9);
    assert_eq!(record.wall_s, 0.0);
    let detected: Vec<usize> = record
        .trace
        .iter()
        .filter_map(|t| match t {
            TraceRow::Generation {
                generation,
                detected: true,
                ..
            } => Some(*generation),
            _ => None,
        })
        .collect();
    assert_eq!(detected, vec![1, 10, 20, 30]);
    let csv = fs::read_to_string(r.join("run.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[10], "", "wall_s stays empty without timing");
}

const BENCH_TOML: &str = r#"
repeats = 2
min_sizes = [10]
param_draws = 1
methods = ["ga", "ga-quotient", "greedy", "exhaustive"]
seed = 21
n_records = 200
population_range = [10, 12]
generations_range = [5, 8]
record_timing = false
"#;

#[test]
fn bench_reruns_are_byte_identical_and_stats_recomputes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bench.toml");
    fs::write(&cfg, BENCH_TOML).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["--config", s(&cfg), "--out", s(&a), "bench"]);
    ok(&["--config", s(&cfg), "--out", s(&b), "bench", "--workers", "2"]);
    for f in [
        "runs.csv",
        "runs.jsonl",
        "summary.csv",
        "summary_cells.csv",
        "convergence.csv",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let runs = fs::read_to_string(a.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 4 * 2);

    let st = tmp.path().join("stats");
    ok(&["--out", s(&st), "stats", s(&a.join("runs.jsonl"))]);
    assert_eq!(
        fs::read(st.join("summary.csv")).unwrap(),
        fs::read(a.join("summary.csv")).unwrap()
    );

    // a run on another dataset cannot be pooled with these
    let c = tmp.path().join("c");
    ok(&[
        "--config",
        s(&cfg),
        "--seed",
        "22",
        "--out",
        s(&c),
        "bench",
        "--repeats",
        "1",
    ]);
    let mixed = bin(&[
        "--out",
        s(&tmp.path().join("m")),
        "stats",
        s(&a.join("runs.jsonl")),
        s(&c.join("runs.jsonl")),
    ]);
    assert_ne!(code(&mixed), 0);
    assert!(String::from_utf8_lossy(&mixed.stderr).contains("mix datasets"));
}

#[test]
fn order_filters_writes_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("filters.csv");
    fs::write(&f, "id,cost,selectivity\ndocking,50,0.9\nlipinski,1,0.3\npains,2,0\n").unwrap();
    let stdout = ok(&["order-filters", s(&f)]);
    let ids: Vec<&str> = stdout.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ids, ["lipinski", "docking", "pains"]);
    let o = tmp.path().join("o");
    let msg = ok(&["--out", s(&o), "order-filters", s(&f)]);
    assert!(msg.starts_with("expected cost "));
    assert_eq!(fs::read_to_string(o.join("order.csv")).unwrap(), stdout);

    fs::write(&f, "id,cost,selectivity\nbad,1,1.5\n").unwrap();
    let bad = bin(&["order-filters", s(&f)]);
    assert_eq!(code(&bad), 3);
}

#[test]
fn unknown_method_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d");
    ok(&["--out", s(&d), "generate"]);
    let out = bin(&[
        "--out",
        s(&tmp.path().join("r")),
        "run",
        "--method",
        "annealing",
        "--dataset",
        s(&d),
    ]);
    assert_eq!(code(&out), 2);
}
