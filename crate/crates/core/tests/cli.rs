use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> String {
    root()
        .join("fixtures")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn swarmflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmflow"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = swarmflow(&[
        "validate",
        &fixture("toy/camera.cdf.json"),
        &fixture("toy/detector.cdf.json"),
        &fixture("toy/toy.edf.json"),
        &fixture("toy/toy.cluster.json"),
        &fixture("desk/desk.edf.json"),
        &fixture("desk/desk.cluster.json"),
    ]);
    assert_eq!(code(&ok), 0);
    assert!(ok.stdout.is_empty() && ok.stderr.is_empty());

    let bad = swarmflow(&["validate", &fixture("invalid/alpha.cdf.json")]);
    assert_eq!(code(&bad), 1);
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(
        msg.contains("alpha.cdf.json") && msg.contains("predefined_cost"),
        "{msg}"
    );

    for file in ["invalid/weights.edf.json", "invalid/broken.cluster.json"] {
        assert_eq!(code(&swarmflow(&["validate", &fixture(file)])), 1, "{file}");
    }
    assert_eq!(
        code(&swarmflow(&["validate", &fixture("toy/nuc.trace.csv")])),
        1
    );
    assert_eq!(
        code(&swarmflow(&["validate", &fixture("toy/missing.cdf.json")])),
        3
    );
}

#[test]
fn flag_errors_are_validation_failures() {
    assert_eq!(code(&swarmflow(&["validate"])), 1);
    assert_eq!(code(&swarmflow(&["frobnicate"])), 1);
    assert_eq!(
        code(&swarmflow(&[
            "allocate",
            "--edf",
            "a",
            "--cluster",
            "b",
            "--colour",
            "red"
        ])),
        1
    );
    // seeds are mandatory for simulate and scaling
    let out = swarmflow(&[
        "simulate",
        "--edf",
        "a",
        "--cluster",
        "b",
        "--iterations",
        "1",
        "--out-dir",
        "x",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    assert_eq!(code(&swarmflow(&["--help"])), 0);
}

#[test]
fn allocate_reports_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    for out in [&a, &b] {
        let o = swarmflow(&[
            "allocate",
            "--edf",
            &fixture("desk/desk.edf.json"),
            "--cluster",
            &fixture("desk/desk.cluster.json"),
            "--seed",
            "42",
            "--out",
            path_str(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let report = fs::read_to_string(&a).unwrap();
    assert!(report.starts_with("allocation: feasible, 6/6 services assigned"));
    assert_eq!(report, fs::read_to_string(&b).unwrap());
}

#[test]
fn allocate_infeasible_lists_unassigned() {
    let o = swarmflow(&[
        "allocate",
        "--edf",
        &fixture("invalid/impossible.edf.json"),
        "--cluster",
        &fixture("desk/desk.cluster.json"),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("unassigned: lidar"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lidar"));
}

#[test]
fn missing_inputs_are_internal_errors() {
    let o = swarmflow(&[
        "allocate",
        "--edf",
        &fixture("nope.edf.json"),
        "--cluster",
        &fixture("desk/desk.cluster.json"),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn simulate_writes_golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmflow(&[
        "simulate",
        "--edf",
        &fixture("toy/toy.edf.json"),
        "--cluster",
        &fixture("toy/toy.cluster.json"),
        "--iterations",
        "2",
        "--seed",
        "7",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["allocations.csv", "dispersion.json", "fairness.csv"]
    );
    let golden = root().join("crates/core/tests/golden/toy_simulate");
    for name in names {
        assert_eq!(
            fs::read_to_string(dir.path().join(&name)).unwrap(),
            fs::read_to_string(golden.join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn simulate_single_iteration_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let out_dir = dir.path().join("out");
    let o = swarmflow(&[
        "simulate",
        "--edf",
        &fixture("desk/desk.edf.json"),
        "--cluster",
        &fixture("desk/desk.cluster.json"),
        "--iterations",
        "1",
        "--seed",
        "5",
        "--out-dir",
        path_str(&out_dir),
        "--trace",
        path_str(&trace),
    ]);
    assert_eq!(code(&o), 0);
    let fairness = fs::read_to_string(out_dir.join("fairness.csv")).unwrap();
    assert_eq!(fairness.lines().count(), 2);
    let lines = fs::read_to_string(&trace).unwrap();
    assert!(lines
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert_eq!(
        lines
            .lines()
            .filter(|l| l.contains("\"ServiceStarted\""))
            .count(),
        6
    );
    assert_eq!(
        code(&swarmflow(&[
            "simulate",
            "--edf",
            &fixture("desk/desk.edf.json"),
            "--cluster",
            &fixture("desk/desk.cluster.json"),
            "--iterations",
            "0",
            "--seed",
            "5",
            "--out-dir",
            path_str(&out_dir),
        ])),
        1
    );
}

fn scaling(max_w: &str, max_s: &str, extra: &[&str]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let mut args = vec![
        "scaling",
        "--cluster-template",
        &fixture("desk/desk.cluster.json"),
        "--max-workers",
        max_w,
        "--max-services",
        max_s,
        "--seed",
        "42",
        "--out",
        path_str(&out),
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    args.extend(extra.iter().map(|s| s.to_string()));
    let o = Command::new(env!("CARGO_BIN_EXE_swarmflow"))
        .args(&args)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out).unwrap()
}

#[test]
fn scaling_grid_rows() {
    let grid = scaling("12", "12", &[]);
    let rows: Vec<Vec<u64>> = grid
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(grid.lines().next(), Some("workers,services,elapsed_ms"));
    assert_eq!(rows.len(), 144);
    for w in rows.chunks(12) {
        assert!(w.windows(2).all(|p| p[0][2] <= p[1][2]));
    }
    assert_eq!(scaling("1", "1", &[]).lines().count(), 2);
    assert_eq!(scaling("12", "12", &[]), grid);
    // with sequential polling the first service column grows with workers
    let seq = scaling("4", "1", &["--sequential"]);
    let times: Vec<u64> = seq
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(times.windows(2).all(|p| p[0] < p[1]));
}
