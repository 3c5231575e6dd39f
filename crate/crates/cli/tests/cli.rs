use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn proxsaga(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxsaga"))
        .args(args)
        .env(
            "PROXSAGA_CACHE_DIR",
            Path::new(env!("CARGO_TARGET_TMPDIR")).join("optimum-cache"),
        )
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn sidecar_of(trace: &Path) -> std::path::PathBuf {
    let mut s = trace.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

fn objectives(csv: &Path) -> Vec<String> {
    std::fs::read_to_string(csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().to_string())
        .collect()
}

const STANDARD: [&str; 10] = [
    "--synthetic",
    "200,50,0.1,42",
    "--loss",
    "logistic",
    "--penalty",
    "l1",
    "--lambda1",
    "auto",
    "--lambda2",
    "auto-nnz=0.1",
];

#[test]
fn solve_reaches_the_cached_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let mut args = vec!["solve"];
    args.extend(STANDARD);
    args.extend([
        "--step",
        "1/5L",
        "--epochs",
        "200",
        "--threads",
        "1",
        "--optimum",
    ]);
    args.extend(["--trace-out", trace.to_str().unwrap()]);
    let out = proxsaga(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let header = std::fs::read_to_string(&trace).unwrap();
    assert!(header.starts_with("iterations,epochs,objective,wall_seconds\n"));
    let sidecar = read_json(&sidecar_of(&trace));
    let subopt = sidecar["final_suboptimality"].as_f64().unwrap();
    assert!(subopt <= 1e-10, "final suboptimality {subopt:e}");
    assert_eq!(sidecar["solver"], "sparse_saga");
    assert_eq!(sidecar["problem"]["n_samples"], 200);
    assert!(
        sidecar["config"]["problem"]["penalty"]["lambda"]
            .as_f64()
            .unwrap()
            > 0.0
    );
}

#[test]
fn replay_reproduces_a_sequential_trace() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let out = proxsaga(&[
        "solve",
        "--synthetic",
        "100,30,0.2,5",
        "--penalty",
        "group-l1",
        "--lambda2",
        "0.01",
        "--blocks",
        "single",
        "--epochs",
        "5",
        "--seed",
        "3",
        "--trace-out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = proxsaga(&[
        "replay",
        sidecar_of(&first).to_str().unwrap(),
        "--trace-out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(objectives(&first), objectives(&second));
    assert_eq!(
        read_json(&sidecar_of(&first))["config"],
        read_json(&sidecar_of(&second))["config"]
    );
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let t = trace.to_str().unwrap();
    let cases: [&[&str]; 6] = [
        &["solve", "--loss", "logistic", "--trace-out", t],
        &[
            "solve",
            "--synthetic",
            "50,10,0.3,1",
            "--threads",
            "0",
            "--trace-out",
            t,
        ],
        &[
            "solve",
            "--synthetic",
            "50,10,0.3,1",
            "--data",
            "x.svm",
            "--trace-out",
            t,
        ],
        &["solve", "--synthetic", "50,10", "--trace-out", t],
        &[
            "solve",
            "--synthetic",
            "50,10,0.3,1",
            "--penalty",
            "l1",
            "--trace-out",
            t,
        ],
        &[
            "solve",
            "--synthetic",
            "50,10,0.3,1",
            "--step",
            "fast",
            "--trace-out",
            t,
        ],
    ];
    for args in cases {
        let out = proxsaga(args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert!(!trace.exists());
}

#[test]
fn dead_block_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.svm");
    std::fs::write(&data, "1 1:1.0\n-1 1:-0.5 2:2.0\n").unwrap();
    let trace = dir.path().join("t.csv");
    // Column 3 appears in no row.
    let out = proxsaga(&[
        "solve",
        "--data",
        data.to_str().unwrap(),
        "--n-features",
        "3",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("block 2"));
}

#[test]
fn partition_file_and_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("banded.svm");
    let out = proxsaga(&[
        "generate",
        "--banded",
        "60,12,3,9",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(&data).unwrap().lines().count(), 60);

    let blocks = dir.path().join("blocks.txt");
    std::fs::write(&blocks, "0 1 2\n3 4 5\n6 7 8\n9 10 11\n").unwrap();
    let trace = dir.path().join("t.csv");
    let out = proxsaga(&[
        "solve",
        "--data",
        data.to_str().unwrap(),
        "--penalty",
        "group-l1",
        "--lambda2",
        "0.05",
        "--blocks",
        "file",
        blocks.to_str().unwrap(),
        "--epochs",
        "20",
        "--threads",
        "2",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(
        csv.starts_with("iterations,epochs,objective,wall_seconds,threads,counter_iterations\n")
    );
    let sidecar = read_json(&sidecar_of(&trace));
    assert_eq!(sidecar["problem"]["n_blocks"], 4);
    assert_eq!(sidecar["threads"], 2);

    std::fs::write(&blocks, "0 1 2\n3 4 5\n").unwrap();
    let out = proxsaga(&[
        "solve",
        "--data",
        data.to_str().unwrap(),
        "--blocks",
        "file",
        blocks.to_str().unwrap(),
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(
        code(&out),
        2,
        "a partition that misses coordinates is rejected"
    );
}

#[test]
fn fista_and_dense_baselines() {
    let dir = tempfile::tempdir().unwrap();
    for solver in ["fista", "dense"] {
        let trace = dir.path().join(format!("{solver}.csv"));
        let out = proxsaga(&[
            "solve",
            "--synthetic",
            "80,20,0.2,4",
            "--penalty",
            "box",
            "--box",
            "-0.5,0.5",
            "--solver",
            solver,
            "--epochs",
            "30",
            "--trace-out",
            trace.to_str().unwrap(),
        ]);
        assert_eq!(
            code(&out),
            0,
            "{solver}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let obj: Vec<f64> = objectives(&trace)
            .iter()
            .map(|v| v.parse().unwrap())
            .collect();
        assert!(obj.last().unwrap() < &obj[0]);
    }
    let out = proxsaga(&[
        "solve",
        "--synthetic",
        "80,20,0.2,4",
        "--solver",
        "dense",
        "--threads",
        "2",
        "--trace-out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

fn speedup_rows(stdout: &[u8]) -> Vec<Vec<String>> {
    let text = String::from_utf8_lossy(stdout);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# delta="));
    assert_eq!(
        lines.next().unwrap(),
        "cores,wall_speedup,theoretical_speedup,reached"
    );
    lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn speedup_with_one_core() {
    let mut args = vec!["speedup"];
    args.extend(STANDARD);
    args.extend(["--cores", "1"]);
    let out = proxsaga(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        speedup_rows(&out.stdout),
        vec![vec!["1", "1.0", "1.0", "true"]]
    );
}

#[test]
fn unreachable_speedup_target_is_reported_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("speedup.csv");
    let mut args = vec!["speedup"];
    args.extend(STANDARD);
    args.extend(["--cores", "1,2", "--target", "1e-30", "--epochs", "3"]);
    args.extend(["--out", csv.to_str().unwrap()]);
    let out = proxsaga(&args);
    assert_eq!(code(&out), 0);
    let rows = speedup_rows(&out.stdout);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[3] == "false"));
    assert!(std::fs::read_to_string(&csv)
        .unwrap()
        .contains("2,NaN,NaN,false"));
    assert_eq!(read_json(&sidecar_of(&csv))["repeats"], 1);

    let out = proxsaga(&["speedup", "--synthetic", "50,10,0.3,1", "--cores", "2,4"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_prox_group_only() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = proxsaga(&[
        "verify",
        "--only",
        "prox",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json, read_json(&report));
    assert_eq!(json["passed"], true);
    let props = json["properties"].as_array().unwrap();
    assert!(!props.is_empty());
    assert!(props.iter().all(|p| p["group"] == "prox"));

    assert_eq!(code(&proxsaga(&["verify", "--only", "everything"])), 2);
}
