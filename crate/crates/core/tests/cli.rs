use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

use spd_means::io::{ProblemFile, ResultRecord};

const TRIPLE: &str =
    r#"{"dimension": 2, "matrices": [[[2, -1], [-1, 2]], [[3, -2], [-2, 3]], [[2, 1], [1, 2]]]}"#;
const SCALAR_PAIR: &str = r#"{"dimension": 1, "matrices": [[[1]], [[4]]]}"#;

fn spdmean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdmean")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn record(out: &Output) -> ResultRecord {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    ResultRecord::parse(&String::from_utf8_lossy(&out.stdout)).unwrap()
}

fn close(a: &[Vec<f64>], b: &[[f64; 2]; 2], tol: f64) -> bool {
    (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
}

#[test]
fn mean_reproduces_the_triple() {
    let dir = TempDir::new().unwrap();
    let input = file(&dir, "triple.json", TRIPLE);
    let g = record(&spdmean(&["mean", "g", s(&input)]));
    assert_eq!(g.parameters.t, Some(0.5));
    assert!(close(&g.solution, &[[1.96124391, -0.53074303], [-0.53074303, 1.96124391]], 1e-6));
    let l = record(&spdmean(&["mean", "cartan", s(&input)]));
    assert!(close(&l.solution, &[[1.95423082, -0.51198125], [-0.51198125, 1.95423082]], 1e-6));
    let right = record(&spdmean(&["mean", "g", s(&input), "--alpha", "0"]));
    assert_eq!(right.solution, g.solution);
}

#[test]
fn g_at_one_is_the_harmonic_mean() {
    let dir = TempDir::new().unwrap();
    let input = file(&dir, "triple.json", TRIPLE);
    let g = record(&spdmean(&["mean", "g", s(&input), "--t", "1"]));
    let h = record(&spdmean(&["mean", "harmonic", s(&input)]));
    for (x, y) in g.solution.iter().flatten().zip(h.solution.iter().flatten()) {
        assert!((x - y).abs() <= 1e-14 * y.abs().max(1.0));
    }
}

#[test]
fn every_kind_runs() {
    let dir = TempDir::new().unwrap();
    let input = file(&dir, "triple.json", TRIPLE);
    for args in [
        vec!["power", "--t", "-0.5"],
        vec!["wasserstein"],
        vec!["renyi", "--t", "0.25", "--z", "0.5"],
        vec!["arithmetic"],
        vec!["g", "--t", "0.1", "--weights", "1,2,3", "--init", "identity"],
    ] {
        let mut full = vec!["mean", args[0], s(&input)];
        full.extend(&args[1..]);
        let r = record(&spdmean(&full));
        assert_eq!(r.kind, args[0]);
    }
}

#[test]
fn mean_is_deterministic_and_writes_files() {
    let dir = TempDir::new().unwrap();
    let input = file(&dir, "triple.json", TRIPLE);
    let out = dir.path().join("result.json");
    let a = record(&spdmean(&["mean", "g", s(&input), "--t", "0.3"]));
    let run = spdmean(&["mean", "g", s(&input), "--t", "0.3", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    assert!(run.stdout.is_empty());
    let b = ResultRecord::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(a.same_outcome(&b));
}

#[test]
fn parameters_come_from_the_file_when_flags_are_absent() {
    let dir = TempDir::new().unwrap();
    let input = file(&dir, "p.json", r#"{"dimension": 1, "matrices": [[[1]], [[4]]], "t": 1}"#);
    let r = record(&spdmean(&["mean", "g", s(&input)]));
    assert_eq!(r.parameters.t, Some(1.0));
    assert!((r.solution[0][0] - 1.6).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let triple = file(&dir, "triple.json", TRIPLE);
    let t = s(&triple);
    let broken = file(&dir, "broken.json", "{\"dimension\": 2,");
    let asym = file(&dir, "asym.json", r#"{"dimension": 2, "matrices": [[[2, -1], [-0.5, 2]]]}"#);
    let indefinite = file(&dir, "neg.json", r#"{"dimension": 2, "matrices": [[[1, 2], [2, 1]]]}"#);
    let missing = dir.path().join("missing.json");
    let unwritable = dir.path().join("no/such/dir/out.json");

    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--help"], 0),
        (vec!["frobnicate"], 2),
        (vec!["mean"], 2),
        (vec!["mean", "median", t], 2),
        (vec!["mean", "g", t, "--t", "abc"], 2),
        (vec!["mean", "g", s(&broken)], 3),
        (vec!["mean", "g", s(&asym)], 3),
        (vec!["mean", "g", t, "--weights", "1,x,1"], 3),
        (vec!["sweep", t, "--grid", "0:1"], 3),
        (vec!["verify", "all", "--replay", "nostream"], 3),
        (vec!["mean", "g", s(&indefinite)], 4),
        (vec!["mean", "g", t, "--t", "1.5"], 4),
        (vec!["mean", "g", t, "--t", "0.5", "--alpha", "0"], 4),
        (vec!["mean", "power", t, "--t", "0"], 4),
        (vec!["mean", "renyi", t], 4),
        (vec!["mean", "g", t, "--weights", "1,1"], 4),
        (vec!["mean", "g", t, "--weights", "1,-1,1"], 4),
        (vec!["mean", "g", t, "--tol", "0"], 4),
        (vec!["sweep", t, "--grid", "0,2"], 4),
        (vec!["verify", "everything"], 4),
        (vec!["verify", "all", "--count", "0"], 4),
        (vec!["explore", "riemann"], 4),
        (vec!["explore", "log-majorization", t], 4),
        (vec!["mean", "g", t, "--max-iter", "2"], 5),
        (vec!["mean", "cartan", t, "--max-iter", "2"], 5),
        (vec!["sweep", t, "--grid", "0.3,0.6", "--max-iter", "2"], 6),
        (vec!["mean", "g", s(&missing)], 7),
        (vec!["mean", "g", t, "--out", s(&unwritable)], 7),
    ];
    for (args, want) in cases {
        let out = spdmean(&args);
        assert_eq!(code(&out), want, "spdmean {args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let stderr = String::from_utf8_lossy(&out.stderr);
        match want {
            0 => {}
            6 => assert!(stderr.contains("rows failed")),
            _ => assert!(!stderr.is_empty()),
        }
        if want > 2 && want != 6 {
            assert!(stderr.starts_with("error: "), "{stderr}");
        }
    }
}

#[test]
fn sweep_scalar_pair() {
    let dir = TempDir::new().unwrap();
    let input = file(&dir, "pair.json", SCALAR_PAIR);
    let out = dir.path().join("sweep.json");
    let run = spdmean(&["sweep", s(&input), "--grid", "1,0,0.5", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    let got: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r["t"].as_f64().unwrap(), r["max_eigenvalue"].as_f64().unwrap()))
        .collect();
    for ((t, v), (want_t, want)) in got.iter().zip([(0.0, 2.5), (0.5, 2.0), (1.0, 1.6)]) {
        assert_eq!(*t, want_t);
        assert!((v - want).abs() < 1e-12);
    }
    let table = String::from_utf8_lossy(&run.stdout);
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn sweep_rows_decrease_in_t() {
    let dir = TempDir::new().unwrap();
    let input = file(&dir, "triple.json", TRIPLE);
    let out = dir.path().join("sweep.json");
    assert_eq!(code(&spdmean(&["sweep", s(&input), "--grid", "0.8,0.2", "--out", s(&out)])), 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows[0]["t"], 0.2);
    for key in ["max_eigenvalue", "min_eigenvalue"] {
        assert!(rows[0][key].as_f64().unwrap() >= rows[1][key].as_f64().unwrap());
    }
}

#[test]
fn verify_report_and_replay() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let run = spdmean(&["verify", "ordering", "--count", "5", "--seed", "9", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["suite"], "ordering");
    let results = report["results"].as_array().unwrap();
    assert!(results
        .iter()
        .any(|r| r["invariant"] == "g_mean.above_power_mean_neg_t" && r["max_violation"].as_f64().unwrap() <= 1e-8));
    assert!(String::from_utf8_lossy(&run.stdout).contains("PASS"));

    let replay = spdmean(&["verify", "--seed", "9", "--replay", "g_mean.monotone_in_t:3"]);
    assert_eq!(code(&replay), 0);
    assert!(String::from_utf8_lossy(&replay.stdout).contains("violation"));
}

#[test]
fn explore_reports_and_exits_zero() {
    let dir = TempDir::new().unwrap();
    let triple = file(&dir, "triple.json", TRIPLE);
    let run = spdmean(&["explore", "g-vs-cartan", s(&triple), "--t", "0.5"]);
    assert_eq!(code(&run), 0);
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.contains("1 counterexamples"));
    assert!(text.contains("1.961243912"));

    let constant = file(
        &dir,
        "constant.json",
        r#"{"dimension": 2, "matrices": [[[3, 1], [1, 2]], [[3, 1], [1, 2]]]}"#,
    );
    let out = dir.path().join("explore.json");
    let run = spdmean(&["explore", "g-vs-cartan", s(&constant), "--t", "0.3", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["instances"][0]["relation"], "equal");

    let pair = file(&dir, "pair.json", r#"{"dimension": 2, "matrices": [[[4, 0], [0, 1]], [[1, 0], [0, 9]]]}"#);
    let run = spdmean(&["explore", "log-majorization", s(&pair), "--t", "0.75"]);
    assert_eq!(code(&run), 0);
    assert!(String::from_utf8_lossy(&run.stdout).contains("0 with a positive gap"));

    assert_eq!(code(&spdmean(&["explore", "log-majorization", "--count", "3"])), 0);
}

fn problem() -> impl Strategy<Value = ProblemFile> {
    (1usize..4, 1usize..4).prop_flat_map(|(dim, n)| {
        (
            prop::collection::vec(prop::collection::vec(prop::collection::vec(any::<f64>(), dim), dim), n),
            prop::option::of(prop::collection::vec(1e-300f64..1e300, n)),
            prop::option::of(any::<f64>()),
            prop::option::of(-1.0f64..=1.0),
        )
            .prop_map(move |(matrices, weights, t, alpha)| ProblemFile {
                dimension: dim,
                matrices,
                weights,
                t,
                alpha,
            })
    })
}

fn bits(p: &ProblemFile) -> Vec<u64> {
    p.matrices
        .iter()
        .flatten()
        .flatten()
        .chain(p.weights.iter().flatten())
        .chain(p.t.iter())
        .chain(p.alpha.iter())
        .map(|x| x.to_bits())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn problem_files_round_trip_through_disk(p in problem().prop_filter("finite", |p| bits(p).iter().all(|b| f64::from_bits(*b).is_finite()))) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("p.json");
        p.write(&path).unwrap();
        let back = ProblemFile::read(&path).unwrap();
        prop_assert_eq!(bits(&back), bits(&p));
        prop_assert_eq!(back.dimension, p.dimension);
    }
}
