use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn clues(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clues"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) {
    let out = clues(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn heights(dendrogram: &Value) -> Vec<f64> {
    dendrogram["merges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m[2].as_f64().unwrap())
        .collect()
}

const PLANTED4: &str = "a,b,c,d\n0,0.3,0.6,0.7\n0.3,0,0.65,0.6\n0.6,0.65,0,0.35\n0.7,0.6,0.35,0\n";

fn planted4(dir: &Path) {
    fs::write(dir.join("d.csv"), PLANTED4).unwrap();
    fs::write(
        dir.join("c.json"),
        r#"{"layers":[{"must_link":[["a","b"],["c","d"]],"cannot_link":[["a","c"]]}]}"#,
    )
    .unwrap();
    fs::write(dir.join("empty.json"), r#"{"layers":[{}]}"#).unwrap();
}

#[test]
fn four_point_hand_trace() {
    let t = tempfile::tempdir().unwrap();
    planted4(t.path());
    ok(
        &[
            "cluster",
            "--distances",
            "d.csv",
            "--constraints",
            "c.json",
            "--linkage",
            "single",
            "-o",
            "o",
        ],
        t.path(),
    );
    // must-links halve 0.3 and 0.35; the layer's last update moves the
    // cannot-linked single-link distance 0.6 to (0.6 + 1) / 2
    let h = heights(&json(t.path().join("o/dendrogram.json")));
    assert_eq!(h.len(), 3);
    for (got, want) in h.iter().zip([0.15, 0.175, 0.8]) {
        assert!((got - want).abs() < 1e-12, "{h:?}");
    }
    let newick = fs::read_to_string(t.path().join("o/dendrogram.nwk")).unwrap();
    assert_eq!(newick.trim(), "((a:0.15,b:0.15):0.65,(c:0.175,d:0.175):0.625);");
}

#[test]
fn empty_constraints_equal_the_unconstrained_baseline() {
    let t = tempfile::tempdir().unwrap();
    planted4(t.path());
    ok(
        &[
            "cluster",
            "--distances",
            "d.csv",
            "--constraints",
            "empty.json",
            "-o",
            "e",
        ],
        t.path(),
    );
    ok(&["cluster", "--distances", "d.csv", "-o", "u"], t.path());
    ok(
        &[
            "cluster",
            "--distances",
            "d.csv",
            "--constraints",
            "c.json",
            "--unconstrained",
            "-o",
            "b",
        ],
        t.path(),
    );
    let e = fs::read(t.path().join("e/dendrogram.json")).unwrap();
    assert_eq!(e, fs::read(t.path().join("u/dendrogram.json")).unwrap());
    assert_eq!(e, fs::read(t.path().join("b/dendrogram.json")).unwrap());
}

#[test]
fn exit_codes_follow_the_error_category() {
    let t = tempfile::tempdir().unwrap();
    planted4(t.path());
    let code = |args: &[&str]| clues(args, t.path()).status.code();
    assert_eq!(code(&["cluster", "--distances", "missing.csv", "-o", "x"]), Some(2));
    fs::write(t.path().join("ragged.csv"), "a,b\n0,1\n1\n").unwrap();
    assert_eq!(code(&["cluster", "--distances", "ragged.csv", "-o", "x"]), Some(2));
    fs::write(t.path().join("bad.json"), r#"{"layers":[{"must_link":[["a","zz"]]}]}"#).unwrap();
    assert_eq!(
        code(&[
            "cluster",
            "--distances",
            "d.csv",
            "--constraints",
            "bad.json",
            "-o",
            "x"
        ]),
        Some(3)
    );
    assert_eq!(
        code(&["cluster", "--distances", "d.csv", "--threshold", "1.5", "-o", "x"]),
        Some(3)
    );
    fs::write(t.path().join("broken.json"), "{").unwrap();
    assert_eq!(
        code(&[
            "cluster",
            "--distances",
            "d.csv",
            "--constraints",
            "broken.json",
            "-o",
            "x"
        ]),
        Some(2)
    );
    // one merge cannot satisfy both must-links
    let capped = [
        "cluster",
        "--distances",
        "d.csv",
        "--constraints",
        "c.json",
        "--imax",
        "1",
    ];
    assert_eq!(code(&[&capped[..], &["-o", "x"]].concat()), Some(0));
    assert_eq!(
        code(&[&capped[..], &["--fail-on-warning", "-o", "x"]].concat()),
        Some(4)
    );
}

#[test]
fn cut_and_eval_agree_with_run() {
    let t = tempfile::tempdir().unwrap();
    planted4(t.path());
    ok(
        &["run", "--distances", "d.csv", "--constraints", "c.json", "-o", "r"],
        t.path(),
    );
    ok(
        &["cluster", "--distances", "d.csv", "--constraints", "c.json", "-o", "s1"],
        t.path(),
    );
    ok(
        &[
            "cut",
            "--dendrogram",
            "s1/dendrogram.json",
            "--constraints",
            "c.json",
            "-o",
            "s2",
        ],
        t.path(),
    );
    ok(
        &[
            "eval",
            "--dendrogram",
            "s1/dendrogram.json",
            "--hierarchy",
            "s2/hierarchy.json",
            "--distances",
            "d.csv",
            "--constraints",
            "c.json",
            "-o",
            "s3",
        ],
        t.path(),
    );
    for (a, b) in [
        ("r/dendrogram.json", "s1/dendrogram.json"),
        ("r/hierarchy.json", "s2/hierarchy.json"),
        ("r/hierarchy.txt", "s2/hierarchy.txt"),
        ("r/cuts.json", "s2/cuts.json"),
        ("r/report.csv", "s3/report.csv"),
    ] {
        assert_eq!(
            fs::read(t.path().join(a)).unwrap(),
            fs::read(t.path().join(b)).unwrap(),
            "{a} vs {b}"
        );
    }
    let report = json(t.path().join("r/report.json"));
    assert_eq!(report["violation_rate"], 0.0);
    assert!(report.get("wall_time").is_none());
    let hierarchy = json(t.path().join("r/hierarchy.json"));
    assert_eq!(
        hierarchy["layers"][0]["clusters"],
        serde_json::json!([["a", "b"], ["c", "d"]])
    );
}

#[test]
fn replay_reproduces_outputs() {
    let t = tempfile::tempdir().unwrap();
    planted4(t.path());
    ok(
        &[
            "run",
            "--distances",
            "d.csv",
            "--constraints",
            "c.json",
            "--method",
            "local-variation",
            "-o",
            "r",
        ],
        t.path(),
    );
    ok(&["replay", "--manifest", "r/manifest.json", "-o", "again"], t.path());
    for f in [
        "dendrogram.json",
        "dendrogram.nwk",
        "step1.json",
        "hierarchy.json",
        "cuts.json",
        "report.json",
    ] {
        assert_eq!(
            fs::read(t.path().join("r").join(f)).unwrap(),
            fs::read(t.path().join("again").join(f)).unwrap(),
            "{f}"
        );
    }
    let m = json(t.path().join("r/manifest.json"));
    assert_eq!(m["invocation"]["command"], "run");
    assert_eq!(m["invocation"]["step1"]["method"], "local-variation");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 9);
}

#[test]
fn ingest_writes_vocabulary_and_distances() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("corpus.txt"), "a b\na c\nd e\n").unwrap();
    ok(
        &["ingest", "--corpus", "corpus.txt", "--window", "1", "-o", "i"],
        t.path(),
    );
    let vocab = fs::read_to_string(t.path().join("i/vocab.txt")).unwrap();
    assert_eq!(vocab.lines().collect::<Vec<_>>(), vec!["a", "b", "c", "d", "e"]);
    let csv = fs::read_to_string(t.path().join("i/distances.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    // b and c share their only neighbour; d never meets b
    assert_eq!(rows[2][2], "0");
    assert_eq!(rows[2][3], "1");
    let m = json(t.path().join("i/manifest.json"));
    assert_eq!(m["corpus"]["window"], 1);

    fs::write(t.path().join("tiny.txt"), "a a a\n").unwrap();
    assert_eq!(
        clues(&["ingest", "--corpus", "tiny.txt", "-o", "x"], t.path())
            .status
            .code(),
        Some(3)
    );
}

fn comparison(dir: &Path, threads: &str) -> Vec<Vec<String>> {
    let out = Command::new(env!("CARGO_BIN_EXE_clues"))
        .args(["compare", "--datasets", "data", "-o", &format!("cmp{threads}")])
        .env("CLUES_THREADS", threads)
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    fs::read_to_string(dir.join(format!("cmp{threads}/comparison.csv")))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn compare_table_shape_and_determinism() {
    let t = tempfile::tempdir().unwrap();
    ok(&["synth", "--count", "2", "--n", "40", "-o", "data"], t.path());
    let rows = comparison(t.path(), "1");
    assert_eq!(rows.len(), 8);
    let norm: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    assert_eq!(norm.iter().cloned().fold(0.0, f64::max), 1.0);
    assert_eq!(rows[0][..3], ["planted-00", "bottom-up", "true"]);
    assert_eq!(rows[7][..3], ["planted-01", "local-variation", "false"]);

    // everything but the two timing columns is independent of the pool size
    let strip = |rows: &[Vec<String>]| rows.iter().map(|r| r[..5].to_vec()).collect::<Vec<_>>();
    assert_eq!(strip(&rows), strip(&comparison(t.path(), "3")));
}

#[test]
fn compare_without_constraints_gives_identical_pairs_and_skips_bad_files() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("data");
    fs::create_dir(&data).unwrap();
    fs::write(data.join("four.csv"), PLANTED4).unwrap();
    fs::write(data.join("broken.csv"), "a,b\n0,x\nx,0\n").unwrap();
    let rows = comparison(t.path(), "2");
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][0], "four");
        assert_eq!(pair[0][3..5], pair[1][3..5]);
    }
}
