use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latent-aspects"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// preprocess -> train -> evaluate into `dir`.
fn pipeline(dir: &Path, seed: &str) {
    let reviews = data("reviews.txt");
    let semeval = data("semeval2014.xml");
    let taxonomy = data("taxonomy.tsv");
    let corpus = dir.join("corpus.json");
    let model = dir.join("model.json");
    ok(&["preprocess", s(&reviews), "--out-dir", s(dir), "--quiet"]);
    ok(&[
        "train",
        s(&corpus),
        "-k",
        "3",
        "--iterations",
        "300",
        "--burn-in",
        "100",
        "--seed",
        seed,
        "--out-dir",
        s(dir),
    ]);
    ok(&[
        "evaluate",
        "--model",
        s(&model),
        s(&semeval),
        "--taxonomy",
        s(&taxonomy),
        "--fractions",
        "0,0.5,1",
        "--seed",
        seed,
        "--out-dir",
        s(dir),
    ]);
}

#[test]
fn pipeline_is_byte_identical_under_a_fixed_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), "11");
    pipeline(b.path(), "11");
    for f in [
        "corpus.json",
        "preprocess_report.json",
        "model.json",
        "top_words.csv",
        "semeval2014.eval.csv",
        "semeval2014.eval_detail.csv",
    ] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
    let report = std::fs::read_to_string(a.path().join("semeval2014.eval.csv")).unwrap();
    assert_eq!(report.lines().count(), 4);
    assert!(report.starts_with("fraction,mrr,recall_at_5,ndcg_at_5,hit_at_5,n_reviews,"));
}

#[test]
fn a_different_seed_changes_the_model() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), "1");
    pipeline(b.path(), "2");
    assert_ne!(
        std::fs::read(a.path().join("model.json")).unwrap(),
        std::fs::read(b.path().join("model.json")).unwrap()
    );
}

#[test]
fn missing_corpus_is_a_data_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = bin(&["train", s(&missing), "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(bin(&["train"]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        bin(&["simulate", "--mode", "sideways"]).status.code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["simulate", "-k", "0", "--out-dir", s(dir.path())]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn malformed_xml_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "-k",
        "2",
        "--v",
        "6",
        "--n-docs",
        "20",
        "--doc-len",
        "5",
        "--out-dir",
        s(dir.path()),
    ]);
    ok(&[
        "train",
        s(&dir.path().join("corpus.json")),
        "-k",
        "2",
        "--iterations",
        "20",
        "--burn-in",
        "5",
        "--out-dir",
        s(dir.path()),
    ]);
    let xml = dir.path().join("bad.xml");
    std::fs::write(&xml, "<sentences><sentence id=\"1\"><text>x</sentence>").unwrap();
    let out = bin(&[
        "evaluate",
        "--model",
        s(&dir.path().join("model.json")),
        s(&xml),
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("bad.eval.csv").exists());
}

const FIXTURE_MODEL: &str = r#"{"version":1,"K":3,"alpha":0.5,"beta":0.01,"iterations":0,"seed":0,
"vocabulary":["sushi","fish","waiter","staff","music","decor"],
"n_k":[20.0,20.0,20.0],
"n_kw":[[0,0,12.0],[0,1,8.0],[1,2,11.0],[1,3,9.0],[2,4,10.0],[2,5,10.0]]}"#;

#[test]
fn infer_matches_golden_output() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, FIXTURE_MODEL).unwrap();
    let out = ok(&[
        "infer",
        s(&model),
        "--text",
        "The sushi and fish were great, the waiter too",
        "--seed",
        "5",
    ]);
    // sushi, fish -> aspect 0 and waiter -> aspect 1 with near certainty, so
    // theta = (n + 0.5) / (3 + 1.5).
    let golden = "review_id\trank\taspect_id\ttheta\tall_oov\ttop_words\n\
0\t1\t0\t0.555556\tfalse\tsushi fish waiter staff music\n\
0\t2\t1\t0.333333\tfalse\twaiter staff sushi fish music\n\
0\t3\t2\t0.111111\tfalse\tmusic decor sushi fish waiter\n";
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn all_oov_input_is_flagged_with_uniform_theta() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, FIXTURE_MODEL).unwrap();
    let out = ok(&["infer", s(&model), "--text", "completely unrelated words"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let cols: Vec<&str> = r.split('\t').collect();
        assert_eq!(cols[3], "0.333333");
        assert_eq!(cols[4], "true");
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("uniform"));
}

#[test]
fn simulate_manifest_matches_n_docs_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "--mode",
        "per-review",
        "--n-docs",
        "37",
        "--seed",
        "3",
        "--out-dir",
        s(dir.path()),
    ]);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 38);
    let truth = std::fs::read_to_string(dir.path().join("ground_truth.json")).unwrap();
    assert!(truth.contains("\"mode\":\"per_review\""));
}

#[test]
fn select_k_writes_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "-k",
        "3",
        "--v",
        "30",
        "--n-docs",
        "60",
        "--doc-len",
        "15",
        "--out-dir",
        s(dir.path()),
    ]);
    let corpus = dir.path().join("corpus.json");
    ok(&[
        "select-k",
        s(&corpus),
        "--k-values",
        "2,3,4",
        "--iterations",
        "60",
        "--burn-in",
        "20",
        "--top-m",
        "5",
        "--out-dir",
        s(dir.path()),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("coherence.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.ends_with(",ok")));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "-k",
        "2",
        "--v",
        "8",
        "--n-docs",
        "30",
        "--doc-len",
        "6",
        "--out-dir",
        s(dir.path()),
    ]);
    let corpus = dir.path().join("corpus.json");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 4\n[train]\nk = 3\niterations = 40\nburn_in = 10\n",
    )
    .unwrap();

    let from_file = dir.path().join("file");
    ok(&[
        "train",
        s(&corpus),
        "--config",
        s(&cfg),
        "--out-dir",
        s(&from_file),
    ]);
    let model = std::fs::read_to_string(from_file.join("model.json")).unwrap();
    assert!(
        model.contains("\"K\":3")
            && model.contains("\"seed\":4")
            && model.contains("\"iterations\":40")
    );

    let from_flag = dir.path().join("flag");
    ok(&[
        "train",
        s(&corpus),
        "--config",
        s(&cfg),
        "-k",
        "2",
        "--seed",
        "8",
        "--out-dir",
        s(&from_flag),
    ]);
    let model = std::fs::read_to_string(from_flag.join("model.json")).unwrap();
    assert!(
        model.contains("\"K\":2")
            && model.contains("\"seed\":8")
            && model.contains("\"iterations\":40")
    );

    std::fs::write(&cfg, "[train]\nkay = 3\n").unwrap();
    assert_eq!(
        bin(&["train", s(&corpus), "--config", s(&cfg)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn export_top_words_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, FIXTURE_MODEL).unwrap();
    ok(&[
        "export-top-words",
        s(&model),
        "--top-words",
        "2",
        "--out-dir",
        s(dir.path()),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("top_words.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,1,sushi,"));
}
