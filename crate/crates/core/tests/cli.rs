use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use freqlens::corpus::{build_vocab, Corpus};
use freqlens::synth::ZipfCorpus;
use tempfile::TempDir;

fn freqlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freqlens"))
        .args(args)
        .env_remove("FREQLENS_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = freqlens(args);
    assert!(
        out.status.success(),
        "freqlens {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small corpus file plus a scratch directory.
fn workspace(tokens: usize) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ZipfCorpus::new(2_000, tokens).seed(4).generate();
    let path = dir.path().join("corpus.txt");
    corpus.write_to(fs::File::create(&path).unwrap()).unwrap();
    (dir, path)
}

fn read_corpus(path: &Path) -> Corpus {
    Corpus::read_from(fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn unknown_metric_is_a_usage_error_listing_choices() {
    let out = freqlens(&[
        "heatmap",
        "--embeddings",
        "e.bin",
        "--vocab",
        "v.tsv",
        "--metric",
        "manhattan",
        "--out",
        "h.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("cosine") && err.contains("neg_euclidean"),
        "{err}"
    );
}

#[test]
fn unknown_flag_and_missing_path_fail() {
    assert_eq!(
        freqlens(&["shuffle", "--corpus", "c.txt", "--out", "o.txt", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        freqlens(&["shuffle", "--corpus", "c.txt"]).status.code(),
        Some(2)
    );
}

#[test]
fn zero_negatives_is_a_range_error() {
    let (dir, corpus) = workspace(2_000);
    let out_path = dir.path().join("e.bin");
    let out = freqlens(&[
        "train",
        "--method",
        "sgns",
        "--neg",
        "0",
        "--corpus",
        p(&corpus),
        "--out",
        p(&out_path),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("neg"), "{err}");
    assert!(!out_path.exists());
}

#[test]
fn missing_input_file_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = freqlens(&[
        "shuffle",
        "--corpus",
        p(&dir.path().join("nope.txt")),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn preprocess_then_shuffle_keeps_counts() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.txt");
    fs::write(
        &raw,
        "The cat sat on the mat. The dog, however, did not!\nIt barked.\n\nA second document: the end.\n",
    )
    .unwrap();
    let clean = dir.path().join("clean.txt");
    let vocab = dir.path().join("vocab.tsv");
    ok(&[
        "preprocess",
        "--input",
        p(&raw),
        "--out",
        p(&clean),
        "--vocab-out",
        p(&vocab),
    ]);
    let text = fs::read_to_string(&clean).unwrap();
    assert!(
        text.lines()
            .next()
            .unwrap()
            .starts_with("the cat sat on the mat"),
        "{text}"
    );

    let shuffled = dir.path().join("shuffled.txt");
    ok(&[
        "--seed",
        "9",
        "shuffle",
        "--corpus",
        p(&clean),
        "--out",
        p(&shuffled),
    ]);
    let before = read_corpus(&clean);
    let after = read_corpus(&shuffled);
    let mut a = before.word_counts();
    let mut b = after.word_counts();
    a.sort();
    b.sort();
    assert_eq!(a, b);
    assert_eq!(before.sentence_lengths(), after.sentence_lengths());

    let meta: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("shuffled.txt.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["command"], "shuffle");
    assert_eq!(meta["seed"], 9);
    assert!(meta["inputs"][p(&clean)].as_str().unwrap().len() == 64);
}

#[test]
fn seed_falls_back_to_environment() {
    let (dir, corpus) = workspace(3_000);
    let out = dir.path().join("s.txt");
    let status = Command::new(env!("CARGO_BIN_EXE_freqlens"))
        .args(["shuffle", "--corpus", p(&corpus), "--out", p(&out)])
        .env("FREQLENS_SEED", "123")
        .output()
        .unwrap();
    assert!(status.status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.txt.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 123);
}

#[test]
fn resample_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ZipfCorpus::new(500, 20_000)
        .plant("she", 300)
        .plant("he", 800)
        .seed(2)
        .generate();
    let path = dir.path().join("c.txt");
    corpus.write_to(fs::File::create(&path).unwrap()).unwrap();
    let out = dir.path().join("r.txt");
    let report = dir.path().join("r.json");
    ok(&[
        "resample",
        "--corpus",
        p(&path),
        "--word",
        "he",
        "--target",
        "100",
        "--out",
        p(&out),
        "--report",
        p(&report),
        "--watch",
        "she",
    ]);
    assert_eq!(read_corpus(&out).count_of("he"), 100);
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["count_after"], 100);
    assert_eq!(rep["side_effect_counts"]["she"], 0);
}

#[test]
fn train_heatmap_pca_pipeline_is_reproducible() {
    let (dir, corpus) = workspace(40_000);
    let emb = dir.path().join("e.bin");
    let snaps = dir.path().join("snaps");
    ok(&[
        "--seed",
        "3",
        "train",
        "--corpus",
        p(&corpus),
        "--method",
        "sgns",
        "--dim",
        "16",
        "--epochs",
        "2",
        "--min-count",
        "5",
        "--out",
        p(&emb),
        "--snapshots",
        p(&snaps),
    ]);
    let vocab = dir.path().join("e.bin.vocab.tsv");
    assert!(vocab.is_file());
    assert_eq!(
        fs::read_dir(&snaps)
            .unwrap()
            .filter(|e| e
                .as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "bin"))
            .count(),
        2
    );

    let run_heatmap = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "--seed",
            "7",
            "heatmap",
            "--embeddings",
            p(&emb),
            "--vocab",
            p(&vocab),
            "--pairs",
            "50",
            "--out",
            p(&out),
        ]);
        fs::read(out).unwrap()
    };
    let h1 = run_heatmap("h1.csv");
    let h2 = run_heatmap("h2.csv");
    assert_eq!(h1, h2);
    let text = String::from_utf8(h1).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "bin_row,bin_col,mean_sim,n_pairs,shortfall"
    );

    // retraining with the same seed is bit-identical
    let emb2 = dir.path().join("e2.bin");
    ok(&[
        "--seed",
        "3",
        "train",
        "--corpus",
        p(&corpus),
        "--method",
        "sgns",
        "--dim",
        "16",
        "--epochs",
        "2",
        "--min-count",
        "5",
        "--out",
        p(&emb2),
    ]);
    assert_eq!(fs::read(&emb).unwrap(), fs::read(&emb2).unwrap());

    let pca = dir.path().join("pca.csv");
    ok(&[
        "pca",
        "--embeddings",
        p(&emb),
        "--vocab",
        p(&vocab),
        "--words-per-bin",
        "20",
        "--out",
        p(&pca),
    ]);
    let text = fs::read_to_string(&pca).unwrap();
    assert_eq!(text.lines().next().unwrap(), "word,bin,pc1,pc2,is_centroid");
    assert!(text.lines().any(|l| l.ends_with(",true")));
}

#[test]
fn glove_grid_gives_six_settings_then_rmse_and_regression() {
    let (dir, corpus) = workspace(20_000);
    let grid = dir.path().join("grid");
    ok(&[
        "grid",
        "--method",
        "glove",
        "--corpus",
        p(&corpus),
        "--dim",
        "8",
        "--epochs",
        "3",
        "--min-count",
        "3",
        "--out-dir",
        p(&grid),
    ]);
    let mut settings: Vec<String> = fs::read_dir(&grid)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    settings.sort();
    assert_eq!(
        settings,
        [
            "glove_win10_wcno",
            "glove_win10_wcyes",
            "glove_win2_wcno",
            "glove_win2_wcyes",
            "glove_win5_wcno",
            "glove_win5_wcyes"
        ]
    );
    for s in &settings {
        assert!(grid.join(s).join("embeddings.bin.meta.json").is_file());
    }

    let rmse = dir.path().join("rmse.csv");
    ok(&[
        "rmse",
        "--grid-dir",
        p(&grid),
        "--pairs",
        "40",
        "--permutations",
        "20",
        "--out",
        p(&rmse),
    ]);
    let text = fs::read_to_string(&rmse).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "setting_id,metric,rmse_actual,baseline_q50,baseline_q99,baseline_max,n_perm"
    );
    assert_eq!(lines.count(), 12);

    let reg = dir.path().join("reg.csv");
    ok(&[
        "regress",
        "--rmse",
        p(&rmse),
        "--metric",
        "neg_euclidean",
        "--out",
        p(&reg),
    ]);
    let text = fs::read_to_string(&reg).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "term,coef,se,t,p");
    let terms: Vec<&str> = rows[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(terms, ["intercept", "win=5", "win=10", "w+c=yes"]);
}

#[test]
fn bias_command_writes_rows_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = ZipfCorpus::new(800, 30_000)
        .plant("she", 400)
        .plant("he", 400)
        .seed(8)
        .generate();
    let path = dir.path().join("c.txt");
    corpus.write_to(fs::File::create(&path).unwrap()).unwrap();
    let vocab = build_vocab(&corpus, 5);
    let norms = dir.path().join("norms.csv");
    let mut csv = String::from("word,gender_norm,is_homonym\n");
    for (k, w) in vocab
        .words()
        .iter()
        .enumerate()
        .filter(|(_, w)| *w != "she" && *w != "he")
        .take(60)
    {
        csv.push_str(&format!("{w},{},{}\n", 1 + k % 7, k % 13 == 0));
    }
    csv.push_str("Paris,4,false\n");
    fs::write(&norms, csv).unwrap();

    let mut embs = Vec::new();
    for (k, id) in ["c1", "c2"].iter().enumerate() {
        let e = dir.path().join(format!("{id}.bin"));
        ok(&[
            "--seed",
            &k.to_string(),
            "train",
            "--corpus",
            p(&path),
            "--method",
            "glove",
            "--dim",
            "8",
            "--epochs",
            "3",
            "--min-count",
            "5",
            "--out",
            p(&e),
        ]);
        embs.push(e);
    }
    let vocabs: Vec<String> = embs.iter().map(|e| format!("{}.vocab.tsv", p(e))).collect();
    let rows = dir.path().join("bias.csv");
    let agg = dir.path().join("agg.csv");
    ok(&[
        "bias",
        "--embeddings",
        &format!("{},{}", p(&embs[0]), p(&embs[1])),
        "--vocabs",
        &vocabs.join(","),
        "--norms",
        p(&norms),
        "--a",
        "she",
        "--b",
        "he",
        "--resamples",
        "200",
        "--out",
        p(&rows),
        "--aggregates-out",
        p(&agg),
    ]);
    let text = fs::read_to_string(&rows).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "corpus_id,word,bin,class,bias"
    );
    let n_rows = text.lines().count() - 1;
    assert_eq!(n_rows % 2, 0);
    assert!(n_rows > 0 && n_rows <= 2 * 60);
    assert!(!text.contains("Paris"));
    let text = fs::read_to_string(&agg).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "corpus_id,bin,class,n,mean,ci_low,ci_high"
    );
}
