use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/synthetic_corpus.jsonl")
}

fn discourse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discourse"))
        .args(args)
        .env_remove("DISCOURSE_OUT")
        .output()
        .expect("binary runs")
}

fn stage(name: &str, out: &Path, extra: &[&str]) -> Output {
    let corpus = corpus();
    let mut args = vec![
        name,
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "42",
        "--replicates",
        "50",
    ];
    args.extend_from_slice(extra);
    discourse(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn all_then_report_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let o = stage("all", dir.path(), &["--format", "md"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let md = String::from_utf8(o.stdout).unwrap();
    assert!(md.starts_with("# Causal narrative report"));
    assert!(md.contains("Networks: 15 month, 5 role, 1 total."));
}

#[test]
fn cug_without_network_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = stage("cug", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run `network` first"), "{}", stderr(&o));
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus();
    let o = discourse(&["stats", "--corpus", corpus.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn unknown_flag_exits_one() {
    let o = discourse(&["extract", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_lexicon_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lexicon.toml");
    fs::write(&lex, "theme_list = [\"A\"]\n[[rules]]\npattern = \"(\"\nconcept = \"X\"\n").unwrap();
    let o = stage("code", &dir.path().join("out"), &["--lexicon", lex.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn format_csv_prints_stage_table() {
    let dir = tempfile::tempdir().unwrap();
    for s in ["extract", "code", "network"] {
        assert!(stage(s, dir.path(), &[]).status.success());
    }
    let o = stage("network", dir.path(), &["--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("concept,out_degree,in_degree,net_degree"), "{text}");
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus();
    let o = Command::new(env!("CARGO_BIN_EXE_discourse"))
        .args(["extract", "--corpus", corpus.to_str().unwrap()])
        .env("DISCOURSE_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("extract/units.jsonl").is_file());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "corpus = {:?}\nseed = 1\n[pca]\ncomponents = 3\n",
            corpus().to_str().unwrap()
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    for (s, extra) in [("extract", vec![]), ("code", vec![]), ("network", vec![]), ("pca", vec!["--components", "1"])] {
        let mut args = vec![s, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend(extra);
        let o = discourse(&args);
        assert!(o.status.success(), "{s}: {}", stderr(&o));
    }
    assert!(out.join("pca/score_pc1.csv").is_file());
    assert!(!out.join("pca/score_pc2.csv").exists());
}

#[test]
fn synth_writes_the_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let o = discourse(&["synth", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(path).unwrap(), fs::read(corpus()).unwrap());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(stage("all", a.path(), &[]).status.success());
    assert!(stage("all", b.path(), &[]).status.success());
    for s in ["extract", "code", "network", "stats", "cug", "pca", "regress", "report"] {
        for entry in fs::read_dir(a.path().join(s)).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(
                fs::read(a.path().join(s).join(&name)).unwrap(),
                fs::read(b.path().join(s).join(&name)).unwrap(),
                "{s}/{}",
                name.to_string_lossy()
            );
        }
    }
}
