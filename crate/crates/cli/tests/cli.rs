//! End-to-end runs of the `fuse` binary on small generated fixtures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fuse_cmd(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fuse"));
    cmd.args(args).env_remove("FUSE_THREADS").env_remove("RUST_LOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    fuse_cmd(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "fuse {}: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn kv<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{stdout}"))
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two 20-node cliques joined by one bridge, ids offset by 100, with block
/// labels.
struct Fixture {
    dir: TempDir,
    edges: PathBuf,
    labels: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut edges = String::new();
        let mut labels = String::new();
        for block in 0..2 {
            for a in 0..20 {
                let u = 100 + block * 20 + a;
                let _ = writeln!(labels, "{u}\t{block}");
                for b in a + 1..20 {
                    let _ = writeln!(edges, "{u}\t{}", 100 + block * 20 + b);
                }
            }
        }
        let _ = writeln!(edges, "100\t120");
        let fixture = Fixture {
            edges: dir.path().join("edges.tsv"),
            labels: dir.path().join("labels.tsv"),
            dir,
        };
        fs::write(&fixture.edges, edges).unwrap();
        fs::write(&fixture.labels, labels).unwrap();
        fixture
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn pairs(&self, count: usize) -> PathBuf {
        let out = self.path("pairs.tsv");
        ok(&["pairs", "--labels", s(&self.labels), "--count", &count.to_string(), "--out", s(&out)]);
        out
    }
}

#[test]
fn pairs_reports_balance_and_exact_flip_count() {
    let f = Fixture::new();
    let out = f.path("noisy.tsv");
    let stdout = ok(&[
        "pairs", "--labels", s(&f.labels), "--count", "200", "--noise", "0.1", "--seed", "4", "--out",
        s(&out),
    ]);
    let count = |key| kv(&stdout, key).parse::<usize>().unwrap();
    assert_eq!(count("requested_positive"), 100);
    assert_eq!(count("requested_negative"), 100);
    // Repeated draws of the same pair collapse into one stored pair.
    let stored = count("positive") + count("negative");
    assert_eq!(stored + count("collapsed"), 200);
    assert_eq!(count("flips"), (0.1 * stored as f64).round() as usize);
    let rows = fs::read_to_string(&out).unwrap();
    assert!(rows.starts_with("# manifest: noisy.tsv.manifest.json"));
    let data: Vec<&str> = rows.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), stored);
    let manifest = json(f.path("noisy.tsv.manifest.json"));
    assert_eq!(manifest["command"], "pairs");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn pairs_can_hold_out_a_clean_test_file() {
    let f = Fixture::new();
    let (train, test) = (f.path("train.tsv"), f.path("test.tsv"));
    let stdout = ok(&[
        "pairs", "--labels", s(&f.labels), "--count", "100", "--noise", "0.2", "--test-fraction",
        "0.2", "--test-out", s(&test), "--out", s(&train),
    ]);
    let count = |key| kv(&stdout, key).parse::<usize>().unwrap();
    let stored = count("positive") + count("negative");
    let test_pairs = (0.2 * stored as f64).round() as usize;
    assert_eq!(count("test_pairs"), test_pairs);
    assert_eq!(count("train_pairs"), stored - test_pairs);
    assert_eq!(count("flips"), (0.2 * (stored - test_pairs) as f64).round() as usize);
    let clean = fs::read_to_string(&test).unwrap();
    assert_eq!(clean.lines().filter(|l| !l.starts_with('#')).count(), test_pairs);
}

#[test]
fn malformed_labels_fail_with_line_number() {
    let f = Fixture::new();
    let bad = f.path("bad.tsv");
    fs::write(&bad, "1\t0\n2\t0\n3\tx\n").unwrap();
    let out = run(&["pairs", "--labels", s(&bad), "--count", "2", "--out", s(&f.path("p.tsv"))]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error[parse]: "), "{stderr}");
    assert!(stderr.contains("bad.tsv:3"), "{stderr}");
}

#[test]
fn errors_are_single_tagged_lines() {
    let f = Fixture::new();
    let missing = run(&["embed", "--out", s(&f.path("e"))]);
    assert_eq!(missing.status.code(), Some(1));
    let stderr = String::from_utf8(missing.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error[usage]: "), "{stderr}");

    let unknown = run(&["embed", "--no-such-flag"]);
    assert_eq!(unknown.status.code(), Some(2));
    let stderr = String::from_utf8(unknown.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error[usage]: "));

    let absent = run(&["diagnose", "--edges", s(&f.path("nope.tsv")), "--out", s(&f.path("d"))]);
    let stderr = String::from_utf8(absent.stderr).unwrap();
    assert!(stderr.starts_with("error[io]: "), "{stderr}");
}

#[test]
fn embed_writes_all_outputs_with_digests() {
    let f = Fixture::new();
    let pairs = f.pairs(60);
    let prefix = f.path("emb");
    let stdout = ok(&[
        "embed", "--edges", s(&f.edges), "--pairs", s(&pairs), "--k", "8", "--iterations", "20",
        "--out", s(&prefix),
    ]);
    assert_eq!(kv(&stdout, "n"), "40");
    assert_eq!(kv(&stdout, "m"), "381");
    for ext in ["tsv", "bin", "trace.csv", "ids.tsv", "manifest.json"] {
        assert!(f.path(&format!("emb.{ext}")).exists(), "{ext}");
    }
    let trace = fs::read_to_string(f.path("emb.trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 21);
    let manifest = json(f.path("emb.manifest.json"));
    assert_eq!(manifest["config"]["fuse"]["k"], 8);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
    let tsv = fs::read_to_string(f.path("emb.tsv")).unwrap();
    assert!(tsv.starts_with("# manifest: emb.manifest.json"));
    let first = tsv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(first.starts_with("100\t"));
    assert_eq!(first.split('\t').count(), 9);
}

#[test]
fn ablation_runs_without_pairs_but_full_model_needs_them() {
    let f = Fixture::new();
    ok(&[
        "embed", "--edges", s(&f.edges), "--lambda-scaled", "0", "--k", "4", "--iterations", "5",
        "--out", s(&f.path("a")),
    ]);
    let out = run(&["embed", "--edges", s(&f.edges), "--k", "4", "--out", s(&f.path("b"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("--pairs"));
}

#[test]
fn gradient_modes_differ() {
    let f = Fixture::new();
    let pairs = f.pairs(60);
    let mut embeddings = Vec::new();
    for mode in ["approximate", "exact"] {
        let prefix = f.path(mode);
        ok(&[
            "embed", "--edges", s(&f.edges), "--pairs", s(&pairs), "--k", "8", "--iterations", "10",
            "--gradient-mode", mode, "--out", s(&prefix),
        ]);
        embeddings.push(fs::read(f.path(&format!("{mode}.bin"))).unwrap());
    }
    assert_ne!(embeddings[0], embeddings[1]);
    assert_eq!(embeddings[0].len(), embeddings[1].len());
}

#[test]
fn config_file_layers_under_flags() {
    let f = Fixture::new();
    let pairs = f.pairs(60);
    let config = f.path("fuse.toml");
    fs::write(&config, "k = 4\niterations = 3\nepochs = 7\n[embed]\nk = 6\n").unwrap();

    ok(&[
        "embed", "--config", s(&config), "--edges", s(&f.edges), "--pairs", s(&pairs), "--out",
        s(&f.path("from_file")),
    ]);
    let m = json(f.path("from_file.manifest.json"));
    assert_eq!(m["config"]["fuse"]["k"], 6);
    assert_eq!(m["config"]["fuse"]["iterations"], 3);

    ok(&[
        "embed", "--config", s(&config), "--edges", s(&f.edges), "--pairs", s(&pairs), "--k", "5",
        "--out", s(&f.path("flag")),
    ]);
    assert_eq!(json(f.path("flag.manifest.json"))["config"]["fuse"]["k"], 5);

    fs::write(&config, "kk = 4\n").unwrap();
    let out = run(&["embed", "--config", s(&config), "--edges", s(&f.edges), "--out", s(&f.path("x"))]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error[config]: "), "{stderr}");
}

#[test]
fn thread_count_comes_from_flag_then_environment() {
    let f = Fixture::new();
    let pairs = f.pairs(60);
    let base = ["embed", "--edges", s(&f.edges), "--pairs", s(&pairs), "--k", "4", "--iterations", "3"];

    let env_prefix = f.path("env");
    let mut args = base.to_vec();
    args.extend(["--out", s(&env_prefix)]);
    let out = fuse_cmd(&args).env("FUSE_THREADS", "3").output().unwrap();
    assert!(out.status.success());
    assert_eq!(json(f.path("env.manifest.json"))["threads"], 3);

    let flag_prefix = f.path("flag");
    let mut args = base.to_vec();
    args.extend(["--threads", "2", "--out", s(&flag_prefix)]);
    let out = fuse_cmd(&args).env("FUSE_THREADS", "3").output().unwrap();
    assert!(out.status.success());
    assert_eq!(json(f.path("flag.manifest.json"))["threads"], 2);

    let mut args = base.to_vec();
    args.extend(["--out", s(&env_prefix)]);
    let out = fuse_cmd(&args).env("FUSE_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diagnose_path_graph_reports_unmet_bound() {
    let f = Fixture::new();
    let p3 = f.path("p3.tsv");
    fs::write(&p3, "0 1\n1 2\n").unwrap();
    let stdout = ok(&["diagnose", "--edges", s(&p3), "--out", s(&f.path("p3"))]);
    assert_eq!(kv(&stdout, "bound_satisfied"), "false");
    let c: f64 = kv(&stdout, "zagreb_constant").parse().unwrap();
    assert!((c - 8.0 / 36.0).abs() < 1e-12);
    let report = json(f.path("p3.json"));
    assert!(report["lipschitz"].is_null());
    assert_eq!(report["manifest"], "p3.manifest.json");
}

#[test]
fn diagnose_with_pairs_adds_lipschitz() {
    let f = Fixture::new();
    let pairs = f.pairs(60);
    let stdout = ok(&["diagnose", "--edges", s(&f.edges), "--pairs", s(&pairs), "--out", s(&f.path("d"))]);
    assert_eq!(kv(&stdout, "lipschitz_spot_check"), "true");
    let report = json(f.path("d.json"));
    assert_eq!(report["lambda"], 0.75);
    assert!(report["lipschitz"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn eval_held_out_and_fresh_modes() {
    let f = Fixture::new();
    let (train, test) = (f.path("train.tsv"), f.path("test.tsv"));
    ok(&[
        "pairs", "--labels", s(&f.labels), "--count", "200", "--test-fraction", "0.25", "--test-out",
        s(&test), "--out", s(&train),
    ]);
    ok(&[
        "embed", "--edges", s(&f.edges), "--pairs", s(&train), "--k", "8", "--iterations", "20",
        "--out", s(&f.path("emb")),
    ]);

    let lines = |p: &Path| fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with('#')).count();
    let (n_train, n_test) = (lines(&train), lines(&test));

    let held = ok(&["eval", "--embedding", s(&f.path("emb.tsv")), "--pairs", s(&train), "--out", s(&f.path("held"))]);
    assert_eq!(kv(&held, "mode"), "held-out");
    let held_train: usize = kv(&held, "n_train").parse().unwrap();
    assert_eq!(held_train, (0.8 * n_train as f64).round() as usize);
    assert_eq!(kv(&held, "n_test").parse::<usize>().unwrap(), n_train - held_train);

    let fresh = ok(&[
        "eval", "--embedding", s(&f.path("emb.bin")), "--ids", s(&f.path("emb.ids.tsv")), "--pairs",
        s(&train), "--test-pairs", s(&test), "--out", s(&f.path("fresh")),
    ]);
    assert_eq!(kv(&fresh, "mode"), "fresh");
    assert_eq!(kv(&fresh, "n_test").parse::<usize>().unwrap(), n_test);
    let acc: f64 = kv(&fresh, "accuracy").parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let report = json(f.path("fresh.json"));
    assert_eq!(report["n_train"], n_train);
    let weights = fs::read_to_string(f.path("fresh.weights.txt")).unwrap();
    assert_eq!(weights.lines().count(), 2 * 8 + 1);
}

#[test]
fn bench_writes_csv_and_fit() {
    let f = Fixture::new();
    let csv = f.path("bench.csv");
    let stdout = ok(&[
        "bench", "--nodes", "200", "--edge-counts", "400,800", "--pair-counts", "100,200", "--dims",
        "4,8", "--iterations", "2", "--rounds", "1", "--out", s(&csv),
    ]);
    assert_eq!(kv(&stdout, "configurations"), "8");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "n,m,P,k,work,seconds_per_iteration");
    assert_eq!(text.lines().count(), 9);
    let r2: f64 = kv(&stdout, "r_squared").parse().unwrap();
    assert!(r2 <= 1.0);
}
