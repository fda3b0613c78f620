//! Integration tests for the `lnmap` binary: exit codes, file contracts
//! of run directories and reports, resumption, and the config layering.
//!
//! Every test works on a tiny synthetic fixture (120 words, 8
//! dimensions) so the whole file runs in seconds.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

/// Runs the compiled binary with `args` and captures its output.
fn lnmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lnmap"))
        .args(args)
        .output()
        .expect("failed to spawn the lnmap binary")
}

/// Runs the binary and panics (with its output) unless it succeeded.
fn lnmap_ok(args: &[&str]) -> String {
    let out = lnmap(args);
    assert!(
        out.status.success(),
        "lnmap {args:?} failed with {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Asserts an exact exit code and returns stderr for message checks.
fn expect_exit(args: &[&str], code: i32) -> String {
    let out = lnmap(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "lnmap {args:?} exited with {:?}, expected {code}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()))
}

/// Paths of one generated dataset.
struct Fixture {
    src: PathBuf,
    tgt: PathBuf,
    seed: PathBuf,
    eval: PathBuf,
}

impl Fixture {
    fn arg(path: &Path) -> String {
        path.to_str().expect("fixture path is valid UTF-8").to_string()
    }
}

/// Generates the standard tiny dataset: a noisy planted rotation over
/// 120 words in 8 dimensions with 40 seed and 40 held-out pairs.
fn make_fixture(dir: &Path) -> Fixture {
    let data = dir.join("data");
    lnmap_ok(&[
        "synth",
        "--kind",
        "orthogonal",
        "--words",
        "120",
        "--dim",
        "8",
        "--noise",
        "0.01",
        "--seed-pairs",
        "40",
        "--eval-pairs",
        "40",
        "--seed",
        "11",
        "--out-dir",
        &Fixture::arg(&data),
    ]);
    Fixture {
        src: data.join("src.vec"),
        tgt: data.join("tgt.vec"),
        seed: data.join("seed.dict"),
        eval: data.join("eval.dict"),
    }
}

/// Training flags sized for the tiny fixture; `--max-iters` is left to
/// each test. The convergence threshold is effectively unreachable so
/// every run executes its full iteration budget.
fn train_args(fx: &Fixture, out_dir: &Path, extra: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = [
        "train",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--dict",
        &Fixture::arg(&fx.seed),
        "--out-dir",
        &Fixture::arg(out_dir),
        "--pretrain-inline",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(tiny_hyper_flags());
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn tiny_hyper_flags() -> Vec<String> {
    [
        "--latent-dim",
        "8",
        "--hidden-dim",
        "12",
        "--batch-size",
        "32",
        "--lr",
        "0.1",
        "--ae-epochs",
        "30",
        "--map-epochs",
        "5",
        "--increment",
        "60",
        "--k-freq",
        "120",
        "--csls-k",
        "5",
        "--convergence-eps",
        "1e-300",
        "--seed",
        "5",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn as_refs(args: &[String]) -> Vec<&str> {
    args.iter().map(String::as_str).collect()
}

#[test]
fn version_and_help_are_available() {
    let out = lnmap_ok(&["--version"]);
    assert!(out.contains("lnmap"), "--version output: {out}");
    let help = lnmap_ok(&["train", "--help"]);
    for flag in ["--dict", "--out-dir", "--resume", "--pretrain-inline"] {
        assert!(help.contains(flag), "train --help is missing {flag}");
    }
}

#[test]
fn missing_inputs_fail_without_creating_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let out_dir = tmp.path().join("run");

    let args = [
        "train",
        "--src-emb",
        "/nonexistent/src.vec",
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--dict",
        &Fixture::arg(&fx.seed),
        "--out-dir",
        &Fixture::arg(&out_dir),
        "--pretrain-inline",
    ];
    let stderr = expect_exit(&args, 2);
    assert!(
        stderr.contains("/nonexistent/src.vec"),
        "stderr should name the missing file: {stderr}"
    );
    assert!(
        !out_dir.exists(),
        "a run directory was created for a run that never started"
    );

    let stderr = expect_exit(
        &[
            "evaluate",
            "--src-emb",
            &Fixture::arg(&fx.src),
            "--tgt-emb",
            &Fixture::arg(&fx.tgt),
            "--run-dir",
            &Fixture::arg(&tmp.path().join("no-such-run")),
            "--eval-dict",
            &Fixture::arg(&fx.eval),
        ],
        2,
    );
    assert!(stderr.contains("no-such-run"), "stderr: {stderr}");
}

#[test]
fn unknown_flags_and_config_keys_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());

    expect_exit(&["train", "--bogus-flag"], 2);

    let config = tmp.path().join("bad.json");
    std::fs::write(&config, "{\"ae-epochs\": 3, \"bogus-key\": 1}\n").unwrap();
    let out_dir = tmp.path().join("run");
    let mut args = train_args(&fx, &out_dir, &["--max-iters", "1"]);
    args.push("--config".to_string());
    args.push(Fixture::arg(&config));
    let stderr = expect_exit(&as_refs(&args), 2);
    assert!(stderr.contains("bogus-key"), "stderr: {stderr}");
}

#[test]
fn degenerate_settings_are_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let out_dir = tmp.path().join("run");

    let cases: &[&[&str]] = &[
        &["--batch-size", "0", "--max-iters", "1"],
        &["--csls-k", "200", "--max-iters", "1"],
        &["--lr-decay", "0", "--max-iters", "1"],
        &["--max-iters", "0"],
    ];
    for extra in cases {
        let args = train_args(&fx, &out_dir, extra);
        expect_exit(&as_refs(&args), 2);
        assert!(!out_dir.exists(), "run dir created for rejected flags {extra:?}");
    }

    let synth = |extra: &[&str]| {
        let mut args = vec![
            "synth".to_string(),
            "--kind".to_string(),
            "warp".to_string(),
            "--words".to_string(),
            "50".to_string(),
            "--dim".to_string(),
            "8".to_string(),
            "--out-dir".to_string(),
            Fixture::arg(&tmp.path().join("warp")),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        args
    };
    expect_exit(&as_refs(&synth(&["--intrinsic-dim", "0"])), 2);
    expect_exit(&as_refs(&synth(&["--intrinsic-dim", "9"])), 2);
    expect_exit(&as_refs(&synth(&["--warp-gain", "0"])), 2);
}

#[test]
fn numeric_blowups_use_their_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let out_dir = tmp.path().join("run");
    let mut args = train_args(&fx, &out_dir, &["--max-iters", "1"]);
    let lr = args.iter().position(|a| a == "--lr").unwrap();
    args[lr + 1] = "1e30".to_string();
    let stderr = expect_exit(&as_refs(&args), 3);
    assert!(
        stderr.contains("finite") || stderr.contains("NaN"),
        "stderr should describe the numeric failure: {stderr}"
    );
}

#[test]
fn train_writes_the_run_directory_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let out_dir = tmp.path().join("run");
    let stdout = lnmap_ok(&as_refs(&train_args(&fx, &out_dir, &["--max-iters", "2"])));
    assert!(stdout.contains("wrote"), "stdout: {stdout}");

    for file in [
        "manifest.json",
        "config.json",
        "history.jsonl",
        "model.bin",
        "checkpoint.json",
    ] {
        assert!(out_dir.join(file).is_file(), "{file} missing from the run directory");
    }

    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["tool"], "lnmap");
    assert_eq!(manifest["seed"], 5);
    let inputs = manifest["inputs"].as_array().unwrap();
    let roles: Vec<&str> = inputs.iter().map(|i| i["role"].as_str().unwrap()).collect();
    assert_eq!(roles, ["src-emb", "tgt-emb", "dict"]);
    for record in inputs {
        let sha = record["sha256"].as_str().unwrap();
        assert_eq!(sha.len(), 64);
        assert!(sha.chars().all(|c| c.is_ascii_hexdigit()));
        assert!(record["bytes"].as_u64().unwrap() > 0);
    }
    let (want_sha, want_bytes) = lnmap::rundir::sha256_file(&fx.seed).unwrap();
    let dict_record = &inputs[2];
    assert_eq!(dict_record["sha256"].as_str().unwrap(), want_sha);
    assert_eq!(dict_record["bytes"].as_u64().unwrap(), want_bytes);

    let config = read_json(&out_dir.join("config.json"));
    assert_eq!(config["latent-dim"], 8);
    assert_eq!(config["hidden-dim"], 12);
    assert_eq!(config["ae-epochs"], 30);
    assert_eq!(config["max-iters"], 2);
    assert_eq!(config, manifest["config"]);

    let history = std::fs::read_to_string(out_dir.join("history.jsonl")).unwrap();
    let lines: Vec<&str> = history.lines().filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(lines.len(), 2, "expected one record per iteration");
    for (idx, line) in lines.iter().enumerate() {
        let record: Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["iteration"], idx as u64 + 1);
        for field in ["loss_map", "loss_bt", "loss_rec", "avg_similarity"] {
            assert!(record[field].is_number(), "missing {field} in {line}");
        }
        assert!(record["dict_size"].as_u64().unwrap() >= 40);
    }
}

#[test]
fn evaluate_writes_a_report_and_prints_the_table() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let out_dir = tmp.path().join("run");
    lnmap_ok(&as_refs(&train_args(&fx, &out_dir, &["--max-iters", "2"])));

    let stdout = lnmap_ok(&[
        "evaluate",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--run-dir",
        &Fixture::arg(&out_dir),
        "--eval-dict",
        &Fixture::arg(&fx.eval),
    ]);
    assert!(stdout.contains("evaluated 40 source words"), "stdout: {stdout}");
    assert!(stdout.contains("p@1"), "stdout: {stdout}");

    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["model"], "latent");
    assert_eq!(report["evaluated"], 40);
    assert_eq!(report["oov"], 0);
    let precision = report["precision"].as_object().unwrap();
    let mut keys: Vec<&String> = precision.keys().collect();
    keys.sort();
    assert_eq!(keys, ["1", "10", "5"]);
    let p1 = precision["1"].as_f64().unwrap();
    let p5 = precision["5"].as_f64().unwrap();
    let p10 = precision["10"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p1));
    assert!(p1 <= p5 && p5 <= p10, "precision must grow with the cutoff");
    let predictions = report["predictions"].as_array().unwrap();
    assert_eq!(predictions.len(), 40);
    assert!(predictions[0]["top"].as_array().unwrap().len() <= 10);

    let custom = tmp.path().join("scores.json");
    lnmap_ok(&[
        "evaluate",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--run-dir",
        &Fixture::arg(&out_dir),
        "--eval-dict",
        &Fixture::arg(&fx.eval),
        "--report",
        &Fixture::arg(&custom),
    ]);
    assert_eq!(read_json(&custom), report, "the report location must not change its content");
}

#[test]
fn fully_out_of_vocabulary_dictionaries_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let oov = tmp.path().join("oov.dict");
    std::fs::write(&oov, "madeupword anotherone\nzzz qqq\n").unwrap();

    let out_dir = tmp.path().join("run");
    let mut args = train_args(&fx, &out_dir, &["--max-iters", "1"]);
    let dict = args.iter().position(|a| a == "--dict").unwrap();
    args[dict + 1] = Fixture::arg(&oov);
    let stderr = expect_exit(&as_refs(&args), 2);
    assert!(
        stderr.contains("no dictionary pairs survive"),
        "stderr: {stderr}"
    );
    assert!(!out_dir.exists());
}

#[test]
fn induce_exports_ranked_pairs_with_optional_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let out_dir = tmp.path().join("run");
    lnmap_ok(&as_refs(&train_args(&fx, &out_dir, &["--max-iters", "2"])));

    let scored = tmp.path().join("scored.dict");
    lnmap_ok(&[
        "induce",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--run-dir",
        &Fixture::arg(&out_dir),
        "--out",
        &Fixture::arg(&scored),
        "--top-n",
        "10",
        "--scores",
    ]);
    let text = std::fs::read_to_string(&scored).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty(), "no pairs were induced");
    assert!(lines.len() <= 10, "--top-n 10 must cap the output");
    let mut last = f64::INFINITY;
    for line in &lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields.len(), 3, "expected `src tgt score`: {line}");
        let score: f64 = fields[2].parse().expect("score column parses");
        assert!(score <= last, "scores must be non-increasing: {text}");
        last = score;
    }

    lnmap_ok(&[
        "induce",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--run-dir",
        &Fixture::arg(&out_dir),
    ]);
    let full = std::fs::read_to_string(out_dir.join("induced.dict")).unwrap();
    let full_lines: Vec<&str> = full.lines().collect();
    assert!(full_lines.len() >= lines.len());
    for line in &full_lines {
        assert_eq!(line.split_whitespace().count(), 2, "no score column by default: {line}");
    }
}

#[test]
fn resume_continues_a_run_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());

    let straight = tmp.path().join("straight");
    lnmap_ok(&as_refs(&train_args(&fx, &straight, &["--max-iters", "3"])));

    let resumed = tmp.path().join("resumed");
    lnmap_ok(&as_refs(&train_args(&fx, &resumed, &["--max-iters", "1"])));
    lnmap_ok(&[
        "train",
        "--resume",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--out-dir",
        &Fixture::arg(&resumed),
        "--max-iters",
        "3",
    ]);

    let file = |dir: &Path, name: &str| std::fs::read(dir.join(name)).unwrap();
    assert_eq!(
        file(&straight, "history.jsonl"),
        file(&resumed, "history.jsonl"),
        "a resumed run must append the same iteration records"
    );
    assert_eq!(
        file(&straight, "model.bin"),
        file(&resumed, "model.bin"),
        "a resumed run must end in the same model"
    );
}

#[test]
fn config_files_supply_defaults_and_flags_override_them() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let config = tmp.path().join("settings.json");
    std::fs::write(
        &config,
        "{\"ae-epochs\": 7, \"latent-dim\": 6, \"csls-k\": 3, \"k-freq\": 120}\n",
    )
    .unwrap();

    let out_dir = tmp.path().join("run");
    lnmap_ok(&[
        "train",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--dict",
        &Fixture::arg(&fx.seed),
        "--out-dir",
        &Fixture::arg(&out_dir),
        "--pretrain-inline",
        "--config",
        &Fixture::arg(&config),
        "--ae-epochs",
        "9",
        "--hidden-dim",
        "12",
        "--batch-size",
        "32",
        "--map-epochs",
        "2",
        "--max-iters",
        "1",
    ]);

    let resolved = read_json(&out_dir.join("config.json"));
    assert_eq!(resolved["ae-epochs"], 9, "a flag must beat the config file");
    assert_eq!(resolved["latent-dim"], 6, "file settings must apply when no flag is given");
    assert_eq!(resolved["csls-k"], 3);
    assert_eq!(resolved["k-freq"], 120);
    assert_eq!(resolved["hidden-dim"], 12);

    let rerun_config = tmp.path().join("rerun");
    lnmap_ok(&[
        "train",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--dict",
        &Fixture::arg(&fx.seed),
        "--out-dir",
        &Fixture::arg(&rerun_config),
        "--pretrain-inline",
        "--config",
        &Fixture::arg(&out_dir.join("config.json")),
    ]);
    assert_eq!(
        std::fs::read(out_dir.join("history.jsonl")).unwrap(),
        std::fs::read(rerun_config.join("history.jsonl")).unwrap(),
        "config.json must reproduce the run that wrote it"
    );
}

#[test]
fn ablation_covers_the_six_variants_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());
    let out_dir = tmp.path().join("ablation");
    let mut args: Vec<String> = [
        "ablate",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--dict",
        &Fixture::arg(&fx.seed),
        "--eval-dict",
        &Fixture::arg(&fx.eval),
        "--out-dir",
        &Fixture::arg(&out_dir),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(tiny_hyper_flags());
    args.extend(["--max-iters", "1"].iter().map(|s| s.to_string()));
    let stdout = lnmap_ok(&as_refs(&args));

    let record = read_json(&out_dir.join("ablation.json"));
    assert_eq!(record["schema_version"], 1);
    let rows = record["rows"].as_array().unwrap();
    let variants: Vec<&str> = rows.iter().map(|r| r["variant"].as_str().unwrap()).collect();
    assert_eq!(
        variants,
        ["full", "no-rec", "no-bt", "linear-mapper", "procrustes", "linear-ae"]
    );
    for row in rows {
        assert_eq!(row["status"], "ok", "variant failed: {row}");
        let p1 = row["p1"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p1));
    }

    let markdown = std::fs::read_to_string(out_dir.join("ablation.md")).unwrap();
    for name in &variants {
        assert!(markdown.contains(name), "ablation.md is missing {name}");
        assert!(stdout.contains(name), "stdout is missing {name}");
        assert!(
            out_dir.join(name).join("model.bin").is_file(),
            "variant {name} left no model behind"
        );
    }
}

#[test]
fn pretraining_artifacts_feed_later_training() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = make_fixture(tmp.path());

    let missing = tmp.path().join("missing");
    let mut args = train_args(&fx, &missing, &["--max-iters", "1"]);
    args.retain(|a| a != "--pretrain-inline");
    let stderr = expect_exit(&as_refs(&args), 2);
    assert!(stderr.contains("lnmap pretrain"), "stderr should point at the fix: {stderr}");
    assert!(!missing.exists());

    let pre_dir = tmp.path().join("pretrained");
    let mut args: Vec<String> = [
        "pretrain",
        "--src-emb",
        &Fixture::arg(&fx.src),
        "--tgt-emb",
        &Fixture::arg(&fx.tgt),
        "--out-dir",
        &Fixture::arg(&pre_dir),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(tiny_hyper_flags());
    lnmap_ok(&as_refs(&args));
    assert!(pre_dir.join("pretrain_src.bin").is_file());
    assert!(pre_dir.join("pretrain_tgt.bin").is_file());
    assert!(pre_dir.join("manifest.json").is_file());

    let from_artifacts = tmp.path().join("from-artifacts");
    let mut args = train_args(&fx, &from_artifacts, &["--max-iters", "2"]);
    args.retain(|a| a != "--pretrain-inline");
    args.push("--pretrain-dir".to_string());
    args.push(Fixture::arg(&pre_dir));
    lnmap_ok(&as_refs(&args));

    // Loading the saved autoencoders must land the trainer in exactly the
    // state inline pretraining produces: iteration randomness starts from
    // a fixed point, so the two paths yield identical runs.
    let inline = tmp.path().join("inline");
    lnmap_ok(&as_refs(&train_args(&fx, &inline, &["--max-iters", "2"])));
    let file = |dir: &Path, name: &str| std::fs::read(dir.join(name)).unwrap();
    assert_eq!(
        file(&inline, "history.jsonl"),
        file(&from_artifacts, "history.jsonl"),
        "artifact pretraining must match inline pretraining"
    );
    assert_eq!(file(&inline, "model.bin"), file(&from_artifacts, "model.bin"));
}
