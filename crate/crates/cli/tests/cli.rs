use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_claimrank");
const MOCK: &str = env!("CARGO_BIN_EXE_mock-scorer");

fn claimrank(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CLAIMRANK_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const GOLD: &str = "topic_id\ttweet_id\ttweet_text\tcheck_worthiness
covid\t1\tDeaths rose by 40% in Sofia this week\t1
covid\t2\tstay safe everyone\t0
covid\t3\tThe vaccine contains microchips, says minister\t1
covid\t4\tgood morning\t0
covid\t5\tlovely weather today\t0
covid\t6\tHospitals report 300 new cases of flu\t1
covid\t7\tthanks for the support\t0
covid\t8\tno comment\t0
";

fn gold(dir: &Path) -> PathBuf {
    let path = dir.join("gold.tsv");
    fs::write(&path, GOLD).unwrap();
    path
}

#[test]
fn eval_prints_metrics_json() {
    let dir = tempfile::tempdir().unwrap();
    let gold = gold(dir.path());
    let run = dir.path().join("run.tsv");
    let lines: String = ["1", "3", "2", "6", "4", "5", "7", "8"]
        .iter()
        .enumerate()
        .map(|(i, id)| format!("covid\t{id}\t{:.6}\t{}\tr\n", 0.9 - i as f64 * 0.2, i + 1))
        .collect();
    fs::write(&run, lines).unwrap();
    let out = claimrank(&["eval", "--run", p(&run), "--gold", p(&gold), "--k-list", "1,3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // Relevant at ranks 1, 2, 4.
    let ap = (1.0 + 1.0 + 3.0 / 4.0) / 3.0;
    assert!((v["map"].as_f64().unwrap() - ap).abs() < 1e-12);
    assert_eq!(v["p_at_1"], 1.0);
    assert!(v.get("p_at_5").is_none());
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = claimrank(&["stats", "--input", "x.tsv", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());

    assert_eq!(claimrank(&[]).status.code(), Some(1));
    assert_eq!(claimrank(&["stats", "--input", "x.tsv", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(claimrank(&["--help"]).status.code(), Some(0));
}

#[test]
fn rank_with_incomplete_scores_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let gold = gold(dir.path());
    let scores = dir.path().join("missing.tsv");
    fs::write(&scores, "1\t0\t1.5\n2\t0\t-1\n").unwrap();
    let out = claimrank(&["rank", "--input", p(&gold), "--scores", p(&scores)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("IdMismatch"), "{}", stderr(&out));
}

#[test]
fn missing_input_is_data_error() {
    let out = claimrank(&["stats", "--input", "/nonexistent/data.tsv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/data.tsv"));
}

#[test]
fn ingest_checkthat_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.tsv");
    fs::write(
        &raw,
        "topic_id\ttweet_url\ttweet_id\ttweet_text\tclaim\tcheck_worthiness\n\
         covid\thttp://x/1\t1\tDeaths rose\t1\t1\n\
         covid\thttp://x/2\t2\thello there\t0\t0\n",
    )
    .unwrap();
    let canonical = dir.path().join("canonical.tsv");
    let out = claimrank(&["ingest", "--input", p(&raw), "--format", "checkthat", "--output", p(&canonical)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(&canonical).unwrap(),
        "topic_id\ttweet_id\ttweet_text\tcheck_worthiness\ncovid\t1\tDeaths rose\t1\ncovid\t2\thello there\t0\n"
    );
    let out = claimrank(&["stats", "--input", p(&canonical)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["n_samples"], 2);
    assert_eq!(v["n_positive"], 1);
    assert_eq!(v["unique_word_count"], 4);
}

#[test]
fn tokens_reports_unk_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.tsv");
    fs::write(&data, "topic_id\ttweet_id\ttweet_text\tcheck_worthiness\nt\t1\tUnaffable xyz\t1\n").unwrap();
    let vocab = dir.path().join("vocab.txt");
    fs::write(&vocab, "[UNK]\nun\n##aff\n##able\n").unwrap();
    let out = claimrank(&["tokens", "--input", p(&data), "--vocab", p(&vocab)]);
    assert_eq!(stdout(&out), "2\t2\t100.000\n");
    let out = claimrank(&["tokens", "--input", p(&data), "--vocab", p(&vocab), "--lowercase"]);
    assert_eq!(stdout(&out), "4\t1\t25.000\n");
}

#[test]
fn train_rank_eval_chain() {
    let dir = tempfile::tempdir().unwrap();
    let gold = gold(dir.path());
    let model = dir.path().join("model.json");
    let out = claimrank(&["train", "--input", p(&gold), "--seed", "7", "--output", p(&model)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("seed=7"));
    let run = dir.path().join("run.tsv");
    let out = claimrank(&["rank", "--input", p(&gold), "--model", p(&model), "--run-id", "lin", "--output", p(&run)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&run).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().all(|l| l.ends_with("\tlin") && l.split('\t').count() == 5));
    let out = claimrank(&["eval", "--run", p(&run), "--gold", p(&gold)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // Training data is its own gold here; the model separates it.
    assert_eq!(v["map"], 1.0);
}

#[test]
fn seed_falls_back_to_env_then_default() {
    let dir = tempfile::tempdir().unwrap();
    let gold = gold(dir.path());
    let model = dir.path().join("m.json");
    let out = claimrank(&["train", "--input", p(&gold), "--output", p(&model)]);
    assert!(stderr(&out).contains("seed=42"));
    let out = Command::new(BIN)
        .args(["train", "--input", p(&gold), "--output", p(&model)])
        .env("CLAIMRANK_SEED", "9")
        .output()
        .unwrap();
    assert!(stderr(&out).contains("seed=9"));
}

#[test]
fn balance_through_external_scorer() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("three_six.tsv");
    fs::write(&gold, format!("{GOLD}covid\t9\tsee you later\t0\n")).unwrap();
    let out_path = dir.path().join("balanced.tsv");
    let cmd = format!("{MOCK} constant ZZZ");
    let out = claimrank(&[
        "balance", "--input", p(&gold), "--p", "1.0", "--selection", "argmax", "--scorer-cmd", &cmd, "--output",
        p(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(stderr(&out).lines().last().unwrap()).unwrap();
    // 3 positives vs 6 negatives: 6 is not > 6, so two epochs.
    assert_eq!(report["epochs_run"], 2);
    assert_eq!(report["augmented_generated"], 6);
    let text = fs::read_to_string(&out_path).unwrap();
    // Punctuation around a replaced word stays put.
    assert!(text.contains("1#aug1\tZZZ ZZZ ZZZ ZZZ% ZZZ ZZZ ZZZ ZZZ\t1\taugmented"), "{text}");
    assert!(text.contains("3#aug2\tZZZ ZZZ ZZZ ZZZ, ZZZ ZZZ\t1\taugmented"), "{text}");

    let out = claimrank(&[
        "balance", "--input", p(&gold), "--scorer-cmd", &cmd, "--strict-exceed", "false", "--output", p(&out_path),
    ]);
    let report: serde_json::Value = serde_json::from_str(stderr(&out).lines().last().unwrap()).unwrap();
    assert_eq!(report["epochs_run"], 1);
    assert_eq!(report["final_positive"], 6);
}

#[test]
fn broken_scorer_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let gold = gold(dir.path());
    for mode in ["unsorted", "garbage"] {
        let cmd = format!("{MOCK} {mode}");
        let out = claimrank(&["augment", "--input", p(&gold), "--p", "1.0", "--scorer-cmd", &cmd]);
        assert_eq!(out.status.code(), Some(2), "{mode}: {}", stderr(&out));
        assert!(stdout(&out).is_empty());
    }
}

#[test]
fn augment_writes_only_new_rows() {
    let dir = tempfile::tempdir().unwrap();
    let gold = gold(dir.path());
    let out = claimrank(&["augment", "--input", p(&gold), "--positives-only", "--epoch", "3", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(ids, ["1#aug3", "3#aug3", "6#aug3"]);
    let again = claimrank(&["augment", "--input", p(&gold), "--positives-only", "--epoch", "3", "--seed", "1"]);
    assert_eq!(stdout(&again), text);
}

fn strip_wall_clock(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("wall_clock_ms");
            map.values_mut().for_each(strip_wall_clock);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_wall_clock),
        _ => {}
    }
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if path.is_dir() {
            out.extend(tree(&path).into_iter().map(|(n, b)| (format!("{name}/{n}"), b)));
        } else if name == "manifest.json" {
            let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
            strip_wall_clock(&mut v);
            out.push((name, serde_json::to_vec(&v).unwrap()));
        } else {
            out.push((name, fs::read(&path).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn sweep_is_reproducible_and_worker_count_free() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.tsv");
    let mut rows = String::from("topic_id\ttweet_id\ttweet_text\tcheck_worthiness\n");
    for i in 0..60 {
        let text = if i % 5 == 0 {
            format!("officials report {i} new cases and deaths")
        } else {
            format!("good morning friends number {i}")
        };
        rows.push_str(&format!("t\t{i}\t{text}\t{}\n", u8::from(i % 5 == 0)));
    }
    fs::write(&data, rows).unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        serde_json::json!({
            "dataset": data,
            "output_dir": dir.path().join("unused"),
            "p_values": [null, 0.1, 0.3],
            "arms": ["contextual", "eda", "backtranslate"],
            "translator": {"kind": "reverse"},
            "seeds": [1, 2],
        })
        .to_string(),
    )
    .unwrap();

    let mut trees = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out_dir = dir.path().join(name);
        let out = claimrank(&["sweep", "--config", p(&config), "--workers", workers, "--output-dir", p(&out_dir)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stdout(&out).contains("| map |"));
        trees.push(tree(&out_dir));
    }
    assert!(trees[0].iter().any(|(n, _)| n == "eda_p0.3_seed2/run.tsv"));
    assert!(trees[0].iter().any(|(n, _)| n == "backtranslate_seed1/train.tsv"));
    assert_eq!(trees[0], trees[1]);
    assert_eq!(trees[0], trees[2]);
}
