//! End-to-end tests driving the compiled binary: schema stability,
//! determinism, paper-anchored outputs, and the exit-code contract.

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use statmem_core::inference::SWEEP_HEADER;
use statmem_core::machine::SymbolSequence;
use statmem_core::words::count_words;
use statmem_core::zoo;
use statmem_core::Alphabet;

fn statmem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_statmem"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("config written");
    name.to_string()
}

fn stdout_str(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("utf-8 output")
}

/// Parses `header\nrow...` CSV into column-keyed maps.
fn parse_csv(text: &str) -> Vec<HashMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    lines
        .map(|line| {
            header
                .iter()
                .zip(line.split(','))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn generate_writes_deterministic_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "gen.json",
        r#"{"process": {"name": "fair-coin"}, "n_values": [100], "seed": 7, "out": "seq.txt"}"#,
    );

    let first = stdout_str(&statmem(dir.path(), &["generate", "--config", &config]));
    assert!(first.contains("wrote 100 symbols"));
    let seq = std::fs::read_to_string(dir.path().join("seq.txt")).expect("sequence file");
    assert_eq!(seq.trim_end().len(), 100);
    assert!(seq.trim_end().chars().all(|c| c == '0' || c == '1'));
    assert_eq!(seq.lines().count(), 1, "single-line symbol file");

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("seq.meta.json")).unwrap())
            .expect("sidecar json");
    assert_eq!(meta["process"], "fair-coin");
    assert_eq!(meta["n"], 100);
    assert_eq!(meta["seed"], 7);

    // Regenerating produces identical bytes.
    statmem(dir.path(), &["generate", "--config", &config]);
    let again = std::fs::read_to_string(dir.path().join("seq.txt")).expect("sequence file");
    assert_eq!(seq, again);

    // A different seed produces different bytes.
    statmem(
        dir.path(),
        &["generate", "--config", &config, "--seed", "8"],
    );
    let other = std::fs::read_to_string(dir.path().join("seq.txt")).expect("sequence file");
    assert_ne!(seq, other);
}

#[test]
fn generated_word_statistics_match_the_machine() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "gen.json",
        r#"{"process": {"name": "golden-mean-3-2", "params": {"p": 0.9}},
            "n_values": [1000000], "seed": 21, "out": "gm.txt"}"#,
    );
    stdout_str(&statmem(dir.path(), &["generate", "--config", &config]));

    let text = std::fs::read_to_string(dir.path().join("gm.txt")).expect("sequence");
    let seq =
        SymbolSequence::from_text(&text, Alphabet::new(vec!['0', '1']).unwrap()).expect("parse");
    let machine = zoo::golden_mean_3_2(0.9).expect("machine");
    let exact = machine.word_distribution(4).expect("distribution");
    let counts = count_words(&seq, 4).expect("counts");
    let bound = 5.0 / (seq.len() as f64).sqrt();
    for (word, p) in exact.iter() {
        assert!(
            (counts.probability(word) - p).abs() <= bound,
            "word {word}: frequency {} vs exact {p}",
            counts.probability(word)
        );
    }
}

#[test]
fn infer_emits_sweep_schema_with_exact_references() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "infer.json",
        r#"{"process": {"name": "golden-mean-3-2", "params": {"p": 0.9}},
            "n_values": [1000000], "l_values": [2, 3, 4], "seed": 31, "r_max": 5}"#,
    );
    let out = stdout_str(&statmem(dir.path(), &["infer", "--config", &config]));
    assert!(out.starts_with(&format!("{SWEEP_HEADER}\n")));

    let rows = parse_csv(&out);
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(row["process"], "golden-mean-3-2");
        assert_eq!(row["seed"], "31");
        assert_eq!(row["undersampled_flag"], "0");
    }
    let l3 = &rows[1];
    assert_eq!(l3["L"], "3");
    let estimate: f64 = l3["cq_estimate"].parse().expect("number");
    let exact: f64 = l3["cq_exact"].parse().expect("number");
    assert!(
        (estimate - exact).abs() <= 0.05,
        "L = 3 estimate {estimate} vs exact {exact}"
    );
    assert_eq!(l3["reff"], "3");
}

#[test]
fn infer_on_bare_sequences_leaves_reference_columns_empty() {
    let dir = tempfile::tempdir().expect("tempdir");
    let gen = write_config(
        dir.path(),
        "gen.json",
        r#"{"process": {"name": "fair-coin"}, "n_values": [100000], "seed": 3, "out": "seq.txt"}"#,
    );
    stdout_str(&statmem(dir.path(), &["generate", "--config", &gen]));

    let config = write_config(
        dir.path(),
        "infer.json",
        r#"{"sequence": "seq.txt", "l_values": [1, 2, 3], "seed": 3, "out": "rows.json"}"#,
    );
    let out = stdout_str(&statmem(dir.path(), &["infer", "--config", &config]));
    for row in parse_csv(&out) {
        assert_eq!(row["process"], "sequence");
        assert_eq!(row["cq_exact"], "");
        assert_eq!(row["cmu"], "");
        assert_eq!(row["seed"], "");
        let estimate: f64 = row["cq_estimate"].parse().expect("number");
        assert!(estimate <= 0.05, "fair coin estimate {estimate}");
    }

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rows.json")).unwrap())
            .expect("json rows");
    assert_eq!(json.as_array().map(|a| a.len()), Some(3));
    assert!(json[0]["cq_exact"].is_null());
}

#[test]
fn exact_reports_anchor_values() {
    let dir = tempfile::tempdir().expect("tempdir");
    let coin = write_config(
        dir.path(),
        "coin.json",
        r#"{"process": {"name": "perturbed-coin", "params": {"q0": 0.3, "q1": 0.3}}, "seed": 1}"#,
    );
    let out = stdout_str(&statmem(dir.path(), &["exact", "--config", &coin]));
    assert!(out.contains("c_mu"));
    let cmu_line = out
        .lines()
        .find(|l| l.starts_with("c_mu"))
        .expect("c_mu line");
    let cmu: f64 = cmu_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((cmu - 1.0).abs() <= 1e-12);

    let fair = write_config(
        dir.path(),
        "fair.json",
        r#"{"process": {"name": "fair-coin"}, "seed": 1, "out": "fair.json.out"}"#,
    );
    let out = stdout_str(&statmem(
        dir.path(),
        &["exact", "--config", &fair, "--out", "report.json"],
    ));
    for key in ["c_mu", "c_q"] {
        let line = out.lines().find(|l| l.starts_with(key)).expect("line");
        let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert_eq!(value, 0.0, "{key} of the fair coin");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .expect("json report");
    assert_eq!(report["spectrum"]["rank"], 1);

    let nemo = write_config(
        dir.path(),
        "nemo.json",
        r#"{"process": {"name": "nemo", "params": {"p": 0.1, "q": 0.9}}, "seed": 1}"#,
    );
    let out = stdout_str(&statmem(dir.path(), &["exact", "--config", &nemo]));
    let cmu_line = out
        .lines()
        .find(|l| l.starts_with("c_mu"))
        .expect("c_mu line");
    let cmu: f64 = cmu_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((cmu - 1.583).abs() <= 0.001);
}

#[test]
fn emo_reports_order_or_threshold_message() {
    let dir = tempfile::tempdir().expect("tempdir");
    let gm = write_config(
        dir.path(),
        "gm.json",
        r#"{"process": {"name": "golden-mean-3-2", "params": {"p": 0.9}},
            "n_values": [1000000], "delta": 0.01, "r_max": 5, "seed": 41}"#,
    );
    let out = stdout_str(&statmem(dir.path(), &["emo", "--config", &gm]));
    assert!(out.starts_with("r,statistic,skipped_mass\n"));
    assert!(out.contains("R_eff(delta=0.01) = 3"), "output:\n{out}");

    let nemo = write_config(
        dir.path(),
        "nemo.json",
        r#"{"process": {"name": "nemo", "params": {"p": 0.1, "q": 0.9}},
            "n_values": [10000], "delta": 0.01, "r_max": 8, "seed": 41}"#,
    );
    let out = stdout_str(&statmem(dir.path(), &["emo", "--config", &nemo]));
    assert!(out.contains("threshold never crossed"), "output:\n{out}");
}

#[test]
fn sweep_has_grid_shape_and_is_deterministic() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        "sweep.json",
        r#"{"process": {"name": "perturbed-coin", "params": {"q0": 0.3, "q1": 0.6}},
            "l_values": [1, 2], "n_values": [5000, 20000], "trials": 3,
            "delta": 0.01, "r_max": 4, "seed": 99, "out": "sweep.csv"}"#,
    );
    let first = stdout_str(&statmem(dir.path(), &["sweep", "--config", &config]));
    let rows = parse_csv(&first);
    assert_eq!(rows.len(), 2 * 2 * 3);
    let file = std::fs::read_to_string(dir.path().join("sweep.csv")).expect("csv file");
    assert_eq!(first, file, "stdout mirrors the out file");

    let second = stdout_str(&statmem(dir.path(), &["sweep", "--config", &config]));
    assert_eq!(first, second, "sweeps are seed-complete");
}

#[test]
fn perturb_emits_module_schemas() {
    let dir = tempfile::tempdir().expect("tempdir");
    let weyl = write_config(
        dir.path(),
        "weyl.json",
        r#"{"process": {"name": "golden-mean-3-2", "params": {"p": 0.9}}, "seed": 5,
            "perturb": {"mode": "weyl", "l": 3, "epsilons": [1e-5, 1e-4, 1e-3]}}"#,
    );
    let out = stdout_str(&statmem(dir.path(), &["perturb", "--config", &weyl]));
    assert!(out.starts_with("epsilon,max_eig_shift,weyl_bound,entropy_shift,pass\n"));
    for row in parse_csv(&out) {
        assert_eq!(row["pass"], "1", "ε = {}", row["epsilon"]);
    }

    let scaling = write_config(
        dir.path(),
        "scaling.json",
        r#"{"process": {"name": "fair-coin"}, "l_values": [2],
            "n_values": [2000, 10000, 50000], "trials": 4, "seed": 5,
            "perturb": {"mode": "scaling"}}"#,
    );
    let out = stdout_str(&statmem(dir.path(), &["perturb", "--config", &scaling]));
    assert!(out.starts_with("L,N,trials,mean_abs_error,std_error,slope,slope_se\n"));
    assert_eq!(parse_csv(&out).len(), 3);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().expect("tempdir");
    let code = |args: &[&str]| statmem(dir.path(), args).status.code();

    // Configuration errors → 2.
    assert_eq!(code(&["exact"]), Some(2), "missing --config");
    assert_eq!(code(&["exact", "--config", "absent.json"]), Some(2));
    let noseed = write_config(
        dir.path(),
        "noseed.json",
        r#"{"process": {"name": "fair-coin"}}"#,
    );
    assert_eq!(
        code(&["exact", "--config", &noseed]),
        Some(2),
        "seed is mandatory"
    );
    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{"process": {"name": "mystery"}, "seed": 1}"#,
    );
    assert_eq!(code(&["exact", "--config", &unknown]), Some(2));
    let noparam = write_config(
        dir.path(),
        "noparam.json",
        r#"{"process": {"name": "nemo"}, "seed": 1}"#,
    );
    assert_eq!(code(&["exact", "--config", &noparam]), Some(2));
    let big_l = write_config(
        dir.path(),
        "bigl.json",
        r#"{"process": {"name": "fair-coin"}, "n_values": [100000], "l_values": [13], "seed": 1}"#,
    );
    assert_eq!(
        code(&["infer", "--config", &big_l]),
        Some(2),
        "dense-dimension cap"
    );
    let bad_delta = write_config(
        dir.path(),
        "delta.json",
        r#"{"process": {"name": "fair-coin"}, "n_values": [1000], "delta": 0, "seed": 1}"#,
    );
    assert_eq!(code(&["emo", "--config", &bad_delta]), Some(2));
    let bad_mode = write_config(
        dir.path(),
        "mode.json",
        r#"{"process": {"name": "fair-coin"}, "seed": 1, "perturb": {"mode": "sideways"}}"#,
    );
    assert_eq!(code(&["perturb", "--config", &bad_mode]), Some(2));
    let no_out = write_config(
        dir.path(),
        "noout.json",
        r#"{"process": {"name": "fair-coin"}, "n_values": [100], "seed": 1}"#,
    );
    assert_eq!(code(&["generate", "--config", &no_out]), Some(2));

    // Data errors → 3.
    let missing_seq = write_config(
        dir.path(),
        "noseq.json",
        r#"{"sequence": "absent.txt", "l_values": [2], "seed": 1}"#,
    );
    assert_eq!(code(&["infer", "--config", &missing_seq]), Some(3));
    let too_short = write_config(
        dir.path(),
        "short.json",
        r#"{"process": {"name": "fair-coin"}, "n_values": [10], "l_values": [5], "seed": 1}"#,
    );
    assert_eq!(code(&["infer", "--config", &too_short]), Some(3));
    std::fs::write(dir.path().join("bad.txt"), "0102\n").expect("file");
    let bad_symbols = write_config(
        dir.path(),
        "badsym.json",
        r#"{"sequence": "bad.txt", "l_values": [1], "seed": 1}"#,
    );
    assert_eq!(code(&["infer", "--config", &bad_symbols]), Some(3));
}
