//! End-to-end tests of the `triad` binary: fixture outputs, exit codes,
//! atomicity, and manifest-level reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn triad() -> Command {
    Command::new(env!("CARGO_BIN_EXE_triad"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const EVENTS_HEADER: &str = "kind,src,dst,timestamp,product_id,category_id,price,quantity\n";

/// trade B1->S1 day 1, message B1->B2 day 2, trade B2->S1 day 3.
fn three_node_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let events = write(
        dir,
        "events.csv",
        &format!(
            "{EVENTS_HEADER}trade,1,2,86400,p1,3,9.5,1\n\
             message,1,3,172800,,,,\n\
             trade,3,2,259200,p1,3,9.5,1\n"
        ),
    );
    let contacts = write(dir, "contacts.csv", "u,v\n");
    (events, contacts)
}

#[test]
fn census_fixture_matches_hand_example() {
    let dir = tempfile::tempdir().unwrap();
    let (events, contacts) = three_node_fixture(dir.path());
    let out = dir.path().join("out");
    let status = triad()
        .args(["census", "--events"])
        .arg(&events)
        .arg("--contacts")
        .arg(&contacts)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let csv = fs::read_to_string(out.join("census.csv")).unwrap();
    let rows: Vec<Vec<String>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 16);

    // Config 7 = (trade_from_x, msg_from_x): middle B1, closed by t_i.
    let row7 = &rows[7];
    assert_eq!(row7[1], "trade_from_x");
    assert_eq!(row7[2], "msg_from_x");
    assert_eq!(row7[3], "1"); // instances
    assert_eq!(row7[4], "1"); // unique_x
    assert_eq!(row7[5], "100"); // p_close_x100
    assert_eq!(row7[6], "1"); // p_trade_given_close
    assert_eq!(row7[10], "buyer");

    // Config 0 = (trade_to_x, trade_to_x): middle S1, unclosed.
    assert_eq!(rows[0][3], "1");
    assert_eq!(rows[0][5], "0");
    assert_eq!(rows[0][10], "seller");
    // Config 9 = (msg_to_x, trade_from_x): middle B2, unclosed.
    assert_eq!(rows[9][3], "1");
    assert_eq!(rows[9][5], "0");

    // Everything else is empty.
    let total: u64 = rows.iter().map(|r| r[3].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 3);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn stats_on_empty_inputs_is_zeroed() {
    let dir = tempfile::tempdir().unwrap();
    let events = write(dir.path(), "events.csv", EVENTS_HEADER);
    let contacts = write(dir.path(), "contacts.csv", "u,v\n");
    let out = dir.path().join("out");
    let status = triad()
        .args(["stats", "--events"])
        .arg(&events)
        .arg("--contacts")
        .arg(&contacts)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "stats on empty inputs should exit 0");
    let csv = fs::read_to_string(out.join("stats.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(&fields[1..], &["0", "0", "0", "0"], "row {line:?}");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let output = triad().args(["census", "--no-such-flag"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_input_exits_one_and_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = triad()
        .args([
            "census",
            "--events",
            "/nonexistent/events.csv",
            "--contacts",
        ])
        .arg("/nonexistent/contacts.csv")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let leftovers: Vec<_> = fs::read_dir(&out).unwrap().collect();
    assert!(
        leftovers.is_empty(),
        "partial outputs left behind: {leftovers:?}"
    );
}

#[test]
fn malformed_row_reports_line_and_stages_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let events = write(
        dir.path(),
        "events.csv",
        &format!("{EVENTS_HEADER}trade,1,2,notatime,p1,3,9.5,1\n"),
    );
    let contacts = write(dir.path(), "contacts.csv", "u,v\n");
    let out = dir.path().join("out");
    let output = triad()
        .args(["stats", "--events"])
        .arg(&events)
        .arg("--contacts")
        .arg(&contacts)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(":2:"), "line number missing from: {stderr}");
    assert!(fs::read_dir(&out).unwrap().next().is_none());
}

fn syn_config(dir: &Path) -> PathBuf {
    write(
        dir,
        "syn.cfg",
        "n_buyers = 120\n\
         n_sellers = 15\n\
         p_plant = 0.08\n\
         n_clusters = 30\n\
         listings_per_cluster = 4\n\
         n_choice_decisions = 120\n\
         choice_weights = 0,0,0,0,0,0,0,1.6,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n",
    )
}

#[test]
fn syngen_is_byte_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = syn_config(dir.path());
    for (name, seed) in [("a", 7u64), ("b", 7), ("c", 8)] {
        let status = triad()
            .args(["syngen", "--config"])
            .arg(&cfg)
            .args(["--seed", &seed.to_string(), "--out"])
            .arg(dir.path().join(name))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let read = |name: &str, file: &str| fs::read(dir.path().join(name).join(file)).unwrap();
    for file in [
        "events.csv",
        "contacts.csv",
        "clusters.csv",
        "ratings.csv",
        "choice_clusters.csv",
        "truth.json",
    ] {
        assert_eq!(
            read("a", file),
            read("b", file),
            "{file} differs for same seed"
        );
    }
    assert_ne!(read("a", "events.csv"), read("c", "events.csv"));
}

#[test]
fn manifest_reproducibility_and_report_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = syn_config(dir.path());
    let data = dir.path().join("data");
    assert!(triad()
        .args(["syngen", "--config"])
        .arg(&cfg)
        .args(["--seed", "3", "--out"])
        .arg(&data)
        .status()
        .unwrap()
        .success());

    // Two identical census runs: identical output digests in the manifests.
    let manifest_outputs = |out: &Path| -> serde_json::Value {
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        manifest["outputs"].clone()
    };
    let mut digests = Vec::new();
    for name in ["census1", "census2"] {
        let out = dir.path().join(name);
        assert!(triad()
            .args(["census", "--events"])
            .arg(data.join("events.csv"))
            .arg("--contacts")
            .arg(data.join("contacts.csv"))
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap()
            .success());
        digests.push(manifest_outputs(&out));
    }
    assert_eq!(
        digests[0], digests[1],
        "identical runs must reproduce identical outputs"
    );

    // stats + bba land next to census.csv, then report collates the bundle.
    let collect = dir.path().join("collect");
    fs::create_dir_all(&collect).unwrap();
    fs::copy(
        dir.path().join("census1/census.csv"),
        collect.join("census.csv"),
    )
    .unwrap();
    let stats_out = dir.path().join("stats");
    assert!(triad()
        .args(["stats", "--events"])
        .arg(data.join("events.csv"))
        .arg("--contacts")
        .arg(data.join("contacts.csv"))
        .arg("--out")
        .arg(&stats_out)
        .status()
        .unwrap()
        .success());
    fs::copy(stats_out.join("stats.csv"), collect.join("stats.csv")).unwrap();

    let bundle = dir.path().join("bundle");
    assert!(triad()
        .args(["report", "--input"])
        .arg(&collect)
        .arg("--out")
        .arg(&bundle)
        .status()
        .unwrap()
        .success());
    assert!(bundle.join("network_stats.csv").exists());
    assert!(bundle.join("directed_configurations.csv").exists());
    assert!(bundle.join("checksums.json").exists());
    let checksums: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(bundle.join("checksums.json")).unwrap()).unwrap();
    assert!(checksums["network_stats.csv"].is_string());
}

#[test]
fn rewire_emits_loadable_files_preserving_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = syn_config(dir.path());
    let data = dir.path().join("data");
    assert!(triad()
        .args(["syngen", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--out"])
        .arg(&data)
        .status()
        .unwrap()
        .success());
    let out = dir.path().join("rewired");
    assert!(triad()
        .args(["infopass", "rewire", "--events"])
        .arg(data.join("events.csv"))
        .arg("--contacts")
        .arg(data.join("contacts.csv"))
        .args(["--seed", "9", "--out"])
        .arg(&out)
        .status()
        .unwrap()
        .success());

    let window = (0, 60 * 86_400);
    let original =
        triad_core::io::load_dataset(&data.join("events.csv"), &data.join("contacts.csv"), window)
            .unwrap();
    let rewired =
        triad_core::io::load_dataset(&out.join("events.csv"), &out.join("contacts.csv"), window)
            .unwrap();
    for layer in [
        triad_core::Layer::Trade,
        triad_core::Layer::Message,
        triad_core::Layer::Contact,
    ] {
        assert_eq!(
            original.degree_sequences(layer),
            rewired.degree_sequences(layer)
        );
    }
}

#[test]
fn choice_and_trust_emit_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = syn_config(dir.path());
    let data = dir.path().join("data");
    assert!(triad()
        .args(["syngen", "--config"])
        .arg(&cfg)
        .args(["--seed", "11", "--out"])
        .arg(&data)
        .status()
        .unwrap()
        .success());

    let trust_out = dir.path().join("trust");
    assert!(triad()
        .args(["trust", "--clusters"])
        .arg(data.join("clusters.csv"))
        .arg("--ratings")
        .arg(data.join("ratings.csv"))
        .arg("--out")
        .arg(&trust_out)
        .status()
        .unwrap()
        .success());
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(trust_out.join("fit.json")).unwrap()).unwrap();
    for key in ["a", "b", "c", "r_squared", "zero_crossing", "elasticity"] {
        assert!(
            !fit[key].is_null() || key == "zero_crossing",
            "missing {key}"
        );
    }
    assert!(fs::read_to_string(trust_out.join("deviations.csv"))
        .unwrap()
        .starts_with("scope,rating,deviation,weight"));

    let choice_out = dir.path().join("choice");
    assert!(triad()
        .args(["choice", "--data"])
        .arg(data.join("choice_clusters.csv"))
        .arg("--events")
        .arg(data.join("events.csv"))
        .arg("--contacts")
        .arg(data.join("contacts.csv"))
        .args(["--subset", "all", "--split-seed", "2", "--out"])
        .arg(&choice_out)
        .status()
        .unwrap()
        .success());
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(choice_out.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["subset"], "all");
    assert!(metrics["p_at_1"].as_f64().unwrap() >= 0.0);
    assert!(metrics["baselines"]["random"]["p_at_1"].is_number());
    assert!(metrics["per_k"].is_object());
    let features = fs::read_to_string(choice_out.join("features.csv")).unwrap();
    assert!(features.starts_with(
        "decision_id,cluster_id,buyer,purchase_date,candidate_seller,is_true,frac_price_rank"
    ));

    // Per-category training aggregates into the same metrics schema.
    let per_cat_out = dir.path().join("choice_per_cat");
    assert!(triad()
        .args(["choice", "--data"])
        .arg(data.join("choice_clusters.csv"))
        .arg("--events")
        .arg(data.join("events.csv"))
        .arg("--contacts")
        .arg(data.join("contacts.csv"))
        .args(["--subset", "all", "--per-category", "--out"])
        .arg(&per_cat_out)
        .status()
        .unwrap()
        .success());
    let per_cat: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(per_cat_out.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(per_cat["per_category"], true);
    assert!(per_cat["p_at_1"].as_f64().unwrap() >= 0.0);

    // Unknown subset name is a validation error.
    let output = triad()
        .args(["choice", "--data"])
        .arg(data.join("choice_clusters.csv"))
        .arg("--events")
        .arg(data.join("events.csv"))
        .arg("--contacts")
        .arg(data.join("contacts.csv"))
        .args(["--subset", "bogus", "--out"])
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn census_is_identical_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = syn_config(dir.path());
    let data = dir.path().join("data");
    assert!(triad()
        .args(["syngen", "--config"])
        .arg(&cfg)
        .args(["--seed", "13", "--out"])
        .arg(&data)
        .status()
        .unwrap()
        .success());
    let mut outputs = Vec::new();
    for (name, threads) in [("t1", "1"), ("t4", "4")] {
        let out = dir.path().join(name);
        let mut cmd = triad();
        cmd.args(["census", "--threads", threads, "--events"])
            .arg(data.join("events.csv"))
            .arg("--contacts")
            .arg(data.join("contacts.csv"))
            .arg("--out")
            .arg(&out);
        // Exercise the logging path at the same time.
        cmd.env("TRIAD_LOG", "debug");
        assert!(cmd.status().unwrap().success());
        outputs.push(fs::read(out.join("census.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "census.csv differs across --threads");
}
