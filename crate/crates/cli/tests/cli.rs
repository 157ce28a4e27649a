use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn streamcpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamcpd"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = streamcpd(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn events(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn locations(evs: &[Value], key: &str) -> Vec<u64> {
    evs.iter()
        .filter(|e| e["key"] == key)
        .map(|e| e["location"].as_u64().unwrap())
        .collect()
}

fn gen_switch(dir: &TempDir, name: &str, n: usize, period: usize, seed: u64) -> PathBuf {
    let out = dir.path().join(name);
    let (n, period, seed) = (n.to_string(), period.to_string(), seed.to_string());
    ok(&[
        "gen",
        "--kind",
        "normal-switch",
        "--n",
        &n,
        "--period",
        &period,
        "--seed",
        &seed,
        "--out",
        p(&out),
    ]);
    out
}

fn truth(csv: &Path) -> Vec<u64> {
    let mut t = csv.as_os_str().to_owned();
    t.push(".truth");
    fs::read_to_string(PathBuf::from(t))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect()
}

fn values(csv: &Path) -> Vec<String> {
    fs::read_to_string(csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn gen_is_deterministic_and_writes_truth() {
    let dir = TempDir::new().unwrap();
    let a = gen_switch(&dir, "a.csv", 100_000, 10_000, 42);
    let b = gen_switch(&dir, "b.csv", 100_000, 10_000, 42);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(values(&a).len(), 100_000);
    assert_eq!(truth(&a), (1..10).map(|i| i * 10_000).collect::<Vec<u64>>());

    let cov = dir.path().join("cov.csv");
    ok(&["gen", "--kind", "cov-drift", "--seed", "7", "--out", p(&cov)]);
    let text = fs::read_to_string(&cov).unwrap();
    assert!(text.starts_with("x0,x1\n"));
    assert_eq!(text.lines().count(), 2001);
    assert_eq!(truth(&cov), [1000]);
}

#[test]
fn detect_recovers_generated_changepoints() {
    let dir = TempDir::new().unwrap();
    let csv = gen_switch(&dir, "s.csv", 30_000, 3_000, 42);
    let (ev, summary) = (dir.path().join("ev.ndjson"), dir.path().join("summary.json"));
    let mut t = csv.as_os_str().to_owned();
    t.push(".truth");
    let t = PathBuf::from(t);
    ok(&[
        "detect",
        "-i",
        p(&csv),
        "--events",
        p(&ev),
        "--summary",
        p(&summary),
        "--truth",
        p(&t),
    ]);
    let evs = events(&ev);
    assert_eq!(locations(&evs, ""), truth(&csv));
    for e in &evs {
        assert!(e["t"].as_u64().unwrap() > e["location"].as_u64().unwrap());
        assert!(e["map_run_length"].is_u64() && e["map_posterior"].is_f64());
    }
    let s: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["points"], 30_000);
    assert_eq!(s["score"]["loss"], 0);
    assert_eq!(s["keys"][0]["events"], 9);
    assert!(s["points_per_s"].as_f64().unwrap() > 0.0);
}

fn keyed_csv(rows: &[(&str, &String)]) -> String {
    let mut out = String::from("host,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

#[test]
fn keys_are_isolated_from_interleaving_and_worker_count() {
    let dir = TempDir::new().unwrap();
    let a = values(&gen_switch(&dir, "a.csv", 8_000, 2_000, 1));
    let b = values(&gen_switch(&dir, "b.csv", 8_000, 1_000, 2));
    let alternating: Vec<(&str, &String)> = a.iter().zip(&b).flat_map(|(x, y)| [("a", x), ("b", y)]).collect();
    let blocks: Vec<(&str, &String)> = b.iter().map(|y| ("b", y)).chain(a.iter().map(|x| ("a", x))).collect();
    let single_a: Vec<(&str, &String)> = a.iter().map(|x| ("a", x)).collect();

    let mut results = Vec::new();
    for (name, rows, workers) in [
        ("alt", &alternating, "1"),
        ("alt4", &alternating, "4"),
        ("blocks", &blocks, "3"),
        ("solo", &single_a, "1"),
    ] {
        let input = dir.path().join(format!("{name}.csv"));
        fs::write(&input, keyed_csv(rows)).unwrap();
        let ev = dir.path().join(format!("{name}.ndjson"));
        ok(&[
            "detect",
            "-i",
            p(&input),
            "--key-column",
            "host",
            "--workers",
            workers,
            "--events",
            p(&ev),
        ]);
        let evs = events(&ev);
        results.push((locations(&evs, "a"), locations(&evs, "b")));
    }
    assert_eq!(results[0].0, (1..4).map(|i| i * 2000).collect::<Vec<u64>>());
    assert_eq!(results[0].1, (1..8).map(|i| i * 1000).collect::<Vec<u64>>());
    for r in &results[1..3] {
        assert_eq!(r, &results[0]);
    }
    assert_eq!(results[3].0, results[0].0);
}

#[test]
fn empty_input_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("empty.csv");
    fs::write(&input, "").unwrap();
    let (ev, summary) = (dir.path().join("ev.ndjson"), dir.path().join("s.json"));
    ok(&["detect", "-i", p(&input), "--events", p(&ev), "--summary", p(&summary)]);
    assert_eq!(fs::read_to_string(&ev).unwrap(), "");
    let s: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!((s["points"].as_u64(), s["events"].as_u64()), (Some(0), Some(0)));
    assert_eq!(s["keys"].as_array().unwrap().len(), 0);
}

#[test]
fn exit_codes_separate_config_and_runtime_errors() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("x.csv");
    fs::write(&input, "value\n1\n2\n").unwrap();
    let code = |args: &[&str]| streamcpd(args).status.code();
    assert_eq!(code(&["detect", "-i", p(&input), "--key-column", "ip"]), Some(2));
    assert_eq!(code(&["detect", "-i", p(&input), "--budget", "0"]), Some(2));
    assert_eq!(code(&["detect", "-i", p(&input), "--lambda", "abc"]), Some(2));
    assert_eq!(
        code(&["detect", "-i", p(&input), "--autotune", "false", "--alpha", "-1"]),
        Some(2)
    );
    assert_eq!(code(&["gen", "--kind", "nope", "--out", p(&input)]), Some(2));
    assert_eq!(code(&["detect", "-i", p(&dir.path().join("missing.csv"))]), Some(1));
    assert_eq!(
        code(&["detect", "-i", p(&input), "--summary", p(&dir.path().join("s.json"))]),
        Some(0)
    );
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("k.csv");
    fs::write(&input, "ip,v\na,1\nb,2\n").unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "key_column = missing\nbudget = 10\n").unwrap();
    assert_eq!(
        streamcpd(&["detect", "-i", p(&input), "--config", p(&cfg)])
            .status
            .code(),
        Some(2)
    );
    let summary = dir.path().join("s.json");
    ok(&[
        "detect",
        "-i",
        p(&input),
        "--config",
        p(&cfg),
        "--key-column",
        "ip",
        "--summary",
        p(&summary),
    ]);
    let s: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["keys"].as_array().unwrap().len(), 2);
    fs::write(&cfg, "no_such_setting = 1\n").unwrap();
    assert_eq!(
        streamcpd(&["detect", "-i", p(&input), "--config", p(&cfg)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn malformed_rows_are_counted_and_skipped() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("m.csv");
    fs::write(&input, "v\n1\nx\n2\n\n3,4\n5\n").unwrap();
    let summary = dir.path().join("s.json");
    let out = ok(&["detect", "-i", p(&input), "--summary", p(&summary)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let s: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!((s["points"].as_u64(), s["malformed"].as_u64()), (Some(3), Some(2)));
}

#[test]
fn ndjson_input_with_keys() {
    let dir = TempDir::new().unwrap();
    let a = values(&gen_switch(&dir, "a.csv", 6_000, 2_000, 5));
    let mut text = String::new();
    for (i, v) in a.iter().enumerate() {
        text.push_str(&format!("{{\"src\":\"10.0.0.{}\",\"bytes\":{v}}}\n", i % 2));
    }
    let input = dir.path().join("in.ndjson");
    fs::write(&input, text).unwrap();
    let ev = dir.path().join("ev.ndjson");
    ok(&["detect", "-i", p(&input), "--key-column", "src", "--events", p(&ev)]);
    let evs = events(&ev);
    // Each key sees every other point, so regimes of 1000 points.
    assert_eq!(locations(&evs, "10.0.0.0"), [1000, 2000]);
    assert_eq!(locations(&evs, "10.0.0.1"), [1000, 2000]);
}

#[test]
fn snapshots_resume_where_the_run_stopped() {
    let dir = TempDir::new().unwrap();
    let rows = values(&gen_switch(&dir, "s.csv", 12_000, 2_000, 9));
    let write = |name: &str, rows: &[String]| {
        let path = dir.path().join(name);
        fs::write(&path, format!("x\n{}\n", rows.join("\n"))).unwrap();
        path
    };
    let (full, first, second) = (
        write("full.csv", &rows),
        write("h1.csv", &rows[..5_500]),
        write("h2.csv", &rows[5_500..]),
    );
    let snaps = dir.path().join("snaps");
    let (e_full, e1, e2) = (
        dir.path().join("f.ndjson"),
        dir.path().join("1.ndjson"),
        dir.path().join("2.ndjson"),
    );
    ok(&["detect", "-i", p(&full), "--events", p(&e_full)]);
    ok(&[
        "detect",
        "-i",
        p(&first),
        "--events",
        p(&e1),
        "--snapshot-out",
        p(&snaps),
    ]);
    assert!(snaps.join("key-.json").exists());
    ok(&[
        "detect",
        "-i",
        p(&second),
        "--events",
        p(&e2),
        "--snapshot-in",
        p(&snaps),
    ]);
    let mut resumed = events(&e1);
    resumed.extend(events(&e2));
    assert_eq!(resumed, events(&e_full));
    assert_eq!(locations(&resumed, "").len(), 5);
}

#[test]
fn plot_data_has_one_row_per_scored_point() {
    let dir = TempDir::new().unwrap();
    let csv = gen_switch(&dir, "s.csv", 2_000, 1_000, 3);
    let plot = dir.path().join("plot.csv");
    ok(&[
        "detect",
        "-i",
        p(&csv),
        "--warmup",
        "30",
        "--plot-data",
        p(&plot),
        "--events",
        p(&dir.path().join("e")),
    ]);
    let text = fs::read_to_string(&plot).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("key,t,map_run_length,map_posterior,marginal_predictive")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2_000 - 30);
    assert!(rows[0].starts_with(",30,0,1,"));
    assert_eq!(
        streamcpd(&["detect", "-i", p(&csv), "--algorithm", "cusum", "--plot-data", p(&plot)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn baselines_emit_null_run_lengths() {
    let dir = TempDir::new().unwrap();
    let csv = gen_switch(&dir, "s.csv", 6_000, 2_000, 4);
    for algo in ["cusum", "ewma"] {
        let ev = dir.path().join(format!("{algo}.ndjson"));
        ok(&["detect", "-i", p(&csv), "--algorithm", algo, "--events", p(&ev)]);
        let evs = events(&ev);
        assert!(!evs.is_empty());
        for e in &evs {
            assert!(e["map_run_length"].is_null() && e["map_posterior"].is_null());
            assert_eq!(e["t"], e["location"]);
        }
    }
    let cov = dir.path().join("cov.csv");
    ok(&["gen", "--kind", "cov-drift", "--out", p(&cov)]);
    assert_eq!(
        streamcpd(&["detect", "-i", p(&cov), "--algorithm", "cusum"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bench_writes_the_requested_grid() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    ok(&[
        "bench",
        "--n",
        "20000",
        "--only",
        "budget,warmup,outliers",
        "--out",
        p(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("group,dataset,algorithm,setting,loss,loss_literal,j,k,runtime_s,points_per_s")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4 + 4 + 8);
    for r in rows.iter().filter(|r| r[0] == "budget" || r[0] == "warmup") {
        assert_eq!((r[4], r[5]), ("0", "0"), "{r:?}");
    }
    for r in rows.iter().filter(|r| r[0] == "outliers" && r[2] == "cusum") {
        assert_ne!(r[4], "0");
    }
}
