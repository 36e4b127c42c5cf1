use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn crgrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crgrf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn simulate(dir: &Path, generator: &str, n: &str) -> String {
    let path = dir.join(format!("{generator}.csv"));
    let path = path.to_str().unwrap().to_string();
    let o = crgrf(&["simulate", "--generator", generator, "--n", n, "--seed", "2", "--out", &path]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn oracle_prints_example_contrasts() {
    let o = crgrf(&["oracle", "--example1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,a1,a2"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], 0.1);
    assert!((rows[1][1] - -0.0290).abs() < 5e-4);
    assert!((rows[1][2] - -0.0547).abs() < 5e-4);
}

#[test]
fn oracle_reports_design_truths() {
    let o = crgrf(&["oracle", "--treatment", "a1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "a1");
    assert!((row[1].parse::<f64>().unwrap() - -0.1130279).abs() < 1e-6);
}

#[test]
fn rank_on_both_scales_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "registry", "3000");
    let out = dir.path().join("out");
    let o = crgrf(&[
        "rank",
        "--input",
        &data,
        "--id-col",
        "id",
        "--treatment-cols",
        "N06A,N05A,N05B,N02A,C10A,A10B",
        "--covariate-cols",
        "sex,age_group,diabetes,heart_failure",
        "--categorical-cols",
        "sex,age_group,diabetes,heart_failure",
        "--horizon",
        "5",
        "--strata",
        "treatment,age_group",
        "--trees",
        "60",
        "--out",
        out.to_str().unwrap(),
        "--dump-curves",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for scale in ["crude", "net"] {
        let csv = fs::read_to_string(out.join(format!("ranking_{scale}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("treatment,scale,ate,se,ci_low,ci_high,direction,horizon"));
        let ates: Vec<f64> = lines
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        assert_eq!(ates.len(), 6);
        assert!(ates.windows(2).all(|w| w[0] <= w[1]));
        assert!(out.join(format!("plot_{scale}.csv")).exists());
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("ranking_{scale}.json"))).unwrap()).unwrap();
        assert_eq!(json["entries"].as_array().unwrap().len(), 6);
    }
    for stem in ["crude_N06A", "net_N06A"] {
        assert!(out.join(format!("censoring_{stem}.csv")).exists());
        assert!(out.join(format!("weights_{stem}.csv")).exists());
    }
    assert!(out.join("competing_net_N06A.csv").exists());
    assert!(!out.join("competing_crude_N06A.csv").exists());
}

#[test]
fn constant_treatment_is_skipped() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.csv");
    let mut text = String::from("id,time,status,a,b,x\n");
    for i in 0..200 {
        let status = [0, 1, 2][i % 3];
        text.push_str(&format!("{i},{},{status},{},1,{}\n", 0.1 + (i % 17) as f64 * 0.1, i % 2, (i * 7) % 11));
    }
    fs::write(&path, text).unwrap();
    let out = dir.path().join("out");
    let o = crgrf(&[
        "rank",
        "--input",
        path.to_str().unwrap(),
        "--treatment-cols",
        "a,b",
        "--covariate-cols",
        "x",
        "--horizon",
        "1",
        "--scale",
        "crude",
        "--trees",
        "40",
        "--min-node-size",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("b            skipped"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("ranking_crude.json")).unwrap()).unwrap();
    assert_eq!(json["skipped"][0]["treatment"], "b");
    assert_eq!(json["entries"].as_array().unwrap().len(), 1);
}

#[test]
fn estimate_prints_json() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "design", "600");
    let o = crgrf(&[
        "estimate",
        "--input",
        &data,
        "--id-col",
        "id",
        "--treatment-cols",
        "a1,a2,a3",
        "--covariate-cols",
        "x1,x2,x3,x4,x5,x6",
        "--treatment",
        "a1",
        "--horizon",
        "0.5",
        "--scale",
        "net",
        "--trees",
        "40",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["estimate"]["scale"], "net");
    assert!(v["estimate"]["se"].as_f64().unwrap() > 0.0);
    assert_eq!(v["usable_trees"], 40);
}

#[test]
fn usage_errors_exit_with_two() {
    let o = crgrf(&["rank", "--input", "x.csv", "--treatment-cols", "a", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2), "missing --horizon");
    let o = crgrf(&["bench-coverage", "--scheme", "z", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2), "unknown scheme");
    let o = crgrf(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "design", "100");
    let o = crgrf(&[
        "estimate", "--input", &data, "--treatment-cols", "a1", "--treatment", "a9", "--horizon", "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2), "treatment not among the columns");
    assert!(String::from_utf8_lossy(&o.stderr).contains("a9"));
}

#[test]
fn bad_rows_are_reported_with_their_number() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "time,status,a\n1.0,1,0\n2.0,7,1\n").unwrap();
    let o = crgrf(&["estimate", "--input", path.to_str().unwrap(), "--treatment-cols", "a", "--treatment", "a", "--horizon", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));
}

#[test]
fn benchmarks_run_end_to_end() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cov");
    let o = crgrf(&[
        "bench-coverage", "--replicates", "2", "--n", "300", "--trees", "40", "--treatments", "a1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("coverage.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let out = dir.path().join("rank");
    let o = crgrf(&[
        "bench-ranking", "--replicates", "2", "--n", "200", "--trees", "20", "--scale", "net", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("ranking_fractions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn simulate_writes_design_and_data() {
    let dir = TempDir::new().unwrap();
    let design = dir.path().join("design.toml");
    let data = dir.path().join("d.csv");
    let o = crgrf(&[
        "simulate", "--n", "50", "--out", data.to_str().unwrap(), "--write-design", design.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("wrote 50 records"));
    let o = crgrf(&["oracle", "--design", design.to_str().unwrap(), "--treatment", "a3"]);
    assert!(stdout(&o).contains("a3,0,0"));
}
