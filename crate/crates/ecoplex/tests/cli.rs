use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ecoplex::io::{read_trade_csv, write_matrix_artifacts, write_trade_csv};
use ecoplex_core::specmatrix::{prune, PrunePolicy, PruneReport, SpecializationMatrix};
use ecoplex_core::synth::{fixture_f2, synthetic_trade_flows};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn ecoplex(args: &[&str]) -> Output {
    ecoplex_env(args, &[])
}

fn ecoplex_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ecoplex"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(args: &[&str]) {
    let out = ecoplex(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, col: usize) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().to_string())
        .collect()
}

fn floats(v: Vec<String>) -> Vec<f64> {
    v.into_iter().map(|s| s.parse().unwrap()).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn f2_artifacts(dir: &Path) -> SpecializationMatrix {
    let (m, report) = prune(&fixture_f2().matrix, PrunePolicy::Component).unwrap();
    write_matrix_artifacts(dir, &m, None, None, &report).unwrap();
    m
}

#[test]
fn f1_pipeline_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("f1");
    ok(&["ingest", "--input", s(&fixture("f1_trade.csv")), "--out", s(&run)]);
    ok(&["scores", "--input", s(&run), "--out", s(&run), "--verify"]);
    let scores = json(&run.join("scores.json"));
    assert!((scores["sigma2"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    assert_eq!(floats(csv_column(&run.join("eci.csv"), 1)), vec![0.5, -0.5]);
    let report = json(&run.join("verification.json"));
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(run.join("scores.config.json").exists());
}

#[test]
fn missing_input_exits_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ecoplex(&["ingest", "--input", "does/not/exist.csv", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does/not/exist.csv"));
    let out = ecoplex(&["scores", "--input", s(&tmp.path().join("nothing")), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("matrix.json"));
}

#[test]
fn strict_prune_failure_is_a_computation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let trade = tmp.path().join("t.csv");
    std::fs::write(
        &trade,
        "year,country,product,value\n1,a,x,5\n1,a,y,0\n1,b,x,0\n1,b,y,5\n",
    )
    .unwrap();
    let out = ecoplex(&["ingest", "--input", s(&trade), "--prune-policy", "strict", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    ok(&["ingest", "--input", s(&trade), "--prune-policy", "component", "--out", s(tmp.path())]);
    let prune = json(&tmp.path().join("prune.json"));
    assert_eq!(prune["dropped_countries"].as_array().unwrap().len(), 1);
}

#[test]
fn svd_and_eigen_routes_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    ok(&["ingest", "--input", s(&fixture("synthetic_trade.csv")), "--year", "2000", "--out", s(&run)]);
    let eig = tmp.path().join("eig");
    ok(&["scores", "--input", s(&run), "--out", s(&run)]);
    ok(&["scores", "--input", s(&run), "--out", s(&eig), "--route", "eigen"]);
    for (file, col) in [("eci.csv", 1), ("pci.csv", 1)] {
        let a = floats(csv_column(&run.join(file), col));
        let b = floats(csv_column(&eig.join(file), col));
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{file}: {diff}");
    }
    let cross = &json(&run.join("scores.json"))["cross_route"];
    assert!(cross["max_eci_diff"].as_f64().unwrap() < 1e-8);
}

#[test]
fn reflections_route_writes_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path();
    ok(&["ingest", "--input", s(&fixture("synthetic_trade.csv")), "--year", "2001", "--out", s(run)]);
    ok(&["scores", "--input", s(run), "--out", s(run), "--route", "mor", "--iters", "20"]);
    let summary = json(&run.join("mor.json"));
    assert_eq!(summary["steps"].as_array().unwrap().len(), 21);
    assert!(summary["final_spearman_countries"].as_f64().is_some());
    let trace = std::fs::read_to_string(run.join("mor_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 21 * (30 + 50));
}

#[test]
fn cocluster_on_planted_checkerboard() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path();
    let m = f2_artifacts(run);
    ok(&["scores", "--input", s(run), "--out", s(run)]);
    ok(&["cocluster", "--input", s(run), "--out", s(run)]);

    let (cb, pb) = fixture_f2().labels_for(&m);
    let planted: Vec<u8> = cb.into_iter().chain(pb).collect();
    let labels = csv_column(&run.join("assignment.csv"), 3);
    let agree = labels.iter().zip(&planted).filter(|(l, p)| (*l == "B") == (**p == 1)).count();
    let share = agree.max(planted.len() - agree) as f64 / planted.len() as f64;
    assert!(share >= 0.95, "{share}");

    let probs = floats(csv_column(&run.join("assignment.csv"), 2));
    for (p, l) in probs.iter().zip(&labels) {
        assert_eq!(*p > 0.5, l == "B");
    }
    let hist = std::fs::read_to_string(run.join("histogram.csv")).unwrap();
    for line in hist.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (lo, hi): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert_eq!(f[1] == "B", lo >= 0.5, "{line}");
        assert!(hi <= 0.5 || lo >= 0.5);
    }
    let total: usize = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, planted.len());

    let eci = floats(csv_column(&run.join("overlay_countries.csv"), 1));
    let mean_pci = floats(csv_column(&run.join("overlay_countries.csv"), 2));
    let diff = eci.iter().zip(&mean_pci).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-10);
    let scatter = std::fs::read_to_string(run.join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 1 + m.nnz());
    assert!(scatter.lines().nth(1).unwrap().ends_with("true") || scatter.lines().nth(1).unwrap().ends_with("false"));
}

#[test]
fn greedy_rank_column_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path();
    let m = f2_artifacts(run);
    ok(&["scores", "--input", s(run), "--out", s(run)]);
    let eci = floats(csv_column(&run.join("eci.csv"), 1));
    let lo = (0..eci.len()).min_by(|&i, &j| eci[i].total_cmp(&eci[j])).unwrap();
    let code = &m.countries()[lo];
    ok(&["simulate", "greedy", "--input", s(run), "--out", s(run), "--country", code, "--max-iter", "10"]);
    let t = json(&run.join("greedy.json"));
    let mut rank = t["initial_rank"].as_u64().unwrap();
    let steps = t["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    for step in steps {
        let r = step["rank"].as_u64().unwrap();
        assert!(r >= rank);
        rank = r;
    }
    let ranking = std::fs::read_to_string(run.join("greedy_ranking.csv")).unwrap();
    assert_eq!(ranking.lines().count(), 1 + (steps.len() + 1) * m.n_countries());
}

#[test]
fn greedy_on_saturated_target_is_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path();
    let m = SpecializationMatrix::from_rows(&[vec![1, 1, 1], vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
    write_matrix_artifacts(run, &m, None, None, &PruneReport::default()).unwrap();
    ok(&["simulate", "greedy", "--input", s(run), "--out", s(run), "--country", "c1"]);
    let t = json(&run.join("greedy.json"));
    assert_eq!(t["termination"], "saturated");
    assert!(t["steps"].as_array().unwrap().is_empty());
    let out = ecoplex(&["simulate", "greedy", "--input", s(run), "--out", s(run), "--country", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_rejects_present_pair_and_ignores_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let m = f2_artifacts(&run);
    let (c, p) = m.entries().next().unwrap();
    let cands = tmp.path().join("cands.csv");
    std::fs::write(&cands, format!("country,product\n{},{}\n", m.countries()[c], m.products()[p])).unwrap();
    let out = ecoplex(&["simulate", "sweep", "--input", s(&run), "--out", s(&run), "--candidates", s(&cands)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&m.countries()[c]) && err.contains(&m.products()[p]), "{err}");

    let target = m.countries()[0].as_str();
    let one = tmp.path().join("one");
    let many = tmp.path().join("many");
    for (dir, threads) in [(&one, "1"), (&many, "4")] {
        let out = ecoplex_env(
            &["simulate", "sweep", "--input", s(&run), "--out", s(dir), "--country", target],
            &[("ECOPLEX_THREADS", threads)],
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(one.join("sweep.csv")).unwrap();
    assert_eq!(a, std::fs::read(many.join("sweep.csv")).unwrap());
    let rows = a.iter().filter(|b| **b == b'\n').count() - 1;
    assert_eq!(rows, m.n_products() - m.row(0).len());
}

#[test]
fn bench_reports_both_routes() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["bench", "--out", s(tmp.path()), "--sizes", "20x30,30x50", "--density", "0.3"]);
    let csv = std::fs::read_to_string(tmp.path().join("bench.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,n,density,route,wall_seconds,residual"));
    let routes: Vec<String> = lines.map(|l| l.split(',').take(4).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(routes, ["20,30,0.3,svd", "20,30,0.3,eigen", "30,50,0.3,svd", "30,50,0.3,eigen"]);
    for a in json(&tmp.path().join("bench.json")).as_array().unwrap() {
        assert!(a["max_eci_diff"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn bundled_synthetic_fixture_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("t.csv");
    write_trade_csv(&path, &synthetic_trade_flows(30, 50, &[2000, 2001], 7), ',').unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(fixture("synthetic_trade.csv")).unwrap());
    assert_eq!(read_trade_csv(&path, ',').unwrap().len(), 3000);
}
