use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hhasa_core::{Instance, InstanceData, Point};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hhasa"));
    c.env_remove("CEVRP_SEED");
    c
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Twelve customers on a ring with two stations, written as an `.evrp` file.
fn ring_file(dir: &Path) -> PathBuf {
    let customers = (0..12)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / 12.0;
            (Point::new(40.0 * a.cos(), 40.0 * a.sin()), 1 + (i % 3) as u32)
        })
        .collect();
    let inst = Instance::new(InstanceData {
        name: "ring12".into(),
        depot: Point::new(0.0, 0.0),
        customers,
        stations: vec![Point::new(25.0, 25.0), Point::new(-25.0, -25.0)],
        max_load: 8,
        max_energy: 130.0,
        consumption: 1.2,
        min_routes: None,
    })
    .unwrap();
    let path = dir.join("ring12.evrp");
    fs::write(&path, inst.to_evrp_string()).unwrap();
    path
}

fn solve(dir: &Path, inst: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("solve")
        .arg("--instance")
        .arg(inst)
        .args(["--budget-scale", "0.01", "--out"])
        .arg(dir)
        .args(extra)
        .output()
        .unwrap()
}

fn fitness(text: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix("FITNESS:"))
        .unwrap()
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn solve_writes_artifacts_and_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = ring_file(tmp.path());
    let out = tmp.path().join("run");
    let o = solve(&out, &inst, &["--selector", "ts", "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("EVALUATIONS: "));
    let f = fitness(&text);
    assert!(out.join("run.json").is_file());

    let v = bin()
        .arg("validate")
        .arg("--instance")
        .arg(&inst)
        .arg("--solution")
        .arg(out.join("solution.txt"))
        .output()
        .unwrap();
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert!((fitness(&stdout(&v)) - f).abs() <= 1e-2);
}

#[test]
fn solve_is_byte_identical_for_equal_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = ring_file(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(solve(&a, &inst, &["--seed", "3"]).status.success());
    let o = bin()
        .env("CEVRP_SEED", "3")
        .arg("solve")
        .arg("--instance")
        .arg(&inst)
        .args(["--budget-scale", "0.01", "--out"])
        .arg(&b)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(a.join("solution.txt")).unwrap(), fs::read(b.join("solution.txt")).unwrap());
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v["wall_ms"] = 0.into();
        v
    };
    assert_eq!(strip(&a.join("run.json")), strip(&b.join("run.json")));
}

#[test]
fn usage_and_input_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = ring_file(tmp.path());
    let missing = tmp.path().join("nope.evrp");
    let o = bin().arg("solve").arg("--instance").arg(&missing).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.evrp"));

    let o = bin().arg("solve").arg("--instance").arg(&inst).args(["--selector", "bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = bin().arg("solve").arg("--instance").arg(&inst).arg("--frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = bin().arg("bench").arg("--instance").arg(&inst).args(["--runs", "0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn config_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = ring_file(tmp.path());
    let cfg = tmp.path().join("solver.cfg");
    fs::write(&cfg, "# tiny budget\nmax_acc = 40\nselector = ucb1\n").unwrap();
    let out = tmp.path().join("o");
    let o = bin()
        .arg("solve")
        .arg("--instance")
        .arg(&inst)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--budget-scale", "0.5", "--selector", "eg"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(rec["selector"], "HHASA_EG");
    assert_eq!(rec["max_evaluations"], 240);
    assert!(rec["evaluations"].as_u64().unwrap() <= 240);

    fs::write(&cfg, "alpha = often\n").unwrap();
    let o = bin().arg("solve").arg("--instance").arg(&inst).arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_reports_violations_and_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = ring_file(tmp.path());
    let out = tmp.path().join("run");
    assert!(solve(&out, &inst, &["--seed", "1"]).status.success());
    let good = fs::read_to_string(out.join("solution.txt")).unwrap();

    let run_validate = |text: &str| {
        let p = tmp.path().join("candidate.txt");
        fs::write(&p, text).unwrap();
        bin()
            .arg("validate")
            .arg("--instance")
            .arg(&inst)
            .arg("--solution")
            .arg(&p)
            .output()
            .unwrap()
    };

    let f = fitness(&good);
    let route = good.lines().find(|l| !l.starts_with("FITNESS")).unwrap();
    let o = run_validate(&format!("{route}\nFITNESS: {:.6}\n", f + 5.0));
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("MISMATCH"));

    // Visit the first customer twice.
    let ids: Vec<&str> = route.split(',').collect();
    let dup = format!("{},{},{}", ids[0], ids[1], ids[1..].join(","));
    let o = run_validate(&format!("{dup}\n"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("DuplicateCustomer"));

    let no_fitness: String = good.lines().filter(|l| !l.starts_with("FITNESS")).map(|l| format!("{l}\n")).collect();
    assert_eq!(run_validate(&no_fitness).status.code(), Some(0));
}

#[test]
fn bench_writes_stats_and_records() {
    let tmp = tempfile::tempdir().unwrap();
    ring_file(tmp.path());
    let out = tmp.path().join("bench");
    let o = bin()
        .arg("bench")
        .arg("--instance")
        .arg(tmp.path())
        .args(["--runs", "3", "--selector", "ts", "ucb1", "--budget-scale", "0.01", "--jobs", "2", "--seed", "10"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let stats = fs::read_to_string(out.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 3, "{stats}");
    assert!(stats.contains("HHASA_TS") && stats.contains("HHASA_UCB1"));
    for seed in 10..13 {
        assert!(out.join(format!("runs/ring12/HHASA_TS-{seed}.json")).is_file());
    }
    for line in stats.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.last(), Some(&"3"));
    }
}

#[test]
fn rank_on_bundled_means() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().arg("rank").arg("--out").arg(tmp.path()).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let ranks = fs::read_to_string(tmp.path().join("ranks.csv")).unwrap();
    assert!(ranks.contains("1.8824"), "{ranks}");
    assert!(ranks.contains("0.015828"), "{ranks}");
    assert!(tmp.path().join("energy.csv").is_file());

    let o = bin()
        .arg("rank")
        .args(["--algorithms", "HHASA_TS,HHASA_UCB1,HHASA_EG,BACO,VNS,SA,GA,GRASP", "--subset", ">=E101", "--missing", "last"])
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let ranks = fs::read_to_string(tmp.path().join("ranks.csv")).unwrap();
    assert!(ranks.contains("HHASA_TS,1.7273"), "{ranks}");

    let o = bin().arg("rank").args(["--algorithms", "BACO,VNS,SA,GA,GRASP"]).arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1), "incomplete matrix must be rejected");

    let o = bin().arg("rank").args(["--algorithms", "HHASA_TS"]).arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plots_are_deterministic_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = ring_file(tmp.path());
    let run_dir = tmp.path().join("run");
    assert!(solve(&run_dir, &inst, &["--selector", "ucb1", "--seed", "2"]).status.success());

    let plot = |kind: &str, out: &Path| {
        bin()
            .arg("plot")
            .args(["--kind", kind])
            .arg("--instance")
            .arg(&inst)
            .arg("--record")
            .arg(run_dir.join("run.json"))
            .arg("--out")
            .arg(out)
            .output()
            .unwrap()
    };
    let (a, b) = (tmp.path().join("pa"), tmp.path().join("pb"));
    for dir in [&a, &b] {
        assert!(plot("route", dir).status.success());
        assert!(plot("trace", dir).status.success());
    }
    let svg = fs::read_to_string(a.join("route.svg")).unwrap();
    assert_eq!(svg, fs::read_to_string(b.join("route.svg")).unwrap());
    assert_eq!(fs::read(a.join("trace.svg")).unwrap(), fs::read(b.join("trace.svg")).unwrap());
    assert_eq!(svg.matches(r#"class="customer""#).count(), 12);
    assert_eq!(svg.matches(r#"class="station""#).count(), 2);
    assert_eq!(svg.matches(r#"class="depot""#).count(), 1);
    assert!(svg.contains(r#"fill="red""#));

    // The first UCB1 epoch plays every arm during warm-up.
    let rec: serde_json::Value = serde_json::from_str(&fs::read_to_string(run_dir.join("run.json")).unwrap()).unwrap();
    let first = rec["bandit_trace"][0]["selections"].as_array().unwrap();
    assert!(first.iter().all(|s| s.as_u64().unwrap() >= 1));

    let empty = tmp.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let o = bin()
        .arg("plot")
        .args(["--kind", "route"])
        .arg("--instance")
        .arg(&inst)
        .arg("--solution")
        .arg(&empty)
        .arg("--out")
        .arg(&a)
        .output()
        .unwrap();
    assert_ne!(o.status.code(), Some(0));

    let o = bin()
        .arg("plot")
        .args(["--kind", "trace", "--out"])
        .arg(&a)
        .arg("--instance")
        .arg(&inst)
        .arg("--solution")
        .arg(run_dir.join("solution.txt"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
