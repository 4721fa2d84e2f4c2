use std::process::Command;

use serde_json::Value;

fn platoon(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_platoon"))
        .args(args)
        .env_remove("PLATOON_DP_SEED")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn solve_poisson_reports_the_root() {
    let (code, out, _) = platoon(&["solve", "--solver", "poisson", "--arrivals", "exponential:0.02"]);
    assert_eq!(code, 0);
    let r = &json(&out)["result"];
    for key in ["theta", "c", "Z", "residual_norm", "wall_time_s", "iterations"] {
        assert!(r[key].is_number(), "missing {key}");
    }
}

#[test]
fn ra_and_bvi_agree_through_the_cli() {
    let run = |solver: &str| {
        let (code, out, _) = platoon(&["solve", "--solver", solver, "--arrivals", "constant:10", "--reduced"]);
        assert_eq!(code, 0);
        json(&out)["result"].clone()
    };
    let (ra, bvi) = (run("ra"), run("bvi"));
    assert!((ra["theta"].as_f64().unwrap() - bvi["theta"].as_f64().unwrap()).abs() <= 1.0);
    assert!((ra["c"].as_f64().unwrap() - bvi["c"].as_f64().unwrap()).abs() <= 1.0);
}

#[test]
fn discrete_bvi_with_values() {
    let (code, out, _) = platoon(&["solve", "--solver", "bvi", "--arrivals", "discrete:\"15:0.4,8:0.6\"", "--reduced", "--values"]);
    assert_eq!(code, 0);
    let r = &json(&out)["result"];
    assert_eq!(r["values"].as_array().unwrap().len(), 201);
    assert_eq!(r["grid"]["step"], 1.0);
}

#[test]
fn simulate_is_deterministic_and_emits_vehicles() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("veh.csv");
    let schedule = concat!(env!("CARGO_MANIFEST_DIR"), "/data/table1.csv");
    let args = ["simulate", "--schedule", schedule, "--scale", "0.03", "--policy", "rts", "--seed", "7", "--duration", "21600"];
    let (code, a, _) = platoon(&args);
    assert_eq!(code, 0);
    let (_, b, _) = platoon(&args);
    assert_eq!(a, b);

    let mut with_csv = args.to_vec();
    with_csv.extend(["--emit-vehicles", csv_path.to_str().unwrap()]);
    let (_, c, _) = platoon(&with_csv);
    let n = json(&c)["result"]["n"].as_u64().unwrap();
    let rows = csv::Reader::from_path(&csv_path).unwrap().records().count();
    assert_eq!(rows as u64, n);
    assert_eq!(json(&a)["seed"], 7);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_platoon"))
        .args(["simulate", "--policy", "baseline", "--duration", "3600"])
        .env("PLATOON_DP_SEED", "31")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&String::from_utf8(out.stdout).unwrap())["seed"], 31);
}

#[test]
fn paired_seed_ordering() {
    let ac = |policy: &str| {
        let (code, out, _) = platoon(&["simulate", "--avg-flow", "173", "--policy", policy, "--seed", "3"]);
        assert_eq!(code, 0);
        json(&out)["result"]["ac"].as_f64().unwrap()
    };
    assert!(ac("rts") < ac("baseline"));
}

#[test]
fn compare_writes_rfc4180_csv() {
    let (code, out, err) = platoon(&[
        "compare", "--scales", "0.01,0.02,0.03,0.04", "--policies", "baseline,policy-b,rts", "--seeds", "1", "--duration", "14400",
    ]);
    assert_eq!(code, 0, "{err}");
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["policy", "avg_flow_vph", "AC", "avg_fuel_L", "avg_time_s"]);
    assert_eq!(rdr.records().count(), 12);
    let meta = json(err.lines().last().unwrap());
    assert_eq!(meta["command"], "compare");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn sweep_rows_and_unknown_parameter() {
    let (code, out, _) = platoon(&["sweep", "--param", "gamma", "--values", "0.7", "--seeds", "1", "--duration", "7200"]);
    assert_eq!(code, 0);
    assert_eq!(csv::Reader::from_reader(out.as_bytes()).records().count(), 1);
    let (code, _, err) = platoon(&["sweep", "--param", "v", "--values", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown sweep parameter"));
}

#[test]
fn bench_skips_poisson_for_constant_headways() {
    let (code, out, _) = platoon(&["bench", "--arrivals", "constant:10", "--arrivals", "exponential:0.02", "--repeats", "1"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let entries = v["result"].as_array().unwrap();
    assert!(entries[0]["solvers"]["poisson"]["skipped"].is_string());
    assert!(entries[1]["solvers"]["poisson"]["wall_time_s"].is_number());
    assert_eq!(v["settings"]["grid"]["step"], 1.0);
}

#[test]
fn numerical_failure_exits_two() {
    let (code, out, _) = platoon(&["solve", "--solver", "bvi", "--arrivals", "constant:10", "--reduced", "--epsilon", "1e-12", "--max-sweeps", "2"]);
    assert_eq!(code, 2, "{out}");
    assert_eq!(json(&out)["kind"], "numerical");
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"gamma": 1.5}"#).unwrap();
    let (code, _, _) = platoon(&["solve", "--solver", "poisson", "--arrivals", "exponential:0.02", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(platoon(&["solve", "--arrivals", "constant:10"]).0, 1);
}
