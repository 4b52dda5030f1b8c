use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn skthermo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skthermo"))
        .args(args)
        .env_remove("SK_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn phantom_then_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("joint.csv");
    let truth = dir.path().join("truth.pgm");
    let out = skthermo(&["phantom", "--kind", "beam_pillar_joint", "--rows", "40", "--cols", "48", "--seed", "3", "--out", s(&img), "--truth", s(&truth)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(truth.exists());

    let od = dir.path().join("run");
    let out = skthermo(&["pipeline", "--in", s(&img), "--out-dir", s(&od), "--line", "20,1:20,48", "--ti", "26", "--t1d", "22.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&od.join("report.json"));
    assert_eq!(report["ok"], true);
    assert_eq!(report["enhance"]["output_rows"], 80);
    assert_eq!(report["enhance"]["output_cols"], 96);
    let t_m = report["threshold"]["t_m"].as_f64().unwrap();
    assert!(18.5 < t_m && t_m < 22.5);
    assert!(report["itb"]["enhanced"]["i_tb"].as_f64().unwrap() > 1.0);

    // The saved configuration reproduces the run.
    let cfg_path = od.join("config.json");
    let mut cfg = json(&cfg_path);
    let od2 = dir.path().join("again");
    cfg["output_dir"] = serde_json::Value::String(s(&od2).into());
    let cfg2 = dir.path().join("cfg2.json");
    fs::write(&cfg2, cfg.to_string()).unwrap();
    assert_eq!(code(&skthermo(&["pipeline", "--config", s(&cfg2)])), 0);
    for f in ["enhanced.csv", "mask.pgm", "contours.csv"] {
        assert_eq!(fs::read(od.join(f)).unwrap(), fs::read(od2.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn enhance_then_segment() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("p.csv");
    assert_eq!(code(&skthermo(&["phantom", "--rows", "32", "--cols", "36", "--out", s(&img)])), 0);
    let enh = dir.path().join("e.pgm");
    let rep = dir.path().join("e.json");
    let out = skthermo(&["enhance", "--in", s(&img), "--out", s(&enh), "--kernel", "bspline:3", "--w", "4", "--scale", "2", "--report", s(&rep)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&rep);
    assert_eq!((r["rows"].as_u64(), r["cols"].as_u64()), (Some(64), Some(72)));

    let mask = dir.path().join("m.pgm");
    let thr = dir.path().join("t.json");
    let cont = dir.path().join("c.csv");
    let args = ["segment", "--in", s(&enh), "--out-mask", s(&mask), "--report", s(&thr), "--contours", s(&cont)];
    assert_eq!(code(&skthermo(&args)), 0);
    let t = json(&thr);
    assert!(t["t_p1"].as_f64() < t["t_m"].as_f64() && t["t_m"].as_f64() < t["t_p2"].as_f64());
    assert!(fs::read(&mask).unwrap().starts_with(b"P5\n72 64\n255\n"));
    assert!(fs::read_to_string(&cont).unwrap().starts_with("row,col\n"));
}

#[test]
fn itb_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("line.csv");
    fs::write(&img, "25,20,25\n25,25,25\n").unwrap();
    let raw = dir.path().join("raw.json");
    assert_eq!(code(&skthermo(&["itb", "--in", s(&img), "--line", "1,1:1,3", "--ti", "30", "--t1d", "25", "--out", s(&raw)])), 0);
    let v = json(&raw)["i_tb"].as_f64().unwrap();
    assert!((v - 4.0 / 3.0).abs() < 1e-12);

    let enh = dir.path().join("enh.json");
    let refr = dir.path().join("ref.json");
    fs::write(&enh, r#"{"i_tb": 1.2}"#).unwrap();
    fs::write(&refr, "1.0").unwrap();
    let cmp = dir.path().join("cmp.json");
    assert_eq!(code(&skthermo(&["itb-compare", "--raw", s(&raw), "--enhanced", s(&enh), "--ref", s(&refr), "--out", s(&cmp)])), 0);
    let c = json(&cmp);
    assert!((c["improvement"].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("i.csv");
    fs::write(&img, "25,20\n25,25\n").unwrap();
    // numeric failure
    let out = skthermo(&["itb", "--in", s(&img), "--line", "1,1:1,2", "--ti", "25", "--t1d", "25"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("division by zero"));
    // invalid inputs
    assert_eq!(code(&skthermo(&["itb", "--in", s(&img), "--line", "1,1:3,2", "--ti", "30", "--t1d", "25"])), 2);
    assert_eq!(code(&skthermo(&["enhance", "--in", "/no/such.csv", "--out", "/tmp/x.csv"])), 2);
    assert_eq!(code(&skthermo(&["enhance", "--in", s(&img), "--out", "x.csv", "--kernel", "gauss"])), 2);
    assert_eq!(code(&skthermo(&["phantom", "--rows", "8", "--out", s(&dir.path().join("p.csv"))])), 2);
    assert_eq!(code(&skthermo(&["bench", "--reps", "2"])), 2);
    let od = dir.path().join("failed");
    assert_eq!(code(&skthermo(&["pipeline", "--in", "/no/such.csv", "--out-dir", s(&od)])), 2);
    assert_eq!(json(&od.join("report.json"))["failed_stage"], "ingest");
}

#[test]
fn thread_cap_from_environment() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_skthermo"))
            .args(["kernel-check", "--kernel", "bspline:2"])
            .env("SK_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("0")), 2);
    assert_eq!(code(&run("many")), 2);
}

#[test]
fn kernel_check_and_bench_output() {
    let out = skthermo(&["kernel-check", "--kernel", "bspline:3", "--k-range", "20"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["axioms"]["partition_of_unity_max_deviation"].as_f64().unwrap() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let js = dir.path().join("b.json");
    let out = skthermo(&["bench", "--sizes", "2,3x4", "--w", "1,4", "--kernel", "bspline:3", "--out", s(&csv), "--json", s(&js)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1 + 2 * 2 * 2);
    assert_eq!(json(&js)["speedups"].as_array().unwrap().len(), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("3x4"));
}
