use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn system(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../systems")
        .join(name)
        .display()
        .to_string()
}

fn fracstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracstab"))
        .args(args)
        .env("FRACSTAB_THREADS", "2")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn out_dir() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out");
    (dir, path)
}

#[test]
fn check_exit_codes() {
    let basset = system("basset.cfg");
    for (a, c, want) in [("-3", "-4", 0), ("1", "-1", 1), ("1", "2", 2), ("5", "5", 0), ("0.5", "0.5", 1)] {
        let out = fracstab(&["check", &basset, "-p", &format!("a={a}"), "-p", "b=-2", "-p", &format!("c={c}")]);
        assert_eq!(code(&out), want, "a={a} c={c}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = fracstab(&["check", &system("commensurate.cfg"), "-p", "a=1", "-p", "b=1", "-p", "c=1"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn check_reports_verdict_json() {
    let out = fracstab(&["check", &system("basset.cfg"), "-p", "a=1", "-p", "b=-2", "-p", "c=-1"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["class"], "unstable");
    assert_eq!(v["base_order"], "0.5");
    assert!(v["margin"].as_f64().unwrap() < 0.0);
    assert_eq!(v["roots"].as_array().unwrap().len(), 2);
}

#[test]
fn error_exit_codes() {
    let missing = fracstab(&["check", "/nonexistent/system.cfg", "-p", "a=1"]);
    assert_eq!(code(&missing), 64);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "[[denominator]]\ncoeff = 1\norder = \"1/0\"\n").unwrap();
    let out = fracstab(&["check", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 65);
    assert!(String::from_utf8_lossy(&out.stderr).contains("order"));

    let basset = system("basset.cfg");
    let unbound = fracstab(&["check", &basset, "-p", "a=1", "-p", "b=-2"]);
    assert_eq!(code(&unbound), 65);
    let unknown = fracstab(&["check", &basset, "-p", "a=1", "-p", "b=-2", "-p", "c=1", "-p", "z=3"]);
    assert_eq!(code(&unknown), 65);
    let flag = fracstab(&["region", &basset, "--res", "banana"]);
    assert_eq!(code(&flag), 65);
    let coarse = fracstab(&["region", &basset, "-p", "b=-2", "--res", "8x8"]);
    assert_eq!(code(&coarse), 65);
}

#[test]
fn region_outputs_and_manifest() {
    let (_tmp, dir) = out_dir();
    let out = fracstab(&[
        "region", &system("basset.cfg"), "-p", "b=-2", "--res", "64", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "region.csv");
    assert!(csv.starts_with("p1,p2,verdict\n"));
    assert_eq!(csv.lines().count(), 64 * 64 + 1);
    let json: serde_json::Value = serde_json::from_str(&read(&dir, "region.json")).unwrap();
    assert_eq!(json["regions"].as_array().unwrap().len(), 5);
    let svg = read(&dir, "region.svg");
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.trim_end().ends_with("</svg>"));

    let manifest: serde_json::Value = serde_json::from_str(&read(&dir, "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "region");
    assert_eq!(manifest["config"]["resolution"], serde_json::json!([64, 64]));
    assert_eq!(manifest["config"]["bindings"]["b"], -2.0);
    assert_eq!(manifest["input"]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["elapsed_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn formats_select_files() {
    let (_tmp, dir) = out_dir();
    let out = fracstab(&[
        "region", &system("basset.cfg"), "-p", "b=-2", "--res", "32", "--format", "json",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(dir.join("region.json").exists());
    assert!(!dir.join("region.csv").exists());
    assert!(!dir.join("region.svg").exists());
    let bad = fracstab(&["region", &system("basset.cfg"), "-p", "b=-2", "--format", "png"]);
    assert_eq!(code(&bad), 65);
}

#[test]
fn reruns_are_byte_identical() {
    let files = ["region.csv", "region.json", "region.svg"];
    let mut runs = Vec::new();
    for threads in ["1", "4"] {
        let (tmp, dir) = out_dir();
        let out = Command::new(env!("CARGO_BIN_EXE_fracstab"))
            .args(["region", &system("commensurate.cfg"), "-p", "b=-2", "--res", "48x40"])
            .args(["--out", dir.to_str().unwrap()])
            .env("FRACSTAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        runs.push(files.map(|f| read(&dir, f)));
        drop(tmp);
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn boundaries_csv_layout() {
    let (_tmp, dir) = out_dir();
    let out = fracstab(&[
        "boundaries", &system("basset.cfg"), "-p", "b=-2", "--omega", "1e-2:1e2:200",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let csv = read(&dir, "boundaries.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("omega,p1,p2,branch_id"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 4));
    assert!(rows.iter().any(|r| r[3] == "rrb" && r[0].is_empty()));
    assert!(rows.iter().any(|r| r[3] == "irb" && r[0].is_empty()));
    let crb: Vec<f64> = rows.iter().filter(|r| r[3] == "crb-0").map(|r| r[0].parse().unwrap()).collect();
    assert!(!crb.is_empty());
    assert!(crb.windows(2).all(|w| w[0] < w[1]));
    assert!(read(&dir, "boundaries.svg").contains("</svg>"));
}

#[test]
fn degenerate_boundary_warns() {
    let (_tmp, dir) = out_dir();
    let out = fracstab(&["boundaries", &system("basset.cfg"), "-p", "b=0", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let csv = read(&dir, "boundaries.csv");
    assert!(!csv.contains("crb-"));
}

#[test]
fn parameter_sweep_layers() {
    let (_tmp, dir) = out_dir();
    let out = fracstab(&[
        "sweep", &system("basset.cfg"), "--sweep", "b:-5:-1:1", "--res", "32", "--robust",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for k in 0..5 {
        assert!(dir.join(format!("layers/layer-{k:03}.csv")).exists());
    }
    let index: serde_json::Value = serde_json::from_str(&read(&dir, "index.json")).unwrap();
    assert_eq!(index["axis"], "b");
    assert!(dir.join("stack.svg").exists());
    assert!(read(&dir, "robust.csv").starts_with("p1,p2,robust\n"));
    let manifest: serde_json::Value = serde_json::from_str(&read(&dir, "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["sweep"]["values"].as_array().unwrap().len(), 5);
}

#[test]
fn order_sweep_rejects_orders_outside_unit_interval() {
    let out = fracstab(&["sweep", &system("basset.cfg"), "-p", "b=-2", "--sweep", "alpha:0.5:1:0.25", "--res", "32"]);
    assert_eq!(code(&out), 65);
    let both = fracstab(&["sweep", &system("basset.cfg"), "-p", "b=-2", "--sweep", "b:-2:-1:1", "--res", "32"]);
    assert_eq!(code(&both), 65);
}

#[test]
fn simulate_exit_codes_and_files() {
    let basset = system("basset.cfg");
    let (_tmp, dir) = out_dir();
    let stable = fracstab(&[
        "simulate", &basset, "-p", "a=-3", "-p", "b=-2", "-p", "c=-4", "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&stable), 0, "{}", String::from_utf8_lossy(&stable.stderr));
    let csv = read(&dir, "trajectory.csv");
    assert!(csv.starts_with("t,y\n"));
    assert_eq!(csv.lines().count(), 5002);
    let summary: serde_json::Value = serde_json::from_str(&read(&dir, "simulation.json")).unwrap();
    assert_eq!(summary["verdict"], "bounded");

    let (_tmp2, dir2) = out_dir();
    let unstable = fracstab(&[
        "simulate", &basset, "-p", "a=1", "-p", "b=-2", "-p", "c=-1", "--out", dir2.to_str().unwrap(),
    ]);
    assert_eq!(code(&unstable), 1);

    let bad = fracstab(&["simulate", &basset, "-p", "a=1", "-p", "b=-2", "-p", "c=-1", "--step", "10"]);
    assert_eq!(code(&bad), 65);
}
