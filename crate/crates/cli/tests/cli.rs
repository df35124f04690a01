use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const HALF_DISK: &str = r#""domain":{"kind":"disk","center":[0.0,0.0],"radius":1.0},
    "plural":{"type":"arcs","arcs":[[0.0,3.141592653589793]]}"#;

fn crosslab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crosslab"))
        .args(["--cache-dir", dir.join("cache").to_str().unwrap()])
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn measure_run_is_cached_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(
        dir.path(),
        "m.json",
        &format!(r#"{{"version":"1","kind":"measure",{HALF_DISK},"resolution":512,"points":[[0.0,0.0]]}}"#),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = crosslab(dir.path(), &["measure", &m, "--out", a.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert!(stderr(&first).contains("cache miss"));
    let r = report(&a);
    let centre = r["points"][0]["omega"].as_f64().unwrap();
    assert!((centre - 0.5).abs() < 5e-3);
    let svg = fs::read_to_string(a.join("measure.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), 9);

    let second = crosslab(dir.path(), &["run", &m, "--out", b.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0));
    assert!(stderr(&second).contains("cache hit"));
    for f in ["report.json", "measure.csv", "measure.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // No temporary files left next to the outputs.
    let mut names: Vec<String> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["measure.csv", "measure.svg", "report.json"]);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = manifest(dir.path(), "m.json", &format!(r#"{{"version":"1","kind":"measure",{HALF_DISK}}}"#));
    let o = crosslab(dir.path(), &["run", &missing, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("resolution"), "{}", stderr(&o));

    let unknown = manifest(dir.path(), "u.json", r#"{"version":"1","kind":"teleport"}"#);
    assert_eq!(crosslab(dir.path(), &["run", &unknown]).status.code(), Some(2));

    let version = manifest(
        dir.path(),
        "v.json",
        &format!(r#"{{"version":"0","kind":"measure",{HALF_DISK},"resolution":32}}"#),
    );
    assert_eq!(crosslab(dir.path(), &["run", &version]).status.code(), Some(2));

    let good = manifest(dir.path(), "g.json", &format!(r#"{{"version":"1","kind":"measure",{HALF_DISK},"resolution":32}}"#));
    let o = crosslab(dir.path(), &["basis", &good]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not match"));
}

#[test]
fn numerical_failure_exits_3_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let m = manifest(
        dir.path(),
        "b.json",
        r#"{"version":"1","kind":"basis",
            "domain":{"kind":"disk","center":[0.0,0.0],"radius":1.0},
            "measure":{"kind":"arclength","curve":{"kind":"disk","center":[0.0,0.0],"radius":1.0},"arcs":[[0.0,0.001]]},
            "degree":40}"#,
    );
    let o = crosslab(dir.path(), &["basis", &m, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let diag: Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(diag["category"], "numerical");
    assert!(!out.join("report.json").exists());
}

#[test]
fn extend_with_pole_in_envelope_flags_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let m = manifest(
        dir.path(),
        "e.json",
        r#"{"version":"1","kind":"extend",
            "cross":{"factors":[
              {"domain":{"kind":"disk","center":[0.0,0.0],"radius":1.0},
               "plural":{"type":"interior","region":{"kind":"disk","center":[0.0,0.0],"radius":0.5}},
               "method":{"method":"closed_form"}},
              {"domain":{"kind":"disk","center":[0.0,0.0],"radius":1.0},
               "plural":{"type":"arcs","arcs":[[0.0,4.71238898038469]]},
               "method":{"method":"closed_form"}}]},
            "function":{"id":"rational-pole","p":1.2},
            "degree":24,
            "grid":{"z_rings":4,"z_angles":12,"w_rings":3,"w_angles":12}}"#,
    );
    let o = crosslab(dir.path(), &["extend", &m, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert!(r["uncertified"].as_u64().unwrap() + r["bound_only"].as_u64().unwrap() > 0);
    assert!(r["series_certified"].as_u64().unwrap() > 0);
    assert!(r["max_certified_error"].as_f64().unwrap() < 1e-6);
    assert!(fs::read_to_string(out.join("field.csv")).unwrap().starts_with("z_re,z_im,w_re,w_im"));
}

#[test]
fn verify_schedule_and_slice() {
    let dir = tempfile::tempdir().unwrap();
    let cross = r#"{"factors":[
        {"domain":{"kind":"disk","center":[0.0,0.0],"radius":1.0},
         "plural":{"type":"arcs","arcs":[[0.0,4.71238898038469]]},"method":{"method":"closed_form"}},
        {"domain":{"kind":"disk","center":[0.0,0.0],"radius":1.0},
         "plural":{"type":"arcs","arcs":[[0.0,4.71238898038469]]},"method":{"method":"closed_form"}}]}"#;

    let out = dir.path().join("v");
    let m = manifest(
        dir.path(),
        "v.json",
        &format!(r#"{{"version":"1","kind":"verify","cross":{cross},"function":{{"id":"exp-sum"}},"samples":300,"seed":5}}"#),
    );
    let o = crosslab(dir.path(), &["verify", &m, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["passed"], true);
    assert_eq!(r["violations"], 0);
    let csv = fs::read_to_string(out.join("bound.csv")).unwrap();
    let res: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(res.len(), 300);
    assert!(res.windows(2).all(|w| w[0] <= w[1]));

    let out = dir.path().join("s");
    let m = manifest(
        dir.path(),
        "s.json",
        &format!(r#"{{"version":"1","kind":"schedule","cross":{cross},"points":[[[0.0,0.0],[0.0,0.3]],[[0.2,0.1],[-0.3,0.2]]],"c":1.0}}"#),
    );
    let o = crosslab(dir.path(), &["schedule", &m, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("schedule.csv")).unwrap().lines().count(), 3);

    let out = dir.path().join("sl");
    let m = manifest(
        dir.path(),
        "sl.json",
        r#"{"version":"1","kind":"slice","radius":1.0,"perturbation":0.2,"epsilon":0.1,"q":[0.02,0.0],"patch":0.1}"#,
    );
    let o = crosslab(dir.path(), &["slice", &m, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert!(r["tangent_ball_radius"].as_f64().unwrap() > 0.0);
    assert_eq!(r["tangent_balls_verified"], true);
}

#[test]
fn cache_keys_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let m512 = manifest(dir.path(), "a.json", &format!(r#"{{"version":"1","kind":"measure",{HALF_DISK},"resolution":64}}"#));
    let m256 = manifest(dir.path(), "b.json", &format!(r#"{{"version":"1","kind":"measure",{HALF_DISK},"resolution":32}}"#));
    let key = |m: &str| String::from_utf8(crosslab(dir.path(), &["cache", "key", m]).stdout).unwrap();
    let (ka, kb) = (key(&m512), key(&m256));
    assert_eq!(ka.trim().len(), 64);
    assert_ne!(ka, kb);

    let out = dir.path().join("o");
    assert_eq!(crosslab(dir.path(), &["run", &m512, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let before = fs::read(out.join("measure.csv")).unwrap();
    let o = crosslab(dir.path(), &["run", &m256, "--out", out.to_str().unwrap()]);
    assert!(stderr(&o).contains("cache miss"));
    let list = String::from_utf8(crosslab(dir.path(), &["cache", "list"]).stdout).unwrap();
    assert_eq!(list.lines().count(), 2);

    fs::write(dir.path().join("cache").join(format!("{}.json", ka.trim())), "garbage").unwrap();
    let o = crosslab(dir.path(), &["run", &m512, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("corrupt"), "{}", stderr(&o));
    assert_eq!(fs::read(out.join("measure.csv")).unwrap(), before);

    let o = crosslab(dir.path(), &["cache", "clear"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("removed 2"));
}
