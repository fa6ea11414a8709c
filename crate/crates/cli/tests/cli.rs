use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn wellposed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wellposed"))
        .args(args)
        .output()
        .expect("run wellposed")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

fn write_sys(dir: &tempfile::TempDir, body: &str) -> String {
    let p = dir.path().join("system.sys");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn analyze_reports_counts_and_schema() {
    let v = json(&wellposed(&["analyze", &path("l2.sys")]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["counts"]["second_class"], 2);
    assert_eq!(v["counts"]["dof"], 1);
    assert!(v.get("chart").is_none());
}

#[test]
fn report_selects_embeddings() {
    for (file, emb) in [
        ("cawley.sys", "sigma1_tilde"),
        ("l2.sys", "sigma2"),
        ("l3.sys", "sigma3_tilde"),
        ("l4.sys", "sigma2"),
        ("unconstrained.sys", "identity"),
        ("l3_gauge.sys", "sigma3"),
    ] {
        let v = json(&wellposed(&["report", &path(file)]));
        assert_eq!(v["embedding"]["name"], emb, "{file}");
    }
}

#[test]
fn gauge_fixing_flag_upgrades_the_embedding() {
    let v = json(&wellposed(&["report", &path("l3_reference.sys"), "--gauge-fixing=zeta1=-P1"]));
    assert_eq!(v["embedding"]["name"], "sigma3");
    assert_eq!(v["embedding"]["boundary"]["occupied"], 6);
    assert_eq!(v["embedding"]["boundary"]["never_fix"].as_array().unwrap().len(), 0);
    let v = json(&wellposed(&["report", &path("cawley.sys"), "--gauge-fixing"]));
    assert_eq!(v["embedding"]["name"], "sigma1");
}

#[test]
fn ssok_and_pons_agree_on_the_boundary_shape() {
    let a = json(&wellposed(&["report", &path("l4.sys"), "--path=ssok"]));
    let b = json(&wellposed(&["report", &path("l4.sys"), "--path=pons"]));
    assert_eq!(a["counts"]["dof"], b["counts"]["dof"]);
    assert_eq!(a["counts"]["first_class"], b["counts"]["first_class"]);
    let shape = |v: &Value| {
        let bd = &v["embedding"]["boundary"];
        (bd["fix_both_ends"].clone(), bd["fix_initial_only"].clone(), bd["never_fix"].clone())
    };
    assert_eq!(shape(&a), shape(&b));
    assert_eq!(a["embedding"]["name"], b["embedding"]["name"]);
}

#[test]
fn chart_and_verify_chart() {
    let v = json(&wellposed(&["chart", &path("l3.sys")]));
    assert_eq!(v["chart"]["origin"], "constructed");
    assert_eq!(v["chart"]["symplectic"], true);
    assert_eq!(v["chart"]["rows"].as_array().unwrap().len(), 8);
    let v = json(&wellposed(&["verify-chart", &path("l2_sqrt2.sys")]));
    assert_eq!(v["symplectic"], true);
}

#[test]
fn verify_chart_fails_on_a_broken_chart() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_sys(
        &dir,
        "system = broken\ncoordinates = q1 q2\norder = 1\nL = q1*d(q2) - q2*d(q1) - q1^2 - q2^2\n\n[chart]\nTheta1 = q2 + p1\nTheta_1 = -q1 + p2\nQ1 = q1\nP1 = p1\n",
    );
    let out = wellposed(&["verify-chart", &sys]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["symplectic"], false);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(wellposed(&["analyze", "/nonexistent.sys"]).status.code(), Some(2));
    assert_eq!(wellposed(&["analyze", &path("l4.sys"), "--path=bogus"]).status.code(), Some(2));
    let bad = write_sys(&dir, "system = x\ncoordinates = q\norder = 1\nL = d(q)^2 +\n");
    assert_eq!(wellposed(&["analyze", &bad]).status.code(), Some(2));
    let quartic = write_sys(&dir, "system = x\ncoordinates = q\norder = 1\nL = d(q)^4\n");
    assert_eq!(wellposed(&["analyze", &quartic]).status.code(), Some(3));
    let inconsistent = write_sys(&dir, "system = x\ncoordinates = q\norder = 1\nL = q\n");
    assert_eq!(wellposed(&["analyze", &inconsistent]).status.code(), Some(4));
    assert_eq!(wellposed(&["report", &path("l3.sys"), "--gauge-fixing"]).status.code(), Some(4));
    let singular = wellposed(&["simulate", &path("l2.sys"), "--t2=pi", "--bc", "Q1=1,0"]);
    assert_eq!(singular.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    for f in ["cawley.sys", "l3.sys", "l4.sys"] {
        let a = wellposed(&["report", &path(f)]);
        let b = wellposed(&["report", &path(f)]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{f}");
    }
}

#[test]
fn simulate_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = wellposed(&[
        "simulate",
        &path("l2_sqrt2.sys"),
        "--t2=pi/2",
        "--step=1e-3",
        "--bc",
        "Q1=1,0",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let v = json(&out);
    assert_eq!(v["embedding"], "sigma2");
    for k in ["a", "b"] {
        assert!((v["oscillator"][k]["re"].as_f64().unwrap() - 0.5).abs() < 1e-9);
        assert!(v["oscillator"][k]["im"].as_f64().unwrap().abs() < 1e-9);
    }
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "Q1", "P1", "H"]);
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.first().unwrap()[0], 0.0);
    assert!((rows.last().unwrap()[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    for r in &rows {
        assert!((r[1] - r[0].cos()).abs() < 1e-8, "Q({}) = {}", r[0], r[1]);
    }
}

fn q_trajectory(file: &str, extra: &[&str]) -> Vec<(f64, f64)> {
    let mut args = vec!["simulate", file, "--t2=1.2", "--bc", "Q1=0.3,-0.7"];
    args.extend_from_slice(extra);
    let out = wellposed(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn l4_and_l2_reduce_to_the_same_oscillator() {
    let l2 = q_trajectory(&path("l2.sys"), &[]);
    for p in ["--path=ssok", "--path=pons", "--path=counter-term"] {
        let l4 = q_trajectory(&path("l4.sys"), &[p]);
        assert_eq!(l2.len(), l4.len());
        for ((t, a), (s, b)) in l2.iter().zip(&l4) {
            assert_eq!(t, s);
            assert!((a - b).abs() < 1e-8, "{p} at t = {t}: {a} vs {b}");
        }
    }
}

#[test]
fn epsilon_and_endpoint_flags_reach_the_report() {
    let v = json(&wellposed(&["report", &path("l4.sys"), "--epsilon", "Theta_1=1/2"]));
    let fixed = v["embedding"]["fixed"].as_array().unwrap();
    assert!(fixed.iter().any(|a| a["name"] == "Theta_1" && a["value"] == "1/2"), "{fixed:?}");
    let v = json(&wellposed(&["report", &path("l3.sys"), "--fix-endpoint=t2"]));
    assert_eq!(v["embedding"]["boundary"]["endpoint"], "t2");
    let bad = wellposed(&["report", &path("l2.sys"), "--epsilon", "Q1=1"]);
    assert_eq!(bad.status.code(), Some(2));
}
