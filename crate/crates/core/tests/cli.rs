use std::path::Path;
use std::process::Command;

use isothermic::cli::run;
use serde_json::Value;

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["isothermic"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn list_is_alphabetical_with_defaults() {
    let (code, out, _) = cli(&["list"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = out.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, ["catenoid", "cylinder", "graph", "plane", "sphere", "torus", "unduloid"]);
    let torus = out.lines().find(|l| l.starts_with("torus")).unwrap();
    assert!(torus.contains("R=2,r=1"), "{torus}");
}

#[test]
fn check_verdicts() {
    let (code, out, _) = cli(&["check", "--surface", "builtin:torus"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!((code, r["verdict"].as_str().unwrap()), (0, "PASS"));
    assert_eq!(r["residuals"]["points"].as_array().unwrap().len(), 400);
    assert_eq!(r["residuals"]["points"][0]["reduction"], "curvature_line");

    let (code, out, _) = cli(&["check", "--surface", "builtin:graph", "--size", "5x4"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!((code, r["verdict"].as_str().unwrap()), (2, "FAIL"));
    assert_eq!(r["residuals"]["points"].as_array().unwrap().len(), 20);
    assert!(r["residuals"]["max_abs"].as_f64().unwrap() > 1e-2);

    let (code, out, _) = cli(&["check", "--surface", "builtin:sphere", "--size", "3"]);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!((code, r["verdict"].as_str().unwrap()), (2, "UNDEFINED"));
    assert_eq!(r["umbilic_count"], 9);
    assert!(r["residuals"]["max_abs"].is_null());
}

#[test]
fn check_accepts_documents_inline_and_from_files() {
    // helicoid: minimal, hence isothermic, in an orthogonal chart
    let doc = "X = x*cos(y)\nY = x*sin(y)\nZ = y\ndomain = 0.5, 1.5, 0, 1\n";
    let (code, out, _) = cli(&["check", "--surface", doc, "--size", "4"]);
    assert_eq!(code, 0, "{out}");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("helicoid.surf");
    std::fs::write(&path, doc).unwrap();
    let report = dir.path().join("r.json");
    let (code, out, _) = cli(&[
        "check",
        "--surface",
        path.to_str().unwrap(),
        "--size",
        "4",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("PASS"), "{out}");
    let r = json(&report);
    assert_eq!(r["surface"]["spec"], doc);
    assert_eq!(r["residuals"]["points"][0]["reduction"], "orthogonal");
}

#[test]
fn configuration_errors_exit_1() {
    for args in [
        vec!["check", "--surface", "builtin:nosuch"],
        vec!["check", "--surface", "no/such/file.surf"],
        vec!["check", "--surface", "X = x; Y = ; Z = 0"],
        vec!["check", "--surface", "builtin:torus", "--size", "1"],
        vec!["check", "--surface", "builtin:torus", "--tol-residual", "-1"],
        vec!["reparam", "--surface", "builtin:torus", "--size", "1,7"],
        vec!["reparam", "--surface", "builtin:sphere"],
        vec!["reparam", "--surface", "builtin:graph", "--origin", "0,0"],
        vec!["reparam", "--surface", "builtin:torus", "--k0", "0"],
        vec!["frobnicate"],
    ] {
        let (code, _, err) = cli(&args);
        assert_eq!(code, 1, "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn cylinder_obj_is_a_grid_of_exact_quads() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("c.obj");
    let (code, _, err) = cli(&[
        "reparam",
        "--surface",
        "builtin:cylinder?R=2",
        "--origin",
        "0,0",
        "--steps",
        "0.1",
        "--size",
        "11",
        "--out",
        obj.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&obj).unwrap();
    let verts: Vec<[f64; 3]> = text
        .lines()
        .filter(|l| l.starts_with("v "))
        .map(|l| {
            let c: Vec<f64> = l[2..].split_whitespace().map(|t| t.parse().unwrap()).collect();
            [c[0], c[1], c[2]]
        })
        .collect();
    let faces = text.lines().filter(|l| l.starts_with("f ")).count();
    assert_eq!((verts.len(), faces), (121, 100));
    let dist = |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    // γ-edges run along the rulings, β-edges are chords of the circles
    let chord = 2.0 * 2.0 * (0.1f64 / 4.0).sin();
    for i in 0..11 {
        for j in 0..10 {
            assert!((dist(verts[i * 11 + j], verts[i * 11 + j + 1]) - 0.1).abs() < 1e-8);
            assert!((dist(verts[j * 11 + i], verts[(j + 1) * 11 + i]) - chord).abs() < 1e-8);
        }
    }
}

#[test]
fn reports_verify_and_detect_edits() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("torus.json");
    let rp = report.to_str().unwrap();
    let (code, out, _) = cli(&["reparam", "--surface", "builtin:torus", "--size", "15,12", "--report", rp]);
    assert_eq!(code, 0);
    assert!(out.contains("verdict PASS"), "{out}");
    let r = json(&report);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["mesh_stats"]["vertices"], 180);
    assert_eq!(r["mesh_stats"]["faces"], 14 * 11);
    assert!(r["residuals"]["diagnostics"]["path_independence"].as_f64().unwrap() < 1e-7);

    let (code, out, _) = cli(&["verify", rp]);
    assert_eq!(code, 0, "{out}");
    let (code, _, _) = cli(&["verify", "--report", rp]);
    assert_eq!(code, 0);

    // hand edit of a single node
    let mut edited = r.clone();
    let x = edited["mesh"][7][6]["f_pullback"][2].as_f64().unwrap();
    edited["mesh"][7][6]["f_pullback"][2] = (x + 1e-3).into();
    std::fs::write(&report, edited.to_string()).unwrap();
    let (code, _, err) = cli(&["verify", rp]);
    assert_eq!(code, 2);
    assert!(err.contains("mismatch"), "{err}");

    // edited stored diagnostics, untouched mesh
    let mut edited = r.clone();
    edited["residuals"]["diagnostics"]["orthogonality_max"] = 0.5.into();
    std::fs::write(&report, edited.to_string()).unwrap();
    assert_eq!(cli(&["verify", rp]).0, 2);

    let (code, _, _) = cli(&["verify", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code, 1);
    std::fs::write(&report, "{\"schema_version\": 1}").unwrap();
    assert_eq!(cli(&["verify", rp]).0, 1);
    let mut wrong = r.clone();
    wrong["schema_version"] = 7.into();
    std::fs::write(&report, wrong.to_string()).unwrap();
    assert_eq!(cli(&["verify", rp]).0, 1);
}

#[test]
fn check_reports_cannot_be_verified() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("c.json");
    cli(&["check", "--surface", "builtin:torus", "--size", "2", "--report", report.to_str().unwrap()]);
    assert_eq!(cli(&["verify", report.to_str().unwrap()]).0, 1);
}

#[test]
fn worker_count_does_not_change_the_report() {
    let mesh = |workers: &str| {
        let (code, out, _) = cli(&["reparam", "--surface", "builtin:unduloid", "--size", "21", "--workers", workers]);
        assert_eq!(code, 0);
        let r: Value = serde_json::from_str(&out).unwrap();
        (r["mesh"].clone(), r["residuals"].clone())
    };
    let one = mesh("1");
    assert_eq!(one, mesh("3"));
    assert_eq!(one, mesh("0"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_isothermic");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let out = status(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("unduloid"));
    assert_eq!(status(&["check", "--surface", "builtin:graph", "--size", "3"]).status.code(), Some(2));
    assert_eq!(status(&["check", "--surface", "builtin:bogus"]).status.code(), Some(1));
    assert_eq!(status(&["--version"]).status.code(), Some(0));
}
