use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn ksurf(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksurf"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("KSURF_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn classify_writes_report_portrait_and_witnesses() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ksurf(tmp.path(), &["classify", "const:1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("regime StrictlyPositiveWithSphere"));
    for f in ["portrait.svg", "report.json", "manifest.json"] {
        assert!(tmp.path().join(f).is_file(), "{f} missing");
    }
    let witnesses = fs::read_dir(tmp.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("witness-")
        })
        .count();
    assert!(witnesses > 0);
    let report: Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert!(report["report"]["minkowski_value"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn manifest_hashes_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(ksurf(tmp.path(), &["classify", "affine:1,2"]).status.success());
    let m = manifest(tmp.path());
    let artifacts = m["artifacts"].as_array().unwrap();
    assert!(!artifacts.is_empty());
    for a in artifacts {
        let bytes = fs::read(tmp.path().join(a["file"].as_str().unwrap())).unwrap();
        assert_eq!(a["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(a["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    assert_eq!(m["config"]["command"]["Classify"]["spec"], "affine:1,2");
}

#[test]
fn usage_errors_exit_with_two_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    for args in [
        &["classify", "nonsense:1"][..],
        &["--format", "obj", "classify", "const:1"],
        &["--tol", "0.5", "orbit", "const:1"],
        &["orbit", "pow:-1"],
    ] {
        let o = ksurf(&out, args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert!(!out.exists());
}

#[test]
fn verify_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ksurf(tmp.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(tmp.path().join("verify.json").is_file());
}

#[test]
fn power_four_from_the_axis_is_an_entire_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ksurf(tmp.path(), &["orbit", "pow:4", "--from-axis"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let end = text.lines().find(|l| l.starts_with("end ")).unwrap();
    assert!(end.contains("entire_graph_divergence"), "{end}");
    let csv = fs::read_to_string(tmp.path().join("orbit.csv")).unwrap();
    assert!(csv.lines().count() > 10);
}

#[test]
fn linear_function_continues_to_a_cylinder() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ksurf(tmp.path(), &["radial", "pow:1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c: Value = serde_json::from_slice(&fs::read(tmp.path().join("continuation.json")).unwrap()).unwrap();
    assert_eq!(c["asymptote"]["kind"], "cylinder_convergent", "{c}");
    let radius = c["asymptote"]["radius"].as_f64().unwrap();
    assert!((radius - 2f64.sqrt()).abs() < 1e-6, "{radius}");
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(ksurf(d.path(), &["--grid", "4", "portrait", "poly:1,0,-1"])
            .status
            .success());
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("portrait.svg")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ksurf"))
        .args(["--format", "obj", "mesh", "const:1", "--from-axis", "--rings", "16"])
        .env("KSURF_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let obj = fs::read_to_string(tmp.path().join("mesh.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("f ")));
}
