use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wedgenet"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("wedgenet-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], config: Option<&str>, dir: &Path) -> (i32, String, String) {
    let mut cmd = bin();
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let p = dir.join("run.toml");
        std::fs::write(&p, text).unwrap();
        cmd.arg("--config").arg(p);
    }
    let o = cmd.output().unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8(o.stdout).unwrap(),
        String::from_utf8(o.stderr).unwrap(),
    )
}

fn reports(dir: &Path, stem: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(format!("{stem}.json"))).unwrap()).unwrap()
}

#[test]
fn default_locality_run_passes() {
    let d = scratch("default");
    let (code, stdout, _) = run(&["check-locality"], None, &d);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    let r = reports(&d, "check_locality");
    assert!(r.as_array().unwrap().len() > 8);
}

#[test]
fn broken_inner_function_exits_one_with_named_defect() {
    let d = scratch("broken");
    let cfg = "[smatrix]\nvariant = \"inner_function\"\nzeros = [[0.5, 1.0]]\n";
    let (code, stdout, _) = run(&["check-locality"], Some(cfg), &d);
    assert_eq!(code, 1);
    assert!(stdout.contains("reflection_symmetry"), "{stdout}");
    let r = reports(&d, "check_locality");
    let defects = r[0]["defects"].as_array().unwrap();
    let refl = defects.iter().find(|x| x["metric"] == "reflection_symmetry").unwrap();
    assert!(refl["value"].as_f64().unwrap() > refl["tolerance"].as_f64().unwrap());
}

#[test]
fn bad_config_exits_two() {
    let d = scratch("bad");
    let (code, _, stderr) = run(&["fourier"], Some("[smatrix]\nvariant = \"nope\"\n"), &d);
    assert_eq!(code, 2);
    let e: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(e["error"], "config");
    let (code, _, _) = run(&["fourier"], Some("[truncation]\nn_max = 0\n"), &d);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["fourier", "--tol-scale", "-1"], None, &d);
    assert_eq!(code, 2);
}

#[test]
fn tables_have_documented_headers() {
    let d = scratch("tables");
    let cfg = "[smatrix]\nvariant = \"translation\"\nkappa = 1.5\n";
    assert_eq!(run(&["smatrix-table"], Some(cfg), &d).0, 0);
    let csv = std::fs::read_to_string(d.join("out/smatrix.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "basis_index,re,im");
    let header: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("out/smatrix_header.json")).unwrap()).unwrap();
    assert_eq!(header["variant"]["variant"], "translation");

    assert_eq!(run(&["scatter"], Some(cfg), &d).0, 0);
    let csv = std::fs::read_to_string(d.join("out/scatter.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "p,q,Re S_extracted,Im S_extracted,Re S_spec,Im S_spec,abs_error");
    for l in lines {
        let err: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-10, "{l}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d1 = scratch("det1");
    let d2 = scratch("det2");
    for d in [&d1, &d2] {
        assert_eq!(run(&["fourier", "--seed", "11", "--jobs", "1"], None, d).0, 0);
    }
    let a = std::fs::read_to_string(d1.join("out/fourier.json")).unwrap();
    let b = std::fs::read_to_string(d2.join("out/fourier.json")).unwrap();
    assert_eq!(a, b);
    let r: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(r[0]["provenance"]["seed"], 11);
}

#[test]
fn tolerance_scale_changes_verdicts() {
    let d = scratch("scale");
    let (code, stdout, _) = run(&["calibrate", "--tol-scale", "1e-6"], None, &d);
    assert_eq!(code, 1, "{stdout}");
}
