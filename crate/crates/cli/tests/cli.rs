use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[scenario.spec]
name = "small"
width = 6.0
depth = 4.0
h = 0.125
m = 6
aperture = 4.0
array_start = 1.0
aperture_fraction = 1.0
tau_factor = 0.4
n = 10
bandwidth_factor = 0.25
strip = 0.25
image_x = [0.5, 5.5]
image_z = [0.5, 3.5]
image_spacing = 0.25

[[scenario.spec.reflectors]]
from = [2.0, 1.75]
to = [4.0, 1.75]
speed = 0.6
thickness = 0.25

[imaging]
methods = ["norm", "bp"]
"#;

fn romimg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_romimg")).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn write_config(dir: &Path) -> String {
    let p = dir.join("small.toml");
    std::fs::write(&p, SMALL).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn staged_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let d = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    ok(&romimg(&["simulate", "--config", &cfg, "--out", &d("sim")]));
    ok(&romimg(&["build-rom", "--data", &d("sim"), "--out", &d("rom")]));
    ok(&romimg(&["basis", "--config", &cfg, "--out", &d("basis")]));
    for f in ["rom/R.bin", "rom/P.bin", "rom/M.bin", "rom/S.bin", "basis/basis.bin", "basis/R_ref.bin"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    ok(&romimg(&["internal-wave", "--rom", &d("rom"), "--basis", &d("basis"), "--y", "3.0,1.75", "--out", &d("g.bin")]));
    let out = romimg(&["image", "--method", "norm", "--rom", &d("rom"), "--basis", &d("basis"), "--config", &cfg, "--csv", "--out", &d("norm.bin")]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("norm image"));
    assert!(dir.path().join("norm.csv").exists());
    ok(&romimg(&["image", "--method", "rtm", "--data", &d("sim"), "--config", &cfg, "--out", &d("rtm.bin")]));
    ok(&romimg(&["postprocess", "--input", &d("norm.bin"), "--range-derivative", "--sigma", "0.05", "--out", &d("norm_rd.bin")]));
    assert!(dir.path().join("norm_rd.bin").exists());
}

#[test]
fn run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("run");
    ok(&romimg(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]));
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("image_norm_rd.bin").exists());
    assert!(!out_dir.join(".partial").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scenario]\npreset = \"nowhere\"\n").unwrap();
    let out = romimg(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = romimg(&["build-rom", "--data", dir.path().join("missing.bin").to_str().unwrap(), "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(dir.path());
    let out = romimg(&["image", "--method", "bp", "--config", &cfg, "--out", "x.bin"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--rom"));
}

#[test]
fn oracle_verification_passes() {
    let out = romimg(&["verify", "--oracle"]);
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 10);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn validate_prints_csv() {
    let out = romimg(&["validate", "--appendix", "a2"]);
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("table,mode"));
    assert!(text.contains("arrival,1,"));
    assert!(text.contains("coupling,1,"));
}
