use std::path::PathBuf;
use std::process::{Command, Stdio};

fn hdgel() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hdgel"));
    c.env("RUST_LOG", "error").stdout(Stdio::null()).stderr(Stdio::null());
    c
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = "case = \"idealized-1\"\nl = 0\np = 2\nn_a = 4\n";

#[test]
fn run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.toml", SMALL);
    let status = hdgel()
        .args(["run", "--method", "hdg", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert!(csv.starts_with("method,level,dofs"));
    assert!(dir.path().join("run.json").exists());
}

#[test]
fn bad_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.toml", "case = \"idealized-1\"\nbogus = 1\n");
    let status = hdgel().args(["run", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = hdgel()
        .args(["run", "--config", "/no/such/file.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn hdg_el_without_model_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.toml", SMALL);
    let status = hdgel()
        .args(["run", "--method", "hdg-el", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn mismatched_model_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.toml", SMALL);
    let model = dir.path().join("m.bin");
    hdgel::surrogate::save_model(&hdgel::surrogate::init_mlp(3, 8, 1, 10.0, 0).unwrap(), &model).unwrap();
    let status = hdgel()
        .args(["run", "--method", "hdg-el", "--config"])
        .arg(&cfg)
        .arg("--model")
        .arg(&model)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn unreachable_tolerance_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.toml", SMALL);
    let status = hdgel()
        .args(["run", "--method", "dg", "--tol", "1e-40", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn shipped_configs_parse() {
    for name in [
        "idealized1_desk.toml",
        "idealized2_desk.toml",
        "idealized1_full.toml",
        "i3rc_desk.toml",
    ] {
        hdgel::cases::CaseConfig::load(&configs().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for name in ["pipeline_desk.toml", "pipeline_accurate.toml", "pipeline_full.toml"] {
        hdgel::bench::PipelineConfig::load(&configs().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn reference_and_sweep_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.toml", &format!("{SMALL}l_ref = 2\n"));
    let status = hdgel()
        .args(["reference", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("reference.json").exists());

    let out = dir.path().join("sweep");
    let status = hdgel()
        .args(["sweep", "--level", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 2);
    for f in ["dofs_vs_error.csv", "dofs_vs_time.csv", "time_vs_error.csv"] {
        assert!(out.join(f).exists());
    }
}
