use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fiberpath(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiberpath"))
        .current_dir(dir)
        .env_remove("FIBERPATH_SEED")
        .env_remove("FIBERPATH_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const SMALL: &str = r#"
e = 0.5
[model]
modes = "reference-pair"
[paths]
t_end = 2.0
n_steps = 32
n_paths = 1000
n_batches = 16
seed = 11
[estimator]
t = 1.0
t_ladder = [1.0, 2.0]
beta = [0.5, 1.0]
f = [[0.2, 0.1, 0.0]]
[oracle]
t = [1.0]
n_max = 6
e2 = [0.0, 0.1, 0.2, 0.3]
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn free_energy_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL.replace("e = 0.5", "e = 0.0"));
    let out = fiberpath(dir.path(), &["energy", "--config", &cfg, "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/energy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "P_x,P_y,P_z,e,t1,t2,E_hat,stderr,n_paths,n_steps");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 10);
    assert!(row[6].parse::<f64>().unwrap().abs() < 1e-12);
    let s = summary(&dir.path().join("o"));
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["exit_code"], 0);
    assert_eq!(s["seed"], 11);
}

#[test]
fn unknown_key_is_rejected_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL.replace("[paths]", "[paths]\nn_stepz = 3"));
    let out = fiberpath(dir.path(), &["energy", "--config", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_stepz"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn off_grid_horizon_is_rejected_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL.replace("t = 1.0\n", "t = 0.33\n"));
    let out = fiberpath(dir.path(), &["observable", "--quantity", "expN", "--config", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    for out in ["a", "b"] {
        let o = fiberpath(dir.path(), &["observable", "--quantity", "expN", "--config", &cfg, "--out", out, "--seed", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(dir.path().join("a/observable.csv")).unwrap();
    let b = fs::read(dir.path().join("b/observable.csv")).unwrap();
    assert_eq!(a, b);
    let header = String::from_utf8(a).unwrap();
    assert!(header.starts_with("beta,P_x,P_y,P_z,e,t,value,stderr\n"));
}

#[test]
fn kernel_table_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[table]\npath = \"k.bin\"\ntau_max = 0.5\nr_max = 3.0\nh_tau = 0.05\nh_r = 0.05\n";
    let cfg = write_config(dir.path(), "c.toml", text);
    let mut copies = Vec::new();
    for _ in 0..2 {
        let o = fiberpath(dir.path(), &["kernel-table", "build", "--config", &cfg, "--out", "o"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        copies.push(fs::read(dir.path().join("k.bin")).unwrap());
    }
    assert_eq!(copies[0], copies[1]);
    let o = fiberpath(dir.path(), &["kernel-table", "inspect", "--table", "k.bin", "--out", "i"]);
    assert!(o.status.success());
    assert_eq!(summary(&dir.path().join("i"))["results"]["header"]["n_r"], 60);
}

#[test]
fn polarization_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    for c in ["axis-cross", "meridian"] {
        let o = fiberpath(dir.path(), &["check-polarization", "--construction", c, "--samples", "500", "--out", c]);
        assert!(o.status.success());
        assert_eq!(summary(&dir.path().join(c))["results"]["pass"], true, "{c}");
    }
}

#[test]
fn oracle_concavity_and_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let o = fiberpath(dir.path(), &["oracle", "--checks", "spectra,concavity", "--config", &cfg, "--out", "o"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&dir.path().join("o"));
    assert_eq!(s["results"]["energy_curves"]["E00"], 0.0);
    assert_eq!(s["results"]["energy_curves"]["concave_1e-9"], true);
    let spectra = fs::read_to_string(dir.path().join("o/oracle_spectra.csv")).unwrap();
    assert!(spectra.starts_with("P_x,P_y,P_z,e,level,eigenvalue\n"));
}

#[test]
fn compare_oracle_reports_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let o = fiberpath(dir.path(), &["compare-oracle", "--config", &cfg, "--out", "o"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&dir.path().join("o"));
    let sigma = s["results"]["max_sigma_deviation"].as_f64().unwrap();
    assert!(sigma < 5.0, "{sigma}");
}
