use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conceptor-lab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

const TINY: &str = r#"
experiment = "periodic"
name = "tiny"
output_dir = "results"
emit = ["recall_csv", "nrmse_table", "singular_values"]

[reservoir]
n_neurons = 30

[plan]
mode = "conceptor"
washout = 100
apertures = 10.0
rho_w = 0.001
rho_wout = 0.0001

[[patterns]]
kind = "sine"
period = 9.0
length = 600

[[patterns]]
kind = "csv"
path = "data/pattern.csv"
"#;

fn write_tiny(dir: &Path) {
    fs::create_dir_all(dir.join("data")).unwrap();
    let rows: String = (0..600).map(|n| format!("{}\n", ((n % 7) as f64 / 3.0 - 1.0))).collect();
    fs::write(dir.join("data/pattern.csv"), format!("value\n{rows}")).unwrap();
    fs::write(dir.join("tiny.toml"), TINY).unwrap();
}

#[test]
fn config_file_run_writes_named_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write_tiny(dir.path());
    let out = lab(&["run", "--config", "tiny.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<_> = fs::read_dir(dir.path().join("results"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    for f in &files {
        assert!(f.starts_with("tiny_") && !f.ends_with(".partial"), "{f}");
    }
    for f in ["tiny_recall_0.csv", "tiny_recall_1.csv", "tiny_nrmse.csv", "tiny_singular_values_1.csv", "tiny_manifest.toml"] {
        assert!(files.iter().any(|x| x == f), "missing {f} in {files:?}");
    }
    let nrmse = fs::read_to_string(dir.path().join("results/tiny_nrmse.csv")).unwrap();
    assert!(nrmse.starts_with("pattern,min,max,mean,std,shift,steps\npattern_0,"));
    let rank = fs::read_to_string(dir.path().join("results/tiny_rank.csv")).unwrap();
    assert!(rank.lines().nth(2).unwrap().ends_with(",7"), "{rank}");
}

#[test]
fn missing_pattern_file_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write_tiny(dir.path());
    fs::remove_file(dir.path().join("data/pattern.csv")).unwrap();
    let out = lab(&["run", "--config", "tiny.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
    assert!(!dir.path().join("results").exists());
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "experiment = \"periodic\"\nname = 3\n").unwrap();
    assert_eq!(lab(&["run", "--config", "bad.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(lab(&["run", "--preset", "no-such-preset"], dir.path()).status.code(), Some(2));
    assert_eq!(lab(&["run", "--preset", "periodic-diagonal", "--emit", "plots"], dir.path()).status.code(), Some(2));
}

#[test]
fn singular_training_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TINY
        .replace("rho_w = 0.001\nrho_wout = 0.0001", "rho_w = 0.0")
        .replace("kind = \"sine\"\nperiod = 9.0", "kind = \"periodic_random\"\nperiod = 1\nseed = 1")
        .replace("[[patterns]]\nkind = \"csv\"\npath = \"data/pattern.csv\"\n", "");
    fs::write(dir.path().join("flat.toml"), cfg).unwrap();
    let out = lab(&["run", "--config", "flat.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("results").exists());
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    write_tiny(dir.path());
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = lab(&["run", "--config", "tiny.toml", "--out", "blocker/sub"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn shown_presets_run_as_configs() {
    let dir = tempfile::tempdir().unwrap();
    let list = lab(&["presets"], dir.path());
    assert!(String::from_utf8_lossy(&list.stdout).contains("morph-sine-extrapolation"));
    let shown = lab(&["presets", "--show", "multichannel-synthetic"], dir.path());
    assert!(shown.status.success());
    fs::write(dir.path().join("mc.toml"), &shown.stdout).unwrap();
    let out = lab(&["run", "--config", "mc.toml", "--out", "mc", "--seed", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(dir.path().join("mc/multichannel-synthetic_manifest.toml")).unwrap();
    assert!(manifest.contains("[seeds]\nreservoir = 2\nplan = 2\n"), "{manifest}");
    let channels = fs::read_to_string(dir.path().join("mc/multichannel-synthetic_nrmse_channels.csv")).unwrap();
    assert_eq!(channels.lines().count(), 1 + 3 * 10);
}

#[test]
fn morph_preset_emits_mu_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["run", "--preset", "morph-sine-conceptor", "--out", "m"], dir.path());
    assert!(out.status.success());
    let mu = fs::read_to_string(dir.path().join("m/morph-sine-conceptor_mu_trace_0_1.csv")).unwrap();
    let values: Vec<f64> = mu.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 200 + 200 + 300);
    assert_eq!(values[0], 0.0);
    assert_eq!(values[399], 1.0);
    assert!(dir.path().join("m/morph-sine-conceptor_morph_0_1.csv").exists());
    let summary = fs::read_to_string(dir.path().join("m/morph-sine-conceptor_morph_summary.csv")).unwrap();
    assert!(summary.starts_with("segment,mu,dominant_period,reference_pattern,nrmse\npre,0,"));
}
