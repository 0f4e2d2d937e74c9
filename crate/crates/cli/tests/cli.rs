use std::path::Path;
use std::process::Command;

fn fddmc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fddmc")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
[sweep]
variable = "gamma"
values = [1.0, 2.0]

[run]
trials = 20
seed = 5
"#;

#[test]
fn sweep_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = fddmc(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let x = std::fs::read(a.join("sweep_gamma.csv")).unwrap();
    let y = std::fs::read(b.join("sweep_gamma.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("gamma [1],"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn seed_flag_changes_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let mut outs = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let o = fddmc(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed, "--trials", "200"]);
        assert!(o.status.success());
        outs.push(std::fs::read_to_string(out.join("sweep_gamma.csv")).unwrap());
    }
    assert_ne!(outs[0], outs[1]);
}

#[test]
fn invalid_config_exits_nonzero_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[receiver]\nreceptors = -5\n");
    let o = fddmc(&["validate", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("receptors"));

    let cfg = write(dir.path(), "typo.toml", "[sampling]\nnn = 700\n");
    let o = fddmc(&["validate", "--config", &cfg]);
    assert!(!o.status.success());
}

#[test]
fn validate_defaults() {
    let o = fddmc(&["validate"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("scenario ok"));
}

#[test]
fn psd_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig");
    let o = fddmc(&["psd", "--out", out.to_str().unwrap(), "--points", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("psd.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("curve")).count(), 50);
    assert!(std::fs::read_to_string(out.join("psd.svg")).unwrap().contains("<svg"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let o = fddmc(&["validate", "--config", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
            n += 1;
        }
    }
    assert!(n >= 4);
}
