use std::path::Path;
use std::process::{Command, Output};

fn g4c(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g4c")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = g4c(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn digest_line(stdout: &str) -> &str {
    stdout.lines().find(|l| l.starts_with("digest ")).unwrap()
}

fn gen_small(dir: &Path) -> String {
    let scene = dir.join("scene.g4s").display().to_string();
    ok(&["gen", "-o", &scene, "--static", "40", "--dynamic", "12", "--frames", "16", "--seed", "3"]);
    scene
}

#[test]
fn encode_inspect_decode() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_small(dir.path());
    let c = dir.path().join("a.g4c").display().to_string();
    let csv = dir.path().join("a.csv").display().to_string();
    let out = ok(&["encode", &scene, "-o", &c, "--level", "3", "--csv", &csv]);
    assert!(out.contains("indexes"));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("# g4dc-report v1\ncomponent,bytes,percent\n"));
    let total: usize = table
        .lines()
        .find(|l| l.starts_with("total,"))
        .and_then(|l| l.split(',').nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(total, std::fs::metadata(&c).unwrap().len() as usize);

    assert!(ok(&["inspect", &c]).contains("f_masked"));

    let r1 = dir.path().join("r1.g4s").display().to_string();
    let r2 = dir.path().join("r2.g4s").display().to_string();
    let d1 = ok(&["decode", &c, "-o", &r1]);
    let d2 = ok(&["decode", &c, "-o", &r2]);
    assert_eq!(digest_line(&d1), digest_line(&d2));
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());
}

#[test]
fn encode_is_deterministic_and_flags_matter() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_small(dir.path());
    let path = |n: &str| dir.path().join(n).display().to_string();
    ok(&["encode", &scene, "-o", &path("a.g4c"), "--level", "2"]);
    ok(&["encode", &scene, "-o", &path("b.g4c"), "--level", "2"]);
    ok(&["encode", &scene, "-o", &path("c.g4c"), "--level", "2", "--no-wavelet"]);
    let read = |n: &str| std::fs::read(path(n)).unwrap();
    assert_eq!(read("a.g4c"), read("b.g4c"));
    assert_ne!(read("a.g4c"), read("c.g4c"));
}

#[test]
fn config_file_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_small(dir.path());
    let cfg = dir.path().join("o.toml");
    std::fs::write(&cfg, "codebook_size = 4\nquantize_variances = true\n").unwrap();
    let c = dir.path().join("a.g4c").display().to_string();
    ok(&["encode", &scene, "-o", &c, "--config", cfg.to_str().unwrap()]);

    std::fs::write(&cfg, "no_such_field = 1\n").unwrap();
    let out = g4c(&["encode", &scene, "-o", &c, "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_and_ablations_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_small(dir.path());
    let csv = dir.path().join("s.csv").display().to_string();
    let levels = dir.path().join("levels");
    ok(&["sweep", &scene, "--levels", "1,6", "--csv", &csv, "--out-dir", levels.to_str().unwrap()]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# g4dc-sweep v1");
    assert!(lines[1].starts_with("level,size_bytes,header,gaussian_mask"));
    assert_eq!(lines.len(), 4);
    assert!(levels.join("level6.g4c").exists());

    let op = ok(&["ablate-opacity", &scene, "--level", "6"]);
    assert!(op.starts_with("# g4dc-ablate-opacity v1\n"));
    assert_eq!(op.lines().count(), 2 + 5);
    let wv = ok(&["ablate-wavelet", &scene, "--depths", "0,1,2"]);
    assert!(wv.starts_with("# g4dc-ablate-wavelet v1\n"));
    assert_eq!(wv.lines().count(), 2 + 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_small(dir.path());
    let c = dir.path().join("a.g4c").display().to_string();

    assert_eq!(g4c(&["encode", &scene, "-o", &c, "--level", "9"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_g4c"))
        .args(["inspect", &scene])
        .env("G4C_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // A scene file is not a container.
    let out = g4c(&["decode", &scene, "-o", &c]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    ok(&["encode", &scene, "-o", &c]);
    let mut bytes = std::fs::read(&c).unwrap();
    bytes.truncate(bytes.len() - 1);
    std::fs::write(&c, bytes).unwrap();
    assert_eq!(g4c(&["inspect", &c]).status.code(), Some(3));

    let missing = dir.path().join("missing.g4c").display().to_string();
    assert_eq!(g4c(&["inspect", &missing]).status.code(), Some(4));
}
