use std::path::Path;
use std::process::{Command, Output};

use splatstego::key::StegoKey;
use splatstego::scene::{read_scene, save_scene};

fn splatstego(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splatstego"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = splatstego(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn header_of(bytes: &[u8]) -> &[u8] {
    let marker = b"end_header\n";
    let end = bytes.windows(marker.len()).position(|w| w == marker).unwrap();
    &bytes[..end + marker.len()]
}

/// Cover, hidden, stego and key in a fresh directory.
fn embedded() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--count", "800", "--seed", "4", "--out", "c.ply", "--hidden-out", "h.ply"]);
    ok(dir.path(), &["embed", "--cover", "c.ply", "--hidden", "h.ply", "--out", "s.ply", "--key", "k.bin", "--epochs", "300"]);
    dir
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--seed", "7", "--count", "300", "--out", "a.ply"]);
    ok(dir.path(), &["gen", "--seed", "7", "--count", "300", "--out", "b.ply"]);
    ok(dir.path(), &["gen", "--seed", "8", "--count", "300", "--out", "c.ply"]);
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.ply"), read("b.ply"));
    assert_ne!(read("a.ply"), read("c.ply"));
}

#[test]
fn embed_keeps_schema_and_records_defaults() {
    let dir = embedded();
    let cover_bytes = std::fs::read(dir.path().join("c.ply")).unwrap();
    let stego_bytes = std::fs::read(dir.path().join("s.ply")).unwrap();
    assert_eq!(header_of(&cover_bytes), header_of(&stego_bytes));
    let cover = read_scene(dir.path().join("c.ply")).unwrap();
    let stego = read_scene(dir.path().join("s.ply")).unwrap();
    assert!(stego.non_sh_bits_eq(&cover));
    let key = StegoKey::read(dir.path().join("k.bin")).unwrap();
    assert_eq!((key.k, key.tau, key.gamma, key.c_max), (17, 0.25, 32, 8.0));
}

#[test]
fn extract_with_order_filter() {
    let dir = embedded();
    let msg = ok(dir.path(), &["extract", "--stego", "s.ply", "--key", "k.bin", "--out", "x.ply", "--max-order", "0"]);
    assert!(msg.starts_with("recovered"));
    let hidden = read_scene(dir.path().join("x.ply")).unwrap();
    assert!(!hidden.is_empty());
    assert!(hidden.sh.iter().all(|b| b.coeffs[1..].iter().flatten().all(|&v| v == 0.0)));
    assert!(hidden.sh.iter().any(|b| b.coeffs[0] != [0.0; 3]));
}

#[test]
fn extract_after_sequential_pruning() {
    let dir = embedded();
    ok(dir.path(), &["extract", "--stego", "s.ply", "--key", "k.bin", "--out", "full.ply"]);
    ok(dir.path(), &["attack", "--input", "s.ply", "--out", "p.ply", "--mode", "seq-prune", "--ratio", "0.25"]);
    ok(dir.path(), &["extract", "--stego", "p.ply", "--key", "k.bin", "--out", "pruned.ply"]);
    let full = std::fs::read(dir.path().join("full.ply")).unwrap();
    let pruned = std::fs::read(dir.path().join("pruned.ply")).unwrap();
    assert_eq!(full, pruned);
}

#[test]
fn wrong_key_fails_with_one_line() {
    let dir = embedded();
    ok(dir.path(), &["gen", "--count", "800", "--seed", "5", "--out", "other.ply"]);
    let out = splatstego(dir.path(), &["extract", "--stego", "other.ply", "--key", "k.bin", "--out", "x.ply"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("no coordinates matched"), "{err}");
}

#[test]
fn mismatched_hidden_positions_are_rejected() {
    let dir = embedded();
    ok(dir.path(), &["gen", "--count", "800", "--seed", "5", "--out", "other.ply"]);
    let out = splatstego(dir.path(), &["embed", "--cover", "c.ply", "--hidden", "other.ply", "--out", "s2.ply", "--key", "k2.bin"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("position mismatch"));
}

#[test]
fn embed_from_synth_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--count", "500", "--seed", "1", "--out", "c.ply"]);
    std::fs::write(dir.path().join("hidden.cfg"), "seed = 12\ndecay = 0.4\n").unwrap();
    let msg = ok(
        dir.path(),
        &["embed", "--cover", "c.ply", "--synth-config", "hidden.cfg", "--out", "s.ply", "--key", "k.bin", "--epochs", "100"],
    );
    assert!(msg.contains("selected"));
}

#[test]
fn render_and_verify() {
    let dir = embedded();
    ok(dir.path(), &["render", "--scene", "c.ply", "--out", "c.ppm", "--width", "48", "--height", "40"]);
    ok(dir.path(), &["render", "--scene", "c.ply", "--out", "c2.ppm", "--width", "48", "--height", "40"]);
    let same = ok(dir.path(), &["verify", "c.ppm", "c2.ppm"]);
    assert_eq!(same.trim(), "psnr 99.0000 dB, ssim 1.000000");
    let cam = splatstego::synth::default_camera(48, 40);
    std::fs::write(dir.path().join("cam.txt"), cam.to_text()).unwrap();
    ok(dir.path(), &["render", "--scene", "s.ply", "--out", "s.ppm", "--camera", "cam.txt", "--background", "0,0,0"]);
    let report = ok(dir.path(), &["verify", "c.ppm", "s.ppm"]);
    let psnr: f64 = report.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(psnr > 45.0, "{report}");
    let bad = splatstego(dir.path(), &["render", "--scene", "c.ply", "--out", "x.ppm", "--background", "2,0,0"]);
    assert!(!bad.status.success());
}

#[test]
fn noise_attack_keeps_geometry() {
    let dir = embedded();
    ok(dir.path(), &["attack", "--input", "s.ply", "--out", "n.ply", "--mode", "noise", "--sigma", "0.001", "--seed", "2"]);
    let a = read_scene(dir.path().join("s.ply")).unwrap();
    let b = read_scene(dir.path().join("n.ply")).unwrap();
    assert!(a.non_sh_bits_eq(&b));
    assert_ne!(save_scene(&a).unwrap(), save_scene(&b).unwrap());
    let bad = splatstego(dir.path(), &["attack", "--input", "s.ply", "--out", "q.ply", "--mode", "seq-prune", "--ratio", "1.5"]);
    assert!(!bad.status.success());
}

#[test]
fn sweep_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(
        dir.path(),
        &[
            "sweep", "--kind", "prune", "--count", "600", "--seeds", "1", "--ratio", "0.1", "--width", "32", "--height", "32",
            "--out", "t.tsv",
        ],
    );
    assert!(table.starts_with("seed\tmode\tratio"));
    assert_eq!(table.lines().count(), 3);
    assert_eq!(std::fs::read_to_string(dir.path().join("t.tsv")).unwrap(), table);
    let noise = ok(
        dir.path(),
        &["sweep", "--kind", "noise", "--count", "600", "--seeds", "1", "--sigma", "0.01", "--gamma", "24", "--width", "32", "--height", "32"],
    );
    assert_eq!(noise.lines().count(), 2);
}
