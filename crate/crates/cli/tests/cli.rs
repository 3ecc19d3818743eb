use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn protect(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protect"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = protect(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn err(dir: &Path, args: &[&str]) -> String {
    let out = protect(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn corpus(dir: &Path, n: &str, size: &str) {
    ok(dir, &["synth", "--n", n, "--size", size, "--out", "corpus", "--seed", "3"]);
}

#[test]
fn full_pipeline_writes_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    corpus(d, "4", "32");
    ok(d, &["optimize-global", "--corpus", "corpus", "--out", "glob", "--steps", "20"]);
    ok(d, &[
        "train-generator", "--corpus", "corpus", "--out", "gen", "--global", "glob/global.ckpt",
        "--steps", "10", "--base-width", "8",
    ]);
    let stdout = ok(d, &[
        "protect", "--corpus", "corpus", "--out", "prot", "--generator", "gen/generator.ckpt",
        "--global", "glob/global.ckpt",
    ]);
    assert!(stdout.contains("mean_output_mse"));
    for dir in ["corpus", "glob", "gen", "prot"] {
        let m = fs::read_to_string(d.join(dir).join("manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m).unwrap();
        assert!(v["outputs"].as_array().is_some_and(|o| !o.is_empty()), "{dir}");
    }
    assert_eq!(fs::read_dir(d.join("prot")).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "ppm")
    }).count(), 4);
    let log = fs::read_to_string(d.join("gen/runlog.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 10);
}

#[test]
fn zero_steps_attack_returns_the_input() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    corpus(d, "2", "16");
    ok(d, &["attack", "ipgd", "--corpus", "corpus", "--out", "p", "--steps", "0"]);
    for name in ["img_000.ppm", "img_001.ppm"] {
        assert_eq!(fs::read(d.join("corpus").join(name)).unwrap(), fs::read(d.join("p").join(name)).unwrap());
    }
}

#[test]
fn roundtrip_of_constant_image_at_high_quality() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let mut bytes = b"P6\n16 16\n255\n".to_vec();
    bytes.extend(std::iter::repeat_n(128u8, 16 * 16 * 3));
    fs::write(d.join("flat.ppm"), bytes).unwrap();
    let out = ok(d, &["jpeg", "roundtrip", "--input", "flat.ppm", "--quality", "99"]);
    let mse: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("mse = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(mse <= 1.0, "{out}");
}

#[test]
fn invalid_settings_are_rejected_with_a_reason() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    corpus(d, "2", "16");
    let base = ["attack", "ifgsm", "--corpus", "corpus", "--out", "o"];
    let with = |extra: &[&'static str]| [&base[..], extra].concat();
    assert!(err(d, &with(&["--epsilon=-0.1"])).contains("epsilon"));
    assert!(err(d, &with(&["--jpeg", "100"])).contains("quality"));
    assert!(err(d, &with(&["--norm", "l3"])).contains("l3"));
    assert!(err(d, &with(&["--round-mode", "floor"])).contains("floor"));
    assert!(err(d, &with(&["--tasks", "swap"])).contains("swap"));
    fs::write(d.join("bad.cfg"), "epsilon = 0.03\nlearning_rate = 1\n").unwrap();
    assert!(err(d, &with(&["--config", "bad.cfg"])).contains("learning_rate"));
    err(d, &with(&["--unknown-flag"]));
    assert!(err(d, &["attack", "ifgsm", "--corpus", "missing", "--out", "o"]).contains("missing"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    corpus(d, "2", "16");
    fs::write(d.join("run.cfg"), "# test config\nepsilon = 0.02\nsteps = 3\n").unwrap();
    ok(d, &["--config", "run.cfg", "attack", "ipgd", "--corpus", "corpus", "--out", "o", "--steps", "2"]);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["epsilon"], "0.02");
    assert_eq!(m["config"]["steps"], "2");
}

#[test]
fn generator_needs_a_global_perturbation_unless_image_only() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    corpus(d, "2", "16");
    assert!(err(d, &["train-generator", "--corpus", "corpus", "--out", "g", "--steps", "1"]).contains("--global"));
    ok(d, &[
        "train-generator", "--corpus", "corpus", "--out", "g", "--steps", "2", "--image-only",
        "--base-width", "8",
    ]);
}

#[test]
fn runs_are_bitwise_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    corpus(d, "4", "16");
    for out in ["a", "b"] {
        ok(d, &[
            "train-generator", "--corpus", "corpus", "--out", out, "--image-only", "--steps", "5",
            "--base-width", "8", "--jpeg", "random", "--seed", "11",
        ]);
    }
    for f in ["generator.ckpt", "generator.bin", "runlog.jsonl", "summary.txt", "manifest.json"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
}
