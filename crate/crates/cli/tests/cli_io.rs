//! Exit-code contract and output-format tests for the CLI:
//! 0 success, 1 configuration/usage errors, 2 strict-mode check failures,
//! 3 numeric failures; JSON/CSV/PGM shapes; seed and run-to-run determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semigroup_dim::config::RawConfig;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_semigroup-dim")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn CLI")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("semigroup-dim"));

    let version = run(&["--version"]);
    assert_eq!(code(&version), 0);
    assert!(String::from_utf8_lossy(&version.stdout).contains(env!("CARGO_PKG_VERSION")));

    let sub_help = run(&["dim", "--help"]);
    assert_eq!(code(&sub_help), 0);
}

#[test]
fn usage_errors_exit_one() {
    // Unknown flag.
    assert_eq!(code(&run(&["dim", "--config", "x.json", "--bogus"])), 1);
    // Missing required --config.
    assert_eq!(code(&run(&["dim"])), 1);
    // Unparseable flag value.
    let z2 = config("z2.json");
    assert_eq!(
        code(&run(&["dim", "--config", z2.to_str().unwrap(), "--depth", "many"])),
        1
    );
    // Unknown subcommand.
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();

    // Nonexistent file.
    assert_eq!(code(&run(&["dim", "--config", "/nonexistent.json"])), 1);

    // Broken JSON.
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"generators\": [").unwrap();
    assert_eq!(code(&run(&["dim", "--config", broken.to_str().unwrap()])), 1);

    // Unknown key (typo'd field).
    let typo = dir.path().join("typo.json");
    std::fs::write(
        &typo,
        r#"{"generators": [{"num": [[0,0],[0,0],[1,0]], "dem": [[1,0]]}]}"#,
    )
    .unwrap();
    assert_eq!(code(&run(&["dim", "--config", typo.to_str().unwrap()])), 1);

    // Constant generator: structurally valid JSON, invalid system.
    let constant = dir.path().join("constant.json");
    std::fs::write(&constant, r#"{"generators": [{"num": [[1,0]]}]}"#).unwrap();
    assert_eq!(
        code(&run(&["dim", "--config", constant.to_str().unwrap()])),
        1
    );

    // Pressure with an empty grid.
    let z2 = config("z2.json");
    assert_eq!(
        code(&run(&[
            "pressure",
            "--config",
            z2.to_str().unwrap(),
            "--t-min",
            "2.0",
            "--t-max",
            "1.0",
        ])),
        1
    );
}

#[test]
fn strict_check_failure_exits_two() {
    // Gasket generators with an open set the inverse branches leave: the
    // containment half of the condition fails.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad_open_set.json");
    std::fs::write(
        &bad,
        r#"{
          "generators": [
            { "num": [[-1.0, 0.0], [2.0, 0.0]] },
            { "num": [[0.5, -0.8660254037844386], [2.0, 0.0]] },
            { "num": [[0.5, 0.8660254037844386], [2.0, 0.0]] }
          ],
          "open_set": { "kind": "disk", "center": [0.0, 0.0], "radius": 0.4 }
        }"#,
    )
    .unwrap();
    let args_common = [
        "check",
        "--config",
        bad.to_str().unwrap(),
        "--method",
        "tree",
        "--cloud-depth",
        "5",
    ];

    // Without --strict the failure is reported but the exit code stays 0.
    let soft = run(&args_common);
    assert_eq!(code(&soft), 0);
    assert!(String::from_utf8_lossy(&soft.stdout).contains("FAIL"));

    let mut strict_args = args_common.to_vec();
    strict_args.push("--strict");
    assert_eq!(code(&run(&strict_args)), 2);
}

#[test]
fn numeric_failures_exit_three() {
    // z² + 1/4: the parabolic fixed point is indifferent and ∞ attracts, so
    // no generator offers a repelling fixed point to anchor the tree.
    let dir = tempfile::tempdir().unwrap();
    let parabolic = dir.path().join("parabolic.json");
    std::fs::write(
        &parabolic,
        r#"{"generators": [{"num": [[0.25, 0.0], [0.0, 0.0], [1.0, 0.0]]}]}"#,
    )
    .unwrap();
    let out = run(&["dim", "--config", parabolic.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn json_reports_carry_reproducibility_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dim.json");
    let status = run(&[
        "dim",
        "--config",
        config("z2.json").to_str().unwrap(),
        "--depth",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&status), 0);

    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["meta"]["tool"], "semigroup-dim");
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    let hash = v["meta"]["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert!(v["report"]["dimension"]["delta"].is_f64());
    assert!(v["report"]["entropy"]["entropy"].is_f64());
}

#[test]
fn csv_files_have_comments_header_and_lf_endings() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pressure.csv");
    run(&[
        "pressure",
        "--config",
        config("z2.json").to_str().unwrap(),
        "--depth",
        "6",
        "--t-min",
        "0.5",
        "--t-max",
        "1.5",
        "--steps",
        "5",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'), "CRLF leaked into CSV");
    assert!(text.ends_with('\n'));

    let mut lines = text.lines().peekable();
    let mut saw_hash = false;
    while let Some(l) = lines.peek() {
        if l.starts_with('#') {
            saw_hash |= l.starts_with("# config_hash=");
            lines.next();
        } else {
            break;
        }
    }
    assert!(saw_hash, "missing config_hash comment");
    assert_eq!(lines.next(), Some("t,pressure,depth,extrapolated"));
    for row in lines {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4, "row {row:?}");
        assert!(fields[0].parse::<f64>().is_ok());
        assert!(fields[1].parse::<f64>().is_ok());
    }
}

#[test]
fn config_round_trips_through_serialization() {
    for name in [
        "z2.json",
        "gasket.json",
        "annulus.json",
        "quad_affine.json",
        "cubic_quad.json",
        "osc_cubic_quad.json",
        "gasket_triangle.json",
    ] {
        let raw = RawConfig::from_path(&config(name)).unwrap();
        let once = serde_json::to_string(&raw).unwrap();
        let reparsed = RawConfig::from_json(&once).unwrap();
        let twice = serde_json::to_string(&reparsed).unwrap();
        assert_eq!(once, twice, "{name} does not round-trip");
        assert_eq!(raw.content_hash(), reparsed.content_hash());
    }
}

#[test]
fn walk_outputs_are_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut clouds = Vec::new();
    for (tag, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let csv = dir.path().join(format!("cloud_{tag}.csv"));
        run(&[
            "julia",
            "--config",
            config("gasket.json").to_str().unwrap(),
            "--method",
            "walk",
            "--samples",
            "2000",
            "--seed",
            seed,
            "--csv",
            csv.to_str().unwrap(),
        ]);
        clouds.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(clouds[0], clouds[1], "same seed must reproduce bytes");
    assert_ne!(clouds[0], clouds[2], "different seed should move points");
}

#[test]
fn render_emits_ascii_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("set.pgm");
    run(&[
        "render",
        "--config",
        config("z2.json").to_str().unwrap(),
        "--method",
        "walk",
        "--samples",
        "3000",
        "--radius",
        "1.5",
        "--resolution",
        "48",
        "--pgm",
        pgm.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&pgm).unwrap();
    assert!(text.starts_with("P2\n"), "not an ASCII PGM");
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    // P2, dimensions, maxval, then raster rows.
    let dims: Vec<usize> = data[1]
        .split_whitespace()
        .map(|w| w.parse().unwrap())
        .collect();
    assert_eq!(dims, vec![48, 48]);
    assert_eq!(data.len(), 3 + 48);
}
