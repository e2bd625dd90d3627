use std::path::PathBuf;
use std::process::Command;

use fell_cli::{cmd_jcheck, cmd_norm, cmd_validate, cmd_zwindow, generate, parse_coeffs, KindArg, RunConfig};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn fellj(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fellj")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn validate_exit_codes() {
    let cfg = RunConfig::default();
    for good in ["p2.json", "p2_groupoid.json", "p2_mixed.json", "z2.json", "klein_twist.json", "z2_swap.json"] {
        assert_eq!(cmd_validate(&fixture(good), &cfg).code, 0, "{good}");
    }
    assert_eq!(cmd_validate(&fixture("p2_corrupt_compose.json"), &cfg).code, 1);
    assert_eq!(cmd_validate(&fixture("z2_bad_twist.json"), &cfg).code, 1);
    assert_eq!(cmd_validate(&fixture("malformed.json"), &cfg).code, 2);
    assert_eq!(cmd_validate(&fixture("missing.json"), &cfg).code, 2);
}

#[test]
fn norms_of_shipped_sections() {
    let cfg = RunConfig::default();
    let p2 = cmd_norm(&fixture("p2.json"), &fixture("p2_ones.json"), &cfg);
    assert_eq!(p2.code, 0);
    let v = json(&p2.output);
    assert_eq!(v["reduced_norm"], 2.0);
    assert_eq!(v["sup_norm"], 1.0);

    let units = json(&cmd_norm(&fixture("p2.json"), &fixture("p2_units.json"), &cfg).output);
    assert_eq!((units["reduced_norm"].as_f64(), units["sup_norm"].as_f64()), (Some(1.0), Some(1.0)));

    let z2 = json(&cmd_norm(&fixture("z2.json"), &fixture("z2_ones.json"), &cfg).output);
    assert_eq!((z2["reduced_norm"].as_f64(), z2["sup_norm"].as_f64()), (Some(2.0), Some(1.0)));
    assert_eq!(z2["unit_norms"]["0"], 2.0);
}

#[test]
fn norm_rejects_sections_of_the_wrong_shape() {
    let out = cmd_norm(&fixture("p2_mixed.json"), &fixture("p2_ones.json"), &RunConfig::default());
    assert_eq!(out.code, 2);
}

#[test]
fn jcheck_fixtures_pass_and_corrupted_bundles_are_refused() {
    let cfg = RunConfig::default();
    for name in ["p2.json", "p2_mixed.json", "z2.json", "klein_twist.json", "z2_swap.json"] {
        let out = cmd_jcheck(&fixture(name), 2, &cfg);
        assert_eq!(out.code, 0, "{name}: {}", out.output);
        assert_eq!(json(&out.output)["all_pass"], true);
    }
    assert_eq!(cmd_jcheck(&fixture("z2_bad_twist.json"), 2, &cfg).code, 1);
    assert_eq!(cmd_jcheck(&fixture("p2_corrupt_compose.json"), 2, &cfg).code, 1);
}

#[test]
fn jcheck_without_random_sections_ignores_the_seed() {
    let a = cmd_jcheck(&fixture("z2_swap.json"), 0, &RunConfig { seed: 1, ..RunConfig::default() });
    let b = cmd_jcheck(&fixture("z2_swap.json"), 0, &RunConfig { seed: 2, ..RunConfig::default() });
    assert_eq!(a, b);
}

#[test]
fn zwindow_table() {
    let out = cmd_zwindow("-1:1,1:1", "4,16,64", None, &RunConfig::default());
    assert_eq!(out.code, 0);
    let rows = json(&out.output)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 3);
    for (row, n) in rows.iter().zip([4.0f64, 16.0, 64.0]) {
        let want = 2.0 * (std::f64::consts::PI / (2.0 * n + 2.0)).cos();
        assert!((row["window_norm"].as_f64().unwrap() - want).abs() < 1e-11);
    }
    assert_eq!(cmd_zwindow("0:1:x", "1", None, &RunConfig::default()).code, 2);
    assert_eq!(cmd_zwindow("3:1", "1", None, &RunConfig::default()).code, 2);
    assert!(parse_coeffs("0:1,0:2").is_err());
}

// Digests recorded from the first run of `fellj randgen --kind <k> --count 3 --seed 42`.
const GOLDEN: [(KindArg, [&str; 3]); 3] = [
    (
        KindArg::Trivial,
        [
            "a3da4b3d8b07b1903a9e09cb9c2c07cc67e8a6a00f7d52d8ff32ea426f867792",
            "e61417ab3511d6be20487dd9b05f587daa21ad73d1dd04ae26745586ea40205f",
            "dfefef7f2a42b7d6d69b297b6bf5ad740dfbcd53b5909ee81262ee0f89c1b33c",
        ],
    ),
    (
        KindArg::Twist,
        [
            "39a7badcf3f894de04532eb81375366e63f038a53d5b1d6634f053b2c501afee",
            "80dc0e2272188dc7339a0531ff04a0cc86548d5010d8581a1c84c4e49c2e1b62",
            "190a91d97697d845f7431ee0e20bd96a57808f18d983d6d03d2eb321d3a57457",
        ],
    ),
    (
        KindArg::Crossed,
        [
            "f8f64474cabf1c0d0052e00e52d8b86c1f58fee8746f68d2d737ec50cc972c42",
            "b94f733a1f29b092d84d12104ed5e34b9b14da5289673a98828d9bb9b0f05901",
            "f9c33a75611dab8c2f107dd6a9f21813989c723070f9e8571cab4330eb12b6b1",
        ],
    ),
];

#[test]
fn randgen_output_matches_golden_digests() {
    for (kind, digests) in GOLDEN {
        let files = generate(kind, 12, 3, 42).unwrap();
        for ((_, text), want) in files.iter().zip(digests) {
            let got: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
            assert_eq!(got, want, "{kind:?}");
        }
    }
}

#[test]
fn randgen_files_validate_and_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let (code, _, err) = fellj(&["randgen", "--count", "6", "--seed", "9", "--out", d.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in names {
        let (x, y) = (a.join(&name), b.join(&name));
        assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
        let (code, out, _) = fellj(&["validate", x.to_str().unwrap()]);
        assert_eq!(code, 0, "{out}");
    }
}

#[test]
fn binary_exit_codes_and_output_file() {
    let (code, out, _) = fellj(&["validate", fixture("p2.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["valid"], true);
    assert_eq!(fellj(&["validate", fixture("malformed.json").to_str().unwrap()]).0, 2);
    assert_eq!(fellj(&["validate", fixture("p2_corrupt_compose.json").to_str().unwrap()]).0, 1);
    assert_eq!(fellj(&["bogus"]).0, 2);
    assert_eq!(fellj(&["--tol", "-1", "validate", fixture("p2.json").to_str().unwrap()]).0, 2);

    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("norm.csv");
    let (code, out, _) = fellj(&[
        "norm",
        fixture("z2.json").to_str().unwrap(),
        fixture("z2_ones.json").to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!((code, out.as_str()), (0, ""));
    let written = std::fs::read_to_string(target).unwrap();
    assert!(written.contains("reduced_norm,2\n"), "{written}");
}

#[test]
fn convolve_squares_the_swap() {
    let (code, out, _) = fellj(&[
        "convolve",
        fixture("z2.json").to_str().unwrap(),
        fixture("z2_ones.json").to_str().unwrap(),
        fixture("z2_ones.json").to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["values"]["0"][0][0], 2.0);
    assert_eq!(v["values"]["1"][0][0], 2.0);
}
