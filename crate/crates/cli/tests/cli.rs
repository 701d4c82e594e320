use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sparc_core::potential::{capacity, r_it_inf, r_vamp_inf};
use sparc_core::{Ensemble, SeParams, StateEvolution};

fn sparc(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SPARC_OUT_DIR")
        .output()
        .expect("spawn sparc")
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = sparc(out, args);
    assert!(
        o.status.success(),
        "sparc {args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn asymptotic_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["asymptotic", "--snr", "7,15", "--format", "json"]);
    let rows = json(&dir.path().join("asymptotic.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let snr = row["snr"].as_f64().unwrap();
        let e = match row["ensemble"].as_str().unwrap() {
            "gaussian" => Ensemble::Gaussian,
            "row-orthogonal" => Ensemble::RowOrthogonal,
            "discrete" => Ensemble::DiscreteTri,
            other => panic!("unexpected ensemble {other}"),
        };
        // JSON text round trips to within an ulp.
        let close = |key: &str, want: f64| {
            let got = row[key].as_f64().unwrap();
            assert!((got - want).abs() <= 1e-14 * want.abs(), "{key}: {got} vs {want}");
        };
        close("capacity", capacity(snr));
        close("r_vamp_inf", r_vamp_inf(snr, &e).unwrap());
        close("r_it_inf", r_it_inf(snr, &e).unwrap());
    }
    let manifest = json(&dir.path().join("asymptotic.manifest.json"));
    assert_eq!(manifest["command"], "asymptotic");
    assert_eq!(manifest["outputs"][0], "asymptotic.json");
}

#[test]
fn thresholds_follow_the_schema_and_state_evolution() {
    let dir = tempfile::tempdir().unwrap();
    let samples = 20_000usize;
    let common = ["--snr", "15", "--mc-samples", "20000", "--tol", "5e-3", "--grid", "64"];
    ok(
        dir.path(),
        &[&["thresholds", "--B", "4", "--format", "json"][..], &common].concat(),
    );
    let rows = json(&dir.path().join("thresholds.json"));
    let schema = json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/thresholds.schema.json"));
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&rows).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");

    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1]["B"].is_null());
    let r_vamp = rows[0]["r_vamp"].as_f64().unwrap();
    let r_it = rows[0]["r_it"].as_f64().unwrap();
    assert!(r_vamp <= r_it && r_it <= 2.0, "{r_vamp} {r_it}");

    // SE from the top lands near zero below the threshold and far from it above.
    let end = |rate: f64| {
        let mut p = SeParams::new(4, 15.0, rate, Ensemble::Gaussian);
        p.mc_samples = samples;
        StateEvolution::new(p).unwrap().run_se().unwrap().fixed_point
    };
    let (below, above) = (end(r_vamp - 0.02), end(r_vamp + 0.02));
    assert!(below < 0.05 && above > 0.2, "E* {below} at r_vamp - 0.02, {above} above");

    // Same seed, same table.
    let again = tempfile::tempdir().unwrap();
    ok(
        again.path(),
        &[&["thresholds", "--B", "4", "--format", "json"][..], &common].concat(),
    );
    assert_eq!(
        fs::read(dir.path().join("thresholds.json")).unwrap(),
        fs::read(again.path().join("thresholds.json")).unwrap()
    );
}

fn decode_files(out: &Path, threads: &str) -> Vec<Vec<u8>> {
    ok(
        out,
        &[
            "decode", "--ensemble", "gaussian", "--L", "32", "--B", "4", "--R-min", "1.0", "--R-max", "1.4",
            "--R-steps", "2", "--trials", "3", "--seed", "5", "--threads", threads,
        ],
    );
    ["decode_trials.csv", "decode_iterations.csv", "decode_summary.csv"]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect()
}

#[test]
fn decode_is_deterministic_across_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = decode_files(a.path(), "1");
    let two = decode_files(b.path(), "3");
    assert_eq!(one, two);
    let trials = String::from_utf8(one[0].clone()).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 3);
    assert!(trials.starts_with("rate,realized_rate,trial,seed,"));
    let manifest = json(&a.path().join("decode.manifest.json"));
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn invalid_configurations_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["decode", "--R-min", "1", "--R-max", "2", "--R-steps", "0"],
        &["decode", "--R", "1", "--snr", "-3"],
        &["decode", "--R", "1", "--B", "1"],
        &["se", "--R", "0.1", "--B", "4"],
        &["decode", "--R", "1", "--bogus"],
    ];
    for args in cases {
        let o = sparc(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!dir.path().join("decode.manifest.json").exists());
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested");
    let o = Command::new(env!("CARGO_BIN_EXE_sparc"))
        .args(["asymptotic", "--snr", "15"])
        .env("SPARC_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("asymptotic.csv").exists());
    assert!(target.join("asymptotic.manifest.json").exists());
}

#[test]
fn se_and_potential_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--B", "4", "--R", "1.2", "--snr", "15", "--mc-samples", "5000"];
    ok(dir.path(), &[&["se", "--iterations", "10"][..], &args].concat());
    ok(dir.path(), &[&["potential", "--grid", "32"][..], &args].concat());
    let traj = fs::read_to_string(dir.path().join("se_trajectories.csv")).unwrap();
    assert!(traj.lines().any(|l| l.contains(",vamp,10,")));
    let fixed = fs::read_to_string(dir.path().join("se_fixed_points.csv")).unwrap();
    let e_star: f64 = fixed.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(e_star < 1e-2, "{e_star}");
    let curve = fs::read_to_string(dir.path().join("potential_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 32);
    assert!(dir.path().join("potential_maxima.csv").exists());
}

#[test]
fn spectrum_check_on_sampled_and_custom_spectra() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["spectrum-check", "--ensemble", "row-orthogonal", "--L", "128", "--B", "4", "--R", "1"],
    );
    let text = fs::read_to_string(dir.path().join("spectrum_check.csv")).unwrap();
    let ks: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(ks < 1e-12, "{ks}");

    let file = dir.path().join("spectrum.json");
    fs::write(
        &file,
        r#"{"support": [{"location": 0.5, "mass": 0.5}, {"location": 1.5, "mass": 0.5}],
            "restricted": [{"location": 0.5, "mass": 0.5}, {"location": 1.5, "mass": 0.5}]}"#,
    )
    .unwrap();
    let o = ok(
        dir.path(),
        &["spectrum-check", "--spectrum-file", file.to_str().unwrap(), "--B", "4", "--R", "1"],
    );
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("increasing on [-30, -0.1]: true"), "{stdout}");
    assert!(stdout.contains("<= 1/(1 - z): true"), "{stdout}");
    ok(dir.path(), &["asymptotic", "--snr", "15", "--spectrum-file", file.to_str().unwrap()]);
    let rows = fs::read_to_string(dir.path().join("asymptotic.csv")).unwrap();
    assert!(rows.lines().any(|l| l.starts_with("custom,")));

    fs::write(&file, r#"{"support": [{"location": 1.0, "mass": 1.0}], "extra": 1}"#).unwrap();
    let o = sparc(dir.path(), &["spectrum-check", "--spectrum-file", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cached_operators_are_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = [
        "decode", "--ensemble", "row-orthogonal", "--L", "16", "--B", "4", "--R", "1", "--seed", "3",
        "--cache-dir", cache.to_str().unwrap(),
    ];
    ok(dir.path(), &args);
    let first = fs::read(dir.path().join("decode_trials.csv")).unwrap();
    let files: Vec<_> = fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1);
    assert_eq!(files[0].extension().unwrap(), "sparcop");

    ok(dir.path(), &args);
    assert_eq!(first, fs::read(dir.path().join("decode_trials.csv")).unwrap());

    // A damaged entry is read, and rejected, rather than silently resampled.
    let bytes = fs::read(&files[0]).unwrap();
    fs::write(&files[0], &bytes[..bytes.len() / 2]).unwrap();
    let o = sparc(dir.path(), &args);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncated"));
}
