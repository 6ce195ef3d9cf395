use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn odm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odm")).args(args).output().expect("run odm")
}

fn config(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    path.to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_writes_one_row_per_bit() {
    let dir = tempfile::tempdir().unwrap();
    for (cfg, rows) in [("reference_delta004.json", 50), ("reference_delta002.json", 100)] {
        let out_dir = dir.path().join(cfg);
        let out = odm(&["simulate", "--config", &config(cfg), "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert_eq!(data_rows(&out_dir.join("trace.csv")).len(), rows);
        let report: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["bits"], rows);
        assert_eq!(report["max_decoder_divergence"], 0.0);
    }
}

#[test]
fn unwritable_output_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "not a directory").unwrap();
    let out = odm(&["simulate", "--out", blocker.join("run").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("error"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn verify_sine_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = odm(&["verify", "--config", &config("sine_steady_state.json"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no violations"));
}

#[test]
fn forged_trace_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = config("sine_steady_state.json");
    assert_eq!(code(&odm(&["simulate", "--config", &cfg, "--out", d])), 0);

    let trace = dir.path().join("trace.csv");
    let text = fs::read_to_string(&trace).unwrap();
    let forged: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            // row for k = 200: triple the step size, well after settling
            if i == 201 {
                let mut cells: Vec<String> = line.split(',').map(str::to_owned).collect();
                cells[5] = (cells[5].parse::<f64>().unwrap() * 3.0).to_string();
                cells.join(",")
            } else {
                line.to_owned()
            }
        })
        .collect();
    let forged_path = dir.path().join("forged.csv");
    fs::write(&forged_path, forged.join("\n") + "\n").unwrap();

    let out = odm(&["verify", "--config", &cfg, "--out", d, "--trace", forged_path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("SlopeSet"));

    let out = odm(&["verify", "--config", &cfg, "--out", d, "--trace", trace.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn small_floor_warns_but_passes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--config", &config("sine_steady_state.json"), "--out", dir.path().to_str().unwrap()];
    let out = odm(&[&args[..], &["--mbar", "1", "--m0", "1"]].concat());
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("warning") && stderr(&out).contains("Mbar >= 2D"));
}

#[test]
fn acquisition_overrun_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("ramp_acquisition.json");
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&odm(&["verify", "--config", &cfg, "--out", d])), 0);
    let out = odm(&["verify", "--config", &cfg, "--out", d, "--y0", "100"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Acquisition"));
}

#[test]
fn compare_reports_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let out = odm(&["compare", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["recovery_steps_modified"], 22);
    assert!(report["recovery_steps_baseline"].is_null());
    assert_eq!(data_rows(&dir.path().join("trace_jayant.csv")).len(), 50);
}

#[test]
fn compare_without_jump_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flat.json");
    fs::write(
        &cfg,
        r#"{"signal":{"kind":"constant","level":1},
            "codec":{"y0":0,"M0":0.08,"Mbar":0.08,"a":1.5,"delta":0.04,"rule":"modified"},
            "horizon":2,"comparison":{"baseline":"jayant","proximity_band_multiplier":1}}"#,
    )
    .unwrap();
    let out = odm(&["compare", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn bad_flags_and_configs_are_usage_errors() {
    assert_eq!(code(&odm(&["simulate", "--rule", "linear"])), 2);
    assert_eq!(code(&odm(&["simulate", "--a", "0.5"])), 2);
    assert_eq!(code(&odm(&["simulate", "--config", "/nonexistent/config.json"])), 2);
}

const HAND: [&str; 8] = ["encode", "--y0", "0", "--m0", "1", "--mbar", "1", "--a"];

fn encode(input: &Path, output: &Path) -> Output {
    odm(&[&HAND[..], &["2", "--delta", "1", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap()]].concat())
}

#[test]
fn encode_and_decode_the_hand_trace() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("x.csv");
    fs::write(&samples, format!("x\n{}", "10\n".repeat(10))).unwrap();
    let stream = dir.path().join("x.odm");
    assert_eq!(code(&encode(&samples, &stream)), 0);
    let text = fs::read_to_string(&stream).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ODM/1");
    assert_eq!(lines[2], "1111001101");

    let decoded = dir.path().join("y.csv");
    let out = odm(&["decode", "--input", stream.to_str().unwrap(), "--output", decoded.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rows = data_rows(&decoded);
    let y: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    let m: Vec<&str> = rows.iter().map(|r| r[5].as_str()).collect();
    assert_eq!(y, ["0", "1", "3", "7", "15", "11", "7", "9", "11", "10"]);
    assert_eq!(m, ["1", "2", "4", "8", "4", "4", "2", "2", "1", "1"]);
}

#[test]
fn encode_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let stream = dir.path().join("empty.odm");
    assert_eq!(code(&encode(&empty, &stream)), 0);
    let text = fs::read_to_string(&stream).unwrap();
    assert!(text.contains("\"count\":0"), "{text}");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x\n1\nnan\n").unwrap();
    let out = encode(&bad, &dir.path().join("bad.odm"));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
    assert!(!dir.path().join("bad.odm").exists());

    let truncated = dir.path().join("truncated.odm");
    fs::write(&truncated, text.replace("\"count\":0", "\"count\":3")).unwrap();
    let out = odm(&["decode", "--input", truncated.to_str().unwrap(), "--output", dir.path().join("t.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = odm(&["simulate", "--config", &config("erasure.json"), "--seed", seed, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        (fs::read(out_dir.join("trace.csv")).unwrap(), fs::read(out_dir.join("report.json")).unwrap())
    };
    let first = run("a", "11");
    assert_eq!(first, run("b", "11"));
    assert_ne!(first.0, run("c", "12").0);
    let report: serde_json::Value = serde_json::from_slice(&first.1).unwrap();
    assert_eq!(report["channel"]["seed"], 11);
}
