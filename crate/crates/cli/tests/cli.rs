use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn condist(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condist"))
        .args(args)
        .env("CONDIST_OUT", out)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn kernels_check_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = condist(&["kernels-check"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["epanechnikov", "biweight", "triangular", "uniform"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn negative_bandwidth_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = condist(&["estimate", "--config", &config("bad.json")], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("h1"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(condist(&["bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(condist(&[], dir.path()).status.code(), Some(1));
    assert_eq!(condist(&["rates"], dir.path()).status.code(), Some(1));
    let o = condist(&["rates", "--config", &config("rates_dgpA.json"), "--threads", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(condist(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn unreadable_or_unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(condist(&["bias", "--config", missing.to_str().unwrap()], dir.path()).status.code(), Some(1));
    let path = dir.path().join("h3.json");
    fs::write(&path, r#"{"dgp": "A", "h3": 0.1}"#).unwrap();
    let o = condist(&["bias", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("h3"), "{}", stderr(&o));
}

#[test]
fn undersmoothing_warning_for_clt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clt.json");
    fs::write(&path, r#"{"dgp": "A", "n": [200], "bandwidth": {"gamma": 0.1}, "grid": {"m_y": 21, "m_x": 6}}"#).unwrap();
    let o = condist(&["clt", "--config", path.to_str().unwrap(), "--smoke"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("√n h₁² → 0"), "{}", stderr(&o));
}

#[test]
fn unusable_out_dir_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocked = dir.path().join("file");
    fs::write(&blocked, "").unwrap();
    let out = blocked.join("sub");
    let o = condist(&["bias", "--config", &config("bias_dgpA.json"), "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn failure_while_writing_reports_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("bias.json")).unwrap();
    let o = condist(&["bias", "--config", &config("bias_dgpA.json")], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn repeated_rates_runs_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = condist(&["rates", "--config", &config("rates_dgpA.json"), "--seed", "42", "--smoke"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["rates-smoothed.json", "rates-smoothed.csv", "rates-smoothed_plot.csv", "rates-unsmoothed.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn shipped_configs_round_trip_at_smoke_scale() {
    let cases = [
        ("estimate", "estimate_dgpB.json", vec!["estimate.json", "estimate_sample.csv", "estimate_surface_smoothed.csv"]),
        ("estimate", "estimate_dgpC.json", vec!["estimate.json", "estimate_surface_unsmoothed.csv"]),
        ("bias", "bias_dgpA.json", vec!["bias.json", "bias.csv"]),
        ("rates", "rates_dgpA.json", vec!["rates-smoothed.json", "rates-unsmoothed.csv"]),
        ("alr", "alr_dgpA.json", vec!["alr.json"]),
        ("equicont", "equicont_dgpA.json", vec!["equicont.json"]),
        ("clt", "clt_dgpA.json", vec!["clt.json"]),
    ];
    for (cmd, file, outputs) in cases {
        let dir = tempfile::tempdir().unwrap();
        let o = condist(&[cmd, "--config", &config(file), "--smoke"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd} {file}: {}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).lines().count() >= 1);
        for out in outputs {
            let path = dir.path().join(out);
            let text = fs::read_to_string(&path).unwrap_or_else(|_| panic!("{cmd} {file}: missing {out}"));
            assert!(!text.contains('\r'));
            if out.ends_with(".json") {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                for key in ["experiment", "config", "records", "aggregates", "summary", "notes"] {
                    assert!(v.get(key).is_some(), "{out} lacks {key}");
                }
                if cmd != "bias" && cmd != "estimate" {
                    let n = v["config"]["n"].as_array().unwrap().len();
                    assert_eq!(v["records"].as_array().unwrap().len(), n * 5, "{out}");
                    assert_eq!(v["summary"]["excluded"], 0.0, "{out}");
                }
            }
        }
    }
}

#[test]
fn fixtures_command_matches_checked_in_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = condist(&["fixtures"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let written = fs::read_to_string(dir.path().join("oracle.json")).unwrap();
    let checked = fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/oracle.json")).unwrap();
    assert_eq!(written, checked);
}
