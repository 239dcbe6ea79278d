use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_bergman-lab");

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("BERGMAN_LAB_OUT")
        .output()
        .expect("binary runs")
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("wall_clock_seconds");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn help_text_matches_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let commands = [
        "",
        "verify",
        "curvature",
        "moments",
        "kernel-eval",
        "repcoords",
        "support-reach",
        "examples",
    ];
    for cmd in commands {
        let mut args: Vec<&str> = cmd.split_whitespace().collect();
        args.push("--help");
        let out = Command::new(BIN).args(&args).output().unwrap();
        assert!(out.status.success(), "{cmd} --help");
        let text = String::from_utf8(out.stdout).unwrap();
        let file = golden.join(format!("{}.txt", if cmd.is_empty() { "bergman-lab" } else { cmd }));
        if update {
            std::fs::create_dir_all(&golden).unwrap();
            std::fs::write(&file, &text).unwrap();
        } else {
            let want = std::fs::read_to_string(&file)
                .unwrap_or_else(|_| panic!("missing {}; rerun with UPDATE_GOLDEN=1", file.display()));
            assert_eq!(text, want, "help for `{cmd}` changed; rerun with UPDATE_GOLDEN=1");
        }
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["curvature", "--no-such-flag"],
        vec!["--tol", "bogus=1", "curvature", "--samples", "2"],
        vec!["--tol", "closed-form", "curvature", "--samples", "2"],
        vec!["--tol", "closed-form=-1", "curvature", "--samples", "2"],
        vec!["--seed", "0xZZ", "curvature"],
        vec!["verify", "--only", "no-such-scenario"],
        vec!["curvature", "--n", "0"],
    ] {
        let out = run(dir.path(), &args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = run(dir.path(), &["verify", "--scenario", "/nonexistent/suite.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_file_without_provenance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    std::fs::write(
        &file,
        r#"[{"name":"x","check":{"kind":"stirling-limit","mu":2.0,"m":200},
            "expected":[{"statistic":"gap","relation":"at-most","value":0.02}]}]"#,
    )
    .unwrap();
    let out = run(dir.path(), &["verify", "--scenario", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("provenance"), "{err}");
}

#[test]
fn passing_subset_exits_zero_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let names = [
        "ball-curvature-n2",
        "stirling-mu2",
        "moment-identity-ball-n1",
        "mobius-transformation-law",
    ];
    let mut args = vec!["--seed", "0x10", "verify"];
    for n in &names {
        args.extend(["--only", n]);
    }
    let out = run(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(dir.path().join("verify-report.json"));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["master_seed"], 16);
    assert_eq!(report["scenarios"].as_array().unwrap().len(), names.len());
    let csv = std::fs::read_to_string(dir.path().join("verify-report.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let mut seen: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    seen.dedup();
    seen.sort();
    let mut want = names.to_vec();
    want.sort();
    assert_eq!(seen, want);
}

#[test]
fn full_suite_fails_only_on_the_annulus_curvature_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--suite", "builtin"]);
    assert_eq!(out.status.code(), Some(1));
    let report = read_json(dir.path().join("verify-report.json"));
    let failed: Vec<&str> = report["scenarios"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["pass"] == false)
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["annulus-curvature"]);
}

#[test]
fn examples_command_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["examples"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(read_json(dir.path().join("examples-report.json"))["schema"], 1);
}

#[test]
fn data_files_repeat_exactly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["curvature", "--domain", "slit-ball", "--samples", "20"],
        &[
            "moments",
            "--domain",
            "hartogs",
            "--engine",
            "monte-carlo",
            "--samples",
            "20000",
        ],
        &["kernel-eval", "--n", "2", "--z", "0.1,0.2;-0.3,0", "--w", "0.2,0;0,0.1"],
        &["support-reach", "--n", "1", "--lambda", "2"],
    ];
    for args in runs {
        for dir in [&a, &b] {
            assert!(run(dir.path(), args).status.success(), "{args:?}");
        }
    }
    for stem in ["curvature", "moments", "kernel-eval", "support-reach"] {
        for ext in ["json", "csv"] {
            let name = format!("{stem}.{ext}");
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
        let v = read_json(a.path().join(format!("{stem}.json")));
        assert_eq!(v["schema"], 1);
        assert_eq!(v["seed"], 0x0042_3352_474D_414Eu64);
    }
    for dir in [&a, &b] {
        assert!(run(
            dir.path(),
            &["verify", "--only", "stirling-mu3", "--only", "ball-curvature-fd-n1"]
        )
        .status
        .success());
    }
    let [mut x, mut y] = [&a, &b].map(|d| read_json(d.path().join("verify-report.json")));
    strip_timing(&mut x);
    strip_timing(&mut y);
    assert_eq!(x, y);
}

#[test]
fn unit_disk_moments_are_pi_over_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "--format",
            "csv",
            "moments",
            "--domain",
            "ball",
            "--n",
            "1",
            "--max-degree",
            "3",
        ],
    );
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    let mut diagonal = Vec::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().take(5).map(|x| x.parse().unwrap()).collect();
        let (alpha, beta, re, im) = (v[0], v[1], v[2], v[3]);
        if alpha == beta {
            diagonal.push(re);
            assert!(im.abs() < 1e-12);
        } else {
            assert!(re.abs() < 1e-12 && im.abs() < 1e-12, "({alpha},{beta})");
        }
    }
    assert_eq!(diagonal.len(), 4);
    for (k, v) in diagonal.iter().enumerate() {
        let want = std::f64::consts::PI / (k + 1) as f64;
        assert!((v - want).abs() < 1e-12, "k={k}: {v}");
    }
}

#[test]
fn ball_curvature_is_minus_two_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["curvature", "--domain", "ball", "--n", "2", "--samples", "100"],
    );
    assert!(out.status.success());
    let v = read_json(dir.path().join("curvature.json"));
    let samples = v["report"]["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 100);
    for s in samples {
        let h = s["h"].as_f64().unwrap();
        assert!((h + 2.0 / 3.0).abs() < 1e-12, "{h}");
    }
    assert_eq!(v["report"]["constant"], true);
}

#[test]
fn out_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(BIN)
        .args([
            "repcoords",
            "--n",
            "1",
            "--p",
            "0.2,0.1",
            "--z",
            "0.5,0",
            "--z",
            "0.2,0.1",
        ])
        .env("BERGMAN_LAB_OUT", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v = read_json(target.join("repcoords.json"));
    let rows = v["report"].as_array().unwrap();
    assert_eq!(rows[1]["t"][0]["re"], 0.0);
    assert_eq!(rows[1]["t"][0]["im"], 0.0);
}
