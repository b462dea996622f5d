use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name);
    root.to_str().unwrap().to_owned()
}

fn qds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qds"))
        .args(args)
        .env_remove("QDS_DEFAULT_TOL")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    qds(args).status.code().expect("exited normally")
}

fn scratch(name: &str, text: &str) -> String {
    let path = std::env::temp_dir().join(format!("qds-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn exit_code_matrix() {
    let dephasing = data("dephasing.json");
    let markov = data("markov.json");
    let damping = data("amplitude_damping.json");
    let two = data("two_block.json");
    let missing = data("does_not_exist.json");
    let garbled = scratch("garbled.json", "{\"schema\": \"qds-spec-1\",\n \"structure\": {\"dims\": [2]},\n \"generator\": {\"derivations\": [[[[0, 1]]]}\n");
    let cases: &[(&[&str], i32)] = &[
        (&["check", &dephasing], 0),
        (&["check", &two], 0),
        (&["check", &markov], 1),
        (&["check", &damping], 1),
        (&["check", &missing], 2),
        (&["check", &garbled], 2),
        (&["decompose", &dephasing], 0),
        (&["decompose", &two], 0),
        (&["decompose", &markov], 1),
        (&["decompose", &damping], 1),
        (&["decompose", &garbled], 2),
        (&["evolve", &dephasing, "--t", "1"], 0),
        (&["evolve", &two, "--t", "0.5", "--x", "random:3"], 0),
        (&["evolve", &dephasing, "--t", "1", "--x", "unit:1,2,1"], 0),
        (&["evolve", &dephasing, "--t", "1", "--x", "unit:2,1,1"], 2),
        (&["evolve", &dephasing, "--t", "1", "--x", "nonsense"], 2),
        (&["evolve", &missing, "--t", "1"], 2),
        (
            &[
                "dilate", &dephasing, "--paths", "2000", "--steps", "50", "--seed", "3",
            ],
            0,
        ),
        (
            &[
                "dilate", &two, "--paths", "2000", "--steps", "50", "--seed", "3",
            ],
            0,
        ),
        (&["dilate", &markov, "--paths", "100", "--steps", "10"], 1),
        (&["dilate", &dephasing, "--paths", "0"], 2),
        (&["dilate", &dephasing, "--scheme", "leapfrog"], 2),
        (&["corner", "--size", "24", "--m", "4,8"], 0),
        (&["corner", "--size", "24", "--m", "30"], 2),
        (&["corner", "--dim", "2", "--size", "100"], 2),
        (&["demo", "dephasing"], 0),
        (&["demo", "markov"], 1),
        (&["demo", "nope"], 2),
        (&["check", &dephasing, "--weights", "0"], 2),
        (&["check", &dephasing, "--weights", "2,3"], 2),
        (&["check", &dephasing, "--weights", "2.5"], 0),
        (&["frobnicate"], 2),
    ];
    let mut wrong = Vec::new();
    for (args, expected) in cases {
        let got = code(args);
        if got != *expected {
            wrong.push(format!("{args:?}: expected {expected}, got {got}"));
        }
    }
    assert!(wrong.is_empty(), "{}", wrong.join("\n"));
}

#[test]
fn parse_errors_report_line_column_and_field() {
    let path = scratch("typo.json", "{\n  \"schema\": \"qds-spec-1\",\n  \"structure\": {\"dims\": [\"two\"]},\n  \"generator\": {\"derivations\": []}\n}\n");
    let out = qds(&["check", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("structure.dims[0]") && err.contains("line 3"),
        "{err}"
    );
}

#[test]
fn json_report_carries_schema_verdict_and_witness() {
    let out = qds(&["--format", "json", "check", &data("markov.json")]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema"], "qds-report-1");
    assert_eq!(report["verdict"], "fail");
    let checks = report["checks"].as_array().unwrap();
    let rel = checks.iter().find(|c| c["name"] == "relation2").unwrap();
    assert_eq!(rel["passed"], false);
    assert!((rel["residual"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(rel["witness"]["description"]
        .as_str()
        .unwrap()
        .contains("(P_1, P_2)"));
}

#[test]
fn decompose_output_reproduces_the_generator() {
    let out = std::env::temp_dir().join(format!("qds-cli-{}-family.json", std::process::id()));
    let out = out.to_str().unwrap();
    assert_eq!(
        code(&["decompose", &data("two_block.json"), "--out", out]),
        0
    );
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("\"derivations\""));
    assert_eq!(code(&["check", out]), 0);
    let a = qds(&[
        "--format",
        "json",
        "evolve",
        &data("two_block.json"),
        "--t",
        "0.7",
        "--x",
        "random:5",
    ]);
    let b = qds(&[
        "--format", "json", "evolve", out, "--t", "0.7", "--x", "random:5",
    ]);
    let result = |o: &Output| {
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        serde_json::from_value::<Vec<Vec<Vec<[f64; 2]>>>>(v["evolution"]["result"].clone()).unwrap()
    };
    let (ra, rb) = (result(&a), result(&b));
    let gap = ra
        .iter()
        .flatten()
        .flatten()
        .zip(rb.iter().flatten().flatten())
        .map(|(x, y)| (x[0] - y[0]).hypot(x[1] - y[1]))
        .fold(0.0, f64::max);
    assert!(gap <= 1e-10, "{gap}");
}

#[test]
fn environment_tolerance_applies_unless_overridden() {
    let dephasing = data("dephasing.json");
    let run = |env: Option<&str>, args: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qds"));
        cmd.args(args).env_remove("QDS_DEFAULT_TOL");
        if let Some(v) = env {
            cmd.env("QDS_DEFAULT_TOL", v);
        }
        let out = cmd.output().unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["checks"][0]["tolerance"].as_f64().unwrap()
    };
    let base = ["--format", "json", "check", dephasing.as_str()];
    let default = run(None, &base);
    let from_env = run(Some("1e-6"), &base);
    let mut flagged = base.to_vec();
    flagged.extend(["--tol", "1e-3"]);
    let from_flag = run(Some("1e-6"), &flagged);
    assert!((from_env / default - 1e3).abs() < 1e-6);
    assert!((from_flag / from_env - 1e3).abs() < 1e-6);
}

#[test]
fn dilation_is_reproducible_for_a_fixed_seed() {
    let args = [
        "--format",
        "json",
        "dilate",
        &data("dephasing.json"),
        "--paths",
        "500",
        "--steps",
        "20",
        "--seed",
        "11",
    ];
    let strip = |o: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(strip(qds(&args)), strip(qds(&args)));
}
