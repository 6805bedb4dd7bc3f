use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"{
  "data": {"d": 8, "m": 160, "m_prime": 80, "n": 60, "identity_count": 24, "seed": 3},
  "environment": {"grid": {"rf_tree_counts": [5], "rf_depths": [3]}},
  "sanitizer": {"mmd": {"sigma": "median_distance", "iterations": 40, "dictionary_size": 10}}
}"#;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_closedenv"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), SMALL).unwrap();
    let (code, _, err) = run(&[
        "gen-data",
        "--config",
        s(&dir.path().join("config.json")),
        "--out",
        s(&dir.path().join("data")),
    ]);
    assert_eq!(code, 0, "{err}");
    dir
}

#[test]
fn commands_are_deterministic() {
    let dir = setup();
    let p = dir.path();
    let cfg = p.join("config.json");
    let data = p.join("data");
    let (train, test, user) = (
        data.join("train.csv"),
        data.join("test.csv"),
        data.join("user.csv"),
    );
    for method in ["linear", "mmd"] {
        let mut outputs = Vec::new();
        for round in 0..2 {
            let san = p.join(format!("{method}{round}.json"));
            let su = p.join(format!("{method}{round}_user.csv"));
            let rep = p.join(format!("{method}{round}_report.json"));
            let (code, _, err) = run(&[
                "sanitize",
                "--config",
                s(&cfg),
                "--train",
                s(&train),
                "--test",
                s(&test),
                "--method",
                method,
                "--seed",
                "5",
                "--user",
                s(&user),
                "--user-out",
                s(&su),
                "--out",
                s(&san),
            ]);
            assert_eq!(code, 0, "{err}");
            let (code, stdout, err) = run(&[
                "certify",
                "--config",
                s(&cfg),
                "--train",
                s(&train),
                "--test",
                s(&test),
                "--user",
                s(&user),
                "--sanitizer",
                s(&san),
                "--seed",
                "5",
                "--out",
                s(&rep),
            ]);
            assert_eq!(code, 0, "{err}");
            assert!(stdout.contains("Privacy metric"));
            outputs.push([san, su, rep].map(|f| std::fs::read(f).unwrap()));
        }
        assert_eq!(
            outputs[0], outputs[1],
            "{method} outputs differ between runs"
        );
    }
}

#[test]
fn gen_data_writes_manifest() {
    let dir = setup();
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("data/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["files"]["train"]["records"], 160);
    assert_eq!(manifest["generator"]["d"], 8);
}

#[test]
fn exit_codes() {
    let dir = setup();
    let p = dir.path();
    let data = p.join("data");
    let train = data.join("train.csv");
    let test = data.join("test.csv");
    let out = p.join("r.json");

    let (code, _, _) = run(&[
        "certify",
        "--train",
        "/no/such.csv",
        "--test",
        s(&test),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 3);

    let bad = p.join("bad.json");
    std::fs::write(&bad, r#"{"environment": {"negatives_per_positive": 0}}"#).unwrap();
    let (code, _, _) = run(&[
        "certify",
        "--config",
        s(&bad),
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2);

    let (code, _, _) = run(&[
        "certify",
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--method",
        "pca",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 2);

    // a test set with a single sensitive class fails the balance precondition
    let text = std::fs::read_to_string(&test).unwrap();
    let mut lines = text.lines();
    let mut one_class = format!("{}\n", lines.next().unwrap());
    for l in lines.filter(|l| l.ends_with(",1") && !l.ends_with(",-1")) {
        one_class.push_str(l);
        one_class.push('\n');
    }
    let skewed = p.join("skewed.csv");
    std::fs::write(&skewed, one_class).unwrap();
    let (code, _, err) = run(&[
        "certify",
        "--train",
        s(&train),
        "--test",
        s(&skewed),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 5, "{err}");

    let wild = p.join("wild.json");
    std::fs::write(
        &wild,
        r#"{"sanitizer": {"mmd": {"sigma": 50.0, "step_size": 1e308, "iterations": 5}}}"#,
    )
    .unwrap();
    let (code, _, err) = run(&[
        "sanitize",
        "--config",
        s(&wild),
        "--train",
        s(&train),
        "--test",
        s(&test),
        "--method",
        "mmd",
        "--user",
        s(&test),
        "--user-out",
        s(&p.join("u.csv")),
        "--out",
        s(&p.join("w.json")),
    ]);
    assert_eq!(code, 4, "{err}");
    assert!(!out.exists());
}
