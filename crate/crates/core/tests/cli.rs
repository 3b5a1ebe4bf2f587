use std::process::{Command, Output};

fn dioph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dioph"))
        .args(args)
        .env_remove("DIOPH_THREADS")
        .output()
        .expect("run dioph")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn count_reports() {
    let o = dioph(&["count", "--field", "5", "--m", "2", "--r", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("count      4"), "{}", stdout(&o));

    let o = dioph(&[
        "count", "--field", "3^2", "--m", "2", "--r", "1", "--algo", "brute", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["q"], 9);
    assert_eq!(v["algo"], "brute");
    assert_eq!(v["count"], 24);

    let o = dioph(&["count", "--field", "4", "--m", "2", "--r", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("even"), "{}", stderr(&o));
}

#[test]
fn count_budget_exit() {
    let o = dioph(&[
        "count", "--field", "31", "--m", "4", "--algo", "brute", "--budget", "1000",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn identity_checks() {
    let o = dioph(&["identity", "--field", "5", "--m", "2", "--r", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("= 12 vs product sum = 12"),
        "{}",
        stdout(&o)
    );

    let o = dioph(&[
        "identity", "--field", "7", "--m", "4", "--r", "3", "--eps", "3f",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    // only row-1 pairs after relabeling: closed form
    let o = dioph(&["identity", "--field", "7", "--m", "4", "--eps", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("closed form"));

    let o = dioph(&["identity", "--field", "5", "--m", "4", "--eps", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scan_class_mode_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let o = dioph(&[
        "scan",
        "--m",
        "4",
        "--q-min",
        "5",
        "--q-max",
        "50",
        "--r-mode",
        "class",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = dioph_core::scan::read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    let qs = dioph_core::scan::enumerate_odd_prime_powers(5, 50).unwrap();
    assert_eq!(rows.len(), 2 * qs.len());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), dioph_core::scan::CSV_HEADER);
}

#[test]
fn scan_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = dioph(&[
            "scan",
            "--m",
            "3",
            "--q-max",
            "40",
            "--threads",
            "2",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn search_and_weil() {
    let o = dioph(&["search", "--m", "2", "--q-max", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("q0 = 5"), "{out}");
    assert!(out.contains("failure q = 3 r = 1"), "{out}");

    let o = dioph(&["weil", "--field", "7", "--samples", "100", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("100/100 holds"), "{}", stdout(&o));
    assert_eq!(
        stdout(&o),
        stdout(&dioph(&[
            "weil",
            "--field",
            "7",
            "--samples",
            "100",
            "--seed",
            "42"
        ]))
    );

    // X^2 is a square over the closure
    let o = dioph(&["weil", "--field", "7", "--poly", "0,0,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("square over the closure"));
}

#[test]
fn decompose_report() {
    let o = dioph(&[
        "decompose",
        "--field",
        "5",
        "--m",
        "4",
        "--r",
        "1",
        "--eps",
        "3f",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["identity_holds"], true);
    assert_eq!(v["weil_violations"], 0);

    // lower part empty: no S-T decomposition
    let o = dioph(&["decompose", "--field", "5", "--m", "4", "--eps", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors() {
    assert_eq!(dioph(&["count", "--bogus"]).status.code(), Some(2));
    assert_eq!(dioph(&["frobnicate"]).status.code(), Some(2));
    let help = dioph(&["scan", "--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = stdout(&help);
    for flag in [
        "--m",
        "--q-min",
        "--q-max",
        "--primes-only",
        "--r-mode",
        "--domain",
        "--square-rule",
        "--multiplicity",
        "--algo",
        "--threads",
        "--budget",
        "--out",
        "--format",
        "--timing",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}
