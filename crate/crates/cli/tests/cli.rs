use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn signmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signmix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write_fixture(dir: &Path, family: &str) -> String {
    let path = dir.join(format!("{family}.txt"));
    let out = signmix(&[
        "alternating",
        "--family",
        family,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn alternating_reports_acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n.txt");
    let out = signmix(&[
        "alternating",
        "--family",
        "normal",
        "--out",
        path.to_str().unwrap(),
        "--report",
    ]);
    assert!(out.status.success());
    let err = text(&out.stderr);
    assert!(err.contains("vanilla acceptance 0.0177"), "{err}");
    assert!(err.lines().any(|l| l.starts_with("51\t")));
    let model = fs::read_to_string(&path).unwrap();
    assert!(model.starts_with("family normal"));
    assert_eq!(model.lines().filter(|l| l.starts_with('+')).count(), 51);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_fixture(dir.path(), "gamma");
    assert!(signmix(&["validate", &good]).status.success());

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "family normal\n+ 1.5 0 1\n- 1 0 0.25\n").unwrap();
    assert_eq!(
        signmix(&["validate", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );

    let garbled = dir.path().join("garbled.txt");
    fs::write(&garbled, "family normal\n+ x 0 1\n").unwrap();
    assert_eq!(
        signmix(&["validate", garbled.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sample_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_fixture(dir.path(), "normal");
    for method in ["vanilla", "stratified", "invcdf"] {
        let run = |seed: &str| {
            let out = signmix(&[
                "sample", &model, "--method", method, "--n", "50", "--seed", seed,
            ]);
            assert!(out.status.success(), "{}", text(&out.stderr));
            text(&out.stdout)
        };
        let a = run("3");
        assert_eq!(a.lines().count(), 50);
        assert!(a.lines().all(|l| l.parse::<f64>().is_ok()));
        assert_eq!(a, run("3"));
        assert_ne!(a, run("4"));
    }
}

#[test]
fn compare_tables_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_fixture(dir.path(), "gamma");
    let run = |parallel: bool| {
        let mut args = vec![
            "compare",
            &model,
            "--ns",
            "10,100",
            "--deltas",
            "0.6",
            "--epsilons",
            "0.2,0.5",
            "--seed",
            "7",
        ];
        if parallel {
            args.push("--parallel");
        }
        let out = signmix(&args);
        assert!(out.status.success(), "{}", text(&out.stderr));
        let table = text(&out.stdout);
        assert!(text(&out.stderr).contains("R_n\tQ_n"));
        table
            .lines()
            .map(|l| l.rsplit_once('\t').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    let a = run(false);
    assert_eq!(
        a[0],
        "family\tmethod\tdelta\teps\tn\taccepted\tproposed\tdelta_hat"
    );
    // vanilla, two stratified cells, invcdf per n
    assert_eq!(a.len(), 1 + 2 * 4);
    assert!(a[1].starts_with("gamma\tvanilla\t0.008\t-\t10\t10\t"));
    assert_eq!(a, run(false));
    assert_eq!(a, run(true));
}

#[test]
fn generate_writes_manifest_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("models");
    let out = signmix(&[
        "generate",
        "--family",
        "gamma",
        "--k-range",
        "10-30",
        "--p-range",
        "0.05,0.1",
        "--method",
        "2",
        "--count",
        "3",
        "--seed",
        "11",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for i in 0..3 {
        let path = out_dir.join(format!("model_{i}.txt"));
        let body = fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("# method=2 family=gamma K="));
        assert!(body.lines().next().unwrap().contains("target_p=[0.05,0.1]"));
        assert!(signmix(&["validate", path.to_str().unwrap()])
            .status
            .success());
    }
}

#[test]
fn generate_rejects_unknown_ranges() {
    let out = signmix(&["generate", "--family", "normal", "--k-range", "3-4"]);
    assert_eq!(out.status.code(), Some(3));
    let out = signmix(&["generate", "--family", "normal", "--p-range", "0.3,0.4"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tiny_tolerance_overflows_partition() {
    // ε = 1e-7 needs far more cells than the cap allows
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.txt");
    fs::write(&path, "family normal\n+ 2 0 1\n- 1 0 0.25\n").unwrap();
    let p = path.to_str().unwrap();
    let ok = signmix(&["sample", p, "--delta", "0.6", "--eps", "0.2", "--n", "5"]);
    assert!(ok.status.success());
    let out = signmix(&["sample", p, "--delta", "0.6", "--eps", "1e-7", "--n", "1"]);
    assert_eq!(out.status.code(), Some(4), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("65536"));
}
