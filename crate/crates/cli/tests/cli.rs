use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

fn kacrice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kacrice"))
        .args(args)
        .env_remove("KACRICE_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn integrate_single_equation() {
    let o = kacrice(&["integrate", data("ex13.sys").to_str().unwrap(), "--max-plausible", "1", "--max-n", "10000000"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("# kacrice integrate"));
    assert!(out.contains("# seed: 0"));
    let line = out.lines().find(|l| l.starts_with("estimate:")).unwrap();
    let parts: Vec<f64> = line["estimate:".len()..]
        .split('±')
        .map(|s| s.trim().parse().unwrap())
        .collect();
    assert!((parts[0] - 1.0).abs() <= 3.0 * parts[1]);
    assert!(parts[1] <= 0.01);
}

#[test]
fn pathological_slice_exits_with_ramp_failure() {
    let o = kacrice(&[
        "integrate",
        data("dhk_slice.sys").to_str().unwrap(),
        "--min-plausible",
        "1",
        "--max-plausible",
        "5",
        "--max-n",
        "200000",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("status: ramp-failed"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scale disparity"));
}

#[test]
fn input_errors_exit_with_one() {
    let o = kacrice(&["integrate", "/nonexistent/file.sys"]);
    assert_eq!(o.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sys");
    std::fs::write(&bad, "vars: t\nparams: k1 k2\neq: k2*t - k9\n").unwrap();
    let o = kacrice(&["integrate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.sys:3:12"), "{err}");

    let net = dir.path().join("bad.net");
    std::fs::write(&net, "A -> B ; k\n2.5 A -> B ; l\n").unwrap();
    let o = kacrice(&["crn", "reduce", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.net:2:1"));
}

#[test]
fn crn_reduce_emits_square_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hk.sys");
    let o = kacrice(&["crn", "reduce", data("hk.net").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# kacrice crn reduce"));
    let sys = kacrice::polysys::ParametrizedSystem::parse(&text).unwrap();
    assert_eq!((sys.n(), sys.m()), (6, 8));
}

#[test]
fn partition_grid_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let o = kacrice(&[
            "partition",
            data("deg5.sys").to_str().unwrap(),
            "--grid",
            "10,10",
            "--mmin",
            "0",
            "--mmax",
            "5",
            "--max-n",
            "20000",
            "--chunk",
            "5000",
            "--workers",
            workers,
            "-o",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 101);

    let ppm = dir.path().join("g.ppm");
    let o = kacrice(&[
        "partition",
        data("deg5.sys").to_str().unwrap(),
        "--grid",
        "10,10",
        "--mmin",
        "0",
        "--mmax",
        "5",
        "--max-n",
        "20000",
        "--out",
        "ppm",
        "-o",
        ppm.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let bytes = std::fs::read(ppm).unwrap();
    assert!(bytes.starts_with(b"P6\n# kacrice partition"));
    let text = String::from_utf8_lossy(&bytes);
    assert!(text.contains("\n10 10\n255\n"));
}

#[test]
fn search_prints_trace() {
    let o = kacrice(&[
        "search",
        data("hk2.sys").to_str().unwrap(),
        "--mmin",
        "1",
        "--mmax",
        "3",
        "--mode",
        "crn",
        "--depth",
        "4,4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("iteration\tbox\tr_hat"));
    assert!(out.contains("found box: [2.5,3]x[2,2.5]"), "{out}");
}

#[test]
fn oracle_reports_discrepancy() {
    let o = kacrice(&[
        "oracle",
        data("ex14.sys").to_str().unwrap(),
        "--samples",
        "100000",
        "--max-plausible",
        "1",
        "--max-n",
        "2000000",
    ]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let out = stdout(&o);
    assert!(out.contains("direct: "));
    let z: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("discrepancy: "))
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(z <= 3.0);
}
