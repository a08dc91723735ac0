use spinsim_core::{DeviationDensityMatrix, C64};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn spinsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsim"))
        .args(args)
        .output()
        .expect("spawn spinsim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn eigen_citrate_table() {
    let o = spinsim(&["eigen", p(&data("citrate.spin"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("theta 7.6 deg"), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with('t')).count(), 5); // theta line + 4 transitions
    assert!(out.contains("observable 4 of 4"));
    assert!(out.lines().any(|l| l.starts_with("3 11 -1 ")));
}

#[test]
fn eigen_demo3_counts() {
    let o = spinsim(&["eigen", p(&data("demo3.spin"))]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("observable 9 of 15"));
}

#[test]
fn empty_system_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("empty.spin");
    std::fs::write(&f, "").unwrap();
    let o = spinsim(&["eigen", p(&f)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: ") && err.contains("1:1"), "{err}");
}

#[test]
fn epr_program_gives_bell_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsim(&[
        "--out",
        p(dir.path()),
        "run",
        p(&data("citrate.spin")),
        p(&data("programs/epr.pp")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("epr.state")).unwrap();
    let rho = DeviationDensityMatrix::parse(&text).unwrap();
    let third = 1.0 / 3.0;
    let want = [
        [third, 0.0, 0.0, 2.0 * third],
        [0.0, -third, 0.0, 0.0],
        [0.0, 0.0, -third, 0.0],
        [2.0 * third, 0.0, 0.0, third],
    ];
    for (r, row) in want.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            assert!((rho.mat[(r, c)] - C64::new(v, 0.0)).norm() < 1e-11, "({r},{c})");
        }
    }
}

#[test]
fn unknown_transition_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("bad.pp");
    std::fs::write(&prog, "selpulse t1 180 x\nselpulse t9 90 x\n").unwrap();
    let o = spinsim(&["--out", p(dir.path()), "run", p(&data("citrate.spin")), p(&prog)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown transition t9 at 2:1"), "{}", stderr(&o));
}

#[test]
fn pseudopure_spectrum_has_two_lines_with_equal_population_differences() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsim(&[
        "--out",
        p(dir.path()),
        "run",
        p(&data("citrate.spin")),
        p(&data("programs/pps00.pp")),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("pps00.spectrum")).unwrap();
    let lines: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (f, a) = l.split_once(',').unwrap();
            (f.parse().unwrap(), a.parse().unwrap())
        })
        .collect();
    assert_eq!(lines.len(), 2, "{csv}");
    // Divide out the strong-coupling intensities 1 ± sin 2Θ.
    let eig = stdout(&spinsim(&["eigen", p(&data("citrate.spin"))]));
    let intensity = |freq: f64| -> f64 {
        eig.lines()
            .filter(|l| l.starts_with('t') && !l.starts_with("theta"))
            .map(|l| l.split_whitespace().collect::<Vec<_>>())
            .find(|w| (w[3].parse::<f64>().unwrap() - freq).abs() < 1e-6)
            .map(|w| w[4].parse().unwrap())
            .unwrap()
    };
    let dp: Vec<f64> = lines.iter().map(|&(f, a)| a / intensity(f)).collect();
    assert!((dp[0] - dp[1]).abs() < 1e-9 * dp[0].abs(), "{dp:?}");
}

#[test]
fn ghz_protocol_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsim(&["--out", p(dir.path()), "protocol", "ghz", p(&data("demo3.spin"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("ghz.report")).unwrap();
    let tq: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("tq_amplitude="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((tq - 0.5).abs() < 1e-9);
    assert!(dir.path().join("ghz.pp").exists() && dir.path().join("ghz.state").exists());
}

#[test]
fn unknown_protocol_exits_2() {
    let o = spinsim(&["protocol", "teleport", p(&data("citrate.spin"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown protocol"));
}

#[test]
fn assign_eq13() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsim(&["--out", p(dir.path()), "assign", p(&data("eq13.cm")), "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let n: usize = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("diagrams "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(n >= 1);
    assert!(dir.path().join("eq13.levels").exists());
}

#[test]
fn unsatisfiable_connectivity_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cm = dir.path().join("bad.cm");
    // Only two transitions leave any level of a two-spin system, so three
    // mutually regressive ones cannot exist.
    std::fs::write(&cm, "0 -1 -1\n-1 0 -1\n-1 -1 0\n").unwrap();
    let o = spinsim(&["--out", p(dir.path()), "assign", p(&cm), "2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("unsatisfiable") && err.contains("1, 2 and 3"), "{err}");
}

#[test]
fn outputs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let o = spinsim(&["--out", p(dir), "protocol", "epr", p(&data("citrate.spin"))]);
        assert!(o.status.success());
    }
    for f in ["epr.pp", "epr.state", "epr.report"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn tomo_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinsim(&["--out", p(dir.path()), "protocol", "epr", p(&data("citrate.spin"))]);
    assert!(o.status.success());
    let state = dir.path().join("epr.state");
    let o = spinsim(&[
        "--out",
        p(dir.path()),
        "--points",
        "512",
        "tomo",
        p(&data("citrate.spin")),
        p(&state),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fid: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("fidelity "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(fid > 0.99, "{fid}");
}

#[test]
fn bad_points_rejected() {
    let o = spinsim(&["--points", "100", "eigen", p(&data("citrate.spin"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn accept_passes() {
    let o = spinsim(&["accept"]);
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 10, "{out}");
    assert!(o.status.success());
}
