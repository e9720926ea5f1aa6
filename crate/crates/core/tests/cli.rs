use std::path::Path;
use std::process::{Command, Output};

use mds_d2d::harness::{parse_config, read_csv, run_sweep, RowEngine};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mds-d2d"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn default_sweep_writes_301_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["sweep", "--out", "all.csv"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("all.csv")).unwrap();
    assert_eq!(text.lines().count(), 301);
    assert!(!text.contains('\r'));
    assert_eq!(
        text.lines().next().unwrap(),
        "n,k,delta,t_d,t_bs,engine,eta,t_eta,p_idle,t_dw,gain"
    );
    for row in read_csv(&dir.path().join("all.csv")).unwrap() {
        assert!((row.gain * row.t_dw - row.t_ref()).abs() <= 1e-8);
    }
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.toml",
        "[sweep]\ncodes = [[4, 2]]\nratios = [10.0]\ndelta = { values = [1.0] }\n[simulation]\nseed = 3\n",
    );
    let spec = parse_config(Path::new(&config)).unwrap();
    assert_eq!(spec.sim.seed, 3);
    let out = bin(
        &[
            "sweep", "--config", &config, "--ratios", "100,1000", "--out", "o.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("o.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[0].ratio() - 100.0).abs() < 1e-6);
    assert!((rows[1].ratio() - 1000.0).abs() < 1e-6);
    assert!(rows.iter().all(|r| (r.n, r.k, r.delta) == (4, 2, 1.0)));
}

#[test]
fn both_engine_rows_are_paired() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &[
            "sweep",
            "--engine",
            "both",
            "--codes",
            "2:1,4:2",
            "--ratios",
            "10",
            "--deltas",
            "0.1,1",
            "--requests",
            "3000",
            "--out",
            "b.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("b.csv")).unwrap();
    assert_eq!(rows.len(), 8);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0].engine, RowEngine::Analytic);
        assert_eq!(pair[1].engine, RowEngine::Simulate);
        assert_eq!((pair[0].n, pair[0].delta), (pair[1].n, pair[1].delta));
        assert!(pair[1].rel_diff.is_some() && pair[1].sim.is_some());
        assert!(pair[0].rel_diff.is_none());
    }
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_code = write(dir.path(), "k.toml", "[sweep]\ncodes = [[4, 2], [2, 3]]\n");
    let out = bin(&["sweep", "--config", &bad_code], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.codes[1]"));

    let unknown = write(dir.path(), "u.toml", "[sweep]\nengines = \"both\"\n");
    let out = bin(&["sweep", "--config", &unknown], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("engines"));

    let zero = write(dir.path(), "z.toml", "[simulation]\nnum_requests = 0\n");
    assert_eq!(
        bin(&["sweep", "--config", &zero], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        bin(&["sweep", "--no-such-flag"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        bin(
            &["analytic", "--n", "2", "--k", "3", "--delta", "1", "--t-d", "0.1", "--t-bs", "1"],
            dir.path()
        )
        .status
        .code(),
        Some(1)
    );
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &["plot", "--input", "missing.csv", "--out", "p.svg"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
    let out = bin(&["sweep", "--out", "no/such/dir/x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_requires_one_ratio() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bin(&["sweep", "--out", "all.csv"], dir.path())
        .status
        .success());
    let mixed = bin(
        &["plot", "--input", "all.csv", "--out", "m.svg"],
        dir.path(),
    );
    assert_eq!(mixed.status.code(), Some(1));
    assert!(!dir.path().join("m.svg").exists());
    let one = bin(
        &[
            "plot", "--input", "all.csv", "--out", "r10.svg", "--ratio", "10",
        ],
        dir.path(),
    );
    assert!(one.status.success());
    let svg = std::fs::read_to_string(dir.path().join("r10.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
}

#[test]
fn analytic_and_simulate_print_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let point = [
        "--n", "4", "--k", "2", "--delta", "1", "--t-d", "0.05", "--t-bs", "0.5",
    ];
    let out = bin(&[&["analytic"][..], &point].concat(), dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("gain") && text.contains("P[2 symbols]"));
    let out = bin(
        &[&["simulate", "--requests", "5000"][..], &point].concat(),
        dir.path(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("busy_frac"));
}

#[test]
fn compare_flags_approximation_breakdown_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "compare",
        "--codes",
        "4:2",
        "--ratios",
        "10",
        "--deltas",
        "1,10",
        "--requests",
        "20000",
    ];
    let calm = bin(&[&base[..], &["--strict"]].concat(), dir.path());
    assert_eq!(
        calm.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&calm.stdout)
    );
    assert!(String::from_utf8_lossy(&calm.stdout).contains("0 of 2 row(s)"));

    let stressed = bin(
        &[
            &base[..],
            &["--request-rate", "1.0", "--mode", "physical", "--strict"],
        ]
        .concat(),
        dir.path(),
    );
    assert_eq!(stressed.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&stressed.stdout).contains("FLAG"));
    let lenient = bin(
        &[&base[..], &["--request-rate", "1.0", "--mode", "physical"]].concat(),
        dir.path(),
    );
    assert_eq!(lenient.status.code(), Some(0));
}

#[test]
fn library_sweep_matches_cli_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.toml",
        "[sweep]\nratios = [100.0]\ndelta = { min = 0.1, max = 10.0, count = 3 }\n",
    );
    assert!(bin(
        &["sweep", "--config", &config, "--out", "o.csv"],
        dir.path()
    )
    .status
    .success());
    let from_cli = read_csv(&dir.path().join("o.csv")).unwrap();
    let direct = run_sweep(&parse_config(Path::new(&config)).unwrap()).unwrap();
    assert_eq!(from_cli.len(), direct.len());
    for (a, b) in from_cli.iter().zip(&direct) {
        assert!((a.gain - b.gain).abs() <= 1e-8 * b.gain);
    }
}
