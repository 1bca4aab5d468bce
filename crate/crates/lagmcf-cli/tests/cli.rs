//! End-to-end tests of the binary: exit codes, output files, determinism.

use std::path::Path;
use std::process::{Command, Output};

use lagmcf_core::grid::{read_field_path, write_field_path, GridSpec, ScalarField};

fn lagmcf(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lagmcf"));
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

const CONFIG: &str = r#"{
  "grid": {"ndim": 2, "npts": 16},
  "preset": {"name": "cosine", "amplitude": 0.2},
  "control": {"sigma": 1.0, "scheme": "euler", "t_end": 0.05, "sample_every": 2},
  "eps_pinch": 0.1,
  "output": {"csv": "series.csv", "field": "final.lgf"}
}"#;

#[test]
fn simulate_writes_outputs_and_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), CONFIG).unwrap();

    let out = lagmcf(dir.path(), &["simulate", "--config", "cfg.json"], &[]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv_a = std::fs::read(dir.path().join("series.csv")).unwrap();
    let field_a = std::fs::read(dir.path().join("final.lgf")).unwrap();
    assert!(!csv_a.is_empty() && !field_a.is_empty());

    // a single-threaded rerun must reproduce both outputs byte for byte
    let out = lagmcf(
        dir.path(),
        &["simulate", "--config", "cfg.json"],
        &[("LAGMCF_THREADS", "1")],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(dir.path().join("series.csv")).unwrap(), csv_a);
    assert_eq!(std::fs::read(dir.path().join("final.lgf")).unwrap(), field_a);
}

#[test]
fn verify_passes_on_a_clean_run_and_rejects_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), CONFIG).unwrap();
    assert_eq!(code(&lagmcf(dir.path(), &["simulate", "--config", "cfg.json"], &[])), 0);

    let out = lagmcf(
        dir.path(),
        &["verify", "series.csv", "--delta", "0.1", "--tol", "1e-3"],
        &[],
    );
    assert_eq!(code(&out), 0, "stdout: {}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("hessian bound:  PASS"));
    assert!(text.contains("pinching:       PASS"));
    assert!(text.contains("max principles: PASS"));

    // delta outside [0, 1) is a validation error
    let out = lagmcf(
        dir.path(),
        &["verify", "series.csv", "--delta", "1.5", "--tol", "1e-3"],
        &[],
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn verify_fails_with_exit_2_on_a_violating_series() {
    use lagmcf_core::analysis::{DiagnosticsRecord, DiagnosticsSeries};
    let dir = tempfile::tempdir().unwrap();
    let rec = |t: f64, eig: f64| DiagnosticsRecord {
        t,
        sup_h2: 0.0,
        sup_d3u2: 0.0,
        t_sup_h2: 0.0,
        t_sup_d3u2: 0.0,
        eig_min: -eig,
        eig_max: eig,
        osc_theta: 0.1,
        sup_du: 0.1,
        pinch_min: 0.5,
    };
    let series = DiagnosticsSeries::new(vec![rec(0.0, 0.5), rec(1.0, 0.99)]);
    series.to_csv_path(dir.path().join("bad.csv")).unwrap();

    let out = lagmcf(
        dir.path(),
        &["verify", "bad.csv", "--delta", "0.1", "--tol", "1e-3"],
        &[],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("hessian bound:  FAIL"));
}

#[test]
fn invalid_config_exits_1_and_missing_files_exit_3() {
    let dir = tempfile::tempdir().unwrap();

    std::fs::write(
        dir.path().join("unknown.json"),
        CONFIG.replace("\"eps_pinch\": 0.1", "\"eps_pinch\": 0.1, \"bogus\": 1"),
    )
    .unwrap();
    let out = lagmcf(dir.path(), &["simulate", "--config", "unknown.json"], &[]);
    assert_eq!(code(&out), 1, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(
        dir.path().join("badsigma.json"),
        CONFIG.replace("\"sigma\": 1.0", "\"sigma\": 1.5"),
    )
    .unwrap();
    let out = lagmcf(dir.path(), &["simulate", "--config", "badsigma.json"], &[]);
    assert_eq!(code(&out), 1);

    let out = lagmcf(dir.path(), &["soliton-check", "missing.lgf", "--c", "0"], &[]);
    assert_eq!(code(&out), 3);
    let out = lagmcf(
        dir.path(),
        &["mollify", "missing.lgf", "--tau", "0.1", "--out", "x.lgf"],
        &[],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn mollify_roundtrips_through_field_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::standard_torus(1, 64).unwrap();
    let u = ScalarField::from_fn(&g, |x| 0.3 * x[0].cos()).unwrap();
    write_field_path(dir.path().join("in.lgf"), &u).unwrap();

    let out = lagmcf(
        dir.path(),
        &["mollify", "in.lgf", "--tau", "0.25", "--out", "smooth.lgf"],
        &[],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let smooth = read_field_path(dir.path().join("smooth.lgf")).unwrap();
    assert_eq!(smooth.grid(), &g);
    // heat kernel scales the single cosine mode by e^{-tau}
    let expect = 0.3 * (-0.25_f64).exp();
    let got = smooth.sup_abs();
    assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");

    // --tau and --k-list together is a usage error
    let out = lagmcf(
        dir.path(),
        &[
            "mollify", "in.lgf", "--tau", "0.25", "--k-list", "1,2", "--out", "x.lgf",
        ],
        &[],
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn quadratic_soliton_check_passes_in_the_interior() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let h = std::f64::consts::TAU / n as f64;
    let g = GridSpec::new(&[n], &[h], &[-std::f64::consts::PI]).unwrap();
    let lam = 0.5_f64;
    let u = ScalarField::from_fn(&g, |x| 0.5 * lam * x[0] * x[0]).unwrap();
    write_field_path(dir.path().join("quad.lgf"), &u).unwrap();

    let c = format!("{}", lam.atan());
    let out = lagmcf(
        dir.path(),
        &[
            "soliton-check", "quad.lgf", "--c", &c,
            "--interior-margin", "2", "--tol", "1e-12",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "stdout: {}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));

    // wrong angle fails at the same tolerance
    let out = lagmcf(
        dir.path(),
        &[
            "soliton-check", "quad.lgf", "--c", "0.3",
            "--interior-margin", "2", "--tol", "1e-12",
        ],
        &[],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn rescale_writes_one_frame_per_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::standard_torus(1, 64).unwrap();
    for (k, t) in [(0usize, 0.5f64), (1, 1.0)] {
        let u = ScalarField::from_fn(&g, |x| (1.0 + 0.1 * t) * x[0].cos()).unwrap();
        write_field_path(dir.path().join(format!("snap{k}.lgf")), &u).unwrap();
    }

    let out = lagmcf(
        dir.path(),
        &[
            "rescale", "snap0.lgf", "snap1.lgf",
            "--times", "0.5,1.0", "--lambda", "2", "--x0", "10",
            "--out-prefix", "zoom_",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let f0 = read_field_path(dir.path().join("zoom_0.lgf")).unwrap();
    let f1 = read_field_path(dir.path().join("zoom_1.lgf")).unwrap();
    assert_eq!(f0.grid().ndim(), 1);
    assert_eq!(f1.grid().npts(0), 64);
    // the rescaled potential vanishes at the marked point (center of frame 1)
    let center = f1.grid().linear_index(&[32]);
    assert_eq!(f1.values()[center], 0.0);

    // mismatched times are a validation error
    let out = lagmcf(
        dir.path(),
        &["rescale", "snap0.lgf", "--times", "0.5,1.0", "--lambda", "2", "--x0", "10"],
        &[],
    );
    assert_eq!(code(&out), 1);
}
