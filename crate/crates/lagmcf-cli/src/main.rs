//! Command-line front end: simulate the potential flow, verify a recorded
//! series against the a-priori estimates, and apply the standalone tools
//! (mollifier, soliton residual, parabolic rescaling) to field files.
//!
//! Exit codes: 0 success, 1 invalid arguments or configuration, 2 numerical
//! abort or failed verification, 3 I/O or file-format trouble.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use lagmcf_core::analysis::{
    decay_report, monotonicity_report, preservation_report, soliton_residual_interior,
    DiagnosticsSeries, SolitonSpec,
};
use lagmcf_core::flow::{run, FlowState};
use lagmcf_core::grid::{read_field_path, write_field_path, ScalarField, MAX_DIM};
use lagmcf_core::initdata::{
    make_preset, mollifier_sequence, mollify_with_clamp, parabolic_rescale, RescaleRequest,
};
use lagmcf_core::parallel::configure_threads;
use lagmcf_core::{Error, Result};

use config::{Config, InitialData};

#[derive(Parser)]
#[command(
    name = "lagmcf",
    version,
    about = "Mean curvature flow of Lagrangian graphs via the potential equation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the potential flow described by a JSON config.
    Simulate {
        /// Path to the configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a diagnostics CSV against bound preservation, the maximum
    /// principles, and (optionally) long-time decay.
    Verify {
        /// Diagnostics series written by `simulate`.
        csv: PathBuf,
        /// The preserved Hessian bound is `1 - delta`.
        #[arg(long)]
        delta: f64,
        /// Slack for the bound and pinching checks.
        #[arg(long)]
        tol: f64,
        /// Anchor time for the decay-product check; omitted = skip it.
        #[arg(long, allow_negative_numbers = true)]
        t_min: Option<f64>,
        /// Allowed growth per unit time in the monotone quantities.
        #[arg(long, default_value_t = 1e-8)]
        rate_tol: f64,
    },
    /// Smooth a field file by the periodic heat kernel.
    Mollify {
        /// Input field (LGF1).
        input: PathBuf,
        /// Single smoothing time.
        #[arg(long, conflicts_with = "k_list", required_unless_present = "k_list")]
        tau: Option<f64>,
        /// Mollify at `tau = 1/k` for each listed `k` (strictly increasing).
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<u32>>,
        /// Output path (single tau) or prefix (k-list writes `<out>_k<k>.lgf`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure how far a field is from the soliton relation
    /// `theta + a . Du - b . x = c`.
    SolitonCheck {
        /// Field to check (LGF1).
        field: PathBuf,
        /// Drift coefficients, comma separated (default all zero).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        a: Option<Vec<f64>>,
        /// Linear coefficients, comma separated (default all zero).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        b: Option<Vec<f64>>,
        /// Constant angle.
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        /// Skip this many cells on each side of the wrap seam.
        #[arg(long, default_value_t = 0)]
        interior_margin: usize,
        /// Pass/fail threshold; without it the residual is only reported.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Parabolically rescale a family of snapshots about a marked point.
    Rescale {
        /// Snapshot fields, oldest first (LGF1); the last one sets `t0`.
        #[arg(required = true)]
        snaps: Vec<PathBuf>,
        /// Snapshot times, comma separated, matching the files.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        times: Vec<f64>,
        /// Zoom factor.
        #[arg(long)]
        lambda: f64,
        /// Grid index of the marked point, comma separated.
        #[arg(long, value_delimiter = ',')]
        x0: Vec<usize>,
        /// Output files are `<prefix><k>.lgf`.
        #[arg(long, default_value = "rescaled_")]
        out_prefix: String,
        /// Output points per axis (default: same as the source).
        #[arg(long, value_delimiter = ',')]
        out_npts: Option<Vec<usize>>,
        /// Output spacing per axis (default: `lambda * h`).
        #[arg(long, value_delimiter = ',')]
        out_spacing: Option<Vec<f64>>,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Blowup { .. } | Error::Instability { .. } | Error::EigenNonConvergence(_) => 2,
        Error::Io(_) | Error::Format(_) | Error::Csv(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    // Die by SIGPIPE like other stream tools when the consumer closes early;
    // Rust's default (ignore the signal) turns the resulting EPIPE into a
    // print! panic with exit code 101.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    match std::env::var("LAGMCF_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => configure_threads(Some(n)),
            _ => {
                eprintln!("error: LAGMCF_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(1);
            }
        },
        Err(_) => configure_threads(None),
    }

    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Simulate { config } => simulate(&config),
        Cmd::Verify {
            csv,
            delta,
            tol,
            t_min,
            rate_tol,
        } => verify(&csv, delta, tol, t_min, rate_tol),
        Cmd::Mollify {
            input,
            tau,
            k_list,
            out,
        } => mollify_cmd(&input, tau, k_list.as_deref(), &out),
        Cmd::SolitonCheck {
            field,
            a,
            b,
            c,
            interior_margin,
            tol,
        } => soliton_check(&field, a.as_deref(), b.as_deref(), c, interior_margin, tol),
        Cmd::Rescale {
            snaps,
            times,
            lambda,
            x0,
            out_prefix,
            out_npts,
            out_spacing,
        } => rescale_cmd(&snaps, &times, lambda, &x0, &out_prefix, out_npts, out_spacing),
    }
}

fn print_record(label: &str, r: &lagmcf_core::analysis::DiagnosticsRecord) {
    println!(
        "{label}: t={:.6e} sup|H|^2={:.6e} sup|D3u|^2={:.6e} eig=[{:.6e},{:.6e}] \
         osc(theta)={:.6e} sup|Du|={:.6e} pinch_min={:.6e}",
        r.t, r.sup_h2, r.sup_d3u2, r.eig_min, r.eig_max, r.osc_theta, r.sup_du, r.pinch_min
    );
}

fn simulate(config_path: &PathBuf) -> Result<u8> {
    let cfg = Config::load(config_path)?;
    let grid = cfg.grid.build()?;

    let (u0, offset) = match cfg.preset.initial() {
        InitialData::Periodic(preset) => (make_preset(&preset, &grid)?, None),
        InitialData::QuadraticBackground(a) => (ScalarField::zeros(&grid), Some(a)),
    };
    let u0 = match cfg.mollify_tau {
        Some(tau) => {
            let (smoothed, tau_used) = mollify_with_clamp(&u0, tau)?;
            println!("mollified initial data at tau = {tau_used:.6e}");
            smoothed
        }
        None => u0,
    };

    let state = FlowState::new(u0, offset)?;
    let control = cfg.control.build();
    let out = run(state, &control, cfg.eps_pinch)?;

    println!(
        "advanced {} steps to t = {:.6e} ({} samples)",
        out.state.step_count,
        out.state.t,
        out.series.len()
    );
    if let Some(first) = out.series.first() {
        print_record("initial", first);
    }
    if out.series.len() > 1 {
        print_record("final", out.series.last().unwrap());
    }

    if let Some(path) = &cfg.output.csv {
        DiagnosticsSeries::new(out.series.clone()).to_csv_path(path)?;
        println!("series -> {}", path.display());
    }
    if let Some(path) = &cfg.output.field {
        write_field_path(path, &out.state.u)?;
        println!("field -> {}", path.display());
    }

    match out.error {
        Some(e) => {
            eprintln!("aborted: {e}");
            Ok(2)
        }
        None => Ok(0),
    }
}

fn verify(
    csv: &PathBuf,
    delta: f64,
    tol: f64,
    t_min: Option<f64>,
    rate_tol: f64,
) -> Result<u8> {
    let series = DiagnosticsSeries::from_csv_path(csv)?;
    let records = &series.records;
    let mut all_ok = true;

    let pres = preservation_report(records, delta, tol)?;
    println!(
        "hessian bound:  {} (worst |eig| {:.6e}, bound {:.6e} + tol {:.1e})",
        if pres.eig_ok { "PASS" } else { "FAIL" },
        pres.worst_eig,
        pres.bound,
        tol
    );
    println!(
        "pinching:       {} (worst margin {:.6e} >= -{:.1e})",
        if pres.pinch_ok { "PASS" } else { "FAIL" },
        pres.worst_pinch,
        tol
    );
    all_ok &= pres.passed();

    let mono = monotonicity_report(records, rate_tol)?;
    println!(
        "max principles: {} (osc rate {:.6e}, sup|Du| rate {:.6e} <= {:.1e})",
        if mono.ok { "PASS" } else { "FAIL" },
        mono.osc_theta_rate,
        mono.sup_du_rate,
        rate_tol
    );
    all_ok &= mono.ok;

    if let Some(t_min) = t_min {
        let decay = decay_report(records, t_min)?;
        println!(
            "decay products: {} (final t sup|H|^2 {:.6e} vs anchor {:.6e}, \
             final t sup|D3u|^2 {:.6e} vs anchor {:.6e}, {} samples)",
            if decay.passed() { "PASS" } else { "FAIL" },
            records.last().unwrap().t_sup_h2,
            decay.anchor_t_sup_h2,
            records.last().unwrap().t_sup_d3u2,
            decay.anchor_t_sup_d3u2,
            decay.samples_used
        );
        all_ok &= decay.passed();
    }

    Ok(if all_ok { 0 } else { 2 })
}

fn mollify_cmd(input: &PathBuf, tau: Option<f64>, k_list: Option<&[u32]>, out: &PathBuf) -> Result<u8> {
    let u = read_field_path(input)?;
    match (tau, k_list) {
        (Some(tau), None) => {
            let (smoothed, tau_used) = mollify_with_clamp(&u, tau)?;
            write_field_path(out, &smoothed)?;
            println!("tau = {tau_used:.6e} -> {}", out.display());
        }
        (None, Some(ks)) => {
            let report = mollifier_sequence(&u, ks)?;
            for step in &report.steps {
                let path = format!("{}_k{}.lgf", out.display(), step.k);
                write_field_path(&path, &step.field)?;
                println!(
                    "k={} tau={:.6e} sup|u_k - u|={:.6e} sup|Du_k - Du|={:.6e} -> {path}",
                    step.k, step.tau, step.sup_error, step.grad_sup_error
                );
            }
            println!(
                "sup errors monotone: {}; gradient errors monotone: {}",
                report.sup_error_monotone, report.grad_error_monotone
            );
        }
        _ => unreachable!("clap enforces exactly one of --tau / --k-list"),
    }
    Ok(0)
}

fn pad3(v: Option<&[f64]>, what: &str, ndim: usize) -> Result<[f64; MAX_DIM]> {
    let mut out = [0.0; MAX_DIM];
    if let Some(v) = v {
        if v.len() != ndim {
            return Err(Error::InvalidParameter(format!(
                "{what} needs {ndim} entries, got {}",
                v.len()
            )));
        }
        out[..v.len()].copy_from_slice(v);
    }
    Ok(out)
}

fn soliton_check(
    field: &PathBuf,
    a: Option<&[f64]>,
    b: Option<&[f64]>,
    c: f64,
    interior_margin: usize,
    tol: Option<f64>,
) -> Result<u8> {
    let u = read_field_path(field)?;
    let ndim = u.grid().ndim();
    let spec = SolitonSpec {
        a: pad3(a, "--a", ndim)?,
        b: pad3(b, "--b", ndim)?,
        c,
    };
    let res = soliton_residual_interior(&u, &spec, interior_margin)?;
    println!("soliton residual (margin {interior_margin}): {res:.6e}");
    match tol {
        Some(tol) if res > tol => {
            println!("FAIL (tol {tol:.6e})");
            Ok(2)
        }
        Some(tol) => {
            println!("PASS (tol {tol:.6e})");
            Ok(0)
        }
        None => Ok(0),
    }
}

fn rescale_cmd(
    snaps: &[PathBuf],
    times: &[f64],
    lambda: f64,
    x0: &[usize],
    out_prefix: &str,
    out_npts: Option<Vec<usize>>,
    out_spacing: Option<Vec<f64>>,
) -> Result<u8> {
    if times.len() != snaps.len() {
        return Err(Error::InvalidParameter(format!(
            "{} snapshots but {} times",
            snaps.len(),
            times.len()
        )));
    }
    let mut pairs = Vec::with_capacity(snaps.len());
    for (path, &t) in snaps.iter().zip(times) {
        pairs.push((t, read_field_path(path)?));
    }
    let ndim = pairs[0].1.grid().ndim();
    if x0.len() != ndim {
        return Err(Error::InvalidParameter(format!(
            "--x0 needs {ndim} entries, got {}",
            x0.len()
        )));
    }
    let mut center = [0usize; MAX_DIM];
    center[..ndim].copy_from_slice(x0);

    let req = RescaleRequest {
        lambda,
        center,
        out_npts,
        out_spacing,
    };
    let frames = parabolic_rescale(&pairs, &req)?;
    for (k, frame) in frames.iter().enumerate() {
        let path = format!("{out_prefix}{k}.lgf");
        write_field_path(&path, &frame.field)?;
        println!("frame {k}: s = {:.6e} -> {path}", frame.time);
    }
    Ok(0)
}
