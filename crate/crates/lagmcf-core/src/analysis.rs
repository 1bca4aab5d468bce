//! Diagnostics along a run, series I/O, and verification reports.
//!
//! A [`DiagnosticsRecord`] captures the scalar invariants the estimates are
//! phrased in: curvature sups and their `t`-weighted products, Hessian
//! eigenvalue extremes, angle oscillation, gradient sup and pinching margin.
//! Reports then turn a sampled series into pass/fail verdicts for bound
//! preservation, maximum principles, and long-time decay; residual helpers
//! measure how far a single field is from soliton or special-Lagrangian
//! equilibria.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::geometry::{angle_field, graph_geometry, hessian_eig_extremes, pinch_margin};
use crate::grid::{gradient, hessian, third_derivatives, ScalarField, MAX_DIM};
use crate::parallel::try_reduce_points;

/// Pointwise-reduced invariants of one flow state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `sup |H|^2` over the grid.
    pub sup_h2: f64,
    /// `sup |D^3 u|^2` (Euclidean square of the symmetrized third tensor).
    pub sup_d3u2: f64,
    /// `t * sup |H|^2` — the interior decay product.
    pub t_sup_h2: f64,
    /// `t * sup |D^3 u|^2`.
    pub t_sup_d3u2: f64,
    /// Extremes of the full Hessian spectrum.
    pub eig_min: f64,
    pub eig_max: f64,
    /// Oscillation of the Lagrangian angle.
    pub osc_theta: f64,
    /// Sup of the Euclidean norm of the periodic gradient part.
    pub sup_du: f64,
    /// Minimum of the pinching margin at the `eps` the record was taken at.
    pub pinch_min: f64,
}

/// Compute all diagnostics of a state in one fused pass.
///
/// The Hessian includes the state's constant background; third derivatives
/// see only the periodic part (a constant offset has none), and `sup_du`
/// likewise measures the periodic gradient.
pub fn diagnostics(state: &FlowState, eps_pinch: f64) -> Result<DiagnosticsRecord> {
    let hess = state.full_hessian();
    let third = third_derivatives(&state.u);
    let sup_du = gradient(&state.u).sup_norm();
    let grid = state.u.grid();
    let dim = grid.ndim();

    // [sup_h2, sup_d3u2, theta_min, theta_max, eig_min, eig_max, pinch_min]
    let id = [
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
    ];
    let acc = try_reduce_points(
        grid.len(),
        id,
        |p| {
            let m = hess.at_mat(p);
            let r = third.at_rank3(p);
            let geo = graph_geometry(&m, &r)?;
            let pinch = pinch_margin(&m, eps_pinch)?;
            Ok([
                geo.mean_curvature_sq + 0.0,
                r.euclidean_sq() + 0.0,
                geo.angle + 0.0,
                geo.angle + 0.0,
                geo.eigenvalues[0] + 0.0,
                geo.eigenvalues[dim - 1] + 0.0,
                pinch + 0.0,
            ])
        },
        |a, b| {
            [
                a[0].max(b[0]),
                a[1].max(b[1]),
                a[2].min(b[2]),
                a[3].max(b[3]),
                a[4].min(b[4]),
                a[5].max(b[5]),
                a[6].min(b[6]),
            ]
        },
    )?;

    Ok(DiagnosticsRecord {
        t: state.t,
        sup_h2: acc[0],
        sup_d3u2: acc[1],
        t_sup_h2: state.t * acc[0],
        t_sup_d3u2: state.t * acc[1],
        eig_min: acc[4],
        eig_max: acc[5],
        osc_theta: acc[3] - acc[2],
        sup_du,
        pinch_min: acc[6],
    })
}

/// Exact column header of the series CSV format.
pub const CSV_HEADER: &str =
    "t,sup_H2,sup_D3u2,t_supH2,t_supD3u2,eig_min,eig_max,osc_theta,sup_Du,pinch_min";

/// A sampled diagnostics series with lossless CSV round-tripping.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsSeries {
    pub records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsSeries {
    pub fn new(records: Vec<DiagnosticsRecord>) -> Self {
        DiagnosticsSeries { records }
    }

    /// Write as CSV; 17 significant digits, so values survive a round trip
    /// bit for bit.
    pub fn to_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t,
                r.sup_h2,
                r.sup_d3u2,
                r.t_sup_h2,
                r.t_sup_d3u2,
                r.eig_min,
                r.eig_max,
                r.osc_theta,
                r.sup_du,
                r.pinch_min,
            )?;
        }
        Ok(())
    }

    pub fn from_csv(r: impl Read) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim_end() == CSV_HEADER => {}
            Some(Ok(h)) => {
                return Err(Error::Csv(format!("unexpected header: {h:?}")));
            }
            Some(Err(e)) => return Err(e.into()),
            None => return Err(Error::Csv("empty input".into())),
        }
        let mut records = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(Error::Csv(format!(
                    "line {}: expected 10 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let mut v = [0.0_f64; 10];
            for (k, s) in fields.iter().enumerate() {
                v[k] = s.trim().parse::<f64>().map_err(|e| {
                    Error::Csv(format!("line {}: field {}: {e}", lineno + 2, k + 1))
                })?;
            }
            records.push(DiagnosticsRecord {
                t: v[0],
                sup_h2: v[1],
                sup_d3u2: v[2],
                t_sup_h2: v[3],
                t_sup_d3u2: v[4],
                eig_min: v[5],
                eig_max: v[6],
                osc_theta: v[7],
                sup_du: v[8],
                pinch_min: v[9],
            });
        }
        Ok(DiagnosticsSeries { records })
    }

    pub fn to_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_csv(std::fs::File::create(path)?)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }
}

fn validate_series(series: &[DiagnosticsRecord]) -> Result<()> {
    if series.is_empty() {
        return Err(Error::InvalidParameter("empty diagnostics series".into()));
    }
    if series.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(Error::InvalidParameter(
            "series times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Did the Hessian bound and the pinching stay where they started?
#[derive(Debug, Clone, Copy)]
pub struct PreservationReport {
    /// The preserved bound `1 - delta`.
    pub bound: f64,
    /// Largest `max(|eig_min|, |eig_max|)` over the series.
    pub worst_eig: f64,
    pub eig_ok: bool,
    /// Smallest pinching margin over the series.
    pub worst_pinch: f64,
    pub pinch_ok: bool,
}

impl PreservationReport {
    pub fn passed(&self) -> bool {
        self.eig_ok && self.pinch_ok
    }
}

/// Check `|eig| <= (1 - delta) + tol` and `pinch_min >= -tol` across a run.
pub fn preservation_report(
    series: &[DiagnosticsRecord],
    delta: f64,
    tol: f64,
) -> Result<PreservationReport> {
    validate_series(series)?;
    if !delta.is_finite() || !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in [0, 1), got {delta}"
        )));
    }
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let bound = 1.0 - delta;
    let mut worst_eig = 0.0_f64;
    let mut worst_pinch = f64::INFINITY;
    for r in series {
        worst_eig = worst_eig.max(r.eig_min.abs()).max(r.eig_max.abs());
        worst_pinch = worst_pinch.min(r.pinch_min);
    }
    Ok(PreservationReport {
        bound,
        worst_eig,
        eig_ok: worst_eig <= bound + tol,
        worst_pinch,
        pinch_ok: worst_pinch >= -tol,
    })
}

/// Worst per-unit-time growth of the quantities the maximum principle says
/// cannot grow.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicityReport {
    /// Largest `(osc_theta' - osc_theta) / (t' - t)` over consecutive samples.
    pub osc_theta_rate: f64,
    /// Same for `sup_du`.
    pub sup_du_rate: f64,
    pub rate_tol: f64,
    pub ok: bool,
}

/// Check the sampled maximum principles at a growth-rate tolerance.
pub fn monotonicity_report(
    series: &[DiagnosticsRecord],
    rate_tol: f64,
) -> Result<MonotonicityReport> {
    validate_series(series)?;
    if !rate_tol.is_finite() || rate_tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rate tolerance must be nonnegative, got {rate_tol}"
        )));
    }
    let mut osc_rate = f64::NEG_INFINITY;
    let mut du_rate = f64::NEG_INFINITY;
    for w in series.windows(2) {
        let dt = w[1].t - w[0].t;
        osc_rate = osc_rate.max((w[1].osc_theta - w[0].osc_theta) / dt);
        du_rate = du_rate.max((w[1].sup_du - w[0].sup_du) / dt);
    }
    if series.len() == 1 {
        // nothing to compare; vacuously monotone
        osc_rate = 0.0;
        du_rate = 0.0;
    }
    Ok(MonotonicityReport {
        osc_theta_rate: osc_rate,
        sup_du_rate: du_rate,
        rate_tol,
        ok: osc_rate <= rate_tol && du_rate <= rate_tol,
    })
}

/// How the interior decay products behaved after an anchor time.
#[derive(Debug, Clone, Copy)]
pub struct DecayReport {
    /// Time of the first sample at or after the requested anchor.
    pub anchor_t: f64,
    pub anchor_t_sup_h2: f64,
    pub anchor_t_sup_d3u2: f64,
    /// Maxima of the products over the tail from the anchor on.
    pub max_t_sup_h2: f64,
    pub max_t_sup_d3u2: f64,
    /// Final product no larger than at the anchor.
    pub final_le_anchor_h2: bool,
    pub final_le_anchor_d3u2: bool,
    /// Samples in the tail; `1` makes the flags vacuously true.
    pub samples_used: usize,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        self.final_le_anchor_h2 && self.final_le_anchor_d3u2
    }
}

/// Summarize the decay products `t sup|H|^2`, `t sup|D^3u|^2` from the first
/// sample at `t >= t_min` onward.
pub fn decay_report(series: &[DiagnosticsRecord], t_min: f64) -> Result<DecayReport> {
    validate_series(series)?;
    if !t_min.is_finite() {
        return Err(Error::InvalidParameter("t_min must be finite".into()));
    }
    let start = series
        .iter()
        .position(|r| r.t >= t_min)
        .ok_or_else(|| Error::InvalidParameter(format!("no samples at or after t = {t_min}")))?;
    let tail = &series[start..];
    let anchor = tail[0];
    let last = tail[tail.len() - 1];
    let mut max_h2 = f64::NEG_INFINITY;
    let mut max_d3 = f64::NEG_INFINITY;
    for r in tail {
        max_h2 = max_h2.max(r.t_sup_h2);
        max_d3 = max_d3.max(r.t_sup_d3u2);
    }
    Ok(DecayReport {
        anchor_t: anchor.t,
        anchor_t_sup_h2: anchor.t_sup_h2,
        anchor_t_sup_d3u2: anchor.t_sup_d3u2,
        max_t_sup_h2: max_h2,
        max_t_sup_d3u2: max_d3,
        final_le_anchor_h2: last.t_sup_h2 <= anchor.t_sup_h2,
        final_le_anchor_d3u2: last.t_sup_d3u2 <= anchor.t_sup_d3u2,
        samples_used: tail.len(),
    })
}

/// Has a state flattened out? Measures the periodic part only; a constant
/// background never decays and is excluded by construction.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceReport {
    /// `sup` of `|eig(D^2 u)|` over the grid.
    pub sup_hessian_eig: f64,
    /// Largest oscillation of a gradient component.
    pub max_gradient_osc: f64,
    pub tol: f64,
    pub ok: bool,
}

/// Check convergence of the periodic part to a flat plane.
pub fn convergence_check(state: &FlowState, tol: f64) -> Result<ConvergenceReport> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (lo, hi) = hessian_eig_extremes(&hessian(&state.u))?;
    let sup_eig = lo.abs().max(hi.abs());
    let grad = gradient(&state.u);
    let mut osc = 0.0_f64;
    for c in 0..grad.ncomp() {
        osc = osc.max(grad.comp_field(c).osc());
    }
    Ok(ConvergenceReport {
        sup_hessian_eig: sup_eig,
        max_gradient_osc: osc,
        tol,
        ok: sup_eig <= tol && osc <= tol,
    })
}

/// Coefficients of the soliton relation `theta + a . Du - b . x = c`.
#[derive(Debug, Clone, Copy)]
pub struct SolitonSpec {
    pub a: [f64; MAX_DIM],
    pub b: [f64; MAX_DIM],
    pub c: f64,
}

fn residual_impl(u: &ScalarField, spec: &SolitonSpec, margin: usize) -> Result<f64> {
    let grid = u.grid();
    let ndim = grid.ndim();
    for d in 0..ndim {
        if !spec.a[d].is_finite() || !spec.b[d].is_finite() {
            return Err(Error::InvalidParameter(
                "soliton coefficients must be finite".into(),
            ));
        }
        if 2 * margin >= grid.npts(d) {
            return Err(Error::InvalidParameter(format!(
                "margin {margin} leaves no interior on axis {d}"
            )));
        }
    }
    if !spec.c.is_finite() {
        return Err(Error::InvalidParameter(
            "soliton constant must be finite".into(),
        ));
    }

    let theta = angle_field(&hessian(u))?;
    let needs_grad = (0..ndim).any(|d| spec.a[d] != 0.0);
    let grad = if needs_grad { Some(gradient(u)) } else { None };

    let mut sup = 0.0_f64;
    for p in 0..grid.len() {
        let idx = grid.multi_index(p);
        if (0..ndim).any(|d| idx[d] < margin || idx[d] >= grid.npts(d) - margin) {
            continue;
        }
        let x = grid.point_coords(p);
        let mut r = theta.values()[p] - spec.c;
        if let Some(g) = &grad {
            for d in 0..ndim {
                r += spec.a[d] * g.at(p, d);
            }
        }
        for d in 0..ndim {
            r -= spec.b[d] * x[d];
        }
        sup = sup.max(r.abs());
    }
    Ok(sup)
}

/// Sup of `|theta + a . Du - b . x - c|` over the whole grid.
pub fn soliton_residual(u: &ScalarField, spec: &SolitonSpec) -> Result<f64> {
    residual_impl(u, spec, 0)
}

/// [`soliton_residual`] skipping `margin` cells on each side of the wrap
/// seam — for fields (quadratics, unbounded solitons) whose ideal form is
/// not periodic, so stencils across the seam are meaningless.
pub fn soliton_residual_interior(
    u: &ScalarField,
    spec: &SolitonSpec,
    margin: usize,
) -> Result<f64> {
    residual_impl(u, spec, margin)
}

/// Sup of `|theta - theta0|`: distance from the special-Lagrangian condition.
pub fn special_lagrangian_residual(u: &ScalarField, theta0: f64) -> Result<f64> {
    soliton_residual(
        u,
        &SolitonSpec {
            a: [0.0; MAX_DIM],
            b: [0.0; MAX_DIM],
            c: theta0,
        },
    )
}
