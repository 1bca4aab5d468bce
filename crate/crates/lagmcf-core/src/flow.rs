//! Time stepping.
//!
//! The primary evolution is the scalar potential equation
//! `du/dt = theta(D^2 u)`: the graph `x -> (x, Du)` then moves by mean
//! curvature. A quadratic (non-periodic) background `x^T A x / 2` is carried
//! as a constant Hessian offset so only the periodic part is stored and
//! differentiated. The same graphs can be evolved as plain vector-valued
//! heat flow in the induced metric (`vector_*`), which serves as an
//! independent cross-check on the potential path.

use crate::analysis::{diagnostics, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::geometry::{angle_field, sym_inverse, SymMat};
use crate::grid::{gradient, hessian, GridSpec, ScalarField, SymMatField, VectorField};
use crate::parallel::{try_map_points, zip_map};

/// Explicit time integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    /// Midpoint second-order Runge-Kutta.
    Rk2,
}

/// Step-size and sampling policy for a run.
#[derive(Debug, Clone)]
pub struct StepControl {
    /// CFL fraction in `(0, 1]`; the step is `sigma * min_d h_d^2 / (2 ndim)`.
    pub sigma: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Record diagnostics every this many steps (the initial and final states
    /// are always recorded).
    pub sample_every: usize,
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma <= 0.0 || self.sigma > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma must lie in (0, 1], got {}",
                self.sigma
            )));
        }
        if !self.t_end.is_finite() {
            return Err(Error::InvalidParameter("t_end must be finite".into()));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter(
                "sample_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Largest stable explicit step for the linearization, scaled by `sigma`.
    pub fn dt_for(&self, grid: &GridSpec) -> f64 {
        let mut h2 = f64::INFINITY;
        for d in 0..grid.ndim() {
            h2 = h2.min(grid.spacing(d) * grid.spacing(d));
        }
        self.sigma * h2 / (2.0 * grid.ndim() as f64)
    }
}

/// Potential flow state: the periodic part of the potential, an optional
/// constant Hessian background, and the clock.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub u: ScalarField,
    /// Constant Hessian `A` of a quadratic background `x^T A x / 2`; the
    /// effective Hessian everywhere is `A + D^2 u`.
    pub hessian_offset: Option<SymMat>,
    pub t: f64,
    pub step_count: u64,
}

impl FlowState {
    pub fn new(u: ScalarField, hessian_offset: Option<SymMat>) -> Result<Self> {
        if let Some(a) = &hessian_offset {
            if a.dim() != u.grid().ndim() {
                return Err(Error::InvalidParameter(format!(
                    "hessian offset dimension {} does not match grid dimension {}",
                    a.dim(),
                    u.grid().ndim()
                )));
            }
            if a.upper().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "hessian offset entries must be finite".into(),
                ));
            }
        }
        Ok(FlowState {
            u,
            hessian_offset,
            t: 0.0,
            step_count: 0,
        })
    }

    /// Hessian of the full potential, background included.
    pub fn full_hessian(&self) -> SymMatField {
        let h = hessian(&self.u);
        match &self.hessian_offset {
            Some(a) => h.add_constant(a),
            None => h,
        }
    }
}

/// Right-hand side of the potential equation: the angle of the full Hessian.
pub fn potential_rhs(state: &FlowState) -> Result<ScalarField> {
    angle_field(&state.full_hessian())
}

/// `u + dt k`, aborting on the first non-finite value (reported at `t_at`).
fn stepped(u: &ScalarField, k: &ScalarField, dt: f64, t_at: f64) -> Result<ScalarField> {
    let vals = zip_map(u.values(), k.values(), move |a, b| a + dt * b);
    if let Some(index) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::Blowup { index, t: t_at });
    }
    ScalarField::from_values(u.grid(), vals)
}

/// One explicit step from a precomputed stage-one slope.
fn advance_potential(
    state: &FlowState,
    k1: &ScalarField,
    dt: f64,
    scheme: Scheme,
) -> Result<FlowState> {
    let u_new = match scheme {
        Scheme::Euler => stepped(&state.u, k1, dt, state.t)?,
        Scheme::Rk2 => {
            let mid = FlowState {
                u: stepped(&state.u, k1, 0.5 * dt, state.t)?,
                hessian_offset: state.hessian_offset,
                t: state.t + 0.5 * dt,
                step_count: state.step_count,
            };
            let k2 = potential_rhs(&mid)?;
            stepped(&state.u, &k2, dt, state.t)?
        }
    };
    Ok(FlowState {
        u: u_new,
        hessian_offset: state.hessian_offset,
        t: state.t + dt,
        step_count: state.step_count + 1,
    })
}

/// Advance the potential flow by one explicit step of size `dt`.
pub fn potential_step(state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive and finite, got {dt}"
        )));
    }
    let k1 = potential_rhs(state)?;
    advance_potential(state, &k1, dt, scheme)
}

/// Relative slack for the per-step angle-oscillation alarm.
pub const OSC_GROWTH_REL: f64 = 0.05;
/// Absolute slack for the per-step angle-oscillation alarm.
pub const OSC_GROWTH_ABS: f64 = 1e-7;

/// The maximum principle says `osc(theta)` never grows along the flow; a
/// step that inflates it beyond slack signals an unstable discretization.
pub(crate) fn osc_grew(prev: f64, new: f64) -> bool {
    new > prev * (1.0 + OSC_GROWTH_REL) + OSC_GROWTH_ABS
}

/// A completed (or aborted) run: final state, sampled diagnostics, and the
/// abort reason if the run did not reach `t_end`.
#[derive(Debug)]
pub struct RunOutput {
    pub state: FlowState,
    pub series: Vec<DiagnosticsRecord>,
    /// `None` when `t_end` was reached; otherwise why stepping stopped. The
    /// state and series hold everything up to the abort.
    pub error: Option<Error>,
}

/// Run the potential flow to `t_end`, recording diagnostics along the way.
///
/// The span is covered by uniform steps of the largest size allowed by
/// `control` (the last sample lands on `t_end` exactly). Numerical aborts —
/// blow-up, oscillation growth — end stepping early and are reported in
/// [`RunOutput::error`]; hard errors (invalid control or initial data) are
/// returned as `Err`. `t_end <= t` yields an empty series.
pub fn run(state: FlowState, control: &StepControl, eps_pinch: f64) -> Result<RunOutput> {
    run_observed(state, control, eps_pinch, |_, _| {})
}

/// [`run`], additionally handing every sampled state to `observer` alongside
/// the record computed from it.
pub fn run_observed(
    mut state: FlowState,
    control: &StepControl,
    eps_pinch: f64,
    mut observer: impl FnMut(&FlowState, &DiagnosticsRecord),
) -> Result<RunOutput> {
    control.validate()?;
    let mut series = Vec::new();
    if control.t_end <= state.t {
        return Ok(RunOutput {
            state,
            series,
            error: None,
        });
    }
    let dt0 = control.dt_for(state.u.grid());
    let span = control.t_end - state.t;
    let n_steps = (span / dt0).ceil().max(1.0) as u64;
    let dt = span / n_steps as f64;

    // the initial sample also validates the state and eps_pinch
    let rec0 = diagnostics(&state, eps_pinch)?;
    observer(&state, &rec0);
    series.push(rec0);

    let mut run_error = None;
    let mut osc_prev = f64::INFINITY;
    for k in 1..=n_steps {
        let k1 = match potential_rhs(&state) {
            Ok(v) => v,
            Err(e) => {
                run_error = Some(e);
                break;
            }
        };
        let osc = k1.osc();
        if osc_grew(osc_prev, osc) {
            run_error = Some(Error::Instability {
                prev: osc_prev,
                new: osc,
                t: state.t,
            });
            break;
        }
        osc_prev = osc;
        state = match advance_potential(&state, &k1, dt, control.scheme) {
            Ok(s) => s,
            Err(e) => {
                run_error = Some(e);
                break;
            }
        };
        if k == n_steps {
            state.t = control.t_end; // absorb additive rounding drift
        }
        if k == n_steps || k % control.sample_every as u64 == 0 {
            match diagnostics(&state, eps_pinch) {
                Ok(rec) => {
                    observer(&state, &rec);
                    series.push(rec);
                }
                Err(e) => {
                    run_error = Some(e);
                    break;
                }
            }
        }
    }
    Ok(RunOutput {
        state,
        series,
        error: run_error,
    })
}

/// Largest codimension the vector flow supports.
pub const MAX_CODIM: usize = 4;

/// Graphical mean curvature flow in vector form: each component obeys
/// `df^a/dt = g^{ij} (f^a)_ij` with `g = I + sum_a Df^a (x) Df^a`.
#[derive(Debug, Clone)]
pub struct VectorFlowState {
    pub f: VectorField,
    pub t: f64,
    pub step_count: u64,
}

impl VectorFlowState {
    pub fn new(f: VectorField) -> Result<Self> {
        if f.ncomp() == 0 || f.ncomp() > MAX_CODIM {
            return Err(Error::InvalidParameter(format!(
                "vector flow supports 1..={MAX_CODIM} components, got {}",
                f.ncomp()
            )));
        }
        Ok(VectorFlowState {
            f,
            t: 0.0,
            step_count: 0,
        })
    }
}

/// Right-hand side of the vector flow.
pub fn vector_rhs(state: &VectorFlowState) -> Result<VectorField> {
    let grid = state.f.grid().clone();
    let ndim = grid.ndim();
    let ncomp = state.f.ncomp();
    if ncomp == 0 || ncomp > MAX_CODIM {
        return Err(Error::InvalidParameter(format!(
            "vector flow supports 1..={MAX_CODIM} components, got {ncomp}"
        )));
    }
    let grads: Vec<VectorField> = (0..ncomp)
        .map(|a| gradient(&state.f.comp_field(a)))
        .collect();
    let hessians: Vec<SymMatField> = (0..ncomp)
        .map(|a| hessian(&state.f.comp_field(a)))
        .collect();

    let rows: Vec<[f64; MAX_CODIM]> = try_map_points(grid.len(), |p| {
        let mut g = SymMat::identity(ndim);
        for gr in &grads {
            for i in 0..ndim {
                for j in i..ndim {
                    g.set(i, j, g.get(i, j) + gr.at(p, i) * gr.at(p, j));
                }
            }
        }
        let ginv = sym_inverse(&g);
        let mut out = [0.0; MAX_CODIM];
        for (a, hs) in hessians.iter().enumerate() {
            let h = hs.at_mat(p);
            let mut s = 0.0;
            for i in 0..ndim {
                for j in 0..ndim {
                    s += ginv.get(i, j) * h.get(i, j);
                }
            }
            out[a] = s;
        }
        Ok(out)
    })?;

    let mut rhs = VectorField::zeros(&grid, ncomp);
    for a in 0..ncomp {
        let comp = rhs.comp_mut(a);
        for (p, row) in rows.iter().enumerate() {
            comp[p] = row[a];
        }
    }
    Ok(rhs)
}

/// `f + dt k` componentwise with the same blow-up scan as the scalar path;
/// the reported index is into the component-major storage.
fn stepped_vec(f: &VectorField, k: &VectorField, dt: f64, t_at: f64) -> Result<VectorField> {
    let len = f.grid().len();
    let mut out = VectorField::zeros(f.grid(), f.ncomp());
    for a in 0..f.ncomp() {
        let vals = zip_map(f.comp(a), k.comp(a), move |x, s| x + dt * s);
        if let Some(p) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                index: a * len + p,
                t: t_at,
            });
        }
        out.comp_mut(a).copy_from_slice(&vals);
    }
    Ok(out)
}

/// Advance the vector flow by one explicit step of size `dt`.
pub fn vector_step(state: &VectorFlowState, dt: f64, scheme: Scheme) -> Result<VectorFlowState> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive and finite, got {dt}"
        )));
    }
    let k1 = vector_rhs(state)?;
    let f_new = match scheme {
        Scheme::Euler => stepped_vec(&state.f, &k1, dt, state.t)?,
        Scheme::Rk2 => {
            let mid = VectorFlowState {
                f: stepped_vec(&state.f, &k1, 0.5 * dt, state.t)?,
                t: state.t + 0.5 * dt,
                step_count: state.step_count,
            };
            let k2 = vector_rhs(&mid)?;
            stepped_vec(&state.f, &k2, dt, state.t)?
        }
    };
    Ok(VectorFlowState {
        f: f_new,
        t: state.t + dt,
        step_count: state.step_count + 1,
    })
}
