//! Heat-kernel mollification on the torus.
//!
//! The kernel is the periodized Gaussian of variance `2 tau` per axis,
//! sampled at the grid points, truncated at `8 sigma` and renormalized to
//! unit mass, applied as a separable circular convolution. Sums use
//! compensated accumulation so normalization holds to machine precision and
//! constants are true fixed points.

use crate::error::{Error, Result};
use crate::grid::{gradient, GridSpec, ScalarField};
use crate::parallel::{map_points, try_reduce_points};

/// Compensated (Neumaier) accumulator.
#[derive(Clone, Copy, Default)]
pub(crate) struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    pub(crate) fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Folded, truncated, unit-mass Gaussian weights along one axis.
fn axis_kernel(grid: &GridSpec, axis: usize, tau: f64) -> Vec<f64> {
    let n = grid.npts(axis);
    let h = grid.spacing(axis);
    let sigma = (2.0 * tau).sqrt();
    let support = (8.0 * sigma / h).ceil() as i64;
    let mut kern = vec![0.0; n];
    for j in -support..=support {
        let r = j as f64 * h;
        let w = (-r * r / (4.0 * tau)).exp();
        let idx = (j.rem_euclid(n as i64)) as usize;
        kern[idx] += w;
    }
    let mut total = Acc::default();
    for &w in &kern {
        total.add(w);
    }
    let inv = 1.0 / total.value();
    for w in &mut kern {
        *w *= inv;
    }
    kern
}

/// Smallest usable width: the sampled Gaussian needs `sigma >= 2 h` on every
/// axis to stay an accurate quadrature, i.e. `tau >= 2 max(h)^2`.
fn tau_floor(grid: &GridSpec) -> f64 {
    let mut hmax = 0.0_f64;
    for d in 0..grid.ndim() {
        hmax = hmax.max(grid.spacing(d));
    }
    2.0 * hmax * hmax
}

/// Mollify and report the time actually used: requests below the resolvable
/// floor are clamped up to it.
pub fn mollify_with_clamp(u: &ScalarField, tau: f64) -> Result<(ScalarField, f64)> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mollifier time must be positive and finite, got {tau}"
        )));
    }
    let grid = u.grid().clone();
    let tau_used = tau.max(tau_floor(&grid));

    let mut current = u.values().to_vec();
    for d in 0..grid.ndim() {
        let kern = axis_kernel(&grid, d, tau_used);
        let n = grid.npts(d);
        let stride = grid.stride(d) as isize;
        let src = current;
        let src_ref = &src;
        let kern_ref = &kern;
        let g = &grid;
        current = map_points(grid.len(), move |p| {
            let t = g.multi_index(p)[d];
            let mut acc = Acc::default();
            for (m, &w) in kern_ref.iter().enumerate() {
                let ts = (t + n - m) % n;
                let q = (p as isize + (ts as isize - t as isize) * stride) as usize;
                acc.add(w * src_ref[q]);
            }
            acc.value()
        });
    }
    Ok((ScalarField::from_values(&grid, current)?, tau_used))
}

/// Heat-kernel smoothing by time `tau` (silently clamped to the grid floor).
pub fn mollify(u: &ScalarField, tau: f64) -> Result<ScalarField> {
    Ok(mollify_with_clamp(u, tau)?.0)
}

/// One member of a mollifier sequence.
#[derive(Debug, Clone)]
pub struct MollifierStep {
    pub k: u32,
    /// `1 / k`, possibly clamped.
    pub tau: f64,
    pub field: ScalarField,
    /// `sup |u_k - u|`.
    pub sup_error: f64,
    /// `sup |Du_k - Du|` (pointwise Euclidean norm of the gradient gap).
    pub grad_sup_error: f64,
}

/// Convergence report for a family `u_k = heat(1/k) u`.
#[derive(Debug, Clone)]
pub struct MollifierReport {
    pub steps: Vec<MollifierStep>,
    pub sup_error_monotone: bool,
    pub grad_error_monotone: bool,
}

fn sup_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let av = a.values();
    let bv = b.values();
    try_reduce_points(
        av.len(),
        0.0_f64,
        |p| Ok((av[p] - bv[p]).abs()),
        f64::max,
    )
    .expect("infallible reduction")
}

fn sup_grad_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let da = gradient(a);
    let db = gradient(b);
    let n = a.grid().len();
    let ndim = a.grid().ndim();
    try_reduce_points(
        n,
        0.0_f64,
        |p| {
            let mut s = 0.0;
            for c in 0..ndim {
                let d = da.at(p, c) - db.at(p, c);
                s += d * d;
            }
            Ok(s)
        },
        f64::max,
    )
    .expect("infallible reduction")
    .sqrt()
}

/// Mollify `u0` at `tau = 1/k` for each requested `k` (strictly increasing)
/// and measure convergence back to `u0` in the sup norm, for the values and
/// the gradients.
pub fn mollifier_sequence(u0: &ScalarField, ks: &[u32]) -> Result<MollifierReport> {
    if ks.is_empty() {
        return Err(Error::InvalidParameter("mollifier sequence needs at least one k".into()));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidParameter("mollifier indices must be positive".into()));
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "mollifier indices must be strictly increasing".into(),
        ));
    }
    let mut steps = Vec::with_capacity(ks.len());
    for &k in ks {
        let (field, tau) = mollify_with_clamp(u0, 1.0 / k as f64)?;
        let sup_error = sup_abs_diff(&field, u0);
        let grad_sup_error = sup_grad_diff(&field, u0);
        steps.push(MollifierStep {
            k,
            tau,
            field,
            sup_error,
            grad_sup_error,
        });
    }
    let slack = 1e-12;
    let sup_error_monotone = steps
        .windows(2)
        .all(|w| w[1].sup_error <= w[0].sup_error + slack);
    let grad_error_monotone = steps
        .windows(2)
        .all(|w| w[1].grad_sup_error <= w[0].grad_sup_error + slack);
    Ok(MollifierReport {
        steps,
        sup_error_monotone,
        grad_error_monotone,
    })
}
