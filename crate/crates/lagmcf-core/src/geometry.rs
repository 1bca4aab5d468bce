//! Pointwise geometry of the Lagrangian graph `(x, Du(x))`.
//!
//! Everything here is a function of the Hessian `M = D^2 u` (and, for
//! curvature, the third derivatives): the eigenvalues of `M`, the Lagrangian
//! angle `theta = sum_i arctan(lambda_i)`, the induced metric
//! `g = I + M^2`, the pinching tensor `s = I - M^2`, the second fundamental
//! form `h_ijk = -u_ijk` and the curvature norms built from them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Rank3Field, ScalarField, SymMatField, VectorField};
use crate::parallel::{try_map_points, try_reduce_points};
pub use crate::sym::{SymMat, SymRank3, MAX_N};

/// Jacobi sweep budget; far beyond what 3x3 or 4x4 ever needs.
const JACOBI_MAX_SWEEPS: usize = 50;
/// Off-diagonal norm target, relative to the matrix scale.
const JACOBI_TOL: f64 = 1e-14;

fn eig2vals(a: f64, b: f64, d: f64) -> (f64, f64) {
    let tr = a + d;
    let diff = a - d;
    let disc = (diff * diff + 4.0 * b * b).sqrt();
    (0.5 * (tr - disc), 0.5 * (tr + disc))
}

/// Cyclic Jacobi on a dense copy; returns ascending eigenvalues and the
/// accumulated rotation (columns are eigenvectors).
fn jacobi(m: &SymMat) -> Result<([f64; MAX_N], [[f64; MAX_N]; MAX_N])> {
    let n = m.dim();
    let mut a = [[0.0; MAX_N]; MAX_N];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = m.get(i, j);
        }
    }
    let mut q = [[0.0; MAX_N]; MAX_N];
    for (i, row) in q.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }

    let fro: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j] * a[i][j])
        .sum::<f64>()
        .sqrt();
    let tol = JACOBI_TOL * fro.max(1.0);
    let off = |a: &[[f64; MAX_N]; MAX_N]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[i][j] * a[i][j];
            }
        }
        s.sqrt()
    };

    let mut converged = off(&a) <= tol;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j].abs() < 1e-300 {
                    continue;
                }
                // rotation zeroing a[i][j]
                let tau = (a[j][j] - a[i][i]) / (2.0 * a[i][j]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let t1 = a[k][i];
                    let t2 = a[k][j];
                    a[k][i] = c * t1 - s * t2;
                    a[k][j] = s * t1 + c * t2;
                }
                for k in 0..n {
                    let t1 = a[i][k];
                    let t2 = a[j][k];
                    a[i][k] = c * t1 - s * t2;
                    a[j][k] = s * t1 + c * t2;
                }
                a[i][j] = 0.0;
                a[j][i] = 0.0;
                for row in q.iter_mut().take(n) {
                    let t1 = row[i];
                    let t2 = row[j];
                    row[i] = c * t1 - s * t2;
                    row[j] = s * t1 + c * t2;
                }
            }
        }
        converged = off(&a) <= tol;
    }
    if !converged {
        return Err(Error::EigenNonConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut vals = [0.0; MAX_N];
    for i in 0..n {
        vals[i] = a[i][i];
    }
    // ascending order, eigenvector columns follow their values
    for i in 0..n {
        let mut lo = i;
        for j in i + 1..n {
            if vals[j] < vals[lo] {
                lo = j;
            }
        }
        if lo != i {
            vals.swap(i, lo);
            for row in q.iter_mut().take(n) {
                row.swap(i, lo);
            }
        }
    }
    Ok((vals, q))
}

/// Eigenvalues in ascending order; entries past `m.dim()` are zero.
/// Dimensions 1 and 2 use closed forms, larger ones cyclic Jacobi.
pub fn sym_eigenvalues(m: &SymMat) -> Result<[f64; MAX_N]> {
    let mut vals = [0.0; MAX_N];
    match m.dim() {
        1 => vals[0] = m.get(0, 0),
        2 => {
            let (l0, l1) = eig2vals(m.get(0, 0), m.get(0, 1), m.get(1, 1));
            vals[0] = l0;
            vals[1] = l1;
        }
        _ => return Ok(jacobi(m)?.0),
    }
    Ok(vals)
}

/// Full decomposition: ascending eigenvalues and an orthogonal matrix whose
/// columns `q[.][k]` are the matching eigenvectors.
pub fn sym_eigen(m: &SymMat) -> Result<([f64; MAX_N], [[f64; MAX_N]; MAX_N])> {
    match m.dim() {
        1 => {
            let mut vals = [0.0; MAX_N];
            vals[0] = m.get(0, 0);
            let mut q = [[0.0; MAX_N]; MAX_N];
            q[0][0] = 1.0;
            Ok((vals, q))
        }
        _ => jacobi(m),
    }
}

/// The Lagrangian angle `sum_i arctan(lambda_i)`.
pub fn lagrangian_angle(m: &SymMat) -> Result<f64> {
    match m.dim() {
        1 => Ok(m.get(0, 0).atan()),
        2 => {
            let (l0, l1) = eig2vals(m.get(0, 0), m.get(0, 1), m.get(1, 1));
            Ok(l0.atan() + l1.atan())
        }
        _ => {
            let vals = jacobi(m)?.0;
            Ok(vals[..m.dim()].iter().map(|l| l.atan()).sum())
        }
    }
}

/// The angle through the determinant identity
/// `theta = (1/i) log[ det(I + iM) / sqrt(det(I + M^2)) ]`.
///
/// The unit-modulus factors `(1 + i lambda_k) / sqrt(1 + lambda_k^2)` are
/// multiplied one at a time; each contributes an argument in
/// `(-pi/2, pi/2)`, so accumulating principal-branch increments tracks the
/// total angle across branch cuts. Reference implementation for tests; the
/// flow itself uses [`lagrangian_angle`].
pub fn angle_via_logdet(m: &SymMat) -> Result<f64> {
    let vals = sym_eigenvalues(m)?;
    let mut acc = Complex64::new(1.0, 0.0);
    let mut angle = 0.0;
    let mut prev = 0.0;
    for &l in &vals[..m.dim()] {
        let norm = (1.0 + l * l).sqrt();
        acc *= Complex64::new(1.0 / norm, l / norm);
        let arg = acc.arg();
        let mut delta = arg - prev;
        if delta > std::f64::consts::PI {
            delta -= std::f64::consts::TAU;
        } else if delta < -std::f64::consts::PI {
            delta += std::f64::consts::TAU;
        }
        angle += delta;
        prev = arg;
    }
    Ok(angle)
}

/// Smallest eigenvalue margin of `s - eps * g` at one point:
/// `min_i (1 - lambda_i^2) - eps (1 + lambda_i^2)`. Nonnegative iff the
/// pinching condition holds there.
pub fn pinch_margin(m: &SymMat, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "pinching eps must lie in [0, 1), got {eps}"
        )));
    }
    let vals = sym_eigenvalues(m)?;
    let mut margin = f64::INFINITY;
    for &l in &vals[..m.dim()] {
        margin = margin.min((1.0 - l * l) - eps * (1.0 + l * l));
    }
    Ok(margin)
}

/// Pointwise geometry of the graph at one grid point.
#[derive(Debug, Clone)]
pub struct GeometrySample {
    pub dim: usize,
    /// Hessian eigenvalues, ascending; slots past `dim` are zero.
    pub eigenvalues: [f64; MAX_N],
    /// Lagrangian angle.
    pub angle: f64,
    /// Induced metric `g = I + M^2`.
    pub metric: SymMat,
    pub metric_inv: SymMat,
    /// Pinching tensor `s = I - M^2`.
    pub pinching: SymMat,
    /// `h_ijk = -u_ijk`.
    pub second_fundamental: SymRank3,
    /// Covariant components `H_i = g^{jk} h_ijk`.
    pub mean_curvature: [f64; 3],
    /// `|H|^2 = g^{ij} H_i H_j`.
    pub mean_curvature_sq: f64,
    /// `|A|^2 = g^{ip} g^{jq} g^{kr} h_ijk h_pqr`.
    pub second_fundamental_sq: f64,
}

/// Closed-form inverse of a symmetric matrix, `n <= 3`.
pub(crate) fn sym_inverse(m: &SymMat) -> SymMat {
    let n = m.dim();
    let mut inv = SymMat::zeros(n);
    match n {
        1 => inv.set(0, 0, 1.0 / m.get(0, 0)),
        2 => {
            let (a, b, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 1));
            let det = a * d - b * b;
            inv.set(0, 0, d / det);
            inv.set(0, 1, -b / det);
            inv.set(1, 1, a / det);
        }
        3 => {
            let a = |i: usize, j: usize| m.get(i, j);
            let c00 = a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2);
            let c01 = a(0, 2) * a(1, 2) - a(0, 1) * a(2, 2);
            let c02 = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
            let c11 = a(0, 0) * a(2, 2) - a(0, 2) * a(0, 2);
            let c12 = a(0, 1) * a(0, 2) - a(0, 0) * a(1, 2);
            let c22 = a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
            let det = a(0, 0) * c00 + a(0, 1) * c01 + a(0, 2) * c02;
            inv.set(0, 0, c00 / det);
            inv.set(0, 1, c01 / det);
            inv.set(0, 2, c02 / det);
            inv.set(1, 1, c11 / det);
            inv.set(1, 2, c12 / det);
            inv.set(2, 2, c22 / det);
        }
        _ => unreachable!("graph geometry is limited to dim <= 3"),
    }
    inv
}

/// Assemble the full pointwise geometry from the Hessian and the (already
/// symmetrized) third derivatives.
pub fn graph_geometry(hess: &SymMat, third: &SymRank3) -> Result<GeometrySample> {
    let n = hess.dim();
    if n != third.dim() {
        return Err(Error::InvalidParameter(
            "Hessian and third-derivative dimensions differ".into(),
        ));
    }
    if n > 3 {
        return Err(Error::InvalidParameter(
            "graph geometry is limited to dim <= 3".into(),
        ));
    }
    let eigenvalues = sym_eigenvalues(hess)?;
    let angle = lagrangian_angle(hess)?;
    let sq = hess.square();
    let metric = SymMat::identity(n).add(&sq);
    let pinching = SymMat::identity(n).sub(&sq);
    let metric_inv = sym_inverse(&metric);
    let second_fundamental = third.scale(-1.0);

    let gi = |i: usize, j: usize| metric_inv.get(i, j);
    let h = |i: usize, j: usize, k: usize| second_fundamental.get(i, j, k);

    let mut mean_curvature = [0.0; 3];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += gi(j, k) * h(i, j, k);
            }
        }
        mean_curvature[i] = s;
    }
    let mut mean_curvature_sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            mean_curvature_sq += gi(i, j) * mean_curvature[i] * mean_curvature[j];
        }
    }

    // raise the three slots one at a time
    let mut h1 = [[[0.0; 3]; 3]; 3];
    for p in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += gi(p, i) * h(i, j, k);
                }
                h1[p][j][k] = s;
            }
        }
    }
    let mut h2 = [[[0.0; 3]; 3]; 3];
    for p in 0..n {
        for q in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += gi(q, j) * h1[p][j][k];
                }
                h2[p][q][k] = s;
            }
        }
    }
    let mut second_fundamental_sq = 0.0;
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                let mut up = 0.0;
                for k in 0..n {
                    up += gi(r, k) * h2[p][q][k];
                }
                second_fundamental_sq += up * h(p, q, r);
            }
        }
    }

    Ok(GeometrySample {
        dim: n,
        eigenvalues,
        angle,
        metric,
        metric_inv,
        pinching,
        second_fundamental,
        mean_curvature,
        mean_curvature_sq,
        second_fundamental_sq,
    })
}

/// Lagrangian angle at every grid point.
pub fn angle_field(hess: &SymMatField) -> Result<ScalarField> {
    let values = try_map_points(hess.grid().len(), |p| lagrangian_angle(&hess.at_mat(p)))?;
    ScalarField::from_values(hess.grid(), values)
}

/// Smallest and largest Hessian eigenvalue over the whole grid.
pub fn hessian_eig_extremes(hess: &SymMatField) -> Result<(f64, f64)> {
    try_reduce_points(
        hess.grid().len(),
        (f64::INFINITY, f64::NEG_INFINITY),
        |p| {
            let vals = sym_eigenvalues(&hess.at_mat(p))?;
            let n = hess.dim();
            Ok((vals[0] + 0.0, vals[n - 1] + 0.0))
        },
        |a, b| (a.0.min(b.0), a.1.max(b.1)),
    )
}

/// Smallest pinching margin over the grid.
pub fn pinch_margin_min(hess: &SymMatField, eps: f64) -> Result<f64> {
    try_reduce_points(
        hess.grid().len(),
        f64::INFINITY,
        |p| Ok(pinch_margin(&hess.at_mat(p), eps)? + 0.0),
        f64::min,
    )
}

/// Covariant mean-curvature components `H_i` at every point.
pub fn mean_curvature_field(hess: &SymMatField, third: &Rank3Field) -> Result<VectorField> {
    if hess.grid() != third.grid() || hess.dim() != third.dim() {
        return Err(Error::InvalidParameter(
            "Hessian and third-derivative fields do not match".into(),
        ));
    }
    let n = hess.dim();
    let np = hess.grid().len();
    let rows = try_map_points(np, |p| {
        let sample = graph_geometry(&hess.at_mat(p), &third.at_rank3(p))?;
        Ok(sample.mean_curvature)
    })?;
    let mut out = VectorField::zeros(hess.grid(), n);
    for c in 0..n {
        let plane = out.comp_mut(c);
        for (p, row) in rows.iter().enumerate() {
            plane[p] = row[c];
        }
    }
    Ok(out)
}

/// Largest `|H|^2` over the grid.
pub fn sup_mean_curvature_sq(hess: &SymMatField, third: &Rank3Field) -> Result<f64> {
    if hess.grid() != third.grid() || hess.dim() != third.dim() {
        return Err(Error::InvalidParameter(
            "Hessian and third-derivative fields do not match".into(),
        ));
    }
    try_reduce_points(
        hess.grid().len(),
        0.0_f64,
        |p| {
            let sample = graph_geometry(&hess.at_mat(p), &third.at_rank3(p))?;
            Ok(sample.mean_curvature_sq + 0.0)
        },
        f64::max,
    )
}
