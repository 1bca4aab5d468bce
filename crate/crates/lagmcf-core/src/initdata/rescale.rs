//! Parabolic rescaling of potential snapshots about a marked space-time
//! point: `y = lambda (x - x0)`, `s = lambda^2 (t - t0)`,
//! `u_out = lambda^2 (u - u(x0, t0) - Du(x0, t0) . (x - x0))`.
//!
//! Second derivatives are invariant under this map and third derivatives
//! scale by `1/lambda`; with the default output spacing `lambda * h` the
//! sample points land exactly on source nodes, so those identities hold at
//! the stencil level to rounding — away from the wrap seam. The subtracted
//! tangent plane is linear, not periodic, so whenever `Du(x0) != 0` the
//! output field jumps across the seam and stencils there are meaningless;
//! consumers should compare on interior points only.

use crate::error::{Error, Result};
use crate::grid::{gradient, GridSpec, ScalarField, MAX_DIM};
use crate::parallel::map_points;

/// What to rescale onto.
#[derive(Debug, Clone)]
pub struct RescaleRequest {
    /// Zoom factor, positive.
    pub lambda: f64,
    /// Grid index of the marked point `x0` (the last snapshot's grid).
    pub center: [usize; MAX_DIM],
    /// Output points per axis; defaults to the source counts.
    pub out_npts: Option<Vec<usize>>,
    /// Output spacing; defaults to `lambda * h` per axis, which samples the
    /// source exactly on its own nodes. Anything else is read off by cubic
    /// (Catmull-Rom) interpolation.
    pub out_spacing: Option<Vec<f64>>,
}

/// One rescaled snapshot; `time` is the parabolic time `s <= 0`.
#[derive(Debug, Clone)]
pub struct RescaledFrame {
    pub time: f64,
    pub field: ScalarField,
}

/// Periodic cubic interpolation in index space.
fn cubic_sample(f: &ScalarField, pos: &[f64; MAX_DIM]) -> f64 {
    let grid = f.grid();
    let ndim = grid.ndim();
    let mut base = [0isize; MAX_DIM];
    let mut wts = [[0.0; 4]; MAX_DIM];
    for d in 0..ndim {
        let fl = pos[d].floor();
        base[d] = fl as isize;
        let t = pos[d] - fl;
        let (t2, t3) = (t * t, t * t * t);
        wts[d] = [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ];
    }
    let mut acc = 0.0;
    let mut idx = [0usize; MAX_DIM];
    for combo in 0..(4usize.pow(ndim as u32)) {
        let mut w = 1.0;
        let mut c = combo;
        for d in 0..ndim {
            let o = (c % 4) as isize - 1;
            c /= 4;
            w *= wts[d][(o + 1) as usize];
            let n = grid.npts(d) as isize;
            idx[d] = (base[d] + o).rem_euclid(n) as usize;
        }
        acc += w * f.values()[grid.linear_index(&idx[..ndim])];
    }
    acc
}

/// Rescale a time-ordered family of snapshots (all on one grid) about the
/// marked point; the last snapshot is the rescaling time `t0`, so the output
/// times are nonpositive and end at zero.
pub fn parabolic_rescale(
    snaps: &[(f64, ScalarField)],
    req: &RescaleRequest,
) -> Result<Vec<RescaledFrame>> {
    if snaps.is_empty() {
        return Err(Error::InvalidParameter("no snapshots to rescale".into()));
    }
    let grid = snaps[0].1.grid().clone();
    let ndim = grid.ndim();
    for (t, f) in snaps {
        if f.grid() != &grid {
            return Err(Error::InvalidParameter(
                "rescale snapshots live on different grids".into(),
            ));
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter("snapshot time is not finite".into()));
        }
    }
    if snaps.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::InvalidParameter(
            "snapshot times must be non-decreasing".into(),
        ));
    }
    let lambda = req.lambda;
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    for d in 0..ndim {
        if req.center[d] >= grid.npts(d) {
            return Err(Error::InvalidParameter(format!(
                "center index {} out of range on axis {d}",
                req.center[d]
            )));
        }
    }

    // output geometry; `step` is the sampling distance in source space
    let out_npts: Vec<usize> = match &req.out_npts {
        Some(v) => {
            if v.len() != ndim {
                return Err(Error::InvalidParameter("out_npts has wrong length".into()));
            }
            v.clone()
        }
        None => (0..ndim).map(|d| grid.npts(d)).collect(),
    };
    let mut step = [0.0_f64; MAX_DIM];
    let mut out_spacing = vec![0.0_f64; ndim];
    for d in 0..ndim {
        match &req.out_spacing {
            Some(s) => {
                if s.len() != ndim {
                    return Err(Error::InvalidParameter("out_spacing has wrong length".into()));
                }
                out_spacing[d] = s[d];
                step[d] = s[d] / lambda;
            }
            None => {
                step[d] = grid.spacing(d);
                out_spacing[d] = lambda * grid.spacing(d);
            }
        }
    }
    let out_origin: Vec<f64> = (0..ndim)
        .map(|d| -((out_npts[d] / 2) as f64) * out_spacing[d])
        .collect();
    let out_grid = GridSpec::new(&out_npts, &out_spacing, &out_origin)?;
    for d in 0..ndim {
        let half_window = (out_npts[d] / 2) as f64 * step[d];
        let half_cell = 0.5 * grid.extent(d);
        if half_window > half_cell * (1.0 + 1e-12) {
            return Err(Error::RescaleWindow { axis: d });
        }
    }

    // tangent data at the marked event, read with the same stencil the
    // diagnostics use so the rescaled gradient vanishes exactly at y = 0
    let (_, u_last) = snaps.last().unwrap();
    let center_p = grid.linear_index(&req.center[..ndim]);
    let u00 = u_last.values()[center_p];
    let g_last = gradient(u_last);
    let mut g0 = [0.0_f64; MAX_DIM];
    for d in 0..ndim {
        g0[d] = g_last.at(center_p, d);
    }

    let t0 = snaps.last().unwrap().0;
    let lam2 = lambda * lambda;
    let ratio: Vec<f64> = (0..ndim).map(|d| step[d] / grid.spacing(d)).collect();

    let mut frames = Vec::with_capacity(snaps.len());
    for (t, field) in snaps {
        let values = map_points(out_grid.len(), |p| {
            let j = out_grid.multi_index(p);
            let mut pos = [0.0_f64; MAX_DIM];
            let mut affine = u00;
            for d in 0..ndim {
                let c = j[d] as f64 - (out_npts[d] / 2) as f64;
                pos[d] = req.center[d] as f64 + c * ratio[d];
                affine += g0[d] * (c * step[d]);
            }
            lam2 * (cubic_sample(field, &pos) - affine)
        });
        frames.push(RescaledFrame {
            time: lam2 * (t - t0),
            field: ScalarField::from_values(&out_grid, values)?,
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{hessian, third_derivatives};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn request(lambda: f64, center: [usize; MAX_DIM]) -> RescaleRequest {
        RescaleRequest {
            lambda,
            center,
            out_npts: None,
            out_spacing: None,
        }
    }

    fn random_field(g: &GridSpec, seed: u64) -> ScalarField {
        // smooth random data: a few low modes with seeded coefficients
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef: Vec<(f64, f64, f64)> = (1..=3)
            .map(|_| {
                (
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        ScalarField::from_fn(g, |x| {
            coef.iter()
                .enumerate()
                .map(|(m, (a, b, p))| {
                    let k = (m + 1) as f64;
                    a * (k * x[0] + p).cos() + b * (k * x[0]).sin()
                })
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn center_value_and_gradient_vanish() {
        let g = GridSpec::standard_torus(1, 128).unwrap();
        let f = random_field(&g, 5);
        let frames = parabolic_rescale(&[(1.0, f)], &request(2.0, [37, 0, 0])).unwrap();
        let out = &frames[0].field;
        let og = out.grid();
        let c = og.npts(0) / 2;
        assert_eq!(out.values()[og.linear_index(&[c])], 0.0);
        let d = gradient(out);
        assert!(
            d.at(og.linear_index(&[c]), 0).abs() <= 1e-12,
            "gradient at center: {}",
            d.at(og.linear_index(&[c]), 0)
        );
        assert_eq!(frames[0].time, 0.0);
    }

    #[test]
    fn hessian_invariant_thirds_scale_on_the_exact_path() {
        let g = GridSpec::standard_torus(1, 128).unwrap();
        let f = random_field(&g, 6);
        let lambda = 2.0;
        let center = 45usize;
        let frames = parabolic_rescale(&[(0.7, f.clone())], &request(lambda, [center, 0, 0])).unwrap();
        let out = &frames[0].field;

        let h_src = hessian(&f);
        let h_out = hessian(out);
        let t_src = third_derivatives(&f);
        let t_out = third_derivatives(out);
        let n = g.npts(0);
        let og = out.grid();
        let m = og.npts(0);
        // skip the seam: the subtracted tangent plane is not periodic, so
        // stencils wrapping around the output torus see a jump there
        for j in 3..m - 3 {
            let src = (center + n + j) - m / 2; // same lattice point
            let src = src % n;
            let dh = h_out.at_mat(j).get(0, 0) - h_src.at_mat(src).get(0, 0);
            assert!(dh.abs() <= 1e-12, "hessian mismatch {dh:.3e} at {j}");
            let want = t_src.at_rank3(src).get(0, 0, 0) / lambda;
            let dt = t_out.at_rank3(j).get(0, 0, 0) - want;
            assert!(dt.abs() <= 1e-11, "third mismatch {dt:.3e} at {j}");
        }
    }

    #[test]
    fn times_map_parabolically() {
        let g = GridSpec::standard_torus(1, 32).unwrap();
        let f = ScalarField::zeros(&g);
        let snaps = vec![(0.25, f.clone()), (0.5, f.clone()), (1.0, f)];
        let frames = parabolic_rescale(&snaps, &request(3.0, [0, 0, 0])).unwrap();
        assert_eq!(frames[0].time, 9.0 * (0.25 - 1.0));
        assert_eq!(frames[1].time, 9.0 * (0.5 - 1.0));
        assert_eq!(frames[2].time, 0.0);
    }

    #[test]
    fn off_lattice_output_uses_cubic_interpolation() {
        let g = GridSpec::standard_torus(1, 128).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0]).cos()).unwrap();
        let lambda = 2.0;
        let h = g.spacing(0);
        let req = RescaleRequest {
            lambda,
            center: [0, 0, 0],
            out_npts: None,
            out_spacing: Some(vec![lambda * h * 0.5]),
        };
        let frames = parabolic_rescale(&[(1.0, f)], &req).unwrap();
        let out = &frames[0].field;
        let og = out.grid();
        // compare to the analytic rescaling of cos about x0 = 0
        let mut err = 0.0_f64;
        for p in 0..og.len() {
            let y = og.point_coords(p)[0];
            let x = y / lambda;
            // stencil gradient of cos at 0 vanishes by symmetry
            let want = lambda * lambda * (x.cos() - 1.0);
            err = err.max((out.values()[p] - want).abs());
        }
        assert!(err <= 1e-4, "err = {err:.3e}");
    }

    #[test]
    fn window_and_validation_errors() {
        let g = GridSpec::standard_torus(1, 64).unwrap();
        let f = ScalarField::zeros(&g);
        let snaps = vec![(1.0, f)];

        let mut req = request(2.0, [0, 0, 0]);
        req.out_spacing = Some(vec![2.0 * g.spacing(0) * 4.0]); // window 4x the cell
        assert!(matches!(
            parabolic_rescale(&snaps, &req),
            Err(Error::RescaleWindow { axis: 0 })
        ));

        assert!(parabolic_rescale(&[], &request(2.0, [0, 0, 0])).is_err());
        assert!(parabolic_rescale(&snaps, &request(-1.0, [0, 0, 0])).is_err());
        assert!(parabolic_rescale(&snaps, &request(2.0, [64, 0, 0])).is_err());

        let g2 = GridSpec::standard_torus(1, 32).unwrap();
        let out_of_order = vec![
            (1.0, ScalarField::zeros(&g2)),
            (0.5, ScalarField::zeros(&g2)),
        ];
        assert!(parabolic_rescale(&out_of_order, &request(1.0, [0, 0, 0])).is_err());
    }
}
