//! Splitting a gradient field on the torus into linear part plus periodic
//! remainder: `Du(x) = A x + m + p(x)` with `p` mean-free and periodic.
//!
//! For the graph to close up, each slope entry `A_ij` must carry a whole
//! number of target periods across the cell, i.e. be an integer multiple of
//! the quantum `2 pi / L_j`. The integer is read off by estimating the raw
//! slope from line endpoints and rounding; estimates far from any integer
//! mean the data is not a lift and are rejected.

use crate::error::{Error, Result};
use crate::grid::{VectorField, MAX_DIM};
use crate::initdata::mollify::Acc;
use crate::parallel::map_points;

/// Result of splitting `Du = A x + m + p`.
#[derive(Debug, Clone)]
pub struct LiftDecomposition {
    /// Integer winding numbers; `A_ij = winding_ij * 2 pi / L_j`.
    pub winding: [[i64; MAX_DIM]; MAX_DIM],
    /// The linear part `A` itself.
    pub slope: [[f64; MAX_DIM]; MAX_DIM],
    /// Componentwise mean of `Du - A x`.
    pub mean_offset: [f64; MAX_DIM],
    /// Mean-free periodic remainder.
    pub periodic: VectorField,
}

/// Maximum distance from an integer the raw winding estimate may have.
const WINDING_SLACK: f64 = 0.1;

/// Decompose a gradient field into linear slope, mean offset and periodic
/// remainder, rejecting data whose slope is not commensurate with the
/// target lattice.
pub fn lift_decompose(du: &VectorField) -> Result<LiftDecomposition> {
    let grid = du.grid().clone();
    let ndim = grid.ndim();
    if du.ncomp() != ndim {
        return Err(Error::InvalidField(format!(
            "expected {ndim} components for a gradient field, got {}",
            du.ncomp()
        )));
    }

    // raw slope estimate: average the chord slope of every grid line; the
    // periodic part contributes only slice means, which shrink with h and
    // are absorbed by the rounding below
    let mut winding = [[0i64; MAX_DIM]; MAX_DIM];
    let mut slope = [[0.0f64; MAX_DIM]; MAX_DIM];
    for i in 0..ndim {
        let vals = du.comp(i);
        for j in 0..ndim {
            let n = grid.npts(j);
            let stride = grid.stride(j);
            let chord = grid.extent(j) - grid.spacing(j);
            let mut sum = Acc::default();
            let mut lines = 0usize;
            for p in 0..grid.len() {
                if grid.multi_index(p)[j] != 0 {
                    continue;
                }
                sum.add(vals[p + (n - 1) * stride] - vals[p]);
                lines += 1;
            }
            let raw = sum.value() / lines as f64 / chord;
            let quantum = std::f64::consts::TAU / grid.extent(j);
            let w = raw / quantum;
            if (w - w.round()).abs() > WINDING_SLACK {
                return Err(Error::NotALift {
                    i,
                    j,
                    value: raw,
                    quantum,
                });
            }
            winding[i][j] = w.round() as i64;
            slope[i][j] = w.round() * quantum;
        }
    }

    // componentwise mean of the remainder, then the mean-free periodic part
    let mut mean_offset = [0.0f64; MAX_DIM];
    let mut periodic = VectorField::zeros(&grid, ndim);
    for i in 0..ndim {
        let vals = du.comp(i);
        let mut sum = Acc::default();
        for p in 0..grid.len() {
            let x = grid.point_coords(p);
            let mut lin = 0.0;
            for j in 0..ndim {
                lin += slope[i][j] * x[j];
            }
            sum.add(vals[p] - lin);
        }
        mean_offset[i] = sum.value() / grid.len() as f64;

        let m = mean_offset[i];
        let row = slope[i];
        let rem = map_points(grid.len(), |p| {
            let x = grid.point_coords(p);
            let mut lin = 0.0;
            for j in 0..ndim {
                lin += row[j] * x[j];
            }
            vals[p] - lin - m
        });
        periodic.comp_mut(i).copy_from_slice(&rem);
    }

    Ok(LiftDecomposition {
        winding,
        slope,
        mean_offset,
        periodic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    type Component<'a> = &'a dyn Fn(&[f64; MAX_DIM]) -> f64;

    /// Fill a gradient field from per-component closures of the coordinates.
    fn fill(grid: &GridSpec, fs: &[Component]) -> VectorField {
        let mut v = VectorField::zeros(grid, fs.len());
        for (c, f) in fs.iter().enumerate() {
            let vals: Vec<f64> = (0..grid.len()).map(|p| f(&grid.point_coords(p))).collect();
            v.comp_mut(c).copy_from_slice(&vals);
        }
        v
    }

    #[test]
    fn identity_slope_is_recovered() {
        let g = GridSpec::standard_torus(2, 32).unwrap();
        let du = fill(&g, &[&|x| x[0], &|x| x[1]]);
        let d = lift_decompose(&du).unwrap();
        assert_eq!(d.winding[0][..2], [1, 0]);
        assert_eq!(d.winding[1][..2], [0, 1]);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d.slope[i][j] - want).abs() <= 1e-12);
            }
            assert!(d.mean_offset[i].abs() <= 1e-12);
        }
        assert!(d.periodic.sup_norm() <= 1e-12);
    }

    #[test]
    fn mixed_slope_and_periodic_part() {
        let g = GridSpec::standard_torus(2, 64).unwrap();
        let q0 = std::f64::consts::TAU / g.extent(0);
        let q1 = std::f64::consts::TAU / g.extent(1);
        let du = fill(
            &g,
            &[
                &move |x: &[f64; MAX_DIM]| q0 * x[0] + 0.2 * x[0].sin(),
                &move |x: &[f64; MAX_DIM]| 2.0 * q1 * x[1] + 5.0,
            ],
        );
        let d = lift_decompose(&du).unwrap();
        assert_eq!(d.winding[0][..2], [1, 0]);
        assert_eq!(d.winding[1][..2], [0, 2]);
        assert!((d.mean_offset[1] - 5.0).abs() <= 1e-12);
        // the sine rides through untouched: slope snaps to the exact quantum
        let mut err = 0.0f64;
        for p in 0..g.len() {
            let x = g.point_coords(p);
            err = err.max((d.periodic.at(p, 0) - 0.2 * x[0].sin()).abs());
        }
        assert!(err <= 1e-12, "periodic part off by {err:.3e}");
    }

    #[test]
    fn pure_periodic_data_has_zero_winding() {
        let g = GridSpec::standard_torus(2, 32).unwrap();
        let du = fill(
            &g,
            &[
                &|x: &[f64; MAX_DIM]| (x[0] + 0.3).cos(),
                &|x: &[f64; MAX_DIM]| (2.0 * x[1]).sin(),
            ],
        );
        let d = lift_decompose(&du).unwrap();
        assert_eq!(d.winding[0][..2], [0, 0]);
        assert_eq!(d.winding[1][..2], [0, 0]);
        for i in 0..2 {
            assert!(d.mean_offset[i].abs() <= 1e-12);
        }
    }

    #[test]
    fn incommensurate_slope_is_rejected() {
        let g = GridSpec::standard_torus(1, 64).unwrap();
        let du = fill(&g, &[&|x: &[f64; MAX_DIM]| 0.37 * x[0]]);
        match lift_decompose(&du) {
            Err(Error::NotALift { i: 0, j: 0, value, .. }) => {
                assert!((value - 0.37).abs() <= 1e-2);
            }
            other => panic!("expected NotALift, got {other:?}"),
        }
    }

    #[test]
    fn component_count_must_match_dimension() {
        let g = GridSpec::standard_torus(2, 32).unwrap();
        let du = VectorField::zeros(&g, 3);
        assert!(lift_decompose(&du).is_err());
    }
}
