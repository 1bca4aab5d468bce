//! Centered second-order periodic finite differences.
//!
//! Loops run row by row (a row is one run along the fastest axis). For the
//! slower axes the wrap decision is constant along a row, so neighbor
//! offsets are hoisted out of the inner loop; only the fastest axis wraps
//! inside it.

use super::{GridSpec, Rank3Field, ScalarField, SymMatField, VectorField};
use crate::error::{Error, Result};
use crate::parallel::{for_each_row, try_reduce_points};
use crate::sym::{sym2_count, sym2_index, sym3_triples};

/// Linear offsets for a +1/-1 move along a non-fastest axis, given the row's
/// multi-index prefix.
#[inline]
fn axis_offsets(grid: &GridSpec, prefix: &[usize; 3], d: usize) -> (isize, isize) {
    let n = grid.npts(d) as isize;
    let s = grid.stride(d) as isize;
    let i = prefix[d] as isize;
    let up = if i + 1 == n { s * (1 - n) } else { s };
    let dn = if i == 0 { s * (n - 1) } else { -s };
    (up, dn)
}

/// First difference of one component plane along `axis`.
pub(crate) fn diff_plane(grid: &GridSpec, src: &[f64], axis: usize) -> Vec<f64> {
    let last = grid.ndim() - 1;
    let n_last = grid.npts(last);
    let inv2h = 1.0 / (2.0 * grid.spacing(axis));
    let mut out = vec![0.0; grid.len()];
    for_each_row(&mut out, n_last, |r, row| {
        let base = r * n_last;
        if axis == last {
            for j in 0..n_last {
                let jp = if j + 1 == n_last { 0 } else { j + 1 };
                let jm = if j == 0 { n_last - 1 } else { j - 1 };
                row[j] = (src[base + jp] - src[base + jm]) * inv2h;
            }
        } else {
            let prefix = grid.row_prefix(r);
            let (up, dn) = axis_offsets(grid, &prefix, axis);
            let bu = (base as isize + up) as usize;
            let bd = (base as isize + dn) as usize;
            for j in 0..n_last {
                row[j] = (src[bu + j] - src[bd + j]) * inv2h;
            }
        }
    });
    out
}

/// Second difference of one plane along `axis`.
fn diff2_plane(grid: &GridSpec, src: &[f64], axis: usize) -> Vec<f64> {
    let last = grid.ndim() - 1;
    let n_last = grid.npts(last);
    let invh2 = 1.0 / (grid.spacing(axis) * grid.spacing(axis));
    let mut out = vec![0.0; grid.len()];
    for_each_row(&mut out, n_last, |r, row| {
        let base = r * n_last;
        if axis == last {
            for j in 0..n_last {
                let jp = if j + 1 == n_last { 0 } else { j + 1 };
                let jm = if j == 0 { n_last - 1 } else { j - 1 };
                row[j] = (src[base + jp] - 2.0 * src[base + j] + src[base + jm]) * invh2;
            }
        } else {
            let prefix = grid.row_prefix(r);
            let (up, dn) = axis_offsets(grid, &prefix, axis);
            let bu = (base as isize + up) as usize;
            let bd = (base as isize + dn) as usize;
            for j in 0..n_last {
                row[j] = (src[bu + j] - 2.0 * src[base + j] + src[bd + j]) * invh2;
            }
        }
    });
    out
}

/// Mixed difference of one plane along axes `a < b` (the four-corner cross).
fn cross_plane(grid: &GridSpec, src: &[f64], a: usize, b: usize) -> Vec<f64> {
    debug_assert!(a < b);
    let last = grid.ndim() - 1;
    let n_last = grid.npts(last);
    let w = 1.0 / (4.0 * grid.spacing(a) * grid.spacing(b));
    let mut out = vec![0.0; grid.len()];
    for_each_row(&mut out, n_last, |r, row| {
        let base = r * n_last;
        let prefix = grid.row_prefix(r);
        let (ua, da) = axis_offsets(grid, &prefix, a);
        if b == last {
            let bu = (base as isize + ua) as usize;
            let bd = (base as isize + da) as usize;
            for j in 0..n_last {
                let jp = if j + 1 == n_last { 0 } else { j + 1 };
                let jm = if j == 0 { n_last - 1 } else { j - 1 };
                row[j] = (src[bu + jp] - src[bu + jm] - src[bd + jp] + src[bd + jm]) * w;
            }
        } else {
            let (ub, db) = axis_offsets(grid, &prefix, b);
            let pp = (base as isize + ua + ub) as usize;
            let pm = (base as isize + ua + db) as usize;
            let mp = (base as isize + da + ub) as usize;
            let mm = (base as isize + da + db) as usize;
            for j in 0..n_last {
                row[j] = (src[pp + j] - src[pm + j] - src[mp + j] + src[mm + j]) * w;
            }
        }
    });
    out
}

/// Centered first difference of a scalar field along one axis.
pub fn centered_diff(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    let grid = f.grid();
    if axis >= grid.ndim() {
        return Err(Error::InvalidParameter(format!(
            "axis {axis} out of range for a {}-d grid",
            grid.ndim()
        )));
    }
    let values = diff_plane(grid, f.values(), axis);
    ScalarField::from_values(grid, values)
}

/// Gradient `Du` by centered differences, one component per axis.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid().clone();
    let mut out = VectorField::zeros(&grid, grid.ndim());
    for d in 0..grid.ndim() {
        out.comp_mut(d).copy_from_slice(&diff_plane(&grid, f.values(), d));
    }
    out
}

/// Hessian `D^2 u`: second differences on the diagonal, four-corner crosses
/// off it. Symmetric by construction (one plane per unordered pair).
pub fn hessian(f: &ScalarField) -> SymMatField {
    let grid = f.grid().clone();
    let n = grid.ndim();
    let mut out = SymMatField::zeros(&grid, n);
    for i in 0..n {
        for j in i..n {
            let plane = if i == j {
                diff2_plane(&grid, f.values(), i)
            } else {
                cross_plane(&grid, f.values(), i, j)
            };
            out.comp_mut(sym2_index(n, i, j)).copy_from_slice(&plane);
        }
    }
    out
}

/// Third derivatives as the symmetrized centered difference of the Hessian,
/// together with the largest symmetrization defect observed anywhere.
///
/// The defect (max deviation of the three estimates `D_k H_ij`, `D_j H_ik`,
/// `D_i H_jk` from their mean) measures how far the discrete derivatives are
/// from commuting; it vanishes with the stencil truncation error.
pub fn third_derivatives_with_defect(f: &ScalarField) -> (Rank3Field, f64) {
    let grid = f.grid().clone();
    let n = grid.ndim();
    let np = grid.len();
    let hess = hessian(f);

    // One first difference per (pair plane, axis).
    let npairs = sym2_count(n);
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(npairs * n);
    for ab in 0..npairs {
        for c in 0..n {
            diffs.push(diff_plane(&grid, hess.comp(ab), c));
        }
    }
    let diff = |ab: usize, c: usize| -> &[f64] { &diffs[ab * n + c] };

    let mut out = Rank3Field::zeros(&grid, n);
    let mut defect = 0.0_f64;
    for (t, (i, j, k)) in sym3_triples(n).into_iter().enumerate() {
        let d1 = diff(sym2_index(n, i, j), k);
        let d2 = diff(sym2_index(n, i, k), j);
        let d3 = diff(sym2_index(n, j, k), i);
        let plane = out.comp_mut(t);
        if i == j && j == k {
            // a single estimate; averaging would only add rounding noise
            plane.copy_from_slice(d1);
            continue;
        }
        let local = try_reduce_points(
            np,
            0.0_f64,
            |p| {
                let m = (d1[p] + d2[p] + d3[p]) / 3.0;
                Ok((d1[p] - m).abs().max((d2[p] - m).abs()).max((d3[p] - m).abs()))
            },
            f64::max,
        )
        .expect("infallible reduction");
        defect = defect.max(local);
        for_each_row(plane, grid.npts(n - 1), |r, row| {
            let base = r * grid.npts(n - 1);
            for (j, v) in row.iter_mut().enumerate() {
                let p = base + j;
                *v = (d1[p] + d2[p] + d3[p]) / 3.0;
            }
        });
    }
    (out, defect)
}

/// Symmetrized third derivatives, defect discarded.
pub fn third_derivatives(f: &ScalarField) -> Rank3Field {
    third_derivatives_with_defect(f).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sin_field_1d(n: usize) -> ScalarField {
        let g = GridSpec::standard_torus(1, n).unwrap();
        ScalarField::from_fn(&g, |x| x[0].sin()).unwrap()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = GridSpec::standard_torus(2, 16).unwrap();
        let f = ScalarField::from_fn(&g, |_| 3.25).unwrap();
        let df = gradient(&f);
        assert_eq!(df.sup_norm(), 0.0);
    }

    #[test]
    fn gradient_matches_cosine_to_second_order() {
        // centered stencil on sin gives cos * sin(h)/h; error h^2/6 ~ 1.0e-4
        let f = sin_field_1d(256);
        let df = gradient(&f);
        let g = f.grid();
        let mut err = 0.0_f64;
        for p in 0..g.len() {
            let x = g.point_coords(p)[0];
            err = err.max((df.at(p, 0) - x.cos()).abs());
        }
        assert!(err <= 1.01e-4, "err = {err:.3e}");
        assert!(err >= 0.9e-4, "suspiciously small: {err:.3e}");
    }

    #[test]
    fn gradient_2d_product_modes() {
        let g = GridSpec::standard_torus(2, 128).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin() * x[1].sin()).unwrap();
        let df = gradient(&f);
        let mut err = 0.0_f64;
        for p in 0..g.len() {
            let x = g.point_coords(p);
            let e0 = df.at(p, 0) - x[0].cos() * x[1].sin();
            let e1 = df.at(p, 1) - x[0].sin() * x[1].cos();
            err = err.max((e0 * e0 + e1 * e1).sqrt());
        }
        // h^2/6 * max|u'''| with h = 2pi/128
        assert!(err <= 4.1e-4, "err = {err:.3e}");
    }

    #[test]
    fn hessian_exact_on_quadratics_away_from_seam() {
        let g = GridSpec::torus(&[16, 16], &[1.0, 1.0]).unwrap();
        let a = [[0.4, -0.15], [-0.15, 0.8]];
        let f = ScalarField::from_fn(&g, |x| {
            0.5 * (a[0][0] * x[0] * x[0] + 2.0 * a[0][1] * x[0] * x[1] + a[1][1] * x[1] * x[1])
        })
        .unwrap();
        let h = hessian(&f);
        for i0 in 1..15 {
            for i1 in 1..15 {
                let p = g.linear_index(&[i0, i1]);
                let m = h.at_mat(p);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(
                            (m.get(i, j) - a[i][j]).abs() < 1e-12,
                            "entry ({i},{j}) at ({i0},{i1})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hessian_of_cosine() {
        let g = GridSpec::standard_torus(1, 256).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].cos()).unwrap();
        let h = hessian(&f);
        let mut err = 0.0_f64;
        for p in 0..g.len() {
            let x = g.point_coords(p)[0];
            err = err.max((h.at_mat(p).get(0, 0) + x.cos()).abs());
        }
        // (2 - 2 cos h)/h^2 - 1 ~ h^2/12
        assert!(err <= 6e-5, "err = {err:.3e}");
    }

    #[test]
    fn third_derivatives_vanish_on_quadratics_inside() {
        let g = GridSpec::torus(&[16, 16], &[1.0, 1.0]).unwrap();
        let f = ScalarField::from_fn(&g, |x| {
            0.5 * (0.9 * x[0] * x[0] - 0.6 * x[0] * x[1] + 0.3 * x[1] * x[1])
        })
        .unwrap();
        let (t, _) = third_derivatives_with_defect(&f);
        // interior points two steps from the seam see only exact stencils
        for i0 in 2..14 {
            for i1 in 2..14 {
                let p = g.linear_index(&[i0, i1]);
                let v = t.at_rank3(p);
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            assert!(v.get(i, j, k).abs() < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn third_derivatives_of_sine() {
        let f = sin_field_1d(256);
        let (t, defect) = third_derivatives_with_defect(&f);
        let g = f.grid();
        let mut err = 0.0_f64;
        for p in 0..g.len() {
            let x = g.point_coords(p)[0];
            err = err.max((t.at_rank3(p).get(0, 0, 0) + x.cos()).abs());
        }
        assert!(err <= 5e-4, "err = {err:.3e}");
        assert_eq!(defect, 0.0); // only one estimate exists in 1d
    }

    #[test]
    fn symmetrization_defect_is_small_and_second_order() {
        let g = GridSpec::standard_torus(2, 128).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin() * x[1].sin()).unwrap();
        let (_, defect) = third_derivatives_with_defect(&f);
        assert!(defect <= 1e-3, "defect = {defect:.3e}");

        let g2 = GridSpec::standard_torus(2, 256).unwrap();
        let f2 = ScalarField::from_fn(&g2, |x| x[0].sin() * x[1].sin()).unwrap();
        let (_, defect2) = third_derivatives_with_defect(&f2);
        let ratio = defect / defect2;
        assert!(
            ratio > 3.5 && ratio < 4.5,
            "defect refinement ratio {ratio:.2}"
        );
    }

    #[test]
    fn stencils_commute_with_translation() {
        // cyclic shifts of the input produce cyclic shifts of the output,
        // bit for bit
        let g = GridSpec::new(&[10, 12], &[0.37, 0.21], &[0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let base: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = ScalarField::from_values(&g, base.clone()).unwrap();

        let shift = [3usize, 5usize];
        let shifted: Vec<f64> = (0..g.len())
            .map(|p| {
                let idx = g.multi_index(p);
                let src = [
                    (idx[0] + shift[0]) % g.npts(0),
                    (idx[1] + shift[1]) % g.npts(1),
                ];
                base[g.linear_index(&src)]
            })
            .collect();
        let fs = ScalarField::from_values(&g, shifted).unwrap();

        let h = hessian(&f);
        let hs = hessian(&fs);
        let t = third_derivatives(&f);
        let ts = third_derivatives(&fs);
        for p in 0..g.len() {
            let idx = g.multi_index(p);
            let q = g.linear_index(&[
                (idx[0] + shift[0]) % g.npts(0),
                (idx[1] + shift[1]) % g.npts(1),
            ]);
            for c in 0..3 {
                assert_eq!(h.comp(c)[q], hs.comp(c)[p]);
            }
            for c in 0..4 {
                assert_eq!(t.comp(c)[q], ts.comp(c)[p]);
            }
        }
    }

    #[test]
    fn refinement_halving_quarters_the_error() {
        let errs: Vec<f64> = [64usize, 128, 256]
            .iter()
            .map(|&n| {
                let f = sin_field_1d(n);
                let df = gradient(&f);
                let g = f.grid();
                let mut err = 0.0_f64;
                for p in 0..n {
                    let x = g.point_coords(p)[0];
                    err = err.max((df.at(p, 0) - x.cos()).abs());
                }
                err
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.5 && ratio < 4.5, "ratio = {ratio:.2}");
        }
    }
}
