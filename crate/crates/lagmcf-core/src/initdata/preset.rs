//! Named families of initial potentials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{hessian_eig_extremes, SymMat};
use crate::grid::{hessian, GridSpec, ScalarField};

/// Built-in initial potentials. Frequencies adapt to the box so every preset
/// except `Quadratic` is periodic on any grid.
#[derive(Debug, Clone)]
pub enum Preset {
    /// `u = x^T A x / 2`. Not periodic; this is the constant-Hessian
    /// background used through the flow's offset channel and in analytic
    /// interior tests. `Du = A x`, Hessian identically `A`.
    Quadratic { matrix: SymMat },
    /// `u = a * sum_d cos(k_d x~_d)` with `k_d = 2 pi / L_d` and
    /// `x~ = x - origin`. On the standard torus the Hessian eigenvalues
    /// sweep `[-a, a]`.
    Cosine { amplitude: f64 },
    /// `u = a * prod_d sin(k_d x~_d)`; a fully mixed mode whose Hessian
    /// couples all axes. Eigenvalues stay within `[-a * ndim, a * ndim]`
    /// on the standard torus (within `[-a, a]` in 1-d).
    ProductSine { amplitude: f64 },
    /// Separable piecewise-quadratic wave: per axis `u'' = +-c` on the two
    /// half-periods, joined C^1 at the kinks. Lipschitz gradient, no second
    /// derivative at the kinks; Hessian range exactly `[-c, c]` elsewhere.
    SawtoothC11 { level: f64 },
    /// Seeded trigonometric polynomial with modes up to `max_mode` per axis,
    /// rescaled so the measured Hessian eigenvalues fill `[-clamp, clamp]`.
    RandomBandlimited {
        hessian_clamp: f64,
        max_mode: usize,
        seed: u64,
    },
}

fn require_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite")));
    }
    Ok(())
}

/// One sawtooth branch on `[0, L)`, value of the C^1 piecewise quadratic
/// with curvature `+c` on `[0, L/2)` and `-c` on `[L/2, L)`.
fn sawtooth(xt: f64, l: f64, c: f64) -> f64 {
    let q = 0.5 * l;
    if xt < q {
        c * (0.5 * xt * xt - 0.5 * q * xt)
    } else {
        -c * (0.5 * xt * xt - 1.5 * q * xt) - c * q * q
    }
}

/// Sample a preset on a grid.
pub fn make_preset(preset: &Preset, grid: &GridSpec) -> Result<ScalarField> {
    let ndim = grid.ndim();
    match preset {
        Preset::Quadratic { matrix } => {
            if matrix.dim() != ndim {
                return Err(Error::InvalidParameter(format!(
                    "quadratic matrix dimension {} does not match grid dimension {ndim}",
                    matrix.dim()
                )));
            }
            for k in matrix.upper() {
                require_finite("quadratic matrix entry", *k)?;
            }
            let m = *matrix;
            ScalarField::from_fn(grid, move |x| {
                let mut s = 0.0;
                for i in 0..ndim {
                    for j in 0..ndim {
                        s += m.get(i, j) * x[i] * x[j];
                    }
                }
                0.5 * s
            })
        }
        Preset::Cosine { amplitude } => {
            require_finite("amplitude", *amplitude)?;
            let a = *amplitude;
            let k: Vec<f64> = (0..ndim)
                .map(|d| std::f64::consts::TAU / grid.extent(d))
                .collect();
            let org: Vec<f64> = (0..ndim).map(|d| grid.origin(d)).collect();
            ScalarField::from_fn(grid, move |x| {
                (0..ndim).map(|d| a * (k[d] * (x[d] - org[d])).cos()).sum()
            })
        }
        Preset::ProductSine { amplitude } => {
            require_finite("amplitude", *amplitude)?;
            let a = *amplitude;
            let k: Vec<f64> = (0..ndim)
                .map(|d| std::f64::consts::TAU / grid.extent(d))
                .collect();
            let org: Vec<f64> = (0..ndim).map(|d| grid.origin(d)).collect();
            ScalarField::from_fn(grid, move |x| {
                a * (0..ndim)
                    .map(|d| (k[d] * (x[d] - org[d])).sin())
                    .product::<f64>()
            })
        }
        Preset::SawtoothC11 { level } => {
            require_finite("level", *level)?;
            if *level <= 0.0 {
                return Err(Error::InvalidParameter(
                    "sawtooth level must be positive".into(),
                ));
            }
            let c = *level;
            let ls: Vec<f64> = (0..ndim).map(|d| grid.extent(d)).collect();
            let org: Vec<f64> = (0..ndim).map(|d| grid.origin(d)).collect();
            ScalarField::from_fn(grid, move |x| {
                (0..ndim)
                    .map(|d| sawtooth(x[d] - org[d], ls[d], c))
                    .sum()
            })
        }
        Preset::RandomBandlimited {
            hessian_clamp,
            max_mode,
            seed,
        } => {
            require_finite("hessian_clamp", *hessian_clamp)?;
            if *hessian_clamp <= 0.0 {
                return Err(Error::InvalidParameter(
                    "hessian_clamp must be positive".into(),
                ));
            }
            if *max_mode == 0 {
                return Err(Error::InvalidParameter("max_mode must be at least 1".into()));
            }
            for d in 0..ndim {
                if 2 * *max_mode >= grid.npts(d) {
                    return Err(Error::InvalidParameter(format!(
                        "max_mode {} is not resolvable on {} points (axis {d})",
                        max_mode,
                        grid.npts(d)
                    )));
                }
            }

            // modes from the canonical half-lattice (first nonzero index
            // positive), fixed iteration order so the field is a pure
            // function of the seed
            let mm = *max_mode as i64;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut modes: Vec<([i64; 3], f64, f64)> = Vec::new();
            let mut enumerate = |m: [i64; 3]| {
                if m.iter().all(|&c| c == 0) {
                    return;
                }
                if *m.iter().find(|&&c| c != 0).unwrap() < 0 {
                    return;
                }
                let norm_sq: i64 = m.iter().map(|&c| c * c).sum();
                let amp = rng.gen_range(-1.0..1.0) / (1.0 + norm_sq as f64);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                modes.push((m, amp, phase));
            };
            match ndim {
                1 => {
                    for m0 in -mm..=mm {
                        enumerate([m0, 0, 0]);
                    }
                }
                2 => {
                    for m0 in -mm..=mm {
                        for m1 in -mm..=mm {
                            enumerate([m0, m1, 0]);
                        }
                    }
                }
                _ => {
                    for m0 in -mm..=mm {
                        for m1 in -mm..=mm {
                            for m2 in -mm..=mm {
                                enumerate([m0, m1, m2]);
                            }
                        }
                    }
                }
            }

            let k: Vec<f64> = (0..ndim)
                .map(|d| std::f64::consts::TAU / grid.extent(d))
                .collect();
            let org: Vec<f64> = (0..ndim).map(|d| grid.origin(d)).collect();
            let raw = ScalarField::from_fn(grid, |x| {
                let mut s = 0.0;
                for (m, amp, phase) in &modes {
                    let mut arg = *phase;
                    for d in 0..ndim {
                        arg += m[d] as f64 * k[d] * (x[d] - org[d]);
                    }
                    s += amp * arg.cos();
                }
                s
            })?;

            // normalize the measured Hessian range to the requested clamp
            let (lo, hi) = hessian_eig_extremes(&hessian(&raw))?;
            let spread = lo.abs().max(hi.abs());
            if spread == 0.0 {
                return Err(Error::InvalidParameter(
                    "hessian_clamp is infeasible: sampled field has zero Hessian".into(),
                ));
            }
            let scale = hessian_clamp / spread;
            let values = raw.values().iter().map(|v| v * scale).collect();
            ScalarField::from_values(grid, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gradient;

    #[test]
    fn cosine_matches_formula() {
        let g = GridSpec::standard_torus(2, 16).unwrap();
        let f = make_preset(&Preset::Cosine { amplitude: 0.3 }, &g).unwrap();
        for p in [0usize, 5, 100, 255] {
            let x = g.point_coords(p);
            let want = 0.3 * (x[0].cos() + x[1].cos());
            assert!((f.values()[p] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_of_zero_matrix_is_zero() {
        let g = GridSpec::standard_torus(2, 8).unwrap();
        let f = make_preset(
            &Preset::Quadratic {
                matrix: SymMat::zeros(2),
            },
            &g,
        )
        .unwrap();
        assert_eq!(f.sup_abs(), 0.0);
    }

    #[test]
    fn sawtooth_is_c1_with_exact_hessian_range() {
        let g = GridSpec::standard_torus(1, 256).unwrap();
        let f = make_preset(&Preset::SawtoothC11 { level: 0.9 }, &g).unwrap();

        // value and slope join continuously at the kink and the seam
        let l = g.extent(0);
        let q = 0.5 * l;
        let eps = 1e-9;
        for kink in [0.0, q] {
            let left = sawtooth((kink - eps).rem_euclid(l), l, 0.9);
            let right = sawtooth((kink + eps).rem_euclid(l), l, 0.9);
            assert!((left - right).abs() < 1e-8);
            let dl = (sawtooth((kink - eps).rem_euclid(l), l, 0.9)
                - sawtooth((kink - 2.0 * eps).rem_euclid(l), l, 0.9))
                / eps;
            let dr = (sawtooth((kink + 2.0 * eps).rem_euclid(l), l, 0.9)
                - sawtooth((kink + eps).rem_euclid(l), l, 0.9))
                / eps;
            assert!((dl - dr).abs() < 1e-6, "slope jump at {kink}: {dl} vs {dr}");
        }

        // stencil second differences are exact on the quadratic pieces, up
        // to cancellation of values ~ c L^2 against the h^2 divisor
        let (lo, hi) = hessian_eig_extremes(&hessian(&f)).unwrap();
        assert!((lo + 0.9).abs() < 1e-10, "lo = {lo}");
        assert!((hi - 0.9).abs() < 1e-10, "hi = {hi}");
    }

    #[test]
    fn random_bandlimited_is_deterministic_and_clamped() {
        let g = GridSpec::standard_torus(2, 64).unwrap();
        let p = Preset::RandomBandlimited {
            hessian_clamp: 0.9,
            max_mode: 4,
            seed: 2024,
        };
        let f1 = make_preset(&p, &g).unwrap();
        let f2 = make_preset(&p, &g).unwrap();
        assert_eq!(f1.values(), f2.values());

        let (lo, hi) = hessian_eig_extremes(&hessian(&f1)).unwrap();
        assert!(lo >= -0.9 - 1e-12 && hi <= 0.9 + 1e-12);
        // the clamp is attained on one side
        assert!(lo.abs().max(hi.abs()) > 0.9 - 1e-12);

        let other = make_preset(
            &Preset::RandomBandlimited {
                hessian_clamp: 0.9,
                max_mode: 4,
                seed: 2025,
            },
            &g,
        )
        .unwrap();
        assert_ne!(f1.values(), other.values());
    }

    #[test]
    fn product_sine_gradient_is_analytic() {
        let g = GridSpec::standard_torus(2, 128).unwrap();
        let f = make_preset(&Preset::ProductSine { amplitude: 0.3 }, &g).unwrap();
        let df = gradient(&f);
        let mut err = 0.0_f64;
        for p in 0..g.len() {
            let x = g.point_coords(p);
            let e0 = df.at(p, 0) - 0.3 * x[0].cos() * x[1].sin();
            let e1 = df.at(p, 1) - 0.3 * x[0].sin() * x[1].cos();
            err = err.max(e0.abs()).max(e1.abs());
        }
        assert!(err < 2e-4, "err = {err:.3e}");
    }

    #[test]
    fn parameter_validation() {
        let g = GridSpec::standard_torus(1, 16).unwrap();
        assert!(make_preset(&Preset::SawtoothC11 { level: -0.5 }, &g).is_err());
        assert!(make_preset(
            &Preset::RandomBandlimited {
                hessian_clamp: 0.0,
                max_mode: 2,
                seed: 1
            },
            &g
        )
        .is_err());
        assert!(make_preset(
            &Preset::RandomBandlimited {
                hessian_clamp: 0.5,
                max_mode: 8,
                seed: 1
            },
            &g
        )
        .is_err()); // 2*8 >= 16 aliases
        assert!(make_preset(
            &Preset::Quadratic {
                matrix: SymMat::zeros(2)
            },
            &g
        )
        .is_err()); // dimension mismatch
    }
}
