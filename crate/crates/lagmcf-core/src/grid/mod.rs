//! Periodic rectangular grids and the fields that live on them.
//!
//! All fields are flat `Vec<f64>` buffers in row-major order with the last
//! axis fastest; multi-component fields store one full plane per component.
//! The domain is a torus: every stencil wraps.

mod lgf1;
mod stencil;

pub use lgf1::{read_field, read_field_path, write_field, write_field_path};
pub use stencil::{
    centered_diff, gradient, hessian, third_derivatives, third_derivatives_with_defect,
};

use crate::error::{Error, Result};
use crate::parallel;
use crate::sym::{sym2_count, sym3_count, sym3_triples, SymMat, SymRank3};

/// Highest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Smallest per-axis point count; keeps every centered stencil (width 5 after
/// composition) meaningful on the torus.
pub const MIN_NPTS: usize = 8;

/// Shape, spacing and origin of a periodic grid.
///
/// Unused axes (beyond `ndim`) are fixed at one point / unit spacing so the
/// total length is always the product over the first `ndim` axes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    ndim: usize,
    npts: [usize; MAX_DIM],
    spacing: [f64; MAX_DIM],
    origin: [f64; MAX_DIM],
}

impl GridSpec {
    /// Validated constructor. Point counts must be even and at least
    /// [`MIN_NPTS`]; spacings must be positive and finite.
    pub fn new(npts: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        let ndim = npts.len();
        if !(1..=MAX_DIM).contains(&ndim) {
            return Err(Error::InvalidGrid(format!(
                "ndim must be 1..=3, got {ndim}"
            )));
        }
        if spacing.len() != ndim || origin.len() != ndim {
            return Err(Error::InvalidGrid(
                "npts, spacing and origin must have equal lengths".into(),
            ));
        }
        let mut g = GridSpec {
            ndim,
            npts: [1; MAX_DIM],
            spacing: [1.0; MAX_DIM],
            origin: [0.0; MAX_DIM],
        };
        let mut total: usize = 1;
        for d in 0..ndim {
            if npts[d] < MIN_NPTS || !npts[d].is_multiple_of(2) {
                return Err(Error::InvalidGrid(format!(
                    "npts[{d}] = {} must be even and >= {MIN_NPTS}",
                    npts[d]
                )));
            }
            if !spacing[d].is_finite() || spacing[d] <= 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "spacing[{d}] = {} must be positive and finite",
                    spacing[d]
                )));
            }
            if !origin[d].is_finite() {
                return Err(Error::InvalidGrid(format!("origin[{d}] is not finite")));
            }
            total = total.checked_mul(npts[d]).ok_or_else(|| {
                Error::InvalidGrid("total point count overflows usize".into())
            })?;
            g.npts[d] = npts[d];
            g.spacing[d] = spacing[d];
            g.origin[d] = origin[d];
        }
        // Leave generous headroom for byte counts of multi-plane fields.
        if total > usize::MAX / 64 {
            return Err(Error::InvalidGrid(format!(
                "total point count {total} is unreasonably large"
            )));
        }
        Ok(g)
    }

    /// Torus of the given extents with the origin at zero;
    /// `spacing = extent / npts` exactly.
    pub fn torus(npts: &[usize], extent: &[f64]) -> Result<Self> {
        if extent.len() != npts.len() {
            return Err(Error::InvalidGrid(
                "npts and extent must have equal lengths".into(),
            ));
        }
        let spacing: Vec<f64> = npts
            .iter()
            .zip(extent)
            .map(|(&n, &l)| l / n as f64)
            .collect();
        let origin = vec![0.0; npts.len()];
        GridSpec::new(npts, &spacing, &origin)
    }

    /// The standard `[0, 2*pi)^ndim` torus with `n` points per axis.
    pub fn standard_torus(ndim: usize, n: usize) -> Result<Self> {
        GridSpec::torus(&vec![n; ndim], &vec![std::f64::consts::TAU; ndim])
    }

    #[inline]
    pub fn ndim(&self) -> usize {
        self.ndim
    }

    #[inline]
    pub fn npts(&self, d: usize) -> usize {
        self.npts[d]
    }

    #[inline]
    pub fn spacing(&self, d: usize) -> f64 {
        self.spacing[d]
    }

    #[inline]
    pub fn origin(&self, d: usize) -> f64 {
        self.origin[d]
    }

    /// Physical period of axis `d`.
    #[inline]
    pub fn extent(&self, d: usize) -> f64 {
        self.spacing[d] * self.npts[d] as f64
    }

    /// Total number of grid points.
    #[inline]
    pub fn len(&self) -> usize {
        self.npts[..self.ndim].iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // construction forbids empty grids
    }

    /// Linear stride of axis `d` (last axis fastest).
    #[inline]
    pub(crate) fn stride(&self, d: usize) -> usize {
        self.npts[d + 1..self.ndim].iter().product()
    }

    #[inline]
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.ndim);
        let mut p = 0;
        for d in 0..self.ndim {
            debug_assert!(idx[d] < self.npts[d]);
            p = p * self.npts[d] + idx[d];
        }
        p
    }

    #[inline]
    pub fn multi_index(&self, mut p: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for d in (0..self.ndim).rev() {
            idx[d] = p % self.npts[d];
            p /= self.npts[d];
        }
        idx
    }

    /// Coordinates of point `p`; entries past `ndim` are zero.
    #[inline]
    pub fn point_coords(&self, p: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(p);
        let mut x = [0.0; MAX_DIM];
        for d in 0..self.ndim {
            x[d] = self.origin[d] + idx[d] as f64 * self.spacing[d];
        }
        x
    }

    /// Multi-index prefix of row `r`; the last-axis slot is zero.
    #[inline]
    pub(crate) fn row_prefix(&self, r: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        match self.ndim {
            1 => {}
            2 => idx[0] = r,
            _ => {
                idx[0] = r / self.npts[1];
                idx[1] = r % self.npts[1];
            }
        }
        idx
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(p) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidField(format!(
            "non-finite value at linear index {p}"
        )));
    }
    Ok(())
}

/// Scalar samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &GridSpec) -> Self {
        ScalarField {
            values: vec![0.0; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Take ownership of a prepared buffer; rejects wrong lengths and
    /// non-finite entries.
    pub fn from_values(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "buffer length {} does not match grid length {}",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values)?;
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    /// Sample a function of the point coordinates.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64; MAX_DIM]) -> f64 + Sync) -> Result<Self> {
        let values = parallel::map_points(grid.len(), |p| f(&grid.point_coords(p)));
        ScalarField::from_values(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `self + c * other` as a new field.
    pub fn add_scaled(&self, c: f64, other: &ScalarField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::InvalidField("grid mismatch in field sum".into()));
        }
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: parallel::zip_map(&self.values, &other.values, |a, b| a + c * b),
        })
    }

    /// Minimum and maximum value. The `+ 0.0` canonicalizes signed zeros so
    /// the parallel reduction is order-independent bit for bit.
    pub fn min_max(&self) -> (f64, f64) {
        let seed = (f64::INFINITY, f64::NEG_INFINITY);
        let (lo, hi) = parallel::try_reduce_points(
            self.values.len(),
            seed,
            |p| {
                let v = self.values[p] + 0.0;
                Ok((v, v))
            },
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        )
        .expect("infallible reduction");
        (lo, hi)
    }

    /// max - min.
    pub fn osc(&self) -> f64 {
        let (lo, hi) = self.min_max();
        hi - lo
    }

    pub fn sup_abs(&self) -> f64 {
        let (lo, hi) = self.min_max();
        lo.abs().max(hi.abs())
    }

    /// Index of the first non-finite entry, if any.
    pub fn first_nonfinite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}

/// Vector-valued samples, one plane per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    ncomp: usize,
    values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: &GridSpec, ncomp: usize) -> Self {
        VectorField {
            values: vec![0.0; grid.len() * ncomp],
            grid: grid.clone(),
            ncomp,
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn comp(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, p: usize, c: usize) -> f64 {
        self.values[c * self.grid.len() + p]
    }

    /// Pointwise Euclidean norm, maximized over the grid.
    pub fn sup_norm(&self) -> f64 {
        let n = self.grid.len();
        let sq = parallel::try_reduce_points(
            n,
            0.0_f64,
            |p| {
                let mut s = 0.0;
                for c in 0..self.ncomp {
                    let v = self.values[c * n + p];
                    s += v * v;
                }
                Ok(s)
            },
            f64::max,
        )
        .expect("infallible reduction");
        sq.sqrt()
    }

    /// View one component as a scalar field (copies the plane).
    pub fn comp_field(&self, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.comp(c).to_vec(),
        }
    }
}

/// Symmetric-matrix samples in triangular component planes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatField {
    grid: GridSpec,
    n: usize,
    values: Vec<f64>,
}

impl SymMatField {
    pub fn zeros(grid: &GridSpec, n: usize) -> Self {
        SymMatField {
            values: vec![0.0; grid.len() * sym2_count(n)],
            grid: grid.clone(),
            n,
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Matrix dimension at each point.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn comp(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn comp_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[k * n..(k + 1) * n]
    }

    /// Gather the matrix at one point.
    #[inline]
    pub fn at_mat(&self, p: usize) -> SymMat {
        let np = self.grid.len();
        let mut upper = [0.0; crate::sym::SYM2_CAP];
        let m = sym2_count(self.n);
        for k in 0..m {
            upper[k] = self.values[k * np + p];
        }
        SymMat::from_upper(self.n, &upper[..m])
    }

    /// Add the same matrix at every point (a constant-curvature background).
    pub fn add_constant(&self, m: &SymMat) -> SymMatField {
        assert_eq!(m.dim(), self.n, "background dimension mismatch");
        let np = self.grid.len();
        let mut out = self.clone();
        for k in 0..sym2_count(self.n) {
            let c = m.upper()[k];
            for v in &mut out.values[k * np..(k + 1) * np] {
                *v += c;
            }
        }
        out
    }
}

/// Fully symmetric rank-3 samples in sorted-triple component planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank3Field {
    grid: GridSpec,
    n: usize,
    values: Vec<f64>,
}

impl Rank3Field {
    pub fn zeros(grid: &GridSpec, n: usize) -> Self {
        Rank3Field {
            values: vec![0.0; grid.len() * sym3_count(n)],
            grid: grid.clone(),
            n,
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn comp(&self, k: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn comp_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.grid.len();
        &mut self.values[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn at_rank3(&self, p: usize) -> SymRank3 {
        let np = self.grid.len();
        let mut t = SymRank3::zeros(self.n);
        for (c, (i, j, k)) in sym3_triples(self.n).into_iter().enumerate() {
            t.set(i, j, k, self.values[c * np + p]);
        }
        t
    }

    /// Largest pointwise sum of squares over all ordered index triples.
    pub fn sup_euclidean_sq(&self) -> f64 {
        let np = self.grid.len();
        let triples = sym3_triples(self.n);
        let mults: Vec<f64> = triples
            .iter()
            .map(|&(i, j, k)| crate::sym::sym3_multiplicity(i, j, k))
            .collect();
        parallel::try_reduce_points(
            np,
            0.0_f64,
            |p| {
                let mut s = 0.0;
                for (c, &m) in mults.iter().enumerate() {
                    let v = self.values[c * np + p];
                    s += m * v * v;
                }
                Ok(s)
            },
            f64::max,
        )
        .expect("infallible reduction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(GridSpec::new(&[7], &[0.1], &[0.0]).is_err()); // odd
        assert!(GridSpec::new(&[6], &[0.1], &[0.0]).is_err()); // too small
        assert!(GridSpec::new(&[16], &[0.0], &[0.0]).is_err()); // zero spacing
        assert!(GridSpec::new(&[16], &[0.1], &[f64::NAN]).is_err());
        assert!(GridSpec::new(&[16, 16, 16, 16], &[0.1; 4], &[0.0; 4]).is_err());
    }

    #[test]
    fn torus_spacing_is_exact_quotient() {
        let g = GridSpec::standard_torus(2, 128).unwrap();
        assert_eq!(g.spacing(0), std::f64::consts::TAU / 128.0);
        assert_eq!(g.extent(1), g.spacing(1) * 128.0);
        assert_eq!(g.len(), 128 * 128);
    }

    #[test]
    fn linear_and_multi_index_roundtrip() {
        let g = GridSpec::new(&[8, 10, 12], &[0.1, 0.1, 0.1], &[0.0; 3]).unwrap();
        for p in [0usize, 1, 959, 123, 777] {
            assert_eq!(g.linear_index(&g.multi_index(p)[..3]), p);
        }
        // last axis fastest
        assert_eq!(g.linear_index(&[0, 0, 1]), 1);
        assert_eq!(g.linear_index(&[0, 1, 0]), 12);
        assert_eq!(g.linear_index(&[1, 0, 0]), 120);
    }

    #[test]
    fn from_values_validates() {
        let g = GridSpec::standard_torus(1, 8).unwrap();
        assert!(ScalarField::from_values(&g, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert!(ScalarField::from_values(&g, v).is_err());
    }

    #[test]
    fn min_max_and_osc() {
        let g = GridSpec::standard_torus(1, 16).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin()).unwrap();
        let (lo, hi) = f.min_max();
        assert!(lo < -0.9 && hi > 0.9);
        assert!((f.osc() - (hi - lo)).abs() == 0.0);
    }

    #[test]
    fn symmat_field_gather_and_background() {
        let g = GridSpec::standard_torus(2, 8).unwrap();
        let mut f = SymMatField::zeros(&g, 2);
        f.comp_mut(1)[5] = 0.25; // the (0,1) plane
        let m = f.at_mat(5);
        assert_eq!(m.get(0, 1), 0.25);
        assert_eq!(m.get(1, 0), 0.25);

        let bg = SymMat::from_diag(&[1.0, -1.0]);
        let shifted = f.add_constant(&bg);
        assert_eq!(shifted.at_mat(5).get(0, 0), 1.0);
        assert_eq!(shifted.at_mat(5).get(0, 1), 0.25);
        assert_eq!(shifted.at_mat(0).get(1, 1), -1.0);
    }
}
