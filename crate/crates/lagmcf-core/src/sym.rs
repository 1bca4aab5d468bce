//! Small dense symmetric tensors in triangular storage.
//!
//! Fields store one plane per independent component; the types here are the
//! per-point views the geometry kernels work on. Dimensions up to
//! [`MAX_N`] = 4 are supported so eigensolver tests can go one past the
//! simulated range (grids stop at 3).

/// Largest supported matrix dimension.
pub const MAX_N: usize = 4;

/// Capacity of the triangular buffers: `MAX_N * (MAX_N + 1) / 2`.
pub const SYM2_CAP: usize = 10;

/// Number of independent entries of a symmetric `n x n` matrix.
#[inline]
pub const fn sym2_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Number of independent entries of a fully symmetric rank-3 tensor.
#[inline]
pub const fn sym3_count(n: usize) -> usize {
    n * (n + 1) * (n + 2) / 6
}

/// Position of the (i, j) component, i <= j, in row-major triangular order.
#[inline]
pub fn sym2_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * (2 * n + 1 - i) / 2 + (j - i)
}

/// Multiplicity of the sorted pair (i, j) among all ordered index pairs.
#[inline]
pub fn sym2_multiplicity(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        2.0
    }
}

/// Position of the sorted triple (i, j, k), i <= j <= k.
#[inline]
pub fn sym3_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i <= j && j <= k && k < n);
    // Entries with first index < i form triangles of decreasing size.
    let mut base = 0;
    for a in 0..i {
        base += sym2_count(n - a);
    }
    base + sym2_index(n - i, j - i, k - i)
}

/// Multiplicity of the sorted triple among all ordered index triples.
#[inline]
pub fn sym3_multiplicity(i: usize, j: usize, k: usize) -> f64 {
    if i == j && j == k {
        1.0
    } else if i == j || j == k {
        3.0
    } else {
        6.0
    }
}

/// Sorted triples of `0..n` in storage order.
pub fn sym3_triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(sym3_count(n));
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                out.push((i, j, k));
            }
        }
    }
    out
}

/// Symmetric matrix of dimension `n <= MAX_N`, triangular storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    n: usize,
    a: [f64; SYM2_CAP],
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_N).contains(&n), "SymMat dimension out of range");
        SymMat { n, a: [0.0; SYM2_CAP] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = SymMat::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Build from the upper triangle in storage order.
    pub fn from_upper(n: usize, upper: &[f64]) -> Self {
        assert_eq!(upper.len(), sym2_count(n));
        let mut m = SymMat::zeros(n);
        m.a[..upper.len()].copy_from_slice(upper);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.a[sym2_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.a[sym2_index(self.n, i, j)] = v;
    }

    /// Upper triangle in storage order.
    #[inline]
    pub fn upper(&self) -> &[f64] {
        &self.a[..sym2_count(self.n)]
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        assert_eq!(self.n, other.n);
        let mut m = *self;
        for k in 0..sym2_count(self.n) {
            m.a[k] += other.a[k];
        }
        m
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        assert_eq!(self.n, other.n);
        let mut m = *self;
        for k in 0..sym2_count(self.n) {
            m.a[k] -= other.a[k];
        }
        m
    }

    pub fn scale(&self, c: f64) -> SymMat {
        let mut m = *self;
        for k in 0..sym2_count(self.n) {
            m.a[k] *= c;
        }
        m
    }

    /// `self * self`; symmetric since `self` is.
    pub fn square(&self) -> SymMat {
        let n = self.n;
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.get(i, k) * self.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry.
    pub fn sup_entry(&self) -> f64 {
        self.upper().iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Matrix-vector product into the first `n` slots of the output.
    pub fn apply(&self, x: &[f64]) -> [f64; MAX_N] {
        let mut y = [0.0; MAX_N];
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
        y
    }
}

/// Fully symmetric rank-3 tensor, dimension `n <= 3`, sorted-triple storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymRank3 {
    n: usize,
    a: [f64; SYM2_CAP],
}

impl SymRank3 {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=3).contains(&n), "SymRank3 dimension out of range");
        debug_assert!(sym3_count(n) <= SYM2_CAP);
        SymRank3 { n, a: [0.0; SYM2_CAP] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut t = [i, j, k];
        t.sort_unstable();
        self.a[sym3_index(self.n, t[0], t[1], t[2])]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let mut t = [i, j, k];
        t.sort_unstable();
        self.a[sym3_index(self.n, t[0], t[1], t[2])] = v;
    }

    pub fn scale(&self, c: f64) -> SymRank3 {
        let mut t = *self;
        for k in 0..sym3_count(self.n) {
            t.a[k] *= c;
        }
        t
    }

    /// Sum of squares over all n^3 ordered index triples.
    pub fn euclidean_sq(&self) -> f64 {
        let mut s = 0.0;
        for (i, j, k) in sym3_triples(self.n) {
            let v = self.get(i, j, k);
            s += sym3_multiplicity(i, j, k) * v * v;
        }
        s
    }
}
