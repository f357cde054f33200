//! Dense complex linear algebra on small bipartite Hilbert spaces.
//!
//! Composite indices follow the row-major A-then-B convention: the basis
//! vector `|i⟩_A ⊗ |j⟩_B` sits at position `i * db + j`. Every other module
//! inherits this convention.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Numerical tolerances shared by every stage of the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed deviation of a state vector's norm from one.
    pub norm: f64,
    /// Allowed `max |A_ij - conj(A_ji)|` for a matrix to count as Hermitian.
    pub herm: f64,
    /// Eigen-residual tolerance relative to the spectral norm.
    pub eig: f64,
    /// Smallest singular value below which a set of vectors is rank deficient.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            norm: 1e-10,
            herm: 1e-10,
            eig: 1e-9,
            rank: 1e-8,
        }
    }
}

/// Dimensions of a bipartite space `H_A ⊗ H_B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteIndex {
    pub da: usize,
    pub db: usize,
}

impl BipartiteIndex {
    pub fn new(da: usize, db: usize) -> Result<Self> {
        if da == 0 || db == 0 {
            return Err(Error::InvalidInput(format!(
                "local dimensions must be positive, got {da}x{db}"
            )));
        }
        Ok(BipartiteIndex { da, db })
    }

    pub fn dim(&self) -> usize {
        self.da * self.db
    }

    /// Composite index of `|i⟩_A ⊗ |j⟩_B`.
    #[inline]
    pub fn composite(&self, i: usize, j: usize) -> usize {
        i * self.db + j
    }

    /// `min(da, db)`, the Schmidt rank of a maximally entangled state.
    pub fn min_dim(&self) -> usize {
        self.da.min(self.db)
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }
}

/// A square matrix whose Hermiticity has been checked and then enforced
/// exactly by symmetrization.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
    defect: f64,
}

/// `max |A_ij - conj(A_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::default().herm)
    }

    pub fn with_tolerance(m: CMatrix, tol_herm: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let defect = hermiticity_defect(&m);
        if !(defect <= tol_herm) {
            return Err(Error::NotHermitian { defect });
        }
        let inner = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Ok(HermitianMatrix { inner, defect })
    }

    /// Wraps a matrix already known to be exactly Hermitian (built from
    /// outer products and sums thereof), still symmetrizing away roundoff.
    pub(crate) fn from_exact(m: CMatrix) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        let defect = hermiticity_defect(&m);
        let inner = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        HermitianMatrix { inner, defect }
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix {
            inner: CMatrix::identity(n, n),
            defect: 0.0,
        }
    }

    /// Rank-one projector `|v⟩⟨v|`.
    pub fn projector(v: &CVector) -> Self {
        HermitianMatrix::from_exact(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    /// Hermiticity defect of the matrix as supplied, before symmetrization.
    pub fn hermiticity_defect(&self) -> f64 {
        self.defect
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace().re
    }

    /// `Tr(self * other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        trace_of_product(&self.inner, &other.inner).re
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.inner * v)).re
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix {
            inner: &self.inner * C64::new(s, 0.0),
            defect: self.defect * s.abs(),
        }
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix {
            inner: &self.inner + &other.inner,
            defect: self.defect + other.defect,
        }
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix {
            inner: &self.inner - &other.inner,
            defect: self.defect + other.defect,
        }
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        max_abs_diff(&self.inner, &other.inner)
    }
}

/// `Tr(a * b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Kronecker product, `(a⊗b)[i*rb+k, j*cb+l] = a[i,j] * b[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    CMatrix::from_fn(ra * rb, ca * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

pub fn kron_vec(u: &CVector, v: &CVector) -> CVector {
    let n = v.len();
    CVector::from_fn(u.len() * n, |r, _| u[r / n] * v[r % n])
}

/// Reduced operator on `H_A`: `Tr_B m`.
pub fn partial_trace_b(m: &HermitianMatrix, idx: BipartiteIndex) -> Result<HermitianMatrix> {
    idx.check(m.dim())?;
    let a = m.matrix();
    let out = CMatrix::from_fn(idx.da, idx.da, |i, k| {
        (0..idx.db)
            .map(|j| a[(idx.composite(i, j), idx.composite(k, j))])
            .sum()
    });
    Ok(HermitianMatrix::from_exact(out))
}

/// Reduced operator on `H_B`: `Tr_A m`.
pub fn partial_trace_a(m: &HermitianMatrix, idx: BipartiteIndex) -> Result<HermitianMatrix> {
    idx.check(m.dim())?;
    let a = m.matrix();
    let out = CMatrix::from_fn(idx.db, idx.db, |j, l| {
        (0..idx.da)
            .map(|i| a[(idx.composite(i, j), idx.composite(i, l))])
            .sum()
    });
    Ok(HermitianMatrix::from_exact(out))
}

/// `(id ⊗ T)(m)`: transposes every `db x db` block in place.
///
/// Only entries move, so applying it twice reproduces `m` bit for bit.
pub fn partial_transpose_b(m: &HermitianMatrix, idx: BipartiteIndex) -> Result<HermitianMatrix> {
    idx.check(m.dim())?;
    Ok(HermitianMatrix {
        inner: partial_transpose_b_raw(m.matrix(), idx),
        defect: m.defect,
    })
}

pub(crate) fn partial_transpose_b_raw(a: &CMatrix, idx: BipartiteIndex) -> CMatrix {
    let db = idx.db;
    CMatrix::from_fn(a.nrows(), a.ncols(), |r, c| {
        let (i, k) = (r / db, r % db);
        let (j, l) = (c / db, c % db);
        a[(idx.composite(i, l), idx.composite(j, k))]
    })
}

/// Spectrum of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<CVector>,
}

pub fn hermitian_eig(m: &HermitianMatrix) -> Eigen {
    let eig = SymmetricEigen::new(m.matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Eigen {
        values: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        vectors: order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect(),
    }
}

/// Eigendecomposition of an arbitrary square matrix after the Hermiticity
/// check. Inputs with a larger defect than `tol_herm` are rejected.
pub fn hermitian_eig_checked(m: &CMatrix, tol_herm: f64) -> Result<Eigen> {
    Ok(hermitian_eig(&HermitianMatrix::with_tolerance(
        m.clone(),
        tol_herm,
    )?))
}

pub fn min_eigenvalue(m: &HermitianMatrix) -> f64 {
    hermitian_eig(m).values[0]
}

/// Smallest eigenvalue with a unit eigenvector.
pub fn lowest_eigenpair(m: &HermitianMatrix) -> (f64, CVector) {
    let mut e = hermitian_eig(m);
    (e.values[0], e.vectors.swap_remove(0))
}

/// `Σ_k |v_k⟩⟨v_k|`.
pub fn frame_operator<'a, I>(dim: usize, vectors: I) -> HermitianMatrix
where
    I: IntoIterator<Item = &'a CVector>,
{
    let mut acc = CMatrix::zeros(dim, dim);
    for v in vectors {
        acc += v * v.adjoint();
    }
    HermitianMatrix::from_exact(acc)
}

/// Smallest singular value of the `dim x k` matrix whose columns are the
/// given vectors; zero when there are fewer vectors than `dim`.
pub fn smallest_singular_value(dim: usize, vectors: &[&CVector]) -> f64 {
    if vectors.len() < dim || dim == 0 {
        return 0.0;
    }
    let m = CMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]);
    let svd = SVD::new(m, false, false);
    svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn spans(dim: usize, vectors: &[&CVector], tol_rank: f64) -> bool {
    smallest_singular_value(dim, vectors) > tol_rank
}

/// Spectral norm of a Hermitian matrix.
pub fn spectral_norm(m: &HermitianMatrix) -> f64 {
    let e = hermitian_eig(m);
    e.values
        .first()
        .map(|lo| lo.abs().max(e.values.last().unwrap().abs()))
        .unwrap_or(0.0)
}

/// Normalizes `v`, rejecting the zero vector.
pub fn normalized(v: CVector) -> Result<CVector> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
    }
    Ok(v / C64::new(n, 0.0))
}

pub fn is_unit(v: &CVector, tol_norm: f64) -> bool {
    (v.norm() - 1.0).abs() <= tol_norm
}

pub fn basis_vector(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = ONE;
    v
}

pub fn real_vector(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| C64::new(x, 0.0)))
}

pub fn conj_vector(v: &CVector) -> CVector {
    v.map(|z| z.conj())
}

/// JSON encodings: complex numbers as `[re, im]`, matrices as row-major
/// nested arrays.
pub mod json {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn complex_to_pair(z: &C64) -> [f64; 2] {
        [z.re, z.im]
    }

    pub fn vector_to_pairs(v: &CVector) -> Vec<[f64; 2]> {
        v.iter().map(complex_to_pair).collect()
    }

    pub fn vector_from_pairs(p: &[[f64; 2]]) -> CVector {
        CVector::from_iterator(p.len(), p.iter().map(|[re, im]| C64::new(*re, *im)))
    }

    pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| complex_to_pair(&m[(r, c)])).collect())
            .collect()
    }

    pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMatrix, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        Ok(CMatrix::from_fn(nrows, ncols, |r, c| {
            let [re, im] = rows[r][c];
            C64::new(re, im)
        }))
    }

    /// `#[serde(with = "json::vector")]`
    pub mod vector {
        use super::*;

        pub fn serialize<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
            vector_to_pairs(v).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CVector, D::Error> {
            let pairs = Vec::<[f64; 2]>::deserialize(d)?;
            Ok(vector_from_pairs(&pairs))
        }
    }

    /// `#[serde(with = "json::matrix")]`
    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
            matrix_to_rows(m).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
            let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
            matrix_from_rows(&rows).map_err(D::Error::custom)
        }
    }

    /// `#[serde(with = "json::hermitian")]`
    pub mod hermitian {
        use super::*;

        pub fn serialize<S: Serializer>(
            m: &HermitianMatrix,
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            matrix_to_rows(m.matrix()).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<HermitianMatrix, D::Error> {
            let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
            let m = matrix_from_rows(&rows).map_err(D::Error::custom)?;
            HermitianMatrix::new(m).map_err(D::Error::custom)
        }
    }
}
