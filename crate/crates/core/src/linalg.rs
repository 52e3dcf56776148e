//! Dense complex linear algebra shared by every other module.
//!
//! All operators are [`ComplexMatrix`] values (`nalgebra::DMatrix<Complex<f64>>`).
//! Decisions that depend on floating point noise (equality, rank, support)
//! go through a [`Tolerance`].

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Thresholds used for every approximate decision in the crate.
///
/// `eq_abs` is an absolute Frobenius-norm threshold for operator equality,
/// `rank_rel` a cutoff on singular values relative to the largest one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub eq_abs: f64,
    pub rank_rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            eq_abs: 1e-9,
            rank_rel: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(eq_abs: f64, rank_rel: f64) -> Result<Self> {
        if !(eq_abs > 0.0 && eq_abs.is_finite() && rank_rel > 0.0 && rank_rel.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "tolerances must be positive and finite (eq_abs = {eq_abs}, rank_rel = {rank_rel})"
            )));
        }
        Ok(Self { eq_abs, rank_rel })
    }
}

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a matrix from row-major complex entries.
pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
    }
    if entries.len() != rows * cols {
        return Err(Error::InvalidInput(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    Ok(ComplexMatrix::from_row_slice(rows, cols, entries))
}

/// Real matrix from row-major entries. Panics on a length mismatch; meant for
/// literals in code and tests.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count");
    ComplexMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c64(x, 0.0)))
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Column vector `|i⟩` in dimension `d`.
pub fn ket(d: usize, i: usize) -> ComplexMatrix {
    let mut v = zeros(d, 1);
    v[(i, 0)] = c64(1.0, 0.0);
    v
}

/// `|a⟩⟨b|` for column vectors `a`, `b`.
pub fn outer(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b.adjoint()
}

pub fn projector(v: &ComplexMatrix) -> ComplexMatrix {
    outer(v, v)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).norm()
}

/// Hilbert–Schmidt inner product `tr(a† b)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn is_hermitian(m: &ComplexMatrix, tol: Tolerance) -> bool {
    m.is_square() && frobenius_distance(m, &m.adjoint()) <= tol.eq_abs
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Returns `s` if `m = s·I` within `eq_abs`, measured against the closest
/// scalar matrix `(tr m / d)·I`.
pub fn scalar_multiple_of_identity(m: &ComplexMatrix, tol: Tolerance) -> Option<C64> {
    if !m.is_square() {
        return None;
    }
    let d = m.nrows();
    let s = m.trace() / d as f64;
    let residual = frobenius_distance(m, &identity(d).map(|z| z * s));
    (residual <= tol.eq_abs).then_some(s)
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues in decreasing order.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> ComplexMatrix {
        self.vectors.columns(k, 1).into_owned()
    }
}

/// Diagonalizes the Hermitian part of `m`.
pub fn eigh(m: &ComplexMatrix) -> Eigh {
    assert!(m.is_square(), "eigh needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return Eigh {
            values: Vec::new(),
            vectors: zeros(0, 0),
        };
    }
    let eig = to_faer(&hermitian_part(m))
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigendecomposition converges");
    // faer sorts ascending
    let s = eig.S().column_vector();
    let u = eig.U();
    let values = (0..n).rev().map(|i| s[i].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| u[(r, n - 1 - c)]);
    Eigh { values, vectors }
}

fn to_faer(m: &ComplexMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin singular value decomposition `m = U diag(s) V†` with `s` decreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Svd {
            u: zeros(r, 0),
            singular_values: Vec::new(),
            v: zeros(c, 0),
        };
    }
    let dec = to_faer(m).thin_svd().expect("SVD converges");
    let (u, v, s) = (dec.U(), dec.V(), dec.S().column_vector());
    Svd {
        u: ComplexMatrix::from_fn(r, k, |i, j| u[(i, j)]),
        singular_values: (0..k).map(|i| s[i].re).collect(),
        v: ComplexMatrix::from_fn(c, k, |i, j| v[(i, j)]),
    }
}

/// Number of entries of a decreasing nonnegative sequence above `rank_rel × max`.
pub fn count_above_relative(values: &[f64], rank_rel: f64) -> usize {
    let top = values.iter().copied().fold(0.0_f64, f64::max);
    if top <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > rank_rel * top).count()
}

/// Count of singular values above `rank_rel × σ_max`; zero for the zero matrix.
pub fn numerical_rank(m: &ComplexMatrix, tol: Tolerance) -> usize {
    count_above_relative(&svd(m).singular_values, tol.rank_rel)
}

/// Orthogonal projector onto the column space of `m`.
pub fn range_projector(m: &ComplexMatrix, tol: Tolerance) -> ComplexMatrix {
    let dec = svd(m);
    let r = count_above_relative(&dec.singular_values, tol.rank_rel);
    let basis = dec.u.columns(0, r);
    basis * basis.adjoint()
}

/// Square root of a positive semidefinite matrix. Eigenvalues within
/// round-off of zero (relative to the largest) are set to zero, since the
/// square root would otherwise inflate them to `√ε`.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let top = eigh(m).values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = 4.0 * m.nrows() as f64 * f64::EPSILON * top;
    spectral_map(m, |x| if x > floor { x.sqrt() } else { 0.0 })
}

/// Applies `f` to the eigenvalues of the Hermitian part of `m`.
pub fn spectral_map(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let e = eigh(m);
    let d = m.nrows();
    let mut out = zeros(d, d);
    for (k, &lambda) in e.values.iter().enumerate() {
        let w = f(lambda);
        if w != 0.0 {
            let v = e.vector(k);
            out += projector(&v).scale(w);
        }
    }
    out
}

/// Moore–Penrose inverse of `√m` for PSD `m`, with eigenvalues at or below
/// `rank_rel × λ_max` treated as zero. Also returns an orthonormal basis of
/// the discarded kernel as columns.
pub fn psd_pinv_sqrt(m: &ComplexMatrix, tol: Tolerance) -> (ComplexMatrix, ComplexMatrix) {
    let e = eigh(m);
    let d = m.nrows();
    let top = e.values.first().copied().unwrap_or(0.0).max(0.0);
    let mut pinv = zeros(d, d);
    let mut kernel = Vec::new();
    for (k, &lambda) in e.values.iter().enumerate() {
        let v = e.vector(k);
        if top > 0.0 && lambda > tol.rank_rel * top {
            pinv += projector(&v).scale(1.0 / lambda.sqrt());
        } else {
            kernel.push(v);
        }
    }
    let kernel = if kernel.is_empty() {
        zeros(d, 0)
    } else {
        ComplexMatrix::from_columns(&kernel.iter().map(|v| v.column(0)).collect::<Vec<_>>())
    };
    (pinv, kernel)
}

/// Extends orthonormal columns `q` (`n × k`) to an `n × n` unitary whose first
/// `k` columns are `q`. New columns come from standard basis vectors, picking
/// the one with the largest residual at each step.
pub fn complete_basis(q: &ComplexMatrix) -> ComplexMatrix {
    let n = q.nrows();
    let mut cols: Vec<ComplexMatrix> = (0..q.ncols()).map(|j| q.columns(j, 1).into_owned()).collect();
    while cols.len() < n {
        let mut best: Option<(f64, ComplexMatrix)> = None;
        for i in 0..n {
            let r = project_out(&ket(n, i), &cols);
            let norm = r.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, r));
            }
        }
        let (norm, r) = best.expect("n > 0");
        cols.push(r.unscale(norm));
    }
    if cols.is_empty() {
        return zeros(n, 0);
    }
    ComplexMatrix::from_columns(&cols.iter().map(|v| v.column(0)).collect::<Vec<_>>())
}

/// Orthonormal basis of the orthogonal complement of the columns of `q`.
pub fn complement_basis(q: &ComplexMatrix) -> ComplexMatrix {
    let full = complete_basis(q);
    full.columns(q.ncols(), full.ncols() - q.ncols()).into_owned()
}

/// Removes the components of `v` along the orthonormal `basis`, twice.
fn project_out(v: &ComplexMatrix, basis: &[ComplexMatrix]) -> ComplexMatrix {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let coeff = hs_inner(b, &r);
            r -= b.map(|z| z * coeff);
        }
    }
    r
}

/// Factor `U` with `K = √c · U L`, given `K†K = c L†L`.
///
/// For `dim_out(K) ≥ dim_out(L)` the factor is an isometry. Otherwise it is a
/// partial isometry onto the whole output space of `K` with `U†U L = L`.
///
/// Within a degenerate singular block of `L` the right singular vectors of
/// `K` and `L` only agree up to a unitary rotation; mapping each right
/// singular vector `h_n` of `L` through `K` absorbs that rotation, so the new
/// output vectors are `ẽ_n = K h_n / (√c μ_n)`. They are orthonormalized in
/// order of decreasing `μ_n` so the best-conditioned directions stay exact.
pub fn partial_isometry_factor(k: &ComplexMatrix, l: &ComplexMatrix, c: f64, tol: Tolerance) -> Result<ComplexMatrix> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::PreconditionViolated(format!("scale must be positive, got {c}")));
    }
    if k.ncols() != l.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "K has input dimension {}, L has {}",
            k.ncols(),
            l.ncols()
        )));
    }
    let gram_gap = frobenius_distance(&(k.adjoint() * k), &(l.adjoint() * l).scale(c));
    if gram_gap > tol.eq_abs {
        return Err(Error::PreconditionViolated(format!(
            "‖K†K − c·L†L‖ = {gram_gap:.3e} exceeds {:.1e}",
            tol.eq_abs
        )));
    }

    let (dim_k, dim_v) = (k.nrows(), l.nrows());
    let dec = svd(l);
    let top = dec.singular_values.first().copied().unwrap_or(0.0);
    let floor = top * 64.0 * f64::EPSILON * (dim_k.max(dim_v).max(l.ncols()) as f64);
    let sqrt_c = c.sqrt();

    let mut e_cols: Vec<ComplexMatrix> = Vec::new();
    let mut f_cols: Vec<ComplexMatrix> = Vec::new();
    for (n, &mu) in dec.singular_values.iter().enumerate() {
        if mu <= floor || e_cols.len() == dim_k.min(dim_v) {
            break;
        }
        let h = dec.v.columns(n, 1).into_owned();
        let e = (k * &h).unscale(sqrt_c * mu);
        let r = project_out(&e, &e_cols);
        let norm = r.norm();
        if norm < 0.5 {
            // direction numerically absent from K; left to the completion
            continue;
        }
        e_cols.push(r.unscale(norm));
        f_cols.push(dec.u.columns(n, 1).into_owned());
    }

    let to_matrix = |cols: &[ComplexMatrix], rows: usize| {
        if cols.is_empty() {
            zeros(rows, 0)
        } else {
            ComplexMatrix::from_columns(&cols.iter().map(|v| v.column(0)).collect::<Vec<_>>())
        }
    };
    let f_full = complete_basis(&to_matrix(&f_cols, dim_v));
    let e_full = complete_basis(&to_matrix(&e_cols, dim_k));
    let m = dim_k.min(dim_v);
    Ok(e_full.columns(0, m) * f_full.columns(0, m).adjoint())
}

/// Partial trace over the second factor of `A ⊗ B` (`A` is `d1 × d1`).
pub fn partial_trace_second(m: &ComplexMatrix, d1: usize, d2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|a| m[(i * d2 + a, j * d2 + a)]).sum())
}

/// Partial trace over the first factor of `A ⊗ B` (`B` is `d2 × d2`).
pub fn partial_trace_first(m: &ComplexMatrix, d1: usize, d2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d2, d2, |a, b| (0..d1).map(|i| m[(i * d2 + a, i * d2 + b)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn tolerance_rejects_nonpositive() {
        assert!(Tolerance::new(0.0, 1e-8).is_err());
        assert!(Tolerance::new(1e-9, -1.0).is_err());
        assert!(Tolerance::new(1e-9, 1e-8).is_ok());
    }

    #[test]
    fn row_major_checks_length_and_finiteness() {
        assert!(from_row_major(2, 2, &[c64(1.0, 0.0); 3]).is_err());
        assert!(from_row_major(1, 1, &[c64(f64::NAN, 0.0)]).is_err());
        let m = from_row_major(1, 2, &[c64(1.0, 0.0), c64(0.0, 2.0)]).unwrap();
        assert_eq!(m[(0, 1)], c64(0.0, 2.0));
    }

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(numerical_rank(&identity(2), tol()), 2);
        assert_eq!(numerical_rank(&zeros(3, 3), tol()), 0);
    }

    #[test]
    fn rank_ignores_tiny_singular_value() {
        let m = real_matrix(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        assert_eq!(numerical_rank(&m, tol()), 1);
    }

    #[test]
    fn range_projector_of_rank_one() {
        let s = 1.0 / 2f64.sqrt();
        let plus = real_matrix(2, 1, &[s, s]);
        let m = outer(&ket(2, 0), &plus);
        let p = range_projector(&m, tol());
        assert!(frobenius_distance(&p, &projector(&ket(2, 0))) < 1e-12);
        assert!(frobenius_distance(&range_projector(&identity(2), tol()), &identity(2)) < 1e-12);
    }

    #[test]
    fn factor_of_identity_is_identity() {
        let u = partial_isometry_factor(&identity(2), &identity(2), 1.0, tol()).unwrap();
        assert!(frobenius_distance(&u, &identity(2)) < 1e-12);
    }

    #[test]
    fn factor_of_embedding() {
        let emb = real_matrix(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let u = partial_isometry_factor(&emb, &identity(2), 1.0, tol()).unwrap();
        assert!(frobenius_distance(&(&u * identity(2)), &emb) < 1e-12);
        assert!(frobenius_distance(&(u.adjoint() * &u), &identity(2)) < 1e-12);
    }

    #[test]
    fn factor_rejects_mismatched_grams() {
        let k = identity(2).scale(2.0);
        let err = partial_isometry_factor(&k, &identity(2), 1.0, tol()).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolated(_)));
    }

    #[test]
    fn factor_narrow_output_is_coisometry() {
        // K: C^2 -> C^1, L: C^2 -> C^3 with equal Gram matrices
        let k = real_matrix(1, 2, &[0.6, 0.8]);
        let l = real_matrix(3, 2, &[0.0, 0.0, 0.6, 0.8, 0.0, 0.0]);
        let u = partial_isometry_factor(&k, &l, 1.0, tol()).unwrap();
        assert_eq!((u.nrows(), u.ncols()), (1, 3));
        assert!(frobenius_distance(&(&u * &l), &k) < 1e-12);
        assert!(frobenius_distance(&(&u * u.adjoint()), &identity(1)) < 1e-12);
        assert!(frobenius_distance(&(u.adjoint() * &u * &l), &l) < 1e-12);
    }

    #[test]
    fn factor_handles_degenerate_singular_values() {
        // L = I (fully degenerate), K = unitary: the factor must be K itself.
        let s = 1.0 / 2f64.sqrt();
        let k = real_matrix(2, 2, &[s, s, s, -s]);
        let u = partial_isometry_factor(&k, &identity(2), 1.0, tol()).unwrap();
        assert!(frobenius_distance(&u, &k) < 1e-12);
    }

    #[test]
    fn scalar_identity_detection() {
        let m = identity(3).scale(0.25);
        assert!((scalar_multiple_of_identity(&m, tol()).unwrap() - c64(0.25, 0.0)).norm() < 1e-15);
        assert!(scalar_multiple_of_identity(&projector(&ket(2, 0)), tol()).is_none());
    }

    #[test]
    fn partial_traces_of_product() {
        let a = real_matrix(2, 2, &[0.7, 0.1, 0.1, 0.3]);
        let b = real_matrix(3, 3, &[0.5, 0.0, 0.2, 0.0, 0.25, 0.0, 0.2, 0.0, 0.25]);
        let ab = a.kronecker(&b);
        assert!(frobenius_distance(&partial_trace_second(&ab, 2, 3), &a) < 1e-14);
        assert!(frobenius_distance(&partial_trace_first(&ab, 2, 3), &b) < 1e-14);
    }

    #[test]
    fn complete_basis_is_unitary() {
        let s = 1.0 / 2f64.sqrt();
        let q = real_matrix(3, 1, &[s, 0.0, s]);
        let full = complete_basis(&q);
        assert!(frobenius_distance(&(full.adjoint() * &full), &identity(3)) < 1e-13);
        assert!(frobenius_distance(&full.columns(0, 1).into_owned(), &q) < 1e-15);
    }
}
