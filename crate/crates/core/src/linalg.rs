//! Dense complex linear algebra with a single tolerance knob.
//!
//! Every numerical decision in the crate goes through the thresholds defined on
//! [`Tolerance`]:
//!
//! - PSD slack: `λ_min ≥ −eps·max(1, ‖m‖)`
//! - rank cut: `σ > eps·σ_max·max(rows, cols)`
//! - projection test: `‖P² − P‖ ≤ eps·dim`
//! - residual checks: `‖residual‖ ≤ eps·max(1, scale)`
//!
//! Norms are Frobenius norms unless a function says otherwise.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    eps: f64,
}

impl Tolerance {
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 {
            Ok(Tolerance { eps })
        } else {
            Err(Error::InvalidTolerance(eps))
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Lower bound accepted for the smallest eigenvalue of a PSD matrix of norm `norm`.
    pub fn psd_slack(&self, norm: f64) -> f64 {
        self.eps * norm.max(1.0)
    }

    pub fn rank_cut(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        self.eps * sigma_max * rows.max(cols).max(1) as f64
    }

    pub fn projection_slack(&self, dim: usize) -> f64 {
        self.eps * dim.max(1) as f64
    }

    /// Accepted residual for a quantity of magnitude `scale`.
    pub fn residual(&self, scale: f64) -> f64 {
        self.eps * scale.max(1.0)
    }

    /// Separation used when grouping numerically equal eigenvalues.
    fn cluster_gap(&self, norm: f64, dim: usize) -> f64 {
        self.eps * norm.max(1.0) * dim.max(1) as f64
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eps: Self::DEFAULT_EPS,
        }
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Real diagonal matrix.
pub fn diag(entries: &[f64]) -> ComplexMatrix {
    let n = entries.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { r(entries[i]) } else { ZERO })
}

/// `n×n` matrix unit `E_pq` (0-based).
pub fn matrix_unit(n: usize, p: usize, q: usize) -> ComplexMatrix {
    let mut m = zeros(n, n);
    m[(p, q)] = ONE;
    m
}

/// Builds a matrix from rows of real entries.
pub fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(nr, nc, |i, j| r(rows[i][j]))
}

pub fn frob(m: &ComplexMatrix) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn is_hermitian(m: &ComplexMatrix, tol: Tolerance) -> bool {
    m.is_square() && hermitian_defect(m) <= tol.psd_slack(frob(m))
}

/// `‖P² − P‖ ≤ eps·dim` and Hermitian.
pub fn is_projection(m: &ComplexMatrix, tol: Tolerance) -> bool {
    m.is_square()
        && hermitian_defect(m) <= tol.projection_slack(m.nrows())
        && (m * m - m).norm() <= tol.projection_slack(m.nrows())
}

/// `‖W*W − I‖` in operator norm.
pub fn isometry_defect(w: &ComplexMatrix) -> f64 {
    op_norm(&(w.adjoint() * w - identity(w.ncols())))
}

/// `max(‖U*U − I‖, ‖UU* − I‖)` in operator norm, infinite for non-square input.
pub fn unitary_defect(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    isometry_defect(u).max(op_norm(&(u * u.adjoint() - identity(u.nrows()))))
}

/// Direct sum of square or rectangular blocks.
pub fn block_diag(blocks: &[ComplexMatrix]) -> ComplexMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Horizontal concatenation of matrices with equal row counts.
pub fn hstack(parts: &[ComplexMatrix], rows: usize) -> ComplexMatrix {
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c0 = 0;
    for p in parts {
        out.view_mut((0, c0), (rows, p.ncols())).copy_from(p);
        c0 += p.ncols();
    }
    out
}

/// Vertical concatenation of matrices with equal column counts.
pub fn vstack(parts: &[ComplexMatrix], cols: usize) -> ComplexMatrix {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r0 = 0;
    for p in parts {
        out.view_mut((r0, 0), (p.nrows(), cols)).copy_from(p);
        r0 += p.nrows();
    }
    out
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, j: usize) -> ComplexVector {
        self.vectors.column(j).into_owned()
    }

    /// `U f(Λ) U*`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.nrows();
        let mut out = zeros(n, n);
        for (j, &lam) in self.values.iter().enumerate() {
            let v = self.vectors.column(j);
            out += v * v.adjoint() * r(f(lam));
        }
        out
    }
}

/// Hermitian eigendecomposition with deterministic eigenvector choice.
///
/// Eigenvalues are returned in descending order. Inside a group of numerically
/// equal eigenvalues the eigenvectors are rebuilt from the group's spectral
/// projector by pivoted Gram-Schmidt on its columns, so the result does not
/// depend on the arbitrary basis chosen by the backend. Every eigenvector is
/// phase-normalized so that its first significant component is real positive.
pub fn herm_eig(m: &ComplexMatrix, tol: Tolerance) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(HermEig {
            values: vec![],
            vectors: zeros(0, 0),
        });
    }
    let norm = frob(m);
    let defect = hermitian_defect(m);
    if defect > tol.psd_slack(norm) {
        return Err(Error::NotHermitian(defect));
    }
    let h = (m + m.adjoint()) * r(0.5);
    let eig = SymmetricEigen::new(h);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let raw: Vec<ComplexVector> = order
        .iter()
        .map(|&j| eig.eigenvectors.column(j).into_owned())
        .collect();

    let gap = tol.cluster_gap(norm, n);
    let mut vectors: Vec<ComplexVector> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end - 1] - values[end] <= gap {
            end += 1;
        }
        if end - start == 1 {
            vectors.push(phase_normalize(raw[start].clone()));
        } else {
            vectors.extend(canonical_basis(&raw[start..end]));
        }
        start = end;
    }
    Ok(HermEig {
        values,
        vectors: ComplexMatrix::from_columns(&vectors),
    })
}

/// Canonical orthonormal basis of the span of orthonormal `group`.
fn canonical_basis(group: &[ComplexVector]) -> Vec<ComplexVector> {
    let n = group[0].len();
    let mut proj = zeros(n, n);
    for v in group {
        proj += v * v.adjoint();
    }
    let mut chosen: Vec<(usize, ComplexVector)> = Vec::with_capacity(group.len());
    let mut used = vec![false; n];
    for _ in 0..group.len() {
        let mut best: Option<(usize, f64, ComplexVector)> = None;
        for (col, _) in used.iter().enumerate().filter(|(_, u)| !**u) {
            let mut w = proj.column(col).into_owned();
            for (_, q) in &chosen {
                let coef = q.dotc(&w);
                w -= q * coef;
            }
            let nw = w.norm();
            // Ties go to the lowest column index.
            let better = match &best {
                None => true,
                Some((_, bn, _)) => nw > bn * (1.0 + 1e-9) + 1e-12,
            };
            if better {
                best = Some((col, nw, w));
            }
        }
        let (col, nw, w) = best.expect("projector rank matches group size");
        used[col] = true;
        chosen.push((col, w / r(nw)));
    }
    let mut out: Vec<(usize, ComplexVector)> = chosen
        .into_iter()
        .map(|(_, v)| {
            let v = phase_normalize(v);
            (first_significant(&v), v)
        })
        .collect();
    out.sort_by_key(|(lead, _)| *lead);
    out.into_iter().map(|(_, v)| v).collect()
}

fn first_significant(v: &ComplexVector) -> usize {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    v.iter()
        .position(|z| z.norm() > 1e-6 * scale.max(f64::MIN_POSITIVE))
        .unwrap_or(0)
}

/// Rotates `v` so that its first significant component is real and positive.
pub fn phase_normalize(v: ComplexVector) -> ComplexVector {
    if v.is_empty() {
        return v;
    }
    let lead = v[first_significant(&v)];
    if lead.norm() == 0.0 {
        return v;
    }
    let phase = lead.conj() / r(lead.norm());
    v * phase
}

/// `λ_min(m) ≥ −eps·max(1, ‖m‖)`.
pub fn psd_check(m: &ComplexMatrix, tol: Tolerance) -> Result<bool> {
    if m.is_empty() {
        return Ok(true);
    }
    let eig = herm_eig(m, tol)?;
    Ok(eig.min() >= -tol.psd_slack(frob(m)))
}

/// Smallest eigenvalue of a Hermitian matrix (0 for empty input).
pub fn min_eigenvalue(m: &ComplexMatrix, tol: Tolerance) -> Result<f64> {
    Ok(herm_eig(m, tol)?.min())
}

/// Positive square root; negative eigenvalues within the PSD slack are clamped to zero.
pub fn psd_sqrt(m: &ComplexMatrix, tol: Tolerance) -> Result<ComplexMatrix> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    let eig = herm_eig(m, tol)?;
    let slack = tol.psd_slack(frob(m));
    if eig.min() < -slack {
        return Err(Error::NotPsd(eig.min()));
    }
    Ok(eig.reassemble(|x| if x > slack { x.sqrt() } else { 0.0 }))
}

/// Moore-Penrose style inverse square root on the support of a PSD matrix.
pub fn psd_pinv_sqrt(m: &ComplexMatrix, tol: Tolerance) -> Result<ComplexMatrix> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    let eig = herm_eig(m, tol)?;
    if eig.min() < -tol.psd_slack(frob(m)) {
        return Err(Error::NotPsd(eig.min()));
    }
    let cut = tol.rank_cut(eig.max().max(0.0), m.nrows(), m.ncols());
    Ok(eig.reassemble(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 }))
}

/// Numerical rank and an orthonormal basis of the right null space.
///
/// Rank counts singular values above `eps·σ_max·max(rows, cols)`. Wide matrices
/// are padded with zero rows so the backend returns a full right basis.
pub fn rank_nullspace<T>(m: &DMatrix<T>, tol: Tolerance) -> (usize, DMatrix<T>)
where
    T: ComplexField<RealField = f64>,
{
    rank_nullspace_scaled(m, 0.0, tol)
}

/// [`rank_nullspace`] with the cut taken relative to `max(σ_max, scale)`, for
/// systems whose natural magnitude is known and may exceed their actual norm.
pub fn rank_nullspace_scaled<T>(m: &DMatrix<T>, scale: f64, tol: Tolerance) -> (usize, DMatrix<T>)
where
    T: ComplexField<RealField = f64>,
{
    let (rows, cols) = m.shape();
    if cols == 0 {
        return (0, DMatrix::zeros(0, 0));
    }
    if rows == 0 {
        return (0, DMatrix::identity(cols, cols));
    }
    let padded = if rows < cols {
        let mut p = DMatrix::<T>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let sigma = &svd.singular_values;
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let cut = tol.rank_cut(smax.max(scale), rows, cols);
    let rank = if smax == 0.0 {
        0
    } else {
        sigma.iter().filter(|&&s| s > cut).count()
    };
    let null_rows: Vec<usize> = (0..sigma.len())
        .filter(|&j| smax == 0.0 || sigma[j] <= cut)
        .collect();
    let mut null = DMatrix::<T>::zeros(cols, null_rows.len());
    for (k, &j) in null_rows.iter().enumerate() {
        for i in 0..cols {
            null[(i, k)] = v_t[(j, i)].clone().conjugate();
        }
    }
    (rank, null)
}

pub fn rank<T>(m: &DMatrix<T>, tol: Tolerance) -> usize
where
    T: ComplexField<RealField = f64>,
{
    rank_nullspace(m, tol).0
}

/// Minimum-norm least-squares solution of `A x = b` and the residual `‖A x − b‖`.
pub fn least_squares<T>(a: &DMatrix<T>, b: &DVector<T>, tol: Tolerance) -> (DVector<T>, f64)
where
    T: ComplexField<RealField = f64>,
{
    let (rows, cols) = a.shape();
    assert_eq!(rows, b.len(), "least_squares: row count must match rhs");
    if cols == 0 || rows == 0 {
        return (DVector::zeros(cols), b.norm());
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return (DVector::zeros(cols), b.norm());
    }
    let cut = tol.rank_cut(smax, rows, cols);
    let x = svd.solve(b, cut).expect("both factors were computed");
    let residual = (a * &x - b).norm();
    (x, residual)
}

/// Orthonormal basis (as columns) of the span of `vectors`.
///
/// Modified Gram-Schmidt with one reorthogonalization pass. A vector is dropped
/// when its remaining component is below the rank cut relative to the largest
/// input norm. Returns a `dim×0` matrix for an empty or zero input.
pub fn orthonormalize(vectors: &[ComplexVector], dim: usize, tol: Tolerance) -> ComplexMatrix {
    orthonormalize_scaled(vectors, dim, 0.0, tol)
}

/// [`orthonormalize`] with the cut relative to `max(largest input norm, scale)`.
pub fn orthonormalize_scaled(
    vectors: &[ComplexVector],
    dim: usize,
    scale: f64,
    tol: Tolerance,
) -> ComplexMatrix {
    let max_norm = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return zeros(dim, 0);
    }
    let cut = tol.rank_cut(max_norm.max(scale), dim, vectors.len());
    let mut basis: Vec<ComplexVector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let coef = q.dotc(&w);
                w -= q * coef;
            }
        }
        let nw = w.norm();
        if nw > cut {
            basis.push(w / r(nw));
        }
        if basis.len() == dim {
            break;
        }
    }
    if basis.is_empty() {
        zeros(dim, 0)
    } else {
        ComplexMatrix::from_columns(&basis)
    }
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space(m: &ComplexMatrix, tol: Tolerance) -> ComplexMatrix {
    column_space_scaled(m, 0.0, tol)
}

/// [`column_space`] with the cut relative to `max(largest column norm, scale)`.
pub fn column_space_scaled(m: &ComplexMatrix, scale: f64, tol: Tolerance) -> ComplexMatrix {
    let cols: Vec<ComplexVector> = m.column_iter().map(|c| c.into_owned()).collect();
    orthonormalize_scaled(&cols, m.nrows(), scale, tol)
}

/// Row-major flattening.
pub fn vec_row_major(m: &ComplexMatrix) -> ComplexVector {
    let (rows, cols) = m.shape();
    ComplexVector::from_fn(rows * cols, |idx, _| m[(idx / cols, idx % cols)])
}

/// Inverse of [`vec_row_major`].
pub fn unvec_row_major(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Real coordinates of a Hermitian `k×k` matrix: diagonal entries, then the
/// real and imaginary parts of the strict upper triangle. Length `k²`.
pub fn hermitian_coords(m: &ComplexMatrix) -> DVector<f64> {
    let k = m.nrows();
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        out.push(m[(i, i)].re);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    DVector::from_vec(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn tolerance_rejects_nonpositive() {
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(-1.0).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
        assert_eq!(Tolerance::new(1e-6).unwrap().eps(), 1e-6);
    }

    #[test]
    fn eig_of_diagonal() {
        let e = herm_eig(&diag(&[1.0, 3.0]), tol()).unwrap();
        assert_eq!(e.values.len(), 2);
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!((e.vectors[(1, 0)] - ONE).norm() < 1e-12);
        assert!((e.vectors[(0, 1)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn eig_of_pauli_x() {
        let x = real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = herm_eig(&x, tol()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)].re - s).abs() < 1e-12);
        assert!((e.vectors[(1, 0)].re - s).abs() < 1e-12);
        assert!((e.vectors[(0, 1)].re - s).abs() < 1e-12);
        assert!((e.vectors[(1, 1)].re + s).abs() < 1e-12);
    }

    #[test]
    fn degenerate_eigenspace_is_canonical() {
        // Rotate the identity-on-a-plane by a unitary: the canonical basis must be e0, e1.
        let h = diag(&[1.0, 1.0, 0.0]);
        let e = herm_eig(&h, tol()).unwrap();
        assert!((e.vectors[(0, 0)] - ONE).norm() < 1e-12);
        assert!((e.vectors[(1, 1)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = real_matrix(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(herm_eig(&m, tol()), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn psd_checks() {
        assert!(psd_check(&identity(3), tol()).unwrap());
        assert!(!psd_check(&diag(&[1.0, -0.1]), tol()).unwrap());
        assert!(psd_check(&zeros(2, 2), tol()).unwrap());
    }

    #[test]
    fn sqrt_examples() {
        let s = psd_sqrt(&diag(&[0.25, 0.75]), tol()).unwrap();
        assert!((&s - diag(&[0.5, 0.75f64.sqrt()])).norm() < 1e-14);
        assert!((&s * &s - diag(&[0.25, 0.75])).norm() < 1e-14);
        assert!(psd_sqrt(&zeros(2, 2), tol()).unwrap().norm() < 1e-15);
        assert!((psd_sqrt(&identity(3), tol()).unwrap() - identity(3)).norm() < 1e-14);
        assert!(matches!(
            psd_sqrt(&diag(&[1.0, -0.5]), tol()),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn rank_examples() {
        let (rk, null) = rank_nullspace(&identity(3), tol());
        assert_eq!((rk, null.ncols()), (3, 0));
        let (rk, null) = rank_nullspace(&zeros(2, 2), tol());
        assert_eq!((rk, null.ncols()), (0, 2));
        let wide = real_matrix(&[&[1.0, 1.0, 0.0]]);
        let (rk, null) = rank_nullspace(&wide, tol());
        assert_eq!((rk, null.ncols()), (1, 2));
        assert!((&wide * &null).norm() < 1e-14);
    }

    #[test]
    fn least_squares_examples() {
        let v = ComplexVector::from_vec(vec![c(1.0, 2.0), c(-1.0, 0.5)]);
        let (x, res) = least_squares(&identity(2), &v, tol());
        assert!((x - &v).norm() < 1e-14 && res < 1e-14);
        // x = 1 and x = 2 at once: minimizer 1.5, residual 1/sqrt(2).
        let a = ComplexMatrix::from_element(2, 1, ONE);
        let b = ComplexVector::from_vec(vec![r(1.0), r(2.0)]);
        let (x, res) = least_squares(&a, &b, tol());
        assert!((x[0] - r(1.5)).norm() < 1e-14);
        assert!((res - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn orthonormalize_examples() {
        let e1 = ComplexVector::from_vec(vec![ONE, ZERO]);
        let b = orthonormalize(&[e1.clone(), e1.clone() * r(2.0)], 2, tol());
        assert_eq!(b.ncols(), 1);
        assert!((b.column(0) - e1).norm() < 1e-15);
        assert_eq!(orthonormalize(&[], 3, tol()).ncols(), 0);
    }

    #[test]
    fn hermitian_coordinates_have_k_squared_entries() {
        let h = real_matrix(&[&[1.0, 2.0], &[2.0, 3.0]]);
        assert_eq!(hermitian_coords(&h).len(), 4);
    }
}
