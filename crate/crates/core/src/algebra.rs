//! Finite-dimensional C*-algebras `⊕ₛ M_{d_s}` in block-diagonal form.
//!
//! The full matrix algebra `M_d` is the spec `[d]`; the commutative algebra
//! `C(X)` on `n` points is `[1; n]`.

use crate::error::{Error, Result};
use crate::linalg::{block_diag, identity, matrix_unit, r, ComplexMatrix, Tolerance};
use crate::random::{gue, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlgebraSpec {
    blocks: Vec<usize>,
}

impl AlgebraSpec {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSpec("at least one factor is required".into()));
        }
        if let Some(pos) = blocks.iter().position(|&d| d == 0) {
            return Err(Error::InvalidSpec(format!("factor {pos} has dimension 0")));
        }
        Ok(AlgebraSpec { blocks })
    }

    /// `M_d`.
    pub fn full(d: usize) -> Self {
        AlgebraSpec::new(vec![d]).expect("d must be positive")
    }

    /// `C(X)` for `|X| = n`.
    pub fn commutative(n: usize) -> Self {
        AlgebraSpec::new(vec![1; n]).expect("n must be positive")
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_factors(&self) -> usize {
        self.blocks.len()
    }

    pub fn factor_dim(&self, s: usize) -> usize {
        self.blocks[s]
    }

    /// `Σ d_s`, the size of the block-diagonal embedding.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// `Σ d_s²`, the vector-space dimension.
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|d| d * d).sum()
    }

    /// Offset of factor `s` inside the embedding.
    pub fn offset(&self, s: usize) -> usize {
        self.blocks[..s].iter().sum()
    }

    /// Labels `(s, p, q)` of the matrix-unit basis, factor-major then row-major.
    pub fn matrix_units(&self) -> impl Iterator<Item = MatrixUnit> + '_ {
        self.blocks.iter().enumerate().flat_map(|(s, &d)| {
            (0..d).flat_map(move |p| {
                (0..d).map(move |q| MatrixUnit {
                    factor: s,
                    row: p,
                    col: q,
                })
            })
        })
    }
}

/// Label of the matrix unit `E_pq` in factor `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatrixUnit {
    pub factor: usize,
    pub row: usize,
    pub col: usize,
}

impl MatrixUnit {
    pub fn element(&self, spec: &AlgebraSpec) -> AlgebraElement {
        AlgebraElement::matrix_unit(spec, self.factor, self.row, self.col)
    }
}

/// Element of `⊕ₛ M_{d_s}`, one square block per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    spec: AlgebraSpec,
    blocks: Vec<ComplexMatrix>,
}

impl AlgebraElement {
    pub fn new(spec: AlgebraSpec, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() != spec.num_factors() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                spec.num_factors(),
                blocks.len()
            )));
        }
        for (s, (b, &d)) in blocks.iter().zip(spec.block_dims()).enumerate() {
            if b.shape() != (d, d) {
                return Err(Error::ShapeMismatch(format!(
                    "block {s} should be {d}x{d}, got {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(AlgebraElement { spec, blocks })
    }

    pub fn identity(spec: &AlgebraSpec) -> Self {
        AlgebraElement {
            spec: spec.clone(),
            blocks: spec.block_dims().iter().map(|&d| identity(d)).collect(),
        }
    }

    pub fn zero(spec: &AlgebraSpec) -> Self {
        AlgebraElement {
            spec: spec.clone(),
            blocks: spec
                .block_dims()
                .iter()
                .map(|&d| ComplexMatrix::zeros(d, d))
                .collect(),
        }
    }

    pub fn matrix_unit(spec: &AlgebraSpec, s: usize, p: usize, q: usize) -> Self {
        let mut a = Self::zero(spec);
        a.blocks[s] = matrix_unit(spec.factor_dim(s), p, q);
        a
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, s: usize) -> &ComplexMatrix {
        &self.blocks[s]
    }

    /// Block-diagonal `D×D` matrix.
    pub fn embed_full(&self) -> ComplexMatrix {
        block_diag(&self.blocks)
    }

    pub fn adjoint(&self) -> Self {
        AlgebraElement {
            spec: self.spec.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn mul(&self, other: &AlgebraElement) -> Result<Self> {
        self.check_same(other)?;
        Ok(AlgebraElement {
            spec: self.spec.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<Self> {
        self.check_same(other)?;
        Ok(AlgebraElement {
            spec: self.spec.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        AlgebraElement {
            spec: self.spec.clone(),
            blocks: self.blocks.iter().map(|b| b * r(factor)).collect(),
        }
    }

    fn check_same(&self, other: &AlgebraElement) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch {
                expected: self.spec.blocks.clone(),
                found: other.spec.blocks.clone(),
            });
        }
        Ok(())
    }

    pub fn is_hermitian(&self, tol: Tolerance) -> bool {
        self.blocks
            .iter()
            .all(|b| crate::linalg::is_hermitian(b, tol))
    }
}

/// The `s`-th irreducible representation, i.e. the `s`-th block of `a`.
pub fn irrep_apply(spec: &AlgebraSpec, s: usize, a: &AlgebraElement) -> Result<ComplexMatrix> {
    if a.spec() != spec {
        return Err(Error::SpecMismatch {
            expected: spec.block_dims().to_vec(),
            found: a.spec().block_dims().to_vec(),
        });
    }
    if s >= spec.num_factors() {
        return Err(Error::InvalidSpec(format!(
            "factor index {s} out of range for {} factors",
            spec.num_factors()
        )));
    }
    Ok(a.block(s).clone())
}

/// All matrix units, in the order of [`AlgebraSpec::matrix_units`].
pub fn matrix_unit_basis(spec: &AlgebraSpec) -> Vec<AlgebraElement> {
    spec.matrix_units().map(|u| u.element(spec)).collect()
}

/// Seeded Hermitian element with operator norm at most 1.
pub fn random_hermitian(spec: &AlgebraSpec, seed: u64) -> AlgebraElement {
    let mut rng = rng_from_seed(seed);
    let blocks: Vec<ComplexMatrix> = spec
        .block_dims()
        .iter()
        .map(|&d| gue(&mut rng, d))
        .collect();
    let norm = blocks
        .iter()
        .map(crate::linalg::op_norm)
        .fold(0.0, f64::max);
    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    AlgebraElement {
        spec: spec.clone(),
        blocks: blocks.into_iter().map(|b| b * r(scale)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_defect, psd_check};

    #[test]
    fn spec_validation() {
        assert!(AlgebraSpec::new(vec![]).is_err());
        assert!(AlgebraSpec::new(vec![2, 0]).is_err());
        let s = AlgebraSpec::new(vec![2, 3]).unwrap();
        assert_eq!((s.total_dim(), s.dimension(), s.offset(1)), (5, 13, 2));
    }

    #[test]
    fn identities() {
        let a = AlgebraElement::identity(&AlgebraSpec::full(2));
        assert_eq!(a.embed_full(), identity(2));
        let b = AlgebraElement::identity(&AlgebraSpec::commutative(2));
        assert_eq!(b.embed_full(), identity(2));
        let c = AlgebraElement::identity(&AlgebraSpec::new(vec![2, 3]).unwrap());
        assert_eq!(c.block(0), &identity(2));
        assert_eq!(c.block(1), &identity(3));
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(matrix_unit_basis(&AlgebraSpec::full(2)).len(), 4);
        assert_eq!(matrix_unit_basis(&AlgebraSpec::full(1)).len(), 1);
        assert_eq!(matrix_unit_basis(&AlgebraSpec::commutative(2)).len(), 2);
        assert_eq!(
            matrix_unit_basis(&AlgebraSpec::new(vec![2, 3]).unwrap()).len(),
            13
        );
    }

    #[test]
    fn embedding_is_multiplicative_on_units() {
        let spec = AlgebraSpec::new(vec![2, 1]).unwrap();
        let basis = matrix_unit_basis(&spec);
        for a in &basis {
            for b in &basis {
                let ab = a.mul(b).unwrap().embed_full();
                assert_eq!(ab, a.embed_full() * b.embed_full());
            }
            assert_eq!(a.adjoint().embed_full(), a.embed_full().adjoint());
        }
    }

    #[test]
    fn irreps_pick_blocks() {
        let spec = AlgebraSpec::commutative(4);
        let blocks = (0..4)
            .map(|i| ComplexMatrix::from_element(1, 1, r(i as f64 + 1.0)))
            .collect();
        let a = AlgebraElement::new(spec.clone(), blocks).unwrap();
        assert_eq!(irrep_apply(&spec, 1, &a).unwrap()[(0, 0)], r(2.0));
        let spec = AlgebraSpec::new(vec![2, 3]).unwrap();
        let id = AlgebraElement::identity(&spec);
        assert_eq!(irrep_apply(&spec, 1, &id).unwrap(), identity(3));
        assert!(irrep_apply(&spec, 2, &id).is_err());
    }

    #[test]
    fn random_hermitian_is_seeded_and_bounded() {
        let spec = AlgebraSpec::new(vec![2, 3]).unwrap();
        let a = random_hermitian(&spec, 7);
        assert_eq!(a, random_hermitian(&spec, 7));
        let tol = Tolerance::default();
        for (s, b) in a.blocks().iter().enumerate() {
            assert!(hermitian_defect(b) < 1e-14);
            let id = identity(spec.factor_dim(s));
            assert!(psd_check(&(&id + b), tol).unwrap());
            assert!(psd_check(&(&id - b), tol).unwrap());
        }
    }
}
