//! Completely positive maps `Φ: ⊕ₛ M_{d_s} → M_k` stored by their Choi blocks.
//!
//! For factor `s` the Choi block is `Σ_{pq} E_pq ⊗ Φ_s(E_pq)`, a `(d_s·k)×(d_s·k)`
//! matrix whose `(p, q)` sub-block of size `k×k` is `Φ_s(E_pq)`. Row index
//! `(p, x)` maps to `p·k + x`.
//!
//! Kraus operators are `d_s×k` matrices `K` with `Φ_s(a) = Σ K* a K`. The Choi
//! block of a Kraus family is `Σ w w*` with `w[(p, x)] = conj(K[p, x])`, so
//! extraction from eigenvectors conjugates back.

use crate::algebra::{AlgebraElement, AlgebraSpec, MatrixUnit};
use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, frob, herm_eig, identity, isometry_defect, op_norm, psd_check, r, rank, vstack,
    ComplexMatrix, ComplexVector, Tolerance, ZERO,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CpMap {
    spec: AlgebraSpec,
    out_dim: usize,
    choi: Vec<ComplexMatrix>,
}

/// Kraus operators per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub factors: Vec<Vec<ComplexMatrix>>,
}

impl KrausSet {
    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.len()).collect()
    }
}

/// Minimal Stinespring dilation `Φ(a) = V* π(a) V` with `π(a) = ⊕ₛ a_s ⊗ I_{r_s}`.
///
/// Factors with `r_s = 0` do not appear in the dilation space.
#[derive(Debug, Clone)]
pub struct Stinespring {
    pub spec: AlgebraSpec,
    pub ranks: Vec<usize>,
    pub v: ComplexMatrix,
}

impl Stinespring {
    pub fn dim(&self) -> usize {
        self.ranks
            .iter()
            .zip(self.spec.block_dims())
            .map(|(r, d)| r * d)
            .sum()
    }

    pub fn represent(&self, a: &AlgebraElement) -> ComplexMatrix {
        let parts: Vec<ComplexMatrix> = self
            .ranks
            .iter()
            .enumerate()
            .filter(|(_, &rk)| rk > 0)
            .map(|(s, &rk)| a.block(s).kronecker(&identity(rk)))
            .collect();
        block_diag(&parts)
    }

    /// Dimension of `span{π(a) V h}`; equals [`Stinespring::dim`] for a minimal dilation.
    pub fn cyclic_span_dim(&self, tol: Tolerance) -> usize {
        let k = self.v.ncols();
        let parts: Vec<ComplexMatrix> = self
            .spec
            .matrix_units()
            .map(|u| self.represent(&u.element(&self.spec)) * &self.v)
            .collect();
        let stacked = crate::linalg::hstack(&parts, self.dim());
        if k == 0 || stacked.ncols() == 0 {
            return 0;
        }
        rank(&stacked, tol)
    }
}

impl CpMap {
    pub fn new(spec: AlgebraSpec, out_dim: usize, choi: Vec<ComplexMatrix>) -> Result<Self> {
        if choi.len() != spec.num_factors() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} Choi blocks, got {}",
                spec.num_factors(),
                choi.len()
            )));
        }
        for (s, (m, &d)) in choi.iter().zip(spec.block_dims()).enumerate() {
            let n = d * out_dim;
            if m.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!(
                    "Choi block {s} should be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::ShapeMismatch(format!(
                    "Choi block {s} has non-finite entries"
                )));
            }
        }
        Ok(CpMap {
            spec,
            out_dim,
            choi,
        })
    }

    pub fn zero(spec: &AlgebraSpec, out_dim: usize) -> Self {
        let choi = spec
            .block_dims()
            .iter()
            .map(|&d| ComplexMatrix::zeros(d * out_dim, d * out_dim))
            .collect();
        CpMap {
            spec: spec.clone(),
            out_dim,
            choi,
        }
    }

    /// Identity map on `M_d`.
    pub fn identity(d: usize) -> Self {
        Self::from_fn(&AlgebraSpec::full(d), d, |a| a.block(0).clone())
    }

    /// Builds the map from its action on matrix units (the action must be linear).
    pub fn from_fn(
        spec: &AlgebraSpec,
        out_dim: usize,
        f: impl Fn(&AlgebraElement) -> ComplexMatrix,
    ) -> Self {
        let k = out_dim;
        let choi = spec
            .block_dims()
            .iter()
            .enumerate()
            .map(|(s, &d)| {
                let mut m = ComplexMatrix::zeros(d * k, d * k);
                for p in 0..d {
                    for q in 0..d {
                        let val = f(&AlgebraElement::matrix_unit(spec, s, p, q));
                        m.view_mut((p * k, q * k), (k, k)).copy_from(&val);
                    }
                }
                m
            })
            .collect();
        CpMap {
            spec: spec.clone(),
            out_dim,
            choi,
        }
    }

    /// Conjugation `a ↦ W* a_s W` on the single factor of `M_d`, `W` of shape `d×k`.
    pub fn conjugation(w: &ComplexMatrix) -> Self {
        let spec = AlgebraSpec::full(w.nrows());
        Self::from_kraus(
            &spec,
            w.ncols(),
            &KrausSet {
                factors: vec![vec![w.clone()]],
            },
        )
        .expect("shape is consistent by construction")
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn choi_blocks(&self) -> &[ComplexMatrix] {
        &self.choi
    }

    /// `Φ_s(E_pq)`.
    pub fn unit_value(&self, unit: MatrixUnit) -> ComplexMatrix {
        let k = self.out_dim;
        self.choi[unit.factor]
            .view((unit.row * k, unit.col * k), (k, k))
            .into_owned()
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<ComplexMatrix> {
        if a.spec() != &self.spec {
            return Err(Error::SpecMismatch {
                expected: self.spec.block_dims().to_vec(),
                found: a.spec().block_dims().to_vec(),
            });
        }
        let k = self.out_dim;
        let mut out = ComplexMatrix::zeros(k, k);
        for (s, &d) in self.spec.block_dims().iter().enumerate() {
            let blk = a.block(s);
            for p in 0..d {
                for q in 0..d {
                    let coef = blk[(p, q)];
                    if coef != ZERO {
                        out += self.choi[s].view((p * k, q * k), (k, k)) * coef;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Values on the matrix-unit basis, in [`AlgebraSpec::matrix_units`] order.
    pub fn basis_values(&self) -> Vec<ComplexMatrix> {
        self.spec
            .matrix_units()
            .map(|u| self.unit_value(u))
            .collect()
    }

    /// `Φ(1)`.
    pub fn unit_image(&self) -> ComplexMatrix {
        self.apply(&AlgebraElement::identity(&self.spec))
            .expect("spec matches by construction")
    }

    /// Largest Frobenius norm among the Choi blocks.
    pub fn scale(&self) -> f64 {
        self.choi.iter().map(frob).fold(0.0, f64::max)
    }

    /// Every Choi block has operator norm at most `eps·d_s·k`, which matches
    /// Kraus rank 0 in [`CpMap::kraus_minimal`] for CP maps.
    pub fn is_zero(&self, tol: Tolerance) -> bool {
        self.choi
            .iter()
            .all(|m| m.is_empty() || op_norm(m) <= tol.rank_cut(1.0, m.nrows(), m.ncols()))
    }

    /// Every Choi block passes [`psd_check`]; non-Hermitian blocks fail.
    pub fn validate_cp(&self, tol: Tolerance) -> bool {
        self.choi.iter().all(|m| psd_check(m, tol).unwrap_or(false))
    }

    /// Smallest Choi eigenvalue over all factors, or `None` if a block is not Hermitian.
    pub fn min_choi_eigenvalue(&self, tol: Tolerance) -> Option<f64> {
        let mut lo = f64::INFINITY;
        for m in &self.choi {
            lo = lo.min(herm_eig(m, tol).ok()?.min());
        }
        Some(if lo.is_finite() { lo } else { 0.0 })
    }

    /// `‖Φ(1) − I_k‖ ≤ eps·k`.
    pub fn is_unital(&self, tol: Tolerance) -> bool {
        self.unital_defect() <= tol.projection_slack(self.out_dim)
    }

    /// `‖Φ(1) − I_k‖` in operator norm.
    pub fn unital_defect(&self) -> f64 {
        op_norm(&(self.unit_image() - identity(self.out_dim)))
    }

    /// Kraus ranks `r_s = rank(choi_s)`.
    pub fn choi_ranks(&self, tol: Tolerance) -> Result<Vec<usize>> {
        Ok(self.kraus_minimal(tol)?.ranks())
    }

    /// Minimal Kraus family from the scaled Choi eigenvectors.
    pub fn kraus_minimal(&self, tol: Tolerance) -> Result<KrausSet> {
        let k = self.out_dim;
        let mut factors = Vec::with_capacity(self.choi.len());
        for (s, (m, &d)) in self.choi.iter().zip(self.spec.block_dims()).enumerate() {
            let eig = herm_eig(m, tol).map_err(|e| Error::NotCp(format!("factor {s}: {e}")))?;
            if eig.min() < -tol.psd_slack(frob(m)) {
                return Err(Error::NotCp(format!(
                    "factor {s}: Choi eigenvalue {:.3e}",
                    eig.min()
                )));
            }
            let lmax = eig.max();
            // Relative cut with an absolute floor so that maps of negligible norm have rank 0.
            let cut = tol.rank_cut(lmax.max(1.0), d * k, d * k);
            let mut ops = Vec::new();
            for (j, &lam) in eig.values.iter().enumerate() {
                if lmax <= 0.0 || lam <= cut {
                    break;
                }
                let w: ComplexVector = eig.vector(j) * r(lam.sqrt());
                ops.push(ComplexMatrix::from_fn(d, k, |p, x| w[p * k + x].conj()));
            }
            factors.push(ops);
        }
        Ok(KrausSet { factors })
    }

    pub fn from_kraus(spec: &AlgebraSpec, out_dim: usize, kraus: &KrausSet) -> Result<Self> {
        if kraus.factors.len() != spec.num_factors() {
            return Err(Error::ShapeMismatch(format!(
                "expected Kraus lists for {} factors, got {}",
                spec.num_factors(),
                kraus.factors.len()
            )));
        }
        let k = out_dim;
        let mut choi = Vec::with_capacity(kraus.factors.len());
        for (s, (ops, &d)) in kraus.factors.iter().zip(spec.block_dims()).enumerate() {
            let mut m = ComplexMatrix::zeros(d * k, d * k);
            for op in ops {
                if op.shape() != (d, k) {
                    return Err(Error::ShapeMismatch(format!(
                        "Kraus operator for factor {s} should be {d}x{k}, got {}x{}",
                        op.nrows(),
                        op.ncols()
                    )));
                }
                let w = ComplexVector::from_fn(d * k, |idx, _| op[(idx / k, idx % k)].conj());
                m += &w * w.adjoint();
            }
            choi.push(m);
        }
        CpMap::new(spec.clone(), out_dim, choi)
    }

    /// `a ↦ W* Φ(a) W` for an isometry `W: C^{k'} → C^k`.
    pub fn compress(&self, w: &ComplexMatrix, tol: Tolerance) -> Result<Self> {
        if w.nrows() != self.out_dim {
            return Err(Error::ShapeMismatch(format!(
                "isometry has {} rows, map has output dimension {}",
                w.nrows(),
                self.out_dim
            )));
        }
        let defect = isometry_defect(w);
        if defect > tol.projection_slack(w.ncols()) {
            return Err(Error::NotIsometry(defect));
        }
        Ok(self.conjugate_by(w))
    }

    /// `a ↦ T* Φ(a) T` for any `k×k'` matrix `T`, no isometry check.
    pub(crate) fn conjugate_by(&self, t: &ComplexMatrix) -> Self {
        let choi = self
            .choi
            .iter()
            .zip(self.spec.block_dims())
            .map(|(m, &d)| {
                let lift = identity(d).kronecker(t);
                lift.adjoint() * m * lift
            })
            .collect();
        CpMap {
            spec: self.spec.clone(),
            out_dim: t.ncols(),
            choi,
        }
    }

    pub fn stinespring_minimal(&self, tol: Tolerance) -> Result<Stinespring> {
        let kraus = self.kraus_minimal(tol)?;
        let mut parts = Vec::new();
        for (ops, &d) in kraus.factors.iter().zip(self.spec.block_dims()) {
            if !ops.is_empty() {
                parts.push(stack_kraus(ops, d, self.out_dim));
            }
        }
        Ok(Stinespring {
            spec: self.spec.clone(),
            ranks: kraus.ranks(),
            v: vstack(&parts, self.out_dim),
        })
    }

    /// Exactly one factor has Kraus rank 1 and all others rank 0.
    pub fn is_pure(&self, tol: Tolerance) -> Result<bool> {
        let ranks = self.choi_ranks(tol)?;
        Ok(ranks.iter().filter(|&&rk| rk == 1).count() == 1 && ranks.iter().all(|&rk| rk <= 1))
    }

    /// Multiplicativity on all pairs of matrix units.
    pub fn is_homomorphism(&self, tol: Tolerance) -> bool {
        let units: Vec<MatrixUnit> = self.spec.matrix_units().collect();
        let values = self.basis_values();
        let scale = values.iter().map(frob).fold(1.0, f64::max);
        let slack = tol.residual(scale * scale);
        let k = self.out_dim;
        for (ia, a) in units.iter().enumerate() {
            for (ib, b) in units.iter().enumerate() {
                let product = &values[ia] * &values[ib];
                let expected = if a.factor == b.factor && a.col == b.row {
                    self.unit_value(MatrixUnit {
                        factor: a.factor,
                        row: a.row,
                        col: b.col,
                    })
                } else {
                    ComplexMatrix::zeros(k, k)
                };
                if (product - expected).norm() > slack {
                    return false;
                }
            }
        }
        true
    }

    pub fn add(&self, other: &CpMap) -> Result<Self> {
        self.check_same(other)?;
        Ok(CpMap {
            spec: self.spec.clone(),
            out_dim: self.out_dim,
            choi: self
                .choi
                .iter()
                .zip(&other.choi)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `self − other`; the result need not be CP.
    pub fn sub(&self, other: &CpMap) -> Result<Self> {
        self.check_same(other)?;
        Ok(CpMap {
            spec: self.spec.clone(),
            out_dim: self.out_dim,
            choi: self
                .choi
                .iter()
                .zip(&other.choi)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CpMap {
            spec: self.spec.clone(),
            out_dim: self.out_dim,
            choi: self.choi.iter().map(|m| m * r(factor)).collect(),
        }
    }

    /// Largest Choi-block distance to `other`.
    pub fn distance(&self, other: &CpMap) -> f64 {
        self.choi
            .iter()
            .zip(&other.choi)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_same(&self, other: &CpMap) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch {
                expected: self.spec.block_dims().to_vec(),
                found: other.spec.block_dims().to_vec(),
            });
        }
        if self.out_dim != other.out_dim {
            return Err(Error::ShapeMismatch(format!(
                "output dimensions {} and {} differ",
                self.out_dim, other.out_dim
            )));
        }
        Ok(())
    }
}

/// Stinespring block for one factor: row `(p, j) ↦ p·r + j` holds row `p` of `K_j`.
pub(crate) fn stack_kraus(ops: &[ComplexMatrix], d: usize, k: usize) -> ComplexMatrix {
    let rk = ops.len();
    ComplexMatrix::from_fn(d * rk, k, |row, x| ops[row % rk][(row / rk, x)])
}
