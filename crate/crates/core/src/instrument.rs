//! Instruments on a finite outcome set: one CP map per outcome.

use crate::algebra::{AlgebraElement, AlgebraSpec, MatrixUnit};
use crate::cpmap::CpMap;
use crate::error::{Error, Result};
use crate::linalg::{
    commutator, frob, identity, is_projection, op_norm, psd_check, psd_sqrt, unitary_defect,
    ComplexMatrix, Tolerance,
};

/// A finite family of effects.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    out_dim: usize,
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(out_dim: usize, effects: Vec<ComplexMatrix>) -> Result<Self> {
        for (i, e) in effects.iter().enumerate() {
            if e.shape() != (out_dim, out_dim) {
                return Err(Error::ShapeMismatch(format!(
                    "effect {i} should be {out_dim}x{out_dim}, got {}x{}",
                    e.nrows(),
                    e.ncols()
                )));
            }
        }
        Ok(Povm { out_dim, effects })
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &ComplexMatrix {
        &self.effects[i]
    }

    pub fn total(&self) -> ComplexMatrix {
        self.effects.iter().fold(
            ComplexMatrix::zeros(self.out_dim, self.out_dim),
            |acc, e| acc + e,
        )
    }

    /// `‖Σ μ(i) − I‖` in operator norm.
    pub fn normalization_defect(&self) -> f64 {
        op_norm(&(self.total() - identity(self.out_dim)))
    }

    pub fn is_normalized(&self, tol: Tolerance) -> bool {
        self.normalization_defect() <= tol.projection_slack(self.out_dim)
    }

    /// Every effect is PSD.
    pub fn is_positive(&self, tol: Tolerance) -> bool {
        self.effects
            .iter()
            .all(|e| psd_check(e, tol).unwrap_or(false))
    }

    /// Every effect is a projection.
    pub fn is_projective(&self, tol: Tolerance) -> bool {
        self.effects.iter().all(|e| is_projection(e, tol))
    }
}

/// Outcome of [`Instrument::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `(outcome, smallest Choi eigenvalue)` for each outcome failing the CP test;
    /// the eigenvalue is `NaN` when a Choi block is not Hermitian.
    pub cp_violations: Vec<(usize, f64)>,
    pub normalization_defect: f64,
    pub require_unital: bool,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    spec: AlgebraSpec,
    out_dim: usize,
    maps: Vec<CpMap>,
}

/// Where the product identity `Φᵢ(a) = φ(a)μ(i)` fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductViolation {
    pub outcome: usize,
    pub unit: MatrixUnit,
    pub defect: f64,
}

impl Instrument {
    pub fn new(spec: AlgebraSpec, out_dim: usize, maps: Vec<CpMap>) -> Result<Self> {
        for (i, m) in maps.iter().enumerate() {
            if m.spec() != &spec {
                return Err(Error::SpecMismatch {
                    expected: spec.block_dims().to_vec(),
                    found: m.spec().block_dims().to_vec(),
                });
            }
            if m.out_dim() != out_dim {
                return Err(Error::ShapeMismatch(format!(
                    "outcome {i} maps into dimension {}, expected {out_dim}",
                    m.out_dim()
                )));
            }
        }
        Ok(Instrument {
            spec,
            out_dim,
            maps,
        })
    }

    pub fn zero(spec: &AlgebraSpec, out_dim: usize, outcomes: usize) -> Self {
        Instrument {
            spec: spec.clone(),
            out_dim,
            maps: vec![CpMap::zero(spec, out_dim); outcomes],
        }
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn outcomes(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[CpMap] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &CpMap {
        &self.maps[i]
    }

    pub fn validate(&self, tol: Tolerance, require_unital: bool) -> ValidationReport {
        let mut cp_violations = Vec::new();
        for (i, m) in self.maps.iter().enumerate() {
            if !m.validate_cp(tol) {
                cp_violations.push((i, m.min_choi_eigenvalue(tol).unwrap_or(f64::NAN)));
            }
        }
        let normalization_defect = self.normalization_defect();
        let unital_ok =
            !require_unital || normalization_defect <= tol.projection_slack(self.out_dim);
        ValidationReport {
            passes: cp_violations.is_empty() && unital_ok,
            cp_violations,
            normalization_defect,
            require_unital,
        }
    }

    /// `‖Σᵢ Φᵢ(1) − I‖`.
    pub fn normalization_defect(&self) -> f64 {
        self.povm_marginal().normalization_defect()
    }

    pub fn is_unital(&self, tol: Tolerance) -> bool {
        self.normalization_defect() <= tol.projection_slack(self.out_dim)
    }

    pub(crate) fn require_unital(&self, tol: Tolerance) -> Result<()> {
        let defect = self.normalization_defect();
        if defect > tol.projection_slack(self.out_dim) {
            return Err(Error::NotUnital(defect));
        }
        Ok(())
    }

    /// `Σ_{i∈A} Φᵢ(a)`.
    pub fn value(&self, subset: &[usize], a: &AlgebraElement) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for &i in subset {
            let m = self.maps.get(i).ok_or_else(|| {
                Error::ShapeMismatch(format!(
                    "outcome {i} out of range for {} outcomes",
                    self.outcomes()
                ))
            })?;
            out += m.apply(a)?;
        }
        Ok(out)
    }

    pub fn povm_marginal(&self) -> Povm {
        Povm {
            out_dim: self.out_dim,
            effects: self.maps.iter().map(|m| m.unit_image()).collect(),
        }
    }

    pub fn cp_marginal(&self) -> CpMap {
        self.maps
            .iter()
            .fold(CpMap::zero(&self.spec, self.out_dim), |acc, m| {
                acc.add(m).expect("maps share spec and output dimension")
            })
    }

    pub fn is_zero(&self, tol: Tolerance) -> bool {
        self.maps.iter().all(|m| m.is_zero(tol))
    }

    /// `(I = 0, μ = 0, φ = 0)`.
    pub fn zero_equivalence(&self, tol: Tolerance) -> (bool, bool, bool) {
        let slack = tol.projection_slack(self.out_dim);
        let mu_zero = self
            .povm_marginal()
            .effects
            .iter()
            .all(|e| e.norm() <= slack);
        (self.is_zero(tol), mu_zero, self.cp_marginal().is_zero(tol))
    }

    /// Single-outcome instrument with value `phi`.
    pub fn from_cpmap(phi: CpMap) -> Self {
        Instrument {
            spec: phi.spec().clone(),
            out_dim: phi.out_dim(),
            maps: vec![phi],
        }
    }

    /// Instrument over `C` with `Φᵢ(λ) = λ·μ(i)`.
    pub fn from_povm_trivial(povm: &Povm) -> Self {
        let spec = AlgebraSpec::full(1);
        let maps = povm
            .effects
            .iter()
            .map(|e| CpMap::new(spec.clone(), povm.out_dim, vec![e.clone()]).expect("1x1 factor"))
            .collect();
        Instrument {
            spec,
            out_dim: povm.out_dim,
            maps,
        }
    }

    /// Instrument over `C(X)` with `Φᵢ(a) = aᵢ·μ(i)`.
    pub fn from_povm_naimark(povm: &Povm, tol: Tolerance) -> Result<Self> {
        let defect = povm.normalization_defect();
        if defect > tol.projection_slack(povm.out_dim) {
            return Err(Error::NotNormalized(defect));
        }
        let n = povm.len();
        if n == 0 {
            return Err(Error::InvalidSpec("POVM has no outcomes".into()));
        }
        let spec = AlgebraSpec::commutative(n);
        let k = povm.out_dim;
        let maps = (0..n)
            .map(|i| {
                let choi = (0..n)
                    .map(|s| {
                        if s == i {
                            povm.effects[i].clone()
                        } else {
                            ComplexMatrix::zeros(k, k)
                        }
                    })
                    .collect();
                CpMap::new(spec.clone(), k, choi).expect("shapes fixed above")
            })
            .collect();
        Ok(Instrument {
            spec,
            out_dim: k,
            maps,
        })
    }

    /// Lüders instrument `a ↦ √μ(i) a √μ(i)` on `M_k`.
    pub fn luders(povm: &Povm, tol: Tolerance) -> Result<Self> {
        let k = povm.out_dim;
        let maps = povm
            .effects
            .iter()
            .map(|e| Ok(CpMap::conjugation(&psd_sqrt(e, tol)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Instrument {
            spec: AlgebraSpec::full(k),
            out_dim: k,
            maps,
        })
    }

    /// Block-diagonal sum of instruments with a common spec and outcome count.
    pub fn direct_sum(parts: &[Instrument]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Mismatch("direct sum of an empty list".into()))?;
        for p in parts {
            if p.spec != first.spec {
                return Err(Error::Mismatch(format!(
                    "algebra specs {:?} and {:?} differ",
                    first.spec.block_dims(),
                    p.spec.block_dims()
                )));
            }
            if p.outcomes() != first.outcomes() {
                return Err(Error::Mismatch(format!(
                    "outcome counts {} and {} differ",
                    first.outcomes(),
                    p.outcomes()
                )));
            }
        }
        let k: usize = parts.iter().map(|p| p.out_dim).sum();
        let maps = (0..first.outcomes())
            .map(|i| {
                CpMap::from_fn(&first.spec, k, |a| {
                    let blocks: Vec<ComplexMatrix> = parts
                        .iter()
                        .map(|p| p.maps[i].apply(a).expect("same spec"))
                        .collect();
                    crate::linalg::block_diag(&blocks)
                })
            })
            .collect();
        Ok(Instrument {
            spec: first.spec.clone(),
            out_dim: k,
            maps,
        })
    }

    /// `a ↦ W* Φᵢ(a) W` for every outcome.
    pub fn compress(&self, w: &ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let maps = self
            .maps
            .iter()
            .map(|m| m.compress(w, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Instrument {
            spec: self.spec.clone(),
            out_dim: w.ncols(),
            maps,
        })
    }

    /// `a ↦ U* Φᵢ(a) U`.
    pub fn unitary_conjugate(&self, u: &ComplexMatrix, tol: Tolerance) -> Result<Self> {
        if u.shape() != (self.out_dim, self.out_dim) {
            return Err(Error::ShapeMismatch(format!(
                "unitary should be {0}x{0}, got {1}x{2}",
                self.out_dim,
                u.nrows(),
                u.ncols()
            )));
        }
        let defect = unitary_defect(u);
        if defect > tol.projection_slack(self.out_dim) {
            return Err(Error::NotUnitary(defect));
        }
        Ok(self.conjugate_by(u))
    }

    pub(crate) fn conjugate_by(&self, t: &ComplexMatrix) -> Self {
        Instrument {
            spec: self.spec.clone(),
            out_dim: t.ncols(),
            maps: self.maps.iter().map(|m| m.conjugate_by(t)).collect(),
        }
    }

    /// `Σⱼ Tⱼ* Iⱼ(·) Tⱼ` with `Σⱼ Tⱼ*Tⱼ = I`.
    pub fn cstar_convex_combine(
        parts: &[Instrument],
        coefficients: &[ComplexMatrix],
        tol: Tolerance,
    ) -> Result<Self> {
        if parts.is_empty() || parts.len() != coefficients.len() {
            return Err(Error::Mismatch(format!(
                "{} instruments and {} coefficients",
                parts.len(),
                coefficients.len()
            )));
        }
        let k = coefficients[0].ncols();
        let mut gram = ComplexMatrix::zeros(k, k);
        for (j, (p, t)) in parts.iter().zip(coefficients).enumerate() {
            if t.shape() != (p.out_dim, k) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient {j} should be {}x{k}, got {}x{}",
                    p.out_dim,
                    t.nrows(),
                    t.ncols()
                )));
            }
            if p.spec != parts[0].spec || p.outcomes() != parts[0].outcomes() {
                return Err(Error::Mismatch(format!(
                    "instrument {j} differs in algebra or outcome count"
                )));
            }
            gram += t.adjoint() * t;
        }
        let defect = (gram - identity(k)).norm();
        if defect > tol.projection_slack(k) {
            return Err(Error::CoefficientsNotNormalized(defect));
        }
        let mut out = Instrument::zero(&parts[0].spec, k, parts[0].outcomes());
        for (p, t) in parts.iter().zip(coefficients) {
            let c = p.conjugate_by(t);
            out = out.add(&c)?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Instrument) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Instrument {
            spec: self.spec.clone(),
            out_dim: self.out_dim,
            maps: self
                .maps
                .iter()
                .zip(&other.maps)
                .map(|(a, b)| a.add(b))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn sub(&self, other: &Instrument) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Instrument {
            spec: self.spec.clone(),
            out_dim: self.out_dim,
            maps: self
                .maps
                .iter()
                .zip(&other.maps)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Instrument {
            spec: self.spec.clone(),
            out_dim: self.out_dim,
            maps: self.maps.iter().map(|m| m.scaled(factor)).collect(),
        }
    }

    /// Largest Choi-block distance over all outcomes.
    pub fn distance(&self, other: &Instrument) -> f64 {
        self.maps
            .iter()
            .zip(&other.maps)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }

    /// Largest Choi-block Frobenius norm over all outcomes.
    pub fn scale(&self) -> f64 {
        self.maps.iter().map(|m| m.scale()).fold(0.0, f64::max)
    }

    pub(crate) fn check_compatible(&self, other: &Instrument) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Mismatch(format!(
                "algebra specs {:?} and {:?} differ",
                self.spec.block_dims(),
                other.spec.block_dims()
            )));
        }
        if self.out_dim != other.out_dim || self.outcomes() != other.outcomes() {
            return Err(Error::Mismatch(format!(
                "shapes (k={}, n={}) and (k={}, n={}) differ",
                self.out_dim,
                self.outcomes(),
                other.out_dim,
                other.outcomes()
            )));
        }
        Ok(())
    }

    /// Spectral test through the marginals: `μ` projection-valued with orthogonal
    /// effects, `φ` multiplicative, and `Φᵢ(a) = φ(a)μ(i)` on the basis.
    pub fn is_spectral(&self, tol: Tolerance) -> bool {
        if !self.is_unital(tol) {
            return false;
        }
        let mu = self.povm_marginal();
        if !mu.is_projective(tol) {
            return false;
        }
        let slack = tol.projection_slack(self.out_dim);
        for i in 0..mu.len() {
            for j in (i + 1)..mu.len() {
                if (mu.effect(i) * mu.effect(j)).norm() > slack {
                    return false;
                }
            }
        }
        self.cp_marginal().is_homomorphism(tol) && self.product_violation(tol).is_none()
    }

    /// Spectral test from the definition: every `I(A)` with `|A| ≤ 2` is
    /// multiplicative and the instrument is unital. On a finite outcome set this
    /// forces every `I(A)` to be a homomorphism.
    pub fn is_spectral_direct(&self, tol: Tolerance) -> bool {
        if !self.is_unital(tol) {
            return false;
        }
        let n = self.outcomes();
        for i in 0..n {
            if !self.maps[i].is_homomorphism(tol) {
                return false;
            }
            for j in (i + 1)..n {
                let pair = self.maps[i].add(&self.maps[j]).expect("compatible maps");
                if !pair.is_homomorphism(tol) {
                    return false;
                }
            }
        }
        true
    }

    /// First basis element and outcome where `Φᵢ(a) ≠ φ(a)μ(i)`, with the worst defect.
    pub fn product_violation(&self, tol: Tolerance) -> Option<ProductViolation> {
        let phi = self.cp_marginal();
        let mu = self.povm_marginal();
        let slack = tol.residual(self.scale());
        let mut worst: Option<ProductViolation> = None;
        for unit in self.spec.matrix_units() {
            let phi_a = phi.unit_value(unit);
            for (i, m) in self.maps.iter().enumerate() {
                let defect = (m.unit_value(unit) - &phi_a * mu.effect(i)).norm();
                if defect > slack && worst.is_none_or(|w| defect > w.defect) {
                    worst = Some(ProductViolation {
                        outcome: i,
                        unit,
                        defect,
                    });
                }
            }
        }
        worst
    }

    /// `Φᵢ(a) = φ(a)μ(i)` for every outcome and basis element.
    pub fn is_decomposable(&self, tol: Tolerance) -> bool {
        self.product_violation(tol).is_none()
    }

    /// `Φᵢ = 0` for every outcome outside `subset`.
    pub fn is_concentrated(&self, subset: &[usize], tol: Tolerance) -> bool {
        self.maps
            .iter()
            .enumerate()
            .all(|(i, m)| subset.contains(&i) || m.is_zero(tol))
    }

    /// Outcomes `i` with `Φᵢ ≠ 0`; on a finite set these singletons are the atoms.
    pub fn atoms(&self, tol: Tolerance) -> Vec<usize> {
        (0..self.outcomes())
            .filter(|&i| !self.maps[i].is_zero(tol))
            .collect()
    }

    /// All values `Φᵢ(E_pq)` commute pairwise.
    pub fn has_commutative_range(&self, tol: Tolerance) -> bool {
        let values: Vec<ComplexMatrix> = self.maps.iter().flat_map(|m| m.basis_values()).collect();
        let scale = values.iter().map(frob).fold(1.0, f64::max);
        let slack = tol.residual(scale * scale);
        for (x, a) in values.iter().enumerate() {
            for b in &values[x + 1..] {
                if commutator(a, b).norm() > slack {
                    return false;
                }
            }
        }
        true
    }
}
