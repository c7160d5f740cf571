//! Minimal bi-dilations `Φᵢ(a) = V* π(a) E({i}) V` in block coordinates.
//!
//! The dilation space is `⊕_{(i,s)} C^{d_s} ⊗ C^{r_{i,s}}` over the pairs with
//! positive Kraus rank, ordered outcome-major then factor. Inside a block, index
//! `(p, j)` maps to `p·r + j`, `π(a)` acts as `a_s ⊗ I_r` and `E({i})` is the
//! projector onto the outcome-`i` blocks. The rows of `V` for block `(i, s)` are
//! the minimal Kraus operators of `Φᵢ` on factor `s`.

use crate::algebra::{AlgebraElement, AlgebraSpec};
use crate::cpmap::{stack_kraus, CpMap};
use crate::error::{Error, Result};
use crate::instrument::Instrument;
use crate::linalg::{
    block_diag, column_space_scaled, hstack, identity, isometry_defect, matrix_unit, op_norm, rank,
    zeros, ComplexMatrix, Tolerance, I, ONE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DilationBlock {
    pub outcome: usize,
    pub factor: usize,
    /// `d_s`.
    pub dim: usize,
    /// Multiplicity `r_{i,s}`.
    pub rank: usize,
    /// First row of the block in the dilation space.
    pub offset: usize,
}

impl DilationBlock {
    pub fn size(&self) -> usize {
        self.dim * self.rank
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiDilation {
    spec: AlgebraSpec,
    out_dim: usize,
    outcomes: usize,
    blocks: Vec<DilationBlock>,
    v: ComplexMatrix,
}

/// Spanning set of `{π(A)E(O(X))}' = ⊕ I_{d_s} ⊗ M_{r_{i,s}}`.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    /// `N×N` matrices `I_d ⊗ E_jl` placed in one block.
    pub elements: Vec<ComplexMatrix>,
    /// `(block index, j, l)` for each element.
    pub labels: Vec<(usize, usize, usize)>,
}

impl CommutantBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }
}

/// Residuals reported by [`verify_bidilation`].
#[derive(Debug, Clone, PartialEq)]
pub struct DilationReport {
    pub dim: usize,
    pub reconstruction_residual: f64,
    pub commutation_residual: f64,
    pub spectral_residual: f64,
    pub minimality_dim: usize,
    pub isometry_defect: f64,
    pub instrument_unital: bool,
    pub passes: bool,
}

/// Compression of a bi-dilation to a reducing subspace with orthonormal basis `basis`.
#[derive(Debug, Clone)]
pub struct SubDilation {
    /// `N×m` orthonormal columns spanning the subspace.
    pub basis: ComplexMatrix,
    /// `B* V`, an `m×k` matrix.
    pub v: ComplexMatrix,
}

impl SubDilation {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn represent(&self, dil: &BiDilation, a: &AlgebraElement) -> ComplexMatrix {
        self.basis.adjoint() * dil.represent(a) * &self.basis
    }

    pub fn spectral(&self, dil: &BiDilation, subset: &[usize]) -> ComplexMatrix {
        self.basis.adjoint() * dil.spectral_projection(subset) * &self.basis
    }

    /// Largest `‖v* B*π(a)E({i})B v − Φᵢ(a)‖` over outcomes and matrix units.
    pub fn reconstruction_residual(&self, dil: &BiDilation, ins: &Instrument) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..ins.outcomes() {
            let e = self.spectral(dil, &[i]);
            for unit in ins.spec().matrix_units() {
                let a = unit.element(ins.spec());
                let got = self.v.adjoint() * self.represent(dil, &a) * &e * &self.v;
                worst = worst.max((got - ins.map(i).unit_value(unit)).norm());
            }
        }
        worst
    }
}

impl BiDilation {
    pub fn minimal(ins: &Instrument, tol: Tolerance) -> Result<Self> {
        let k = ins.out_dim();
        let mut blocks = Vec::new();
        let mut rows = Vec::new();
        let mut offset = 0;
        for i in 0..ins.outcomes() {
            let kraus = ins.map(i).kraus_minimal(tol)?;
            for (s, ops) in kraus.factors.iter().enumerate() {
                if ops.is_empty() {
                    continue;
                }
                let d = ins.spec().factor_dim(s);
                let block = DilationBlock {
                    outcome: i,
                    factor: s,
                    dim: d,
                    rank: ops.len(),
                    offset,
                };
                offset += block.size();
                blocks.push(block);
                rows.push(stack_kraus(ops, d, k));
            }
        }
        Ok(BiDilation {
            spec: ins.spec().clone(),
            out_dim: k,
            outcomes: ins.outcomes(),
            blocks,
            v: crate::linalg::vstack(&rows, k),
        })
    }

    /// Assembles a dilation from a block table `(outcome, factor, rank)` and `V`.
    pub fn from_parts(
        spec: AlgebraSpec,
        out_dim: usize,
        outcomes: usize,
        table: &[(usize, usize, usize)],
        v: ComplexMatrix,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(table.len());
        let mut offset = 0;
        for &(outcome, factor, rank) in table {
            if outcome >= outcomes || factor >= spec.num_factors() || rank == 0 {
                return Err(Error::ShapeMismatch(format!(
                    "invalid dilation block ({outcome}, {factor}, {rank})"
                )));
            }
            let dim = spec.factor_dim(factor);
            blocks.push(DilationBlock {
                outcome,
                factor,
                dim,
                rank,
                offset,
            });
            offset += dim * rank;
        }
        if v.shape() != (offset, out_dim) {
            return Err(Error::ShapeMismatch(format!(
                "V should be {offset}x{out_dim}, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        Ok(BiDilation {
            spec,
            out_dim,
            outcomes,
            blocks,
            v,
        })
    }

    pub fn spec(&self) -> &AlgebraSpec {
        &self.spec
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn blocks(&self) -> &[DilationBlock] {
        &self.blocks
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    /// Same block structure with a different `V`.
    pub fn with_v(&self, v: ComplexMatrix) -> Result<Self> {
        if v.shape() != self.v.shape() {
            return Err(Error::ShapeMismatch(format!(
                "V should be {}x{}, got {}x{}",
                self.v.nrows(),
                self.v.ncols(),
                v.nrows(),
                v.ncols()
            )));
        }
        Ok(BiDilation { v, ..self.clone() })
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size()).sum()
    }

    /// `(outcome, factor, rank)` per block.
    pub fn table(&self) -> Vec<(usize, usize, usize)> {
        self.blocks
            .iter()
            .map(|b| (b.outcome, b.factor, b.rank))
            .collect()
    }

    pub fn represent(&self, a: &AlgebraElement) -> ComplexMatrix {
        let parts: Vec<ComplexMatrix> = self
            .blocks
            .iter()
            .map(|b| a.block(b.factor).kronecker(&identity(b.rank)))
            .collect();
        block_diag(&parts)
    }

    pub fn spectral_projection(&self, subset: &[usize]) -> ComplexMatrix {
        let n = self.dim();
        let mut p = ComplexMatrix::zeros(n, n);
        for b in &self.blocks {
            if subset.contains(&b.outcome) {
                for x in b.offset..b.offset + b.size() {
                    p[(x, x)] = ONE;
                }
            }
        }
        p
    }

    /// Rows of `V` belonging to block `b`.
    pub fn block_v(&self, b: usize) -> ComplexMatrix {
        let blk = &self.blocks[b];
        self.v.rows(blk.offset, blk.size()).into_owned()
    }

    /// Kraus operator `j` of block `b` (`d×k`).
    pub fn kraus(&self, b: usize, j: usize) -> ComplexMatrix {
        let blk = &self.blocks[b];
        ComplexMatrix::from_fn(blk.dim, self.out_dim, |p, x| {
            self.v[(blk.offset + p * blk.rank + j, x)]
        })
    }

    /// Columns `w_j` with `w_j[(p, x)] = conj(K_j[p, x])`, so that the Choi
    /// block of `a ↦ Σ X_jl K_j* a K_l` is `W X W*`.
    fn choi_factor(&self, b: usize) -> ComplexMatrix {
        let blk = &self.blocks[b];
        let k = self.out_dim;
        ComplexMatrix::from_fn(blk.dim * k, blk.rank, |row, j| {
            self.v[(blk.offset + (row / k) * blk.rank + j, row % k)].conj()
        })
    }

    pub fn commutant_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.rank * b.rank).sum()
    }

    pub fn commutant_basis(&self) -> CommutantBasis {
        let mut elements = Vec::with_capacity(self.commutant_dim());
        let mut labels = Vec::with_capacity(self.commutant_dim());
        for (bi, b) in self.blocks.iter().enumerate() {
            for j in 0..b.rank {
                for l in 0..b.rank {
                    let mut coords: Vec<ComplexMatrix> =
                        self.blocks.iter().map(|c| zeros(c.rank, c.rank)).collect();
                    coords[bi] = matrix_unit(b.rank, j, l);
                    elements.push(self.embed_commutant(&coords));
                    labels.push((bi, j, l));
                }
            }
        }
        CommutantBasis { elements, labels }
    }

    /// Real basis of the Hermitian part of the commutant, as per-block coordinates:
    /// `E_jj`, `E_jl + E_lj` and `i(E_jl − E_lj)` for `j < l`.
    pub fn hermitian_commutant_coords(&self) -> Vec<Vec<ComplexMatrix>> {
        let mut out = Vec::with_capacity(self.commutant_dim());
        for (bi, b) in self.blocks.iter().enumerate() {
            let rk = b.rank;
            let mut push = |m: ComplexMatrix| {
                let mut coords: Vec<ComplexMatrix> =
                    self.blocks.iter().map(|c| zeros(c.rank, c.rank)).collect();
                coords[bi] = m;
                out.push(coords);
            };
            for j in 0..rk {
                push(matrix_unit(rk, j, j));
            }
            for j in 0..rk {
                for l in (j + 1)..rk {
                    push(matrix_unit(rk, j, l) + matrix_unit(rk, l, j));
                    push((matrix_unit(rk, j, l) - matrix_unit(rk, l, j)) * I);
                }
            }
        }
        out
    }

    /// `⊕_b I_{d_b} ⊗ X_b`.
    pub fn embed_commutant(&self, coords: &[ComplexMatrix]) -> ComplexMatrix {
        let parts: Vec<ComplexMatrix> = self
            .blocks
            .iter()
            .zip(coords)
            .map(|(b, x)| identity(b.dim).kronecker(x))
            .collect();
        block_diag(&parts)
    }

    /// Per-block `r×r` matrices read from the first `C^r` slice of each block.
    pub fn commutant_coords(&self, d: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.blocks
            .iter()
            .map(|b| d.view((b.offset, b.offset), (b.rank, b.rank)).into_owned())
            .collect()
    }

    /// Distance from `d` to the commutant: `‖d − embed(coords(d))‖`.
    pub fn commutant_defect(&self, d: &ComplexMatrix) -> f64 {
        if d.shape() != (self.dim(), self.dim()) {
            return f64::INFINITY;
        }
        (d - self.embed_commutant(&self.commutant_coords(d))).norm()
    }

    /// `V* D V` for `D = ⊕ I ⊗ X_b`.
    pub fn compress_commutant(&self, coords: &[ComplexMatrix]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for (b, x) in coords.iter().enumerate() {
            let vb = self.block_v(b);
            let blk = &self.blocks[b];
            out += vb.adjoint() * identity(blk.dim).kronecker(x) * vb;
        }
        out
    }

    /// The instrument `(i, a) ↦ V* D π(a) E({i}) V` for `D = ⊕ I ⊗ X_b`.
    pub fn instrument_from_commutant(&self, coords: &[ComplexMatrix]) -> Instrument {
        let k = self.out_dim;
        let mut choi: Vec<Vec<ComplexMatrix>> = (0..self.outcomes)
            .map(|_| {
                self.spec
                    .block_dims()
                    .iter()
                    .map(|&d| ComplexMatrix::zeros(d * k, d * k))
                    .collect()
            })
            .collect();
        for (bi, (b, x)) in self.blocks.iter().zip(coords).enumerate() {
            let w = self.choi_factor(bi);
            choi[b.outcome][b.factor] += &w * x * w.adjoint();
        }
        let maps = choi
            .into_iter()
            .map(|c| CpMap::new(self.spec.clone(), k, c).expect("block shapes"))
            .collect();
        Instrument::new(self.spec.clone(), k, maps).expect("maps share spec")
    }

    /// Outcomes carrying at least one block.
    pub fn present_outcomes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.blocks.iter().map(|b| b.outcome).collect();
        out.dedup();
        out
    }

    /// `P₁` range: `span{π(a) V h}`.
    pub fn cp_subminimal(&self, tol: Tolerance) -> SubDilation {
        let parts: Vec<ComplexMatrix> = self
            .spec
            .matrix_units()
            .map(|u| self.represent(&u.element(&self.spec)) * &self.v)
            .collect();
        self.sub_dilation(&parts, tol)
    }

    /// `P₂` range: `span{E({i}) V h}`.
    pub fn povm_subminimal(&self, tol: Tolerance) -> SubDilation {
        let parts: Vec<ComplexMatrix> = (0..self.outcomes)
            .map(|i| self.spectral_projection(&[i]) * &self.v)
            .collect();
        self.sub_dilation(&parts, tol)
    }

    fn sub_dilation(&self, parts: &[ComplexMatrix], tol: Tolerance) -> SubDilation {
        let n = self.dim();
        let basis = column_space_scaled(&hstack(parts, n), 1.0, tol);
        let v = basis.adjoint() * &self.v;
        SubDilation { basis, v }
    }

    /// `(bi-dilation, CP sub-minimal, POVM sub-minimal)` dimensions.
    pub fn dims(&self, tol: Tolerance) -> (usize, usize, usize) {
        (
            self.dim(),
            self.cp_subminimal(tol).dim(),
            self.povm_subminimal(tol).dim(),
        )
    }

    /// Decomposability read off the dilation: with `P₁` the projection onto
    /// `span{π(a)Vh}` and `Q = VV*`, every `P₁E({i})P₁ Q = Q P₁E({i})P₁ Q`.
    pub fn decomposable_criterion(&self, tol: Tolerance) -> bool {
        let sub = self.cp_subminimal(tol);
        let p1 = &sub.basis * sub.basis.adjoint();
        let q = &self.v * self.v.adjoint();
        let slack = tol.residual(op_norm(&q));
        (0..self.outcomes).all(|i| {
            let m = &p1 * self.spectral_projection(&[i]) * &p1;
            (&m * &q - &q * &m * &q).norm() <= slack
        })
    }
}

/// Minimal bi-dilation of `ins`.
pub fn minimal_bidilation(ins: &Instrument, tol: Tolerance) -> Result<BiDilation> {
    BiDilation::minimal(ins, tol)
}

/// Rechecks a dilation against an instrument.
pub fn verify_bidilation(ins: &Instrument, dil: &BiDilation, tol: Tolerance) -> DilationReport {
    let n = dil.dim();
    let spec = ins.spec();
    let mut reconstruction: f64 = 0.0;
    let mut commutation: f64 = 0.0;
    let shapes_ok =
        dil.spec() == spec && dil.out_dim() == ins.out_dim() && dil.outcomes() == ins.outcomes();
    let projections: Vec<ComplexMatrix> = (0..dil.outcomes())
        .map(|i| dil.spectral_projection(&[i]))
        .collect();
    let mut generators = Vec::new();
    if shapes_ok {
        for unit in spec.matrix_units() {
            let a = unit.element(spec);
            let pa = dil.represent(&a);
            for (i, e) in projections.iter().enumerate() {
                let pe = &pa * e;
                commutation = commutation.max((&pe - e * &pa).norm());
                let got = dil.v().adjoint() * &pe * dil.v();
                reconstruction = reconstruction.max((got - ins.map(i).unit_value(unit)).norm());
                generators.push(pe * dil.v());
            }
        }
    } else {
        reconstruction = f64::INFINITY;
    }
    let mut spectral: f64 = 0.0;
    for (i, e) in projections.iter().enumerate() {
        spectral = spectral.max((e * e - e).norm());
        for f in &projections[i + 1..] {
            spectral = spectral.max((e * f).norm());
        }
    }
    let total = projections
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, e| acc + e);
    spectral = spectral.max((total - identity(n)).norm());
    let minimality_dim = if n == 0 || generators.is_empty() {
        0
    } else {
        rank(&hstack(&generators, n), tol)
    };
    let isometry_defect = if dil.v().ncols() == 0 {
        0.0
    } else {
        isometry_defect(dil.v())
    };
    let instrument_unital = ins.is_unital(tol);
    let slack = tol.residual(ins.scale());
    let passes = shapes_ok
        && reconstruction <= slack
        && commutation <= slack
        && spectral <= tol.projection_slack(n)
        && minimality_dim == n
        && (!instrument_unital || isometry_defect <= tol.projection_slack(ins.out_dim()));
    DilationReport {
        dim: n,
        reconstruction_residual: reconstruction,
        commutation_residual: commutation,
        spectral_residual: spectral,
        minimality_dim,
        isometry_defect,
        instrument_unital,
        passes,
    }
}
