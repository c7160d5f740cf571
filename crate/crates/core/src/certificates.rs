//! Self-contained witnesses for decisions and an independent checker.
//!
//! [`check_certificate`] re-verifies a payload against an instrument using
//! `apply`, `validate` and linear algebra. It never calls the deciding
//! procedure that produced the certificate, except for
//! [`Certificate::NonNestInvariance`], whose only evidence is the failed test.

use std::fmt;

use nalgebra::DMatrix;

use crate::algebra::{AlgebraElement, MatrixUnit};
use crate::convexity::{
    is_cstar_extreme_instrument, is_cstar_extreme_ucp, is_extreme, rn_derivative,
    CstarDecomposition, Refutation,
};
use crate::dilation::{verify_bidilation, BiDilation};
use crate::error::{Error, Result};
use crate::instrument::Instrument;
use crate::linalg::{
    block_diag, column_space_scaled, herm_eig, hermitian_coords, isometry_defect, op_norm, r,
    rank_nullspace_scaled, unitary_defect, zeros, ComplexMatrix, ComplexVector, Tolerance, C64,
};

#[derive(Debug, Clone)]
pub enum Certificate {
    /// A bi-dilation of the instrument.
    Dilation(BiDilation),
    /// The compression `D ↦ V*DV` has rank equal to the commutant dimension.
    Extreme {
        dilation: BiDilation,
        rank: usize,
        commutant_dim: usize,
    },
    /// `I = ½(I₊ + I₋)` with `I₊ ≠ I₋`.
    NonExtreme {
        plus: Instrument,
        minus: Instrument,
    },
    CstarExtreme(CstarDecomposition),
    /// `μ(outcome)` has `eigenvalue ∈ (0, 1)` with unit `eigenvector`.
    NotCstarExtreme {
        outcome: usize,
        eigenvalue: f64,
        eigenvector: ComplexVector,
    },
    /// All effects are projections but `Φ_outcome` restricted to the range of
    /// `μ(outcome)` fails the nest test.
    NonNestInvariance {
        outcome: usize,
    },
    /// `dominated(i, a) = V* D π(a) E({i}) V` with `D` in the commutant of `dilation`.
    Rn {
        dominated: Instrument,
        dilation: BiDilation,
        d: ComplexMatrix,
    },
    /// `Φ_outcome(a) ≠ φ(a) μ(outcome)` on the basis element `a = unit`.
    DecomposableRefutation {
        outcome: usize,
        unit: MatrixUnit,
    },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Dilation(_) => "dilation",
            Certificate::Extreme { .. } => "extreme",
            Certificate::NonExtreme { .. } => "non_extreme",
            Certificate::CstarExtreme(_) => "cstar_extreme",
            Certificate::NotCstarExtreme { .. } | Certificate::NonNestInvariance { .. } => {
                "not_cstar_extreme"
            }
            Certificate::Rn { .. } => "rn",
            Certificate::DecomposableRefutation { .. } => "decomposable_refutation",
        }
    }
}

/// The first clause a certificate fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    Shape,
    Dilation,
    Rank,
    Validate,
    Average,
    Distance,
    NotUnitary,
    NotIsometry,
    NestOrder,
    Reconstruction,
    Eigenvalue,
    EigenResidual,
    NestTest,
    Commutant,
    Contraction,
    ProductIdentity,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub kind: &'static str,
    /// Largest residual among the equality clauses.
    pub residual: f64,
}

fn fail(clause: Clause, detail: impl Into<String>) -> Error {
    Error::CheckFailed {
        clause,
        detail: detail.into(),
    }
}

pub fn check_certificate(
    cert: &Certificate,
    ins: &Instrument,
    tol: Tolerance,
) -> Result<CheckReport> {
    let residual = match cert {
        Certificate::Dilation(dil) => check_dilation(dil, ins, tol)?,
        Certificate::Extreme {
            dilation,
            rank,
            commutant_dim,
        } => check_extreme(dilation, *rank, *commutant_dim, ins, tol)?,
        Certificate::NonExtreme { plus, minus } => check_non_extreme(plus, minus, ins, tol)?,
        Certificate::CstarExtreme(dec) => check_cstar(dec, ins, tol)?,
        Certificate::NotCstarExtreme {
            outcome,
            eigenvalue,
            eigenvector,
        } => check_eigen(*outcome, *eigenvalue, eigenvector, ins, tol)?,
        Certificate::NonNestInvariance { outcome } => check_non_nest(*outcome, ins, tol)?,
        Certificate::Rn {
            dominated,
            dilation,
            d,
        } => check_rn(dominated, dilation, d, ins, tol)?,
        Certificate::DecomposableRefutation { outcome, unit } => {
            check_product(*outcome, *unit, ins, tol)?
        }
    };
    Ok(CheckReport {
        kind: cert.kind(),
        residual,
    })
}

fn check_dilation(dil: &BiDilation, ins: &Instrument, tol: Tolerance) -> Result<f64> {
    if dil.spec() != ins.spec()
        || dil.out_dim() != ins.out_dim()
        || dil.outcomes() != ins.outcomes()
    {
        return Err(fail(
            Clause::Shape,
            "dilation does not match the instrument",
        ));
    }
    let report = verify_bidilation(ins, dil, tol);
    if !report.passes {
        return Err(fail(
            Clause::Dilation,
            format!(
                "reconstruction {:.3e}, minimality {}/{}, isometry defect {:.3e}",
                report.reconstruction_residual,
                report.minimality_dim,
                report.dim,
                report.isometry_defect
            ),
        ));
    }
    Ok(report.reconstruction_residual)
}

/// Hermitian basis of `⊕ I_d ⊗ M_r` as `N×N` matrices, from the block table alone.
fn hermitian_commutant(dil: &BiDilation) -> Vec<ComplexMatrix> {
    let n = dil.dim();
    let mut out = Vec::new();
    for b in dil.blocks() {
        for p in 0..b.rank {
            for q in p..b.rank {
                let entries: Vec<(usize, usize, C64)> = if p == q {
                    vec![(p, p, r(1.0))]
                } else {
                    vec![(p, q, r(1.0)), (q, p, r(1.0))]
                };
                let imag: Vec<(usize, usize, C64)> =
                    vec![(p, q, C64::new(0.0, 1.0)), (q, p, C64::new(0.0, -1.0))];
                let sets = if p == q {
                    vec![entries]
                } else {
                    vec![entries, imag]
                };
                for set in sets {
                    let mut d = zeros(n, n);
                    for x in 0..b.dim {
                        for &(u, v, z) in &set {
                            d[(b.offset + x * b.rank + u, b.offset + x * b.rank + v)] = z;
                        }
                    }
                    out.push(d);
                }
            }
        }
    }
    out
}

fn check_extreme(
    dil: &BiDilation,
    rank: usize,
    commutant_dim: usize,
    ins: &Instrument,
    tol: Tolerance,
) -> Result<f64> {
    let residual = check_dilation(dil, ins, tol)?;
    let basis = hermitian_commutant(dil);
    if basis.len() != commutant_dim {
        return Err(fail(
            Clause::Rank,
            format!(
                "commutant dimension is {}, certificate says {commutant_dim}",
                basis.len()
            ),
        ));
    }
    let k = ins.out_dim();
    let mut m = DMatrix::<f64>::zeros(k * k, basis.len());
    for (t, d) in basis.iter().enumerate() {
        m.set_column(t, &hermitian_coords(&(dil.v().adjoint() * d * dil.v())));
    }
    let (got, _) = rank_nullspace_scaled(&m, 1.0, tol);
    if got != rank || rank != commutant_dim {
        return Err(fail(
            Clause::Rank,
            format!("compression rank {got}, certificate says {rank} of {commutant_dim}"),
        ));
    }
    Ok(residual)
}

fn check_non_extreme(
    plus: &Instrument,
    minus: &Instrument,
    ins: &Instrument,
    tol: Tolerance,
) -> Result<f64> {
    for part in [plus, minus] {
        if part.spec() != ins.spec()
            || part.out_dim() != ins.out_dim()
            || part.outcomes() != ins.outcomes()
        {
            return Err(fail(Clause::Shape, "witness does not match the instrument"));
        }
        if !part.validate(tol, true).passes {
            return Err(fail(
                Clause::Validate,
                "witness is not a normalized instrument",
            ));
        }
    }
    let average = plus.add(minus)?.scaled(0.5);
    let residual = average.distance(ins);
    if residual > tol.residual(ins.scale()) {
        return Err(fail(
            Clause::Average,
            format!("average differs by {residual:.3e}"),
        ));
    }
    let gap = plus.distance(minus);
    if gap <= 10.0 * tol.eps() {
        return Err(fail(
            Clause::Distance,
            format!("witnesses differ by only {gap:.3e}"),
        ));
    }
    Ok(residual)
}

fn check_cstar(dec: &CstarDecomposition, ins: &Instrument, tol: Tolerance) -> Result<f64> {
    let k = ins.out_dim();
    let spec = ins.spec();
    let u = &dec.unitary;
    if u.shape() != (k, k) {
        return Err(fail(
            Clause::Shape,
            format!("unitary is {}x{}", u.nrows(), u.ncols()),
        ));
    }
    let defect = unitary_defect(u);
    if defect > tol.projection_slack(k) * 10.0 {
        return Err(fail(Clause::NotUnitary, format!("defect {defect:.3e}")));
    }
    let mut size = 0;
    for (b, blk) in dec.blocks.iter().enumerate() {
        if blk.outcome >= ins.outcomes()
            || blk.factor >= spec.num_factors()
            || blk.v.nrows() != spec.factor_dim(blk.factor)
        {
            return Err(fail(
                Clause::Shape,
                format!("block {b} does not fit the instrument"),
            ));
        }
        let defect = isometry_defect(&blk.v);
        if defect > tol.projection_slack(blk.v.nrows()) * 10.0 {
            return Err(fail(
                Clause::NotIsometry,
                format!("block {b}: defect {defect:.3e}"),
            ));
        }
        size += blk.v.ncols();
    }
    if size != k {
        return Err(fail(
            Clause::Shape,
            format!("blocks have total size {size}, expected {k}"),
        ));
    }
    let mut seen = vec![false; dec.blocks.len()];
    for ((outcome, factor), order) in &dec.nest_orders {
        for &b in order {
            let blk = dec
                .blocks
                .get(b)
                .ok_or_else(|| fail(Clause::NestOrder, format!("no block {b}")))?;
            if blk.outcome != *outcome || blk.factor != *factor || seen[b] {
                return Err(fail(Clause::NestOrder, format!("block {b} is misfiled")));
            }
            seen[b] = true;
        }
        for w in order.windows(2) {
            let small = &dec.blocks[w[0]].v;
            let big = &dec.blocks[w[1]].v;
            // range(small) ⊆ range(big)
            let leak = (small - big * (big.adjoint() * small)).norm();
            if leak > tol.projection_slack(small.nrows()) * 10.0 {
                return Err(fail(
                    Clause::NestOrder,
                    format!(
                        "range of block {} is not inside block {} ({leak:.3e})",
                        w[0], w[1]
                    ),
                ));
            }
        }
    }
    if let Some(b) = seen.iter().position(|&s| !s) {
        return Err(fail(
            Clause::NestOrder,
            format!("block {b} is in no nest order"),
        ));
    }
    let mut worst: f64 = 0.0;
    for unit in spec.matrix_units() {
        let a = unit.element(spec);
        for i in 0..ins.outcomes() {
            let parts: Vec<ComplexMatrix> = dec
                .blocks
                .iter()
                .map(|blk| {
                    let m = blk.v.ncols();
                    if blk.outcome == i {
                        blk.v.adjoint() * a.block(blk.factor) * &blk.v
                    } else {
                        zeros(m, m)
                    }
                })
                .collect();
            let got = u.adjoint() * block_diag(&parts) * u;
            worst = worst.max((got - ins.map(i).apply(&a)?).norm());
        }
    }
    if worst > tol.residual(ins.scale()) * 10.0 {
        return Err(fail(
            Clause::Reconstruction,
            format!("residual {worst:.3e}"),
        ));
    }
    Ok(worst)
}

fn effect(ins: &Instrument, outcome: usize) -> Result<ComplexMatrix> {
    if outcome >= ins.outcomes() {
        return Err(fail(Clause::Shape, format!("no outcome {outcome}")));
    }
    ins.map(outcome)
        .apply(&AlgebraElement::identity(ins.spec()))
}

fn check_eigen(
    outcome: usize,
    eigenvalue: f64,
    x: &ComplexVector,
    ins: &Instrument,
    tol: Tolerance,
) -> Result<f64> {
    let e = effect(ins, outcome)?;
    if x.len() != ins.out_dim() {
        return Err(fail(Clause::Shape, "eigenvector has the wrong length"));
    }
    let band = 10.0 * tol.eps();
    if !(eigenvalue > band && eigenvalue < 1.0 - band) {
        return Err(fail(
            Clause::Eigenvalue,
            format!("{eigenvalue} is not inside (0, 1)"),
        ));
    }
    let residual = (&e * x - x * r(eigenvalue)).norm();
    let unit = (x.norm() - 1.0).abs();
    if residual > tol.residual(op_norm(&e)) * 10.0 || unit > tol.projection_slack(x.len()) {
        return Err(fail(
            Clause::EigenResidual,
            format!("residual {residual:.3e}, norm defect {unit:.3e}"),
        ));
    }
    Ok(residual)
}

fn check_non_nest(outcome: usize, ins: &Instrument, tol: Tolerance) -> Result<f64> {
    let e = effect(ins, outcome)?;
    let range = column_space_scaled(&e, 1.0, tol);
    if range.ncols() == 0 {
        return Err(fail(Clause::NestTest, format!("μ({outcome}) is zero")));
    }
    let psi = ins
        .map(outcome)
        .compress(&range, tol)
        .map_err(|err| fail(Clause::NestTest, err.to_string()))?;
    match is_cstar_extreme_ucp(&psi, tol) {
        Ok(v) if !v.cstar_extreme => Ok(0.0),
        Ok(_) => Err(fail(
            Clause::NestTest,
            format!("outcome {outcome} passes the nest test"),
        )),
        Err(err) => Err(fail(Clause::NestTest, err.to_string())),
    }
}

fn check_rn(
    j: &Instrument,
    dil: &BiDilation,
    d: &ComplexMatrix,
    ins: &Instrument,
    tol: Tolerance,
) -> Result<f64> {
    if j.spec() != ins.spec() || j.out_dim() != ins.out_dim() || j.outcomes() != ins.outcomes() {
        return Err(fail(Clause::Shape, "dominated instrument does not match"));
    }
    check_dilation(dil, ins, tol)?;
    let n = dil.dim();
    if d.shape() != (n, n) {
        return Err(fail(Clause::Shape, format!("D should be {n}x{n}")));
    }
    let spec = ins.spec();
    let mut commutation: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for unit in spec.matrix_units() {
        let a = unit.element(spec);
        let pa = dil.represent(&a);
        for i in 0..ins.outcomes() {
            let g = &pa * dil.spectral_projection(&[i]);
            commutation = commutation.max((d * &g - &g * d).norm());
            let got = dil.v().adjoint() * d * &g * dil.v();
            worst = worst.max((got - j.map(i).apply(&a)?).norm());
        }
    }
    if commutation > tol.residual(op_norm(d)) * 10.0 {
        return Err(fail(
            Clause::Commutant,
            format!("commutator {commutation:.3e}"),
        ));
    }
    let eig = herm_eig(d, tol).map_err(|err| fail(Clause::Contraction, err.to_string()))?;
    let slack = tol.psd_slack(1.0);
    if eig.min() < -slack || eig.max() > 1.0 + slack {
        return Err(fail(
            Clause::Contraction,
            format!("spectrum [{:.3e}, {:.3e}]", eig.min(), eig.max()),
        ));
    }
    if worst > tol.residual(ins.scale()) * 10.0 {
        return Err(fail(
            Clause::Reconstruction,
            format!("residual {worst:.3e}"),
        ));
    }
    Ok(worst)
}

fn check_product(
    outcome: usize,
    unit: MatrixUnit,
    ins: &Instrument,
    tol: Tolerance,
) -> Result<f64> {
    let spec = ins.spec();
    if outcome >= ins.outcomes()
        || unit.factor >= spec.num_factors()
        || unit.row >= spec.factor_dim(unit.factor)
        || unit.col >= spec.factor_dim(unit.factor)
    {
        return Err(fail(Clause::Shape, "refutation indices out of range"));
    }
    let a = unit.element(spec);
    let one = AlgebraElement::identity(spec);
    let all: Vec<usize> = (0..ins.outcomes()).collect();
    let phi_a = ins.value(&all, &a)?;
    let mu_i = ins.map(outcome).apply(&one)?;
    let defect = (ins.map(outcome).apply(&a)? - phi_a * mu_i).norm();
    if defect <= 10.0 * tol.eps() {
        return Err(fail(
            Clause::ProductIdentity,
            format!("defect only {defect:.3e}"),
        ));
    }
    Ok(defect)
}

/// Dilation certificate from the minimal bi-dilation.
pub fn dilation_certificate(ins: &Instrument, tol: Tolerance) -> Result<Certificate> {
    Ok(Certificate::Dilation(BiDilation::minimal(ins, tol)?))
}

/// `Extreme` or `NonExtreme`, following [`is_extreme`].
pub fn extreme_certificate(ins: &Instrument, tol: Tolerance) -> Result<Certificate> {
    let v = is_extreme(ins, tol)?;
    if v.extreme {
        return Ok(Certificate::Extreme {
            dilation: v.dilation,
            rank: v.rank,
            commutant_dim: v.commutant_dim,
        });
    }
    let w = v
        .witness
        .ok_or_else(|| Error::TheoryViolation("non-extreme verdict without a witness".into()))?;
    Ok(Certificate::NonExtreme {
        plus: w.plus,
        minus: w.minus,
    })
}

/// `CstarExtreme`, `NotCstarExtreme` or `NonNestInvariance`, following
/// [`is_cstar_extreme_instrument`].
pub fn cstar_certificate(ins: &Instrument, tol: Tolerance) -> Result<Certificate> {
    let v = is_cstar_extreme_instrument(ins, tol)?;
    if let Some(dec) = v.decomposition {
        return Ok(Certificate::CstarExtreme(dec));
    }
    match v.refutation {
        Some(Refutation::NonProjectionEffect {
            outcome,
            eigenvalue,
            eigenvector,
        }) => Ok(Certificate::NotCstarExtreme {
            outcome,
            eigenvalue,
            eigenvector,
        }),
        Some(Refutation::NonNestInvariance { outcome }) => {
            Ok(Certificate::NonNestInvariance { outcome })
        }
        None => Err(Error::TheoryViolation(
            "negative verdict without a refutation".into(),
        )),
    }
}

/// Radon-Nikodym certificate for `j ≤ ins`.
pub fn rn_certificate(j: &Instrument, ins: &Instrument, tol: Tolerance) -> Result<Certificate> {
    let rn = rn_derivative(j, ins, tol)?;
    Ok(Certificate::Rn {
        dominated: j.clone(),
        dilation: rn.dilation,
        d: rn.d,
    })
}

/// A product-identity violation, or `None` if the instrument is decomposable.
pub fn decomposable_refutation(ins: &Instrument, tol: Tolerance) -> Option<Certificate> {
    ins.product_violation(tol)
        .map(|v| Certificate::DecomposableRefutation {
            outcome: v.outcome,
            unit: v.unit,
        })
}
