//! Convex and C*-convex structure of instruments.
//!
//! Everything here works in the commutant `⊕_b I_{d_b} ⊗ M_{r_b}` of a minimal
//! bi-dilation. A commutant element is given by its per-block `r_b×r_b`
//! coordinates; [`BiDilation::instrument_from_commutant`] turns coordinates
//! `X` into the instrument `(i, a) ↦ V* D π(a) E({i}) V`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::cpmap::CpMap;
use crate::dilation::BiDilation;
use crate::error::{Error, Result};
use crate::instrument::Instrument;
use crate::linalg::{
    column_space_scaled, frob, herm_eig, hermitian_coords, hstack, identity, is_projection,
    isometry_defect, least_squares, op_norm, orthonormalize_scaled, r, rank_nullspace_scaled,
    unitary_defect, vec_row_major, zeros, ComplexMatrix, ComplexVector, Tolerance,
};
use crate::random::{gue, rng_from_seed};

/// `J ≤ I`: every `I_i − J_i` is CP.
pub fn dominates(j: &Instrument, i: &Instrument, tol: Tolerance) -> bool {
    if j.check_compatible(i).is_err() {
        return false;
    }
    i.maps()
        .iter()
        .zip(j.maps())
        .all(|(a, b)| a.sub(b).map(|d| d.validate_cp(tol)).unwrap_or(false))
}

/// Radon-Nikodym derivative of `J` with respect to `I`.
#[derive(Debug, Clone)]
pub struct RnDerivative {
    pub dilation: BiDilation,
    /// Per-block `r×r` coordinates of `D`.
    pub coords: Vec<ComplexMatrix>,
    /// `D = ⊕ I ⊗ X_b`.
    pub d: ComplexMatrix,
    pub residual: f64,
}

/// Solves `J_i = V* D π(·) E({i}) V` for `D` in the commutant of the minimal
/// bi-dilation of `I`.
///
/// Block `(i, s)` of the dilation contributes `W X W*` to the Choi block
/// `(i, s)` of `J`, where the columns of `W` are the conjugated Kraus vectors;
/// `W` has full column rank, so each block is an independent least-squares
/// problem. Choi blocks of `J` without a dilation block must vanish.
pub fn rn_derivative(j: &Instrument, ins: &Instrument, tol: Tolerance) -> Result<RnDerivative> {
    j.check_compatible(ins)?;
    let dil = BiDilation::minimal(ins, tol)?;
    let k = ins.out_dim();
    let mut coords = Vec::with_capacity(dil.blocks().len());
    let mut residual_sq = 0.0;
    let mut covered = vec![vec![false; ins.spec().num_factors()]; ins.outcomes()];
    for (bi, b) in dil.blocks().iter().enumerate() {
        covered[b.outcome][b.factor] = true;
        let w = choi_factor(&dil, bi, k);
        let c = &j.map(b.outcome).choi_blocks()[b.factor];
        // X = W⁺ C W⁺*, computed as two left solves.
        let y = solve_left(&w, c, tol);
        let x = solve_left(&w, &y.adjoint(), tol).adjoint();
        residual_sq += (c - &w * &x * w.adjoint()).norm_squared();
        coords.push(x);
    }
    for (i, row) in covered.iter().enumerate() {
        for (s, &seen) in row.iter().enumerate() {
            if !seen {
                residual_sq += j.map(i).choi_blocks()[s].norm_squared();
            }
        }
    }
    let residual = residual_sq.sqrt();
    let slack = tol.residual(ins.scale().max(j.scale()));
    if residual > slack {
        return Err(Error::NotDominated(format!(
            "least-squares residual {residual:.3e} exceeds {slack:.3e}"
        )));
    }
    check_contraction(&coords, tol).map_err(Error::NotDominated)?;
    let d = dil.embed_commutant(&coords);
    Ok(RnDerivative {
        dilation: dil,
        coords,
        d,
        residual,
    })
}

/// The dominated instrument `(i, a) ↦ V* D π(a) E({i}) V` for `D` given as an
/// `N×N` matrix in the commutant of the minimal bi-dilation of `ins`.
pub fn rn_apply(ins: &Instrument, d: &ComplexMatrix, tol: Tolerance) -> Result<Instrument> {
    let dil = BiDilation::minimal(ins, tol)?;
    if d.shape() != (dil.dim(), dil.dim()) {
        return Err(Error::InvalidDerivative(format!(
            "D should be {0}x{0}, got {1}x{2}",
            dil.dim(),
            d.nrows(),
            d.ncols()
        )));
    }
    let defect = dil.commutant_defect(d);
    if defect > tol.residual(frob(d)) {
        return Err(Error::InvalidDerivative(format!(
            "D is not in the commutant (defect {defect:.3e})"
        )));
    }
    let coords = dil.commutant_coords(d);
    check_contraction(&coords, tol).map_err(Error::InvalidDerivative)?;
    Ok(dil.instrument_from_commutant(&coords))
}

/// `0 ≤ X_b ≤ I` for every block, within the PSD slack.
fn check_contraction(coords: &[ComplexMatrix], tol: Tolerance) -> std::result::Result<(), String> {
    for (b, x) in coords.iter().enumerate() {
        let eig = herm_eig(x, tol).map_err(|e| format!("block {b}: {e}"))?;
        let slack = tol.psd_slack(1.0);
        if eig.min() < -slack || eig.max() > 1.0 + slack {
            return Err(format!(
                "block {b}: spectrum [{:.3e}, {:.3e}] outside [0, 1]",
                eig.min(),
                eig.max()
            ));
        }
    }
    Ok(())
}

fn choi_factor(dil: &BiDilation, bi: usize, k: usize) -> ComplexMatrix {
    let b = dil.blocks()[bi];
    ComplexMatrix::from_fn(b.dim * k, b.rank, |row, j| {
        dil.v()[(b.offset + (row / k) * b.rank + j, row % k)].conj()
    })
}

/// Least-squares `Y` with `W Y ≈ C`, column by column.
fn solve_left(w: &ComplexMatrix, c: &ComplexMatrix, tol: Tolerance) -> ComplexMatrix {
    let cols: Vec<ComplexVector> = c
        .column_iter()
        .map(|col| least_squares(w, &col.into_owned(), tol).0)
        .collect();
    if cols.is_empty() {
        return zeros(w.ncols(), 0);
    }
    ComplexMatrix::from_columns(&cols)
}

/// Commutant dimension of the minimal bi-dilation is 1.
pub fn is_pure_instrument(ins: &Instrument, tol: Tolerance) -> Result<bool> {
    Ok(BiDilation::minimal(ins, tol)?.commutant_dim() == 1)
}

/// Pair `I₊, I₋` with `I = ½(I₊ + I₋)`.
#[derive(Debug, Clone)]
pub struct NonExtremeWitness {
    /// Per-block coordinates of the Hermitian kernel element `D`, `‖D‖ = 1`.
    pub coords: Vec<ComplexMatrix>,
    pub plus: Instrument,
    pub minus: Instrument,
}

#[derive(Debug, Clone)]
pub struct ExtremeVerdict {
    pub extreme: bool,
    pub rank: usize,
    pub commutant_dim: usize,
    pub dilation: BiDilation,
    pub witness: Option<NonExtremeWitness>,
}

/// Real matrix of `D ↦ hermitian_coords(V* D V)` on Hermitian commutant coordinates.
fn compression_matrix(dil: &BiDilation) -> (DMatrix<f64>, Vec<Vec<ComplexMatrix>>) {
    let herm = dil.hermitian_commutant_coords();
    let k = dil.out_dim();
    let mut m = DMatrix::<f64>::zeros(k * k, herm.len());
    for (t, coords) in herm.iter().enumerate() {
        m.set_column(t, &hermitian_coords(&dil.compress_commutant(coords)));
    }
    (m, herm)
}

/// Extreme iff `D ↦ V* D V` is injective on the commutant. A non-extreme
/// verdict carries the midpoint pair built from a kernel element.
pub fn is_extreme(ins: &Instrument, tol: Tolerance) -> Result<ExtremeVerdict> {
    ins.require_unital(tol)?;
    let dil = BiDilation::minimal(ins, tol)?;
    let (m, herm) = compression_matrix(&dil);
    let commutant_dim = herm.len();
    let (rank, null) = rank_nullspace_scaled(&m, 1.0, tol);
    let witness = if rank < commutant_dim {
        let c = null.column(0);
        let mut coords: Vec<ComplexMatrix> =
            dil.blocks().iter().map(|b| zeros(b.rank, b.rank)).collect();
        for (t, h) in herm.iter().enumerate() {
            for (x, hx) in coords.iter_mut().zip(h) {
                *x += hx * r(c[t]);
            }
        }
        let norm = coords.iter().map(op_norm).fold(0.0, f64::max);
        for x in coords.iter_mut() {
            *x /= r(norm);
        }
        let shifted = |sign: f64| -> Vec<ComplexMatrix> {
            coords
                .iter()
                .map(|x| identity(x.nrows()) + x * r(sign))
                .collect()
        };
        let plus = dil.instrument_from_commutant(&shifted(1.0));
        let minus = dil.instrument_from_commutant(&shifted(-1.0));
        Some(NonExtremeWitness {
            coords,
            plus,
            minus,
        })
    } else {
        None
    };
    Ok(ExtremeVerdict {
        extreme: witness.is_none(),
        rank,
        commutant_dim,
        dilation: dil,
        witness,
    })
}

/// Choi-Kraus form of the extremality test: the products `K_j* K_l`, taken
/// jointly over all outcomes and factors, are linearly independent.
pub fn is_extreme_kraus(ins: &Instrument, tol: Tolerance) -> Result<bool> {
    ins.require_unital(tol)?;
    let mut products = Vec::new();
    for m in ins.maps() {
        for ops in m.kraus_minimal(tol)?.factors {
            for kj in &ops {
                for kl in &ops {
                    products.push(vec_row_major(&(kj.adjoint() * kl)));
                }
            }
        }
    }
    let kk = ins.out_dim() * ins.out_dim();
    if products.is_empty() {
        return Ok(true);
    }
    let stacked = ComplexMatrix::from_columns(&products);
    debug_assert_eq!(stacked.nrows(), kk);
    Ok(crate::linalg::rank(&stacked, tol) == products.len())
}

/// Result of [`dominated_pair_check`].
#[derive(Debug, Clone)]
pub struct DominatedPairCheck {
    pub no_counterexample: bool,
    /// `J₁ ≠ J₂`, both dominated by `I`, with `J₁(X)(1) = J₂(X)(1)`.
    pub counterexample: Option<(Instrument, Instrument)>,
    pub trials: usize,
}

/// Samples dominated pairs `J₁, J₂ ≤ I` with equal compression `V* D₁ V = V* D₂ V`.
///
/// `D₁` is a random commutant element with spectrum in `[¼, ¾]`; `D₂ = D₁ + K`
/// with `K` a random combination of the kernel of the compression map scaled to
/// `‖K‖ = ¼`. For an extreme instrument the kernel is zero and every pair coincides.
pub fn dominated_pair_check(
    ins: &Instrument,
    seed: u64,
    trials: usize,
    tol: Tolerance,
) -> Result<DominatedPairCheck> {
    ins.require_unital(tol)?;
    let dil = BiDilation::minimal(ins, tol)?;
    let (m, herm) = compression_matrix(&dil);
    let (_, null) = rank_nullspace_scaled(&m, 1.0, tol);
    let mut rng = rng_from_seed(seed);
    let separation = 10.0 * tol.eps();
    for trial in 0..trials {
        let d1: Vec<ComplexMatrix> = dil
            .blocks()
            .iter()
            .map(|b| random_contraction(&mut rng, b.rank, 0.25, 0.75, tol))
            .collect();
        let mut kernel: Vec<ComplexMatrix> =
            dil.blocks().iter().map(|b| zeros(b.rank, b.rank)).collect();
        for col in null.column_iter() {
            let weight: f64 = rng.random_range(-1.0..1.0);
            for (t, h) in herm.iter().enumerate() {
                for (x, hx) in kernel.iter_mut().zip(h) {
                    *x += hx * r(weight * col[t]);
                }
            }
        }
        let norm = kernel.iter().map(op_norm).fold(0.0, f64::max);
        let d2: Vec<ComplexMatrix> = if norm > 0.0 {
            d1.iter()
                .zip(&kernel)
                .map(|(a, b)| a + b * r(0.25 / norm))
                .collect()
        } else {
            d1.clone()
        };
        let j1 = dil.instrument_from_commutant(&d1);
        let j2 = dil.instrument_from_commutant(&d2);
        let same_total =
            (j1.povm_marginal().total() - j2.povm_marginal().total()).norm() <= tol.residual(1.0);
        if same_total
            && j1.distance(&j2) > separation
            && dominates(&j1, ins, tol)
            && dominates(&j2, ins, tol)
        {
            return Ok(DominatedPairCheck {
                no_counterexample: false,
                counterexample: Some((j1, j2)),
                trials: trial + 1,
            });
        }
    }
    Ok(DominatedPairCheck {
        no_counterexample: true,
        counterexample: None,
        trials,
    })
}

/// Random Hermitian `n×n` matrix with spectrum in `[lo, hi]`.
pub(crate) fn random_contraction<R: Rng>(
    rng: &mut R,
    n: usize,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> ComplexMatrix {
    let g = gue(rng, n);
    let eig = herm_eig(&g, tol).expect("GUE samples are Hermitian");
    let vals: Vec<f64> = (0..n)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for (j, &v) in vals.iter().enumerate() {
        let u = eig.vector(j);
        out += &u * u.adjoint() * r(v);
    }
    out
}

/// A matrix subalgebra of `⊕_j M_{r_j}`, stored as a linear basis.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    pub ambient: Vec<usize>,
    /// Each element is a list of per-factor blocks.
    pub elements: Vec<Vec<ComplexMatrix>>,
}

impl AlgebraBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    fn flat_len(&self) -> usize {
        self.ambient.iter().map(|r| r * r).sum()
    }

    fn flatten(&self, x: &[ComplexMatrix]) -> ComplexVector {
        let mut out = Vec::with_capacity(self.flat_len());
        for b in x {
            out.extend(vec_row_major(b).iter().copied());
        }
        ComplexVector::from_vec(out)
    }

    fn unflatten(&self, v: &ComplexVector) -> Vec<ComplexMatrix> {
        let mut pos = 0;
        self.ambient
            .iter()
            .map(|&rk| {
                let m = ComplexMatrix::from_fn(rk, rk, |i, j| v[pos + i * rk + j]);
                pos += rk * rk;
                m
            })
            .collect()
    }

    fn product(x: &[ComplexMatrix], y: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
        x.iter().zip(y).map(|(a, b)| a * b).collect()
    }

    /// Orthonormal (Frobenius) basis of the span of `items`.
    fn from_span(ambient: &[usize], items: &[Vec<ComplexMatrix>], tol: Tolerance) -> Self {
        let shell = AlgebraBasis {
            ambient: ambient.to_vec(),
            elements: Vec::new(),
        };
        let vecs: Vec<ComplexVector> = items.iter().map(|x| shell.flatten(x)).collect();
        let q = orthonormalize_scaled(&vecs, shell.flat_len(), 1.0, tol);
        let elements = q
            .column_iter()
            .map(|c| shell.unflatten(&c.into_owned()))
            .collect();
        AlgebraBasis {
            ambient: ambient.to_vec(),
            elements,
        }
    }

    fn identity_element(&self) -> Vec<ComplexMatrix> {
        self.ambient.iter().map(|&rk| identity(rk)).collect()
    }

    /// Distance from `x` to the span (the basis must be orthonormal).
    fn distance_to_span(&self, x: &[ComplexMatrix]) -> f64 {
        let v = self.flatten(x);
        let mut rest = v.clone();
        for e in &self.elements {
            let f = self.flatten(e);
            let c = f.dotc(&v);
            rest -= f * c;
        }
        rest.norm()
    }

    /// Single-factor algebra of `j`-th blocks.
    pub fn compression(&self, j: usize, tol: Tolerance) -> AlgebraBasis {
        let items: Vec<Vec<ComplexMatrix>> =
            self.elements.iter().map(|x| vec![x[j].clone()]).collect();
        AlgebraBasis::from_span(&[self.ambient[j]], &items, tol)
    }

    /// Span of all products `x·y`, `x ∈ self`, `y ∈ other`.
    fn span_products(&self, other: &AlgebraBasis, tol: Tolerance) -> AlgebraBasis {
        let mut items = Vec::with_capacity(self.dim() * other.dim());
        for x in &self.elements {
            for y in &other.elements {
                items.push(Self::product(x, y));
            }
        }
        AlgebraBasis::from_span(&self.ambient, &items, tol)
    }

    fn check_algebra(&self, tol: Tolerance) -> Result<()> {
        let slack = tol.residual(1.0) * (self.flat_len().max(1) as f64);
        let id = self.identity_element();
        if self.distance_to_span(&id) > slack {
            return Err(Error::NotAnAlgebra("identity is not in the span".into()));
        }
        for x in &self.elements {
            for y in &self.elements {
                let d = self.distance_to_span(&Self::product(x, y));
                if d > slack {
                    return Err(Error::NotAnAlgebra(format!(
                        "product leaves the span (distance {d:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `{S in the commutant : (1 − Q) S Q = 0}` with `Q = VV*`, in per-block coordinates.
pub fn invariance_algebra(dil: &BiDilation, tol: Tolerance) -> AlgebraBasis {
    let n = dil.dim();
    let v = dil.v();
    let q = v * v.adjoint();
    let q_perp = identity(n) - &q;
    let basis = dil.commutant_basis();
    let ambient: Vec<usize> = dil.blocks().iter().map(|b| b.rank).collect();
    let m = basis.dim();
    if m == 0 {
        return AlgebraBasis {
            ambient,
            elements: Vec::new(),
        };
    }
    let mut sys = ComplexMatrix::zeros(n * n, m);
    for (t, s) in basis.elements.iter().enumerate() {
        sys.set_column(t, &vec_row_major(&(&q_perp * s * &q)));
    }
    let (_, null) = rank_nullspace_scaled(&sys, 1.0, tol);
    let items: Vec<Vec<ComplexMatrix>> = null
        .column_iter()
        .map(|c| {
            let mut coords: Vec<ComplexMatrix> = ambient.iter().map(|&rk| zeros(rk, rk)).collect();
            for (t, &(b, j, l)) in basis.labels.iter().enumerate() {
                coords[b][(j, l)] += c[t];
            }
            coords
        })
        .collect();
    AlgebraBasis::from_span(&ambient, &items, tol)
}

/// Jacobson radical as the kernel of the trace form `(x, y) ↦ tr(xy)`.
pub fn radical(alg: &AlgebraBasis, tol: Tolerance) -> Result<AlgebraBasis> {
    alg.check_algebra(tol)?;
    let m = alg.dim();
    let trace = |x: &[ComplexMatrix], y: &[ComplexMatrix]| -> crate::linalg::C64 {
        x.iter().zip(y).map(|(a, b)| (a * b).trace()).sum()
    };
    let mut form = ComplexMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            form[(a, b)] = trace(&alg.elements[a], &alg.elements[b]);
        }
    }
    let (_, null) = rank_nullspace_scaled(&form.transpose(), 1.0, tol);
    let items: Vec<Vec<ComplexMatrix>> = null
        .column_iter()
        .map(|c| {
            let mut x: Vec<ComplexMatrix> = alg.ambient.iter().map(|&rk| zeros(rk, rk)).collect();
            for (t, e) in alg.elements.iter().enumerate() {
                for (xb, eb) in x.iter_mut().zip(e) {
                    *xb += eb * c[t];
                }
            }
            x
        })
        .collect();
    let rad = AlgebraBasis::from_span(&alg.ambient, &items, tol);
    nilpotency_index(&rad, tol)?;
    Ok(rad)
}

/// Smallest `p ≥ 1` with `J^p = 0`.
fn nilpotency_index(rad: &AlgebraBasis, tol: Tolerance) -> Result<usize> {
    if rad.dim() == 0 {
        return Ok(1);
    }
    let bound = rad.ambient.iter().sum::<usize>() + 1;
    let mut power = rad.clone();
    for p in 2..=bound {
        power = power.span_products(rad, tol);
        if power.dim() == 0 {
            return Ok(p);
        }
    }
    Err(Error::NotAnAlgebra(
        "trace-form kernel is not nilpotent".into(),
    ))
}

/// Chain `F₁ ⊂ … ⊂ F_p` in one factor of the ambient algebra.
#[derive(Debug, Clone)]
pub struct FlagChain {
    pub factor: usize,
    /// Orthonormal bases of `F₁, …, F_p`.
    pub subspaces: Vec<ComplexMatrix>,
    /// `s_t = dim F_t − dim F_{t−1}`.
    pub block_sizes: Vec<usize>,
}

impl FlagChain {
    /// Orthonormal vectors of each atom `F_t ⊖ F_{t−1}`.
    pub fn atoms(&self, tol: Tolerance) -> Vec<Vec<ComplexVector>> {
        let mut out = Vec::new();
        let mut prev: Vec<ComplexVector> = Vec::new();
        for f in &self.subspaces {
            let mut vecs = prev.clone();
            vecs.extend(f.column_iter().map(|c| c.into_owned()));
            let q = orthonormalize_scaled(&vecs, f.nrows(), 1.0, tol);
            let fresh: Vec<ComplexVector> = q
                .column_iter()
                .skip(prev.len())
                .map(|c| c.into_owned())
                .collect();
            prev.extend(fresh.iter().cloned());
            out.push(fresh);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct NestTest {
    pub is_nest: bool,
    pub flags: Vec<FlagChain>,
    /// Why the test rejected, when it did.
    pub reason: Option<String>,
}

impl NestTest {
    fn reject(reason: String) -> Self {
        NestTest {
            is_nest: false,
            flags: Vec::new(),
            reason: Some(reason),
        }
    }
}

/// Decides whether `alg ⊆ ⊕ M_{r_j}` is a direct sum of nest algebras.
///
/// The algebra must equal the sum of its factor compressions. In each factor
/// the radical `J` with nilpotency index `p` gives the candidate flag
/// `F_t = range(J^{p−t})`; the factor passes when the flag increases strictly,
/// every `F_t` is invariant and the dimension equals that of the full
/// block-upper-triangular algebra of the flag.
pub fn nest_subalgebra_test(alg: &AlgebraBasis, tol: Tolerance) -> Result<NestTest> {
    alg.check_algebra(tol)?;
    let compressions: Vec<AlgebraBasis> = (0..alg.ambient.len())
        .map(|j| alg.compression(j, tol))
        .collect();
    let split: usize = compressions.iter().map(|c| c.dim()).sum();
    if split != alg.dim() {
        return Ok(NestTest::reject(format!(
            "algebra of dimension {} does not split over its factor compressions (total {split})",
            alg.dim()
        )));
    }
    let mut flags = Vec::with_capacity(compressions.len());
    for (j, a) in compressions.iter().enumerate() {
        let rk = alg.ambient[j];
        let rad = radical(a, tol)?;
        let p = nilpotency_index(&rad, tol)?;
        // powers[m] spans J^m, powers[0] = A.
        let mut powers = vec![a.clone()];
        if p > 1 {
            powers.push(rad.clone());
            for _ in 2..p {
                let next = powers.last().expect("nonempty").span_products(&rad, tol);
                powers.push(next);
            }
        }
        let mut subspaces = Vec::with_capacity(p);
        for t in 1..=p {
            let m = p - t;
            let f = if m == 0 {
                identity(rk)
            } else {
                let parts: Vec<ComplexMatrix> =
                    powers[m].elements.iter().map(|x| x[0].clone()).collect();
                column_space_scaled(&hstack(&parts, rk), 1.0, tol)
            };
            subspaces.push(f);
        }
        let dims: Vec<usize> = subspaces.iter().map(|f| f.ncols()).collect();
        if dims.windows(2).any(|w| w[0] >= w[1]) || dims[0] == 0 {
            return Ok(NestTest::reject(format!(
                "factor {j}: radical-power flag {dims:?} is not strictly increasing"
            )));
        }
        let slack = tol.residual(1.0) * rk as f64;
        for f in &subspaces {
            let proj = f * f.adjoint();
            let perp = identity(rk) - &proj;
            for x in &a.elements {
                if (&perp * &x[0] * &proj).norm() > slack {
                    return Ok(NestTest::reject(format!(
                        "factor {j}: flag subspace of dimension {} is not invariant",
                        f.ncols()
                    )));
                }
            }
        }
        let mut block_sizes = Vec::with_capacity(p);
        let mut prev = 0;
        for &d in &dims {
            block_sizes.push(d - prev);
            prev = d;
        }
        let mut required = 0;
        for t in 0..p {
            for l in t..p {
                required += block_sizes[t] * block_sizes[l];
            }
        }
        if required != a.dim() {
            return Ok(NestTest::reject(format!(
                "factor {j}: dimension {} differs from the nest algebra dimension {required}",
                a.dim()
            )));
        }
        flags.push(FlagChain {
            factor: j,
            subspaces,
            block_sizes,
        });
    }
    Ok(NestTest {
        is_nest: true,
        flags,
        reason: None,
    })
}

/// One pure summand `a ↦ V_e* a_s V_e` of a C*-extreme decomposition.
#[derive(Debug, Clone)]
pub struct PureBlock {
    pub outcome: usize,
    pub factor: usize,
    /// `d_s×m` isometry.
    pub v: ComplexMatrix,
}

/// `Φᵢ(a) = U* (⊕ blocks) U` with blocks of outcome `i` only contributing to `Φᵢ`.
#[derive(Debug, Clone)]
pub struct CstarDecomposition {
    pub unitary: ComplexMatrix,
    pub blocks: Vec<PureBlock>,
    /// Per `(outcome, factor)`, block indices ordered by increasing range.
    pub nest_orders: Vec<((usize, usize), Vec<usize>)>,
}

#[derive(Debug, Clone)]
pub struct UcpVerdict {
    pub cstar_extreme: bool,
    pub invariance_dim: usize,
    pub nest: NestTest,
    /// Present when `cstar_extreme`; outcome labels are 0.
    pub decomposition: Option<CstarDecomposition>,
}

/// C*-extremity of a unital CP map through its invariance algebra.
pub fn is_cstar_extreme_ucp(phi: &CpMap, tol: Tolerance) -> Result<UcpVerdict> {
    let defect = phi.unital_defect();
    if defect > tol.projection_slack(phi.out_dim()) {
        return Err(Error::NotUnital(defect));
    }
    let dil = BiDilation::minimal(&Instrument::from_cpmap(phi.clone()), tol)?;
    let alg = invariance_algebra(&dil, tol);
    let nest = nest_subalgebra_test(&alg, tol)?;
    if !nest.is_nest {
        return Ok(UcpVerdict {
            cstar_extreme: false,
            invariance_dim: alg.dim(),
            nest,
            decomposition: None,
        });
    }
    let decomposition = pure_decomposition(&dil, &nest, tol)?;
    Ok(UcpVerdict {
        cstar_extreme: true,
        invariance_dim: alg.dim(),
        nest,
        decomposition: Some(decomposition),
    })
}

/// Splits a single-outcome dilation along rank-one subprojections of the flag atoms.
fn pure_decomposition(
    dil: &BiDilation,
    nest: &NestTest,
    tol: Tolerance,
) -> Result<CstarDecomposition> {
    let k = dil.out_dim();
    let mut blocks = Vec::new();
    let mut rows: Vec<ComplexMatrix> = Vec::new();
    let mut nest_orders = Vec::new();
    for flag in &nest.flags {
        let blk = dil.blocks()[flag.factor];
        let vb = dil.block_v(flag.factor);
        let first = blocks.len();
        for atom in flag.atoms(tol) {
            for e in atom {
                // G = (I ⊗ e*) V_b, a d×k matrix.
                let g = ComplexMatrix::from_fn(blk.dim, k, |p, x| {
                    (0..blk.rank)
                        .map(|l| e[l].conj() * vb[(p * blk.rank + l, x)])
                        .sum()
                });
                let w = column_space_scaled(&g.adjoint(), 1.0, tol);
                if w.ncols() == 0 {
                    continue;
                }
                let ve = &g * &w;
                let defect = isometry_defect(&ve);
                if defect > tol.projection_slack(blk.dim).max(tol.residual(1.0) * 10.0) {
                    return Err(Error::TheoryViolation(format!(
                        "flag atom vector gives a non-isometric block (defect {defect:.3e})"
                    )));
                }
                rows.push(w.adjoint());
                blocks.push(PureBlock {
                    outcome: 0,
                    factor: blk.factor,
                    v: ve,
                });
            }
        }
        let order = nest_order(&blocks[first..], tol).ok_or_else(|| {
            Error::TheoryViolation(format!(
                "ranges of the pure blocks in factor {} are not nested",
                blk.factor
            ))
        })?;
        nest_orders.push((
            (0, blk.factor),
            order.into_iter().map(|x| x + first).collect(),
        ));
    }
    let unitary = crate::linalg::vstack(&rows, k);
    let defect = unitary_defect(&unitary);
    if defect > tol.projection_slack(k).max(tol.residual(1.0) * 10.0) {
        return Err(Error::TheoryViolation(format!(
            "pure blocks do not assemble into a unitary (defect {defect:.3e})"
        )));
    }
    Ok(CstarDecomposition {
        unitary,
        blocks,
        nest_orders,
    })
}

/// Indices sorted by range dimension if the range projections form a chain.
pub(crate) fn nest_order(blocks: &[PureBlock], tol: Tolerance) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by_key(|&x| blocks[x].v.ncols());
    let projections: Vec<ComplexMatrix> = blocks.iter().map(|b| &b.v * b.v.adjoint()).collect();
    for w in order.windows(2) {
        let (small, big) = (&projections[w[0]], &projections[w[1]]);
        let slack = tol.projection_slack(small.nrows()) * 10.0;
        if (big * small - small).norm() > slack {
            return None;
        }
    }
    Some(order)
}

/// Why an instrument is not C*-extreme.
#[derive(Debug, Clone, PartialEq)]
pub enum Refutation {
    /// `μ(outcome)` has an eigenvalue strictly between 0 and 1.
    NonProjectionEffect {
        outcome: usize,
        eigenvalue: f64,
        eigenvector: ComplexVector,
    },
    /// The compression of `Φ_outcome` to the range of `μ(outcome)` fails the nest test.
    NonNestInvariance { outcome: usize },
}

#[derive(Debug, Clone)]
pub struct CstarVerdict {
    pub cstar_extreme: bool,
    pub refutation: Option<Refutation>,
    pub decomposition: Option<CstarDecomposition>,
}

/// C*-extremity by outcome-block reduction: all effects must be projections,
/// and each `Φᵢ` compressed to the range of `μ(i)` must be C*-extreme as a UCP map.
pub fn is_cstar_extreme_instrument(ins: &Instrument, tol: Tolerance) -> Result<CstarVerdict> {
    ins.require_unital(tol)?;
    let k = ins.out_dim();
    let mu = ins.povm_marginal();
    for (i, e) in mu.effects().iter().enumerate() {
        if !is_projection(e, tol) {
            let eig = herm_eig(e, tol)?;
            let band = 10.0 * tol.eps();
            let inside: Vec<usize> = (0..eig.values.len())
                .filter(|&j| eig.values[j] > band && eig.values[j] < 1.0 - band)
                .collect();
            // Smallest eigenvalue strictly inside (0, 1); otherwise the one farthest from {0, 1}.
            let j = inside.last().copied().unwrap_or_else(|| {
                (0..eig.values.len())
                    .max_by(|&a, &b| {
                        let da = eig.values[a].min(1.0 - eig.values[a]);
                        let db = eig.values[b].min(1.0 - eig.values[b]);
                        da.total_cmp(&db)
                    })
                    .expect("nonempty spectrum")
            });
            return Ok(CstarVerdict {
                cstar_extreme: false,
                refutation: Some(Refutation::NonProjectionEffect {
                    outcome: i,
                    eigenvalue: eig.values[j],
                    eigenvector: eig.vector(j),
                }),
                decomposition: None,
            });
        }
    }
    let mut blocks = Vec::new();
    let mut rows: Vec<ComplexMatrix> = Vec::new();
    let mut nest_orders = Vec::new();
    for (i, e) in mu.effects().iter().enumerate() {
        let range = column_space_scaled(e, 1.0, tol);
        if range.ncols() == 0 {
            continue;
        }
        let slack = tol.residual(ins.scale());
        let phi = ins.cp_marginal();
        for v in phi.basis_values() {
            if crate::linalg::commutator(&v, e).norm() > slack {
                return Err(Error::TheoryViolation(format!(
                    "CP marginal does not commute with the projection mu({i})"
                )));
            }
        }
        let psi = ins.map(i).compress(&range, tol)?;
        let verdict = is_cstar_extreme_ucp(&psi, tol)?;
        let Some(dec) = verdict.decomposition else {
            return Ok(CstarVerdict {
                cstar_extreme: false,
                refutation: Some(Refutation::NonNestInvariance { outcome: i }),
                decomposition: None,
            });
        };
        let first = blocks.len();
        // Rows of the local unitary act on range(μ(i)); lift them to C^k.
        rows.push(&dec.unitary * range.adjoint());
        for b in dec.blocks {
            blocks.push(PureBlock { outcome: i, ..b });
        }
        for ((_, s), order) in dec.nest_orders {
            nest_orders.push(((i, s), order.into_iter().map(|x| x + first).collect()));
        }
    }
    let unitary = crate::linalg::vstack(&rows, k);
    let defect = unitary_defect(&unitary);
    if defect > tol.projection_slack(k).max(tol.residual(1.0) * 10.0) {
        return Err(Error::TheoryViolation(format!(
            "outcome blocks do not assemble into a unitary (defect {defect:.3e})"
        )));
    }
    Ok(CstarVerdict {
        cstar_extreme: true,
        refutation: None,
        decomposition: Some(CstarDecomposition {
            unitary,
            blocks,
            nest_orders,
        }),
    })
}

/// C*-extremity through the nest test on the invariance algebra of the full
/// bi-dilation commutant.
pub fn is_cstar_extreme_full_commutant(ins: &Instrument, tol: Tolerance) -> Result<bool> {
    ins.require_unital(tol)?;
    let dil = BiDilation::minimal(ins, tol)?;
    let alg = invariance_algebra(&dil, tol);
    Ok(nest_subalgebra_test(&alg, tol)?.is_nest)
}

/// C*-extremity of the CP marginal.
pub fn cp_marginal_cstar_extreme(ins: &Instrument, tol: Tolerance) -> Result<bool> {
    Ok(is_cstar_extreme_ucp(&ins.cp_marginal(), tol)?.cstar_extreme)
}

/// Extremality of a UCP map as a single-outcome instrument.
pub fn is_extreme_ucp(phi: &CpMap, tol: Tolerance) -> Result<bool> {
    Ok(is_extreme(&Instrument::from_cpmap(phi.clone()), tol)?.extreme)
}

/// Extremality of a normalized POVM, through its instrument over `C`.
pub fn is_extreme_povm(povm: &crate::instrument::Povm, tol: Tolerance) -> Result<bool> {
    Ok(is_extreme(&Instrument::from_povm_trivial(povm), tol)?.extreme)
}

/// No nonzero `T` with `T π_A(a) E_A({i}) = π_B(a) E_B({i}) T` on the basis.
pub fn spectral_disjointness(a: &BiDilation, b: &BiDilation, tol: Tolerance) -> Result<bool> {
    if a.spec() != b.spec() || a.outcomes() != b.outcomes() {
        return Err(Error::Mismatch(
            "dilations differ in algebra or outcome count".into(),
        ));
    }
    let (na, nb) = (a.dim(), b.dim());
    if na == 0 || nb == 0 {
        return Ok(true);
    }
    // vec(T A − B T) = (Aᵀ ⊗ I − I ⊗ B) vec(T), column-major vec.
    let ia = identity(na);
    let ib = identity(nb);
    let mut gram = ComplexMatrix::zeros(na * nb, na * nb);
    let mut left = ComplexMatrix::zeros(na, na);
    let mut right = ComplexMatrix::zeros(nb, nb);
    for unit in a.spec().matrix_units() {
        let el = unit.element(a.spec());
        let (pa, pb) = (a.represent(&el), b.represent(&el));
        for i in 0..a.outcomes() {
            let ga = &pa * a.spectral_projection(&[i]);
            let gb = &pb * b.spectral_projection(&[i]);
            left += ga.conjugate() * ga.transpose();
            right += gb.adjoint() * &gb;
            gram -= ga.conjugate().kronecker(&gb) + ga.transpose().kronecker(&gb.adjoint());
        }
    }
    gram += left.kronecker(&ib) + ia.kronecker(&right);
    let scale = op_norm(&gram);
    let eig = herm_eig(&gram, tol)?;
    let cut = tol.rank_cut(scale, na * nb, na * nb);
    Ok(eig.min() > cut)
}
