//! Brute-force and randomized cross-checks for the `qinstr` test suite.
//!
//! Nothing here uses the structured commutant or the extremality rank test;
//! the point is to reach the same answers by a different road.

use qinstr::linalg::{column_space, identity, psd_sqrt, Tolerance};
use qinstr::random::{gue, rng_from_seed};
use qinstr::{AlgebraElement, BiDilation, ComplexMatrix, ComplexVector, CpMap, Instrument, C64};

/// Orthonormal (Frobenius) basis of `{X : XS = SX for all S in generators}`.
///
/// With row-major vectorization `vec(XS − SX) = (I⊗Sᵀ − S⊗I) vec X`; the
/// commutant is the kernel of `G = Σ M_S* M_S`.
pub fn commutant_bruteforce(generators: &[ComplexMatrix], tol: Tolerance) -> Vec<ComplexMatrix> {
    let Some(first) = generators.first() else {
        return Vec::new();
    };
    let n = first.nrows();
    let id = identity(n);
    let mut left = ComplexMatrix::zeros(n, n);
    let mut right = ComplexMatrix::zeros(n, n);
    let mut g = ComplexMatrix::zeros(n * n, n * n);
    for s in generators {
        assert_eq!(s.shape(), (n, n), "generators must share one square shape");
        left += s.adjoint() * s;
        right += s.conjugate() * s.transpose();
        g -= s.kronecker(&s.conjugate()) + s.adjoint().kronecker(&s.transpose());
    }
    g += left.kronecker(&id) + id.kronecker(&right);
    let g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let eig = g.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
    let cut = tol.eps() * top;
    (0..n * n)
        .filter(|&j| eig.eigenvalues[j] <= cut)
        .map(|j| {
            ComplexMatrix::from_row_slice(n, n, eig.eigenvectors.column(j).into_owned().as_slice())
        })
        .collect()
}

/// The operators `π(a) E({i})` for matrix units `a` and outcomes `i`.
pub fn dilation_generators(dil: &BiDilation) -> Vec<ComplexMatrix> {
    let spec = dil.spec();
    let mut out = Vec::new();
    for unit in spec.matrix_units() {
        let pa = dil.represent(&unit.element(spec));
        for i in 0..dil.outcomes() {
            out.push(&pa * dil.spectral_projection(&[i]));
        }
    }
    out
}

/// Mutual projection residual of two spans of `n×n` matrices, or infinity
/// if their dimensions differ.
pub fn span_distance(a: &[ComplexMatrix], b: &[ComplexMatrix], tol: Tolerance) -> f64 {
    let pa = span_basis(a, tol);
    let pb = span_basis(b, tol);
    if pa.ncols() != pb.ncols() {
        return f64::INFINITY;
    }
    if pa.ncols() == 0 {
        return 0.0;
    }
    let da = (&pa - &pb * (pb.adjoint() * &pa)).norm();
    let db = (&pb - &pa * (pa.adjoint() * &pb)).norm();
    da.max(db)
}

fn span_basis(ms: &[ComplexMatrix], tol: Tolerance) -> ComplexMatrix {
    let Some(first) = ms.first() else {
        return ComplexMatrix::zeros(0, 0);
    };
    let len = first.len();
    let cols: Vec<ComplexVector> = ms
        .iter()
        .map(|m| ComplexVector::from_iterator(len, m.transpose().iter().copied()))
        .collect();
    column_space(&ComplexMatrix::from_columns(&cols), tol)
}

/// Kraus data of one `(outcome, factor)` pair.
struct Piece {
    outcome: usize,
    factor: usize,
    kraus: Vec<ComplexMatrix>,
}

fn herm_dim(r: usize) -> usize {
    r * r
}

/// Real coordinates of the `r×r` Hermitian matrix, isometric for Frobenius.
fn herm_to_real(h: &ComplexMatrix, out: &mut Vec<f64>) {
    let r = h.nrows();
    let s = std::f64::consts::SQRT_2;
    for p in 0..r {
        out.push(h[(p, p)].re);
        for q in p + 1..r {
            out.push(s * h[(p, q)].re);
            out.push(s * h[(p, q)].im);
        }
    }
}

fn real_to_herm(x: &[f64], r: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = ComplexMatrix::zeros(r, r);
    let mut t = 0;
    for p in 0..r {
        h[(p, p)] = C64::new(x[t], 0.0);
        t += 1;
        for q in p + 1..r {
            let z = C64::new(s * x[t], s * x[t + 1]);
            h[(p, q)] = z;
            h[(q, p)] = z.conj();
            t += 2;
        }
    }
    h
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Randomized search for a midpoint decomposition `I = ½(I₊ + I₋)`.
///
/// Perturbations are `Δᵢ(a) = Σ c_jl K_j* a K_l` in minimal Kraus coordinates
/// with Hermitian `c`. A random `c` is projected onto the kernel of
/// `c ↦ Σ c_jl K_j* K_l` by Gram-Schmidt against the constraint rows, scaled
/// so `I ± c ≥ 0`, and accepted once both instruments validate.
pub fn nonextreme_search(
    ins: &Instrument,
    seed: u64,
    trials: usize,
    tol: Tolerance,
) -> Option<(Instrument, Instrument)> {
    let k = ins.out_dim();
    let mut pieces = Vec::new();
    for i in 0..ins.outcomes() {
        let set = ins.map(i).kraus_minimal(tol).ok()?;
        for (s, ops) in set.factors.into_iter().enumerate() {
            if !ops.is_empty() {
                pieces.push(Piece {
                    outcome: i,
                    factor: s,
                    kraus: ops,
                });
            }
        }
    }
    let dims: Vec<usize> = pieces.iter().map(|p| herm_dim(p.kraus.len())).collect();
    let p: usize = dims.iter().sum();
    if p == 0 {
        return None;
    }
    // Column t of the constraint map, as a real vector of length 2k².
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p);
    for (piece, &dim) in pieces.iter().zip(&dims) {
        let r = piece.kraus.len();
        for t in 0..dim {
            let mut e = vec![0.0; dim];
            e[t] = 1.0;
            let c = real_to_herm(&e, r);
            let img = kraus_sum(&piece.kraus, &c, None, k);
            columns.push(img.iter().flat_map(|z| [z.re, z.im]).collect());
        }
    }
    // Rows of the constraint map, orthonormalized.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for row in 0..2 * k * k {
        let mut v: Vec<f64> = columns.iter().map(|col| col[row]).collect();
        for _ in 0..2 {
            for q in &rows {
                let a = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= a * y);
            }
        }
        let nv = norm(&v);
        if nv > 1e-10 {
            rows.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..trials {
        let mut x = Vec::with_capacity(p);
        for piece in &pieces {
            herm_to_real(&gue(&mut rng, piece.kraus.len()), &mut x);
        }
        let before = norm(&x);
        for q in &rows {
            let a = dot(q, &x);
            x.iter_mut().zip(q).for_each(|(v, y)| *v -= a * y);
        }
        if norm(&x) <= 1e-6 * before {
            continue;
        }
        let mut coeffs = Vec::with_capacity(pieces.len());
        let mut at = 0;
        for (piece, &dim) in pieces.iter().zip(&dims) {
            coeffs.push(real_to_herm(&x[at..at + dim], piece.kraus.len()));
            at += dim;
        }
        let top = coeffs
            .iter()
            .map(|c| c.clone().symmetric_eigenvalues().amax())
            .fold(0.0f64, f64::max);
        let scale = C64::new(0.5 / top, 0.0);
        let delta_maps: Vec<CpMap> = (0..ins.outcomes())
            .map(|i| {
                CpMap::from_fn(ins.spec(), k, |a| {
                    let mut out = ComplexMatrix::zeros(k, k);
                    for (piece, c) in pieces.iter().zip(&coeffs) {
                        if piece.outcome == i {
                            out += kraus_sum(
                                &piece.kraus,
                                &(c * scale),
                                Some(a.block(piece.factor)),
                                k,
                            );
                        }
                    }
                    out
                })
            })
            .collect();
        let delta = Instrument::new(ins.spec().clone(), k, delta_maps).ok()?;
        let plus = ins.add(&delta).ok()?;
        let minus = ins.sub(&delta).ok()?;
        let ok = plus.validate(tol, true).passes
            && minus.validate(tol, true).passes
            && plus.distance(&minus) > 10.0 * tol.eps();
        if ok {
            return Some((plus, minus));
        }
    }
    None
}

/// `Σ c_jl K_j* a K_l`, with `a = I` when `None`.
fn kraus_sum(
    kraus: &[ComplexMatrix],
    c: &ComplexMatrix,
    a: Option<&ComplexMatrix>,
    k: usize,
) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(k, k);
    for (j, kj) in kraus.iter().enumerate() {
        let left = match a {
            Some(a) => kj.adjoint() * a,
            None => kj.adjoint(),
        };
        for (l, kl) in kraus.iter().enumerate() {
            if c[(j, l)] != C64::new(0.0, 0.0) {
                out += &left * kl * c[(j, l)];
            }
        }
    }
    out
}

/// Naimark-first POVM dilation `W h = ⊕ᵢ √μ(i) h`, restricted to `⊕ range μ(i)`.
#[derive(Debug, Clone)]
pub struct NaimarkSubminimal {
    /// Rank of each effect.
    pub ranks: Vec<usize>,
    /// `m×k` with `m = Σ ranks`.
    pub w: ComplexMatrix,
    /// Largest `‖W* E({i}) W − μ(i)‖`.
    pub residual: f64,
}

impl NaimarkSubminimal {
    pub fn dim(&self) -> usize {
        self.w.nrows()
    }
}

pub fn naimark_first_subminimal(ins: &Instrument, tol: Tolerance) -> NaimarkSubminimal {
    let k = ins.out_dim();
    let one = AlgebraElement::identity(ins.spec());
    let effects: Vec<ComplexMatrix> = (0..ins.outcomes())
        .map(|i| ins.map(i).apply(&one).expect("own spec"))
        .collect();
    let mut ranks = Vec::new();
    let mut rows = Vec::new();
    for e in &effects {
        let root = psd_sqrt(e, tol).unwrap_or_else(|_| ComplexMatrix::zeros(k, k));
        let range = column_space(&root, tol);
        ranks.push(range.ncols());
        rows.push(range.adjoint() * root);
    }
    let m: usize = ranks.iter().sum();
    let mut w = ComplexMatrix::zeros(m, k);
    let mut at = 0;
    for part in &rows {
        w.view_mut((at, 0), (part.nrows(), k)).copy_from(part);
        at += part.nrows();
    }
    let mut residual: f64 = 0.0;
    let mut at = 0;
    for (e, &rk) in effects.iter().zip(&ranks) {
        let wi = w.rows(at, rk);
        residual = residual.max((wi.adjoint() * wi - e).norm());
        at += rk;
    }
    NaimarkSubminimal { ranks, w, residual }
}
