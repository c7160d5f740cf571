//! Seeded generators for matrices and test instruments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::AlgebraSpec;
use crate::cpmap::{CpMap, KrausSet};
use crate::instrument::{Instrument, Povm};
use crate::linalg::{
    block_diag, c, identity, min_eigenvalue, psd_pinv_sqrt, r, zeros, ComplexMatrix, Tolerance,
};

pub type TestRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(s * re, s * im)
    })
}

/// Hermitian matrix from the Gaussian unitary ensemble.
pub fn gue<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    (&g + g.adjoint()) * r(0.5)
}

/// Haar-random unitary (QR of a Ginibre matrix with phases fixed).
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_isometry(rng, n, n)
}

/// Random `rows×cols` isometry, `cols ≤ rows`.
pub fn random_isometry<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    if cols == 0 {
        return ComplexMatrix::zeros(rows, 0);
    }
    let g = ginibre(rng, rows, cols);
    let qr = g.qr();
    let q = qr.q();
    let rr = qr.r();
    let mut out = q.columns(0, cols).into_owned();
    for j in 0..cols {
        let d = rr[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / r(d.norm());
            for i in 0..rows {
                out[(i, j)] *= phase;
            }
        }
    }
    out
}

/// Uniform float in `[lo, hi)`.
pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Random normalized POVM with `n` effects on `C^k`.
pub fn random_povm<R: Rng>(rng: &mut R, k: usize, n: usize) -> Povm {
    let tol = Tolerance::default();
    loop {
        let raw: Vec<ComplexMatrix> = (0..n)
            .map(|_| {
                let rk = rng.random_range(1..=k);
                let g = ginibre(rng, k, rk);
                &g * g.adjoint()
            })
            .collect();
        let total = raw.iter().fold(zeros(k, k), |acc, e| acc + e);
        let Ok(inv) = psd_pinv_sqrt(&total, tol) else {
            continue;
        };
        if min_eigenvalue(&total, tol).unwrap_or(0.0) < 1e-3 {
            continue;
        }
        let effects = raw
            .iter()
            .map(|e| &inv * e * &inv)
            .map(symmetrize)
            .collect();
        return Povm::new(k, effects).expect("k x k effects");
    }
}

fn symmetrize(m: ComplexMatrix) -> ComplexMatrix {
    (&m + m.adjoint()) * r(0.5)
}

fn random_spec<R: Rng>(rng: &mut R) -> AlgebraSpec {
    let s = rng.random_range(1..=2);
    AlgebraSpec::new((0..s).map(|_| rng.random_range(1..=3)).collect()).expect("positive dims")
}

/// Random unital instrument with Kraus ranks `r_{i,s} ∈ {0, 1, 2}`, normalized by
/// `K ↦ K M^{-1/2}` with `M = Σ K*K`. Outcomes listed in `zero` stay zero.
fn generic<R: Rng>(
    rng: &mut R,
    spec: &AlgebraSpec,
    k: usize,
    n: usize,
    zero: &[usize],
) -> Instrument {
    let tol = Tolerance::default();
    let live: Vec<usize> = (0..n).filter(|i| !zero.contains(i)).collect();
    loop {
        let mut ranks: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (0..spec.num_factors())
                    .map(|_| {
                        if zero.contains(&i) {
                            0
                        } else {
                            rng.random_range(0..=2)
                        }
                    })
                    .collect()
            })
            .collect();
        // Σ K*K can only be invertible when Σ r·d ≥ k.
        let capacity = |ranks: &Vec<Vec<usize>>| -> usize {
            ranks
                .iter()
                .flat_map(|row| row.iter().zip(spec.block_dims()).map(|(r, d)| r * d))
                .sum()
        };
        while capacity(&ranks) < k {
            let i = live[rng.random_range(0..live.len())];
            let s = rng.random_range(0..spec.num_factors());
            ranks[i][s] += 1;
        }
        let mut kraus: Vec<Vec<Vec<ComplexMatrix>>> = ranks
            .iter()
            .map(|row| {
                row.iter()
                    .zip(spec.block_dims())
                    .map(|(&rk, &d)| (0..rk).map(|_| ginibre(rng, d, k)).collect())
                    .collect()
            })
            .collect();
        let mut total = zeros(k, k);
        for ops in kraus.iter().flatten().flatten() {
            total += ops.adjoint() * ops;
        }
        if min_eigenvalue(&total, tol).unwrap_or(0.0) < 1e-2 {
            continue;
        }
        let inv = psd_pinv_sqrt(&total, tol).expect("PSD");
        for ops in kraus.iter_mut().flatten().flatten() {
            *ops = &*ops * &inv;
        }
        let maps = kraus
            .into_iter()
            .map(|factors| CpMap::from_kraus(spec, k, &KrausSet { factors }).expect("shapes"))
            .collect();
        return Instrument::new(spec.clone(), k, maps).expect("shared spec");
    }
}

/// `Φᵢ(a) = U* (⊕_{blocks of i} B_b(a)) U` where each block map `B_b` acts on its
/// own coordinates and `U` is unitary.
fn assemble<R: Rng>(
    rng: &mut R,
    spec: &AlgebraSpec,
    n: usize,
    blocks: Vec<(usize, CpMap)>,
) -> Instrument {
    let k: usize = blocks.iter().map(|(_, m)| m.out_dim()).sum();
    let u = random_unitary(rng, k);
    let maps = (0..n)
        .map(|i| {
            CpMap::from_fn(spec, k, |a| {
                let parts: Vec<ComplexMatrix> = blocks
                    .iter()
                    .map(|(o, m)| {
                        let v = m.apply(a).expect("same spec");
                        if *o == i {
                            v
                        } else {
                            v * r(0.0)
                        }
                    })
                    .collect();
                u.adjoint() * block_diag(&parts) * &u
            })
        })
        .collect();
    Instrument::new(spec.clone(), k, maps).expect("shared spec")
}

/// `a ↦ V* a_s V`.
fn factor_compression(spec: &AlgebraSpec, s: usize, v: &ComplexMatrix) -> CpMap {
    let mut factors = vec![Vec::new(); spec.num_factors()];
    factors[s].push(v.clone());
    CpMap::from_kraus(spec, v.ncols(), &KrausSet { factors }).expect("shapes")
}

/// Spectral instrument: each outcome carries a sum of irreducible representations.
fn spectral<R: Rng>(rng: &mut R, spec: &AlgebraSpec, n: usize) -> Instrument {
    let mut blocks = Vec::new();
    let mut k = 0;
    loop {
        let s = rng.random_range(0..spec.num_factors());
        let d = spec.factor_dim(s);
        if k + d > 4 {
            break;
        }
        let i = rng.random_range(0..n);
        blocks.push((i, factor_compression(spec, s, &identity(d))));
        k += d;
        if rng.random_range(0..3) == 0 {
            break;
        }
    }
    if blocks.is_empty() {
        let s = (0..spec.num_factors())
            .min_by_key(|&s| spec.factor_dim(s))
            .expect("nonempty spec");
        blocks.push((
            0,
            factor_compression(spec, s, &identity(spec.factor_dim(s))),
        ));
    }
    assemble(rng, spec, n, blocks)
}

/// Direct sum of pure compressions with nested ranges per `(outcome, factor)`.
fn nested<R: Rng>(rng: &mut R, spec: &AlgebraSpec, n: usize) -> Instrument {
    let frames: Vec<ComplexMatrix> = spec
        .block_dims()
        .iter()
        .map(|&d| random_unitary(rng, d))
        .collect();
    let target = rng.random_range(1..=4);
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < target {
        let s = rng.random_range(0..spec.num_factors());
        let d = spec.factor_dim(s);
        let m = rng.random_range(1..=d.min(target - k));
        let i = rng.random_range(0..n);
        let v = frames[s].columns(0, m).into_owned();
        blocks.push((i, factor_compression(spec, s, &v)));
        k += m;
    }
    assemble(rng, spec, n, blocks)
}

/// Spectral POVM marginal but a non-pure, generic UCP map on some outcome block.
fn block_generic<R: Rng>(rng: &mut R, spec: &AlgebraSpec, n: usize) -> Instrument {
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < 4 {
        let m = rng.random_range(1..=(4 - k).min(2));
        let i = rng.random_range(0..n);
        let single = generic(rng, spec, m, 1, &[]);
        blocks.push((i, single.map(0).clone()));
        k += m;
        if rng.random_range(0..2) == 0 {
            break;
        }
    }
    assemble(rng, spec, n, blocks)
}

/// One nonzero outcome `a ↦ V* a_s V` with `V` a `d_s×k` isometry.
fn pure<R: Rng>(rng: &mut R, spec: &AlgebraSpec, n: usize) -> Instrument {
    let s = rng.random_range(0..spec.num_factors());
    let d = spec.factor_dim(s);
    let k = rng.random_range(1..=d);
    let v = random_isometry(rng, d, k);
    let phi = factor_compression(spec, s, &v);
    let hit = rng.random_range(0..n);
    let maps = (0..n)
        .map(|i| {
            if i == hit {
                phi.clone()
            } else {
                CpMap::zero(spec, k)
            }
        })
        .collect();
    Instrument::new(spec.clone(), k, maps).expect("shared spec")
}

/// Instrument of the seeded test corpus.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub family: &'static str,
    pub seed: u64,
    pub instrument: Instrument,
}

pub const FAMILIES: [&str; 8] = [
    "generic",
    "spectral",
    "nested",
    "luders",
    "naimark",
    "pure",
    "block-generic",
    "zero-outcomes",
];

/// One instrument of `family`, deterministic in `seed`. Sizes stay within
/// `d_s ≤ 3`, at most 2 factors, `k ≤ 4`, `n ≤ 4`.
pub fn corpus_instrument(family: &str, seed: u64) -> Option<Instrument> {
    let mut rng = rng_from_seed(seed);
    let spec = random_spec(&mut rng);
    let n = rng.random_range(1..=4);
    let tol = Tolerance::default();
    let ins = match family {
        "generic" => {
            let k = rng.random_range(1..=4);
            generic(&mut rng, &spec, k, n, &[])
        }
        "zero-outcomes" => {
            let k = rng.random_range(1..=4);
            let n = n.max(2);
            let zero: Vec<usize> = (0..n)
                .filter(|_| rng.random_range(0..2) == 0)
                .take(n - 1)
                .collect();
            generic(&mut rng, &spec, k, n, &zero)
        }
        "spectral" => spectral(&mut rng, &spec, n),
        "nested" => nested(&mut rng, &spec, n),
        "block-generic" => block_generic(&mut rng, &spec, n),
        "pure" => pure(&mut rng, &spec, n),
        "luders" => {
            let k = rng.random_range(1..=3);
            let povm = random_povm(&mut rng, k, n);
            Instrument::luders(&povm, tol).expect("PSD effects")
        }
        "naimark" => {
            let k = rng.random_range(1..=3);
            let povm = random_povm(&mut rng, k, n);
            Instrument::from_povm_naimark(&povm, tol).expect("normalized")
        }
        _ => return None,
    };
    Some(ins)
}

/// `count` instruments cycling through [`FAMILIES`]; entry `j` uses seed `base + j`.
pub fn corpus(count: usize, base: u64) -> Vec<CorpusEntry> {
    (0..count)
        .map(|j| {
            let family = FAMILIES[j % FAMILIES.len()];
            let seed = base + j as u64;
            CorpusEntry {
                family,
                seed,
                instrument: corpus_instrument(family, seed).expect("known family"),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{isometry_defect, unitary_defect};

    #[test]
    fn unitaries_and_isometries() {
        let mut rng = rng_from_seed(3);
        assert!(unitary_defect(&random_unitary(&mut rng, 4)) < 1e-12);
        assert!(isometry_defect(&random_isometry(&mut rng, 5, 2)) < 1e-12);
    }

    #[test]
    fn seeded_streams_repeat() {
        let a = ginibre(&mut rng_from_seed(11), 2, 3);
        let b = ginibre(&mut rng_from_seed(11), 2, 3);
        assert_eq!(a, b);
    }
}
