//! Small instruments with known answers.

use crate::algebra::AlgebraSpec;
use crate::cpmap::{CpMap, KrausSet};
use crate::error::Result;
use crate::instrument::{Instrument, Povm};
use crate::linalg::{c, diag, identity, matrix_unit, r, ComplexMatrix, Tolerance};

/// `{t E11 + (1−t) E22, (1−t) E11 + t E22}` on `C²`.
pub fn luders_povm(t: f64) -> Povm {
    Povm::new(2, vec![diag(&[t, 1.0 - t]), diag(&[1.0 - t, t])]).expect("2x2 effects")
}

/// Lüders instrument of [`luders_povm`] on `M_2`; fails with `NotPsd` outside `[0, 1]`.
pub fn luders(t: f64) -> Result<Instrument> {
    Instrument::luders(&luders_povm(t), Tolerance::default())
}

/// `Φᵢ(a) = a_ii E_ii` on `M_2`, two outcomes.
pub fn diagonal() -> Instrument {
    let spec = AlgebraSpec::full(2);
    let maps = (0..2)
        .map(|i| {
            CpMap::from_kraus(
                &spec,
                2,
                &KrausSet {
                    factors: vec![vec![matrix_unit(2, i, i)]],
                },
            )
            .expect("2x2 Kraus operator")
        })
        .collect();
    Instrument::new(spec, 2, maps).expect("maps share spec")
}

/// Four-outcome POVM on `C²` built from the cube roots of unity.
pub fn omega_povm() -> Povm {
    let w = c(-0.5, 3f64.sqrt() / 2.0);
    let w2 = w * w;
    let s2 = r(2f64.sqrt());
    let sixth = r(1.0 / 6.0);
    let m = |off_upper: crate::linalg::C64, off_lower: crate::linalg::C64| {
        ComplexMatrix::from_row_slice(2, 2, &[r(1.0), s2 * off_upper, s2 * off_lower, r(2.0)])
            * sixth
    };
    Povm::new(
        2,
        vec![diag(&[0.5, 0.0]), m(r(1.0), r(1.0)), m(w2, w), m(w, w2)],
    )
    .expect("2x2 effects")
}

/// Naimark instrument `Φᵢ(a) = aᵢ μ(i)` of [`omega_povm`] over `C(X)`, `|X| = 4`.
pub fn omega_naimark() -> Instrument {
    Instrument::from_povm_naimark(&omega_povm(), Tolerance::default()).expect("normalized POVM")
}

/// `Φ₁(a) = V* a V` with `V` the first two columns of `I₄`, `Φ₂ = 0`.
pub fn pure_4_2() -> Instrument {
    let v = identity(4).columns(0, 2).into_owned();
    let spec = AlgebraSpec::full(4);
    Instrument::new(
        spec.clone(),
        2,
        vec![CpMap::conjugation(&v), CpMap::zero(&spec, 2)],
    )
    .expect("maps share spec")
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 4] = ["luders-t", "diagonal", "omega-povm", "pure-4-2"];

/// Bundled instrument by name; `t` parametrizes `luders-t`. `None` for unknown names.
pub fn by_name(name: &str, t: f64) -> Option<Result<Instrument>> {
    match name {
        "luders-t" => Some(luders(t)),
        "diagonal" => Some(Ok(diagonal())),
        "omega-povm" => Some(Ok(omega_naimark())),
        "pure-4-2" => Some(Ok(pure_4_2())),
        _ => None,
    }
}
