use qinstr::algebra::{irrep_apply, matrix_unit_basis};
use qinstr::linalg::{c, diag, identity, matrix_unit, op_norm, r};
use qinstr::{examples, AlgebraElement, AlgebraSpec, ComplexMatrix, CpMap, KrausSet, Tolerance};

fn tol() -> Tolerance {
    Tolerance::default()
}

fn diagonal_part() -> CpMap {
    let spec = AlgebraSpec::full(2);
    let kraus = KrausSet {
        factors: vec![vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]],
    };
    CpMap::from_kraus(&spec, 2, &kraus).unwrap()
}

fn transpose_map() -> CpMap {
    CpMap::from_fn(&AlgebraSpec::full(2), 2, |a| a.block(0).transpose())
}

#[test]
fn algebra_units_and_irreps() {
    let spec = AlgebraSpec::new(vec![2, 3]).unwrap();
    assert_eq!(matrix_unit_basis(&spec).len(), 13);
    assert_eq!(matrix_unit_basis(&AlgebraSpec::commutative(2)).len(), 2);
    let one = AlgebraElement::identity(&spec);
    assert_eq!(irrep_apply(&spec, 1, &one).unwrap(), identity(3));
    let mixed = AlgebraElement::new(
        spec.clone(),
        vec![diag(&[1.0, 2.0]), diag(&[3.0, 4.0, 5.0])],
    )
    .unwrap();
    assert_eq!(mixed.embed_full(), diag(&[1.0, 2.0, 3.0, 4.0, 5.0]));
    let d4 = AlgebraSpec::commutative(4);
    let a = AlgebraElement::new(d4.clone(), (1..=4).map(|x| diag(&[x as f64])).collect()).unwrap();
    assert_eq!(irrep_apply(&d4, 1, &a).unwrap()[(0, 0)], r(2.0));
}

#[test]
fn bad_algebra_element_shape_is_rejected() {
    let spec = AlgebraSpec::full(2);
    assert!(AlgebraElement::new(spec, vec![identity(3)]).is_err());
    assert!(AlgebraSpec::new(vec![]).is_err());
}

#[test]
fn luders_outcome_map_on_off_diagonal_unit() {
    let ins = examples::luders(0.25).unwrap();
    let e12 = AlgebraElement::matrix_unit(ins.spec(), 0, 0, 1);
    let out = ins.map(0).apply(&e12).unwrap();
    let expect = matrix_unit(2, 0, 1) * r(3f64.sqrt() / 4.0);
    assert!(op_norm(&(out - expect)) < 1e-15);
}

#[test]
fn complete_positivity() {
    assert!(CpMap::identity(3).validate_cp(tol()));
    assert!(CpMap::zero(&AlgebraSpec::full(2), 2).validate_cp(tol()));
    let t = transpose_map();
    assert!(!t.validate_cp(tol()));
    assert!((t.min_choi_eigenvalue(tol()).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn unitality() {
    assert!(CpMap::identity(2).is_unital(tol()));
    assert!(!CpMap::identity(2).scaled(0.5).is_unital(tol()));
    assert!(diagonal_part().is_unital(tol()));
}

#[test]
fn minimal_kraus_forms() {
    let ins = examples::luders(0.25).unwrap();
    let set = ins.map(0).kraus_minimal(tol()).unwrap();
    assert_eq!(set.ranks(), vec![1]);
    let k = &set.factors[0][0];
    // fix the phase on the largest entry
    let phase = k[(1, 1)] / k[(1, 1)].norm();
    let k = k / phase;
    assert!(op_norm(&(k - diag(&[0.5, 3f64.sqrt() / 2.0]))) < 1e-12);

    assert_eq!(
        diagonal_part().kraus_minimal(tol()).unwrap().ranks(),
        vec![2]
    );
    let id = CpMap::identity(3).kraus_minimal(tol()).unwrap();
    assert_eq!(id.ranks(), vec![1]);
}

#[test]
fn kraus_roundtrip() {
    for phi in [
        diagonal_part(),
        CpMap::identity(2),
        examples::omega_naimark().map(2).clone(),
    ] {
        let back = CpMap::from_kraus(
            phi.spec(),
            phi.out_dim(),
            &phi.kraus_minimal(tol()).unwrap(),
        )
        .unwrap();
        assert!(back.distance(&phi) < 1e-12);
    }
}

#[test]
fn compression_to_corner() {
    let w = identity(4).columns(0, 2).into_owned();
    let corner = CpMap::identity(4).compress(&w, tol()).unwrap();
    let a = ComplexMatrix::from_fn(4, 4, |i, j| c(i as f64, j as f64));
    let out = corner
        .apply(&AlgebraElement::new(AlgebraSpec::full(4), vec![a.clone()]).unwrap())
        .unwrap();
    assert_eq!(out, a.view((0, 0), (2, 2)).into_owned());
    assert!(corner.is_unital(tol()));
}

#[test]
fn stinespring_dimensions() {
    let state = CpMap::from_fn(&AlgebraSpec::full(2), 1, |a| {
        ComplexMatrix::from_element(1, 1, a.block(0)[(0, 0)])
    });
    assert_eq!(state.stinespring_minimal(tol()).unwrap().dim(), 2);
    assert_eq!(
        CpMap::identity(2).stinespring_minimal(tol()).unwrap().dim(),
        2
    );
    assert_eq!(diagonal_part().stinespring_minimal(tol()).unwrap().dim(), 4);
}

#[test]
fn purity_of_maps() {
    let w = identity(4).columns(0, 2).into_owned();
    assert!(CpMap::conjugation(&w).is_pure(tol()).unwrap());
    assert!(!diagonal_part().is_pure(tol()).unwrap());
    assert!(!CpMap::zero(&AlgebraSpec::full(2), 2)
        .is_pure(tol())
        .unwrap());
}

#[test]
fn homomorphisms() {
    assert!(CpMap::identity(2).is_homomorphism(tol()));
    assert!(!examples::luders(0.25)
        .unwrap()
        .map(0)
        .is_homomorphism(tol()));
    let spec = AlgebraSpec::new(vec![2, 1]).unwrap();
    let irrep = CpMap::from_fn(&spec, 2, |a| a.block(0).clone());
    assert!(irrep.is_homomorphism(tol()));
}
