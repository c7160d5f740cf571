use std::fs;
use std::path::{Path, PathBuf};

use qinstr::{examples, Instrument};
use qinstr_cli::format::{instrument_value, parse_instrument, to_text, FormatError};
use qinstr_cli::{run, Outcome, EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK};

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn qinstr(args: &[&str]) -> Outcome {
    let mut argv = vec!["qinstr"];
    argv.extend_from_slice(args);
    run(argv)
}

fn fixture(name: &str) -> String {
    fs::read_to_string(manifest(&format!("fixtures/{name}.json"))).unwrap()
}

#[test]
fn bundled_luders_file_is_the_luders_instrument() {
    let ins = parse_instrument(&fixture("luders-t")).unwrap();
    assert!(ins.distance(&examples::luders(0.25).unwrap()) < 1e-15);
}

#[test]
fn fixtures_roundtrip() {
    for name in examples::NAMES {
        let ins = parse_instrument(&fixture(name)).unwrap();
        let text = to_text(&instrument_value(&ins));
        let again = parse_instrument(&text).unwrap();
        assert_eq!(again.distance(&ins), 0.0, "{name}");
        assert_eq!(to_text(&instrument_value(&again)), text, "{name}");
    }
}

#[test]
fn empty_maps_list_is_the_zero_instrument() {
    let text = r#"{"version":1,"algebra":{"blocks":[2,1]},"output_dim":3,"outcomes":2,"maps":[]}"#;
    let ins = parse_instrument(text).unwrap();
    let zero = Instrument::zero(ins.spec(), 3, 2);
    assert_eq!(ins.outcomes(), 2);
    assert_eq!(ins.distance(&zero), 0.0);
}

#[test]
fn malformed_complex_scalar_reports_its_path() {
    let text = r#"{"version":1,"algebra":{"blocks":[1]},"output_dim":1,"outcomes":1,
        "maps":[{"outcome":1,"form":"choi","factors":[[[[1.0]]]]}]}"#;
    match parse_instrument(text) {
        Err(FormatError::Parse { path, .. }) => assert_eq!(path, "$.maps[0].factors[0][0][0]"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn outcomes_are_one_based() {
    let text = r#"{"version":1,"algebra":{"blocks":[1]},"output_dim":1,"outcomes":1,
        "maps":[{"outcome":0,"form":"choi","factors":[[[[1.0,0.0]]]]}]}"#;
    assert!(matches!(
        parse_instrument(text),
        Err(FormatError::Parse { .. })
    ));
}

#[test]
fn kraus_form_matches_choi_form() {
    // diagonal example: K_i = E_ii on M_2
    let text = r#"{"version":1,"algebra":{"blocks":[2]},"output_dim":2,"outcomes":2,"maps":[
        {"outcome":1,"form":"kraus","factors":[[[[[1,0],[0,0]],[[0,0],[0,0]]]]]},
        {"outcome":2,"form":"kraus","factors":[[[[[0,0],[0,0]],[[0,0],[1,0]]]]]}]}"#;
    let ins = parse_instrument(text).unwrap();
    assert!(ins.distance(&examples::diagonal()) < 1e-15);
}

#[test]
fn malformed_file_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"version\": 1, \"algebra\": ").unwrap();
    let out = qinstr(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("line 1"), "{}", out.stderr);
}

#[test]
fn unknown_example_exits_with_input_error() {
    assert_eq!(qinstr(&["extreme", "no-such-thing"]).code, EXIT_INPUT);
    assert_eq!(qinstr(&["example", "no-such-thing"]).code, EXIT_INPUT);
}

#[test]
fn extremality_of_unnormalized_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.json");
    let half = examples::diagonal().scaled(0.5);
    fs::write(&path, to_text(&instrument_value(&half))).unwrap();
    assert_eq!(
        qinstr(&["extreme", path.to_str().unwrap()]).code,
        EXIT_INPUT
    );
    assert_eq!(qinstr(&["validate", path.to_str().unwrap()]).code, EXIT_OK);
}

#[test]
fn extreme_luders_quarter() {
    let out = qinstr(&["extreme", "luders-t", "--t", "0.25"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("extreme: true\n"));
}

#[test]
fn extreme_luders_half_is_negative() {
    let out = qinstr(&["extreme", "luders-t", "--t", "0.5"]);
    assert_eq!(out.code, EXIT_NEGATIVE);
    assert!(out.stdout.contains("extreme: false\n"));
    assert!(out.stdout.contains("certificate: non_extreme\n"));
}

#[test]
fn cstar_extreme_diagonal_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    let out = qinstr(&["cstar-extreme", "diagonal", "--out", cert.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("cstar-extreme: true\n"));
    let check = qinstr(&["check-cert", cert.to_str().unwrap(), "diagonal"]);
    assert_eq!(check.code, EXIT_OK, "{}", check.stdout);
}

#[test]
fn decomposable_omega_refuted() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("r.json");
    let out = qinstr(&[
        "decomposable",
        "omega-povm",
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_NEGATIVE);
    assert!(out.stdout.contains("decomposable: false\n"));
    assert_eq!(
        qinstr(&["check-cert", cert.to_str().unwrap(), "omega-povm"]).code,
        EXIT_OK
    );
}

#[test]
fn certificate_for_another_instrument_fails_check() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("r.json");
    qinstr(&["decomposable", "luders-t", "--out", cert.to_str().unwrap()]);
    let out = qinstr(&["check-cert", cert.to_str().unwrap(), "diagonal"]);
    assert_eq!(out.code, EXIT_NEGATIVE);
    assert!(
        out.stdout.contains("clause: ProductIdentity\n"),
        "{}",
        out.stdout
    );
}

#[test]
fn rn_of_half_instrument() {
    let dir = tempfile::tempdir().unwrap();
    let half = dir.path().join("half.json");
    let j = examples::luders(0.25).unwrap().scaled(0.5);
    fs::write(&half, to_text(&instrument_value(&j))).unwrap();
    let cert = dir.path().join("rn.json");
    let out = qinstr(&[
        "rn",
        half.to_str().unwrap(),
        "luders-t",
        "--out",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_OK, "{}{}", out.stdout, out.stderr);
    assert!(out
        .stdout
        .contains("derivative spectrum: [0.500000, 0.500000]\n"));
    assert_eq!(
        qinstr(&["check-cert", cert.to_str().unwrap(), "luders-t"]).code,
        EXIT_OK
    );
    // the other direction is not dominated
    let back = qinstr(&["rn", "luders-t", half.to_str().unwrap()]);
    assert_eq!(back.code, EXIT_NEGATIVE);
}

#[test]
fn disjoint_and_pure_and_spectral() {
    assert_eq!(qinstr(&["pure", "pure-4-2"]).code, EXIT_OK);
    assert_eq!(qinstr(&["pure", "diagonal"]).code, EXIT_NEGATIVE);
    assert_eq!(qinstr(&["spectral", "diagonal"]).code, EXIT_NEGATIVE);
    assert_eq!(
        qinstr(&["disjoint", "diagonal", "luders-t"]).code,
        EXIT_NEGATIVE
    );
}

#[test]
fn marginals_and_dilate_report() {
    let out = qinstr(&["marginals", "luders-t"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out
        .stdout
        .contains("effect 1: [+0.250000+0.000000i +0.000000+0.000000i]"));
    let out = qinstr(&["dilate", "pure-4-2"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("dilation dims: 4 4 2\n"));
}

#[test]
fn analyze_matches_golden_reports() {
    for name in examples::NAMES {
        let out = qinstr(&["analyze", name]);
        assert_eq!(out.code, EXIT_OK);
        let golden = fs::read_to_string(manifest(&format!("tests/golden/{name}.txt"))).unwrap();
        assert_eq!(out.stdout, golden, "{name}");
    }
}

#[test]
fn reports_are_stable_across_runs() {
    let a = qinstr(&["analyze", "omega-povm", "--json", "--seed", "5"]);
    let b = qinstr(&["analyze", "omega-povm", "--json", "--seed", "5"]);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a.stdout).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["tolerance"], 1e-8);
}

#[test]
fn analyze_certificates_pass_check_cert() {
    for name in examples::NAMES {
        let dir = tempfile::tempdir().unwrap();
        let out = qinstr(&["analyze", name, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.code, EXIT_OK);
        let mut n = 0;
        for entry in fs::read_dir(dir.path()).unwrap() {
            let path = entry.unwrap().path();
            let check = qinstr(&["check-cert", path.to_str().unwrap(), name]);
            assert_eq!(
                check.code,
                EXIT_OK,
                "{name} {}: {}",
                path.display(),
                check.stdout
            );
            n += 1;
        }
        assert!(n >= 3, "{name}: {n} certificates");
    }
}

#[test]
fn example_command_emits_parseable_instrument() {
    let out = qinstr(&["example", "luders-t", "--t", "0.5"]);
    assert_eq!(out.code, EXIT_OK);
    let ins = parse_instrument(&out.stdout).unwrap();
    assert!(ins.distance(&examples::luders(0.5).unwrap()) < 1e-15);
    assert_eq!(
        qinstr(&["example", "luders-t", "--t", "1.5"]).code,
        EXIT_INPUT
    );
}

#[test]
fn invalid_tolerance_is_rejected() {
    assert_eq!(
        qinstr(&["pure", "diagonal", "--tol", "-1"]).code,
        EXIT_INPUT
    );
}
