//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any fail.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qinstr::certificates::{
    check_certificate, cstar_certificate, decomposable_refutation, dilation_certificate,
    extreme_certificate, rn_certificate, Certificate, Clause,
};
use qinstr::convexity::{
    cp_marginal_cstar_extreme, is_cstar_extreme_full_commutant, is_cstar_extreme_instrument,
    is_extreme, is_extreme_povm, is_extreme_ucp, is_pure_instrument, rn_apply, rn_derivative,
};
use qinstr::dilation::verify_bidilation;
use qinstr::linalg::{frob, is_projection, r, ComplexMatrix};
use qinstr::random::{corpus, random_unitary, rng_from_seed, uniform, CorpusEntry};
use qinstr::{examples, BiDilation, Error, Instrument, Tolerance};
use qinstr_cli::format::{certificate_value, parse_certificate, to_text};
use qinstr_cli::run;
use qinstr_oracles::{commutant_bruteforce, dilation_generators, nonextreme_search, span_distance};
use serde_json::Value;

const CORPUS_SIZE: usize = 240;
const CORPUS_BASE: u64 = 1000;
const RESIDUAL: f64 = 1e-8;
const RN_RECOVERY: f64 = 1e-6;
const EIGENVALUE: f64 = 1e-6;
const EXAMPLE_SECONDS: f64 = 0.1;
const SUITE_SECONDS: f64 = 60.0;
const SEARCH_TRIALS: usize = 10_000;

type Verdict = Result<String, String>;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qinstr-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir.join(name)
}

/// Runs the CLI in-process; returns exit code, parsed JSON report, seconds.
fn cli(args: &[&str]) -> (i32, Value, f64) {
    let mut argv = vec!["qinstr", "--json"];
    argv.extend_from_slice(args);
    let t = Instant::now();
    let out = run(argv);
    let secs = t.elapsed().as_secs_f64();
    let v = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
    (out.code, v, secs)
}

fn check_cert_file(path: &Path, ins_args: &[&str]) -> Result<(), String> {
    let p = path.to_str().expect("utf-8 path");
    let mut args = vec!["check-cert", p];
    args.extend_from_slice(ins_args);
    let (code, v, _) = cli(&args);
    ensure(
        code == 0 && v["pass"] == Value::Bool(true),
        format!("check-cert failed: {v}"),
    )
}

fn criterion_1() -> Verdict {
    let (code, v, t1) = cli(&["extreme", "luders-t", "--t", "0.25"]);
    ensure(
        code == 0 && v["extreme"] == Value::Bool(true),
        format!("extreme at 1/4: {v}"),
    )?;
    let (code, v, t2) = cli(&["cstar-extreme", "luders-t", "--t", "0.25"]);
    ensure(
        code == 1 && v["cstar-extreme"] == Value::Bool(false),
        format!("cstar at 1/4: {v}"),
    )?;
    let lam = v["eigenvalue"].as_f64().ok_or("no eigenvalue")?;
    ensure(
        (lam - 0.25).abs() <= EIGENVALUE,
        format!("eigenvalue {lam}"),
    )?;
    let path = scratch("luders-half.json");
    let (code, v, t3) = cli(&[
        "extreme",
        "luders-t",
        "--t",
        "0.5",
        "--out",
        path.to_str().unwrap(),
    ]);
    ensure(
        code == 1 && v["extreme"] == Value::Bool(false),
        format!("extreme at 1/2: {v}"),
    )?;
    check_cert_file(&path, &["luders-t", "--t", "0.5"])?;
    let worst = t1.max(t2).max(t3);
    ensure(
        worst < EXAMPLE_SECONDS,
        format!("slowest command {worst:.3}s"),
    )?;
    Ok(format!("eigenvalue {lam:.6}, slowest {worst:.4}s"))
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let path = scratch("diagonal-cstar.json");
    let (code, v, _) = cli(&["cstar-extreme", "diagonal", "--out", path.to_str().unwrap()]);
    ensure(
        code == 0 && v["cstar-extreme"] == Value::Bool(true),
        format!("{v}"),
    )?;
    check_cert_file(&path, &["diagonal"])?;
    let ins = examples::diagonal();
    ensure(
        !cp_marginal_cstar_extreme(&ins, tol()).map_err(|e| e.to_string())?,
        "cp marginal C*-extreme",
    )?;
    ensure(
        !is_extreme_ucp(&ins.cp_marginal(), tol()).map_err(|e| e.to_string())?,
        "cp marginal extreme",
    )?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < EXAMPLE_SECONDS, format!("{secs:.3}s"))?;
    Ok(format!("{secs:.4}s"))
}

fn criterion_3() -> Verdict {
    let t = Instant::now();
    ensure(
        is_extreme_povm(&examples::omega_povm(), tol()).map_err(|e| e.to_string())?,
        "POVM not extreme",
    )?;
    let ins = examples::omega_naimark();
    let ext = is_extreme(&ins, tol()).map_err(|e| e.to_string())?;
    ensure(ext.extreme, "Naimark instrument not extreme")?;
    let rep = verify_bidilation(&ins, &ext.dilation, tol());
    ensure(
        rep.passes && rep.reconstruction_residual <= RESIDUAL,
        "dilation residual",
    )?;
    let path = scratch("omega-refutation.json");
    let (code, v, _) = cli(&[
        "decomposable",
        "omega-povm",
        "--out",
        path.to_str().unwrap(),
    ]);
    ensure(
        code == 1 && v["decomposable"] == Value::Bool(false),
        format!("{v}"),
    )?;
    check_cert_file(&path, &["omega-povm"])?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < EXAMPLE_SECONDS, format!("{secs:.3}s"))?;
    Ok(format!(
        "rank {} of {}, {secs:.4}s",
        ext.rank, ext.commutant_dim
    ))
}

fn criterion_4() -> Verdict {
    let t = Instant::now();
    let ins = examples::pure_4_2();
    ensure(
        is_pure_instrument(&ins, tol()).map_err(|e| e.to_string())?,
        "not pure",
    )?;
    let dims = BiDilation::minimal(&ins, tol())
        .map_err(|e| e.to_string())?
        .dims(tol());
    ensure(dims == (4, 4, 2), format!("dims {dims:?}"))?;
    let (code, v, _) = cli(&["cstar-extreme", "pure-4-2"]);
    ensure(
        code == 0 && v["cstar-extreme"] == Value::Bool(true),
        format!("{v}"),
    )?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < EXAMPLE_SECONDS, format!("{secs:.3}s"))?;
    Ok(format!("dims {dims:?}, {secs:.4}s"))
}

fn criterion_5(corpus: &[CorpusEntry]) -> Verdict {
    let mut worst: f64 = 0.0;
    for e in corpus {
        let ins = &e.instrument;
        let dil = BiDilation::minimal(ins, tol())
            .map_err(|err| format!("{} {}: {err}", e.family, e.seed))?;
        let rep = verify_bidilation(ins, &dil, tol());
        let scale = ins.scale().max(1.0);
        let res = rep
            .reconstruction_residual
            .max(rep.commutation_residual)
            .max(rep.spectral_residual);
        worst = worst.max(res / scale);
        ensure(
            rep.passes,
            format!("{} {}: report {rep:?}", e.family, e.seed),
        )?;
        ensure(
            res <= RESIDUAL * scale,
            format!("{} {}: residual {res:.3e}", e.family, e.seed),
        )?;
        ensure(
            rep.minimality_dim == rep.dim,
            format!("{} {}: not minimal", e.family, e.seed),
        )?;
        if ins.is_unital(tol()) {
            ensure(
                rep.isometry_defect <= RESIDUAL,
                format!("{} {}: V*V defect", e.family, e.seed),
            )?;
        }
    }
    Ok(format!(
        "{} instruments, worst scaled residual {worst:.2e}",
        corpus.len()
    ))
}

/// `⊕ X_b` with each `X_b = U diag(λ) U*`, `λ` uniform in `[0, 1]`.
fn random_contraction_coords(dil: &BiDilation, seed: u64) -> Vec<ComplexMatrix> {
    let mut rng = rng_from_seed(seed);
    dil.blocks()
        .iter()
        .map(|b| {
            let u = random_unitary(&mut rng, b.rank);
            let lam: Vec<f64> = (0..b.rank).map(|_| uniform(&mut rng, 0.0, 1.0)).collect();
            u.adjoint() * qinstr::linalg::diag(&lam) * &u
        })
        .collect()
}

fn criterion_6(corpus: &[CorpusEntry]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for (j, e) in corpus.iter().enumerate() {
        let ins = &e.instrument;
        let dil = BiDilation::minimal(ins, tol()).map_err(|err| err.to_string())?;
        let d = dil.embed_commutant(&random_contraction_coords(&dil, 7 + j as u64));
        let jins =
            rn_apply(ins, &d, tol()).map_err(|err| format!("{} {}: {err}", e.family, e.seed))?;
        let rn = rn_derivative(&jins, ins, tol())
            .map_err(|err| format!("{} {}: {err}", e.family, e.seed))?;
        let delta = frob(&(&rn.d - &d));
        worst = worst.max(delta);
        ensure(
            delta <= RN_RECOVERY,
            format!("{} {}: ‖ΔD‖ = {delta:.3e}", e.family, e.seed),
        )?;
        pairs += 1;
    }
    Ok(format!("{pairs} pairs, worst ‖ΔD‖ {worst:.2e}"))
}

fn criterion_7(corpus: &[CorpusEntry]) -> Verdict {
    let t = tol();
    let mut counts = [0usize; 6];
    for e in corpus {
        let ins = &e.instrument;
        let id = format!("{} {}", e.family, e.seed);
        let err = |x: Error| format!("{id}: {x}");
        let ext = is_extreme(ins, t).map_err(err)?.extreme;
        let cs = is_cstar_extreme_instrument(ins, t)
            .map_err(err)?
            .cstar_extreme;
        let mu = ins.povm_marginal();
        let projective = mu.effects().iter().all(|x| is_projection(x, t));
        let dil = BiDilation::minimal(ins, t).map_err(err)?;
        let (n, cp, _) = dil.dims(t);
        if cs {
            counts[0] += 1;
            ensure(ext, format!("{id}: C*-extreme but not extreme"))?;
            ensure(
                projective,
                format!("{id}: C*-extreme with a non-projection effect"),
            )?;
            ensure(n == cp, format!("{id}: C*-extreme with dims {n} != {cp}"))?;
        }
        if ext && ins.has_commutative_range(t) {
            counts[1] += 1;
            ensure(
                projective,
                format!("{id}: extreme, commutative range, not projective"),
            )?;
        }
        let povm_cs = is_cstar_extreme_instrument(&Instrument::from_povm_trivial(&mu), t)
            .map_err(err)?
            .cstar_extreme;
        let cp_cs = cp_marginal_cstar_extreme(ins, t).map_err(err)?;
        if povm_cs && cp_cs {
            counts[2] += 1;
            ensure(
                cs,
                format!("{id}: both marginals C*-extreme, instrument not"),
            )?;
        }
        if ins.is_spectral(t) {
            counts[3] += 1;
            ensure(
                ext && cs && ins.is_decomposable(t),
                format!("{id}: spectral but not ext/C*-ext/decomposable"),
            )?;
        }
        counts[4] += ext as usize;
        counts[5] += 1;
    }
    Ok(format!(
        "{} instruments: {} C*-extreme, {} extreme, {} extreme with commutative range, {} with C*-extreme marginals, {} spectral",
        counts[5], counts[0], counts[4], counts[1], counts[2], counts[3]
    ))
}

fn criterion_8(corpus: &[CorpusEntry]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut searched = 0;
    let mut found = 0;
    let mut non_extreme = 0;
    for e in corpus {
        let ins = &e.instrument;
        let id = format!("{} {}", e.family, e.seed);
        let dil = BiDilation::minimal(ins, tol()).map_err(|x| x.to_string())?;
        let brute = commutant_bruteforce(&dilation_generators(&dil), tol());
        let dist = span_distance(&brute, &dil.commutant_basis().elements, tol());
        worst = worst.max(dist);
        ensure(
            dist <= RESIDUAL,
            format!(
                "{id}: span distance {dist:.3e} (brute {}, structured {})",
                brute.len(),
                dil.commutant_dim()
            ),
        )?;
        let small = ins.spec().block_dims().iter().all(|&d| d <= 3)
            && ins.out_dim() <= 3
            && ins.outcomes() <= 3;
        if small {
            let ext = is_extreme(ins, tol()).map_err(|x| x.to_string())?.extreme;
            let pair = nonextreme_search(ins, e.seed, if ext { SEARCH_TRIALS } else { 100 }, tol());
            if ext {
                searched += 1;
                ensure(
                    pair.is_none(),
                    format!("{id}: search refuted an extreme verdict"),
                )?;
            } else {
                non_extreme += 1;
                found += pair.is_some() as usize;
            }
        }
    }
    ensure(
        found == non_extreme,
        format!("search found pairs for only {found} of {non_extreme} non-extreme instances"),
    )?;
    Ok(format!(
        "worst span distance {worst:.2e}; {searched} extreme instances searched with {SEARCH_TRIALS} trials each; pairs found for all {non_extreme} non-extreme ones"
    ))
}

fn criterion_9(corpus: &[CorpusEntry]) -> Verdict {
    let mut agree = 0;
    for e in corpus {
        let id = format!("{} {}", e.family, e.seed);
        let block =
            is_cstar_extreme_instrument(&e.instrument, tol()).map_err(|x| format!("{id}: {x}"))?;
        let full = is_cstar_extreme_full_commutant(&e.instrument, tol())
            .map_err(|x| format!("{id}: {x}"))?;
        ensure(
            block.cstar_extreme == full,
            format!("{id}: outcome-block {} vs full {full}", block.cstar_extreme),
        )?;
        agree += 1;
    }
    Ok(format!("{agree} instruments agree, no theory violations"))
}

fn roundtrip_check(cert: &Certificate, ins: &Instrument, id: &str) -> Result<(), String> {
    check_certificate(cert, ins, tol()).map_err(|x| format!("{id} {}: {x}", cert.kind()))?;
    let text = to_text(&certificate_value(cert));
    let back = parse_certificate(&text).map_err(|x| format!("{id} {}: {x}", cert.kind()))?;
    check_certificate(&back, ins, tol())
        .map_err(|x| format!("{id} {} after roundtrip: {x}", cert.kind()))?;
    Ok(())
}

fn expect_clause(cert: &Certificate, ins: &Instrument, clause: Clause) -> Result<(), String> {
    match check_certificate(cert, ins, tol()) {
        Err(Error::CheckFailed { clause: got, .. }) if got == clause => Ok(()),
        other => Err(format!(
            "tampered {} gave {other:?}, expected {clause}",
            cert.kind()
        )),
    }
}

fn criterion_10(corpus: &[CorpusEntry]) -> Verdict {
    let mut emitted = 0;
    for (j, e) in corpus.iter().enumerate() {
        let ins = &e.instrument;
        let id = format!("{} {}", e.family, e.seed);
        let mut certs = vec![
            dilation_certificate(ins, tol()).map_err(|x| x.to_string())?,
            extreme_certificate(ins, tol()).map_err(|x| x.to_string())?,
            cstar_certificate(ins, tol()).map_err(|x| x.to_string())?,
        ];
        certs.extend(decomposable_refutation(ins, tol()));
        let dil = BiDilation::minimal(ins, tol()).map_err(|x| x.to_string())?;
        let d = dil.embed_commutant(&random_contraction_coords(&dil, 31 + j as u64));
        let jins = rn_apply(ins, &d, tol()).map_err(|x| x.to_string())?;
        certs.push(rn_certificate(&jins, ins, tol()).map_err(|x| x.to_string())?);
        for cert in &certs {
            roundtrip_check(cert, ins, &id)?;
            emitted += 1;
        }
    }
    let fixtures = tampered_fixtures()?;
    Ok(format!("{emitted} corpus certificates pass; {fixtures} tampered fixtures rejected with their clause"))
}

fn tampered_fixtures() -> Result<usize, String> {
    let e = |x: Error| x.to_string();
    let diagonal = examples::diagonal();
    let quarter = examples::luders(0.25).map_err(e)?;
    let half = examples::luders(0.5).map_err(e)?;
    let mut n = 0;

    let Certificate::Dilation(dil) = dilation_certificate(&diagonal, tol()).map_err(e)? else {
        return Err("dilation kind".into());
    };
    let scaled = dil.with_v(dil.v() * r(2.0)).map_err(e)?;
    expect_clause(&Certificate::Dilation(scaled), &diagonal, Clause::Dilation)?;
    n += 1;

    let Certificate::Extreme {
        dilation,
        commutant_dim,
        ..
    } = extreme_certificate(&quarter, tol()).map_err(e)?
    else {
        return Err("extreme kind".into());
    };
    expect_clause(
        &Certificate::Extreme {
            dilation,
            rank: commutant_dim - 1,
            commutant_dim,
        },
        &quarter,
        Clause::Rank,
    )?;
    n += 1;

    let Certificate::NonExtreme { plus, .. } = extreme_certificate(&half, tol()).map_err(e)? else {
        return Err("non_extreme kind".into());
    };
    expect_clause(
        &Certificate::NonExtreme {
            minus: plus.clone(),
            plus,
        },
        &half,
        Clause::Average,
    )?;
    n += 1;

    let Certificate::CstarExtreme(mut dec) = cstar_certificate(&diagonal, tol()).map_err(e)? else {
        return Err("cstar_extreme kind".into());
    };
    dec.unitary *= r(2.0);
    expect_clause(
        &Certificate::CstarExtreme(dec),
        &diagonal,
        Clause::NotUnitary,
    )?;
    n += 1;

    let Certificate::NotCstarExtreme {
        outcome,
        eigenvector,
        ..
    } = cstar_certificate(&quarter, tol()).map_err(e)?
    else {
        return Err("not_cstar_extreme kind".into());
    };
    expect_clause(
        &Certificate::NotCstarExtreme {
            outcome,
            eigenvalue: 1.0,
            eigenvector,
        },
        &quarter,
        Clause::Eigenvalue,
    )?;
    n += 1;

    let Certificate::Rn {
        dominated,
        dilation,
        d,
    } = rn_certificate(&quarter.scaled(0.5), &quarter, tol()).map_err(e)?
    else {
        return Err("rn kind".into());
    };
    expect_clause(
        &Certificate::Rn {
            dominated,
            dilation,
            d: d * r(3.0),
        },
        &quarter,
        Clause::Contraction,
    )?;
    n += 1;

    let Some(Certificate::DecomposableRefutation { outcome, mut unit }) =
        decomposable_refutation(&quarter, tol())
    else {
        return Err("decomposable_refutation kind".into());
    };
    unit.row = 0;
    unit.col = 0;
    expect_clause(
        &Certificate::DecomposableRefutation { outcome, unit },
        &quarter,
        Clause::ProductIdentity,
    )?;
    n += 1;
    Ok(n)
}

type Criterion<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn main() {
    let start = Instant::now();
    let corpus = corpus(CORPUS_SIZE, CORPUS_BASE);
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        (
            "Lüders family at t = 1/4 and t = 1/2",
            Box::new(criterion_1),
        ),
        ("diagonal example", Box::new(criterion_2)),
        ("ω-POVM example", Box::new(criterion_3)),
        ("pure 4/2 example", Box::new(criterion_4)),
        (
            "bi-dilation contract on the corpus",
            Box::new(|| criterion_5(&corpus)),
        ),
        ("Radon-Nikodym roundtrip", Box::new(|| criterion_6(&corpus))),
        ("implication suite", Box::new(|| criterion_7(&corpus))),
        ("oracle equivalence", Box::new(|| criterion_8(&corpus))),
        (
            "C*-extremity path agreement",
            Box::new(|| criterion_9(&corpus)),
        ),
        ("certificates", Box::new(|| criterion_10(&corpus))),
    ];
    let mut failed = 0;
    for (j, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = f();
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail} [{secs:.2}s]", j + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {detail} [{secs:.2}s]", j + 1);
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    let ok = total < SUITE_SECONDS;
    if !ok {
        failed += 1;
    }
    println!(
        "{}  wall clock {total:.2}s (limit {SUITE_SECONDS}s)",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::fs::remove_dir_all(scratch("x").parent().expect("scratch dir"));
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
