//! Command-line workbench over the `qinstr` library.
//!
//! [`run`] does all the work and returns the exit code with the captured
//! output, so the binary is a thin wrapper and tests need no subprocesses.

pub mod format;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use qinstr::certificates::{
    check_certificate, cstar_certificate, decomposable_refutation, dilation_certificate,
    extreme_certificate, rn_certificate, Certificate,
};
use qinstr::convexity::{
    cp_marginal_cstar_extreme, dominated_pair_check, is_extreme_povm, is_pure_instrument,
    rn_derivative, spectral_disjointness,
};
use qinstr::dilation::verify_bidilation;
use qinstr::linalg::herm_eig;
use qinstr::{examples, BiDilation, ComplexMatrix, Error, Instrument, Tolerance};

use format::{
    certificate_value, instrument_value, matrix_value, parse_certificate, to_text, FormatError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_THEORY: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "qinstr",
    version,
    about = "Verification workbench for quantum instruments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base tolerance for all numerical tests.
    #[arg(long, global = true, default_value_t = Tolerance::DEFAULT_EPS)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Output file (instruments, certificates) or directory (`analyze`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Parameter of the `luders-t` example.
    #[arg(long, global = true, default_value_t = 0.25)]
    t: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check complete positivity and normalization.
    Validate { instrument: String },
    /// POVM and CP marginals.
    Marginals { instrument: String },
    /// Minimal bi-dilation and its sub-dilation dimensions.
    Dilate { instrument: String },
    /// Extreme point of the convex set of unital instruments.
    Extreme { instrument: String },
    /// C*-extreme point, with a decomposition or a refutation.
    CstarExtreme { instrument: String },
    /// Minimal bi-dilation has a trivial commutant.
    Pure { instrument: String },
    /// Every I(A) is a *-homomorphism and I(X) is unital.
    Spectral { instrument: String },
    /// Every outcome map factors as the CP marginal times the effect.
    Decomposable { instrument: String },
    /// Radon-Nikodym derivative of `dominated` with respect to `instrument`.
    Rn {
        dominated: String,
        instrument: String,
    },
    /// Spectral disjointness of the minimal bi-dilations of two instruments.
    Disjoint { a: String, b: String },
    /// Full battery; writes certificates into `--out` if given.
    Analyze { instrument: String },
    /// Recheck a certificate file against an instrument.
    CheckCert {
        certificate: String,
        instrument: String,
    },
    /// Emit a bundled instrument: luders-t, diagonal, omega-povm, pure-4-2.
    Example { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn input_error(msg: impl std::fmt::Display) -> Self {
        Outcome {
            code: EXIT_INPUT,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

fn lib_error(e: Error) -> Outcome {
    match e {
        Error::TheoryViolation(_) => Outcome {
            code: EXIT_THEORY,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
        _ => Outcome::input_error(e),
    }
}

/// Ordered report lines, rendered as `key: value` text or one JSON object.
struct Report {
    entries: Vec<(String, Value, String)>,
}

impl Report {
    fn new(command: &str, tol: Tolerance, seed: u64) -> Self {
        let mut r = Report {
            entries: Vec::new(),
        };
        r.text("library", format!("qinstr {}", env!("CARGO_PKG_VERSION")));
        r.text("command", command);
        r.push("tolerance", json!(tol.eps()), format!("{:e}", tol.eps()));
        r.push("seed", json!(seed), seed.to_string());
        r
    }

    fn push(&mut self, key: &str, value: Value, text: String) {
        self.entries.push((key.to_string(), value, text));
    }

    fn text(&mut self, key: &str, value: impl Into<String>) {
        let s = value.into();
        self.push(key, json!(s), s);
    }

    fn flag(&mut self, key: &str, value: bool) {
        self.push(key, json!(value), value.to_string());
    }

    fn count(&mut self, key: &str, value: usize) {
        self.push(key, json!(value), value.to_string());
    }

    /// Residuals print as a power-of-ten bound so text reports stay stable.
    fn residual(&mut self, key: &str, value: f64) {
        self.push(key, json!(value), bound(value));
    }

    fn render(&self, json_mode: bool) -> String {
        if json_mode {
            let mut obj = Map::new();
            for (k, v, _) in &self.entries {
                obj.insert(k.replace(' ', "_"), v.clone());
            }
            to_text(&Value::Object(obj))
        } else {
            self.entries
                .iter()
                .map(|(k, _, t)| format!("{k}: {t}\n"))
                .collect()
        }
    }
}

fn bound(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let e = x.log10().ceil() as i32;
    format!("< 1e{e}")
}

fn matrix_text(m: &ComplexMatrix) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|p| {
            let cells: Vec<String> = (0..m.ncols())
                .map(|q| {
                    let z = m[(p, q)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            format!("[{}]", cells.join(" "))
        })
        .collect();
    rows.join(" ")
}

struct Ctx {
    tol: Tolerance,
    seed: u64,
    json: bool,
    out: Option<PathBuf>,
    t: f64,
}

impl Ctx {
    /// A path to an instrument file, or the name of a bundled example.
    fn load(&self, arg: &str) -> Result<Instrument, Outcome> {
        let path = Path::new(arg);
        if path.exists() {
            let text = fs::read_to_string(path)
                .map_err(|e| Outcome::input_error(format!("{arg}: {e}")))?;
            return format::parse_instrument(&text).map_err(|e| match e {
                FormatError::Shape(err) => lib_error(err),
                other => Outcome::input_error(format!("{arg}: {other}")),
            });
        }
        match examples::by_name(arg, self.t) {
            Some(Ok(ins)) => Ok(ins),
            Some(Err(e)) => Err(lib_error(e)),
            None => Err(Outcome::input_error(format!(
                "{arg}: no such file or bundled example ({})",
                examples::NAMES.join(", ")
            ))),
        }
    }

    fn write(&self, path: &Path, text: &str) -> Result<(), Outcome> {
        fs::write(path, text).map_err(|e| Outcome::input_error(format!("{}: {e}", path.display())))
    }

    fn finish(&self, report: &Report, code: i32) -> Outcome {
        Outcome {
            code,
            stdout: report.render(self.json),
            stderr: String::new(),
        }
    }

    /// Writes `cert` to `--out` when given.
    fn emit(&self, report: &mut Report, cert: &Certificate) -> Result<(), Outcome> {
        report.text("certificate", cert.kind());
        if let Some(path) = &self.out {
            self.write(path, &to_text(&certificate_value(cert)))?;
            report.text("written", path.display().to_string());
        }
        Ok(())
    }
}

fn verdict(b: bool) -> i32 {
    if b {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

/// Parses `argv` (including the program name) and runs one command.
pub fn run<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let tol = match Tolerance::new(cli.tol) {
        Ok(t) => t,
        Err(e) => return lib_error(e),
    };
    let ctx = Ctx {
        tol,
        seed: cli.seed,
        json: cli.json,
        out: cli.out,
        t: cli.t,
    };
    match dispatch(&ctx, cli.command) {
        Ok(o) | Err(o) => o,
    }
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<Outcome, Outcome> {
    let tol = ctx.tol;
    match command {
        Command::Validate { instrument } => {
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("validate", tol, ctx.seed);
            describe(&mut r, &ins);
            let v = ins.validate(tol, false);
            r.flag("completely positive", v.cp_violations.is_empty());
            for (i, lo) in &v.cp_violations {
                r.push(
                    &format!("outcome {} min choi eigenvalue", i + 1),
                    json!(lo),
                    format!("{lo:.3e}"),
                );
            }
            r.flag("normalized", ins.is_unital(tol));
            r.residual("normalization defect", v.normalization_defect);
            Ok(ctx.finish(&r, verdict(v.passes)))
        }
        Command::Marginals { instrument } => {
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("marginals", tol, ctx.seed);
            describe(&mut r, &ins);
            for (i, e) in ins.povm_marginal().effects().iter().enumerate() {
                r.push(
                    &format!("effect {}", i + 1),
                    matrix_value(e),
                    matrix_text(e),
                );
            }
            for (s, c) in ins.cp_marginal().choi_blocks().iter().enumerate() {
                r.push(
                    &format!("cp marginal choi {s}"),
                    matrix_value(c),
                    matrix_text(c),
                );
            }
            Ok(ctx.finish(&r, EXIT_OK))
        }
        Command::Dilate { instrument } => {
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("dilate", tol, ctx.seed);
            describe(&mut r, &ins);
            let dil = BiDilation::minimal(&ins, tol).map_err(lib_error)?;
            let ok = dilation_lines(&mut r, &ins, &dil, tol);
            if ok {
                ctx.emit(&mut r, &Certificate::Dilation(dil))?;
            }
            Ok(ctx.finish(&r, verdict(ok)))
        }
        Command::Extreme { instrument } => {
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("extreme", tol, ctx.seed);
            let cert = extreme_certificate(&ins, tol).map_err(lib_error)?;
            let ok = matches!(cert, Certificate::Extreme { .. });
            r.flag("extreme", ok);
            if let Certificate::Extreme {
                rank,
                commutant_dim,
                ..
            } = &cert
            {
                r.text("rank", format!("{rank} of {commutant_dim}"));
            }
            ctx.emit(&mut r, &cert)?;
            Ok(ctx.finish(&r, verdict(ok)))
        }
        Command::CstarExtreme { instrument } => {
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("cstar-extreme", tol, ctx.seed);
            let cert = cstar_certificate(&ins, tol).map_err(lib_error)?;
            let ok = matches!(cert, Certificate::CstarExtreme(_));
            r.flag("cstar-extreme", ok);
            cstar_reason(&mut r, &cert);
            ctx.emit(&mut r, &cert)?;
            Ok(ctx.finish(&r, verdict(ok)))
        }
        Command::Pure { instrument } => {
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("pure", tol, ctx.seed);
            let ok = is_pure_instrument(&ins, tol).map_err(lib_error)?;
            r.flag("pure", ok);
            Ok(ctx.finish(&r, verdict(ok)))
        }
        Command::Spectral { instrument } => {
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("spectral", tol, ctx.seed);
            let ok = ins.is_spectral(tol);
            r.flag("spectral", ok);
            Ok(ctx.finish(&r, verdict(ok)))
        }
        Command::Decomposable { instrument } => {
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("decomposable", tol, ctx.seed);
            let refutation = decomposable_refutation(&ins, tol);
            r.flag("decomposable", refutation.is_none());
            if let Some(cert) = &refutation {
                refutation_lines(&mut r, cert);
                ctx.emit(&mut r, cert)?;
            }
            Ok(ctx.finish(&r, verdict(refutation.is_none())))
        }
        Command::Rn {
            dominated,
            instrument,
        } => {
            let j = ctx.load(&dominated)?;
            let ins = ctx.load(&instrument)?;
            let mut r = Report::new("rn", tol, ctx.seed);
            match rn_derivative(&j, &ins, tol) {
                Ok(rn) => {
                    r.flag("dominated", true);
                    r.count("dilation dim", rn.dilation.dim());
                    let eig = herm_eig(&rn.d, tol).map_err(lib_error)?;
                    r.push(
                        "derivative spectrum",
                        json!([eig.min(), eig.max()]),
                        format!("[{:.6}, {:.6}]", eig.min(), eig.max()),
                    );
                    r.residual("residual", rn.residual);
                    let cert = rn_certificate(&j, &ins, tol).map_err(lib_error)?;
                    ctx.emit(&mut r, &cert)?;
                    Ok(ctx.finish(&r, EXIT_OK))
                }
                Err(Error::NotDominated(msg)) => {
                    r.flag("dominated", false);
                    r.text("reason", msg);
                    Ok(ctx.finish(&r, EXIT_NEGATIVE))
                }
                Err(e) => Err(lib_error(e)),
            }
        }
        Command::Disjoint { a, b } => {
            let ia = ctx.load(&a)?;
            let ib = ctx.load(&b)?;
            let mut r = Report::new("disjoint", tol, ctx.seed);
            let da = BiDilation::minimal(&ia, tol).map_err(lib_error)?;
            let db = BiDilation::minimal(&ib, tol).map_err(lib_error)?;
            let ok = spectral_disjointness(&da, &db, tol).map_err(lib_error)?;
            r.flag("disjoint", ok);
            Ok(ctx.finish(&r, verdict(ok)))
        }
        Command::Analyze { instrument } => analyze(ctx, &instrument),
        Command::CheckCert {
            certificate,
            instrument,
        } => {
            let ins = ctx.load(&instrument)?;
            let text = fs::read_to_string(&certificate)
                .map_err(|e| Outcome::input_error(format!("{certificate}: {e}")))?;
            let cert = parse_certificate(&text).map_err(|e| match e {
                FormatError::Shape(err) => lib_error(err),
                other => Outcome::input_error(format!("{certificate}: {other}")),
            })?;
            let mut r = Report::new("check-cert", tol, ctx.seed);
            r.text("kind", cert.kind());
            match check_certificate(&cert, &ins, tol) {
                Ok(rep) => {
                    r.flag("pass", true);
                    r.residual("residual", rep.residual);
                    Ok(ctx.finish(&r, EXIT_OK))
                }
                Err(Error::CheckFailed { clause, detail }) => {
                    r.flag("pass", false);
                    r.text("clause", clause.to_string());
                    r.text("detail", detail);
                    Ok(ctx.finish(&r, EXIT_NEGATIVE))
                }
                Err(e) => Err(lib_error(e)),
            }
        }
        Command::Example { name } => {
            let ins = match examples::by_name(&name, ctx.t) {
                Some(Ok(ins)) => ins,
                Some(Err(e)) => return Err(lib_error(e)),
                None => {
                    return Err(Outcome::input_error(format!(
                        "unknown example {name:?} ({})",
                        examples::NAMES.join(", ")
                    )))
                }
            };
            let text = to_text(&instrument_value(&ins));
            if let Some(path) = &ctx.out {
                ctx.write(path, &text)?;
                return Ok(Outcome {
                    code: EXIT_OK,
                    stdout: String::new(),
                    stderr: String::new(),
                });
            }
            Ok(Outcome {
                code: EXIT_OK,
                stdout: text,
                stderr: String::new(),
            })
        }
    }
}

fn describe(r: &mut Report, ins: &Instrument) {
    r.push(
        "algebra",
        json!(ins.spec().block_dims()),
        format!("{:?}", ins.spec().block_dims()),
    );
    r.count("output dim", ins.out_dim());
    r.count("outcomes", ins.outcomes());
}

fn dilation_lines(r: &mut Report, ins: &Instrument, dil: &BiDilation, tol: Tolerance) -> bool {
    let (n, cp, povm) = dil.dims(tol);
    r.push(
        "dilation dims",
        json!([n, cp, povm]),
        format!("{n} {cp} {povm}"),
    );
    let rep = verify_bidilation(ins, dil, tol);
    r.flag("dilation verified", rep.passes);
    r.residual("reconstruction residual", rep.reconstruction_residual);
    r.residual("commutation residual", rep.commutation_residual);
    r.residual("isometry defect", rep.isometry_defect);
    rep.passes
}

fn cstar_reason(r: &mut Report, cert: &Certificate) {
    match cert {
        Certificate::NotCstarExtreme {
            outcome,
            eigenvalue,
            ..
        } => {
            r.text("reason", "non-projection effect");
            r.count("outcome", outcome + 1);
            r.push("eigenvalue", json!(eigenvalue), format!("{eigenvalue:.6}"));
        }
        Certificate::NonNestInvariance { outcome } => {
            r.text("reason", "invariance algebra is not a nest subalgebra");
            r.count("outcome", outcome + 1);
        }
        _ => {}
    }
}

fn refutation_lines(r: &mut Report, cert: &Certificate) {
    if let Certificate::DecomposableRefutation { outcome, unit } = cert {
        r.count("refuting outcome", outcome + 1);
        r.text(
            "refuting unit",
            format!("factor {} E{}{}", unit.factor, unit.row, unit.col),
        );
    }
}

fn analyze(ctx: &Ctx, arg: &str) -> Result<Outcome, Outcome> {
    let tol = ctx.tol;
    let ins = ctx.load(arg)?;
    let mut r = Report::new("analyze", tol, ctx.seed);
    describe(&mut r, &ins);
    let v = ins.validate(tol, false);
    r.flag("completely positive", v.cp_violations.is_empty());
    if !v.cp_violations.is_empty() {
        return Ok(ctx.finish(&r, EXIT_NEGATIVE));
    }
    let unital = ins.is_unital(tol);
    r.flag("normalized", unital);
    let mut certs: Vec<Certificate> = Vec::new();
    let dil = BiDilation::minimal(&ins, tol).map_err(lib_error)?;
    if dilation_lines(&mut r, &ins, &dil, tol) {
        certs.push(dilation_certificate(&ins, tol).map_err(lib_error)?);
    }
    r.count("commutant dim", dil.commutant_dim());
    r.flag("pure", dil.commutant_dim() == 1);
    r.flag("spectral", ins.is_spectral(tol));
    r.flag("commutative range", ins.has_commutative_range(tol));
    let refutation = decomposable_refutation(&ins, tol);
    r.flag("decomposable", refutation.is_none());
    if let Some(cert) = refutation {
        refutation_lines(&mut r, &cert);
        certs.push(cert);
    }
    if unital {
        let ext = extreme_certificate(&ins, tol).map_err(lib_error)?;
        r.flag("extreme", matches!(ext, Certificate::Extreme { .. }));
        if let Certificate::Extreme {
            rank,
            commutant_dim,
            ..
        } = &ext
        {
            r.text("extreme rank", format!("{rank} of {commutant_dim}"));
        }
        certs.push(ext);
        let cs = cstar_certificate(&ins, tol).map_err(lib_error)?;
        r.flag("cstar-extreme", matches!(cs, Certificate::CstarExtreme(_)));
        cstar_reason(&mut r, &cs);
        certs.push(cs);
        r.flag(
            "povm marginal extreme",
            is_extreme_povm(&ins.povm_marginal(), tol).map_err(lib_error)?,
        );
        r.flag(
            "cp marginal cstar-extreme",
            cp_marginal_cstar_extreme(&ins, tol).map_err(lib_error)?,
        );
        let pair = dominated_pair_check(&ins, ctx.seed, 16, tol).map_err(lib_error)?;
        r.text(
            "dominated pairs",
            if pair.no_counterexample {
                format!("no counterexample in {} trials", pair.trials)
            } else {
                "counterexample found".to_string()
            },
        );
    } else {
        r.text("extreme", "n/a (not normalized)");
        r.text("cstar-extreme", "n/a (not normalized)");
    }
    let mut kinds = Vec::new();
    for cert in &certs {
        let pass = check_certificate(cert, &ins, tol).is_ok();
        r.flag(&format!("certificate {}", cert.kind()), pass);
        kinds.push(cert.kind());
    }
    if let Some(dir) = &ctx.out {
        fs::create_dir_all(dir)
            .map_err(|e| Outcome::input_error(format!("{}: {e}", dir.display())))?;
        for cert in &certs {
            ctx.write(
                &dir.join(format!("{}.json", cert.kind())),
                &to_text(&certificate_value(cert)),
            )?;
        }
        r.text("certificates written", dir.display().to_string());
    }
    Ok(ctx.finish(&r, EXIT_OK))
}
