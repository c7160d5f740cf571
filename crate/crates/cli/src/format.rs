//! JSON files for instruments and certificates.
//!
//! Complex scalars are `[re, im]`, matrices are arrays of rows. Outcomes are
//! numbered from 1 in files and from 0 in the library; every other index
//! (factor, block, row, column) is a 0-based array position.

use qinstr::certificates::Certificate;
use qinstr::convexity::{CstarDecomposition, PureBlock};
use qinstr::{
    AlgebraSpec, BiDilation, ComplexMatrix, ComplexVector, CpMap, Instrument, MatrixUnit, C64,
};
use serde_json::{json, Map, Value};
use thiserror::Error;

pub const VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("shape error: {0}")]
    Shape(#[from] qinstr::Error),
}

type Result<T> = std::result::Result<T, FormatError>;

fn err<T>(path: &str, message: impl Into<String>) -> Result<T> {
    Err(FormatError::Parse {
        path: path.to_string(),
        message: message.into(),
    })
}

fn field<'a>(v: &'a Value, path: &str, key: &str) -> Result<(&'a Value, String)> {
    let p = format!("{path}.{key}");
    match v.get(key) {
        Some(x) => Ok((x, p)),
        None => err(&p, "missing field"),
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    match v.as_u64() {
        Some(x) => Ok(x as usize),
        None => err(path, "expected a non-negative integer"),
    }
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) => Ok(x),
        None => err(path, "expected a number"),
    }
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    match v.as_array() {
        Some(x) => Ok(x),
        None => err(path, "expected an array"),
    }
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    match v.as_str() {
        Some(x) => Ok(x),
        None => err(path, "expected a string"),
    }
}

fn parse_complex(v: &Value, path: &str) -> Result<C64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => Ok(C64::new(
            as_f64(re, &format!("{path}[0]"))?,
            as_f64(im, &format!("{path}[1]"))?,
        )),
        _ => err(path, "expected a complex scalar [re, im]"),
    }
}

fn parse_matrix(v: &Value, path: &str, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    let rs = as_array(v, path)?;
    if rs.len() != rows {
        return err(path, format!("expected {rows} rows, got {}", rs.len()));
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (p, row) in rs.iter().enumerate() {
        let rp = format!("{path}[{p}]");
        let cs = as_array(row, &rp)?;
        if cs.len() != cols {
            return err(&rp, format!("expected {cols} entries, got {}", cs.len()));
        }
        for (q, z) in cs.iter().enumerate() {
            m[(p, q)] = parse_complex(z, &format!("{rp}[{q}]"))?;
        }
    }
    Ok(m)
}

/// Matrix of any rectangular shape; `cols` is fixed by the first row.
fn parse_matrix_any(v: &Value, path: &str) -> Result<ComplexMatrix> {
    let rs = as_array(v, path)?;
    let cols = match rs.first() {
        Some(r) => as_array(r, &format!("{path}[0]"))?.len(),
        None => 0,
    };
    parse_matrix(v, path, rs.len(), cols)
}

fn parse_vector(v: &Value, path: &str) -> Result<ComplexVector> {
    let xs = as_array(v, path)?;
    let mut out = ComplexVector::zeros(xs.len());
    for (j, z) in xs.iter().enumerate() {
        out[j] = parse_complex(z, &format!("{path}[{j}]"))?;
    }
    Ok(out)
}

fn parse_outcome(v: &Value, path: &str, outcomes: usize) -> Result<usize> {
    let i = as_usize(v, path)?;
    if i == 0 || i > outcomes {
        return err(path, format!("outcome {i} outside 1..={outcomes}"));
    }
    Ok(i - 1)
}

fn parse_spec(v: &Value, path: &str) -> Result<AlgebraSpec> {
    let (blocks, bp) = field(v, path, "blocks")?;
    let dims = as_array(blocks, &bp)?
        .iter()
        .enumerate()
        .map(|(s, d)| as_usize(d, &format!("{bp}[{s}]")))
        .collect::<Result<Vec<_>>>()?;
    AlgebraSpec::new(dims).or_else(|e| err(&bp, e.to_string()))
}

fn check_version(v: &Value, path: &str) -> Result<()> {
    let (ver, vp) = field(v, path, "version")?;
    match as_usize(ver, &vp)? as u64 {
        VERSION => Ok(()),
        other => err(&vp, format!("unsupported version {other}")),
    }
}

pub fn parse_instrument(text: &str) -> Result<Instrument> {
    let v: Value = serde_json::from_str(text).or_else(|e| {
        err(
            &format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    instrument_from_value(&v, "$")
}

fn instrument_from_value(v: &Value, path: &str) -> Result<Instrument> {
    check_version(v, path)?;
    let (alg, ap) = field(v, path, "algebra")?;
    let spec = parse_spec(alg, &ap)?;
    let (k, kp) = field(v, path, "output_dim")?;
    let k = as_usize(k, &kp)?;
    let (n, np) = field(v, path, "outcomes")?;
    let n = as_usize(n, &np)?;
    let (maps, mp) = field(v, path, "maps")?;
    let mut slots: Vec<Option<CpMap>> = vec![None; n];
    for (j, entry) in as_array(maps, &mp)?.iter().enumerate() {
        let ep = format!("{mp}[{j}]");
        let (o, op) = field(entry, &ep, "outcome")?;
        let i = parse_outcome(o, &op, n)?;
        if slots[i].is_some() {
            return err(&op, format!("outcome {} listed twice", i + 1));
        }
        let (form, fp) = field(entry, &ep, "form")?;
        let (factors, fsp) = field(entry, &ep, "factors")?;
        let fs = as_array(factors, &fsp)?;
        if fs.len() != spec.num_factors() {
            return err(
                &fsp,
                format!("expected {} factors, got {}", spec.num_factors(), fs.len()),
            );
        }
        let map = match as_str(form, &fp)? {
            "choi" => {
                let blocks = fs
                    .iter()
                    .enumerate()
                    .map(|(s, m)| {
                        let dk = spec.factor_dim(s) * k;
                        parse_matrix(m, &format!("{fsp}[{s}]"), dk, dk)
                    })
                    .collect::<Result<Vec<_>>>()?;
                CpMap::new(spec.clone(), k, blocks)?
            }
            "kraus" => {
                let mut lists = Vec::with_capacity(fs.len());
                for (s, list) in fs.iter().enumerate() {
                    let lp = format!("{fsp}[{s}]");
                    let ops = as_array(list, &lp)?
                        .iter()
                        .enumerate()
                        .map(|(t, m)| parse_matrix(m, &format!("{lp}[{t}]"), spec.factor_dim(s), k))
                        .collect::<Result<Vec<_>>>()?;
                    lists.push(ops);
                }
                CpMap::from_kraus(&spec, k, &qinstr::KrausSet { factors: lists })?
            }
            other => return err(&fp, format!("unknown form {other:?}")),
        };
        slots[i] = Some(map);
    }
    let maps = slots
        .into_iter()
        .map(|m| m.unwrap_or_else(|| CpMap::zero(&spec, k)))
        .collect();
    Ok(Instrument::new(spec, k, maps)?)
}

pub fn complex_value(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_value(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|p| Value::Array((0..m.ncols()).map(|q| complex_value(m[(p, q)])).collect()))
            .collect(),
    )
}

pub fn vector_value(v: &ComplexVector) -> Value {
    Value::Array(v.iter().map(|&z| complex_value(z)).collect())
}

pub fn instrument_value(ins: &Instrument) -> Value {
    let maps: Vec<Value> = ins
        .maps()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            json!({
                "outcome": i + 1,
                "form": "choi",
                "factors": m.choi_blocks().iter().map(matrix_value).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "version": VERSION,
        "algebra": { "blocks": ins.spec().block_dims() },
        "output_dim": ins.out_dim(),
        "outcomes": ins.outcomes(),
        "maps": maps,
    })
}

pub fn dilation_value(dil: &BiDilation) -> Value {
    let blocks: Vec<Value> = dil
        .table()
        .iter()
        .map(|&(i, s, r)| json!({ "outcome": i + 1, "factor": s, "rank": r }))
        .collect();
    json!({
        "algebra": { "blocks": dil.spec().block_dims() },
        "output_dim": dil.out_dim(),
        "outcomes": dil.outcomes(),
        "blocks": blocks,
        "v": matrix_value(dil.v()),
    })
}

fn dilation_from_value(v: &Value, path: &str) -> Result<BiDilation> {
    let (alg, ap) = field(v, path, "algebra")?;
    let spec = parse_spec(alg, &ap)?;
    let (k, kp) = field(v, path, "output_dim")?;
    let k = as_usize(k, &kp)?;
    let (n, np) = field(v, path, "outcomes")?;
    let n = as_usize(n, &np)?;
    let (blocks, bp) = field(v, path, "blocks")?;
    let mut table = Vec::new();
    let mut size = 0;
    for (j, b) in as_array(blocks, &bp)?.iter().enumerate() {
        let p = format!("{bp}[{j}]");
        let (o, op) = field(b, &p, "outcome")?;
        let (s, sp) = field(b, &p, "factor")?;
        let (r, rp) = field(b, &p, "rank")?;
        let s = as_usize(s, &sp)?;
        if s >= spec.num_factors() {
            return err(&sp, format!("factor {s} out of range"));
        }
        let r = as_usize(r, &rp)?;
        size += spec.factor_dim(s) * r;
        table.push((parse_outcome(o, &op, n)?, s, r));
    }
    let (m, mp) = field(v, path, "v")?;
    let m = parse_matrix(m, &mp, size, k)?;
    Ok(BiDilation::from_parts(spec, k, n, &table, m)?)
}

pub fn certificate_value(cert: &Certificate) -> Value {
    let mut obj = Map::new();
    obj.insert("version".into(), json!(VERSION));
    obj.insert("kind".into(), json!(cert.kind()));
    let payload = match cert {
        Certificate::Dilation(dil) => json!({ "dilation": dilation_value(dil) }),
        Certificate::Extreme {
            dilation,
            rank,
            commutant_dim,
        } => json!({
            "dilation": dilation_value(dilation),
            "rank": rank,
            "commutant_dim": commutant_dim,
        }),
        Certificate::NonExtreme { plus, minus } => json!({
            "plus": instrument_value(plus),
            "minus": instrument_value(minus),
        }),
        Certificate::CstarExtreme(dec) => json!({
            "unitary": matrix_value(&dec.unitary),
            "blocks": dec.blocks.iter().map(|b| json!({
                "outcome": b.outcome + 1,
                "factor": b.factor,
                "isometry": matrix_value(&b.v),
            })).collect::<Vec<_>>(),
            "nest_orders": dec.nest_orders.iter().map(|((i, s), order)| json!({
                "outcome": i + 1,
                "factor": s,
                "order": order,
            })).collect::<Vec<_>>(),
        }),
        Certificate::NotCstarExtreme {
            outcome,
            eigenvalue,
            eigenvector,
        } => json!({
            "reason": "non_projection_effect",
            "outcome": outcome + 1,
            "eigenvalue": eigenvalue,
            "eigenvector": vector_value(eigenvector),
        }),
        Certificate::NonNestInvariance { outcome } => json!({
            "reason": "non_nest_invariance",
            "outcome": outcome + 1,
        }),
        Certificate::Rn {
            dominated,
            dilation,
            d,
        } => json!({
            "dominated": instrument_value(dominated),
            "dilation": dilation_value(dilation),
            "d": matrix_value(d),
        }),
        Certificate::DecomposableRefutation { outcome, unit } => json!({
            "outcome": outcome + 1,
            "unit": { "factor": unit.factor, "row": unit.row, "col": unit.col },
        }),
    };
    obj.insert("payload".into(), payload);
    Value::Object(obj)
}

pub fn parse_certificate(text: &str) -> Result<Certificate> {
    let v: Value = serde_json::from_str(text).or_else(|e| {
        err(
            &format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    check_version(&v, "$")?;
    let (kind, kp) = field(&v, "$", "kind")?;
    let (p, pp) = field(&v, "$", "payload")?;
    let pp = pp.as_str();
    Ok(match as_str(kind, &kp)? {
        "dilation" => {
            let (d, dp) = field(p, pp, "dilation")?;
            Certificate::Dilation(dilation_from_value(d, &dp)?)
        }
        "extreme" => {
            let (d, dp) = field(p, pp, "dilation")?;
            let (r, rp) = field(p, pp, "rank")?;
            let (c, cp) = field(p, pp, "commutant_dim")?;
            Certificate::Extreme {
                dilation: dilation_from_value(d, &dp)?,
                rank: as_usize(r, &rp)?,
                commutant_dim: as_usize(c, &cp)?,
            }
        }
        "non_extreme" => {
            let (a, ap) = field(p, pp, "plus")?;
            let (b, bp) = field(p, pp, "minus")?;
            Certificate::NonExtreme {
                plus: instrument_from_value(a, &ap)?,
                minus: instrument_from_value(b, &bp)?,
            }
        }
        "cstar_extreme" => {
            let (u, up) = field(p, pp, "unitary")?;
            let unitary = parse_matrix_any(u, &up)?;
            let (bs, bsp) = field(p, pp, "blocks")?;
            let mut blocks = Vec::new();
            for (j, b) in as_array(bs, &bsp)?.iter().enumerate() {
                let bp = format!("{bsp}[{j}]");
                let (s, sp) = field(b, &bp, "factor")?;
                let (w, wp) = field(b, &bp, "isometry")?;
                blocks.push(PureBlock {
                    outcome: outcome_of_at(b, &bp)?,
                    factor: as_usize(s, &sp)?,
                    v: parse_matrix_any(w, &wp)?,
                });
            }
            let (ns, nsp) = field(p, pp, "nest_orders")?;
            let mut nest_orders = Vec::new();
            for (j, n) in as_array(ns, &nsp)?.iter().enumerate() {
                let np = format!("{nsp}[{j}]");
                let (s, sp) = field(n, &np, "factor")?;
                let (o, op) = field(n, &np, "order")?;
                let order = as_array(o, &op)?
                    .iter()
                    .enumerate()
                    .map(|(t, x)| as_usize(x, &format!("{op}[{t}]")))
                    .collect::<Result<Vec<_>>>()?;
                nest_orders.push(((outcome_of_at(n, &np)?, as_usize(s, &sp)?), order));
            }
            Certificate::CstarExtreme(CstarDecomposition {
                unitary,
                blocks,
                nest_orders,
            })
        }
        "not_cstar_extreme" => {
            let (r, rp) = field(p, pp, "reason")?;
            match as_str(r, &rp)? {
                "non_projection_effect" => {
                    let (e, ep) = field(p, pp, "eigenvalue")?;
                    let (x, xp) = field(p, pp, "eigenvector")?;
                    Certificate::NotCstarExtreme {
                        outcome: outcome_of_at(p, pp)?,
                        eigenvalue: as_f64(e, &ep)?,
                        eigenvector: parse_vector(x, &xp)?,
                    }
                }
                "non_nest_invariance" => Certificate::NonNestInvariance {
                    outcome: outcome_of_at(p, pp)?,
                },
                other => return err(&rp, format!("unknown reason {other:?}")),
            }
        }
        "rn" => {
            let (j, jp) = field(p, pp, "dominated")?;
            let (d, dp) = field(p, pp, "dilation")?;
            let (m, mp) = field(p, pp, "d")?;
            Certificate::Rn {
                dominated: instrument_from_value(j, &jp)?,
                dilation: dilation_from_value(d, &dp)?,
                d: parse_matrix_any(m, &mp)?,
            }
        }
        "decomposable_refutation" => {
            let (u, up) = field(p, pp, "unit")?;
            let (s, sp) = field(u, &up, "factor")?;
            let (r, rp) = field(u, &up, "row")?;
            let (c, cp) = field(u, &up, "col")?;
            Certificate::DecomposableRefutation {
                outcome: outcome_of_at(p, pp)?,
                unit: MatrixUnit {
                    factor: as_usize(s, &sp)?,
                    row: as_usize(r, &rp)?,
                    col: as_usize(c, &cp)?,
                },
            }
        }
        other => return err(&kp, format!("unknown certificate kind {other:?}")),
    })
}

fn outcome_of_at(v: &Value, path: &str) -> Result<usize> {
    let (o, op) = field(v, path, "outcome")?;
    as_usize(o, &op)?
        .checked_sub(1)
        .map_or_else(|| err(&op, "outcomes start at 1"), Ok)
}

/// Indented JSON with floats written as `{:.16e}` (17 significant digits).
/// Arrays nested at most two deep, such as matrix rows, stay on one line.
pub fn to_text(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn depth(v: &Value) -> Option<usize> {
    match v {
        Value::Array(xs) => xs
            .iter()
            .try_fold(0, |m, x| depth(x).map(|d| m.max(d)))
            .map(|d| d + 1),
        Value::Object(_) => None,
        _ => Some(0),
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => out.push_str(&u.to_string()),
            (_, Some(i), _) => out.push_str(&i.to_string()),
            (_, _, Some(x)) => out.push_str(&format!("{x:.16e}")),
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string escapes")),
        Value::Array(xs) if xs.is_empty() => out.push_str("[]"),
        Value::Array(xs) if depth(v).is_some_and(|d| d <= 2) => {
            out.push('[');
            for (j, x) in xs.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                write_value(x, indent, out);
            }
            out.push(']');
        }
        Value::Array(xs) => {
            out.push_str("[\n");
            for (j, x) in xs.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if j + 1 < xs.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (j, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("string escapes"));
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if j + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}
