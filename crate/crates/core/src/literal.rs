//! JSON literals for series, matrices, towers and fits.

use num::rational::BigRational;
use num::BigInt;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::isocrystal::{IsocrystalMatrix, SeriesMatrix};
use crate::monodromy::PseudoStableFit;
use crate::ramification::{TowerPoint, TowerRamificationData};
use crate::series::{CoeffElem, Ctx, PrimeContext, Series};

fn bad(msg: impl Into<String>) -> Error {
    Error::Literal(msg.into())
}

/// Overrides applied to every context read from a literal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContextOverrides {
    pub prec: Option<u32>,
    pub window: Option<i64>,
    /// Upper bound on the window, applied last.
    pub max_window: Option<i64>,
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| bad(format!("missing field \"{key}\"")))
}

fn as_u64(v: &Value, key: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| bad(format!("\"{key}\" must be a nonnegative integer")))
}

fn as_i64(v: &Value, key: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| bad(format!("\"{key}\" must be an integer")))
}

fn as_u32(v: &Value, key: &str) -> Result<u32> {
    u32::try_from(as_u64(v, key)?).map_err(|_| bad(format!("\"{key}\" is too large")))
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(format!("{what} must be a JSON object")))
}

/// Reads `{"p","f","e","prec","window"}` from `obj`, applying overrides.
pub fn context_from_json(v: &Value, ov: &ContextOverrides) -> Result<Ctx> {
    let obj = object(v, "context")?;
    let p = as_u64(field(obj, "p")?, "p")?;
    let f = obj.get("f").map_or(Ok(1), |x| as_u32(x, "f"))?;
    let e = obj.get("e").map_or(Ok(1), |x| as_u32(x, "e"))?;
    let prec = match ov.prec {
        Some(n) => n,
        None => as_u32(field(obj, "prec")?, "prec")?,
    };
    let mut window = match ov.window {
        Some(w) => w,
        None => as_i64(field(obj, "window")?, "window")?,
    };
    if let Some(cap) = ov.max_window {
        window = window.min(cap);
    }
    PrimeContext::new(p, f, e, prec, window)
}

pub fn context_to_json(ctx: &Ctx) -> Value {
    json!({"p": ctx.p(), "f": ctx.f(), "e": ctx.e(), "prec": ctx.prec(), "window": ctx.window()})
}

fn parse_int(v: &Value) -> Result<BigInt> {
    match v {
        Value::String(s) => s.trim().parse().map_err(|_| bad(format!("\"{s}\" is not a decimal integer"))),
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| bad(format!("{n} is not an integer"))),
        _ => Err(bad("digit must be a decimal string or integer")),
    }
}

/// Terms `[[exponent, [digit_0, .., digit_(e-1)]], ..]` in `ctx`.
pub fn terms_from_json(ctx: &Ctx, v: &Value) -> Result<Series> {
    let arr = v.as_array().ok_or_else(|| bad("\"terms\" must be an array"))?;
    let mut terms = Vec::with_capacity(arr.len());
    for t in arr {
        let pair = t
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| bad("each term must be [exponent, digits]"))?;
        let n = as_i64(&pair[0], "exponent")?;
        let digits = match &pair[1] {
            Value::Array(ds) => ds.iter().map(parse_int).collect::<Result<Vec<_>>>()?,
            other => vec![parse_int(other)?],
        };
        terms.push((n, CoeffElem::from_digits(ctx, &digits)?));
    }
    Series::from_terms(ctx, terms)
}

pub fn series_from_json(v: &Value, ov: &ContextOverrides) -> Result<Series> {
    let ctx = context_from_json(v, ov)?;
    terms_from_json(&ctx, field(object(v, "series")?, "terms")?)
}

pub fn terms_to_json(x: &Series) -> Value {
    Value::Array(
        x.terms()
            .map(|(n, c)| {
                let ds: Vec<Value> = c.signed_digits().iter().map(|d| Value::String(d.to_string())).collect();
                json!([n, ds])
            })
            .collect(),
    )
}

pub fn series_to_json(x: &Series) -> Value {
    let mut v = context_to_json(x.context());
    v["terms"] = terms_to_json(x);
    v
}

/// Matrix literal. Entries may be full series literals (whose context must
/// agree with `"context"` before overrides) or bare term arrays.
pub fn matrix_from_json(v: &Value, ov: &ContextOverrides) -> Result<IsocrystalMatrix> {
    let obj = object(v, "matrix")?;
    let ctx_v = field(obj, "context")?;
    let ctx = context_from_json(ctx_v, ov)?;
    let diag = field(obj, "diag_exponents")?
        .as_array()
        .ok_or_else(|| bad("\"diag_exponents\" must be an array"))?
        .iter()
        .map(|x| as_u32(x, "diag_exponents"))
        .collect::<Result<Vec<_>>>()?;
    let rows = field(obj, "entries")?
        .as_array()
        .ok_or_else(|| bad("\"entries\" must be an array of rows"))?;
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row.as_array().ok_or_else(|| bad("each row must be an array"))?;
        let mut r = Vec::with_capacity(row.len());
        for entry in row {
            let terms = match entry {
                Value::Object(m) => {
                    for key in ["p", "f", "e"] {
                        if let (Some(a), Some(b)) = (m.get(key), ctx_v.get(key)) {
                            if a != b {
                                return Err(bad(format!("entry context field \"{key}\" disagrees with the matrix")));
                            }
                        }
                    }
                    field(m, "terms")?
                }
                other => other,
            };
            r.push(terms_from_json(&ctx, terms)?);
        }
        out.push(r);
    }
    if out.len() != diag.len() {
        return Err(bad("need one diagonal exponent per row"));
    }
    IsocrystalMatrix::from_rows(&ctx, out, diag).map_err(|e| match e {
        Error::Precondition { detail, .. } => bad(detail),
        other => other,
    })
}

pub fn series_matrix_to_json(m: &SeriesMatrix) -> Value {
    Value::Array(
        m.rows()
            .iter()
            .map(|row| Value::Array(row.iter().map(terms_to_json).collect()))
            .collect(),
    )
}

pub fn matrix_to_json(a: &IsocrystalMatrix) -> Value {
    json!({
        "context": context_to_json(a.context()),
        "diag_exponents": a.diag_exponents(),
        "entries": series_matrix_to_json(a.matrix()),
    })
}

/// Rationals are written as `"a/b"` strings, integers as `"a"`.
pub fn rational_to_json(x: &BigRational) -> Value {
    Value::String(x.to_string())
}

pub fn rational_from_json(v: &Value) -> Result<BigRational> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(|i| BigRational::from_integer(i.into()))
            .ok_or_else(|| bad(format!("{n} is not an integer or fraction"))),
        Value::String(s) => parse_rational(s),
        _ => Err(bad("expected an integer or a \"a/b\" string")),
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let err = || bad(format!("\"{s}\" is not a rational"));
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (BigInt, BigInt) = (a.trim().parse().map_err(|_| err())?, b.trim().parse().map_err(|_| err())?);
            if b == BigInt::from(0) {
                return Err(err());
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(s.trim().parse().map_err(|_| err())?)),
    }
}

pub fn tower_from_json(v: &Value) -> Result<TowerRamificationData> {
    let obj = object(v, "tower")?;
    let g0 = as_i64(field(obj, "g0")?, "g0")?;
    let p = as_u64(field(obj, "p")?, "p")?;
    let points = field(obj, "points")?
        .as_array()
        .ok_or_else(|| bad("\"points\" must be an array"))?
        .iter()
        .map(|pt| {
            let o = object(pt, "point")?;
            let label = o.get("label").and_then(Value::as_str).unwrap_or("").to_string();
            let breaks = field(o, "breaks")?
                .as_array()
                .ok_or_else(|| bad("\"breaks\" must be an array"))?
                .iter()
                .map(rational_from_json)
                .collect::<Result<Vec<_>>>()?;
            Ok(TowerPoint { label, breaks })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TowerRamificationData { g0, p, points })
}

pub fn fit_to_json(fit: &PseudoStableFit) -> Value {
    json!({
        "m": fit.m,
        "r": rational_to_json(&fit.r),
        "a": fit.a.iter().map(rational_to_json).collect::<Vec<_>>(),
        "b": fit.b.iter().map(rational_to_json).collect::<Vec<_>>(),
        "k0": fit.onset,
    })
}
