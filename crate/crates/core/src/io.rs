//! Catalog JSON files.
//!
//! ```text
//! {"meta": {"source", "d", "ds", "du", "t_complete", "generator_params", "diagnostics"},
//!  "orbits": [{"lambda", "word", "lin", "eps", "base_period"}, ...]}
//! ```
//!
//! Exact matrix entries are strings `"p/q"`, float entries are numbers. Doubles are
//! written with 17 significant digits. An infinite `t_complete` is written as `null`.

use std::collections::HashMap;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{Scalar, Sign, SmallMatrix};
use crate::orbits::{Dimensions, OrbitCatalog, PrimeOrbit, SourceDescriptor, SourceKind};

/// A double with 17 significant digits, valid as a JSON number.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

fn lin_json(m: &SmallMatrix) -> String {
    let n = m.dim();
    let mut out = String::from("[");
    for i in 0..n {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            match m.entry(i, j) {
                Scalar::Exact(q) => out.push_str(&format!("\"{}/{}\"", q.numer(), q.denom())),
                Scalar::Float(x) => out.push_str(&fmt_f64(x)),
            }
        }
        out.push(']');
    }
    out.push(']');
    out
}

/// Streams `catalog` as JSON, one orbit per line.
pub fn write_catalog<W: Write>(catalog: &OrbitCatalog, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let tc = if catalog.t_complete.is_finite() { fmt_f64(catalog.t_complete) } else { "null".into() };
    write!(
        w,
        "{{\"meta\":{{\"source\":{},\"d\":{},\"ds\":{},\"du\":{},\"t_complete\":{},\"generator_params\":{}",
        json_str(&catalog.source.kind.to_string()),
        catalog.dims.d,
        catalog.dims.ds,
        catalog.dims.du,
        tc,
        serde_json::to_string(&catalog.source.params)?
    )?;
    if !catalog.diagnostics.is_empty() {
        write!(w, ",\"diagnostics\":{}", serde_json::to_string(&catalog.diagnostics)?)?;
    }
    w.write_all(b"},\n\"orbits\":[")?;
    // orbits sharing one linearization share its rendering
    let mut cache: HashMap<*const SmallMatrix, String> = HashMap::new();
    for (k, p) in catalog.orbits.iter().enumerate() {
        let lin = cache.entry(Arc::as_ptr(&p.linearization)).or_insert_with(|| lin_json(&p.linearization));
        write!(
            w,
            "{}\n{{\"lambda\":{},\"word\":{},\"lin\":{},\"eps\":{},\"base_period\":{}}}",
            if k > 0 { "," } else { "" },
            fmt_f64(p.length),
            json_str(&p.word),
            lin,
            p.orientation.as_i32(),
            p.base_period
        )?;
    }
    w.write_all(b"\n]}\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_catalog_file(catalog: &OrbitCatalog, path: &Path) -> Result<()> {
    write_catalog(catalog, std::fs::File::create(path)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    source: String,
    d: usize,
    ds: usize,
    du: usize,
    t_complete: Option<f64>,
    #[serde(default)]
    generator_params: Value,
    #[serde(default)]
    diagnostics: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrbitRecord {
    lambda: f64,
    word: String,
    lin: Vec<Vec<Value>>,
    eps: i32,
    base_period: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    meta: Meta,
    orbits: Vec<OrbitRecord>,
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Format(format!("matrix entry {s:?} is not \"p/q\""));
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: BigInt = p.trim().parse().map_err(|_| bad())?;
    let q: BigInt = q.trim().parse().map_err(|_| bad())?;
    if q == BigInt::from(0) {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

fn parse_lin(rows: &[Vec<Value>]) -> Result<SmallMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Format("linearization is not square".into()));
    }
    let entries = rows
        .iter()
        .flatten()
        .map(|v| match v {
            Value::String(s) => parse_rational(s).map(Scalar::Exact),
            Value::Number(x) => {
                x.as_f64().map(Scalar::Float).ok_or_else(|| Error::Format(format!("matrix entry {x} out of range")))
            }
            other => Err(Error::Format(format!("matrix entry {other} is neither \"p/q\" nor a number"))),
        })
        .collect::<Result<Vec<_>>>()?;
    SmallMatrix::from_scalars(n, entries)
}

/// Parses a catalog; identical linearizations are shared.
pub fn read_catalog<R: Read>(r: R) -> Result<OrbitCatalog> {
    let file: CatalogFile = serde_json::from_reader(std::io::BufReader::new(r))?;
    let kind: SourceKind = file.meta.source.parse()?;
    let dims = Dimensions { d: file.meta.d, ds: file.meta.ds, du: file.meta.du };
    dims.check().map_err(|e| Error::Format(e.to_string()))?;
    let mut shared: HashMap<String, Arc<SmallMatrix>> = HashMap::new();
    let mut orbits = Vec::with_capacity(file.orbits.len());
    for rec in file.orbits {
        let key = serde_json::to_string(&rec.lin)?;
        let lin = match shared.get(&key) {
            Some(m) => m.clone(),
            None => {
                let m = Arc::new(parse_lin(&rec.lin).map_err(|e| e.in_orbit(rec.word.clone()))?);
                shared.insert(key, m.clone());
                m
            }
        };
        let orientation = Sign::from_i32(rec.eps)
            .ok_or_else(|| Error::Format(format!("orbit {}: eps = {} is not ±1", rec.word, rec.eps)))?;
        orbits.push(PrimeOrbit {
            length: rec.lambda,
            word: rec.word.into(),
            linearization: lin,
            orientation,
            base_period: rec.base_period,
        });
    }
    Ok(OrbitCatalog::new(
        orbits,
        dims,
        file.meta.t_complete.unwrap_or(f64::INFINITY),
        SourceDescriptor { kind, params: file.meta.generator_params },
        file.meta.diagnostics,
    ))
}

pub fn read_catalog_file(path: &Path) -> Result<OrbitCatalog> {
    read_catalog(std::fs::File::open(path)?)
}
