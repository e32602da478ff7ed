//! Model specs to catalogs.

use zetawb_core::{
    bolza_group, fuchsian_catalog, modular_torus_catalog, punctured_torus_group, sft_catalog, toral_suspension_catalog,
    Adjacency, Cocycle, OrbitCatalog, RoofFunction, TrigTerm,
};

use crate::config::{ModelConfig, ModelKind};
use crate::CliError;

fn num(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::input(format!("{what}: {s:?} is not a number")))
}

fn list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|x| num(x, what)).collect()
}

pub fn parse_roof(spec: &str) -> Result<RoofFunction, CliError> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let roof = match kind {
        "const" => RoofFunction::constant(num(rest, "roof constant")?),
        "mixing" if rest.is_empty() => RoofFunction::mixing_default(),
        "trig" => {
            let mut parts = rest.split(';');
            let constant = num(parts.next().unwrap_or(""), "roof constant")?;
            let terms = parts
                .map(|t| {
                    let v = list(t, "trig term")?;
                    let [k1, k2, a, b] = v[..] else {
                        return Err(CliError::input(format!("trig term {t:?} must be k1,k2,a,b")));
                    };
                    if k1.fract() != 0.0 || k2.fract() != 0.0 {
                        return Err(CliError::input(format!("trig term {t:?}: frequencies must be integers")));
                    }
                    Ok(TrigTerm { k: [k1 as i64, k2 as i64], a, b })
                })
                .collect::<Result<_, _>>()?;
            RoofFunction::Trig { constant, terms }
        }
        "symbols" => RoofFunction::per_symbol(&list(rest, "symbol roof")?),
        "table" => {
            RoofFunction::Table { r: rest.split(';').map(|row| list(row, "roof table")).collect::<Result<_, _>>()? }
        }
        _ => return Err(CliError::input(format!("unknown roof {spec:?}"))),
    };
    roof.validate().map_err(CliError::model)?;
    Ok(roof)
}

fn parse_pair(s: &str, k: usize) -> Result<(usize, usize), CliError> {
    let bad = || CliError::input(format!("forbidden transition {s:?} must be two symbols below {k}, e.g. 01"));
    let digits: Vec<usize> = if s.contains('-') {
        s.split('-').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    } else {
        s.trim().chars().map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad)).collect::<Result<_, _>>()?
    };
    match digits[..] {
        [i, j] if i < k && j < k => Ok((i, j)),
        _ => Err(bad()),
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, model: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::input(format!("model {model} needs --{flag}")))
}

pub fn build_catalog(m: &ModelConfig) -> Result<OrbitCatalog, CliError> {
    let kind = m.model.ok_or_else(|| CliError::input("no model given (--model)"))?;
    let roof = || parse_roof(m.roof.as_deref().unwrap_or("const:1"));
    let no_roof = |name: &str| match &m.roof {
        Some(_) => Err(CliError::input(format!("model {name} takes no roof"))),
        None => Ok(()),
    };
    let catalog = match kind {
        ModelKind::Cat | ModelKind::Fib | ModelKind::Toral => {
            let a = match (kind, &m.matrix) {
                (ModelKind::Cat, None) => [[2, 1], [1, 1]],
                (ModelKind::Fib, None) => [[1, 1], [1, 0]],
                (ModelKind::Toral, Some(v)) if v.len() == 4 => [[v[0], v[1]], [v[2], v[3]]],
                (ModelKind::Toral, _) => return Err(CliError::input("model toral needs --matrix a,b,c,d")),
                _ => return Err(CliError::input("--matrix only applies to model toral")),
            };
            toral_suspension_catalog(&a, &roof()?, need(m.nmax, "nmax", "toral")?)
        }
        ModelKind::Sft => {
            let k = m.alphabet.unwrap_or(2);
            let forbidden = m
                .forbid
                .iter()
                .flatten()
                .filter(|s| !s.is_empty())
                .map(|s| parse_pair(s, k))
                .collect::<Result<Vec<_>, _>>()?;
            let adjacency = Adjacency::forbidding(k, &forbidden).map_err(CliError::model)?;
            let cocycle = m.expansion.map_or_else(Cocycle::default, |expansion| Cocycle::Diagonal { expansion });
            sft_catalog(&adjacency, &roof()?, &cocycle, need(m.nmax, "nmax", "sft")?)
        }
        ModelKind::Ptorus => {
            no_roof("ptorus")?;
            match (m.lmax, m.tmax) {
                (Some(l), None) => fuchsian_catalog(&punctured_torus_group(), l),
                (None, Some(t)) => modular_torus_catalog(t),
                _ => {
                    return Err(CliError::input(
                        "model ptorus needs exactly one of --lmax (word length) and --tmax (length)",
                    ))
                }
            }
        }
        ModelKind::Bolza => {
            no_roof("bolza")?;
            fuchsian_catalog(&bolza_group(), need(m.lmax, "lmax", "bolza")?)
        }
    };
    catalog.map_err(CliError::model)
}
