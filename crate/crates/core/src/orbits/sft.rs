//! Suspension semiflows over subshifts of finite type.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{orientation_sign, SmallMatrix};
use crate::orbits::lyndon::for_each_lyndon;
use crate::orbits::roof::RoofFunction;
use crate::orbits::{Dimensions, OrbitCatalog, PrimeOrbit, SourceDescriptor, SourceKind};
use crate::sum::NeumaierSum;

const SYMBOLS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// 0/1 transition matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjacency {
    k: usize,
    allowed: Vec<bool>,
}

impl Adjacency {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 || k > SYMBOLS.len() {
            return Err(Error::Parameter(format!("alphabet size {k} outside 1..={}", SYMBOLS.len())));
        }
        if rows.iter().any(|r| r.len() != k || r.iter().any(|&v| v > 1)) {
            return Err(Error::Parameter("adjacency must be a square 0/1 matrix".into()));
        }
        Ok(Self { k, allowed: rows.into_iter().flatten().map(|v| v == 1).collect() })
    }

    pub fn full(k: usize) -> Result<Self> {
        Self::new(vec![vec![1; k]; k])
    }

    /// Full shift on `k` symbols with the listed two-letter words removed.
    pub fn forbidding(k: usize, forbidden: &[(usize, usize)]) -> Result<Self> {
        let mut rows = vec![vec![1u8; k]; k];
        for &(i, j) in forbidden {
            if i >= k || j >= k {
                return Err(Error::Parameter(format!("forbidden word {i}{j} outside the alphabet")));
            }
            rows[i][j] = 0;
        }
        Self::new(rows)
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.k + j]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.allowed.chunks(self.k).map(|r| r.iter().map(|&b| b as u8).collect()).collect()
    }

    /// Every symbol reaches every other.
    pub fn is_irreducible(&self) -> bool {
        (0..self.k).all(|s| {
            let mut seen = vec![false; self.k];
            let mut stack = vec![s];
            while let Some(i) = stack.pop() {
                for j in 0..self.k {
                    if self.allows(i, j) && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.iter().all(|&b| b)
        })
    }
}

/// Transverse derivative cocycle along transitions.
#[derive(Clone, Debug, PartialEq)]
pub enum Cocycle {
    /// `diag(Λ, 1/Λ)` on every transition.
    Diagonal { expansion: f64 },
    /// Matrix per allowed transition `(i, j)`.
    PerTransition(HashMap<(usize, usize), SmallMatrix>),
}

impl Default for Cocycle {
    fn default() -> Self {
        Cocycle::Diagonal { expansion: 2.0 }
    }
}

fn diagonal_power(expansion: f64, n: u32) -> Result<SmallMatrix> {
    if expansion.fract() == 0.0 && expansion.abs() < 1e6 {
        let l = BigRational::from_integer(BigInt::from(expansion as i64)).pow(n as i32);
        SmallMatrix::diagonal_exact(&[l.clone(), BigRational::one() / l])
    } else {
        let l = expansion.powi(n as i32);
        SmallMatrix::diagonal_f64(&[l, 1.0 / l])
    }
}

pub fn symbol_char(s: u8) -> char {
    SYMBOLS[s as usize] as char
}

/// One prime orbit per admissible Lyndon word of length at most `n_max`.
pub fn sft_catalog(adjacency: &Adjacency, roof: &RoofFunction, cocycle: &Cocycle, n_max: u32) -> Result<OrbitCatalog> {
    if n_max == 0 {
        return Err(Error::Parameter("n_max must be at least 1".into()));
    }
    if !adjacency.is_irreducible() {
        return Err(Error::Model("adjacency matrix is reducible".into()));
    }
    roof.validate()?;
    if let RoofFunction::Table { r } = roof {
        if r.len() != adjacency.size() {
            return Err(Error::Parameter("roof table size differs from the alphabet".into()));
        }
    }
    if matches!(roof, RoofFunction::Trig { .. }) {
        return Err(Error::Parameter("trigonometric roof needs a toral model".into()));
    }
    if let Cocycle::Diagonal { expansion } = cocycle {
        if !(expansion.abs() > 1.0 && expansion.is_finite()) {
            return Err(Error::Parameter(format!("expansion factor {expansion} must exceed 1 in modulus")));
        }
    }
    let dim = match cocycle {
        Cocycle::Diagonal { .. } => 2,
        Cocycle::PerTransition(map) => {
            let dims: Vec<usize> = map.values().map(SmallMatrix::dim).collect();
            let d = *dims.first().ok_or_else(|| Error::Parameter("empty cocycle".into()))?;
            if dims.iter().any(|&x| x != d) {
                return Err(Error::Parameter("cocycle matrices differ in dimension".into()));
            }
            for i in 0..adjacency.size() {
                for j in 0..adjacency.size() {
                    if adjacency.allows(i, j) && !map.contains_key(&(i, j)) {
                        return Err(Error::Parameter(format!("cocycle missing transition {i}->{j}")));
                    }
                }
            }
            d
        }
    };

    let mut words: Vec<Vec<u8>> = Vec::new();
    for_each_lyndon(
        adjacency.size(),
        n_max as usize,
        |a, b| adjacency.allows(a as usize, b as usize),
        |w| words.push(w.to_vec()),
    );

    let mut diag_cache: HashMap<u32, Arc<SmallMatrix>> = HashMap::new();
    let mut ds: Option<usize> = None;
    let mut orbits = Vec::with_capacity(words.len());
    let mut diagnostics = Vec::new();
    for w in words {
        let n = w.len();
        let label: String = w.iter().map(|&s| symbol_char(s)).collect();
        let transitions = (0..n).map(|i| (w[i] as usize, w[(i + 1) % n] as usize));
        let mut len = NeumaierSum::new();
        for (i, j) in transitions.clone() {
            len.add(roof.eval_transition(i, j)?);
        }
        let lin = match cocycle {
            Cocycle::Diagonal { expansion } => Arc::clone(match diag_cache.entry(n as u32) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(Arc::new(diagonal_power(*expansion, n as u32)?))
                }
            }),
            Cocycle::PerTransition(map) => {
                let mut prod = SmallMatrix::identity(dim, map.values().next().is_some_and(SmallMatrix::is_exact));
                for t in transitions {
                    prod = map[&t].mul(&prod).map_err(|e| e.in_orbit(label.clone()))?;
                }
                Arc::new(prod)
            }
        };
        if !lin.is_hyperbolic() {
            diagnostics.push(format!("orbit {label}: cocycle product not hyperbolic, rejected"));
            continue;
        }
        let e = lin.expanding_dimension();
        match ds {
            None => ds = Some(e),
            Some(d) if d != e => {
                diagnostics.push(format!("orbit {label}: stable dimension {e} differs from {d}, rejected"));
                continue;
            }
            _ => {}
        }
        let orientation = match orientation_sign(&lin, e) {
            Ok(s) => s,
            Err(err) => {
                diagnostics.push(format!("orbit {label}: {err}, rejected"));
                continue;
            }
        };
        orbits.push(PrimeOrbit {
            length: len.value(),
            word: label.into_boxed_str(),
            linearization: lin,
            orientation,
            base_period: n as u32,
        });
    }
    let ds = ds.unwrap_or(1);
    let dims = Dimensions::new(ds, dim - ds);
    dims.check().map_err(|e| Error::Model(e.to_string()))?;
    let cocycle_json = match cocycle {
        Cocycle::Diagonal { expansion } => json!({"diagonal": expansion}),
        Cocycle::PerTransition(_) => json!("per_transition"),
    };
    let params = json!({
        "adjacency": adjacency.rows(),
        "roof": roof,
        "cocycle": cocycle_json,
        "n_max": n_max,
    });
    Ok(OrbitCatalog::new(
        orbits,
        dims,
        n_max as f64 * roof.lower_bound(),
        SourceDescriptor { kind: SourceKind::Sft, params },
        diagnostics,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::catalog_validate;

    #[test]
    fn full_two_shift() {
        let c =
            sft_catalog(&Adjacency::full(2).unwrap(), &RoofFunction::constant(1.0), &Cocycle::default(), 4).unwrap();
        let mut per = [0; 5];
        for o in &c.orbits {
            per[o.base_period as usize] += 1;
        }
        assert_eq!(&per[1..], &[2, 1, 2, 3]);
        assert!(catalog_validate(&c).passed());
        assert_eq!(c.t_complete, 4.0);
    }

    #[test]
    fn additive_lengths() {
        let roof = RoofFunction::per_symbol(&[2f64.ln(), 3f64.ln()]);
        let c = sft_catalog(&Adjacency::full(2).unwrap(), &roof, &Cocycle::default(), 2).unwrap();
        let o = c.orbits.iter().find(|o| &*o.word == "01").unwrap();
        assert!((o.length - 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn reducible_rejected() {
        let adj = Adjacency::new(vec![vec![1, 1], vec![0, 1]]).unwrap();
        let r = sft_catalog(&adj, &RoofFunction::constant(1.0), &Cocycle::default(), 3);
        assert!(matches!(r, Err(Error::Model(_))));
    }

    #[test]
    fn non_hyperbolic_cycle_rejected() {
        let mut map = HashMap::new();
        let hyp = SmallMatrix::from_integers(2, &[2, 1, 1, 1]).unwrap();
        let rot = SmallMatrix::from_integers(2, &[0, -1, 1, 0]).unwrap();
        map.insert((0, 0), hyp.clone());
        map.insert((0, 1), hyp.clone());
        map.insert((1, 0), hyp);
        map.insert((1, 1), rot);
        let c =
            sft_catalog(&Adjacency::full(2).unwrap(), &RoofFunction::constant(1.0), &Cocycle::PerTransition(map), 3)
                .unwrap();
        assert!(c.orbits.iter().all(|o| &*o.word != "1"));
        assert!(c.diagnostics.iter().any(|d| d.starts_with("orbit 1:")));
        assert!(catalog_validate(&c).passed());
    }
}
