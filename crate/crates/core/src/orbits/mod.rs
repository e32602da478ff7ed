//! Prime orbit catalogs and their validation.

pub mod fuchsian;
pub mod lyndon;
pub mod modular;
pub mod roof;
pub mod sft;
pub mod toral;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orientation_sign, Sign, SmallMatrix};

/// One prime closed orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeOrbit {
    pub length: f64,
    /// Canonical symbolic representative; empty when the source has none.
    pub word: Box<str>,
    /// `D_hyp φ_{−λ}` of the prime orbit. Orbits of one toral period share an allocation.
    pub linearization: Arc<SmallMatrix>,
    pub orientation: Sign,
    /// Return-map period or word length, 0 if not applicable.
    pub base_period: u32,
}

impl PrimeOrbit {
    pub fn label(&self) -> String {
        if self.word.is_empty() {
            format!("<lambda={}>", self.length)
        } else {
            self.word.to_string()
        }
    }
}

pub(crate) fn orbit_order(a: &PrimeOrbit, b: &PrimeOrbit) -> Ordering {
    a.length.total_cmp(&b.length).then_with(|| a.word.cmp(&b.word))
}

/// A prime orbit traversed `m` times.
#[derive(Clone, Copy, Debug)]
pub struct OrbitInstance<'a> {
    pub prime: &'a PrimeOrbit,
    pub m: u32,
}

impl OrbitInstance<'_> {
    pub fn length(&self) -> f64 {
        self.m as f64 * self.prime.length
    }

    pub fn multiplicity(&self) -> u32 {
        self.m
    }

    pub fn linearization(&self) -> SmallMatrix {
        self.prime.linearization.pow(self.m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    pub d: usize,
    pub ds: usize,
    pub du: usize,
}

impl Dimensions {
    pub fn new(ds: usize, du: usize) -> Self {
        Self { d: ds + du + 1, ds, du }
    }

    pub fn check(&self) -> Result<()> {
        if self.ds == 0 || self.du == 0 || self.ds + self.du + 1 != self.d {
            return Err(Error::Validation(format!(
                "dimensions d={} ds={} du={} violate ds+du+1=d with ds,du>=1",
                self.d, self.ds, self.du
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Toral,
    Sft,
    Fuchsian,
    Synthetic,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Toral => "toral",
            SourceKind::Sft => "sft",
            SourceKind::Fuchsian => "fuchsian",
            SourceKind::Synthetic => "synthetic",
        })
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toral" => Ok(SourceKind::Toral),
            "sft" => Ok(SourceKind::Sft),
            "fuchsian" => Ok(SourceKind::Fuchsian),
            "synthetic" => Ok(SourceKind::Synthetic),
            _ => Err(Error::Format(format!("unknown source kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceDescriptor {
    pub kind: SourceKind,
    /// Generator parameters, serialized verbatim into the catalog header.
    pub params: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitCatalog {
    pub orbits: Vec<PrimeOrbit>,
    pub dims: Dimensions,
    /// Every prime orbit with length at most this is present.
    pub t_complete: f64,
    pub source: SourceDescriptor,
    /// Per-orbit rejections and warnings collected during enumeration.
    pub diagnostics: Vec<String>,
}

impl OrbitCatalog {
    pub fn new(
        mut orbits: Vec<PrimeOrbit>,
        dims: Dimensions,
        t_complete: f64,
        source: SourceDescriptor,
        diagnostics: Vec<String>,
    ) -> Self {
        orbits.sort_by(orbit_order);
        Self { orbits, dims, t_complete, source, diagnostics }
    }

    pub fn empty(dims: Dimensions) -> Self {
        Self::new(
            Vec::new(),
            dims,
            f64::INFINITY,
            SourceDescriptor { kind: SourceKind::Synthetic, params: serde_json::Value::Null },
            Vec::new(),
        )
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn min_length(&self) -> Option<f64> {
        self.orbits.first().map(|o| o.length)
    }

    pub fn max_length(&self) -> Option<f64> {
        self.orbits.last().map(|o| o.length)
    }

    /// True when the catalog holds orbits longer than `t_complete`, which may be incomplete.
    pub fn partial_above(&self) -> bool {
        self.max_length().is_some_and(|l| l > self.t_complete)
    }

    /// Surface geodesic flows: `d_s = d_u = 1` and ε ≡ +1.
    pub fn is_geodesic_type(&self) -> bool {
        self.dims.ds == 1 && self.dims.du == 1 && self.orbits.iter().all(|o| o.orientation == Sign::Plus)
    }

    /// True when every length is an integer.
    pub fn has_integer_lengths(&self) -> bool {
        self.orbits.iter().all(|o| o.length.fract() == 0.0)
    }

    /// Instances `(prime, m)` with `m·λ_p ≤ t_max`, in increasing length.
    pub fn instances(&self, t_max: f64) -> Vec<OrbitInstance<'_>> {
        let mut out = Vec::new();
        for p in &self.orbits {
            let mut m = 1u32;
            while m as f64 * p.length <= t_max {
                out.push(OrbitInstance { prime: p, m });
                m += 1;
            }
        }
        out.sort_by(|a, b| a.length().total_cmp(&b.length()).then_with(|| orbit_order(a.prime, b.prime)));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationFailure {
    pub orbit: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub orbit_count: usize,
    pub min_length: Option<f64>,
    pub max_length: Option<f64>,
    /// `(k, count)` with `count` orbits of length in `[k, k+1)`.
    pub length_bins: Vec<(u64, usize)>,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            return Ok(self);
        }
        let listed: Vec<String> = self.failures.iter().take(20).map(|f| format!("{}: {}", f.orbit, f.reason)).collect();
        Err(Error::Validation(format!("{} violation(s): {}", self.failures.len(), listed.join("; "))))
    }
}

fn is_canonical_cyclic(word: &[u8]) -> bool {
    // a lift label `w@j` is canonical when `w` is
    let word = match word.iter().position(|&c| c == b'@') {
        Some(i) if word[i + 1..].iter().all(u8::is_ascii_digit) && i + 1 < word.len() => &word[..i],
        _ => word,
    };
    let n = word.len();
    if n == 0 {
        return false;
    }
    // Lyndon: strictly smaller than every proper rotation
    (1..n).all(|r| {
        let rot = word[r..].iter().chain(&word[..r]);
        word.iter().cmp(rot) == Ordering::Less
    })
}

/// Re-checks every catalog invariant.
pub fn catalog_validate(catalog: &OrbitCatalog) -> ValidationReport {
    let mut failures = Vec::new();
    let mut fail =
        |orbit: &PrimeOrbit, reason: String| failures.push(ValidationFailure { orbit: orbit.label(), reason });

    let dims_ok = catalog.dims.check();
    let mut length_bins: Vec<(u64, usize)> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::with_capacity(catalog.orbits.len());
    // orientation and hyperbolicity are functions of the matrix: check each allocation once
    let mut lin_checked: HashMap<*const SmallMatrix, Result<Sign>> = HashMap::new();
    let symbolic = matches!(catalog.source.kind, SourceKind::Sft | SourceKind::Fuchsian);

    for (i, o) in catalog.orbits.iter().enumerate() {
        if !(o.length > 0.0 && o.length.is_finite()) {
            fail(o, format!("length {} not positive and finite", o.length));
        }
        if i > 0 {
            let prev = &catalog.orbits[i - 1];
            match orbit_order(prev, o) {
                Ordering::Less => {}
                Ordering::Equal => fail(o, "duplicate orbit".into()),
                Ordering::Greater => fail(o, "catalog not sorted by (length, word)".into()),
            }
        }
        if !o.word.is_empty()
            && !seen.insert(&o.word)
            && (i == 0 || orbit_order(&catalog.orbits[i - 1], o) != Ordering::Equal)
        {
            fail(o, "word appears twice".into());
        }
        if symbolic && !is_canonical_cyclic(o.word.as_bytes()) {
            fail(o, "word is not a primitive minimal rotation".into());
        }
        if o.linearization.dim() + 1 != catalog.dims.d {
            fail(o, format!("linearization dimension {} but d = {}", o.linearization.dim(), catalog.dims.d));
            continue;
        }
        let key = Arc::as_ptr(&o.linearization);
        let sign = lin_checked.entry(key).or_insert_with(|| {
            if !o.linearization.is_hyperbolic() {
                return Err(Error::NonHyperbolic("eigenvalue on the unit circle".into()));
            }
            orientation_sign(&o.linearization, catalog.dims.ds)
        });
        match sign {
            Ok(s) if *s == o.orientation => {}
            Ok(s) => {
                fail(o, format!("orientation {} but (-1)^ds sign det(I-M) = {}", o.orientation.as_i32(), s.as_i32()))
            }
            Err(e) => fail(o, e.to_string()),
        }
        if o.length.is_finite() && o.length >= 0.0 {
            let k = o.length.floor() as u64;
            match length_bins.last_mut() {
                Some((b, c)) if *b == k => *c += 1,
                _ => length_bins.push((k, 1)),
            }
        }
    }
    if let Err(e) = dims_ok {
        failures.push(ValidationFailure { orbit: "<catalog>".into(), reason: e.to_string() });
    }
    length_bins.sort();
    length_bins.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 += a.1;
            true
        } else {
            false
        }
    });
    ValidationReport {
        orbit_count: catalog.orbits.len(),
        min_length: catalog.min_length(),
        max_length: catalog.max_length(),
        length_bins,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orbit(length: f64, word: &str) -> PrimeOrbit {
        let lin = SmallMatrix::from_integers(2, &[1, -1, -1, 2]).unwrap();
        PrimeOrbit { length, word: word.into(), linearization: Arc::new(lin), orientation: Sign::Plus, base_period: 1 }
    }

    fn catalog(orbits: Vec<PrimeOrbit>) -> OrbitCatalog {
        OrbitCatalog {
            orbits,
            dims: Dimensions::new(1, 1),
            t_complete: 1.0,
            source: SourceDescriptor { kind: SourceKind::Synthetic, params: serde_json::Value::Null },
            diagnostics: vec![],
        }
    }

    #[test]
    fn instances_are_sorted_and_truncated() {
        let c = catalog(vec![orbit(1.0, "a"), orbit(1.5, "b")]);
        let ls: Vec<f64> = c.instances(3.0).iter().map(|i| i.length()).collect();
        assert_eq!(ls, vec![1.0, 1.5, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn duplicate_is_reported() {
        let c = catalog(vec![orbit(1.0, "a"), orbit(1.0, "a")]);
        let r = catalog_validate(&c);
        assert!(!r.passed());
        assert_eq!(r.failures[0].orbit, "a");
        assert!(r.into_result().is_err());
    }

    #[test]
    fn wrong_sign_is_reported() {
        let mut o = orbit(1.0, "a");
        o.orientation = Sign::Minus;
        let r = catalog_validate(&catalog(vec![o]));
        assert!(r.failures[0].reason.contains("orientation"));
    }

    #[test]
    fn unsorted_is_reported() {
        let r = catalog_validate(&catalog(vec![orbit(2.0, "a"), orbit(1.0, "b")]));
        assert!(r.failures.iter().any(|f| f.reason.contains("sorted")));
    }

    #[test]
    fn canonical_cyclic_words() {
        assert!(is_canonical_cyclic(b"aab"));
        assert!(!is_canonical_cyclic(b"aba"));
        assert!(!is_canonical_cyclic(b"abab"));
        assert!(is_canonical_cyclic(b"a"));
    }
}
