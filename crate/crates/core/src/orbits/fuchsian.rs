//! Length spectra of Fuchsian groups from conjugacy classes of primitive
//! hyperbolic elements.
//!
//! Generator `i` is written `'a' + i` and its inverse `'A' + i`. Internally
//! letters are indexed in ASCII order, inverses first, so Lyndon words over
//! the indices are exactly the least rotations of the printed strings.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{Sign, SmallMatrix};
use crate::orbits::lyndon::{for_each_lyndon, min_rotation, primitive_period};
use crate::orbits::{Dimensions, OrbitCatalog, PrimeOrbit, SourceDescriptor, SourceKind};

pub type Mat2 = [[f64; 2]; 2];

const DET_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FuchsianGroup {
    pub name: String,
    pub generators: Vec<Mat2>,
    /// Relators in the letter notation, e.g. `"aBcDAbCd"`.
    pub relators: Vec<String>,
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn inv(a: &Mat2) -> Mat2 {
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

fn rot(t: f64) -> Mat2 {
    [[t.cos(), -t.sin()], [t.sin(), t.cos()]]
}

/// Free group on `A = [[1,1],[1,2]]`, `B = [[1,−1],[−1,2]]` (once-punctured torus).
pub fn punctured_torus_group() -> FuchsianGroup {
    FuchsianGroup {
        name: "ptorus".into(),
        generators: vec![[[1.0, 1.0], [1.0, 2.0]], [[1.0, -1.0], [-1.0, 2.0]]],
        relators: vec![],
    }
}

/// Genus-2 Bolza surface group. `g_k` translates by `ℓ` along the axis obtained by
/// rotating the imaginary axis of the disc by `kπ/4`, with `cosh(ℓ/2) = 1 + √2`.
pub fn bolza_group() -> FuchsianGroup {
    let half = (1.0 + std::f64::consts::SQRT_2).acosh();
    let d = [[half.exp(), 0.0], [0.0, (-half).exp()]];
    let generators = (0..4)
        .map(|k| {
            // a rotation of the disc by θ is the SL(2,R) rotation by θ/2
            let t = k as f64 * std::f64::consts::PI / 8.0;
            mul(&mul(&rot(t), &d), &rot(-t))
        })
        .collect();
    FuchsianGroup { name: "bolza".into(), generators, relators: vec!["aBcDAbCd".into()] }
}

struct Alphabet {
    k: usize,
    mats: Vec<Mat2>,
}

impl Alphabet {
    fn new(gens: &[Mat2]) -> Self {
        let k = gens.len();
        let mut mats: Vec<Mat2> = gens.iter().map(inv).collect();
        mats.extend_from_slice(gens);
        Self { k, mats }
    }

    fn inverse(&self, l: u8) -> u8 {
        ((l as usize + self.k) % (2 * self.k)) as u8
    }

    fn char(&self, l: u8) -> char {
        let l = l as usize;
        if l < self.k {
            (b'A' + l as u8) as char
        } else {
            (b'a' + (l - self.k) as u8) as char
        }
    }

    fn parse(&self, s: &str) -> Result<Vec<u8>> {
        s.bytes()
            .map(|c| match c {
                b'A'..=b'Z' if ((c - b'A') as usize) < self.k => Ok(c - b'A'),
                b'a'..=b'z' if ((c - b'a') as usize) < self.k => Ok(c - b'a' + self.k as u8),
                _ => Err(Error::Model(format!("letter {:?} outside the generators", c as char))),
            })
            .collect()
    }

    fn render(&self, w: &[u8]) -> String {
        w.iter().map(|&l| self.char(l)).collect()
    }

    fn product(&self, w: &[u8]) -> Mat2 {
        w.iter().fold([[1.0, 0.0], [0.0, 1.0]], |acc, &l| mul(&acc, &self.mats[l as usize]))
    }

    fn trace(&self, w: &[u8]) -> f64 {
        let p = self.product(w);
        p[0][0] + p[1][1]
    }

    fn invert_word(&self, w: &[u8]) -> Vec<u8> {
        w.iter().rev().map(|&l| self.inverse(l)).collect()
    }

    /// Cancels adjacent inverse pairs, including across the wrap.
    fn cyclic_reduce(&self, w: &[u8]) -> Vec<u8> {
        let mut out: Vec<u8> = Vec::with_capacity(w.len());
        for &l in w {
            if out.last().is_some_and(|&p| p == self.inverse(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        let (mut i, mut j) = (0, out.len());
        while j - i >= 2 && out[i] == self.inverse(out[j - 1]) {
            i += 1;
            j -= 1;
        }
        out[i..j].to_vec()
    }
}

fn near_identity(m: &Mat2) -> bool {
    let s = if m[0][0] < 0.0 { -1.0 } else { 1.0 };
    (m[0][0] - s).abs() < 1e-9 && (m[1][1] - s).abs() < 1e-9 && m[0][1].abs() < 1e-9 && m[1][0].abs() < 1e-9
}

/// The cyclic conjugates of each relator and its inverse.
struct RelatorCycles {
    cycles: Vec<Vec<u8>>,
}

impl RelatorCycles {
    fn new(alpha: &Alphabet, relators: &[Vec<u8>]) -> Self {
        let mut cycles = Vec::new();
        for r in relators {
            for base in [r.clone(), alpha.invert_word(r)] {
                for s in 0..base.len() {
                    let rotated: Vec<u8> = base[s..].iter().chain(&base[..s]).copied().collect();
                    if !cycles.contains(&rotated) {
                        cycles.push(rotated);
                    }
                }
            }
        }
        Self { cycles }
    }

    /// Cyclic words obtained by replacing a piece of `w` that is a prefix of `r` of length
    /// `piece` by the inverse of the rest of `r`.
    fn swaps(&self, alpha: &Alphabet, w: &[u8], piece: impl Fn(usize) -> usize) -> Vec<Vec<u8>> {
        let n = w.len();
        let mut out = Vec::new();
        for r in &self.cycles {
            let p = piece(r.len());
            if p == 0 || p > n {
                continue;
            }
            for s in 0..n {
                if (0..p).all(|i| w[(s + i) % n] == r[i]) {
                    let rest = alpha.invert_word(&r[p..]);
                    let mut nw = rest;
                    nw.extend((p..n).map(|i| w[(s + i) % n]));
                    out.push(alpha.cyclic_reduce(&nw));
                }
            }
        }
        out
    }
}

fn validate_relators(alpha: &Alphabet, relators: &[Vec<u8>]) -> Result<()> {
    for r in relators {
        let ok = (0..r.len()).any(|s| {
            let rot: Vec<u8> = r[s..].iter().chain(&r[..s]).copied().collect();
            near_identity(&alpha.product(&rot)) || near_identity(&alpha.product(&alpha.invert_word(&rot)))
        });
        if !ok {
            return Err(Error::Model(format!("relator {} does not evaluate to ±I", alpha.render(r))));
        }
    }
    Ok(())
}

/// Canonical representative of the class of `w` under half-relator swaps, or `None` when
/// the class has a shorter representative or is a proper power.
fn surface_canonical(alpha: &Alphabet, rels: &RelatorCycles, w: &[u8]) -> Result<Option<Vec<u8>>> {
    let n = w.len();
    let start = min_rotation(w);
    let trace = alpha.trace(w).abs();
    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        // more than half a relator: strictly shorter word in the class
        if !rels.swaps(alpha, &v, |len| len / 2 + 1).is_empty() {
            return Ok(None);
        }
        if primitive_period(&v) != n {
            return Ok(None);
        }
        for nw in rels.swaps(alpha, &v, |len| if len % 2 == 0 { len / 2 } else { 0 }) {
            if nw.len() < n {
                return Ok(None);
            }
            let key = min_rotation(&nw);
            if seen.insert(key.clone()) {
                let t = alpha.trace(&key).abs();
                if (t - trace).abs() > TRACE_TOL * trace.max(1.0) {
                    return Err(Error::Model(format!(
                        "words {} and {} related by the relator have traces {trace} and {t}",
                        alpha.render(w),
                        alpha.render(&key)
                    )));
                }
                queue.push_back(key);
            }
        }
    }
    Ok(seen.into_iter().next())
}

/// One prime orbit per primitive hyperbolic conjugacy class reachable with cyclically
/// reduced words of length at most `l_max`.
pub fn fuchsian_catalog(group: &FuchsianGroup, l_max: u32) -> Result<OrbitCatalog> {
    if l_max == 0 {
        return Err(Error::Parameter("l_max must be at least 1".into()));
    }
    if group.generators.is_empty() || group.generators.len() > 13 {
        return Err(Error::Parameter("between 1 and 13 generators supported".into()));
    }
    let mut diagnostics = Vec::new();
    for (i, g) in group.generators.iter().enumerate() {
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if !g.iter().flatten().all(|v| v.is_finite()) || (det - 1.0).abs() > DET_TOL {
            return Err(Error::Model(format!("generator {i} has determinant {det}, expected 1")));
        }
        let tr = (g[0][0] + g[1][1]).abs();
        if tr <= 2.0 && group.relators.is_empty() {
            diagnostics.push(format!("generator {i} has |trace| {tr} <= 2"));
        }
    }
    let alpha = Alphabet::new(&group.generators);
    let relators: Vec<Vec<u8>> = group.relators.iter().map(|r| alpha.parse(r)).collect::<Result<_>>()?;
    validate_relators(&alpha, &relators)?;
    let rels = RelatorCycles::new(&alpha, &relators);

    let k2 = 2 * alpha.k;
    let mut words = Vec::new();
    for_each_lyndon(k2, l_max as usize, |a, b| b != alpha.inverse(a), |w| words.push(w.to_vec()));

    let mut orbits = Vec::new();
    let mut seen_keys: HashSet<Vec<u8>> = HashSet::new();
    for w in words {
        if !relators.is_empty() {
            match surface_canonical(&alpha, &rels, &w)? {
                Some(key) if key == w => {
                    if !seen_keys.insert(key) {
                        continue;
                    }
                }
                _ => continue,
            }
        }
        let label = alpha.render(&w);
        let tr = alpha.trace(&w);
        let rotated: Vec<u8> = w[1..].iter().chain(&w[..1]).copied().collect();
        let tr_rot = alpha.trace(&rotated);
        if (tr - tr_rot).abs() > TRACE_TOL * tr.abs().max(1.0) {
            return Err(Error::Model(format!("trace of {label} not conjugation invariant: {tr} vs {tr_rot}")));
        }
        let a = tr.abs();
        if a <= 2.0 + TRACE_TOL {
            diagnostics.push(format!("orbit {label}: |trace| {a} <= 2 (elliptic or parabolic), skipped"));
            continue;
        }
        let length = 2.0 * (a / 2.0).acosh();
        let lin = SmallMatrix::diagonal_f64(&[length.exp(), (-length).exp()])?;
        orbits.push(PrimeOrbit {
            length,
            word: label.into_boxed_str(),
            linearization: Arc::new(lin),
            orientation: Sign::Plus,
            base_period: w.len() as u32,
        });
    }
    let t_complete = orbits.iter().filter(|o| o.base_period == l_max).map(|o| o.length).fold(f64::INFINITY, f64::min);
    let t_complete = if t_complete.is_finite() { t_complete } else { 0.0 };
    if diagnostics.iter().any(|d| d.contains("parabolic")) {
        diagnostics.push(
            "group has a cusp: geodesics winding around it have long words, so t_complete is not certified \
             (use the modular torus enumeration for a length-complete catalog)"
                .into(),
        );
    }
    let params = json!({
        "group": group.name,
        "generators": group.generators,
        "relators": group.relators,
        "l_max": l_max,
    });
    Ok(OrbitCatalog::new(
        orbits,
        Dimensions::new(1, 1),
        t_complete,
        SourceDescriptor { kind: SourceKind::Fuchsian, params },
        diagnostics,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::catalog_validate;

    #[test]
    fn translation_length() {
        let want = (1.5f64 + (1.5f64 * 1.5 - 1.0).sqrt()).ln() * 2.0;
        let c = fuchsian_catalog(&punctured_torus_group(), 1).unwrap();
        assert_eq!(c.len(), 4);
        for o in &c.orbits {
            assert!((o.length - want).abs() < 1e-14);
            assert!((o.length - 1.9248473002384139).abs() < 1e-12);
        }
        let words: Vec<&str> = c.orbits.iter().map(|o| &*o.word).collect();
        assert_eq!(words, vec!["A", "B", "a", "b"]);
    }

    #[test]
    fn commutator_is_skipped() {
        let c = fuchsian_catalog(&punctured_torus_group(), 4).unwrap();
        assert!(c.diagnostics.iter().any(|d| d.contains("parabolic")));
        assert!(catalog_validate(&c).passed());
    }

    #[test]
    fn rotations_give_one_entry() {
        let c = fuchsian_catalog(&punctured_torus_group(), 3).unwrap();
        let hits = c.orbits.iter().filter(|o| ["aab", "aba", "baa"].contains(&&*o.word)).count();
        assert_eq!(hits, 1);
    }

    #[test]
    fn bolza_relator_holds() {
        let g = bolza_group();
        let alpha = Alphabet::new(&g.generators);
        let r = alpha.parse(&g.relators[0]).unwrap();
        assert!(near_identity(&alpha.product(&r)));
        for m in &g.generators {
            let tr = m[0][0] + m[1][1];
            assert!((tr - 2.0 * (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-12);
        }
    }

    #[test]
    fn broken_relator_rejected() {
        let mut g = bolza_group();
        g.relators = vec!["abcdABCD".into()];
        assert!(matches!(fuchsian_catalog(&g, 2), Err(Error::Model(_))));
    }

    #[test]
    fn bolza_systole() {
        let c = fuchsian_catalog(&bolza_group(), 3).unwrap();
        let sys = 2.0 * (1.0 + std::f64::consts::SQRT_2).acosh();
        assert!((c.orbits[0].length - sys).abs() < 1e-9);
        assert!(catalog_validate(&c).passed());
    }

    #[test]
    fn reduction_helpers() {
        let alpha = Alphabet::new(&punctured_torus_group().generators);
        let w = alpha.parse("aAbab").unwrap();
        assert_eq!(alpha.render(&alpha.cyclic_reduce(&w)), "bab");
        let w = alpha.parse("Bab").unwrap();
        assert_eq!(alpha.render(&alpha.cyclic_reduce(&w)), "a");
    }
}
