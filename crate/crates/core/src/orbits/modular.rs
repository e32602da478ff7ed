//! Closed geodesics of the modular torus `Γ'\H`, `Γ' = [PSL(2,Z), PSL(2,Z)]`, complete up
//! to a length bound.
//!
//! Primitive hyperbolic classes of PSL(2,Z) are the Lyndon words of length ≥ 2 over
//! `L = [[1,0],[1,1]]`, `R = [[1,1],[0,1]]`. Every entry of a product grows when a letter is
//! appended, so prefixes can be pruned by trace. `Γ'` is the kernel of
//! `χ(w) = #R − #L mod 6`; a class `w` with `g = gcd(χ(w), 6)` lifts to `g` primitive
//! geodesics of `Γ'\H`, each of length `(6/g)·ℓ(w)`. Lift `j` is the class of
//! `Rʲ wᵏ R⁻ʲ` and is labelled `w@j`.
//!
//! The surface is the punctured torus generated by `LR` and `RL`; word-length enumeration
//! on those generators (see [`super::fuchsian`]) misses short geodesics that wind around the
//! cusp, which this enumeration does not.

use std::sync::Arc;

use num_integer::Integer;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{Sign, SmallMatrix};
use crate::orbits::{Dimensions, OrbitCatalog, PrimeOrbit, SourceDescriptor, SourceKind};

/// Above this the trace-bounded tree has more than ~10⁹ nodes.
pub const MAX_LENGTH: f64 = 24.0;

struct Node {
    depth: usize,
    letter: u8,
    period: usize,
    m: [u64; 4],
    n_r: u32,
}

fn times(m: &[u64; 4], letter: u8) -> [u64; 4] {
    let [a, b, c, d] = *m;
    if letter == 0 {
        [a + b, b, c + d, d]
    } else {
        [a, a + b, c, c + d]
    }
}

/// Primitive PSL(2,Z) classes with trace at most `x_max`: `(word, trace, #R)`.
fn psl2z_classes(x_max: f64) -> Vec<(Vec<u8>, u64, u32)> {
    let mut out = Vec::new();
    let mut word: Vec<u8> = Vec::new();
    let mut stack = vec![Node { depth: 1, letter: 0, period: 1, m: [1, 0, 1, 1], n_r: 0 }];
    while let Some(node) = stack.pop() {
        word.truncate(node.depth - 1);
        word.push(node.letter);
        let t = node.depth;
        // with no R yet, the cheapest completion is LᵗR of trace t + 2
        let bound = if node.n_r == 0 { t as f64 + 2.0 } else { (node.m[0] + node.m[3]) as f64 };
        if bound > x_max {
            continue;
        }
        if node.period == t && t >= 2 {
            out.push((word.clone(), node.m[0] + node.m[3], node.n_r));
        }
        let lo = word[t - node.period];
        for letter in (lo..=1).rev() {
            stack.push(Node {
                depth: t + 1,
                letter,
                period: if letter == lo { node.period } else { t + 1 },
                m: times(&node.m, letter),
                n_r: node.n_r + letter as u32,
            });
        }
    }
    out
}

/// Every primitive oriented closed geodesic of the modular torus with length `≤ t_max`.
pub fn modular_torus_catalog(t_max: f64) -> Result<OrbitCatalog> {
    if !(t_max > 0.0 && t_max <= MAX_LENGTH) {
        return Err(Error::Parameter(format!("modular torus length bound {t_max} outside (0, {MAX_LENGTH}]")));
    }
    let x_max = 2.0 * (0.5 * t_max).cosh() * (1.0 + 1e-12);
    let mut orbits = Vec::new();
    for (w, tr, n_r) in psl2z_classes(x_max) {
        let chi = (2 * n_r as i64 - w.len() as i64).rem_euclid(6);
        let g = chi.gcd(&6) as usize;
        let k = 6 / g;
        let length = k as f64 * 2.0 * (0.5 * tr as f64).acosh();
        if length > t_max {
            continue;
        }
        let letters: String = w.iter().map(|&c| if c == 0 { 'L' } else { 'R' }).collect();
        let lin = Arc::new(SmallMatrix::diagonal_f64(&[length.exp(), (-length).exp()])?);
        for j in 0..g {
            orbits.push(PrimeOrbit {
                length,
                word: format!("{letters}@{j}").into(),
                linearization: lin.clone(),
                orientation: Sign::Plus,
                base_period: (w.len() * k) as u32,
            });
        }
    }
    Ok(OrbitCatalog::new(
        orbits,
        Dimensions::new(1, 1),
        t_max,
        SourceDescriptor { kind: SourceKind::Fuchsian, params: json!({ "group": "modular_torus", "t_max": t_max }) },
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::catalog_validate;
    use crate::orbits::fuchsian::{fuchsian_catalog, punctured_torus_group};

    #[test]
    fn shortest_geodesics() {
        let c = modular_torus_catalog(4.0).unwrap();
        assert!(catalog_validate(&c).passed());
        // a, b, ab and inverses all have trace 3
        let short: Vec<_> = c.orbits.iter().filter(|o| o.length < 2.0).collect();
        assert_eq!(short.len(), 6);
        assert!((short[0].length - 2.0 * 1.5f64.acosh()).abs() < 1e-14);
        // next: trace 6 (LLRR, χ = 0)
        assert_eq!(c.orbits.iter().filter(|o| o.length < 3.6).count(), 12);
    }

    #[test]
    fn agrees_with_word_enumeration_where_that_is_complete() {
        // word length 8 on the free generators finds every geodesic shorter than the
        // shortest one it sees at word length 9, which is a cusp excursion
        let words = fuchsian_catalog(&punctured_torus_group(), 9).unwrap();
        let cusp_min =
            words.orbits.iter().filter(|o| o.base_period == 9).map(|o| o.length).fold(f64::INFINITY, f64::min);
        let c = modular_torus_catalog(cusp_min).unwrap();
        let a: Vec<f64> = words.orbits.iter().map(|o| o.length).filter(|&l| l < cusp_min - 1e-9).collect();
        let b: Vec<f64> = c.orbits.iter().map(|o| o.length).filter(|&l| l < cusp_min - 1e-9).collect();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9 * x, "{x} vs {y}");
        }
    }

    #[test]
    fn brute_force_classes() {
        // every Lyndon word up to length 10 with trace ≤ 40, by direct enumeration
        let mut want = Vec::new();
        for n in 2..=10usize {
            for bits in 0u32..(1 << n) {
                let w: Vec<u8> = (0..n).map(|i| ((bits >> (n - 1 - i)) & 1) as u8).collect();
                if !crate::orbits::lyndon::is_lyndon(&w) {
                    continue;
                }
                let m = w.iter().fold([1u64, 0, 0, 1], |m, &c| times(&m, c));
                if m[0] + m[3] <= 40 {
                    want.push(w);
                }
            }
        }
        let mut got: Vec<Vec<u8>> = psl2z_classes(40.0).into_iter().map(|x| x.0).filter(|w| w.len() <= 10).collect();
        want.sort();
        got.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn bounds() {
        assert!(modular_torus_catalog(0.0).is_err());
        assert!(modular_torus_catalog(100.0).is_err());
        assert!(modular_torus_catalog(1.5).unwrap().is_empty());
    }
}
