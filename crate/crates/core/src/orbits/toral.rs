//! Periodic points of hyperbolic automorphisms of the 2-torus and the
//! prime orbits of their suspensions.
//!
//! `Fix(Aⁿ)` is the lattice `(Aⁿ − I)⁻¹ℤ² / ℤ²`. With the Smith form
//! `U(Aⁿ − I)V = diag(d₁, d₂)` its points are `V·(i/d₁, j/d₂)`, so every
//! point is stored as an integer pair over `q = d₁d₂ = |det(Aⁿ − I)|`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{orientation_sign, SmallMatrix};
use crate::orbits::roof::RoofFunction;
use crate::orbits::{Dimensions, OrbitCatalog, PrimeOrbit, SourceDescriptor, SourceKind};
use crate::sum::NeumaierSum;

/// Largest denominator `q` enumerated exactly.
pub const Q_BUDGET: u64 = 1 << 40;

const CHUNK: u64 = 1 << 15;

/// Row-major integer 2×2 matrix.
pub type IntMatrix2 = [[i64; 2]; 2];

type M2 = [[i128; 2]; 2];

/// The point `(x/q, y/q)` with `0 ≤ x, y < q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalPoint {
    pub x: u64,
    pub y: u64,
    pub q: u64,
}

impl RationalPoint {
    /// Coordinates as reduced fractions, `"x/q,y/q"`.
    pub fn word(&self) -> String {
        let red = |v: u64| {
            let g = v.gcd(&self.q);
            format!("{}/{}", v / g, self.q / g)
        };
        format!("{},{}", red(self.x), red(self.y))
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x as f64 / self.q as f64, self.y as f64 / self.q as f64]
    }
}

fn mul2(a: &M2, b: &M2) -> Option<M2> {
    let mut c = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0].checked_mul(b[0][j])?.checked_add(a[i][1].checked_mul(b[1][j])?)?;
        }
    }
    Some(c)
}

fn widen(a: &IntMatrix2) -> M2 {
    [[a[0][0] as i128, a[0][1] as i128], [a[1][0] as i128, a[1][1] as i128]]
}

fn check_hyperbolic(a: &IntMatrix2) -> Result<()> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let tr = a[0][0] + a[1][1];
    let ok = match det {
        1 => tr.abs() > 2,
        // eigenvalues real, |λ| = 1 only when tr = 0
        -1 => tr != 0,
        _ => return Err(Error::Model(format!("det A = {det}, expected ±1"))),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Model(format!("A with trace {tr}, det {det} is not hyperbolic")))
    }
}

/// `(Aⁿ − I)` in 128-bit integers, or a truncation error when `|det| > Q_BUDGET`.
fn power_minus_identity(a: &IntMatrix2, n: u32) -> Result<(M2, M2)> {
    let overflow = || Error::Truncation(format!("A^{n} exceeds 128-bit integers"));
    let w = widen(a);
    let mut p: M2 = [[1, 0], [0, 1]];
    for _ in 0..n {
        p = mul2(&p, &w).ok_or_else(overflow)?;
    }
    let m = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
    let det = m[0][0].checked_mul(m[1][1]).zip(m[0][1].checked_mul(m[1][0])).ok_or_else(overflow)?;
    let q = (det.0 - det.1).unsigned_abs();
    if q > Q_BUDGET as u128 {
        return Err(Error::Truncation(format!("|det(A^{n} - I)| = {q} exceeds the exact budget {Q_BUDGET}")));
    }
    Ok((p, m))
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        return if a < 0 { (-a, -1, 0) } else { (a, 1, 0) };
    }
    let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
    (g, t, s - (a.div_euclid(b)) * t)
}

/// Smith form of a nonsingular 2×2 matrix: returns `(d₁, d₂, V)` with `d₁ | d₂` and
/// `U M V = diag(d₁, d₂)` for some unimodular `U` that is not tracked.
fn smith2(m: M2) -> (i128, i128, M2) {
    let mut a = m;
    let mut v: M2 = [[1, 0], [0, 1]];
    loop {
        // column operation: row 0 becomes (g, 0)
        if a[0][1] != 0 {
            let c: M2 = if a[0][0] != 0 && a[0][1] % a[0][0] == 0 {
                [[1, -a[0][1] / a[0][0]], [0, 1]]
            } else {
                let (g, s, t) = ext_gcd(a[0][0], a[0][1]);
                [[s, -a[0][1] / g], [t, a[0][0] / g]]
            };
            a = mul2(&a, &c).expect("bounded entries");
            v = mul2(&v, &c).expect("bounded entries");
        }
        // row operation: column 0 becomes (g, 0)
        if a[1][0] != 0 {
            let r: M2 = if a[1][0] % a[0][0] == 0 {
                [[1, 0], [-a[1][0] / a[0][0], 1]]
            } else {
                let (g, s, t) = ext_gcd(a[0][0], a[1][0]);
                [[s, t], [-a[1][0] / g, a[0][0] / g]]
            };
            a = mul2(&r, &a).expect("bounded entries");
        }
        if a[0][1] == 0 && a[1][0] == 0 {
            if a[1][1] % a[0][0] == 0 {
                break;
            }
            // fold row 1 into row 0 and repeat
            a[0][1] = a[1][1];
        }
    }
    (a[0][0].abs(), a[1][1].abs(), v)
}

/// Lattice of fixed points of `Aⁿ` on the torus.
struct FixedLattice {
    q: u64,
    d1: u64,
    d2: u64,
    v: M2,
    a: M2,
}

impl FixedLattice {
    fn new(a: &IntMatrix2, n: u32) -> Result<Self> {
        let (_, m) = power_minus_identity(a, n)?;
        let (d1, d2, v) = smith2(m);
        let q = (d1 * d2) as u64;
        let qi = q as i128;
        let v = [[v[0][0].rem_euclid(qi), v[0][1].rem_euclid(qi)], [v[1][0].rem_euclid(qi), v[1][1].rem_euclid(qi)]];
        let a = widen(a);
        let a = [[a[0][0].rem_euclid(qi), a[0][1].rem_euclid(qi)], [a[1][0].rem_euclid(qi), a[1][1].rem_euclid(qi)]];
        Ok(Self { q, d1: d1 as u64, d2: d2 as u64, v, a })
    }

    /// The `t`-th point, `0 ≤ t < q`.
    fn point(&self, t: u64) -> (u64, u64) {
        let q = self.q as i128;
        let i = (t / self.d2) as i128 * self.d2 as i128;
        let j = (t % self.d2) as i128 * self.d1 as i128;
        let x = (self.v[0][0] * i + self.v[0][1] * j).rem_euclid(q);
        let y = (self.v[1][0] * i + self.v[1][1] * j).rem_euclid(q);
        (x as u64, y as u64)
    }

    fn step(&self, (x, y): (u64, u64)) -> (u64, u64) {
        let q = self.q as i128;
        let (x, y) = (x as i128, y as i128);
        (((self.a[0][0] * x + self.a[0][1] * y) % q) as u64, ((self.a[1][0] * x + self.a[1][1] * y) % q) as u64)
    }
}

/// All `x ∈ [0,1)²` with `(Aⁿ − I)x ∈ ℤ²`, over the common denominator `|det(Aⁿ − I)|`.
pub fn toral_periodic_points(a: &IntMatrix2, n: u32) -> Result<Vec<RationalPoint>> {
    if n == 0 {
        return Err(Error::Parameter("period must be positive".into()));
    }
    check_hyperbolic(a)?;
    let lat = FixedLattice::new(a, n)?;
    let mut pts: Vec<RationalPoint> = (0..lat.q)
        .map(|t| {
            let (x, y) = lat.point(t);
            RationalPoint { x, y, q: lat.q }
        })
        .collect();
    pts.sort();
    Ok(pts)
}

/// Walks the orbit of `start` under `A`; returns the orbit points if `start` has least
/// period `n` and is the lexicographic minimum of its orbit.
fn canonical_orbit(lat: &FixedLattice, start: (u64, u64), n: u32, buf: &mut Vec<(u64, u64)>) -> bool {
    buf.clear();
    buf.push(start);
    let mut p = start;
    for _ in 1..n {
        p = lat.step(p);
        if p <= start {
            // p == start: shorter period; p < start: not the orbit minimum
            return false;
        }
        buf.push(p);
    }
    true
}

fn exact_inverse_power(a: &IntMatrix2, n: u32) -> SmallMatrix {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let adj = [a[1][1] * det, -a[0][1] * det, -a[1][0] * det, a[0][0] * det];
    // det = ±1, so A⁻¹ = det·adj(A)
    let inv = SmallMatrix::from_rationals(2, adj.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect())
        .expect("2x2");
    inv.pow(n)
}

fn period_orbits(a: &IntMatrix2, n: u32, roof: &RoofFunction, lin: &Arc<SmallMatrix>) -> Result<Vec<PrimeOrbit>> {
    let lat = FixedLattice::new(a, n)?;
    let orientation = orientation_sign(lin, 1).map_err(|e| e.in_orbit(format!("period {n}")))?;
    let chunks: Vec<u64> = (0..lat.q.div_ceil(CHUNK)).collect();
    let shards: Vec<Result<Vec<PrimeOrbit>>> = chunks
        .par_iter()
        .map(|&c| {
            let mut out = Vec::new();
            let mut buf = Vec::with_capacity(n as usize);
            for t in c * CHUNK..((c + 1) * CHUNK).min(lat.q) {
                let start = lat.point(t);
                if !canonical_orbit(&lat, start, n, &mut buf) {
                    continue;
                }
                let length = match roof {
                    RoofFunction::Constant { c } => n as f64 * c,
                    _ => {
                        let mut s = NeumaierSum::new();
                        for &(x, y) in buf.iter() {
                            s.add(roof.eval_torus(x, y, lat.q)?);
                        }
                        s.value()
                    }
                };
                let pt = RationalPoint { x: start.0, y: start.1, q: lat.q };
                out.push(PrimeOrbit {
                    length,
                    word: pt.word().into_boxed_str(),
                    linearization: Arc::clone(lin),
                    orientation,
                    base_period: n,
                });
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for s in shards {
        all.extend(s?);
    }
    Ok(all)
}

/// Prime orbits of least return period `n ≤ n_max` of the suspension of `A` under `roof`.
pub fn toral_suspension_catalog(a: &IntMatrix2, roof: &RoofFunction, n_max: u32) -> Result<OrbitCatalog> {
    if n_max == 0 {
        return Err(Error::Parameter("n_max must be at least 1".into()));
    }
    check_hyperbolic(a)?;
    roof.validate()?;
    if matches!(roof, RoofFunction::Table { .. }) {
        return Err(Error::Parameter("table roof needs a symbolic model".into()));
    }
    let mut orbits = Vec::new();
    for n in 1..=n_max {
        let lin = Arc::new(exact_inverse_power(a, n));
        orbits.extend(period_orbits(a, n, roof, &lin)?);
    }
    let params = json!({
        "A": a,
        "roof": roof,
        "n_max": n_max,
    });
    Ok(OrbitCatalog::new(
        orbits,
        Dimensions::new(1, 1),
        n_max as f64 * roof.lower_bound(),
        SourceDescriptor { kind: SourceKind::Toral, params },
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    const CAT: IntMatrix2 = [[2, 1], [1, 1]];
    const FIB: IntMatrix2 = [[1, 1], [1, 0]];

    /// Brute force over the grid `(1/q)ℤ²`.
    fn lattice_oracle(a: &IntMatrix2, n: u32) -> usize {
        let (p, m) = power_minus_identity(a, n).unwrap();
        let _ = p;
        let q = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).unsigned_abs() as i128;
        let mut count = 0;
        for x in 0..q {
            for y in 0..q {
                let u = m[0][0] * x + m[0][1] * y;
                let v = m[1][0] * x + m[1][1] * y;
                if u % q == 0 && v % q == 0 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn counts_match_lattice_oracle() {
        for n in 1..=5 {
            let pts = toral_periodic_points(&CAT, n).unwrap();
            assert_eq!(pts.len(), lattice_oracle(&CAT, n));
            let set: HashSet<_> = pts.iter().collect();
            assert_eq!(set.len(), pts.len());
        }
        assert_eq!(toral_periodic_points(&FIB, 4).unwrap().len(), lattice_oracle(&FIB, 4));
    }

    #[test]
    fn points_are_fixed_by_power() {
        let pts = toral_periodic_points(&CAT, 4).unwrap();
        let (p, _) = power_minus_identity(&CAT, 4).unwrap();
        for pt in pts {
            let q = pt.q as i128;
            let (x, y) = (pt.x as i128, pt.y as i128);
            assert_eq!((p[0][0] * x + p[0][1] * y).rem_euclid(q), x);
            assert_eq!((p[1][0] * x + p[1][1] * y).rem_euclid(q), y);
        }
    }

    #[test]
    fn first_counts() {
        let counts: Vec<usize> = (1..=6).map(|n| toral_periodic_points(&CAT, n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 5, 16, 45, 121, 320]);
        assert_eq!(toral_periodic_points(&CAT, 1).unwrap(), vec![RationalPoint { x: 0, y: 0, q: 1 }]);
    }

    #[test]
    fn smith_form_diagonal() {
        for m in [[[4i128, 6], [2, 8]], [[3, 5], [5, 8]], [[-1, 2], [3, 7]], [[6, 0], [0, 4]]] {
            let (d1, d2, v) = smith2(m);
            assert_eq!(d2 % d1, 0);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert_eq!(d1 * d2, det.abs());
            let vdet = v[0][0] * v[1][1] - v[0][1] * v[1][0];
            assert_eq!(vdet.abs(), 1);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(toral_periodic_points(&[[1, 1], [0, 1]], 1), Err(Error::Model(_))));
        assert!(matches!(toral_periodic_points(&[[2, 0], [0, 1]], 1), Err(Error::Model(_))));
        assert!(matches!(toral_periodic_points(&CAT, 40), Err(Error::Truncation(_))));
    }

    #[test]
    fn prime_counts_and_orientation() {
        let cat = toral_suspension_catalog(&CAT, &RoofFunction::constant(1.0), 6).unwrap();
        let mut per = [0usize; 7];
        for o in &cat.orbits {
            per[o.base_period as usize] += 1;
        }
        assert_eq!(&per[1..], &[1, 2, 5, 10, 24, 50]);
        let fib = toral_suspension_catalog(&FIB, &RoofFunction::constant(1.0), 4).unwrap();
        for o in &fib.orbits {
            assert_eq!(o.orientation.as_i32(), if o.base_period % 2 == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn mixing_roof_lengths() {
        let cat = toral_suspension_catalog(&CAT, &RoofFunction::mixing_default(), 3).unwrap();
        let fixed = cat.orbits.iter().find(|o| o.base_period == 1).unwrap();
        assert!((fixed.length - 1.3).abs() < 1e-15);
        assert!((cat.t_complete - 2.1).abs() < 1e-12);
        for o in &cat.orbits {
            assert!(o.length >= 0.7 * o.base_period as f64 - 1e-12);
        }
    }
}
