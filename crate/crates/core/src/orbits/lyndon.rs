//! Lyndon words over a finite alphabet whose cyclic closure respects an
//! adjacency relation.
//!
//! The generator walks the prenecklace tree of Fredricksen–Kessler–Maiorana.
//! A prefix with an inadmissible transition has no admissible extension, so
//! the whole branch is skipped. A prefix `a₁…a_t` with period `p = t` is a
//! Lyndon word; it is kept when the wrap-around `a_t → a₁` is admissible.

/// Calls `visit` once per admissible Lyndon word of length `1..=n_max`, in lexicographic order.
pub fn for_each_lyndon<F, A>(k: usize, n_max: usize, admissible: A, mut visit: F)
where
    F: FnMut(&[u8]),
    A: Fn(u8, u8) -> bool,
{
    assert!(k <= 256, "alphabet larger than a byte");
    if k == 0 || n_max == 0 {
        return;
    }
    let mut word = vec![0u8; n_max];
    fn rec<F: FnMut(&[u8]), A: Fn(u8, u8) -> bool>(
        word: &mut [u8],
        t: usize,
        p: usize,
        k: usize,
        admissible: &A,
        visit: &mut F,
    ) {
        // word[..t] is an admissible prenecklace with period p
        if p == t && admissible(word[t - 1], word[0]) {
            visit(&word[..t]);
        }
        if t == word.len() {
            return;
        }
        let prev = word[t - 1];
        let start = word[t - p];
        for c in start as usize..k {
            let c = c as u8;
            if !admissible(prev, c) {
                continue;
            }
            word[t] = c;
            let np = if c == start { p } else { t + 1 };
            rec(word, t + 1, np, k, admissible, visit);
        }
    }
    for first in 0..k {
        word[0] = first as u8;
        rec(&mut word, 1, 1, k, &admissible, &mut visit);
    }
}

/// Primitive, lexicographically minimal rotation test.
pub fn is_lyndon(w: &[u8]) -> bool {
    let n = w.len();
    n > 0 && (1..n).all(|r| w.iter().cmp(w[r..].iter().chain(&w[..r])) == std::cmp::Ordering::Less)
}

/// Least rotation of `w` (Booth's algorithm would be O(n); words here are short).
pub fn min_rotation(w: &[u8]) -> Vec<u8> {
    let n = w.len();
    (0..n.max(1)).map(|r| w[r..].iter().chain(&w[..r]).copied().collect::<Vec<u8>>()).min().unwrap_or_default()
}

/// Smallest `p` with `w` a power of `w[..p]`.
pub fn primitive_period(w: &[u8]) -> usize {
    let n = w.len();
    (1..=n).find(|&p| n % p == 0 && (p..n).all(|i| w[i] == w[i - p])).unwrap_or(0)
}
