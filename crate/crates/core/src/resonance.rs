//! Pole and zero estimation for truncated zeta objects: ratio estimates from
//! flat traces, argument-principle counts on rectangles, Newton refinement.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::zeta::{MockPolynomial, ZetaEngine};

/// `n ↦ tr♭(R(z)ⁿ)` at a fixed probe point.
pub trait TraceSequence {
    fn probe(&self) -> Complex64;
    fn trace(&self, n: usize) -> Result<Complex64>;
}

/// Flat traces of one catalog at `z`.
pub struct FlatTraces<'e, 'a> {
    pub engine: &'e ZetaEngine<'a>,
    pub ell: usize,
    pub z: Complex64,
}

impl TraceSequence for FlatTraces<'_, '_> {
    fn probe(&self) -> Complex64 {
        self.z
    }

    fn trace(&self, n: usize) -> Result<Complex64> {
        self.engine.flat_trace(self.ell, self.z, n, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceEstimate {
    /// `z − tr(n)/tr(n+1)` at the requested `n`.
    pub estimate: Complex64,
    /// Raw estimates for `1..=n`.
    pub raw: Vec<Complex64>,
    /// Aitken Δ² transform of `raw`, aligned with its last entries.
    pub aitken: Vec<Complex64>,
    /// `|raw[n] − raw[n−1]|`
    pub stability: f64,
}

impl ResonanceEstimate {
    pub fn accelerated(&self) -> Option<Complex64> {
        self.aitken.last().copied()
    }
}

fn aitken(seq: &[Complex64]) -> Vec<Complex64> {
    seq.windows(3)
        .map(|w| {
            let d2 = w[2] - 2.0 * w[1] + w[0];
            if d2.norm() < 1e-300 {
                w[2]
            } else {
                w[2] - (w[2] - w[1]) * (w[2] - w[1]) / d2
            }
        })
        .collect()
}

/// Ratio estimate of the pole nearest `probe`, using traces up to `n + 1`.
///
/// `h_hat` is the entropy estimate used by the feasibility guard
/// `(n−1)/(ℜz − ĥ) ≤ t_max`. Fails with `NoConvergence` if the last two raw estimates
/// differ by more than `10·tol`.
pub fn leading_resonance_from(
    seq: &dyn TraceSequence,
    n: usize,
    h_hat: f64,
    t_max: f64,
    tol: f64,
) -> Result<ResonanceEstimate> {
    let z = seq.probe();
    if n < 2 {
        return Err(Error::Parameter("ratio estimate needs n >= 2".into()));
    }
    let gap = z.re - h_hat;
    if !(gap > 0.0) {
        return Err(Error::Parameter(format!("Re z = {} must exceed the entropy estimate {h_hat}", z.re)));
    }
    if (n - 1) as f64 / gap > t_max * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "summand peak (n-1)/(Re z - h) = {:.4} lies beyond T_max = {t_max}",
            (n - 1) as f64 / gap
        )));
    }
    let traces: Vec<Complex64> = (1..=n + 1).map(|k| seq.trace(k)).collect::<Result<_>>()?;
    let raw: Vec<Complex64> = traces.windows(2).map(|w| z - w[0] / w[1]).collect();
    if raw.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NoConvergence("flat trace ratio is not finite".into()));
    }
    let stability = (raw[n - 1] - raw[n - 2]).norm();
    if stability > 10.0 * tol {
        return Err(Error::NoConvergence(format!(
            "estimates {} and {} differ by {stability:.3e} > 10 x {tol:.1e}",
            raw[n - 2],
            raw[n - 1]
        )));
    }
    Ok(ResonanceEstimate { estimate: raw[n - 1], aitken: aitken(&raw), raw, stability })
}

/// [`leading_resonance_from`] on the flat traces of `engine`.
pub fn leading_resonance(
    engine: &ZetaEngine<'_>,
    ell: usize,
    z_probe: Complex64,
    n: usize,
    h_hat: f64,
    tol: f64,
) -> Result<ResonanceEstimate> {
    let seq = FlatTraces { engine, ell, z: z_probe };
    leading_resonance_from(&seq, n, h_hat, engine.policy().t_max, tol)
}

/// Largest series order whose summand peak plus three widths fits below `t_max`.
pub fn feasible_moment_order(re_xi: f64, h_hat: f64, t_max: f64) -> usize {
    let gap = re_xi - h_hat;
    if !(gap > 0.0) {
        return 1;
    }
    let mut n = 1;
    while {
        let k = n as f64;
        (k + 3.0 * k.sqrt()) / gap <= t_max
    } {
        n += 1;
    }
    n
}

/// A function holomorphic near the contour, with its derivative.
pub trait AnalyticFunction: Sync {
    fn value_and_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)>;

    fn log_derivative(&self, z: Complex64) -> Result<Complex64> {
        let (f, df) = self.value_and_derivative(z)?;
        Ok(df / f)
    }
}

/// `z ↦ 𝔇_ℓ(z)` from its log and analytic log-derivative.
pub struct DeterminantEvaluator<'e, 'a> {
    pub engine: &'e ZetaEngine<'a>,
    pub ell: usize,
}

impl AnalyticFunction for DeterminantEvaluator<'_, '_> {
    fn value_and_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let f = self.engine.dyn_determinant_log(self.ell, z)?.exp();
        Ok((f, f * self.engine.dyn_determinant_log_derivative(self.ell, z)?))
    }

    fn log_derivative(&self, z: Complex64) -> Result<Complex64> {
        self.engine.dyn_determinant_log_derivative(self.ell, z)
    }
}

/// `z ↦ 𝔇̃_ℓ(ξ − z, ξ)` as a truncated Taylor polynomial in `ξ − z`.
pub struct MockEvaluator {
    pub poly: MockPolynomial,
}

impl AnalyticFunction for MockEvaluator {
    fn value_and_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let (p, dp) = self.poly.eval(self.poly.xi - z);
        Ok((p, -dp))
    }
}

/// Wraps a closure returning `(f, f′)`.
pub struct FnEvaluator<F>(pub F);

impl<F> AnalyticFunction for FnEvaluator<F>
where
    F: Fn(Complex64) -> (Complex64, Complex64) + Sync,
{
    fn value_and_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        Ok((self.0)(z))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = Self { re_min, re_max, im_min, im_max };
        if !(re_min < re_max && im_min < im_max) || [re_min, re_max, im_min, im_max].iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("degenerate rectangle {r:?}")));
        }
        Ok(r)
    }

    pub fn centered(c: Complex64, half_re: f64, half_im: f64) -> Result<Self> {
        Self::new(c.re - half_re, c.re + half_re, c.im - half_im, c.im + half_im)
    }

    fn grown(&self, by: f64) -> Self {
        Self { re_min: self.re_min - by, re_max: self.re_max + by, im_min: self.im_min - by, im_max: self.im_max + by }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Splits into `nx × ny` congruent pieces.
    pub fn subdivide(&self, nx: usize, ny: usize) -> Vec<Rectangle> {
        let dx = (self.re_max - self.re_min) / nx as f64;
        let dy = (self.im_max - self.im_min) / ny as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                let re_min = self.re_min + i as f64 * dx;
                let im_min = self.im_min + j as f64 * dy;
                let re_max = if i + 1 == nx { self.re_max } else { re_min + dx };
                let im_max = if j + 1 == ny { self.im_max } else { im_min + dy };
                out.push(Rectangle { re_min, re_max, im_min, im_max });
            }
        }
        out
    }
}

/// `|f′/f|` above this at a boundary sample indicates a zero too close to the contour.
const NEAR_ZERO_LOGDER: f64 = 1e6;
const MAX_REFINEMENTS: usize = 8;
const MAX_NUDGES: usize = 3;

/// `(1/2πi) ∮ f′/f` by composite trapezoid with `per_side` panels per edge.
fn contour_integral(f: &dyn AnalyticFunction, rect: &Rectangle, per_side: usize) -> Result<Option<Complex64>> {
    let c = rect.corners();
    let points: Vec<(Complex64, Complex64)> = (0..4)
        .flat_map(|s| {
            let (a, b) = (c[s], c[(s + 1) % 4]);
            (0..per_side).map(move |k| (a + (b - a) * (k as f64 / per_side as f64), (b - a) / per_side as f64))
        })
        .collect();
    let values: Vec<Result<Complex64>> = points.par_iter().map(|(z, _)| f.log_derivative(*z)).collect();
    let mut acc = crate::sum::ComplexSum::new();
    for (i, g) in values.into_iter().enumerate() {
        let g = g?;
        if !(g.re.is_finite() && g.im.is_finite()) || g.norm() > NEAR_ZERO_LOGDER {
            return Ok(None);
        }
        // corners carry half a step from each adjacent side
        let side = i / per_side;
        let k = i % per_side;
        let (a, b) = (c[side], c[(side + 1) % 4]);
        let h = (b - a) / per_side as f64;
        if k == 0 {
            let prev = c[(side + 3) % 4];
            let hp = (a - prev) / per_side as f64;
            acc.add(g * (h + hp) * 0.5);
        } else {
            acc.add(g * h);
        }
    }
    Ok(Some(acc.value() / Complex64::new(0.0, std::f64::consts::TAU)))
}

/// Number of zeros of `f` inside `rect` (the truncated functions are entire, so no poles).
pub fn winding_count(f: &dyn AnalyticFunction, rect: &Rectangle, samples_per_side: usize) -> Result<i64> {
    if samples_per_side < 64 {
        return Err(Error::Parameter("winding count needs at least 64 samples per side".into()));
    }
    let scale = (rect.re_max - rect.re_min).min(rect.im_max - rect.im_min);
    let mut r = *rect;
    for _ in 0..=MAX_NUDGES {
        let mut n = samples_per_side;
        let mut prev: Option<Complex64> = None;
        let mut hit_zero = false;
        for _ in 0..=MAX_REFINEMENTS {
            let Some(v) = contour_integral(f, &r, n)? else {
                hit_zero = true;
                break;
            };
            if let Some(p) = prev {
                let k = v.re.round();
                if (v.re - k).abs() < 0.25 && v.im.abs() < 0.25 && (v - p).norm() < 0.25 && (p.re.round() == k) {
                    return Ok(k as i64);
                }
            }
            prev = Some(v);
            n *= 2;
        }
        if !hit_zero {
            return Err(Error::Inconclusive(format!(
                "contour integral did not settle to an integer (last {:?})",
                prev
            )));
        }
        r = r.grown(1e-3 * scale);
    }
    Err(Error::Inconclusive("zero on the contour after re-sampling".into()))
}

/// Newton iteration to `|f| ≤ tol` or `|step| ≤ tol·(1+|z|)`, at most 60 steps.
pub fn newton_refine(f: &dyn AnalyticFunction, z0: Complex64, tol: f64) -> Result<Complex64> {
    let (_, d0) = f.value_and_derivative(z0)?;
    if d0.norm() <= 1e-12 {
        return Err(Error::Refinement(format!("|f'(z0)| = {:.3e} too small", d0.norm())));
    }
    let mut z = z0;
    let mut last_step = f64::INFINITY;
    let mut growth = 0;
    for _ in 0..60 {
        let (v, d) = f.value_and_derivative(z)?;
        if v.norm() <= tol {
            return Ok(z);
        }
        if d.norm() == 0.0 {
            return Err(Error::Refinement(format!("derivative vanished at {z}")));
        }
        let step = v / d;
        z -= step;
        let s = step.norm();
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Refinement("iterate left the finite plane".into()));
        }
        if s <= tol * (1.0 + z.norm()) {
            return Ok(z);
        }
        growth = if s > last_step { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(Error::Refinement(format!("Newton steps grew three times in a row near {z}")));
        }
        last_step = s;
    }
    Err(Error::Refinement(format!("no convergence in 60 Newton steps from {z0}")))
}
