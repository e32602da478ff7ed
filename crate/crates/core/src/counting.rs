//! Prime orbit counting: `li`, the Chebyshev-type sums `ψ, ψ₁, π₀, π₁`,
//! `π(T)`, an empirical entropy and a prime-orbit-theorem error fit.
//!
//! `li(x) = ∫₂ˣ dt/ln t`, so `li(2) = 0`. This differs from the principal
//! value integral from 0 by `li_pv(2) ≈ 1.045`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orbits::OrbitCatalog;
use crate::sum::NeumaierSum;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let fx = f(c + h * XGK[i]) + f(c - h * XGK[i]);
        k += WGK[i] * fx;
        if i % 2 == 1 {
            g += WG[i / 2] * fx;
        }
    }
    (k * h, (k - g).abs() * h)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32, acc: &mut NeumaierSum) -> Result<()> {
    let (k, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        if depth == 0 && err > tol {
            return Err(Error::NoConvergence(format!("Gauss-Kronrod did not reach {tol:.1e} on [{a}, {b}]")));
        }
        acc.add(k);
        return Ok(());
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1, acc)?;
    adaptive(f, m, b, 0.5 * tol, depth - 1, acc)
}

/// `∫₂ˣ dt/ln t` by adaptive Gauss–Kronrod in `u = ln t`.
pub fn li(x: f64) -> Result<f64> {
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::Domain(format!("li({x}) needs finite x > 1")));
    }
    if x == 2.0 {
        return Ok(0.0);
    }
    let (a, b) = (std::f64::consts::LN_2, x.ln());
    let (lo, hi, sign) = if b > a { (a, b, 1.0) } else { (b, a, -1.0) };
    let f = |u: f64| u.exp() / u;
    let rough = gk15(&f, lo, hi).0.abs();
    let mut acc = NeumaierSum::new();
    adaptive(&f, lo, hi, 1e-10 * (1.0 + rough) * 0.1, 50, &mut acc)?;
    Ok(sign * acc.value())
}

/// `(nλ_p, λ_p)` for every instance with `nλ_p ≤ cut`, sorted by `nλ_p`.
fn instance_positions(catalog: &OrbitCatalog, cut: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (i, p) in catalog.orbits.iter().enumerate() {
        let mut n = 1u32;
        while n as f64 * p.length <= cut {
            out.push((n as f64 * p.length, p.length, i, n));
            n += 1;
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    out.into_iter().map(|(u, l, _, _)| (u, l)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevTable {
    /// Arguments `x` (the exponential scale, `x = e^{hT}`).
    pub x: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi1: Vec<f64>,
    pub pi0: Vec<u64>,
    pub pi1: Vec<u64>,
    /// False where `ln x / h` exceeds the certified length.
    pub complete: Vec<bool>,
}

/// `ψ(x) = Σ hλ`, `ψ₁(x) = Σ hλ(x − e^{nhλ})`, `π₀(x)` over pairs `(τ, n)` with
/// `e^{nhλ(τ)} ≤ x`, and `π₁(x) = #{τ : e^{hλ(τ)} ≤ x}`.
pub fn chebyshev_functions(catalog: &OrbitCatalog, h: f64, x_grid: &[f64]) -> Result<ChebyshevTable> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("h = {h} must be positive")));
    }
    if x_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Parameter("grid points must be positive and finite".into()));
    }
    let cut = x_grid.iter().map(|x| x.ln() / h * (1.0 + 1e-12)).fold(0.0, f64::max);
    let pairs = instance_positions(catalog, cut);
    let rows: Vec<(f64, f64, u64, u64, bool)> = x_grid
        .par_iter()
        .map(|&x| {
            // absorb rounding in ln(e^{hλ})/h so that x = e^{hλ} counts λ
            let lim = x.ln() / h * (1.0 + 1e-12);
            let k = pairs.partition_point(|p| p.0 <= lim);
            let mut psi = NeumaierSum::new();
            let mut psi1 = NeumaierSum::new();
            for &(u, l) in &pairs[..k] {
                psi.add(h * l);
                psi1.add(h * l * (x - (h * u).exp()));
            }
            let pi1 = catalog.orbits.partition_point(|o| o.length <= lim) as u64;
            (psi.value(), psi1.value(), k as u64, pi1, lim <= catalog.t_complete * (1.0 + 1e-12))
        })
        .collect();
    Ok(ChebyshevTable {
        x: x_grid.to_vec(),
        psi: rows.iter().map(|r| r.0).collect(),
        psi1: rows.iter().map(|r| r.1).collect(),
        pi0: rows.iter().map(|r| r.2).collect(),
        pi1: rows.iter().map(|r| r.3).collect(),
        complete: rows.iter().map(|r| r.4).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeCount {
    pub count: u64,
    /// `T ≤ t_complete`; otherwise the count is a lower bound.
    pub complete: bool,
}

/// Number of prime orbits with `λ ≤ T`.
pub fn prime_counting(catalog: &OrbitCatalog, t: f64) -> PrimeCount {
    PrimeCount { count: catalog.orbits.partition_point(|o| o.length <= t) as u64, complete: t <= catalog.t_complete }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyEstimate {
    pub h: f64,
    pub intercept: f64,
    /// RMS residual of the fit.
    pub residual: f64,
    pub points: usize,
    pub window: (f64, f64),
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

const ENTROPY_POINTS: usize = 400;

/// Growth rate of the length-weighted count `Σ_{nλ_p ≤ T} λ_p`, fitted over the upper
/// half of `[λ_min, T_complete]`.
///
/// The weighted count grows like `e^{hT}/h` with no `1/T` prefactor, so the slope of its
/// log is `h` without the downward bias of the raw instance count.
pub fn entropy_estimate(catalog: &OrbitCatalog) -> Result<EntropyEstimate> {
    let lo = catalog.min_length().ok_or_else(|| Error::Estimation("empty catalog".into()))?;
    let tc = catalog.t_complete.min(catalog.max_length().unwrap_or(0.0));
    let primes = catalog.orbits.partition_point(|o| o.length <= tc);
    if primes < 20 || tc - lo < 3.0 {
        return Err(Error::Estimation(format!(
            "need at least 20 primes over 3 length units below T_complete, have {primes} over {:.3}",
            tc - lo
        )));
    }
    let pairs = instance_positions(catalog, tc);
    let mut cum = Vec::with_capacity(pairs.len());
    let mut acc = NeumaierSum::new();
    for &(_, l) in &pairs {
        acc.add(l);
        cum.push(acc.value());
    }
    let start = 0.5 * (lo + tc);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for k in 0..=ENTROPY_POINTS {
        let g = start + (tc - start) * k as f64 / ENTROPY_POINTS as f64;
        let idx = pairs.partition_point(|p| p.0 <= g);
        if idx == 0 {
            continue;
        }
        let l = pairs[idx - 1].0;
        if l < start || xs.last() == Some(&l) {
            continue;
        }
        xs.push(l);
        ys.push(cum[idx - 1].ln());
    }
    if xs.len() < 2 {
        return Err(Error::Estimation("fewer than two distinct lengths in the fit window".into()));
    }
    let (h, intercept, residual) = least_squares(&xs, &ys);
    Ok(EntropyEstimate { h, intercept, residual, points: xs.len(), window: (start, tc) })
}

/// The common step when every length lies in one arithmetic progression within `1e−9`.
pub fn lattice_step(catalog: &OrbitCatalog) -> Option<f64> {
    let mut ls: Vec<f64> = catalog.orbits.iter().map(|o| o.length).collect();
    ls.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    if ls.len() < 2 {
        return ls.first().copied();
    }
    let d = ls.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if d <= 1e-8 {
        return None;
    }
    let base = ls[0];
    ls.iter()
        .all(|&l| {
            let k = ((l - base) / d).round();
            (l - base - k * d).abs() <= 1e-9
        })
        .then_some(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PgtRow {
    pub t: f64,
    pub pi: u64,
    pub li: f64,
    /// `π(T) − li(e^{hT})`
    pub error: f64,
    pub ratio: f64,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PgtFit {
    pub h: f64,
    pub rows: Vec<PgtRow>,
    /// Slope of `ln max|π − li|` over windows.
    pub slope: Option<f64>,
    /// `h − slope`
    pub delta_hat: Option<f64>,
    /// Mean `|ratio − 1|` over the first and the last window.
    pub ratio_trend: (f64, f64),
}

impl PgtFit {
    pub fn trends_toward_one(&self) -> bool {
        self.ratio_trend.1 <= self.ratio_trend.0
    }
}

/// Table of `π(T) − li(e^{hT})` with the windowed error-exponent fit.
pub fn pgt_error_fit(catalog: &OrbitCatalog, h: f64, t_grid: &[f64], allow_non_mixing: bool) -> Result<PgtFit> {
    if !allow_non_mixing {
        if let Some(step) = lattice_step(catalog) {
            return Err(Error::NonMixing(format!(
                "all lengths lie in one arithmetic progression (step {step}): the suspension is not mixing \
                 and pi(T) does not follow li(e^(hT)); pass the override to tabulate anyway"
            )));
        }
    }
    if !(h > 0.0) || t_grid.is_empty() {
        return Err(Error::Parameter("need h > 0 and a nonempty grid".into()));
    }
    let rows: Vec<PgtRow> = t_grid
        .iter()
        .map(|&t| {
            let pc = prime_counting(catalog, t);
            let l = li((h * t).exp())?;
            Ok(PgtRow {
                t,
                pi: pc.count,
                li: l,
                error: pc.count as f64 - l,
                ratio: pc.count as f64 / l,
                complete: pc.complete,
            })
        })
        .collect::<Result<_>>()?;
    let w = (rows.len() / 4).max(2);
    let windows: Vec<&[PgtRow]> = rows.chunks(w).collect();
    let maxima: Vec<(f64, f64)> = windows
        .iter()
        .filter_map(|win| {
            win.iter()
                .filter(|r| r.error != 0.0)
                .max_by(|a, b| a.error.abs().total_cmp(&b.error.abs()))
                .map(|r| (r.t, r.error.abs().ln()))
        })
        .collect();
    let slope = (maxima.len() >= 2).then(|| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = maxima.iter().copied().unzip();
        least_squares(&xs, &ys).0
    });
    let dev = |win: &[PgtRow]| win.iter().map(|r| (r.ratio - 1.0).abs()).sum::<f64>() / win.len() as f64;
    let ratio_trend = (dev(windows[0]), dev(windows[windows.len() - 1]));
    Ok(PgtFit { h, delta_hat: slope.map(|s| h - s), slope, rows, ratio_trend })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountingReport {
    pub h: f64,
    pub t: Vec<f64>,
    pub pi: Vec<u64>,
    /// `ψ, ψ₁, π₀, π₁` at `x = e^{hT}`.
    pub psi: Vec<f64>,
    pub psi1: Vec<f64>,
    pub pi0: Vec<u64>,
    pub pi1: Vec<u64>,
    pub li: Vec<f64>,
    pub complete: Vec<bool>,
    pub delta_hat: Option<f64>,
}

pub fn counting_report(
    catalog: &OrbitCatalog,
    h: f64,
    t_grid: &[f64],
    allow_non_mixing: bool,
) -> Result<CountingReport> {
    let xs: Vec<f64> = t_grid.iter().map(|t| (h * t).exp()).collect();
    let cheb = chebyshev_functions(catalog, h, &xs)?;
    let li_vals: Vec<f64> = xs.iter().map(|&x| if x > 1.0 { li(x) } else { Ok(f64::NAN) }).collect::<Result<_>>()?;
    let delta_hat = match pgt_error_fit(catalog, h, t_grid, allow_non_mixing) {
        Ok(fit) => fit.delta_hat,
        Err(Error::NonMixing(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(CountingReport {
        h,
        t: t_grid.to_vec(),
        pi: t_grid.iter().map(|&t| prime_counting(catalog, t).count).collect(),
        psi: cheb.psi,
        psi1: cheb.psi1,
        pi0: cheb.pi0,
        pi1: cheb.pi1,
        li: li_vals,
        complete: t_grid.iter().map(|&t| t <= catalog.t_complete).collect(),
        delta_hat,
    })
}
