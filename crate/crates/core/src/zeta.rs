//! Truncated zeta functions, dynamical determinants, mock determinants and
//! flat traces evaluated on an orbit catalog.
//!
//! Every quantity is a finite sum over orbit instances `(τ_p, m)` with
//! `m·λ_p ≤ T_max`, visited in increasing length with compensated summation.
//! Logs of products are carried as sums and never exponentiated here.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{det_one_minus, exterior_traces, orientation_sign, rational_to_f64, Scalar, SmallMatrix};
use crate::orbits::{OrbitCatalog, OrbitInstance};
use crate::sum::ComplexSum;

/// Distance below which `s` counts as sitting on an instance length.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// `|1 − e^{−(z+k)λ}|` below this is treated as a zero of a Selberg factor.
pub const NEAR_ZERO_TOL: f64 = 1e-14;
/// Largest number of integrand term evaluations the quadrature cross-check will spend.
pub const QUADRATURE_BUDGET: usize = 200_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub t_max: f64,
    /// Series depth for mock determinants.
    pub n_max: usize,
    pub abs_tol: f64,
    /// Permit `t_max` beyond the catalog's certified length.
    pub allow_partial: bool,
}

impl TruncationPolicy {
    pub fn new(t_max: f64) -> Self {
        Self { t_max, n_max: 30, abs_tol: 1e-12, allow_partial: false }
    }

    pub fn partial(t_max: f64) -> Self {
        Self { allow_partial: true, ..Self::new(t_max) }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn validate(&self, catalog: &OrbitCatalog) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Parameter(format!("T_max = {} must be positive and finite", self.t_max)));
        }
        if self.n_max == 0 {
            return Err(Error::Parameter("n_max must be at least 1".into()));
        }
        if !self.allow_partial && self.t_max > catalog.t_complete {
            return Err(Error::Parameter(format!(
                "T_max = {} exceeds the certified length {} (set allow_partial)",
                self.t_max, catalog.t_complete
            )));
        }
        Ok(())
    }
}

fn check_finite(z: Complex64, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{what} = {z} is not finite")))
    }
}

/// `(χ_0, …, χ_{d−1})` for the `m`-th power of `lin`.
fn chi_vector(lin: &SmallMatrix, m: u32, ds: usize) -> Result<Vec<f64>> {
    let mm = lin.pow(m);
    let eps = orientation_sign(&mm, ds)?;
    let traces = exterior_traces(&mm);
    let det = det_one_minus(&mm);
    Ok(match det {
        Scalar::Exact(d) => {
            let denom: BigRational = d.abs() * BigRational::from_integer(eps.as_i32().into());
            traces
                .values
                .iter()
                .map(|t| match t {
                    Scalar::Exact(q) => rational_to_f64(&(q / &denom)),
                    Scalar::Float(x) => x / rational_to_f64(&denom),
                })
                .collect()
        }
        Scalar::Float(d) => {
            let denom = eps.as_f64() * d.abs();
            traces.values.iter().map(|t| t.to_f64() / denom).collect()
        }
    })
}

/// `χ_ℓ = tr ∧^ℓ Mᵐ / (ε |det(I − Mᵐ)|)` for one instance.
pub fn chi_ell(instance: &OrbitInstance<'_>, ell: usize, ds: usize) -> Result<f64> {
    let dim = instance.prime.linearization.dim();
    if ell > dim {
        return Err(Error::Parameter(format!("ell = {ell} exceeds d - 1 = {dim}")));
    }
    chi_vector(&instance.prime.linearization, instance.m, ds)
        .map(|v| v[ell])
        .map_err(|e| e.in_orbit(format!("{} (m={})", instance.prime.label(), instance.m)))
}

#[derive(Clone, Copy, Debug)]
struct Inst {
    length: f64,
    prime: u32,
    m: u32,
    chi: u32,
}

/// Coefficients of the degree-`N` truncation of `exp(−Σ_n S_n(ξ) wⁿ/n!)` in `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct MockPolynomial {
    pub xi: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl MockPolynomial {
    /// `(p(w), p′(w))` by Horner's rule.
    pub fn eval(&self, w: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::zero();
        let mut dp = Complex64::zero();
        for c in self.coeffs.iter().rev() {
            dp = dp * w + p;
            p = p * w + c;
        }
        (p, dp)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Instance expansion of one catalog under one truncation policy.
pub struct ZetaEngine<'a> {
    catalog: &'a OrbitCatalog,
    policy: TruncationPolicy,
    instances: Vec<Inst>,
    chi: Vec<std::result::Result<Vec<f64>, String>>,
    integer_lengths: bool,
}

impl<'a> ZetaEngine<'a> {
    pub fn new(catalog: &'a OrbitCatalog, policy: TruncationPolicy) -> Result<Self> {
        policy.validate(catalog)?;
        let ds = catalog.dims.ds;
        let mut instances = Vec::new();
        let mut chi = Vec::new();
        let mut memo: HashMap<(*const SmallMatrix, u32), u32> = HashMap::new();
        for (i, p) in catalog.orbits.iter().enumerate() {
            let mut m = 1u32;
            while m as f64 * p.length <= policy.t_max {
                let key = (std::sync::Arc::as_ptr(&p.linearization), m);
                let idx = *memo.entry(key).or_insert_with(|| {
                    chi.push(chi_vector(&p.linearization, m, ds).map_err(|e| e.to_string()));
                    (chi.len() - 1) as u32
                });
                instances.push(Inst { length: m as f64 * p.length, prime: i as u32, m, chi: idx });
                m += 1;
            }
        }
        instances.sort_by(|a, b| a.length.total_cmp(&b.length).then(a.prime.cmp(&b.prime)).then(a.m.cmp(&b.m)));
        let integer_lengths = catalog.has_integer_lengths();
        Ok(Self { catalog, policy, instances, chi, integer_lengths })
    }

    pub fn catalog(&self) -> &OrbitCatalog {
        self.catalog
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    /// Instance lengths in summation order.
    pub fn instance_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.instances.iter().map(|i| i.length)
    }

    /// `e^{−zλ}`. For integer-length catalogs `ℑz` is first reduced mod 2π, which makes
    /// every sum exactly periodic.
    fn weight(&self, z: Complex64, lambda: f64) -> Complex64 {
        let im = if self.integer_lengths { z.im.rem_euclid(TAU) } else { z.im };
        let mag = (-z.re * lambda).exp();
        let ang = -im * lambda;
        Complex64::new(mag * ang.cos(), mag * ang.sin())
    }

    fn chi_of(&self, inst: &Inst, ell: usize) -> Result<f64> {
        match &self.chi[inst.chi as usize] {
            Ok(v) => Ok(v[ell]),
            Err(msg) => {
                let p = &self.catalog.orbits[inst.prime as usize];
                Err(Error::NonHyperbolic(msg.clone()).in_orbit(format!("{} (m={})", p.label(), inst.m)))
            }
        }
    }

    fn check_ell(&self, ell: usize) -> Result<()> {
        let top = self.catalog.dims.d - 1;
        if ell > top {
            return Err(Error::Parameter(format!("ell = {ell} exceeds d - 1 = {top}")));
        }
        Ok(())
    }

    fn sum<F>(&self, mut term: F) -> Result<Complex64>
    where
        F: FnMut(&Inst) -> Result<Complex64>,
    {
        let mut acc = ComplexSum::new();
        for inst in &self.instances {
            acc.add(term(inst)?);
        }
        Ok(acc.value())
    }

    /// `log ζ_R(z) = Σ e^{−zλ}/m`.
    pub fn ruelle_log(&self, z: Complex64) -> Result<Complex64> {
        check_finite(z, "z")?;
        self.sum(|i| Ok(self.weight(z, i.length) / i.m as f64))
    }

    pub fn ruelle_log_derivative(&self, z: Complex64) -> Result<Complex64> {
        check_finite(z, "z")?;
        self.sum(|i| Ok(-self.weight(z, i.length) * (i.length / i.m as f64)))
    }

    /// `log 𝔇_ℓ(z) = −Σ χ_ℓ e^{−zλ}/m`.
    pub fn dyn_determinant_log(&self, ell: usize, z: Complex64) -> Result<Complex64> {
        check_finite(z, "z")?;
        self.check_ell(ell)?;
        self.sum(|i| Ok(-self.weight(z, i.length) * (self.chi_of(i, ell)? / i.m as f64)))
    }

    pub fn dyn_determinant_log_derivative(&self, ell: usize, z: Complex64) -> Result<Complex64> {
        check_finite(z, "z")?;
        self.check_ell(ell)?;
        self.sum(|i| Ok(self.weight(z, i.length) * (self.chi_of(i, ell)? * i.length / i.m as f64)))
    }

    /// `Σ_ℓ (−1)^{ℓ+d_s+1} log 𝔇_ℓ(z)`, which reproduces `ruelle_log`.
    pub fn alternating_product_log(&self, z: Complex64) -> Result<Complex64> {
        let ds = self.catalog.dims.ds;
        let mut acc = ComplexSum::new();
        for ell in 0..self.catalog.dims.d {
            let v = self.dyn_determinant_log(ell, z)?;
            acc.add(if (ell + ds + 1) % 2 == 0 { v } else { -v });
        }
        Ok(acc.value())
    }

    /// Per instance `|Σ_ℓ (−1)^{ℓ+d_s} χ_ℓ − 1|`, maximized over the expansion.
    pub fn term_identity_residual(&self) -> Result<f64> {
        let ds = self.catalog.dims.ds;
        let mut worst: f64 = 0.0;
        for inst in &self.instances {
            let mut acc = crate::sum::NeumaierSum::new();
            for ell in 0..self.catalog.dims.d {
                let c = self.chi_of(inst, ell)?;
                acc.add(if (ell + ds) % 2 == 0 { c } else { -c });
            }
            worst = worst.max((acc.value() - 1.0).abs());
        }
        Ok(worst)
    }

    /// `S_n(z) = Σ χ_ℓ λⁿ e^{−zλ}/m` for `n = 1..=n_top`, one accumulator per `n`.
    pub fn orbit_moments(&self, ell: usize, z: Complex64, n_top: usize) -> Result<Vec<Complex64>> {
        check_finite(z, "z")?;
        self.check_ell(ell)?;
        let mut accs = vec![ComplexSum::new(); n_top];
        for inst in &self.instances {
            let base = self.weight(z, inst.length) * (self.chi_of(inst, ell)? / inst.m as f64);
            let mut pw = 1.0;
            for acc in accs.iter_mut() {
                pw *= inst.length;
                acc.add(base * pw);
            }
        }
        Ok(accs.iter().map(ComplexSum::value).collect())
    }

    /// `log 𝔇̃_ℓ(w, ξ) = −Σ_{n ≤ n_max} wⁿ/n! · S_n(ξ)`.
    pub fn mock_determinant_log(&self, ell: usize, w: Complex64, xi: Complex64) -> Result<Complex64> {
        check_finite(w, "xi")?;
        let s = self.orbit_moments(ell, xi, self.policy.n_max)?;
        let mut acc = ComplexSum::new();
        let mut coef = Complex64::new(1.0, 0.0);
        for (k, sn) in s.iter().enumerate() {
            coef = coef * w / (k + 1) as f64;
            acc.add(-coef * sn);
        }
        Ok(acc.value())
    }

    /// `∂/∂w log 𝔇̃_ℓ(w, ξ) = −Σ_{n ≤ n_max} w^{n−1}/(n−1)! · S_n(ξ)`.
    pub fn mock_determinant_log_derivative(&self, ell: usize, w: Complex64, xi: Complex64) -> Result<Complex64> {
        check_finite(w, "xi")?;
        let s = self.orbit_moments(ell, xi, self.policy.n_max)?;
        let mut acc = ComplexSum::new();
        let mut coef = Complex64::new(1.0, 0.0);
        for (k, sn) in s.iter().enumerate() {
            acc.add(-coef * sn);
            coef = coef * w / (k + 1) as f64;
        }
        Ok(acc.value())
    }

    /// Degree-`degree` Taylor polynomial in `w` of `exp(log 𝔇̃_ℓ(w, ξ))`.
    pub fn mock_determinant_poly(&self, ell: usize, xi: Complex64, degree: usize) -> Result<MockPolynomial> {
        let s = self.orbit_moments(ell, xi, degree.max(1))?;
        // g_k = −S_k/k!; j b_j = Σ_{k=1}^{j} k g_k b_{j−k}
        let mut g = vec![Complex64::zero(); degree + 1];
        let mut fact = 1.0;
        for k in 1..=degree {
            fact *= k as f64;
            g[k] = -s[k - 1] / fact;
        }
        let mut b = vec![Complex64::zero(); degree + 1];
        b[0] = Complex64::new(1.0, 0.0);
        for j in 1..=degree {
            let mut acc = ComplexSum::new();
            for k in 1..=j {
                acc.add(g[k] * b[j - k] * k as f64);
            }
            b[j] = acc.value() / j as f64;
        }
        Ok(MockPolynomial { xi, coeffs: b })
    }

    /// `(1/(n−1)!) Σ_{s<λ≤T} χ_ℓ λ (λ−s)^{n−1} e^{−z(λ−s)}/m`; at `s = 0` this is `S_n/(n−1)!`.
    pub fn flat_trace(&self, ell: usize, z: Complex64, n: usize, s: f64) -> Result<Complex64> {
        check_finite(z, "z")?;
        self.check_ell(ell)?;
        if n == 0 {
            return Err(Error::Parameter("flat trace power n must be at least 1".into()));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Parameter(format!("shift s = {s} must be finite and nonnegative")));
        }
        if s >= self.policy.t_max {
            return Ok(Complex64::zero());
        }
        if let Some(hit) = self.instances.iter().find(|i| (i.length - s).abs() < BOUNDARY_TOL) {
            return Err(Error::Boundary(format!("s = {s} is within {BOUNDARY_TOL} of length {}", hit.length)));
        }
        let fact: f64 = (1..n).map(|k| k as f64).product();
        if s == 0.0 {
            return Ok(self.orbit_moments(ell, z, n)?[n - 1] / fact);
        }
        let start = self.instances.partition_point(|i| i.length <= s);
        let mut acc = ComplexSum::new();
        for inst in &self.instances[start..] {
            let u = inst.length - s;
            let c = self.chi_of(inst, ell)? * inst.length * u.powi(n as i32 - 1) / inst.m as f64;
            acc.add(self.weight(z, u) * c);
        }
        Ok(acc.value() / fact)
    }

    /// Residual of `∫₀^T e^{−zs} s^{n−1}/(n−1)! · tr♭(1, s) ds = tr♭(n+1, 0)`, closing each
    /// instance's `s`-integral to `λⁿ/n!`.
    pub fn natural_trace_check(&self, ell: usize, z: Complex64, n: usize) -> Result<f64> {
        let rhs = self.flat_trace(ell, z, n + 1, 0.0)?;
        let nfact: f64 = (1..=n).map(|k| k as f64).product();
        let lhs = self.sum(|i| {
            Ok(self.weight(z, i.length)
                * (self.chi_of(i, ell)? * i.length / i.m as f64)
                * (i.length.powi(n as i32) / nfact))
        })?;
        Ok((lhs - rhs).norm())
    }

    /// As [`natural_trace_check`](Self::natural_trace_check) with the `s`-integral done by
    /// `points`-node Gauss–Legendre panels between consecutive instance lengths.
    pub fn natural_trace_check_quadrature(&self, ell: usize, z: Complex64, n: usize, points: usize) -> Result<f64> {
        let rhs = self.flat_trace(ell, z, n + 1, 0.0)?;
        let mut breaks: Vec<f64> = vec![0.0];
        breaks.extend(self.instances.iter().map(|i| i.length));
        breaks.dedup();
        let cost = breaks.len().saturating_mul(points).saturating_mul(self.instances.len());
        if cost > QUADRATURE_BUDGET {
            return Err(Error::Truncation(format!(
                "quadrature cross-check needs {cost} term evaluations (budget {QUADRATURE_BUDGET})"
            )));
        }
        let rule = GaussLegendre::new(NonZeroUsize::new(points).ok_or_else(|| Error::Parameter("zero nodes".into()))?);
        let fact: f64 = (1..n).map(|k| k as f64).product();
        let mut acc = ComplexSum::new();
        // the outer nodes of a 32-point rule sit 7e-4 of the panel from its ends, so
        // narrow panels fall back to the midpoint rule
        let narrow = 1e4 * BOUNDARY_TOL;
        let midpoint = [(0.0, 2.0)];
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 4.0 * BOUNDARY_TOL {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let nodes = if b - a < narrow { &midpoint[..] } else { rule.as_node_weight_pairs() };
            for &(x, wt) in nodes {
                let s = mid + half * x;
                let f = self.flat_trace(ell, z, 1, s)?;
                acc.add(self.weight(z, s) * f * (s.powi(n as i32 - 1) / fact * wt * half));
            }
        }
        Ok((acc.value() - rhs).norm())
    }

    /// `log ζ_S(z) = Σ_{λ_p ≤ T} Σ_{k ≤ k_max} log(1 − e^{−(z+k)λ_p})` for geodesic-type catalogs.
    pub fn selberg_log(&self, z: Complex64, k_max: usize) -> Result<Complex64> {
        check_finite(z, "z")?;
        if !self.catalog.is_geodesic_type() {
            return Err(Error::Parameter("Selberg zeta needs a geodesic-type catalog (ds = du = 1, eps = +1)".into()));
        }
        let mut acc = ComplexSum::new();
        for inst in self.instances.iter().filter(|i| i.m == 1) {
            for k in 0..=k_max {
                let u = self.weight(z + k as f64, inst.length);
                let one_minus = Complex64::new(1.0 - u.re, -u.im);
                if one_minus.norm() < NEAR_ZERO_TOL {
                    let p = &self.catalog.orbits[inst.prime as usize];
                    return Err(Error::NearZero(format!("factor k={k} of orbit {} vanishes at z={z}", p.label())));
                }
                acc.add(ln_one_minus(u));
            }
        }
        Ok(acc.value())
    }

    /// `Σ |term| / |Σ term|` of the Ruelle sum: the factor by which rounding error is amplified.
    pub fn condition_estimate(&self, z: Complex64) -> Result<f64> {
        let total = self.ruelle_log(z)?;
        let abs: f64 = self.instances.iter().map(|i| self.weight(z, i.length).norm() / i.m as f64).sum();
        Ok(abs / total.norm().max(f64::MIN_POSITIVE))
    }
}

/// `log(1 − u)` without cancellation for small `u`.
fn ln_one_minus(u: Complex64) -> Complex64 {
    let w = -u;
    let re = 0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p();
    let im = w.im.atan2(1.0 + w.re);
    Complex64::new(re, im)
}
