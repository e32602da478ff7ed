//! The identity suite. Every check reports its worst residual against a tolerance.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zetawb_core::{
    catalog_validate, det_one_minus, entropy_estimate, exterior_traces, orientation_sign, Complex64, Error,
    OrbitCatalog, PrimeOrbit, SmallMatrix, SourceKind, TruncationPolicy, ZetaEngine,
};

use crate::config::JobConfig;
use crate::{load_catalog, policy_for, CliError, EXIT_VERIFY};

pub struct Check {
    pub name: &'static str,
    /// `None` when the identity does not apply to this catalog.
    pub passed: Option<bool>,
    pub detail: String,
}

fn check(name: &'static str, residual: f64, tol: f64, detail: String) -> Check {
    Check { name, passed: Some(residual <= tol), detail: format!("residual {residual:.3e} (tol {tol:.1e}); {detail}") }
}

fn skipped(name: &'static str, why: &str) -> Check {
    Check { name, passed: None, detail: why.into() }
}

fn failed(name: &'static str, e: impl std::fmt::Display) -> Check {
    Check { name, passed: Some(false), detail: e.to_string() }
}

/// Distinct `(linearization, m)` pairs among the instances below `t_max`.
fn distinct_powers(catalog: &OrbitCatalog, t_max: f64) -> Vec<(&PrimeOrbit, u32)> {
    let mut seen = HashMap::new();
    for p in &catalog.orbits {
        let mut m = 1u32;
        while m as f64 * p.length <= t_max {
            seen.entry((Arc::as_ptr(&p.linearization), m, p.orientation)).or_insert((p, m));
            m += 1;
        }
    }
    let mut out: Vec<_> = seen.into_values().collect();
    out.sort_by(|a, b| (a.0.length * a.1 as f64).total_cmp(&(b.0.length * b.1 as f64)).then(a.0.word.cmp(&b.0.word)));
    out
}

fn exterior_algebra(catalog: &OrbitCatalog, t_max: f64) -> Check {
    let name = "exterior algebra";
    let mut worst = 0.0f64;
    let mut exact_bad = 0usize;
    let pairs = distinct_powers(catalog, t_max);
    for &(p, m) in &pairs {
        let mat = p.linearization.pow(m);
        let alt = exterior_traces(&mat).alternating_sum();
        let direct = det_one_minus(&mat);
        if mat.is_exact() {
            exact_bad += (alt != direct) as usize;
        } else {
            let d = direct.to_f64();
            worst = worst.max((alt.to_f64() - d).abs() / d.abs().max(1.0));
        }
    }
    if exact_bad > 0 {
        return failed(name, format!("{exact_bad} exact matrices with sum of traces != det(1 - M)"));
    }
    check(name, worst, 1e-10, format!("{} matrix powers", pairs.len()))
}

fn orientation(catalog: &OrbitCatalog, t_max: f64) -> Check {
    let name = "orientation";
    let pairs = distinct_powers(catalog, t_max);
    let mut bad = Vec::new();
    for &(p, m) in &pairs {
        match orientation_sign(&p.linearization.pow(m), catalog.dims.ds) {
            Ok(s) if s == p.orientation.pow(m) => {}
            Ok(s) => {
                bad.push(format!("{}^{m}: eps {} but stored {}", p.label(), s.as_i32(), p.orientation.pow(m).as_i32()))
            }
            Err(e) => bad.push(format!("{}^{m}: {e}", p.label())),
        }
    }
    match bad.first() {
        None => check(name, 0.0, 0.0, format!("{} matrix powers, sign of det(1 - M) restricted to E^s", pairs.len())),
        Some(first) => failed(name, format!("{} mismatches, first {first}", bad.len())),
    }
}

fn rel_diff(a: &SmallMatrix, b: &SmallMatrix) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    a.to_f64_entries().iter().zip(b.to_f64_entries()).map(|(x, y)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max)
}

/// `(worst residual, offending orbit)` of a per-orbit comparison.
fn worst_of<'a>(orbits: impl Iterator<Item = (&'a PrimeOrbit, f64)>) -> (f64, Option<String>) {
    orbits.fold((0.0, None), |(w, who), (p, r)| if r > w || r.is_nan() { (r, Some(p.label())) } else { (w, who) })
}

/// The stored linearizations against what the generator parameters imply.
fn linearization_coherence(catalog: &OrbitCatalog) -> Check {
    let name = "linearization coherence";
    let params = &catalog.source.params;
    let (worst, who, what) = match catalog.source.kind {
        SourceKind::Toral => {
            let a: [[i64; 2]; 2] = match serde_json::from_value(params["A"].clone()) {
                Ok(a) => a,
                Err(_) => return failed(name, "toral catalog without an integer matrix A in its parameters"),
            };
            let inv =
                match SmallMatrix::from_integers(2, &[a[0][0], a[0][1], a[1][0], a[1][1]]).and_then(|m| m.inverse()) {
                    Ok(m) => m,
                    Err(e) => return failed(name, e),
                };
            let mut expected: HashMap<u32, SmallMatrix> = HashMap::new();
            let (w, who) = worst_of(catalog.orbits.iter().map(|p| {
                let e = expected.entry(p.base_period).or_insert_with(|| inv.pow(p.base_period));
                (p, if *p.linearization == *e { 0.0 } else { rel_diff(&p.linearization, e).max(f64::MIN_POSITIVE) })
            }));
            (w, who, "M = A^-n")
        }
        SourceKind::Sft => {
            let Some(expansion) = params["cocycle"]["diagonal"].as_f64() else {
                return skipped(name, "per-transition cocycle");
            };
            let (w, who) = worst_of(catalog.orbits.iter().map(|p| {
                let l = expansion.powi(p.base_period as i32);
                let e = SmallMatrix::diagonal_f64(&[l, 1.0 / l]).expect("2x2 diagonal");
                (p, rel_diff(&p.linearization, &e))
            }));
            (w, who, "M = diag(L^n, L^-n)")
        }
        SourceKind::Fuchsian => {
            let (w, who) = worst_of(catalog.orbits.iter().map(|p| {
                let m = &p.linearization;
                if m.dim() != 2 {
                    return (p, f64::INFINITY);
                }
                let tr = m.entry_f64(0, 0) + m.entry_f64(1, 1);
                let want = 2.0 * p.length.cosh();
                let det = m.determinant().to_f64();
                (p, ((tr - want).abs() / want).max((det - 1.0).abs()))
            }));
            (w, who, "eigenvalues e^(+-lambda)")
        }
        SourceKind::Synthetic => return skipped(name, "synthetic catalog has no generator"),
    };
    let tol = match catalog.source.kind {
        SourceKind::Fuchsian => 1e-9,
        // exact data must match exactly
        SourceKind::Toral if catalog.orbits.iter().all(|p| p.linearization.is_exact()) => 0.0,
        _ => 1e-12,
    };
    let detail = match (&who, worst > tol) {
        (Some(w), true) => format!("{what}; worst orbit {w}"),
        _ => format!("{what} over {} orbits", catalog.len()),
    };
    check(name, worst, tol, detail)
}

fn term_identity(engine: &ZetaEngine<'_>) -> Check {
    match engine.term_identity_residual() {
        Ok(r) => check("product term identity", r, 1e-12, format!("{} instances", engine.instance_count())),
        Err(e) => failed("product term identity", e),
    }
}

fn product_formula(engine: &ZetaEngine<'_>, points: &[Complex64]) -> Check {
    let name = "product formula";
    let d = engine.catalog().dims.d as f64;
    let mut worst = 0.0f64;
    for &z in points {
        let r = (|| -> zetawb_core::Result<f64> {
            let a = engine.ruelle_log(z)?;
            let b = engine.alternating_product_log(z)?;
            let scale = 1.0 + engine.condition_estimate(z)? * a.norm();
            Ok((a - b).norm() / (d * scale))
        })();
        match r {
            Ok(r) => worst = worst.max(r),
            Err(e) => return failed(name, format!("z = {z}: {e}")),
        }
    }
    check(name, worst, 1e-12, format!("{} points", points.len()))
}

fn mock_quotient(engine: &ZetaEngine<'_>, points: &[Complex64], rng: &mut ChaCha8Rng) -> Check {
    let name = "mock quotient";
    let ell = engine.catalog().dims.ds;
    let radius = (3.0 / engine.policy().t_max).min(0.2);
    let mut worst = 0.0f64;
    for &xi in points {
        let w = Complex64::from_polar(radius, rng.gen_range(0.0..TAU));
        let r = (|| -> zetawb_core::Result<f64> {
            let mock = engine.mock_determinant_log(ell, w, xi)?;
            let (a, b) = (engine.dyn_determinant_log(ell, xi - w)?, engine.dyn_determinant_log(ell, xi)?);
            Ok((mock - (a - b)).norm() / (1.0 + a.norm() + b.norm()))
        })();
        match r {
            Ok(r) => worst = worst.max(r),
            Err(e) => return failed(name, format!("xi = {xi}: {e}")),
        }
    }
    check(name, worst, 1e-10, format!("|w| = {radius:.3}, series depth {}", engine.policy().n_max))
}

fn natural_trace(engine: &ZetaEngine<'_>, z: Complex64) -> Check {
    let name = "natural trace";
    let ell = engine.catalog().dims.ds;
    let n = 3;
    let r = (|| -> zetawb_core::Result<(f64, f64, Option<f64>)> {
        let scale = engine.flat_trace(ell, z, n + 1, 0.0)?.norm().max(f64::MIN_POSITIVE);
        let analytic = engine.natural_trace_check(ell, z, n)?;
        let quad = match engine.natural_trace_check_quadrature(ell, z, n, 32) {
            Ok(q) => Some(q),
            Err(Error::Truncation(_)) => None,
            Err(e) => return Err(e),
        };
        Ok((scale, analytic, quad))
    })();
    match r {
        Ok((scale, analytic, quad)) => {
            let (a, q) = (analytic / scale, quad.map(|q| q / scale));
            let shown = q.map_or("skipped (budget)".into(), |q| format!("{q:.3e}"));
            Check {
                name,
                passed: Some(a <= 1e-12 && q.is_none_or(|q| q <= 1e-8)),
                detail: format!(
                    "z = {z}, n = {n}; relative residual {a:.3e} (tol 1e-12), quadrature {shown} (tol 1e-8)"
                ),
            }
        }
        Err(e) => failed(name, e),
    }
}

fn periodicity(engine: &ZetaEngine<'_>, points: &[Complex64]) -> Check {
    let name = "2pi periodicity";
    if !engine.catalog().has_integer_lengths() {
        return skipped(name, "lengths are not integers");
    }
    let ell = engine.catalog().dims.ds;
    let mut compared = 0;
    for &z in points {
        let w = Complex64::new(z.re, z.im + TAU);
        let pairs = [
            (engine.ruelle_log(z), engine.ruelle_log(w)),
            (engine.dyn_determinant_log(ell, z), engine.dyn_determinant_log(ell, w)),
            (engine.flat_trace(ell, z, 2, 0.0), engine.flat_trace(ell, w, 2, 0.0)),
        ];
        for (a, b) in pairs {
            match (a, b) {
                (Ok(a), Ok(b)) if a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits() => compared += 1,
                (Ok(a), Ok(b)) => return failed(name, format!("z = {z}: {a} != {b}")),
                (Err(e), _) | (_, Err(e)) => return failed(name, format!("z = {z}: {e}")),
            }
        }
    }
    check(name, 0.0, 0.0, format!("{compared} evaluations bitwise equal"))
}

fn ruelle_selberg(catalog: &OrbitCatalog) -> Check {
    let name = "Ruelle-Selberg relation";
    if !catalog.is_geodesic_type() {
        return skipped(name, "not a geodesic-type catalog");
    }
    // every instance of every listed prime, so the two products see the same factors
    let t_max = catalog.max_length().unwrap_or(0.0).max(14.0);
    let z = Complex64::new(2.5, 0.0);
    let r = (|| -> zetawb_core::Result<f64> {
        let e = ZetaEngine::new(catalog, TruncationPolicy::partial(t_max))?;
        Ok((e.ruelle_log(z)? + e.selberg_log(z, 40)? - e.selberg_log(z + 1.0, 40)?).norm())
    })();
    match r {
        Ok(r) => check(name, r, 1e-8, format!("z = {z}, k <= 40, {} primes", catalog.len())),
        Err(e) => failed(name, e),
    }
}

pub fn suite(catalog: &OrbitCatalog, policy: TruncationPolicy, seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let report = catalog_validate(catalog);
    checks.push(match report.failures.first() {
        None => check("catalog invariants", 0.0, 0.0, format!("{} orbits", catalog.len())),
        Some(f) => failed(
            "catalog invariants",
            format!("{} violations, first {}: {}", report.failures.len(), f.orbit, f.reason),
        ),
    });
    checks.push(exterior_algebra(catalog, policy.t_max));
    checks.push(orientation(catalog, policy.t_max));
    checks.push(linearization_coherence(catalog));
    let t_max = policy.t_max;
    let engine = match ZetaEngine::new(catalog, policy) {
        Ok(e) => e,
        Err(e) => {
            checks.push(failed("engine", e));
            return checks;
        }
    };
    checks.push(term_identity(&engine));

    // any point works for finite sums; right of the entropy keeps the mock series short
    let h = entropy_estimate(catalog).map_or_else(|_| (catalog.len() as f64 + 1.0).ln() / t_max, |e| e.h);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Complex64> =
        (0..3).map(|_| Complex64::new(h + 0.5 + rng.gen_range(0.0..1.0), rng.gen_range(-2.0..2.0))).collect();
    checks.push(product_formula(&engine, &points));
    checks.push(mock_quotient(&engine, &points, &mut rng));
    checks.push(natural_trace(&engine, Complex64::new(h + 0.5, 0.0)));
    checks.push(periodicity(&engine, &points));
    checks.push(ruelle_selberg(catalog));
    checks
}

pub fn run(job: &JobConfig) -> Result<(), CliError> {
    let catalog = load_catalog(&job.files)?;
    let policy = policy_for(&job.policy, &catalog)?;
    say!("catalog: {} orbits, T_max {}", catalog.len(), policy.t_max);
    let checks = suite(&catalog, policy, job.seed.unwrap_or(0));
    let mut failures = Vec::new();
    for c in &checks {
        let tag = match c.passed {
            Some(true) => "PASS",
            Some(false) => {
                failures.push(c.name);
                "FAIL"
            }
            None => "SKIP",
        };
        say!("{tag} {}: {}", c.name, c.detail);
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(EXIT_VERIFY, format!("verification failed: {}", failures.join(", "))))
    }
}
