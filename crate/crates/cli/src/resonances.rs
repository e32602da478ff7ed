use serde_json::{json, Value};
use zetawb_core::{
    feasible_moment_order, leading_resonance, newton_refine, winding_count, Complex64, Error, MockEvaluator, Rectangle,
    ZetaEngine,
};

use crate::config::JobConfig;
use crate::{cjson, complex_arg, entropy, load_catalog, policy_for, write_json, CliError, EXIT_NO_CONVERGENCE};

fn parse_rect(s: &str) -> Result<Rectangle, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| CliError::input(format!("rectangle {s:?}: {x:?} is not a number"))))
        .collect::<Result<_, _>>()?;
    let [a, b, c, d] = v[..] else {
        return Err(CliError::input(format!("rectangle {s:?} must be re_min,re_max,im_min,im_max")));
    };
    Rectangle::new(a, b, c, d).map_err(CliError::model)
}

fn convergence_failure(e: &Error) -> bool {
    matches!(e, Error::NoConvergence(_) | Error::Inconclusive(_) | Error::Refinement(_))
}

pub fn run(job: &JobConfig) -> Result<(), CliError> {
    let r = &job.resonances;
    let catalog = load_catalog(&job.files)?;
    let policy = policy_for(&job.policy, &catalog)?;
    let t_max = policy.t_max;
    let engine = ZetaEngine::new(&catalog, policy).map_err(CliError::model)?;
    let (h, h_source) = entropy(r.h, &catalog)?;
    let ell = r.ell.unwrap_or(catalog.dims.ds);
    let tol = r.tol.unwrap_or(0.02);
    let probe = complex_arg(&r.probe, "--probe")?.unwrap_or(Complex64::new(h + 0.5, 0.0));
    let gap = probe.re - h;
    if gap.is_nan() || gap <= 0.0 {
        return Err(CliError::input(format!("probe {probe} must lie right of the entropy {h}")));
    }
    // (n − 1)/(Re z − h) ≤ T
    let top = r.order.unwrap_or((t_max * gap * (1.0 + 1e-12)).floor() as usize + 1).max(2);

    say!("entropy {h:.7} ({h_source}), T_max {t_max}, probe {probe}, degree l = {ell}");
    let mut converged = true;
    let mut other_error = None;
    let mut estimates = Vec::new();
    for n in 2..=top {
        match leading_resonance(&engine, ell, probe, n, h, tol) {
            Ok(e) => {
                let acc = e.accelerated();
                say!(
                    "n {n:>3}  estimate {:.10} {:+.10}i  stability {:.3e}  aitken {}",
                    e.estimate.re,
                    e.estimate.im,
                    e.stability,
                    acc.map_or("-".into(), |a| format!("{:.10} {:+.10}i", a.re, a.im))
                );
                estimates.push(json!({
                    "n": n,
                    "estimate": cjson(e.estimate),
                    "aitken": acc.map(cjson),
                    "stability": e.stability,
                    "error": Value::Null,
                }));
            }
            Err(e) => {
                say!("n {n:>3}  failed: {e}");
                if convergence_failure(&e) {
                    converged = false;
                } else {
                    other_error.get_or_insert_with(|| e.to_string());
                }
                estimates.push(json!({ "n": n, "error": e.to_string() }));
            }
        }
    }

    let xi = complex_arg(&r.xi, "--xi")?.unwrap_or(Complex64::new(h + 1.0, 0.0));
    let degree = r.degree.unwrap_or_else(|| feasible_moment_order(xi.re, h, t_max));
    let samples = r.samples.unwrap_or(64);
    let rects = match &r.rects {
        Some(list) => list.iter().map(|s| parse_rect(s)).collect::<Result<Vec<_>, _>>()?,
        // the leading pole sits at the entropy
        None => vec![Rectangle::centered(Complex64::new(h, 0.0), 0.1, 0.1).map_err(CliError::model)?],
    };
    let poly = engine.mock_determinant_poly(ell, xi, degree).map_err(CliError::model)?;
    let f = MockEvaluator { poly };
    say!("mock determinant about xi = {xi}, degree {degree}");
    let mut windings = Vec::new();
    for rect in &rects {
        let bounds = [rect.re_min, rect.re_max, rect.im_min, rect.im_max];
        let mut entry = json!({ "rect": bounds, "xi": cjson(xi), "degree": degree });
        match winding_count(&f, rect, samples) {
            Ok(count) => {
                entry["count"] = json!(count);
                let mut line = format!("rect {bounds:?}: {count} zero(s)");
                if count >= 1 {
                    let centre = Complex64::new(0.5 * (rect.re_min + rect.re_max), 0.5 * (rect.im_min + rect.im_max));
                    match newton_refine(&f, centre, 1e-12) {
                        Ok(z) => {
                            line += &format!(", refined {:.12} {:+.12}i", z.re, z.im);
                            entry["zero"] = cjson(z);
                        }
                        Err(e) => {
                            line += &format!(", refinement failed: {e}");
                            converged &= !convergence_failure(&e);
                            entry["error"] = json!(e.to_string());
                        }
                    }
                }
                say!("{line}");
            }
            Err(e) => {
                say!("rect {bounds:?}: {e}");
                if convergence_failure(&e) {
                    converged = false;
                } else {
                    other_error.get_or_insert_with(|| e.to_string());
                }
                entry["error"] = json!(e.to_string());
            }
        }
        windings.push(entry);
    }

    if let Some(path) = &job.files.json {
        let report = json!({
            "entropy": h,
            "entropy_source": h_source,
            "t_max": t_max,
            "probe": cjson(probe),
            "ell": ell,
            "tol": tol,
            "estimates": estimates,
            "windings": windings,
            "converged": converged,
        });
        write_json(path, &report)?;
    }
    if !converged {
        return Err(CliError::new(
            EXIT_NO_CONVERGENCE,
            "resonance estimation did not converge; partial report written",
        ));
    }
    if let Some(e) = other_error {
        return Err(CliError::input(e));
    }
    Ok(())
}
