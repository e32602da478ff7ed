use rayon::prelude::*;
use zetawb_core::io::fmt_f64;
use zetawb_core::{Complex64, Result as CoreResult, ZetaEngine};

use crate::config::{GridConfig, JobConfig};
use crate::{complex_arg, load_catalog, policy_for, sink, CliError, EXIT_PARTIAL};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    Ruelle,
    Det(usize),
    Mock(usize),
    /// `(n, ℓ)`, with ℓ defaulting to the stable dimension
    Flat(usize, Option<usize>),
    Selberg,
}

pub fn parse_quantity(s: &str) -> Result<Quantity, CliError> {
    let bad = || CliError::input(format!("unknown quantity {s:?}"));
    let index = |rest: &str| rest.parse::<usize>().map_err(|_| bad());
    if s == "ruelle_log" {
        Ok(Quantity::Ruelle)
    } else if s == "selberg_log" {
        Ok(Quantity::Selberg)
    } else if let Some(rest) = s.strip_prefix("det_log_") {
        Ok(Quantity::Det(index(rest)?))
    } else if let Some(rest) = s.strip_prefix("mock_log_") {
        Ok(Quantity::Mock(index(rest)?))
    } else if let Some(rest) = s.strip_prefix("flat_trace_") {
        match rest.split_once('_') {
            Some((n, l)) => Ok(Quantity::Flat(index(n)?, Some(index(l)?))),
            None => Ok(Quantity::Flat(index(rest)?, None)),
        }
    } else {
        Err(bad())
    }
}

fn axis(min: Option<f64>, max: Option<f64>, steps: Option<usize>, name: &str) -> Result<Vec<f64>, CliError> {
    let (lo, steps) = match (min, steps) {
        (Some(lo), s) => (lo, s.unwrap_or(1)),
        (None, None) if name == "im" => (0.0, 1),
        _ => return Err(CliError::input(format!("grid needs --{name}-min"))),
    };
    let hi = max.unwrap_or(lo);
    if steps == 0 || !(lo.is_finite() && hi.is_finite()) || (steps == 1 && hi != lo) || hi < lo {
        return Err(CliError::input(format!("bad {name} axis: [{lo}, {hi}] in {steps} steps")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps).map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 }).collect())
}

/// Grid points, re fastest.
pub fn grid_points(g: &GridConfig) -> Result<Vec<Complex64>, CliError> {
    let re = axis(g.re_min, g.re_max, g.re_steps, "re")?;
    let im = axis(g.im_min, g.im_max, g.im_steps, "im")?;
    Ok(im.iter().flat_map(|&y| re.iter().map(move |&x| Complex64::new(x, y))).collect())
}

pub fn evaluate(
    engine: &ZetaEngine<'_>,
    q: Quantity,
    z: Complex64,
    xi: Option<Complex64>,
    k_max: usize,
) -> CoreResult<Complex64> {
    match q {
        Quantity::Ruelle => engine.ruelle_log(z),
        Quantity::Det(l) => engine.dyn_determinant_log(l, z),
        Quantity::Mock(l) => {
            let xi = xi.expect("checked before evaluation");
            engine.mock_determinant_log(l, xi - z, xi)
        }
        Quantity::Flat(n, l) => engine.flat_trace(l.unwrap_or(engine.catalog().dims.ds), z, n, 0.0),
        Quantity::Selberg => engine.selberg_log(z, k_max),
    }
}

pub fn run(job: &JobConfig) -> Result<(), CliError> {
    let g = &job.grid;
    let names: Vec<String> = match &g.quantities {
        Some(q) => q.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => vec!["ruelle_log".into()],
    };
    let quantities = names.iter().map(|s| parse_quantity(s)).collect::<Result<Vec<_>, _>>()?;
    let mut out = csv::Writer::from_writer(sink(job.files.csv.as_deref())?);
    let csv_err = |e: csv::Error| CliError::input(e.to_string());
    out.write_record(["z_re", "z_im", "quantity", "value_re", "value_im"]).map_err(csv_err)?;
    if quantities.is_empty() {
        out.flush()?;
        return Ok(());
    }
    let xi = complex_arg(&g.xi, "--xi")?;
    if xi.is_none() && quantities.iter().any(|q| matches!(q, Quantity::Mock(_))) {
        return Err(CliError::input("mock_log quantities need --xi"));
    }
    let k_max = g.k_max.unwrap_or(40);
    let points = grid_points(g)?;
    let catalog = load_catalog(&job.files)?;
    let engine = ZetaEngine::new(&catalog, policy_for(&job.policy, &catalog)?).map_err(CliError::model)?;

    let values: Vec<Vec<CoreResult<Complex64>>> =
        points.par_iter().map(|&z| quantities.iter().map(|&q| evaluate(&engine, q, z, xi, k_max)).collect()).collect();

    let mut failed = 0usize;
    for (z, row) in points.iter().zip(values) {
        for (name, v) in names.iter().zip(row) {
            let (re, im) = match v {
                Ok(v) => (fmt_f64(v.re), fmt_f64(v.im)),
                Err(e) => {
                    eprintln!("z = {z}, {name}: {e}");
                    failed += 1;
                    ("nan".into(), "nan".into())
                }
            };
            out.write_record([fmt_f64(z.re), fmt_f64(z.im), name.clone(), re, im]).map_err(csv_err)?;
        }
    }
    out.flush()?;
    if failed > 0 {
        return Err(CliError::new(
            EXIT_PARTIAL,
            format!("{failed} of {} evaluations failed", points.len() * names.len()),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities() {
        assert_eq!(parse_quantity("ruelle_log").unwrap(), Quantity::Ruelle);
        assert_eq!(parse_quantity("det_log_0").unwrap(), Quantity::Det(0));
        assert_eq!(parse_quantity("mock_log_1").unwrap(), Quantity::Mock(1));
        assert_eq!(parse_quantity("flat_trace_8").unwrap(), Quantity::Flat(8, None));
        assert_eq!(parse_quantity("flat_trace_8_0").unwrap(), Quantity::Flat(8, Some(0)));
        assert!(parse_quantity("det_log_").is_err());
        assert!(parse_quantity("zeta").is_err());
    }

    #[test]
    fn axes() {
        let g = GridConfig { re_min: Some(1.0), re_max: Some(2.0), re_steps: Some(3), ..Default::default() };
        let p = grid_points(&g).unwrap();
        assert_eq!(p, vec![Complex64::new(1.0, 0.0), Complex64::new(1.5, 0.0), Complex64::new(2.0, 0.0)]);
        let g = GridConfig { im_min: Some(-1.0), im_max: Some(1.0), im_steps: Some(2), ..g };
        let p = grid_points(&g).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], Complex64::new(1.5, -1.0));
        assert_eq!(p[3], Complex64::new(1.0, 1.0));
        assert!(grid_points(&GridConfig::default()).is_err());
        assert!(grid_points(&GridConfig { re_min: Some(1.0), re_max: Some(2.0), ..Default::default() }).is_err());
    }
}
