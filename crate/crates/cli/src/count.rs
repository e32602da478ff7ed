use serde_json::json;
use zetawb_core::io::fmt_f64;
use zetawb_core::{counting_report, lattice_step};

use crate::config::JobConfig;
use crate::{entropy, load_catalog, sink, write_json, CliError};

pub fn run(job: &JobConfig) -> Result<(), CliError> {
    let c = &job.count;
    let catalog = load_catalog(&job.files)?;
    if let (Some(step), false) = (lattice_step(&catalog), c.allow_non_mixing) {
        return Err(CliError::input(format!(
            "all lengths lie in one arithmetic progression (step {step}): the flow is not mixing and pi(T) \
             does not follow li(e^(hT)); pass --allow-non-mixing to tabulate anyway"
        )));
    }
    let (h, h_source) = entropy(c.h, &catalog)?;
    let lo = c.t_from.or(catalog.min_length()).ok_or_else(|| CliError::input("empty catalog"))?;
    let hi = c.t_to.unwrap_or(if catalog.t_complete.is_finite() {
        catalog.t_complete
    } else {
        catalog.max_length().unwrap_or(lo)
    });
    let step = c.t_step.unwrap_or(0.25);
    if !(step > 0.0 && lo.is_finite() && hi >= lo) {
        return Err(CliError::input(format!("bad T grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let r = counting_report(&catalog, h, &grid, c.allow_non_mixing).map_err(CliError::model)?;

    let mut out = csv::Writer::from_writer(sink(job.files.csv.as_deref())?);
    let csv_err = |e: csv::Error| CliError::input(e.to_string());
    out.write_record(["T", "pi", "psi", "psi1", "pi0", "pi1", "li_ehT", "complete"]).map_err(csv_err)?;
    for i in 0..grid.len() {
        out.write_record([
            fmt_f64(r.t[i]),
            r.pi[i].to_string(),
            fmt_f64(r.psi[i]),
            fmt_f64(r.psi1[i]),
            r.pi0[i].to_string(),
            r.pi1[i].to_string(),
            fmt_f64(r.li[i]),
            r.complete[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;

    if let Some(path) = &job.files.json {
        let report = json!({
            "h": r.h,
            "h_source": h_source,
            "T": r.t,
            "pi": r.pi,
            "psi": r.psi,
            "psi1": r.psi1,
            "pi0": r.pi0,
            "pi1": r.pi1,
            "li_ehT": r.li,
            "complete": r.complete,
            "delta_hat": r.delta_hat,
        });
        write_json(path, &report)?;
    }
    Ok(())
}
